#pragma once

#include <cstddef>
#include <vector>

#include "tabbin/matrix.hpp"
#include "tabbin/rng.hpp"

namespace tabbin {

struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden_dims;
  int output_dim = 0;
};

// Weights are stored (in, out) so a batch forward is one row-major matmul.
struct DenseLayer {
  Matrix w;
  std::vector<double> b;
  Matrix gw;
  std::vector<double> gb;
};

// Contiguous parameter/grad spans handed to the optimizer.
struct ParamSpan {
  double* value = nullptr;
  double* grad = nullptr;
  std::size_t size = 0;
};

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre;   // z_l = a_{l-1} w_l + b_l
  std::vector<Matrix> post;  // a_l; post.back() is the network output
};

DenseLayer make_dense_layer(int fan_in, int fan_out, Rng& rng);
void append_layer_params(DenseLayer& layer, std::vector<ParamSpan>& out);

// Feed-forward net: ReLU on hidden layers, identity on the output layer.
class MlpNetwork {
 public:
  MlpNetwork() = default;
  MlpNetwork(const MlpSpec& spec, Rng& rng);

  const MlpSpec& spec() const { return spec_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  Matrix forward(const Matrix& x, ForwardCache* cache = nullptr) const;
  // Accumulates into gw/gb and returns the gradient w.r.t. the input.
  Matrix backward(const ForwardCache& cache, const Matrix& grad_out);
  void zero_grads();
  void append_params(std::vector<ParamSpan>& out);
  std::size_t param_count() const;

 private:
  MlpSpec spec_;
  std::vector<DenseLayer> layers_;
};

// One affine map (embed_dim -> bins) shared across all features: the decoder
// trunk emits n_features embeddings per sample and each is projected to bin
// logits by the same weights.
class PerFeatureHead {
 public:
  PerFeatureHead() = default;
  PerFeatureHead(int n_features, int embed_dim, int bins, Rng& rng);

  int n_features() const { return n_features_; }
  int embed_dim() const { return embed_dim_; }
  int bins() const { return bins_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  // (N, n_features*embed_dim) -> (N, n_features*bins)
  Matrix forward(const Matrix& x, ForwardCache* cache = nullptr) const;
  Matrix backward(const ForwardCache& cache, const Matrix& grad_out);
  void zero_grads();
  void append_params(std::vector<ParamSpan>& out);

 private:
  int n_features_ = 0;
  int embed_dim_ = 0;
  int bins_ = 0;
  std::vector<DenseLayer> layers_;  // exactly one
};

// Same buffer, different shape (row-major data copied through).
Matrix reshape(const Matrix& m, int rows, int cols);

}  // namespace tabbin
