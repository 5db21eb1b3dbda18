#include "tabbin/mlp.hpp"

#include <cmath>

#include "tabbin/errors.hpp"

namespace tabbin {

DenseLayer make_dense_layer(int fan_in, int fan_out, Rng& rng) {
  if (fan_in <= 0 || fan_out <= 0)
    throw ValidationError("layer dimensions must be positive");
  DenseLayer layer;
  layer.w = Matrix(fan_in, fan_out);
  layer.b.assign(static_cast<std::size_t>(fan_out), 0.0);
  const double bound = std::sqrt(1.0 / fan_in);
  for (int i = 0; i < fan_in; ++i)
    for (int j = 0; j < fan_out; ++j) layer.w(i, j) = rng.uniform(-bound, bound);
  layer.gw = Matrix(fan_in, fan_out);
  layer.gb.assign(static_cast<std::size_t>(fan_out), 0.0);
  return layer;
}

void append_layer_params(DenseLayer& layer, std::vector<ParamSpan>& out) {
  out.push_back({layer.w.data(), layer.gw.data(),
                 static_cast<std::size_t>(layer.w.rows()) * layer.w.cols()});
  out.push_back({layer.b.data(), layer.gb.data(), layer.b.size()});
}

namespace {

Matrix affine_forward(const Matrix& x, const DenseLayer& layer) {
  Matrix z = matmul(x, layer.w);
  for (int i = 0; i < z.rows(); ++i)
    for (int j = 0; j < z.cols(); ++j) z(i, j) += layer.b[j];
  return z;
}

void affine_backward(const Matrix& input, const Matrix& grad_z, DenseLayer& layer,
                     Matrix* grad_input) {
  const Matrix gw = matmul_transpose_a(input, grad_z);
  for (int i = 0; i < gw.rows(); ++i)
    for (int j = 0; j < gw.cols(); ++j) layer.gw(i, j) += gw(i, j);
  const std::vector<double> gb = column_sums(grad_z);
  for (std::size_t j = 0; j < gb.size(); ++j) layer.gb[j] += gb[j];
  if (grad_input) *grad_input = matmul_transpose_b(grad_z, layer.w);
}

Matrix relu(const Matrix& z) {
  Matrix a = z;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (a(i, j) < 0.0) a(i, j) = 0.0;
  return a;
}

}  // namespace

MlpNetwork::MlpNetwork(const MlpSpec& spec, Rng& rng) : spec_(spec) {
  if (spec.input_dim <= 0 || spec.output_dim <= 0)
    throw ValidationError("network input/output dimensions must be positive");
  int in = spec.input_dim;
  for (int h : spec.hidden_dims) {
    layers_.push_back(make_dense_layer(in, h, rng));
    in = h;
  }
  layers_.push_back(make_dense_layer(in, spec.output_dim, rng));
}

Matrix MlpNetwork::forward(const Matrix& x, ForwardCache* cache) const {
  if (x.cols() != spec_.input_dim)
    throw ValidationError("network expected " + std::to_string(spec_.input_dim) +
                          " input features, got " + std::to_string(x.cols()));
  if (cache) {
    cache->input = x;
    cache->pre.clear();
    cache->post.clear();
  }
  Matrix a = x;
  const std::size_t last = layers_.size() - 1;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = affine_forward(a, layers_[l]);
    Matrix out = l == last ? z : relu(z);
    if (cache) {
      cache->pre.push_back(std::move(z));
      cache->post.push_back(out);
    }
    a = std::move(out);
  }
  return a;
}

Matrix MlpNetwork::backward(const ForwardCache& cache, const Matrix& grad_out) {
  if (cache.pre.size() != layers_.size())
    throw RuntimeFailure("forward cache does not match network depth");
  Matrix grad = grad_out;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    if (l + 1 < layers_.size()) {
      // ReLU gate: pass gradient only where the pre-activation was positive.
      const Matrix& z = cache.pre[l];
      for (int i = 0; i < grad.rows(); ++i)
        for (int j = 0; j < grad.cols(); ++j)
          if (z(i, j) <= 0.0) grad(i, j) = 0.0;
    }
    const Matrix& input = l == 0 ? cache.input : cache.post[l - 1];
    Matrix grad_in;
    affine_backward(input, grad, layers_[l], &grad_in);
    grad = std::move(grad_in);
  }
  return grad;
}

void MlpNetwork::zero_grads() {
  for (auto& layer : layers_) {
    layer.gw.fill(0.0);
    std::fill(layer.gb.begin(), layer.gb.end(), 0.0);
  }
}

void MlpNetwork::append_params(std::vector<ParamSpan>& out) {
  for (auto& layer : layers_) append_layer_params(layer, out);
}

std::size_t MlpNetwork::param_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_)
    n += static_cast<std::size_t>(layer.w.rows()) * layer.w.cols() + layer.b.size();
  return n;
}

Matrix reshape(const Matrix& m, int rows, int cols) {
  if (static_cast<long long>(rows) * cols !=
      static_cast<long long>(m.rows()) * m.cols())
    throw RuntimeFailure("reshape changes element count");
  Matrix out(rows, cols);
  std::copy(m.data(), m.data() + static_cast<std::size_t>(rows) * cols, out.data());
  return out;
}

PerFeatureHead::PerFeatureHead(int n_features, int embed_dim, int bins, Rng& rng)
    : n_features_(n_features), embed_dim_(embed_dim), bins_(bins) {
  if (n_features <= 0 || embed_dim <= 0 || bins <= 0)
    throw ValidationError("per-feature head dimensions must be positive");
  layers_.push_back(make_dense_layer(embed_dim, bins, rng));
}

Matrix PerFeatureHead::forward(const Matrix& x, ForwardCache* cache) const {
  if (x.cols() != n_features_ * embed_dim_)
    throw ValidationError("per-feature head expected width " +
                          std::to_string(n_features_ * embed_dim_) + ", got " +
                          std::to_string(x.cols()));
  // Row-major (N, d*E) is byte-identical to (N*d, E): one shared affine map.
  const Matrix stacked = reshape(x, x.rows() * n_features_, embed_dim_);
  Matrix z = affine_forward(stacked, layers_[0]);
  if (cache) {
    cache->input = stacked;
    cache->pre.assign(1, z);
    cache->post.assign(1, z);
  }
  return reshape(z, x.rows(), n_features_ * bins_);
}

Matrix PerFeatureHead::backward(const ForwardCache& cache, const Matrix& grad_out) {
  const Matrix grad_z =
      reshape(grad_out, grad_out.rows() * n_features_, bins_);
  Matrix grad_in;
  affine_backward(cache.input, grad_z, layers_[0], &grad_in);
  return reshape(grad_in, grad_out.rows(), n_features_ * embed_dim_);
}

void PerFeatureHead::zero_grads() {
  layers_[0].gw.fill(0.0);
  std::fill(layers_[0].gb.begin(), layers_[0].gb.end(), 0.0);
}

void PerFeatureHead::append_params(std::vector<ParamSpan>& out) {
  append_layer_params(layers_[0], out);
}

}  // namespace tabbin
