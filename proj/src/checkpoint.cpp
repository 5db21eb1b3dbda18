#include "tabbin/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "tabbin/errors.hpp"

namespace tabbin {

namespace {

void put_u16(std::ostream& out, std::uint16_t v) {
  const char bytes[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  out.write(bytes, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 4);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

std::uint16_t get_u16(std::istream& in) {
  unsigned char bytes[2];
  if (!in.read(reinterpret_cast<char*>(bytes), 2))
    throw ValidationError("checkpoint file is truncated");
  return static_cast<std::uint16_t>(bytes[0] | (bytes[1] << 8));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4))
    throw ValidationError("checkpoint file is truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8))
    throw ValidationError("checkpoint file is truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<const std::vector<DenseLayer>*>& networks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, 4);
  put_u16(out, kCheckpointVersion);
  put_u16(out, static_cast<std::uint16_t>(networks.size()));
  for (const auto* net : networks) {
    put_u32(out, static_cast<std::uint32_t>(net->size()));
    for (const auto& layer : *net) {
      put_u32(out, static_cast<std::uint32_t>(layer.w.rows()));
      put_u32(out, static_cast<std::uint32_t>(layer.w.cols()));
      for (int i = 0; i < layer.w.rows(); ++i)
        for (int j = 0; j < layer.w.cols(); ++j) put_f64(out, layer.w(i, j));
      for (double b : layer.b) put_f64(out, b);
    }
  }
  if (!out) throw RuntimeFailure("failed while writing checkpoint: " + path);
}

void load_checkpoint(const std::string& path,
                     const std::vector<std::vector<DenseLayer>*>& networks) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);

  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw ValidationError("not a checkpoint file (bad magic): " + path);
  const std::uint16_t version = get_u16(in);
  if (version != kCheckpointVersion)
    throw ValidationError("unsupported checkpoint version " +
                          std::to_string(version));
  const std::uint16_t count = get_u16(in);
  if (count != networks.size())
    throw ValidationError("checkpoint holds " + std::to_string(count) +
                          " networks, expected " +
                          std::to_string(networks.size()));

  for (std::size_t n = 0; n < networks.size(); ++n) {
    auto& net = *networks[n];
    const std::uint32_t layer_count = get_u32(in);
    if (layer_count != net.size())
      throw ValidationError("network " + std::to_string(n) + " has " +
                            std::to_string(layer_count) + " layers, expected " +
                            std::to_string(net.size()));
    for (std::size_t l = 0; l < net.size(); ++l) {
      auto& layer = net[l];
      const std::uint32_t rows = get_u32(in);
      const std::uint32_t cols = get_u32(in);
      if (rows != static_cast<std::uint32_t>(layer.w.rows()) ||
          cols != static_cast<std::uint32_t>(layer.w.cols()))
        throw ValidationError(
            "network " + std::to_string(n) + " layer " + std::to_string(l) +
            " is " + std::to_string(rows) + "x" + std::to_string(cols) +
            ", expected " + std::to_string(layer.w.rows()) + "x" +
            std::to_string(layer.w.cols()));
      for (int i = 0; i < layer.w.rows(); ++i)
        for (int j = 0; j < layer.w.cols(); ++j) layer.w(i, j) = get_f64(in);
      for (auto& b : layer.b) b = get_f64(in);
    }
  }
}

}  // namespace tabbin
