// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <cstring>
#include <string>

#include "latentaug/io.hpp"
#include "latentaug/nn.hpp"

namespace latentaug::nn {

namespace {

constexpr char kMagic[4] = {'L', 'A', 'N', 'N'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  std::uint64_t take(int width) {
    if (pos_ + static_cast<std::size_t>(width) > bytes_.size()) throw LengthError("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
  double f64() { return std::bit_cast<double>(take(8)); }
  bool done() const { return pos_ == bytes_.size(); }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams<double>& params) {
  std::string out(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(params.layers.size()));
  for (const auto& l : params.layers) {
    put_u32(out, static_cast<std::uint32_t>(l.weight.rows()));
    put_u32(out, static_cast<std::uint32_t>(l.weight.cols()));
  }
  for (const auto& l : params.layers) {
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) put_f64(out, l.weight(i, j));
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) put_f64(out, l.bias[i]);
  }
  write_file_atomic(path, out);
}

ModelParams<double> load_checkpoint(const std::filesystem::path& path) {
  Reader in(read_file(path));
  if (in.bytes().size() < 4 || std::memcmp(in.bytes().data(), kMagic, 4) != 0)
    throw FormatError("checkpoint: bad magic in " + path.string());
  in.take(4);
  if (in.u32() != kCheckpointVersion) throw FormatError("checkpoint: unsupported version");
  const std::uint32_t count = in.u32();
  if (count == 0) throw FormatError("checkpoint: no layers");
  std::vector<std::pair<Eigen::Index, Eigen::Index>> dims;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto rows = static_cast<Eigen::Index>(in.u32());
    const auto cols = static_cast<Eigen::Index>(in.u32());
    if (!dims.empty() && dims.back().first != cols) throw FormatError("checkpoint: layer shapes do not chain");
    dims.emplace_back(rows, cols);
  }
  Architecture arch;
  arch.input_dim = dims.front().second;
  arch.classes = dims.back().first;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) arch.hidden.push_back(dims[i].first);
  auto params = zero_model<double>(arch);
  for (auto& l : params.layers) {
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) l.weight(i, j) = in.f64();
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = in.f64();
  }
  if (!in.done()) throw LengthError("checkpoint: trailing bytes");
  return params;
}

}  // namespace latentaug::nn
