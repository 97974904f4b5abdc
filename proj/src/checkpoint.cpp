#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "sonalign/errors.hpp"
#include "sonalign/mlp.hpp"

// Checkpoint layout, all integers and floats little-endian:
//   "EALN" | u16 version | u16 reserved | u32 num_layers |
//   u32 d_in | u32 d_hidden | u32 d_out | u64 seed |
//   per layer: u8 has_norm | u32 out | u32 in | f64 weight[out*in] row-major |
//              f64 bias[out] | (has_norm: gamma, beta, run_mean, run_var, f64[out] each)

namespace sonalign::nn {

namespace {

constexpr char kMagic[4] = {'E', 'A', 'L', 'N'};
constexpr uint16_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open checkpoint for writing: " + path);
  }
  void u8(uint8_t v) { out_.put(static_cast<char>(v)); }
  void u16(uint16_t v) { le(v); }
  void u32(uint32_t v) { le(v); }
  void u64(uint64_t v) { le(v); }
  void f64(double v) { le(std::bit_cast<uint64_t>(v)); }
  void row_vec(const RowVec& v) {
    for (Index i = 0; i < v.size(); ++i) f64(v(i));
  }
  void matrix(const Mat& m) {
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) f64(m(i, j));
    }
  }
  void finish(const std::string& path) {
    out_.flush();
    if (!out_) throw IoError("write failure on checkpoint: " + path);
  }

 private:
  template <typename T>
  void le(T v) {
    char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) {
      buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    }
    out_.write(buf, sizeof(T));
  }
  std::ofstream out_;
};

class ReaderLE {
 public:
  explicit ReaderLE(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open checkpoint: " + path);
  }
  uint8_t u8() {
    int c = in_.get();
    if (c == EOF) fail();
    return static_cast<uint8_t>(c);
  }
  uint16_t u16() { return le<uint16_t>(); }
  uint32_t u32() { return le<uint32_t>(); }
  uint64_t u64() { return le<uint64_t>(); }
  double f64() { return std::bit_cast<double>(le<uint64_t>()); }
  RowVec row_vec(Index n) {
    RowVec v(n);
    for (Index i = 0; i < n; ++i) v(i) = f64();
    return v;
  }
  Mat matrix(Index rows, Index cols) {
    Mat m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) m(i, j) = f64();
    }
    return m;
  }
  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

 private:
  [[noreturn]] void fail() { throw ParseError("truncated checkpoint: " + path_); }
  template <typename T>
  T le() {
    char buf[sizeof(T)];
    in_.read(buf, sizeof(T));
    if (in_.gcount() != static_cast<std::streamsize>(sizeof(T))) fail();
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<uint8_t>(buf[i])) << (8 * i);
    }
    return v;
  }
  std::ifstream in_;
  std::string path_;
};

}  // namespace

void save_params(const MlpParams& params, const std::string& path) {
  Writer w(path);
  w.u8(kMagic[0]);
  w.u8(kMagic[1]);
  w.u8(kMagic[2]);
  w.u8(kMagic[3]);
  w.u16(kVersion);
  w.u16(0);
  w.u32(static_cast<uint32_t>(params.layers.size()));
  w.u32(static_cast<uint32_t>(params.config.d_in));
  w.u32(static_cast<uint32_t>(params.config.d_hidden));
  w.u32(static_cast<uint32_t>(params.config.d_out));
  w.u64(params.config.seed);
  for (const Layer& layer : params.layers) {
    w.u8(layer.has_norm ? 1 : 0);
    w.u32(static_cast<uint32_t>(layer.weight.rows()));
    w.u32(static_cast<uint32_t>(layer.weight.cols()));
    w.matrix(layer.weight);
    w.row_vec(layer.bias);
    if (layer.has_norm) {
      w.row_vec(layer.gamma);
      w.row_vec(layer.beta);
      w.row_vec(layer.run_mean);
      w.row_vec(layer.run_var);
    }
  }
  w.finish(path);
}

MlpParams load_params(const std::string& path) {
  ReaderLE r(path);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("bad checkpoint magic in " + path);
  }
  const uint16_t version = r.u16();
  if (version != kVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version) + " in " + path);
  }
  r.u16();  // reserved
  const uint32_t num_layers = r.u32();
  if (num_layers == 0) {
    throw ParseError("checkpoint declares zero layers: " + path);
  }

  MlpParams params;
  params.config.d_in = r.u32();
  params.config.d_hidden = r.u32();
  params.config.d_out = r.u32();
  params.config.num_layers = static_cast<int>(num_layers);
  params.config.seed = r.u64();
  params.layers.resize(num_layers);
  for (Layer& layer : params.layers) {
    layer.has_norm = r.u8() != 0;
    const uint32_t out = r.u32();
    const uint32_t in = r.u32();
    if (out == 0 || in == 0) {
      throw ParseError("checkpoint layer with zero dimension: " + path);
    }
    layer.weight = r.matrix(out, in);
    layer.bias = r.row_vec(out);
    if (layer.has_norm) {
      layer.gamma = r.row_vec(out);
      layer.beta = r.row_vec(out);
      layer.run_mean = r.row_vec(out);
      layer.run_var = r.row_vec(out);
    }
  }
  if (!r.at_eof()) {
    throw ParseError("trailing bytes after last layer in " + path);
  }
  return params;
}

}  // namespace sonalign::nn
