#include "gtn/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "gtn/error.hpp"

namespace gtn {

namespace {

constexpr char kMagic[8] = {'G', 'T', 'N', 'M', 'O', 'D', 'E', 'L'};

std::uint64_t fnv1a(const char* data, std::size_t len) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(std::span<const double> vs) {
    u64(vs.size());
    for (double v : vs) f64(v);
  }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  void need(std::size_t n, const char* what) {
    if (end_ - pos_ < n) throw Error(ErrorCode::kModelFormat, std::string("model file truncated while reading ") + what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::vector<double> f64s(std::size_t expected, const char* what) {
    const auto count = u64(what);
    if (count != expected) {
      throw Error(ErrorCode::kModelFormat, std::string("model file declares ") + std::to_string(count) + " " + what +
                                               " but its shape requires " + std::to_string(expected));
    }
    need(count * 8, what);
    std::vector<double> out(count);
    for (auto& v : out) v = f64(what);
    return out;
  }
  std::size_t pos() const { return pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

void copy_into(std::span<double> dst, const std::vector<double>& src) { std::copy(src.begin(), src.end(), dst.begin()); }

}  // namespace

std::string serialize_model(const MlpModel& model) {
  const auto& cfg = model.config();
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(kModelFormatVersion);
  w.u64(cfg.input_dim);
  w.u64(cfg.output_dim);
  w.u64(cfg.hidden_layers);
  w.u64(cfg.width);
  w.f64(cfg.leaky_slope);
  w.u8(cfg.batch_norm ? 1 : 0);
  w.u64(cfg.seed);
  w.f64s(model.parameters());
  w.f64s(model.running_stats());
  w.f64s(model.output_offset());
  if (const auto& mix = model.source()) {
    w.u8(1);
    w.u64(mix->weights.size());
    for (double v : mix->weights) w.f64(v);
    for (double v : mix->means.values()) w.f64(v);
    for (double v : mix->stds.values()) w.f64(v);
  } else {
    w.u8(0);
  }
  const auto checksum = fnv1a(w.bytes().data(), w.bytes().size());
  w.u64(checksum);
  return std::move(w.bytes());
}

MlpModel deserialize_model(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) + 4 + 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::kModelFormat, "not a model file (bad magic)");
  }
  const std::size_t body = bytes.size() - 8;
  Reader r(bytes, bytes.size());
  r.skip(sizeof(kMagic));
  const auto version = r.u32("version");
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::kModelFormat, "unsupported model format version " + std::to_string(version) +
                                             " (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  {
    Reader tail(bytes, bytes.size());
    tail.skip(body);
    if (tail.u64("checksum") != fnv1a(bytes.data(), body)) {
      throw Error(ErrorCode::kModelFormat, "model file checksum mismatch (corrupted or truncated)");
    }
  }
  Reader in(bytes, body);
  in.skip(sizeof(kMagic) + 4);

  MlpConfig cfg;
  cfg.input_dim = in.u64("input_dim");
  cfg.output_dim = in.u64("output_dim");
  cfg.hidden_layers = in.u64("hidden_layers");
  cfg.width = in.u64("width");
  cfg.leaky_slope = in.f64("leaky_slope");
  cfg.batch_norm = in.u8("batch_norm") != 0;
  cfg.seed = in.u64("seed");
  constexpr std::uint64_t kSane = 1u << 20;
  if (cfg.input_dim > kSane || cfg.output_dim > kSane || cfg.hidden_layers > kSane || cfg.width > kSane) {
    throw Error(ErrorCode::kModelFormat, "model file declares implausible layer sizes");
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kModelFormat, std::string("model file has invalid config: ") + e.what());
  }

  MlpModel model(cfg);
  copy_into(model.parameters(), in.f64s(model.parameter_count(), "parameters"));
  copy_into(model.running_stats(), in.f64s(model.running_stats().size(), "running statistics"));
  model.output_offset() = in.f64s(cfg.output_dim, "output offsets");
  if (in.u8("source kind") == 1) {
    const auto k = in.u64("mixture size");
    if (k == 0 || k > kSane) throw Error(ErrorCode::kModelFormat, "model file declares an invalid mixture size");
    in.need(k * (1 + 2 * cfg.input_dim) * 8, "mixture");
    GaussianMixtureSource mix;
    mix.weights.resize(k);
    for (auto& v : mix.weights) v = in.f64("mixture weights");
    std::vector<double> means(k * cfg.input_dim);
    std::vector<double> stds(k * cfg.input_dim);
    for (auto& v : means) v = in.f64("mixture means");
    for (auto& v : stds) v = in.f64("mixture stds");
    try {
      mix.means = PointSet(cfg.input_dim, std::move(means));
      mix.stds = PointSet(cfg.input_dim, std::move(stds));
    } catch (const Error& e) {
      throw Error(ErrorCode::kModelFormat, std::string("model file mixture is invalid: ") + e.what());
    }
    model.source() = std::move(mix);
  }
  if (in.pos() != body) throw Error(ErrorCode::kModelFormat, "model file has unexpected trailing bytes");
  return model;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  const auto bytes = serialize_model(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open model file '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace gtn
