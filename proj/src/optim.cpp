#include "idvt/optim.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace idvt {

std::size_t ParameterSet::add(std::string name, Matrix value) {
  params_.emplace_back(std::move(name), std::move(value));
  return params_.size() - 1;
}

std::size_t ParameterSet::find(std::string_view name) const {
  for (std::size_t k = 0; k < params_.size(); ++k)
    if (params_[k].name == name) return k;
  throw ConfigError("no parameter named '" + std::string(name) + "'");
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

bool ParameterSet::all_finite() const {
  for (const auto& p : params_)
    if (!p.value.all_finite()) return false;
  return true;
}

Matrix uniform_init(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng.uniform(-bound, bound);
  return m;
}

void adam_step(ParameterSet& params, const AdamOptions& opts) {
  for (const auto& p : params) {
    if (!p.grad.all_finite()) throw DivergenceError("adam_step: non-finite gradient in " + p.name);
  }
  params.step += 1;
  const double t = static_cast<double>(params.step);
  const double bias1 = 1.0 - std::pow(opts.beta1, t);
  const double bias2 = 1.0 - std::pow(opts.beta2, t);
  for (auto& p : params) {
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad.data[k];
      double& m = p.first_moment.data[k];
      double& v = p.second_moment.data[k];
      m = opts.beta1 * m + (1.0 - opts.beta1) * g;
      v = opts.beta2 * v + (1.0 - opts.beta2) * g * g;
      const double m_hat = m / bias1;
      const double v_hat = v / bias2;
      p.value.data[k] -= opts.lr * m_hat / (std::sqrt(v_hat) + opts.eps);
    }
    p.zero_grad();
    if (!p.value.all_finite()) throw DivergenceError("adam_step: non-finite value in " + p.name);
  }
}

namespace {

constexpr char kMagic[8] = {'I', 'D', 'V', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get_le() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    need(sizeof(U));
    U bits = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b)
      bits |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw IoError("checkpoint: truncated file");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const ParameterSet& params) {
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    put_le<std::uint64_t>(out, p.value.rows);
    put_le<std::uint64_t>(out, p.value.cols);
  }
  put_le<std::uint64_t>(out, params.step);
  for (const auto& p : params)
    for (double v : p.value.data) put_le<double>(out, v);
  return out;
}

void deserialize_checkpoint(ParameterSet& params, std::string_view bytes) {
  Reader in(bytes);
  if (in.take(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic)))
    throw IoError("checkpoint: bad magic");
  if (in.get_le<std::uint32_t>() != kVersion) throw IoError("checkpoint: unsupported version");
  const auto count = in.get_le<std::uint32_t>();
  if (count != params.size()) throw IoError("checkpoint: tensor count mismatch");
  for (auto& p : params) {
    const auto len = in.get_le<std::uint32_t>();
    if (in.take(len) != p.name) throw IoError("checkpoint: tensor name mismatch for " + p.name);
    const auto rows = in.get_le<std::uint64_t>();
    const auto cols = in.get_le<std::uint64_t>();
    if (rows != p.value.rows || cols != p.value.cols)
      throw IoError("checkpoint: shape mismatch for " + p.name);
  }
  params.step = in.get_le<std::uint64_t>();
  for (auto& p : params)
    for (double& v : p.value.data) v = in.get_le<double>();
  if (!in.at_end()) throw IoError("checkpoint: trailing bytes");
}

void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::string bytes = serialize_checkpoint(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

void load_checkpoint(ParameterSet& params, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  deserialize_checkpoint(params, buf.str());
}

}  // namespace idvt
