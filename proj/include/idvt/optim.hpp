#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "idvt/autodiff.hpp"
#include "idvt/rng.hpp"

namespace idvt {

// Ordered collection of trainable tensors plus the optimizer step counter.
// Slots are addressed by the index returned from add().
class ParameterSet {
 public:
  std::size_t add(std::string name, Matrix value);

  Parameter& operator[](std::size_t slot) { return params_[slot]; }
  const Parameter& operator[](std::size_t slot) const { return params_[slot]; }
  std::size_t size() const noexcept { return params_.size(); }
  std::size_t find(std::string_view name) const;  // throws ConfigError if absent

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  bool all_finite() const;

  std::uint64_t step = 0;

 private:
  std::vector<Parameter> params_;
};

// Uniform [-bound, bound] initialization drawn from the given stream.
Matrix uniform_init(std::size_t rows, std::size_t cols, double bound, Rng& rng);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update over every parameter, then zeroes gradients.
// Throws DivergenceError if any gradient or updated value is non-finite.
void adam_step(ParameterSet& params, const AdamOptions& opts);

// Flat binary checkpoint: magic "IDVTCKPT", u32 version, u32 tensor count,
// per tensor (u32 name length, name bytes, u64 rows, u64 cols), u64 step,
// then every tensor's values row-major as little-endian IEEE-754 doubles.
void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path);
// Values are written into the existing slots; names and shapes must match.
void load_checkpoint(ParameterSet& params, const std::filesystem::path& path);
std::string serialize_checkpoint(const ParameterSet& params);
void deserialize_checkpoint(ParameterSet& params, std::string_view bytes);

}  // namespace idvt
