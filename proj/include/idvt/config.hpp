#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "idvt/model.hpp"
#include "idvt/train.hpp"

namespace idvt {

// Fully resolved run configuration. Files are flat `key = value` text with
// '#' comments; command-line overrides are applied afterwards with set().
struct RunConfig {
  std::string data_dir;
  std::string out_dir;
  Hyperparams hyper;
  Variant variant = Variant::kFull;
  double test_fraction = 0.2;
  double val_fraction = 0.1;
  std::size_t patience = 20;
  std::size_t min_degree = 5;
  std::size_t eval_threads = 1;
  bool exclude_train = true;
  HitRatioMode hit_mode = HitRatioMode::kPooled;

  // Throws ConfigError for unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value);
  // Throws ConfigError on the first violated constraint.
  void validate() const;

  TrainOptions train_options() const;
  // Everything that influences results (paths excluded).
  nlohmann::json to_json() const;
  // 16 hex digits identifying to_json().
  std::string digest() const;

  static std::vector<std::string> keys();
};

RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace idvt
