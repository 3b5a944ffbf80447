#include "idvt/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "idvt/error.hpp"
#include "idvt/rng.hpp"

namespace idvt {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(std::string(key) + ": expected true/false, got '" + std::string(v) + "'");
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view raw) {
  const std::string_view v = trim(raw);
  auto& h = hyper;
  if (key == "data_dir") data_dir = v;
  else if (key == "out_dir") out_dir = v;
  else if (key == "dim") h.dim = to_uint(key, v);
  else if (key == "layers") h.layers = to_uint(key, v);
  else if (key == "tau") h.tau = to_real(key, v);
  else if (key == "threshold") h.threshold = to_real(key, v);
  else if (key == "drop_ratio") h.drop_ratio = to_real(key, v);
  else if (key == "lambda1") h.lambda1 = to_real(key, v);
  else if (key == "lambda2") h.lambda2 = to_real(key, v);
  else if (key == "lambda3") h.lambda3 = to_real(key, v);
  else if (key == "beta") h.beta = to_real(key, v);
  else if (key == "lr") h.lr = to_real(key, v);
  else if (key == "batch_size") h.batch_size = to_uint(key, v);
  else if (key == "epochs") h.epochs = to_uint(key, v);
  else if (key == "top_k") h.top_k = to_uint(key, v);
  else if (key == "seed") h.seed = to_uint(key, v);
  else if (key == "init_bound") h.init_bound = to_real(key, v);
  else if (key == "leaky_slope") h.leaky_slope = to_real(key, v);
  else if (key == "contrast_negatives") {
    if (v == "batch") h.negatives = ContrastNegatives::kInBatch;
    else if (v == "all") h.negatives = ContrastNegatives::kAllUsers;
    else throw ConfigError("contrast_negatives: expected batch|all");
  } else if (key == "contrast_similarity") {
    if (v == "cosine") h.similarity = ContrastSimilarity::kCosine;
    else if (v == "dot") h.similarity = ContrastSimilarity::kDot;
    else throw ConfigError("contrast_similarity: expected cosine|dot");
  } else if (key == "variant") variant = parse_variant(v);
  else if (key == "test_fraction") test_fraction = to_real(key, v);
  else if (key == "val_fraction") val_fraction = to_real(key, v);
  else if (key == "patience") patience = to_uint(key, v);
  else if (key == "min_degree") min_degree = to_uint(key, v);
  else if (key == "eval_threads") eval_threads = to_uint(key, v);
  else if (key == "exclude_train") exclude_train = to_bool(key, v);
  else if (key == "hit_ratio") {
    if (v == "pooled") hit_mode = HitRatioMode::kPooled;
    else if (v == "user") hit_mode = HitRatioMode::kUserHit;
    else throw ConfigError("hit_ratio: expected pooled|user");
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

std::vector<std::string> RunConfig::keys() {
  return {"data_dir", "out_dir", "dim", "layers", "tau", "threshold", "drop_ratio", "lambda1",
          "lambda2", "lambda3", "beta", "lr", "batch_size", "epochs", "top_k", "seed", "init_bound",
          "leaky_slope", "contrast_negatives", "contrast_similarity", "variant", "test_fraction",
          "val_fraction", "patience", "min_degree", "eval_threads", "exclude_train", "hit_ratio"};
}

void RunConfig::validate() const {
  hyper.validate();
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must lie in [0, 1)");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (min_degree < 1) throw ConfigError("min_degree must be >= 1");
  if (eval_threads < 1) throw ConfigError("eval_threads must be >= 1");
}

TrainOptions RunConfig::train_options() const {
  TrainOptions o;
  o.hyper = hyper;
  o.variant = variant;
  o.val_fraction = val_fraction;
  o.patience = patience;
  o.eval.k = hyper.top_k;
  o.eval.exclude_train = exclude_train;
  o.eval.hit_mode = hit_mode;
  o.eval.threads = eval_threads;
  return o;
}

nlohmann::json RunConfig::to_json() const {
  const auto& h = hyper;
  return nlohmann::json{
      {"dim", h.dim},
      {"layers", h.layers},
      {"tau", h.tau},
      {"threshold", h.threshold},
      {"drop_ratio", h.drop_ratio},
      {"lambda1", h.lambda1},
      {"lambda2", h.lambda2},
      {"lambda3", h.lambda3},
      {"beta", h.beta},
      {"lr", h.lr},
      {"batch_size", h.batch_size},
      {"epochs", h.epochs},
      {"top_k", h.top_k},
      {"seed", h.seed},
      {"init_bound", h.init_bound},
      {"leaky_slope", h.leaky_slope},
      {"contrast_negatives", h.negatives == ContrastNegatives::kInBatch ? "batch" : "all"},
      {"contrast_similarity", h.similarity == ContrastSimilarity::kCosine ? "cosine" : "dot"},
      {"variant", std::string(to_string(variant))},
      {"test_fraction", test_fraction},
      {"val_fraction", val_fraction},
      {"patience", patience},
      {"min_degree", min_degree},
      {"exclude_train", exclude_train},
      {"hit_ratio", hit_mode == HitRatioMode::kPooled ? "pooled" : "user"},
  };
}

std::string RunConfig::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(to_json().dump())));
  return buf;
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected `key = value`");
    try {
      cfg.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_config(in, path.string());
}

}  // namespace idvt
