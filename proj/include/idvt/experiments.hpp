#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "idvt/config.hpp"
#include "idvt/dataset.hpp"
#include "idvt/synthetic.hpp"
#include "idvt/train.hpp"

namespace idvt {

// load_raw + preprocess(min_degree) + split(test_fraction, seed).
Dataset load_dataset(const RunConfig& cfg);

// Table-style counts of an indexed dataset.
nlohmann::json dataset_counts(const Dataset& ds);

// Audit of the raw and the k-core filtered data. When the directory name
// matches a known public dataset, its published statistics are attached
// under "reference" for comparison. Writes stats.json into `out_dir` if set.
nlohmann::json cmd_stats(const std::filesystem::path& data_dir, std::size_t min_degree,
                         const std::optional<std::filesystem::path>& out_dir, std::ostream& log);

// Writes run.json, metrics.json, checkpoint.bin and losses.csv.
TrainResult cmd_train(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

struct SweepRow {
  std::string value;
  std::optional<double> removal_ratio;        // denoising at initialization
  std::optional<double> final_removal_ratio;  // denoising at the kept parameters
  MetricsReport metrics;
};

// Canonical config key for a sweep parameter name (accepts K for layers).
// Throws ConfigError for parameters that cannot be swept.
std::string sweep_key(const std::string& param);

// One full run per value, all sharing the config's seed. Writes run.json,
// sweep.csv and sweep.txt.
std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, const std::string& param,
                                const std::vector<std::string>& values, const std::filesystem::path& out_dir,
                                std::ostream& log);

struct AblationRow {
  Variant variant = Variant::kFull;
  Hyperparams effective;
  MetricsReport metrics;
};

// full, no_LV, no_DV and no_both with the config's seed. Writes run.json,
// ablation.csv, ablation.json and ablation.txt.
std::vector<AblationRow> cmd_ablate(const RunConfig& cfg, const std::filesystem::path& out_dir,
                                    std::ostream& log);

// Generates planted-noise data and writes it with run.json into `out_dir`.
SyntheticData cmd_synth(const SyntheticOptions& opts, const std::filesystem::path& out_dir, std::ostream& log);

// Scores the social graph with freshly initialized or checkpointed user
// embeddings and writes kept_edges.txt / removed_edges.txt (`u v ic`).
DenoisedSocialGraph cmd_denoise(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint,
                                const std::filesystem::path& out_dir, std::ostream& log);

// Fixed-width text table; the first row is the header.
std::string aligned_table(const std::vector<std::vector<std::string>>& rows);

// Shortest round-trip representation of a double, or `digits` significant
// digits when positive.
std::string format_real(double v, int digits = 0);

}  // namespace idvt
