#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "idvt/config.hpp"
#include "idvt/error.hpp"
#include "idvt/experiments.hpp"

namespace {

struct ConfigFlags {
  std::string config;
  std::string data;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::vector<std::string> overrides;  // key=value
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f, bool with_variant) {
  cmd->add_option("--config", f.config, "flat key = value config file");
  cmd->add_option("--data", f.data, "dataset directory (overrides data_dir)");
  cmd->add_option("--seed", f.seed, "master seed");
  if (with_variant) cmd->add_option("--variant", f.variant, "full, no_LV, no_DV, no_both, lightgcn_baseline, bpr_mf_baseline");
  cmd->add_option("--set", f.overrides, "extra key=value override (repeatable)");
}

idvt::RunConfig resolve(const ConfigFlags& f) {
  idvt::RunConfig cfg = f.config.empty() ? idvt::RunConfig{} : idvt::load_config(f.config);
  for (const auto& kv : f.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw idvt::ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!f.data.empty()) cfg.data_dir = f.data;
  if (f.seed) cfg.hyper.seed = *f.seed;
  if (!f.variant.empty()) cfg.variant = idvt::parse_variant(f.variant);
  cfg.validate();
  return cfg;
}

std::vector<std::string> split_values(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interest-aware denoising social recommender"};
  app.require_subcommand(1);

  std::string out;

  auto* stats = app.add_subcommand("stats", "audit a dataset before and after the k-core filter");
  std::string stats_data;
  std::size_t min_degree = 5;
  std::string stats_out;
  stats->add_option("--data", stats_data, "dataset directory")->required();
  stats->add_option("--min-degree", min_degree, "k of the k-core filter");
  stats->add_option("--out", stats_out, "directory for stats.json");

  ConfigFlags train_flags;
  auto* train = app.add_subcommand("train", "train one variant and evaluate it");
  add_config_flags(train, train_flags, true);
  train->add_option("--out", out, "output directory")->required();

  ConfigFlags sweep_flags;
  std::string param, values;
  auto* sweep = app.add_subcommand("sweep", "one run per value of a hyperparameter");
  add_config_flags(sweep, sweep_flags, true);
  sweep->add_option("--param", param, "threshold, lambda1, lambda2, drop_ratio, tau, beta or K")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();
  sweep->add_option("--out", out, "output directory")->required();

  ConfigFlags ablate_flags;
  auto* ablate = app.add_subcommand("ablate", "full, no_LV, no_DV and no_both on one split");
  add_config_flags(ablate, ablate_flags, false);
  ablate->add_option("--out", out, "output directory")->required();

  idvt::SyntheticOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "generate planted-noise data");
  synth->add_option("--users", synth_opts.users, "number of users");
  synth->add_option("--items", synth_opts.items, "number of items");
  synth->add_option("--communities", synth_opts.communities, "number of communities");
  synth->add_option("--noise", synth_opts.noise_fraction, "fraction of cross-community social edges");
  synth->add_option("--seed", synth_opts.seed, "generator seed");
  synth->add_option("--items-per-user", synth_opts.items_per_user, "minimum interactions per user");
  synth->add_option("--social-degree", synth_opts.social_degree, "social out-edges per user");
  synth->add_option("--out", out, "output directory")->required();

  ConfigFlags denoise_flags;
  std::string checkpoint;
  auto* denoise = app.add_subcommand("denoise", "export kept and removed social edges");
  add_config_flags(denoise, denoise_flags, false);
  denoise->add_option("--checkpoint", checkpoint, "score with trained embeddings");
  denoise->add_option("--out", out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*stats) {
      idvt::cmd_stats(stats_data, min_degree,
                      stats_out.empty() ? std::nullopt : std::optional<std::filesystem::path>(stats_out), std::cout);
    } else if (*train) {
      idvt::cmd_train(resolve(train_flags), out, std::cout);
    } else if (*sweep) {
      idvt::cmd_sweep(resolve(sweep_flags), param, split_values(values), out, std::cout);
    } else if (*ablate) {
      idvt::cmd_ablate(resolve(ablate_flags), out, std::cout);
    } else if (*synth) {
      idvt::cmd_synth(synth_opts, out, std::cout);
    } else if (*denoise) {
      idvt::cmd_denoise(resolve(denoise_flags), checkpoint.empty() ? std::nullopt
                                                                   : std::optional<std::filesystem::path>(checkpoint),
                        out, std::cout);
    }
  } catch (const idvt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
