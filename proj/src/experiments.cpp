#include "idvt/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>
#include <system_error>

#include "idvt/error.hpp"
#include "idvt/graph.hpp"
#include "idvt/report.hpp"
#include "idvt/social_stats.hpp"

namespace idvt {
namespace fs = std::filesystem;

std::string format_real(double v, int digits) {
  char buf[64];
  auto [ptr, ec] = digits > 0 ? std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, digits)
                              : std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

namespace {

// Display copy of a table with numeric cells cut to a few significant digits.
std::vector<std::vector<std::string>> readable(std::vector<std::vector<std::string>> table) {
  for (auto& row : table) {
    for (auto& cell : row) {
      double v = 0;
      const char* end = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(cell.data(), end, v);
      if (ec == std::errc{} && ptr == end) cell = format_real(v, 4);
    }
  }
  return table;
}

}  // namespace

std::string aligned_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c > 0) out += "  ";
      out += rows[r][c];
      if (c + 1 < rows[r].size()) out.append(width[c] - rows[r][c].size(), ' ');
    }
    out += '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c > 0 ? 2 : 0);
      out.append(total, '-');
      out += '\n';
    }
  }
  return out;
}

Dataset load_dataset(const RunConfig& cfg) {
  if (cfg.data_dir.empty()) throw ConfigError("data_dir is not set");
  PreprocessOptions pre;
  pre.min_degree = cfg.min_degree;
  return split(preprocess(load_raw(cfg.data_dir), pre), cfg.test_fraction, cfg.hyper.seed);
}

nlohmann::json dataset_counts(const Dataset& ds) {
  const double cells = static_cast<double>(ds.n_users) * static_cast<double>(ds.n_items);
  const double user_cells = static_cast<double>(ds.n_users) * static_cast<double>(ds.n_users);
  return nlohmann::json{
      {"users", ds.n_users},
      {"items", ds.n_items},
      {"interactions", ds.interactions.size()},
      {"interaction_density", cells > 0 ? static_cast<double>(ds.interactions.size()) / cells : 0.0},
      {"social_relations", ds.social_edges.size()},
      {"social_density", user_cells > 0 ? static_cast<double>(ds.social_edges.size()) / user_cells : 0.0},
  };
}

namespace {

struct PublishedStats {
  const char* name;
  double noise_ratio;
  double soc_ave_int;
  double col_ave_int;
};

constexpr PublishedStats kPublished[] = {
    {"flickr", 0.81, 2.17, 1.38},
    {"ciao", 0.45, 4.18, 1.84},
    {"yelp", 0.29, 6.15, 1.90},
};

std::optional<PublishedStats> published_for(const fs::path& dir) {
  std::string name = fs::absolute(dir).lexically_normal().filename().string();
  if (name.empty()) name = fs::absolute(dir).lexically_normal().parent_path().filename().string();
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  for (const auto& p : kPublished)
    if (name.find(p.name) != std::string::npos) return p;
  return std::nullopt;
}

nlohmann::json stats_block(const Dataset& ds) {
  nlohmann::json j;
  j["counts"] = dataset_counts(ds);
  const auto r = build_interaction_matrix(ds, InteractionSource::kAll);
  const auto s = build_social_matrix(ds);
  try {
    j["metrics"] = to_json(compute_stats(r, s));
  } catch (const UndefinedMetricError& e) {
    j["metrics"] = nullptr;
    j["metrics_error"] = e.what();
  }
  return j;
}

std::string optional_text(const nlohmann::json& v) {
  return v.is_null() ? std::string("n/a") : format_real(v.get<double>());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

nlohmann::json run_record(const std::string& command, const RunConfig& cfg) {
  nlohmann::json j;
  j["command"] = command;
  j["data_dir"] = cfg.data_dir;
  j["config"] = cfg.to_json();
  j["config_digest"] = cfg.digest();
  j["seed"] = cfg.hyper.seed;
  return j;
}

std::string losses_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,L_BPR,L_GL_inter,L_G_intra,L_D_inter,total\n";
  for (const auto& e : history) {
    out += std::to_string(e.epoch) + ',' + format_real(e.mean.bpr) + ',' + format_real(e.mean.inter) + ',' +
           format_real(e.mean.intra) + ',' + format_real(e.mean.dropout) + ',' + format_real(e.total) + '\n';
  }
  return out;
}

std::vector<std::string> metric_cells(const MetricsReport& m) {
  return {format_real(m.hit_ratio), format_real(m.precision), format_real(m.recall), format_real(m.ndcg)};
}

std::vector<std::string> metric_headers(std::size_t k) {
  const std::string at = "@" + std::to_string(k);
  return {"HR" + at, "P" + at, "R" + at, "NDCG" + at};
}

}  // namespace

nlohmann::json cmd_stats(const fs::path& data_dir, std::size_t min_degree, const std::optional<fs::path>& out_dir,
                         std::ostream& log) {
  const RawRecords raw = load_raw(data_dir);
  PreprocessOptions pre;
  pre.min_degree = min_degree;

  nlohmann::json report;
  report["data_dir"] = data_dir.string();
  report["min_degree"] = min_degree;
  report["before_core"] = stats_block(index_unfiltered(raw));
  report["after_core"] = stats_block(preprocess(raw, pre));
  if (auto p = published_for(data_dir)) {
    report["reference"] = {{"dataset", p->name},
                           {"noise_ratio", p->noise_ratio},
                           {"soc_ave_int", p->soc_ave_int},
                           {"col_ave_int", p->col_ave_int}};
  }

  std::vector<std::vector<std::string>> rows{
      {"stage", "users", "items", "interactions", "social", "noise_ratio", "soc_ave_int", "col_ave_int"}};
  for (const char* stage : {"before_core", "after_core"}) {
    const auto& b = report[stage];
    const auto& m = b["metrics"];
    rows.push_back({stage, std::to_string(b["counts"]["users"].get<std::size_t>()),
                    std::to_string(b["counts"]["items"].get<std::size_t>()),
                    std::to_string(b["counts"]["interactions"].get<std::size_t>()),
                    std::to_string(b["counts"]["social_relations"].get<std::size_t>()),
                    m.is_null() ? "n/a" : format_real(m["noise_ratio"].get<double>()),
                    m.is_null() ? "n/a" : optional_text(m["soc_ave_int"]),
                    m.is_null() ? "n/a" : optional_text(m["col_ave_int"])});
  }
  if (report.contains("reference")) {
    const auto& r = report["reference"];
    rows.push_back({"published", "", "", "", "", format_real(r["noise_ratio"].get<double>()),
                    format_real(r["soc_ave_int"].get<double>()), format_real(r["col_ave_int"].get<double>())});
  }
  log << aligned_table(readable(rows));

  if (out_dir) {
    ensure_dir(*out_dir);
    write_text(*out_dir / "stats.json", dump_json(report));
    nlohmann::json run{{"command", "stats"}, {"data_dir", data_dir.string()}, {"min_degree", min_degree}};
    write_text(*out_dir / "run.json", dump_json(run));
  }
  return report;
}

TrainResult cmd_train(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  ensure_dir(out_dir);
  write_text(out_dir / "run.json", dump_json(run_record("train", cfg)));

  const Dataset ds = load_dataset(cfg);
  log << "dataset: " << ds.n_users << " users, " << ds.n_items << " items, " << ds.train_pairs.size()
      << " train / " << ds.test_pairs.size() << " test pairs, " << ds.social_edges.size() << " social edges\n";

  TrainResult result = train_and_evaluate(ds, cfg.train_options(), [&log](const EpochStats& e) {
    log << "epoch " << e.epoch << " loss " << format_real(e.total, 6);
    if (e.validation_ndcg) log << " val_ndcg " << format_real(*e.validation_ndcg, 4);
    log << '\n';
  });
  result.test_report.config_digest = cfg.digest();

  write_text(out_dir / "metrics.json", dump_json(to_json(result.test_report)));
  save_checkpoint(result.params, out_dir / "checkpoint.bin");
  write_text(out_dir / "losses.csv", losses_csv(result.history));

  const auto& m = result.test_report;
  log << "best epoch " << result.best_epoch << ": HR " << format_real(m.hit_ratio, 4) << " P "
      << format_real(m.precision, 4) << " R " << format_real(m.recall, 4) << " NDCG " << format_real(m.ndcg, 4) << '\n';
  return result;
}

std::string sweep_key(const std::string& param) {
  static const std::vector<std::pair<std::string, std::string>> kNames{
      {"threshold", "threshold"}, {"lambda1", "lambda1"}, {"lambda2", "lambda2"}, {"drop_ratio", "drop_ratio"},
      {"tau", "tau"},             {"beta", "beta"},       {"layers", "layers"},   {"K", "layers"},
  };
  for (const auto& [name, key] : kNames)
    if (name == param) return key;
  throw ConfigError("cannot sweep parameter '" + param +
                    "' (expected threshold, lambda1, lambda2, drop_ratio, tau, beta or K)");
}

std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, const std::string& param, const std::vector<std::string>& values,
                                const fs::path& out_dir, std::ostream& log) {
  const std::string key = sweep_key(param);
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<RunConfig> runs;
  for (const auto& v : values) {
    RunConfig c = cfg;
    c.set(key, v);
    c.validate();
    runs.push_back(c);
  }
  cfg.validate();
  ensure_dir(out_dir);
  auto run = run_record("sweep", cfg);
  run["sweep"] = {{"param", key}, {"values", values}};
  write_text(out_dir / "run.json", dump_json(run));

  const Dataset ds = load_dataset(cfg);
  const bool record_removal = key == "threshold" && uses_social(cfg.variant);
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    log << key << " = " << values[i] << '\n';
    TrainResult r = train_and_evaluate(ds, runs[i].train_options());
    SweepRow row;
    row.value = values[i];
    row.metrics = r.test_report;
    row.metrics.config_digest = runs[i].digest();
    if (record_removal && !r.history.empty()) {
      row.removal_ratio = r.history.front().removal_ratio;
      row.final_removal_ratio = r.denoised.removal_ratio;
    }
    rows.push_back(std::move(row));
  }

  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header{key};
  if (record_removal) {
    header.push_back("removal_ratio");
    header.push_back("final_removal_ratio");
  }
  for (auto& h : metric_headers(cfg.hyper.top_k)) header.push_back(h);
  header.push_back("best_epoch");
  table.push_back(header);
  for (const auto& row : rows) {
    std::vector<std::string> cells{row.value};
    if (record_removal) {
      cells.push_back(format_real(*row.removal_ratio));
      cells.push_back(format_real(*row.final_removal_ratio));
    }
    for (auto& c : metric_cells(row.metrics)) cells.push_back(c);
    cells.push_back(std::to_string(row.metrics.epoch));
    table.push_back(cells);
  }
  std::string csv;
  for (const auto& cells : table) {
    for (std::size_t c = 0; c < cells.size(); ++c) csv += (c ? "," : "") + cells[c];
    csv += '\n';
  }
  write_text(out_dir / "sweep.csv", csv);
  const std::string text = aligned_table(readable(table));
  write_text(out_dir / "sweep.txt", text);
  log << text;
  return rows;
}

std::vector<AblationRow> cmd_ablate(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  ensure_dir(out_dir);
  write_text(out_dir / "run.json", dump_json(run_record("ablate", cfg)));

  const Dataset ds = load_dataset(cfg);
  std::vector<AblationRow> rows;
  nlohmann::json j = nlohmann::json::array();
  for (Variant v : {Variant::kFull, Variant::kNoLocalView, Variant::kNoDropoutView, Variant::kNoBoth}) {
    log << "variant " << to_string(v) << '\n';
    RunConfig c = cfg;
    c.variant = v;
    AblationRow row;
    row.variant = v;
    row.effective = effective_hyperparams(c.hyper, v);
    row.metrics = train_and_evaluate(ds, c.train_options()).test_report;
    row.metrics.config_digest = c.digest();
    auto entry = to_json(row.metrics);
    entry["lambda1"] = row.effective.lambda1;
    entry["lambda2"] = row.effective.lambda2;
    j.push_back(entry);
    rows.push_back(std::move(row));
  }

  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header{"variant", "lambda1", "lambda2"};
  for (auto& h : metric_headers(cfg.hyper.top_k)) header.push_back(h);
  table.push_back(header);
  for (const auto& row : rows) {
    std::vector<std::string> cells{std::string(to_string(row.variant)), format_real(row.effective.lambda1),
                                   format_real(row.effective.lambda2)};
    for (auto& c : metric_cells(row.metrics)) cells.push_back(c);
    table.push_back(cells);
  }
  std::string csv;
  for (const auto& cells : table) {
    for (std::size_t c = 0; c < cells.size(); ++c) csv += (c ? "," : "") + cells[c];
    csv += '\n';
  }
  write_text(out_dir / "ablation.csv", csv);
  write_text(out_dir / "ablation.json", dump_json(j));
  const std::string text = aligned_table(readable(table));
  write_text(out_dir / "ablation.txt", text);
  log << text;
  return rows;
}

SyntheticData cmd_synth(const SyntheticOptions& opts, const fs::path& out_dir, std::ostream& log) {
  SyntheticData data = make_synthetic(opts);
  ensure_dir(out_dir);
  write_synthetic(data, out_dir);
  nlohmann::json run{{"command", "synth"},
                     {"users", opts.users},
                     {"items", opts.items},
                     {"communities", opts.communities},
                     {"noise_fraction", opts.noise_fraction},
                     {"seed", opts.seed},
                     {"items_per_user", opts.items_per_user},
                     {"social_degree", opts.social_degree}};
  write_text(out_dir / "run.json", dump_json(run));
  const auto noisy = std::count(data.edge_is_noise.begin(), data.edge_is_noise.end(), true);
  log << "wrote " << data.raw.interactions.size() << " interactions and " << data.raw.social.size()
      << " social edges (" << noisy << " cross-community) to " << out_dir.string() << '\n';
  return data;
}

DenoisedSocialGraph cmd_denoise(const RunConfig& cfg, const std::optional<fs::path>& checkpoint,
                                const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  ensure_dir(out_dir);
  auto run = run_record("denoise", cfg);
  run["checkpoint"] = checkpoint ? nlohmann::json(checkpoint->string()) : nlohmann::json(nullptr);
  write_text(out_dir / "run.json", dump_json(run));

  const Dataset ds = load_dataset(cfg);
  const auto train = build_interaction_matrix(ds);
  const auto social = build_social_matrix(ds);
  IdvtModel model(train, &social, cfg.hyper, Variant::kFull);
  if (checkpoint) load_checkpoint(model.params(), *checkpoint);
  const auto graph = denoise_graph(social, model.params()[IdvtModel::kUserEmb].value, cfg.hyper.threshold);

  std::ostringstream kept, removed;
  for (const auto& e : graph.edges) {
    auto& out = e.kept ? kept : removed;
    out << ds.user_tokens[e.from] << ' ' << ds.user_tokens[e.to] << ' ' << format_real(e.ic) << '\n';
  }
  write_text(out_dir / "kept_edges.txt", kept.str());
  write_text(out_dir / "removed_edges.txt", removed.str());
  log << "threshold " << format_real(graph.threshold) << ": removed " << graph.removed << " of "
      << graph.edges.size() << " edges (ratio " << format_real(graph.removal_ratio, 4) << ")\n";
  return graph;
}

}  // namespace idvt
