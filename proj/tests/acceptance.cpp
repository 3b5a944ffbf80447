// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Experiment settings are pinned below.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "gradient_checks.hpp"
#include "idvt/experiments.hpp"
#include "idvt/graph.hpp"
#include "idvt/report.hpp"
#include "idvt/social_stats.hpp"
#include "idvt/synthetic.hpp"

using namespace idvt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Paths {
  std::string cli;
  std::string unit_tests;
  fs::path work;
};

constexpr std::uint64_t kSeeds[] = {1, 2, 3, 4, 5};

// Settings shared by the synthetic experiments (criteria 4 and 5).
Hyperparams experiment_hyper(std::uint64_t seed) {
  Hyperparams h;
  h.lr = 1e-3;
  h.batch_size = 256;
  h.epochs = 100;
  h.seed = seed;
  return h;
}

SyntheticData planted(std::uint64_t seed) {
  SyntheticOptions o;
  o.users = 400;
  o.items = 600;
  o.communities = 4;
  o.noise_fraction = 0.5;
  o.seed = seed;
  return make_synthetic(o);
}

Dataset planted_split(const SyntheticData& data, std::uint64_t seed) {
  return split(preprocess(data.raw), 0.2, seed);
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream ss;
  ss.precision(precision);
  ss << std::fixed << v;
  return ss.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return status == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------

Outcome gradient_integrity(const Paths&) {
  double worst = 0;
  std::string worst_case;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto rep = idvt::testing::model_gradient_errors(seed);
    for (const auto& [term, err] : rep.errors) {
      if (err >= worst) {
        worst = err;
        worst_case = std::string(idvt::testing::term_name(term)) + " n=" + std::to_string(rep.n) +
                     " m=" + std::to_string(rep.m) + " d=" + std::to_string(rep.d);
      }
    }
  }
  return {worst < 1e-4, "10 configs, max rel err " + fmt(worst * 1e6, 3) + "e-6 (" + worst_case + ")"};
}

Outcome oracle_equivalence(const Paths& p) {
  const int rc = run_command(p.unit_tests + " --gtest_brief=1 --gtest_filter='Oracle.*:Property.*' > " +
                             (p.work / "oracles.log").string() + " 2>&1");
  return {rc == 0, "stats, IC scores, LightGCN, GAT attention and evaluate vs brute force; log " +
                       (p.work / "oracles.log").string()};
}

Outcome denoise_monotonicity(const Paths& p) {
  const SyntheticData data = planted(1);
  const Dataset ds = planted_split(data, 1);
  TrainOptions o;
  o.hyper = experiment_hyper(1);
  o.hyper.epochs = 5;
  o.val_fraction = 0.0;
  const TrainResult trained = train_and_evaluate(ds, o);
  const auto social = build_social_matrix(ds);
  const std::vector<double> grid{0.0, 0.2, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.01};
  std::vector<double> ratios;
  std::set<IndexPair> previous;
  bool nested = true;
  for (double t : grid) {
    const auto g = denoise_graph(social, trained.params[IdvtModel::kUserEmb].value, t);
    std::set<IndexPair> removed;
    for (const auto& e : g.edges)
      if (!e.kept) removed.emplace(e.from, e.to);
    nested = nested && std::includes(removed.begin(), removed.end(), previous.begin(), previous.end());
    previous = std::move(removed);
    ratios.push_back(g.removal_ratio);
  }

  // The same shape through the sweep command.
  const fs::path data_dir = p.work / "monotone_data";
  write_synthetic(data, data_dir);
  RunConfig cfg;
  cfg.data_dir = data_dir.string();
  cfg.hyper = experiment_hyper(1);
  cfg.hyper.epochs = 1;
  cfg.val_fraction = 0.0;
  std::ostringstream log;
  const auto rows = cmd_sweep(cfg, "threshold", {"0", "0.3", "0.5", "0.7", "1.01"}, p.work / "monotone_sweep", log);
  std::vector<double> sweep;
  for (const auto& r : rows) sweep.push_back(r.removal_ratio.value_or(-1));

  const bool monotone = std::is_sorted(ratios.begin(), ratios.end()) && std::is_sorted(sweep.begin(), sweep.end());
  std::string detail = "ratios";
  for (double r : ratios) detail += " " + fmt(r, 3);
  detail += "; sweep";
  for (double r : sweep) detail += " " + fmt(r, 3);
  return {monotone && nested && ratios.front() == 0.0 && ratios.back() == 1.0, detail};
}

Outcome planted_noise_recovery(const Paths&) {
  bool noise_ok = true;
  double cross_sum = 0, intra_sum = 0;
  std::string noise_detail;
  for (std::uint64_t seed : kSeeds) {
    const SyntheticData data = planted(seed);
    const Dataset ds = planted_split(data, seed);
    const auto social = build_social_matrix(ds);
    const double measured = noise_ratio(build_interaction_matrix(ds, InteractionSource::kAll), social);
    noise_ok = noise_ok && std::abs(measured - 0.5) <= 0.05;
    noise_detail += " " + fmt(measured, 3);

    std::set<IndexPair> noisy;
    for (std::size_t e = 0; e < data.raw.social.size(); ++e)
      if (data.edge_is_noise[e])
        noisy.emplace(ds.user_index.at(data.raw.social[e].truster), ds.user_index.at(data.raw.social[e].trustee));

    TrainOptions o;
    o.hyper = experiment_hyper(seed);
    o.hyper.epochs = 20;
    o.val_fraction = 0.0;
    const TrainResult trained = train_and_evaluate(ds, o);
    const Matrix& emb = trained.params[IdvtModel::kUserEmb].value;

    // Threshold at the median IC so that about half the edges go.
    std::vector<double> ics;
    for (const auto& e : denoise_graph(social, emb, 0.0).edges) ics.push_back(e.ic);
    std::sort(ics.begin(), ics.end());
    const auto g = denoise_graph(social, emb, ics[ics.size() / 2]);
    double cross = 0, cross_removed = 0, intra = 0, intra_removed = 0;
    for (const auto& e : g.edges) {
      const bool is_noise = noisy.contains({e.from, e.to});
      (is_noise ? cross : intra) += 1;
      if (!e.kept) (is_noise ? cross_removed : intra_removed) += 1;
    }
    cross_sum += cross_removed / cross;
    intra_sum += intra_removed / intra;
  }
  const double n = static_cast<double>(std::size(kSeeds));
  const double cross_rate = cross_sum / n, intra_rate = intra_sum / n;
  const double ratio = cross_rate / intra_rate;
  return {noise_ok && ratio >= 1.5,
          "noise ratios" + noise_detail + "; removal cross " + fmt(cross_rate, 3) + " vs intra " +
              fmt(intra_rate, 3) + " (x" + fmt(ratio, 2) + ")"};
}

Outcome directional_ablation(const Paths&) {
  double full = 0, no_both = 0, bpr_mf = 0;
  for (std::uint64_t seed : kSeeds) {
    const Dataset ds = planted_split(planted(seed), seed);
    TrainOptions o;
    o.hyper = experiment_hyper(seed);
    full += run_variant(Variant::kFull, ds, o).ndcg;
    no_both += run_variant(Variant::kNoBoth, ds, o).ndcg;
    bpr_mf += run_variant(Variant::kBprMf, ds, o).ndcg;
  }
  const double n = static_cast<double>(std::size(kSeeds));
  full /= n;
  no_both /= n;
  bpr_mf /= n;
  return {full >= no_both && no_both >= bpr_mf,
          "mean NDCG@5 full " + fmt(full) + " >= no_both " + fmt(no_both) + " >= bpr_mf " + fmt(bpr_mf)};
}

Outcome determinism(const Paths& p) {
  const fs::path data_dir = p.work / "determinism_data";
  SyntheticOptions so;
  so.users = 120;
  so.items = 180;
  so.communities = 3;
  write_synthetic(make_synthetic(so), data_dir);
  const fs::path config = p.work / "determinism.cfg";
  std::ofstream(config) << "data_dir = " << data_dir.string() << "\ndim = 16\nepochs = 4\nbatch_size = 256\n";

  auto train = [&](const std::string& out, const std::string& extra) {
    return run_command(p.cli + " train --config " + config.string() + " --seed 11 --out " + (p.work / out).string() +
                       extra + " > " + (p.work / (out + ".log")).string() + " 2>&1");
  };
  if (train("run_a", "") != 0 || train("run_b", "") != 0 || train("run_threads", " --set eval_threads=4") != 0)
    return {false, "idvt train failed; see logs in " + p.work.string()};

  const bool metrics_same = slurp(p.work / "run_a" / "metrics.json") == slurp(p.work / "run_b" / "metrics.json");
  const bool ckpt_same = slurp(p.work / "run_a" / "checkpoint.bin") == slurp(p.work / "run_b" / "checkpoint.bin");
  const bool threads_same =
      slurp(p.work / "run_a" / "metrics.json") == slurp(p.work / "run_threads" / "metrics.json");

  // Thread independence on one set of embeddings, for several counts.
  Rng rng(5);
  const Matrix users = idvt::testing::random_matrix(97, 8, rng), items = idvt::testing::random_matrix(71, 8, rng);
  const auto exclude = idvt::testing::random_interactions(97, 71, 0.1, rng);
  const auto test = idvt::testing::random_interactions(97, 71, 0.05, rng);
  EvalOptions eo;
  const std::string reference = dump_json(to_json(evaluate(users, items, exclude, test, eo)));
  bool eval_same = true;
  for (std::size_t threads : {2u, 3u, 7u, 16u}) {
    eo.threads = threads;
    eval_same = eval_same && dump_json(to_json(evaluate(users, items, exclude, test, eo))) == reference;
  }
  return {metrics_same && ckpt_same && threads_same && eval_same,
          std::string("metrics.json ") + (metrics_same ? "identical" : "DIFFER") + ", checkpoint.bin " +
              (ckpt_same ? "identical" : "DIFFER") + ", eval threads 1/4 via CLI " +
              (threads_same ? "identical" : "DIFFER") + ", threads 1/2/3/7/16 " + (eval_same ? "identical" : "DIFFER")};
}

Outcome degenerate_identities(const Paths&) {
  SyntheticOptions so;
  so.users = 120;
  so.items = 180;
  so.communities = 3;
  const Dataset ds = split(preprocess(make_synthetic(so).raw), 0.2, 3);
  TrainOptions o;
  o.hyper.dim = 16;
  o.hyper.epochs = 8;
  o.hyper.batch_size = 256;
  o.hyper.lr = 0.01;
  o.hyper.lambda1 = o.hyper.lambda2 = 0.0;
  const auto full = run_variant(Variant::kFull, ds, o);
  const auto no_both = run_variant(Variant::kNoBoth, ds, o);
  bool same = full.ndcg == no_both.ndcg && full.recall == no_both.recall && full.precision == no_both.precision &&
              full.hit_ratio == no_both.hit_ratio && full.per_user.size() == no_both.per_user.size();
  for (std::size_t k = 0; same && k < full.per_user.size(); ++k)
    same = full.per_user[k].ndcg == no_both.per_user[k].ndcg && full.per_user[k].hits == no_both.per_user[k].hits;

  // Threshold 0 keeps every edge; a zero GAT weight silences the social
  // encoder, leaving plain LightGCN for users and items.
  Hyperparams h = o.hyper;
  h.threshold = 0.0;
  const auto train = build_interaction_matrix(ds);
  const auto social = build_social_matrix(ds);
  IdvtModel model(train, &social, h, Variant::kFull);
  model.params()[IdvtModel::kGatW].value.fill(0.0);
  Tape t;
  Var eu = t.constant(model.params()[IdvtModel::kUserEmb].value);
  Var ei = t.constant(model.params()[IdvtModel::kItemEmb].value);
  const auto neighbors = with_self_loops(denoise_graph(social, eu.value(), 0.0).kept_matrix());
  const auto g = global_encode(eu, ei, neighbors, model.adjacency(), t.constant(model.params()[IdvtModel::kGatW].value),
                               t.constant(model.params()[IdvtModel::kGatAttn].value), h.layers);
  const auto [lu, li] = lightgcn_propagate(eu, ei, model.adjacency(), h.layers);
  const double diff = std::max(max_abs_diff(g.fused_users.value(), lu.value()), max_abs_diff(g.items.value(), li.value()));
  return {same && diff <= 1e-10, std::string("lambda1=lambda2=0 vs no_both ") + (same ? "identical" : "DIFFER") +
                                     "; zero-GAT max diff " + fmt(diff * 1e10, 3) + "e-10"};
}

Outcome toy_fidelity(const Paths& p) {
  const auto r = SparseBinaryMatrix::from_pairs(5, 4, std::vector<IndexPair>{{0, 0}, {1, 0}, {2, 1}, {3, 2}, {4, 1}});
  const auto s = SparseBinaryMatrix::from_pairs(5, 5, std::vector<IndexPair>{{0, 1}, {2, 4}, {0, 3}, {1, 2}});
  const double toy = noise_ratio(r, s);
  const int rc = run_command(p.unit_tests + " --gtest_brief=1 > " + (p.work / "unit.log").string() + " 2>&1");
  return {rc == 0 && toy == 0.5,
          "4-edge/2-noisy graph noise_ratio " + fmt(toy, 2) + "; unit suite " + (rc == 0 ? "green" : "RED") +
              " (log " + (p.work / "unit.log").string() + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  Paths paths;
  std::string work = (fs::temp_directory_path() / "idvt_acceptance").string();
  std::vector<int> only;
  app.add_option("--cli", paths.cli, "idvt executable")->required();
  app.add_option("--unit-tests", paths.unit_tests, "unit test executable")->required();
  app.add_option("--work", work, "scratch directory");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);
  paths.work = work;
  fs::remove_all(paths.work);
  fs::create_directories(paths.work);

  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome(const Paths&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient integrity", 30, gradient_integrity},
      {2, "oracle equivalence", 60, oracle_equivalence},
      {3, "denoising monotonicity", 60, denoise_monotonicity},
      {4, "planted-noise recovery", 600, planted_noise_recovery},
      {5, "directional ablation", 1800, directional_ablation},
      {6, "determinism", 600, determinism},
      {7, "degenerate-config identities", 600, degenerate_identities},
      {8, "toy-value fidelity", 600, toy_fidelity},
  };

  bool all = true;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run(paths);
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs <= c.budget_seconds;
    const bool pass = out.pass && in_budget;
    all = all && pass;
    std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << out.detail << " ["
              << fmt(secs, 1) << " s of " << fmt(c.budget_seconds, 0) << " s]" << (in_budget ? "" : " OVER BUDGET")
              << std::endl;
  }
  return all ? 0 : 1;
}
