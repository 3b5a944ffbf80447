#include "idvt/report.hpp"

#include <fstream>

#include "idvt/error.hpp"

namespace idvt {

nlohmann::json to_json(const MetricsReport& r) {
  return nlohmann::json{{"k", r.k},
                        {"hit_ratio", r.hit_ratio},
                        {"precision", r.precision},
                        {"recall", r.recall},
                        {"ndcg", r.ndcg},
                        {"seed", r.seed},
                        {"epoch", r.epoch},
                        {"variant", r.variant},
                        {"config_digest", r.config_digest},
                        {"evaluated_users", r.evaluated_users},
                        {"skipped_users", r.skipped_users}};
}

nlohmann::json to_json(const StatsReport& r) {
  auto optional_value = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return nlohmann::json{{"noise_ratio", r.noise_ratio},
                        {"soc_ave_int", optional_value(r.soc_ave_int)},
                        {"col_ave_int", optional_value(r.col_ave_int)},
                        {"counted_social_pairs", r.counted_social_pairs},
                        {"noisy_social_pairs", r.noisy_social_pairs},
                        {"counted_collab_pairs", r.counted_collab_pairs}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace idvt
