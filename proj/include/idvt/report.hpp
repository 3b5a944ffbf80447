#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "idvt/social_stats.hpp"
#include "idvt/train.hpp"

namespace idvt {

// {"k", "hit_ratio", "precision", "recall", "ndcg", "seed", "epoch",
//  "variant", "config_digest", "evaluated_users", "skipped_users"}
nlohmann::json to_json(const MetricsReport& report);
nlohmann::json to_json(const StatsReport& report);

// Writes `text` to `path`, throwing IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string dump_json(const nlohmann::json& j);

}  // namespace idvt
