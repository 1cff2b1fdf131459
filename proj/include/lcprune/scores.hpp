#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace lcprune {

using Params = nlohmann::ordered_json;

/// One score per sample plus provenance. `higher_is_easier` fixes which end of
/// the ranking the easy-first selectors keep.
struct ScoreVector {
    std::vector<double> values;
    std::string method;
    Params params = Params::object();
    bool higher_is_easier = true;

    std::size_t size() const { return values.size(); }
};

/// Writes `index,score` CSV (17 significant digits) and a JSON sidecar with
/// method, params, higher_is_easier and the source pack digest.
void write_scores(const ScoreVector& scores, const std::filesystem::path& csv_path,
                  const std::filesystem::path& json_path, const std::string& pack_digest);
std::string scores_csv(const ScoreVector& scores);
std::string scores_sidecar(const ScoreVector& scores, const std::string& pack_digest);

/// Reads a score CSV. If `<csv>.json` or the given sidecar exists its metadata is
/// restored; otherwise method is "external" and higher_is_easier is true.
ScoreVector read_scores(const std::filesystem::path& csv_path);
ScoreVector read_scores(const std::filesystem::path& csv_path, const std::filesystem::path& json_path);

/// Sidecar location convention: scores.csv -> scores.json.
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

}  // namespace lcprune
