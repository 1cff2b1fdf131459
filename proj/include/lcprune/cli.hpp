#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lcprune::cli {

inline const std::vector<std::size_t> kDefaultClusterCandidates = {8, 12, 16, 20, 24};
inline const std::vector<double> kDefaultEtaSweep = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

struct ScoreOptions {
    std::filesystem::path train;
    std::optional<std::filesystem::path> val;
    std::string method = "lc";
    std::optional<std::size_t> k;
    std::vector<std::size_t> k_candidates;
    std::optional<std::vector<std::size_t>> layers;
    std::optional<std::size_t> tune_layer;
    bool l2_normalize = false;
    double tie_epsilon = 1e-12;
    std::filesystem::path out;
};

struct SelectOptions {
    std::filesystem::path train;
    std::optional<std::filesystem::path> val;
    std::optional<std::filesystem::path> scores;
    std::string method = "lc";
    std::vector<double> etas;
    std::optional<std::size_t> clusters;
    std::vector<std::size_t> cluster_candidates;
    std::optional<std::size_t> layer;
    std::optional<std::uint64_t> seed;
    std::string keep = "easiest";
    std::optional<std::size_t> initial;
    std::size_t knn_k = 10;
    bool per_class = true;
    std::filesystem::path out;
};

struct EvalOptions {
    std::filesystem::path a;
    std::filesystem::path b;
    std::vector<double> etas = kDefaultEtaSweep;
    std::optional<std::filesystem::path> train;
    std::size_t layer = 0;
    std::filesystem::path out;
};

struct SynthOptions {
    std::size_t n = 2000;
    std::size_t k = 10;
    std::size_t classes = 2;
    double separation = 6.0;
    std::size_t dim = 2;
    std::optional<std::uint64_t> seed;
    double tie_epsilon = 1e-12;
    std::filesystem::path out;
};

/// Each command writes its artifacts into `out` only once all of them exist.
/// Errors are thrown as lcprune::Error.
void cmd_score(const ScoreOptions& options, std::ostream& log);
void cmd_select(const SelectOptions& options, std::ostream& log);
void cmd_eval(const EvalOptions& options, std::ostream& log);
void cmd_synth(const SynthOptions& options, std::ostream& log);

/// File-name tag for a budget, e.g. 0.1 -> "0.1".
std::string eta_tag(double eta);

/// Parses arguments (args[0] is the program name) and dispatches. Returns the
/// process exit code: 0 success, 2 usage, 3 data, 4 numeric.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lcprune::cli
