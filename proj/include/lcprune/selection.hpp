#pragma once

// Budgeted subset selection. Every selector keeps exactly M = floor(eta * N)
// distinct samples and is deterministic given its inputs and seed.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcprune/clustering.hpp"
#include "lcprune/feature_store.hpp"
#include "lcprune/scores.hpp"

namespace lcprune {

enum class Keep { highest, lowest };

std::string_view to_string(Keep keep);
Keep parse_keep(std::string_view text);
/// The direction that keeps the easiest samples of `scores`.
Keep easiest(const ScoreVector& scores);

struct SelectionResult {
    std::vector<std::size_t> indices;
    double budget_fraction = 1.0;
    std::size_t n_total = 0;
    std::string method;
    Params params = Params::object();
    std::optional<std::uint64_t> seed;

    std::string to_json() const;
    /// One index per line.
    std::string to_text() const;
    static SelectionResult from_json(std::string_view text, const std::string& origin = "selection");
};

/// M = floor(eta * n). eta must lie in (0, 1]. A 1e-9 guard absorbs products
/// such as 0.29 * 100 = 28.999999999999996.
std::size_t budget_count(std::size_t n, double eta);

/// Level-set rule: keep samples strictly beyond `tau` in the kept direction,
/// then fill with samples equal to `tau` in ascending index order up to `count`.
struct LevelSet {
    double tau = 0.0;
    bool keep_below = false;  // true keeps scores below tau (lowest first)
    std::size_t count = 0;

    std::vector<std::size_t> apply(std::span<const double> scores) const;
};

SelectionResult top_k_select(const ScoreVector& scores, double eta, Keep keep);
LevelSet threshold_from_budget(const ScoreVector& scores, double eta, Keep keep);

/// Largest-remainder apportionment of `total` proportional to `sizes`, capped
/// at each size; capped surplus is re-apportioned over the clusters that still
/// have room. Remainder ties prefer the smaller current quota, then lower index.
std::vector<std::size_t> apportion_quotas(std::span<const std::size_t> sizes, std::size_t total);

/// Keeps quota[c] easiest members of each cluster given precomputed
/// assignments. Output is sorted ascending.
std::vector<std::size_t> easiest_per_cluster(const ScoreVector& scores, std::span<const std::uint32_t> assignments,
                                             std::size_t k_clusters, std::size_t total);

struct EasyDiverseOptions {
    std::size_t cluster_layer = 0;
    std::size_t k_clusters = 8;
    double eta = 0.1;
    std::uint64_t seed = 0;
    KmeansOptions kmeans{};
};

/// K-means on the cluster layer, proportional quotas, easiest samples per
/// cluster. `model_out` receives the clustering when non-null.
SelectionResult easy_diverse_select(const FeaturePack& pack, const ScoreVector& scores,
                                    const EasyDiverseOptions& options, ClusterModel* model_out = nullptr);

/// Herding toward the class mean (global mean when labels are absent or
/// per_class is false). Indices are in greedy order, classes ascending.
SelectionResult herding_select(const Matrix& features, const std::vector<std::uint32_t>* labels, double eta,
                               bool per_class);

/// Farthest-first traversal in feature space. `initial` defaults to a seeded
/// uniform pick. Indices are in greedy order.
SelectionResult kcenter_greedy_select(const Matrix& features, double eta, std::uint64_t seed,
                                      std::optional<std::size_t> initial = std::nullopt);

inline constexpr double kProbFloor = 1e-12;

/// KL(p||q) + KL(q||p) with entries floored at kProbFloor.
double symmetric_kl(std::span<const float> p, std::span<const float> q);

/// Farthest-first traversal under symmetric KL between probability rows.
SelectionResult cd_select(const Matrix& probs, double eta, std::uint64_t seed,
                          std::optional<std::size_t> initial = std::nullopt);

SelectionResult random_select(std::size_t n, double eta, std::uint64_t seed);

/// Generic farthest-first traversal over an index set of size n with a
/// symmetric distance callback.
template <typename Distance>
std::vector<std::size_t> farthest_first(std::size_t n, std::size_t count, std::size_t initial, Distance&& dist);

/// Covering radius: max over points of the distance to the nearest center.
double covering_radius(const Matrix& features, std::span<const std::size_t> centers);

}  // namespace lcprune

#include "lcprune/detail/farthest_first.hpp"
