#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcprune/feature_store.hpp"
#include "lcprune/scores.hpp"
#include "lcprune/selection.hpp"

namespace lcprune {

/// 1-based ranks; tied values share the mean of the positions they span.
std::vector<double> rank_vector(std::span<const double> values);

/// Pearson correlation of the fractional-rank vectors. Throws NumericError on
/// length mismatch, fewer than two samples, or a constant input.
double spearman(std::span<const double> a, std::span<const double> b);

/// |A intersect B| / |A union B|; two empty selections count as identical.
double selection_jaccard(const SelectionResult& a, const SelectionResult& b);

struct EvalReport {
    std::optional<double> rho;
    std::vector<std::pair<double, double>> jaccard_at_budget;  // (eta, jaccard)
    std::optional<double> diversity_delta;
    struct BudgetDiversity {
        double eta;
        std::optional<double> delta_a;
        std::optional<double> delta_b;
    };
    std::vector<BudgetDiversity> diversity_at_budget;
    std::vector<std::size_t> class_histogram;
    Params metadata = Params::object();

    std::string to_json() const;
    /// One `metric,value` row per metric.
    std::string to_csv() const;
};

/// Diversity at `layer` (when the selection has at least two members), kept
/// count per class (when the pack is labeled), and the selection's provenance.
EvalReport summarize(const SelectionResult& selection, const FeaturePack& pack, std::size_t layer);

/// Agreement between two score vectors: Spearman rho plus the Jaccard overlap
/// of their easiest-first top-k selections at each budget.
/// When `features` is given, also records the diversity of both selections at
/// each budget.
EvalReport compare_scores(const ScoreVector& a, const ScoreVector& b, std::span<const double> etas,
                          const Matrix* features = nullptr);

}  // namespace lcprune
