#pragma once

// Learning-Complexity scoring. For classification the score of a sample is the
// mean, over encoder layers, of an inverse-distance-weighted k-nearest-neighbor
// confidence in its own label; for language-model data it is the mean inverse
// perplexity over dropout subnets. Also hosts the uncertainty baselines and the
// validation-driven choices of k and of the clustering layer.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lcprune/feature_store.hpp"
#include "lcprune/scores.hpp"

namespace lcprune {

struct KnnConfig {
    std::size_t k = 10;
    bool exclude_self = true;
    double tie_epsilon = 1e-12;  // added to every distance before inversion
    bool l2_normalize = false;   // normalize feature rows before searching
};

inline const std::vector<std::size_t> kDefaultKCandidates = {1, 3, 5, 10, 20, 50};

struct Neighbor {
    std::size_t index;
    double distance;
};

/// The k nearest rows of `refs` to `query`, ordered by (distance, index).
/// `skip` removes one reference row (the query itself when self-scoring).
std::vector<Neighbor> nearest_neighbors(std::span<const float> query, const Matrix& refs, std::size_t k,
                                        std::optional<std::size_t> skip = std::nullopt);

/// Weighted share of the k neighbors that carry `query_label`; weights are
/// 1 / (distance + tie_epsilon). `self_index` is the query's row in `refs` and
/// is excluded when cfg.exclude_self is set.
double knn_confidence(std::span<const float> query, std::uint32_t query_label, const Matrix& refs,
                      std::span<const std::uint32_t> ref_labels, const KnnConfig& cfg,
                      std::optional<std::size_t> self_index = std::nullopt);

/// Every sample of the pack scored against the rest of the pack at one layer.
std::vector<double> layer_confidences(const FeaturePack& pack, std::size_t layer_index, const KnnConfig& cfg);

/// Mean of layer_confidences over `layer_subset` (default: all layers).
ScoreVector lc_classification_score(const FeaturePack& pack, const KnnConfig& cfg,
                                    std::optional<std::vector<std::size_t>> layer_subset = std::nullopt);

/// Mean reciprocal perplexity across subnets, one row per sample.
ScoreVector lc_regression_score(const Matrix& perplexities);

/// Fraction of val samples whose weighted k-NN vote over the train pack picks
/// the true label (class ties go to the lower class id).
double knn_val_accuracy(const FeaturePack& train, const FeaturePack& val, std::size_t layer_index,
                        const KnnConfig& cfg);

/// Best k on the validation pack. Candidates larger than the train pack are
/// skipped; accuracy ties go to the smaller k.
std::size_t tune_k(const FeaturePack& train, const FeaturePack& val, std::size_t layer_index,
                   std::span<const std::size_t> candidates, const KnnConfig& base = {});

/// Best-validating layer among all but the last (0-based); layer 0 when the
/// pack has a single layer. Ties go to the shallower layer.
std::size_t select_cluster_layer(const FeaturePack& train, const FeaturePack& val, const KnnConfig& cfg);

// Uncertainty baselines over softmax rows; higher means more uncertain.
ScoreVector least_confidence_score(const Matrix& probs);
ScoreVector entropy_score(const Matrix& probs);
ScoreVector margin_score(const Matrix& probs);

/// Copy of `m` with each row scaled to unit L2 norm (zero rows left as is).
Matrix l2_normalized(const Matrix& m);

}  // namespace lcprune
