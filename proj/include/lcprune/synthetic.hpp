#pragma once

// Diagonal-covariance Gaussian mixtures with exact densities, used to check
// that weighted k-NN confidence concentrates where the data density is high.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lcprune/feature_store.hpp"
#include "lcprune/knn_scoring.hpp"

namespace lcprune {

struct GmmComponent {
    std::uint32_t class_id = 0;
    double weight = 1.0;
    std::vector<double> mean;
    std::vector<double> variance;  // diagonal
};

struct GmmSpec {
    std::vector<GmmComponent> components;
    std::size_t dim = 0;
    std::uint64_t seed = 0;

    std::size_t num_classes() const;
    /// Throws DataError unless weights are positive and sum to 1 (1e-9),
    /// variances are positive, and every vector has `dim` entries.
    void validate() const;
};

/// Two classes in `dim` dimensions, one unit-variance component each, means at
/// -separation/2 and +separation/2 along the first axis, equal weights. With
/// `classes` > 2 further classes are spaced `separation` apart on that axis.
GmmSpec reference_gmm(std::uint64_t seed = 7, std::size_t classes = 2, double separation = 6.0, std::size_t dim = 2);

struct Density {
    double total = 0.0;             // p(z)
    std::vector<double> per_class;  // p_i(z), each a normalized class density
};

Density gmm_density(const GmmSpec& spec, std::span<const double> point);

struct SyntheticPack {
    FeaturePack pack;  // one layer, labels = generating component's class
    std::vector<double> density;
    std::vector<double> class_density;  // p_label(z)
    std::vector<std::size_t> component;

    /// `index,p,p_class` with 17 significant digits.
    std::string densities_csv() const;
};

SyntheticPack sample_gmm(const GmmSpec& spec, std::size_t n);

struct Prop31Row {
    std::size_t index;
    std::uint32_t label;
    double confidence;
    double density;
    double class_density;
};

struct Prop31Result {
    double rho = 0.0;
    std::vector<Prop31Row> rows;
    SyntheticPack data;

    /// Mean confidence over the top and bottom density deciles.
    std::pair<double, double> decile_confidence() const;
};

/// Samples the spec, scores every sample against the rest with weighted k-NN
/// (self excluded), and correlates confidence with the true density.
Prop31Result prop31_check(const GmmSpec& spec, std::size_t n, const KnnConfig& cfg);

}  // namespace lcprune
