#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lcprune/matrix.hpp"

namespace lcprune {

struct KmeansOptions {
    std::size_t max_iters = 300;
    double tol = 1e-4;  // max centroid movement (L2) that counts as converged
};

struct ClusterModel {
    std::size_t k = 0;
    MatrixD centroids;                    // k x d
    std::vector<std::uint32_t> assignments;
    double inertia = 0.0;
    std::size_t iterations_run = 0;
    std::uint64_t seed = 0;
    std::vector<double> inertia_trace;  // inertia after each assignment step

    std::vector<std::size_t> cluster_sizes() const;
    std::string to_json() const;
};

/// Lloyd's algorithm from a seeded k-means++ start. Assignment ties go to the
/// lower centroid id; an emptied cluster takes over the point farthest from
/// its current centroid.
ClusterModel kmeans(const Matrix& features, std::size_t k, std::uint64_t seed, const KmeansOptions& options = {});

/// Within-cluster sum of squared distances for the given assignment.
double compute_inertia(const Matrix& features, const MatrixD& centroids, std::span<const std::uint32_t> assignments);

/// Mean, over subset members, of the distance to the nearest other member.
double diversity(const Matrix& features, std::span<const std::size_t> subset);

}  // namespace lcprune
