#include "lcprune/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "lcprune/error.hpp"
#include "lcprune/rng.hpp"
#include "parallel.hpp"

namespace lcprune {

namespace {

std::vector<std::size_t> kmeanspp_init(const Matrix& x, std::size_t k, Rng& rng) {
    const std::size_t n = x.rows;
    std::vector<std::size_t> chosen{static_cast<std::size_t>(rng.below(n))};
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::vector<bool> taken(n, false);
    taken[chosen[0]] = true;
    while (chosen.size() < k) {
        const auto last = x.row(chosen.back());
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_l2(x.row(i), last));
            total += d2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cumulative = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) continue;
                cumulative += d2[i];
                pick = i;
                if (cumulative > target) break;
            }
        } else {
            // Every point coincides with a chosen center.
            for (std::size_t i = 0; i < n && pick == n; ++i)
                if (!taken[i]) pick = i;
        }
        taken[pick] = true;
        chosen.push_back(pick);
    }
    return chosen;
}

// Nearest centroid per point, ties to the lower id. Returns the inertia.
double assign(const Matrix& x, const MatrixD& centroids, std::vector<std::uint32_t>& assignments,
              std::vector<double>& cost) {
    detail::parallel_for(x.rows, [&](std::size_t i) {
        const auto row = x.row(i);
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_c = 0;
        for (std::size_t c = 0; c < centroids.rows; ++c) {
            const double d = squared_l2(row, centroids.row(c));
            if (d < best) {
                best = d;
                best_c = static_cast<std::uint32_t>(c);
            }
        }
        assignments[i] = best_c;
        cost[i] = best;
    });
    double inertia = 0.0;
    for (const double c : cost) inertia += c;
    return inertia;
}

// Gives each empty cluster the point farthest from its centroid, taken from a
// cluster that keeps at least one member.
void repair_empty(const Matrix& x, MatrixD& centroids, std::vector<std::uint32_t>& assignments,
                  std::vector<double>& cost) {
    std::vector<std::size_t> sizes(centroids.rows, 0);
    for (const auto a : assignments) ++sizes[a];
    for (std::size_t c = 0; c < centroids.rows; ++c) {
        if (sizes[c] != 0) continue;
        std::size_t victim = x.rows;
        double worst = -1.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            if (sizes[assignments[i]] < 2) continue;
            if (cost[i] > worst) {
                worst = cost[i];
                victim = i;
            }
        }
        --sizes[assignments[victim]];
        ++sizes[c];
        assignments[victim] = static_cast<std::uint32_t>(c);
        cost[victim] = 0.0;
        const auto src = x.row(victim);
        auto dst = centroids.row(c);
        for (std::size_t j = 0; j < x.cols; ++j) dst[j] = src[j];
    }
}

}  // namespace

std::vector<std::size_t> ClusterModel::cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (const auto a : assignments) ++sizes[a];
    return sizes;
}

std::string ClusterModel::to_json() const {
    nlohmann::ordered_json j;
    j["k"] = k;
    j["seed"] = seed;
    j["iterations_run"] = iterations_run;
    j["inertia"] = inertia;
    j["centroids"] = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < centroids.rows; ++c) {
        const auto r = centroids.row(c);
        j["centroids"].push_back(std::vector<double>(r.begin(), r.end()));
    }
    j["assignments"] = assignments;
    return j.dump() + "\n";
}

double compute_inertia(const Matrix& features, const MatrixD& centroids, std::span<const std::uint32_t> assignments) {
    double total = 0.0;
    for (std::size_t i = 0; i < features.rows; ++i) total += squared_l2(features.row(i), centroids.row(assignments[i]));
    return total;
}

ClusterModel kmeans(const Matrix& features, std::size_t k, std::uint64_t seed, const KmeansOptions& options) {
    const std::size_t n = features.rows;
    const std::size_t d = features.cols;
    if (k < 1) throw NumericError("k-means needs at least one cluster");
    if (k > n) throw NumericError("k-means with " + std::to_string(k) + " clusters exceeds " + std::to_string(n) + " samples");

    Rng rng(seed);
    ClusterModel model;
    model.k = k;
    model.seed = seed;
    model.centroids = MatrixD(k, d);
    const auto init = kmeanspp_init(features, k, rng);
    for (std::size_t c = 0; c < k; ++c) {
        const auto src = features.row(init[c]);
        auto dst = model.centroids.row(c);
        for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
    }

    model.assignments.assign(n, 0);
    std::vector<double> cost(n, 0.0);
    MatrixD next(k, d);
    std::vector<std::size_t> counts(k);
    for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
        model.inertia_trace.push_back(assign(features, model.centroids, model.assignments, cost));
        repair_empty(features, model.centroids, model.assignments, cost);

        std::fill(next.values.begin(), next.values.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = model.assignments[i];
            ++counts[c];
            const auto src = features.row(i);
            auto dst = next.row(c);
            for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
        }
        double movement = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            auto dst = next.row(c);
            for (std::size_t j = 0; j < d; ++j) dst[j] /= static_cast<double>(counts[c]);
            movement = std::max(movement, l2_distance<double, double>(dst, model.centroids.row(c)));
        }
        std::swap(model.centroids, next);
        model.iterations_run = iter + 1;
        if (movement < options.tol) break;
    }

    model.inertia_trace.push_back(assign(features, model.centroids, model.assignments, cost));
    repair_empty(features, model.centroids, model.assignments, cost);
    model.inertia = compute_inertia(features, model.centroids, model.assignments);
    return model;
}

double diversity(const Matrix& features, std::span<const std::size_t> subset) {
    if (subset.size() < 2) throw NumericError("diversity needs a subset of at least 2 samples");
    std::vector<bool> seen(features.rows, false);
    for (const auto i : subset) {
        if (i >= features.rows) throw NumericError("subset index " + std::to_string(i) + " out of range");
        if (seen[i]) throw NumericError("duplicate subset index " + std::to_string(i));
        seen[i] = true;
    }
    double total = 0.0;
    for (std::size_t a = 0; a < subset.size(); ++a) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < subset.size(); ++b) {
            if (a == b) continue;
            nearest = std::min(nearest, l2_distance(features.row(subset[a]), features.row(subset[b])));
        }
        total += nearest;
    }
    return total / static_cast<double>(subset.size());
}

}  // namespace lcprune
