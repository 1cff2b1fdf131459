#pragma once

// Test fixtures and brute-force oracles. The oracles deliberately avoid the
// library's code paths (no partial sorts, no shared distance helpers).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "lcprune/feature_store.hpp"
#include "lcprune/matrix.hpp"

namespace lcprune::testing {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("lcprune-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline Matrix make_matrix(const std::vector<std::vector<float>>& rows) {
    Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

inline Matrix random_matrix(std::mt19937_64& gen, std::size_t n, std::size_t d, float lo = -1.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> dist(lo, hi);
    Matrix m(n, d);
    for (auto& v : m.values) v = dist(gen);
    return m;
}

inline std::vector<std::uint32_t> random_labels(std::mt19937_64& gen, std::size_t n, std::uint32_t classes) {
    std::uniform_int_distribution<std::uint32_t> dist(0, classes - 1);
    std::vector<std::uint32_t> out(n);
    for (auto& v : out) v = dist(gen);
    return out;
}

inline FeaturePack make_pack(std::vector<Matrix> layers, std::vector<std::uint32_t> labels) {
    FeaturePack pack;
    pack.n_samples = layers.at(0).rows;
    for (std::size_t l = 0; l < layers.size(); ++l) pack.layers.push_back({"layer" + std::to_string(l), std::move(layers[l])});
    pack.labels = std::move(labels);
    return pack;
}

/// Two isotropic Gaussian blobs in 2-D; labels follow the blob.
inline FeaturePack two_blob_pack(std::uint64_t seed, std::size_t per_blob, float sigma, float cx0, float cy0, float cx1,
                                 float cy1) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<float> noise(0.0f, sigma);
    Matrix m(2 * per_blob, 2);
    std::vector<std::uint32_t> labels(2 * per_blob);
    for (std::size_t i = 0; i < 2 * per_blob; ++i) {
        const bool second = i >= per_blob;
        m(i, 0) = (second ? cx1 : cx0) + noise(gen);
        m(i, 1) = (second ? cy1 : cy0) + noise(gen);
        labels[i] = second ? 1 : 0;
    }
    return make_pack({std::move(m)}, std::move(labels));
}

inline double oracle_distance(const Matrix& m, std::size_t a, const float* q) {
    long double acc = 0.0L;
    for (std::size_t j = 0; j < m.cols; ++j) {
        const long double diff = static_cast<long double>(m(a, j)) - static_cast<long double>(q[j]);
        acc += diff * diff;
    }
    return static_cast<double>(std::sqrt(acc));
}

/// Exhaustive weighted k-NN confidence: sort every candidate by (distance, index).
inline double oracle_knn_confidence(const float* query, std::uint32_t label, const Matrix& refs,
                                    const std::vector<std::uint32_t>& ref_labels, std::size_t k, double eps,
                                    long skip = -1) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t j = 0; j < refs.rows; ++j)
        if (static_cast<long>(j) != skip) all.emplace_back(oracle_distance(refs, j, query), j);
    std::sort(all.begin(), all.end());
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
        const double w = 1.0 / (all[t].first + eps);
        den += w;
        if (ref_labels[all[t].second] == label) num += w;
    }
    return num / den;
}

/// Optimal k-center radius by enumerating every center subset of size m.
inline double oracle_optimal_kcenter(const Matrix& x, std::size_t m) {
    const std::size_t n = x.rows;
    double best = std::numeric_limits<double>::infinity();
    std::vector<bool> mask(n, false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(m), true);
    do {
        double radius = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < n; ++c)
                if (mask[c]) nearest = std::min(nearest, oracle_distance(x, c, &x.values[i * x.cols]));
            radius = std::max(radius, nearest);
        }
        best = std::min(best, radius);
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return best;
}

/// Herding with the weight vector rebuilt from scratch at every step:
/// w_t = (t + 1) * mean - sum of the t points chosen so far.
inline std::vector<std::size_t> oracle_herding(const Matrix& x, const std::vector<std::size_t>& members, std::size_t m) {
    const std::size_t d = x.cols;
    std::vector<double> mean(d, 0.0);
    for (const auto i : members)
        for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j) / static_cast<double>(members.size());
    std::vector<std::size_t> chosen;
    for (std::size_t t = 0; t < m; ++t) {
        std::vector<double> w(d);
        for (std::size_t j = 0; j < d; ++j) {
            w[j] = static_cast<double>(t + 1) * mean[j];
            for (const auto s : chosen) w[j] -= x(s, j);
        }
        std::size_t best = 0;
        double best_dot = -std::numeric_limits<double>::infinity();
        for (const auto i : members) {
            if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += w[j] * x(i, j);
            if (dot > best_dot + 1e-12 || (std::abs(dot - best_dot) <= 1e-12 && i < best)) {
                best_dot = dot;
                best = i;
            }
        }
        chosen.push_back(best);
    }
    return chosen;
}

/// Fractional ranks by counting: rank = #less + (#equal + 1) / 2.
inline std::vector<double> oracle_ranks(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t less = 0, equal = 0;
        for (const double u : v) {
            if (u < v[i]) ++less;
            if (u == v[i]) ++equal;
        }
        r[i] = static_cast<double>(less) + (static_cast<double>(equal) + 1.0) / 2.0;
    }
    return r;
}

}  // namespace lcprune::testing
