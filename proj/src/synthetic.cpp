#include "lcprune/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "lcprune/error.hpp"
#include "lcprune/evaluation.hpp"
#include "lcprune/rng.hpp"

namespace lcprune {

std::size_t GmmSpec::num_classes() const {
    std::size_t k = 0;
    for (const auto& c : components) k = std::max<std::size_t>(k, c.class_id + 1);
    return k;
}

void GmmSpec::validate() const {
    if (components.empty()) throw DataError("mixture has no components");
    if (dim == 0) throw DataError("mixture dimension must be positive");
    double total = 0.0;
    for (std::size_t i = 0; i < components.size(); ++i) {
        const auto& c = components[i];
        const std::string where = "component " + std::to_string(i);
        if (!(c.weight > 0.0)) throw DataError(where + ": weight must be positive");
        if (c.mean.size() != dim || c.variance.size() != dim) throw DataError(where + ": dimension mismatch");
        for (const double v : c.variance)
            if (!(v > 0.0)) throw DataError(where + ": variance must be positive");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DataError("mixture weights sum to " + std::to_string(total) + ", not 1");
}

GmmSpec reference_gmm(std::uint64_t seed, std::size_t classes, double separation, std::size_t dim) {
    if (classes == 0) throw UsageError("need at least one class");
    if (dim == 0) throw UsageError("need at least one dimension");
    GmmSpec spec;
    spec.dim = dim;
    spec.seed = seed;
    const double offset = separation * (static_cast<double>(classes) - 1.0) / 2.0;
    for (std::size_t c = 0; c < classes; ++c) {
        GmmComponent comp;
        comp.class_id = static_cast<std::uint32_t>(c);
        comp.weight = 1.0 / static_cast<double>(classes);
        comp.mean.assign(dim, 0.0);
        comp.mean[0] = separation * static_cast<double>(c) - offset;
        comp.variance.assign(dim, 1.0);
        spec.components.push_back(std::move(comp));
    }
    return spec;
}

namespace {

double diagonal_normal_pdf(const GmmComponent& c, std::span<const double> z) {
    double log_pdf = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
        const double diff = z[j] - c.mean[j];
        log_pdf += -0.5 * (diff * diff / c.variance[j] + std::log(2.0 * std::numbers::pi * c.variance[j]));
    }
    return std::exp(log_pdf);
}

}  // namespace

Density gmm_density(const GmmSpec& spec, std::span<const double> point) {
    if (point.size() != spec.dim) throw DataError("point dimension does not match the mixture");
    Density out;
    const std::size_t classes = spec.num_classes();
    out.per_class.assign(classes, 0.0);
    std::vector<double> class_weight(classes, 0.0);
    for (const auto& c : spec.components) {
        const double weighted = c.weight * diagonal_normal_pdf(c, point);
        out.total += weighted;
        out.per_class[c.class_id] += weighted;
        class_weight[c.class_id] += c.weight;
    }
    for (std::size_t k = 0; k < classes; ++k)
        if (class_weight[k] > 0.0) out.per_class[k] /= class_weight[k];
    return out;
}

SyntheticPack sample_gmm(const GmmSpec& spec, std::size_t n) {
    spec.validate();
    if (n == 0) throw UsageError("sample count must be positive");
    Rng rng(spec.seed);
    SyntheticPack out;
    out.pack.n_samples = n;
    out.pack.split = Split::unsplit;
    Matrix features(n, spec.dim);
    std::vector<std::uint32_t> labels(n);
    out.density.resize(n);
    out.class_density.resize(n);
    out.component.resize(n);

    std::vector<double> cumulative;
    double running = 0.0;
    for (const auto& c : spec.components) cumulative.push_back(running += c.weight);

    std::vector<double> point(spec.dim);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform() * running;
        std::size_t pick = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                                    cumulative.begin());
        pick = std::min(pick, spec.components.size() - 1);
        const auto& comp = spec.components[pick];
        for (std::size_t j = 0; j < spec.dim; ++j) {
            const auto value = static_cast<float>(comp.mean[j] + std::sqrt(comp.variance[j]) * rng.normal());
            features(i, j) = value;
            point[j] = value;  // densities are evaluated at the stored float32 point
        }
        labels[i] = comp.class_id;
        out.component[i] = pick;
        const auto density = gmm_density(spec, point);
        out.density[i] = density.total;
        out.class_density[i] = density.per_class[comp.class_id];
    }
    out.pack.layers.push_back({"gmm", std::move(features)});
    out.pack.labels = std::move(labels);
    return out;
}

std::string SyntheticPack::densities_csv() const {
    std::string out = "index,p,p_class\n";
    char buf[96];
    for (std::size_t i = 0; i < density.size(); ++i) {
        const int len = std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, density[i], class_density[i]);
        out.append(buf, static_cast<std::size_t>(len));
    }
    return out;
}

std::pair<double, double> Prop31Result::decile_confidence() const {
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rows[a].density < rows[b].density; });
    const std::size_t decile = std::max<std::size_t>(1, rows.size() / 10);
    double low = 0.0, high = 0.0;
    for (std::size_t i = 0; i < decile; ++i) {
        low += rows[order[i]].confidence;
        high += rows[order[rows.size() - 1 - i]].confidence;
    }
    return {high / static_cast<double>(decile), low / static_cast<double>(decile)};
}

Prop31Result prop31_check(const GmmSpec& spec, std::size_t n, const KnnConfig& cfg) {
    Prop31Result result;
    result.data = sample_gmm(spec, n);
    KnnConfig self_cfg = cfg;
    self_cfg.exclude_self = true;
    const auto confidence = layer_confidences(result.data.pack, 0, self_cfg);
    result.rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        result.rows.push_back({i, (*result.data.pack.labels)[i], confidence[i], result.data.density[i],
                               result.data.class_density[i]});
    result.rho = spearman(confidence, result.data.density);
    return result;
}

}  // namespace lcprune
