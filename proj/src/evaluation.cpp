#include "lcprune/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "lcprune/clustering.hpp"
#include "lcprune/error.hpp"

namespace lcprune {

namespace {

std::string format_double(double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(len));
}

std::string format_eta(double eta) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%g", eta);
    return std::string(buf, static_cast<std::size_t>(len));
}

}  // namespace

std::vector<double> rank_vector(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t start = 0;
    while (start < n) {
        std::size_t end = start + 1;
        while (end < n && values[order[end]] == values[order[start]]) ++end;
        // Positions start+1 .. end share their mean.
        const double shared = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
        for (std::size_t i = start; i < end; ++i) ranks[order[i]] = shared;
        start = end;
    }
    return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw NumericError("spearman: length mismatch (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                           ")");
    if (a.size() < 2) throw NumericError("spearman: need at least two samples");
    const auto ra = rank_vector(a);
    const auto rb = rank_vector(b);
    const double n = static_cast<double>(a.size());
    // Mean of ranks 1..n is (n + 1) / 2 regardless of ties.
    const double mean = (n + 1.0) / 2.0;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        const double da = ra[i] - mean;
        const double db = rb[i] - mean;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va == 0.0 || vb == 0.0) throw NumericError("spearman: constant input vector has undefined rank correlation");
    const double rho = cov / std::sqrt(va * vb);
    return std::clamp(rho, -1.0, 1.0);
}

double selection_jaccard(const SelectionResult& a, const SelectionResult& b) {
    std::vector<std::size_t> x = a.indices, y = b.indices;
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    std::vector<std::size_t> both;
    std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(both));
    const std::size_t unioned = x.size() + y.size() - both.size();
    if (unioned == 0) return 1.0;
    return static_cast<double>(both.size()) / static_cast<double>(unioned);
}

EvalReport summarize(const SelectionResult& selection, const FeaturePack& pack, std::size_t layer) {
    EvalReport report;
    if (selection.indices.size() >= 2) report.diversity_delta = diversity(pack.layer(layer).features, selection.indices);
    if (pack.labels) {
        report.class_histogram.assign(pack.num_classes(), 0);
        for (const auto i : selection.indices) {
            if (i >= pack.n_samples) throw DataError("selection index " + std::to_string(i) + " out of range");
            ++report.class_histogram[(*pack.labels)[i]];
        }
    }
    report.metadata = {{"method", selection.method},
                       {"params", selection.params},
                       {"budget_fraction", selection.budget_fraction},
                       {"selected", selection.indices.size()},
                       {"layer", layer}};
    return report;
}

EvalReport compare_scores(const ScoreVector& a, const ScoreVector& b, std::span<const double> etas,
                          const Matrix* features) {
    if (features && features->rows != a.size())
        throw DataError("feature matrix has " + std::to_string(features->rows) + " rows, scores have " +
                        std::to_string(a.size()));
    EvalReport report;
    report.rho = spearman(a.values, b.values);
    const auto delta = [&](const SelectionResult& s) -> std::optional<double> {
        if (!features || s.indices.size() < 2) return std::nullopt;
        return diversity(*features, s.indices);
    };
    for (const double eta : etas) {
        const auto sa = top_k_select(a, eta, easiest(a));
        const auto sb = top_k_select(b, eta, easiest(b));
        report.jaccard_at_budget.emplace_back(eta, selection_jaccard(sa, sb));
        if (features) report.diversity_at_budget.push_back({eta, delta(sa), delta(sb)});
    }
    report.metadata = {{"a", {{"method", a.method}, {"params", a.params}, {"higher_is_easier", a.higher_is_easier}}},
                       {"b", {{"method", b.method}, {"params", b.params}, {"higher_is_easier", b.higher_is_easier}}},
                       {"n", a.size()}};
    return report;
}

std::string EvalReport::to_json() const {
    Params j;
    j["rho"] = rho ? Params(*rho) : Params(nullptr);
    j["jaccard_at_budget"] = Params::array();
    for (const auto& [eta, jac] : jaccard_at_budget) j["jaccard_at_budget"].push_back({{"eta", eta}, {"jaccard", jac}});
    j["diversity_delta"] = diversity_delta ? Params(*diversity_delta) : Params(nullptr);
    if (!diversity_at_budget.empty()) {
        j["diversity_at_budget"] = Params::array();
        for (const auto& d : diversity_at_budget)
            j["diversity_at_budget"].push_back({{"eta", d.eta},
                                                {"delta_a", d.delta_a ? Params(*d.delta_a) : Params(nullptr)},
                                                {"delta_b", d.delta_b ? Params(*d.delta_b) : Params(nullptr)}});
    }
    j["class_histogram"] = class_histogram;
    j["metadata"] = metadata;
    return j.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
    std::string out = "metric,value\n";
    if (rho) out += "rho," + format_double(*rho) + "\n";
    for (const auto& [eta, jac] : jaccard_at_budget) out += "jaccard@" + format_eta(eta) + "," + format_double(jac) + "\n";
    if (diversity_delta) out += "diversity_delta," + format_double(*diversity_delta) + "\n";
    for (const auto& d : diversity_at_budget) {
        if (d.delta_a) out += "delta_a@" + format_eta(d.eta) + "," + format_double(*d.delta_a) + "\n";
        if (d.delta_b) out += "delta_b@" + format_eta(d.eta) + "," + format_double(*d.delta_b) + "\n";
    }
    for (std::size_t c = 0; c < class_histogram.size(); ++c)
        out += "class_" + std::to_string(c) + "," + std::to_string(class_histogram[c]) + "\n";
    return out;
}

}  // namespace lcprune
