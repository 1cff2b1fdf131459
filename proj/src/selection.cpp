#include "lcprune/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lcprune/error.hpp"
#include "lcprune/rng.hpp"

namespace lcprune {

namespace {

// Indices ordered from the kept end of the ranking; ties by ascending index.
std::vector<std::size_t> ranked(std::span<const double> scores, Keep keep) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return keep == Keep::highest ? scores[a] > scores[b] : scores[a] < scores[b];
    });
    return order;
}

void check_index(std::size_t index, std::size_t n, const char* what) {
    if (index >= n) throw UsageError(std::string(what) + " index " + std::to_string(index) + " out of range");
}

SelectionResult make_result(std::string method, double eta, std::size_t n) {
    SelectionResult r;
    r.method = std::move(method);
    r.budget_fraction = eta;
    r.n_total = n;
    return r;
}

}  // namespace

std::string_view to_string(Keep keep) { return keep == Keep::highest ? "highest" : "lowest"; }

Keep parse_keep(std::string_view text) {
    if (text == "highest") return Keep::highest;
    if (text == "lowest") return Keep::lowest;
    throw UsageError("keep must be 'highest' or 'lowest', got '" + std::string(text) + "'");
}

Keep easiest(const ScoreVector& scores) { return scores.higher_is_easier ? Keep::highest : Keep::lowest; }

std::size_t budget_count(std::size_t n, double eta) {
    if (!(eta > 0.0) || eta > 1.0) throw NumericError("budget fraction must lie in (0, 1], got " + std::to_string(eta));
    const auto m = static_cast<std::size_t>(std::floor(eta * static_cast<double>(n) + 1e-9));
    return std::min(m, n);
}

std::string SelectionResult::to_json() const {
    Params j;
    j["method"] = method;
    j["params"] = params;
    j["seed"] = seed ? Params(*seed) : Params(nullptr);
    j["budget_fraction"] = budget_fraction;
    j["n_total"] = n_total;
    j["indices"] = indices;
    return j.dump() + "\n";
}

std::string SelectionResult::to_text() const {
    std::string out;
    for (const auto i : indices) {
        out += std::to_string(i);
        out += '\n';
    }
    return out;
}

SelectionResult SelectionResult::from_json(std::string_view text, const std::string& origin) {
    try {
        const auto j = Params::parse(text);
        SelectionResult r;
        r.method = j.at("method").get<std::string>();
        r.params = j.value("params", Params::object());
        if (j.contains("seed") && !j["seed"].is_null()) r.seed = j["seed"].get<std::uint64_t>();
        r.budget_fraction = j.at("budget_fraction").get<double>();
        r.n_total = j.at("n_total").get<std::size_t>();
        r.indices = j.at("indices").get<std::vector<std::size_t>>();
        return r;
    } catch (const Params::exception& e) {
        throw DataError(origin + ": invalid selection file: " + e.what());
    }
}

std::vector<std::size_t> LevelSet::apply(std::span<const double> scores) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (keep_below ? scores[i] < tau : scores[i] > tau) out.push_back(i);
    for (std::size_t i = 0; i < scores.size() && out.size() < count; ++i)
        if (scores[i] == tau) out.push_back(i);
    std::sort(out.begin(), out.end());
    return out;
}

SelectionResult top_k_select(const ScoreVector& scores, double eta, Keep keep) {
    const std::size_t m = budget_count(scores.size(), eta);
    const auto order = ranked(scores.values, keep);
    SelectionResult r = make_result("topk", eta, scores.size());
    r.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(r.indices.begin(), r.indices.end());
    r.params = {{"keep", to_string(keep)}, {"score_method", scores.method}, {"order", "ascending"}};
    return r;
}

LevelSet threshold_from_budget(const ScoreVector& scores, double eta, Keep keep) {
    const std::size_t m = budget_count(scores.size(), eta);
    LevelSet level;
    level.keep_below = keep == Keep::lowest;
    level.count = m;
    if (m == 0) {
        level.tau = level.keep_below ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
        return level;
    }
    const auto order = ranked(scores.values, keep);
    level.tau = scores.values[order[m - 1]];
    return level;
}

std::vector<std::size_t> apportion_quotas(std::span<const std::size_t> sizes, std::size_t total) {
    const std::size_t capacity = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    if (total > capacity)
        throw NumericError("cannot place " + std::to_string(total) + " samples in clusters holding " +
                           std::to_string(capacity));
    std::vector<std::size_t> quota(sizes.size(), 0);
    std::vector<std::size_t> active;
    for (std::size_t c = 0; c < sizes.size(); ++c)
        if (sizes[c] > 0) active.push_back(c);

    std::size_t remaining = total;
    while (remaining > 0) {
        std::size_t weight = 0;
        for (const auto c : active) weight += sizes[c];
        std::vector<std::size_t> share(sizes.size(), 0), remainder(sizes.size(), 0);
        std::size_t handed_out = 0;
        for (const auto c : active) {
            share[c] = remaining * sizes[c] / weight;
            remainder[c] = remaining * sizes[c] % weight;
            handed_out += share[c];
        }
        std::vector<std::size_t> order = active;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
            return quota[a] + share[a] < quota[b] + share[b];
        });
        for (std::size_t i = 0; handed_out < remaining; ++i, ++handed_out) ++share[order[i]];

        std::size_t surplus = 0;
        std::vector<std::size_t> still_open;
        for (const auto c : active) {
            const std::size_t room = sizes[c] - quota[c];
            const std::size_t granted = std::min(room, share[c]);
            quota[c] += granted;
            surplus += share[c] - granted;
            if (quota[c] < sizes[c]) still_open.push_back(c);
        }
        active = std::move(still_open);
        remaining = surplus;
    }
    return quota;
}

std::vector<std::size_t> easiest_per_cluster(const ScoreVector& scores, std::span<const std::uint32_t> assignments,
                                             std::size_t k_clusters, std::size_t total) {
    if (assignments.size() != scores.size()) throw DataError("cluster assignments do not match the score vector");
    std::vector<std::vector<std::size_t>> members(k_clusters);
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] >= k_clusters) throw DataError("cluster id out of range at sample " + std::to_string(i));
        members[assignments[i]].push_back(i);
    }
    std::vector<std::size_t> sizes(k_clusters);
    for (std::size_t c = 0; c < k_clusters; ++c) sizes[c] = members[c].size();
    const auto quotas = apportion_quotas(sizes, total);

    const Keep keep = easiest(scores);
    std::vector<std::size_t> out;
    out.reserve(total);
    for (std::size_t c = 0; c < k_clusters; ++c) {
        auto& group = members[c];
        std::stable_sort(group.begin(), group.end(), [&](std::size_t a, std::size_t b) {
            return keep == Keep::highest ? scores.values[a] > scores.values[b] : scores.values[a] < scores.values[b];
        });
        out.insert(out.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(quotas[c]));
    }
    std::sort(out.begin(), out.end());
    return out;
}

SelectionResult easy_diverse_select(const FeaturePack& pack, const ScoreVector& scores,
                                    const EasyDiverseOptions& options, ClusterModel* model_out) {
    if (scores.size() != pack.n_samples)
        throw DataError("score vector has " + std::to_string(scores.size()) + " entries, pack has " +
                        std::to_string(pack.n_samples));
    if (options.k_clusters < 1) throw NumericError("k_clusters must be at least 1");
    if (options.k_clusters > pack.n_samples)
        throw NumericError("k_clusters = " + std::to_string(options.k_clusters) + " exceeds " +
                           std::to_string(pack.n_samples) + " samples");
    const std::size_t m = budget_count(pack.n_samples, options.eta);
    const auto& features = pack.layer(options.cluster_layer).features;
    ClusterModel model = kmeans(features, options.k_clusters, options.seed, options.kmeans);

    SelectionResult r = make_result("lc", options.eta, pack.n_samples);
    r.indices = easiest_per_cluster(scores, model.assignments, options.k_clusters, m);
    r.seed = options.seed;
    r.params = {{"k_clusters", options.k_clusters},
                {"cluster_layer", options.cluster_layer},
                {"score_method", scores.method},
                {"keep", to_string(easiest(scores))},
                {"quota_rule", "largest-remainder"},
                {"kmeans_iterations", model.iterations_run},
                {"order", "ascending"}};
    if (model_out) *model_out = std::move(model);
    return r;
}

SelectionResult herding_select(const Matrix& features, const std::vector<std::uint32_t>* labels, double eta,
                               bool per_class) {
    const std::size_t n = features.rows;
    const std::size_t d = features.cols;
    const std::size_t m = budget_count(n, eta);
    if (per_class && !labels) throw DataError("class-wise herding needs labels");
    if (labels && labels->size() != n) throw DataError("labels do not match feature rows");
    const bool grouped = per_class && labels;

    std::size_t groups = 1;
    if (grouped) groups = static_cast<std::size_t>(*std::max_element(labels->begin(), labels->end())) + 1;
    std::vector<std::vector<std::size_t>> members(groups);
    for (std::size_t i = 0; i < n; ++i) members[grouped ? (*labels)[i] : 0].push_back(i);
    std::vector<std::size_t> sizes(groups);
    for (std::size_t g = 0; g < groups; ++g) sizes[g] = members[g].size();
    const auto budgets = apportion_quotas(sizes, m);

    SelectionResult r = make_result("herding", eta, n);
    for (std::size_t g = 0; g < groups; ++g) {
        const auto& group = members[g];
        if (budgets[g] == 0) continue;
        std::vector<double> mean(d, 0.0);
        for (const auto i : group) {
            const auto row = features.row(i);
            for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
        }
        for (auto& v : mean) v /= static_cast<double>(group.size());

        std::vector<double> w = mean;
        std::vector<bool> taken(group.size(), false);
        for (std::size_t t = 0; t < budgets[g]; ++t) {
            std::size_t best = group.size();
            double best_dot = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < group.size(); ++a) {
                if (taken[a]) continue;
                const auto row = features.row(group[a]);
                double dot = 0.0;
                for (std::size_t j = 0; j < d; ++j) dot += w[j] * row[j];
                if (dot > best_dot) {
                    best_dot = dot;
                    best = a;
                }
            }
            taken[best] = true;
            r.indices.push_back(group[best]);
            const auto row = features.row(group[best]);
            for (std::size_t j = 0; j < d; ++j) w[j] += mean[j] - row[j];
        }
    }
    r.params = {{"per_class", grouped}, {"order", "greedy"}};
    return r;
}

SelectionResult kcenter_greedy_select(const Matrix& features, double eta, std::uint64_t seed,
                                      std::optional<std::size_t> initial) {
    const std::size_t n = features.rows;
    const std::size_t m = budget_count(n, eta);
    Rng rng(seed);
    const std::size_t start = initial ? *initial : static_cast<std::size_t>(rng.below(n));
    check_index(start, n, "initial");
    SelectionResult r = make_result("kcg", eta, n);
    r.seed = seed;
    r.indices = farthest_first(n, m, start, [&](std::size_t a, std::size_t b) {
        return l2_distance(features.row(a), features.row(b));
    });
    r.params = {{"initial", start}, {"metric", "l2"}, {"order", "greedy"}};
    return r;
}

double symmetric_kl(std::span<const float> p, std::span<const float> q) {
    if (p.size() != q.size()) throw DataError("probability rows differ in length");
    double total = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
        const double a = std::max(static_cast<double>(p[c]), kProbFloor);
        const double b = std::max(static_cast<double>(q[c]), kProbFloor);
        total += (a - b) * (std::log(a) - std::log(b));
    }
    return total;
}

SelectionResult cd_select(const Matrix& probs, double eta, std::uint64_t seed, std::optional<std::size_t> initial) {
    validate_probability_rows(probs);
    const std::size_t n = probs.rows;
    const std::size_t m = budget_count(n, eta);
    Rng rng(seed);
    const std::size_t start = initial ? *initial : static_cast<std::size_t>(rng.below(n));
    check_index(start, n, "initial");
    SelectionResult r = make_result("cd", eta, n);
    r.seed = seed;
    r.indices = farthest_first(n, m, start, [&](std::size_t a, std::size_t b) {
        return symmetric_kl(probs.row(a), probs.row(b));
    });
    r.params = {{"initial", start}, {"metric", "symmetric-kl"}, {"prob_floor", kProbFloor}, {"order", "greedy"}};
    return r;
}

SelectionResult random_select(std::size_t n, double eta, std::uint64_t seed) {
    const std::size_t m = budget_count(n, eta);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    SelectionResult r = make_result("random", eta, n);
    r.seed = seed;
    r.indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(r.indices.begin(), r.indices.end());
    r.params = {{"order", "ascending"}};
    return r;
}

double covering_radius(const Matrix& features, std::span<const std::size_t> centers) {
    double radius = 0.0;
    for (std::size_t i = 0; i < features.rows; ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto c : centers) nearest = std::min(nearest, l2_distance(features.row(i), features.row(c)));
        radius = std::max(radius, nearest);
    }
    return radius;
}

}  // namespace lcprune
