#include "lcprune/knn_scoring.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lcprune/error.hpp"
#include "parallel.hpp"

namespace lcprune {

namespace {

bool neighbor_less(const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
}

void check_config(const KnnConfig& cfg) {
    if (cfg.k < 1) throw NumericError("k must be at least 1");
    if (!(cfg.tie_epsilon > 0.0)) throw NumericError("tie_epsilon must be positive");
}

const Matrix& prepared(const Matrix& m, const KnnConfig& cfg, Matrix& storage) {
    if (!cfg.l2_normalize) return m;
    storage = l2_normalized(m);
    return storage;
}

void check_probs(const Matrix& probs) { validate_probability_rows(probs); }

}  // namespace

Matrix l2_normalized(const Matrix& m) {
    Matrix out = m;
    for (std::size_t i = 0; i < out.rows; ++i) {
        auto r = out.row(i);
        double norm = 0.0;
        for (const float v : r) norm += static_cast<double>(v) * v;
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        for (auto& v : r) v = static_cast<float>(v / norm);
    }
    return out;
}

std::vector<Neighbor> nearest_neighbors(std::span<const float> query, const Matrix& refs, std::size_t k,
                                        std::optional<std::size_t> skip) {
    if (query.size() != refs.cols)
        throw DataError("dimension mismatch: query has " + std::to_string(query.size()) + " features, references have " +
                        std::to_string(refs.cols));
    const std::size_t available = refs.rows - (skip && *skip < refs.rows ? 1 : 0);
    if (k < 1) throw NumericError("k must be at least 1");
    if (k > available)
        throw NumericError("k = " + std::to_string(k) + " exceeds the " + std::to_string(available) +
                           " available references");
    std::vector<Neighbor> all;
    all.reserve(available);
    for (std::size_t j = 0; j < refs.rows; ++j) {
        if (skip && j == *skip) continue;
        all.push_back({j, l2_distance(query, refs.row(j))});
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), neighbor_less);
    all.resize(k);
    return all;
}

double knn_confidence(std::span<const float> query, std::uint32_t query_label, const Matrix& refs,
                      std::span<const std::uint32_t> ref_labels, const KnnConfig& cfg,
                      std::optional<std::size_t> self_index) {
    check_config(cfg);
    if (ref_labels.size() != refs.rows) throw DataError("reference labels do not match reference rows");
    const auto skip = cfg.exclude_self ? self_index : std::nullopt;
    const auto neighbors = nearest_neighbors(query, refs, cfg.k, skip);
    double matching = 0.0;
    double total = 0.0;
    for (const auto& nb : neighbors) {
        const double w = 1.0 / (nb.distance + cfg.tie_epsilon);
        total += w;
        if (ref_labels[nb.index] == query_label) matching += w;
    }
    return matching / total;
}

std::vector<double> layer_confidences(const FeaturePack& pack, std::size_t layer_index, const KnnConfig& cfg) {
    const auto& labels = pack.require_labels();
    check_config(cfg);
    Matrix storage;
    const Matrix& feats = prepared(pack.layer(layer_index).features, cfg, storage);
    const std::size_t available = feats.rows - (cfg.exclude_self ? 1 : 0);
    if (cfg.k > available)
        throw NumericError("k = " + std::to_string(cfg.k) + " exceeds the " + std::to_string(available) +
                           " available references");
    std::vector<double> out(pack.n_samples);
    detail::parallel_for(pack.n_samples, [&](std::size_t i) {
        out[i] = knn_confidence(feats.row(i), labels[i], feats, labels, cfg, i);
    });
    return out;
}

ScoreVector lc_classification_score(const FeaturePack& pack, const KnnConfig& cfg,
                                    std::optional<std::vector<std::size_t>> layer_subset) {
    if (pack.layers.empty()) throw DataError("pack has no layers");
    pack.require_labels();
    std::vector<std::size_t> layers;
    if (layer_subset) {
        if (layer_subset->empty()) throw UsageError("empty layer subset");
        layers = *layer_subset;
    } else {
        for (std::size_t l = 0; l < pack.layers.size(); ++l) layers.push_back(l);
    }
    for (const auto l : layers) pack.layer(l);

    ScoreVector result;
    result.values.assign(pack.n_samples, 0.0);
    for (const auto l : layers) {
        const auto conf = layer_confidences(pack, l, cfg);
        for (std::size_t i = 0; i < conf.size(); ++i) result.values[i] += conf[i];
    }
    const double count = static_cast<double>(layers.size());
    for (auto& v : result.values) v /= count;

    result.method = "lc";
    result.higher_is_easier = true;
    result.params = {{"k", cfg.k},
                     {"layers", layers},
                     {"exclude_self", cfg.exclude_self},
                     {"tie_epsilon", cfg.tie_epsilon},
                     {"l2_normalize", cfg.l2_normalize}};
    return result;
}

ScoreVector lc_regression_score(const Matrix& perplexities) {
    if (perplexities.rows == 0 || perplexities.cols == 0) throw DataError("empty perplexity matrix");
    ScoreVector result;
    result.values.resize(perplexities.rows);
    for (std::size_t i = 0; i < perplexities.rows; ++i) {
        double sum = 0.0;
        for (const float pp : perplexities.row(i)) {
            if (!(pp > 0.0f) || !std::isfinite(pp))
                throw DataError("nonpositive perplexity at row " + std::to_string(i));
            sum += 1.0 / static_cast<double>(pp);
        }
        result.values[i] = sum / static_cast<double>(perplexities.cols);
    }
    result.method = "lc-reg";
    result.higher_is_easier = true;
    result.params = {{"num_subnets", perplexities.cols}};
    return result;
}

double knn_val_accuracy(const FeaturePack& train, const FeaturePack& val, std::size_t layer_index,
                        const KnnConfig& cfg) {
    const auto& train_labels = train.require_labels();
    const auto& val_labels = val.require_labels();
    check_config(cfg);
    Matrix train_storage, val_storage;
    const Matrix& refs = prepared(train.layer(layer_index).features, cfg, train_storage);
    const Matrix& queries = prepared(val.layer(layer_index).features, cfg, val_storage);
    if (refs.cols != queries.cols)
        throw DataError("dimension mismatch at layer " + std::to_string(layer_index) + ": train " +
                        std::to_string(refs.cols) + ", val " + std::to_string(queries.cols));
    if (cfg.k > refs.rows)
        throw NumericError("k = " + std::to_string(cfg.k) + " exceeds the " + std::to_string(refs.rows) +
                           " train references");
    const std::size_t classes = std::max(train.num_classes(), val.num_classes());

    std::vector<unsigned char> correct(val.n_samples, 0);
    detail::parallel_for(val.n_samples, [&](std::size_t i) {
        const auto neighbors = nearest_neighbors(queries.row(i), refs, cfg.k);
        std::vector<double> votes(classes, 0.0);
        for (const auto& nb : neighbors) votes[train_labels[nb.index]] += 1.0 / (nb.distance + cfg.tie_epsilon);
        const auto best = static_cast<std::uint32_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
        correct[i] = best == val_labels[i] ? 1 : 0;
    });
    std::size_t hits = 0;
    for (const auto c : correct) hits += c;
    return static_cast<double>(hits) / static_cast<double>(val.n_samples);
}

std::size_t tune_k(const FeaturePack& train, const FeaturePack& val, std::size_t layer_index,
                   std::span<const std::size_t> candidates, const KnnConfig& base) {
    std::vector<std::size_t> sorted(candidates.begin(), candidates.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::optional<std::size_t> best_k;
    double best_acc = -1.0;
    for (const auto k : sorted) {
        if (k < 1 || k > train.n_samples) continue;
        KnnConfig cfg = base;
        cfg.k = k;
        cfg.exclude_self = false;
        const double acc = knn_val_accuracy(train, val, layer_index, cfg);
        if (acc > best_acc) {
            best_acc = acc;
            best_k = k;
        }
    }
    if (!best_k) throw NumericError("no k candidate fits a train pack of " + std::to_string(train.n_samples) + " samples");
    return *best_k;
}

std::size_t select_cluster_layer(const FeaturePack& train, const FeaturePack& val, const KnnConfig& cfg) {
    if (train.layers.empty()) throw DataError("pack has no layers");
    if (train.layers.size() != val.layers.size()) throw DataError("train and val packs have different layer counts");
    if (train.layers.size() == 1) return 0;
    KnnConfig query_cfg = cfg;
    query_cfg.exclude_self = false;
    std::size_t best = 0;
    double best_acc = -1.0;
    for (std::size_t l = 0; l + 1 < train.layers.size(); ++l) {
        const double acc = knn_val_accuracy(train, val, l, query_cfg);
        if (acc > best_acc) {
            best_acc = acc;
            best = l;
        }
    }
    return best;
}

ScoreVector least_confidence_score(const Matrix& probs) {
    check_probs(probs);
    ScoreVector result;
    result.values.resize(probs.rows);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        const auto r = probs.row(i);
        result.values[i] = 1.0 - static_cast<double>(*std::max_element(r.begin(), r.end()));
    }
    result.method = "least-conf";
    result.higher_is_easier = false;
    return result;
}

ScoreVector entropy_score(const Matrix& probs) {
    check_probs(probs);
    ScoreVector result;
    result.values.resize(probs.rows);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        double h = 0.0;
        for (const float p : probs.row(i))
            if (p > 0.0f) h -= static_cast<double>(p) * std::log(static_cast<double>(p));
        result.values[i] = std::max(h, 0.0);
    }
    result.method = "entropy";
    result.higher_is_easier = false;
    return result;
}

ScoreVector margin_score(const Matrix& probs) {
    check_probs(probs);
    ScoreVector result;
    result.values.resize(probs.rows);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        double first = 0.0, second = 0.0;
        for (const float p : probs.row(i)) {
            const double v = p;
            if (v > first) {
                second = first;
                first = v;
            } else if (v > second) {
                second = v;
            }
        }
        result.values[i] = 1.0 - (first - second);
    }
    result.method = "margin";
    result.higher_is_easier = false;
    return result;
}

}  // namespace lcprune
