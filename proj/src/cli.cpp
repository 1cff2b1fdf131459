#include "lcprune/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "CLI11.hpp"

#include "lcprune/clustering.hpp"
#include "lcprune/error.hpp"
#include "lcprune/evaluation.hpp"
#include "lcprune/feature_store.hpp"
#include "lcprune/io.hpp"
#include "lcprune/knn_scoring.hpp"
#include "lcprune/scores.hpp"
#include "lcprune/selection.hpp"
#include "lcprune/synthetic.hpp"

namespace fs = std::filesystem;

namespace lcprune::cli {

namespace {

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed, const std::string& method) {
    if (!seed) throw UsageError("method '" + method + "' is seeded; pass --seed");
    return *seed;
}

const Matrix& require_probs(const FeaturePack& pack, const std::string& method) {
    if (!pack.probs) throw DataError("method '" + method + "' requires probabilities; the pack has none");
    return *pack.probs;
}

// Training-free proxy for the cluster-count search: weighted k-NN accuracy on
// the val pack using only the preserved subset as references.
double subset_val_accuracy(const FeaturePack& train, const FeaturePack& val, const SelectionResult& selection,
                           std::size_t layer, std::size_t knn_k) {
    if (selection.indices.empty()) return 0.0;
    FeaturePack subset;
    subset.n_samples = selection.indices.size();
    const auto& labels = train.require_labels();
    subset.labels.emplace();
    for (const auto& l : train.layers) {
        Matrix m(subset.n_samples, l.features.cols);
        for (std::size_t r = 0; r < subset.n_samples; ++r) {
            const auto src = l.features.row(selection.indices[r]);
            std::copy(src.begin(), src.end(), m.row(r).begin());
        }
        subset.layers.push_back({l.name, std::move(m)});
    }
    for (const auto i : selection.indices) subset.labels->push_back(labels[i]);
    KnnConfig cfg;
    cfg.k = std::min(knn_k, subset.n_samples);
    cfg.exclude_self = false;
    return knn_val_accuracy(subset, val, layer, cfg);
}

}  // namespace

std::string eta_tag(double eta) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%g", eta);
    return std::string(buf, static_cast<std::size_t>(len));
}

void cmd_score(const ScoreOptions& o, std::ostream& log) {
    const FeaturePack train = load_pack(o.train);
    std::optional<FeaturePack> val;
    if (o.val) val = load_pack(*o.val);
    StagedOutput out(o.out);

    ScoreVector scores;
    if (o.method == "lc") {
        KnnConfig cfg;
        cfg.tie_epsilon = o.tie_epsilon;
        cfg.l2_normalize = o.l2_normalize;
        cfg.exclude_self = true;
        Params tuning = nullptr;
        if (!o.k_candidates.empty() || (!o.k && val)) {
            if (!val) throw UsageError("--k-candidates needs a validation pack (--val)");
            const std::vector<std::size_t> candidates = o.k_candidates.empty() ? kDefaultKCandidates : o.k_candidates;
            std::size_t layer = train.layers.size() - 1;
            if (o.tune_layer) layer = *o.tune_layer;
            else if (o.layers && !o.layers->empty()) layer = o.layers->back();
            KnnConfig base = cfg;
            cfg.k = tune_k(train, *val, layer, candidates, base);
            tuning = {{"candidates", candidates}, {"layer", layer}, {"chosen_k", cfg.k}};
            log << "tuned k = " << cfg.k << " on layer " << layer << "\n";
        } else if (o.k) {
            cfg.k = *o.k;
        } else {
            throw UsageError("method 'lc' needs --k, or --val to tune k");
        }
        scores = lc_classification_score(train, cfg, o.layers);
        if (!tuning.is_null()) scores.params["k_tuning"] = tuning;
    } else if (o.method == "lc-reg") {
        if (!train.perplexities)
            throw DataError("method 'lc-reg' requires perplexities; the pack has none");
        scores = lc_regression_score(*train.perplexities);
    } else if (o.method == "least-conf") {
        scores = least_confidence_score(require_probs(train, o.method));
    } else if (o.method == "entropy") {
        scores = entropy_score(require_probs(train, o.method));
    } else if (o.method == "margin") {
        scores = margin_score(require_probs(train, o.method));
    } else {
        throw UsageError("unknown score method '" + o.method + "'");
    }

    const std::string digest = pack_digest(train);
    out.write("scores.csv", scores_csv(scores));
    out.write("scores.json", scores_sidecar(scores, digest));
    out.commit();
    log << "wrote " << scores.size() << " " << scores.method << " scores to " << o.out.string() << "\n";
}

void cmd_select(const SelectOptions& o, std::ostream& log) {
    if (o.etas.empty()) throw UsageError("pass --eta or --eta-list");
    for (const double eta : o.etas)
        if (!(eta > 0.0) || eta > 1.0) throw UsageError("budget fractions must lie in (0, 1]");
    const FeaturePack train = load_pack(o.train);
    std::optional<FeaturePack> val;
    if (o.val) val = load_pack(*o.val);

    std::optional<ScoreVector> scores;
    if (o.scores) {
        scores = read_scores(*o.scores);
        if (scores->size() != train.n_samples)
            throw DataError(o.scores->string() + ": has " + std::to_string(scores->size()) + " scores, pack has " +
                            std::to_string(train.n_samples) + " samples");
    }
    const auto need_scores = [&]() -> const ScoreVector& {
        if (!scores) throw UsageError("method '" + o.method + "' needs --scores");
        return *scores;
    };

    std::size_t report_layer = o.layer.value_or(0);
    if (report_layer >= train.layers.size()) throw UsageError("--layer out of range");
    std::size_t cluster_layer = report_layer;
    if (o.method == "lc") {
        if (o.layer) {
            cluster_layer = *o.layer;
        } else if (val) {
            KnnConfig cfg;
            cfg.k = std::min(o.knn_k, train.n_samples);
            cluster_layer = select_cluster_layer(train, *val, cfg);
            log << "cluster layer " << cluster_layer << " chosen on validation\n";
        } else if (train.layers.size() == 1) {
            cluster_layer = 0;
        } else {
            throw UsageError("method 'lc' needs --layer or --val to choose the clustering layer");
        }
        report_layer = cluster_layer;
        if (!o.clusters && !val) throw UsageError("method 'lc' needs --clusters, or --val to search the cluster count");
    }

    StagedOutput out(o.out);
    for (const double eta : o.etas) {
        SelectionResult selection;
        std::optional<ClusterModel> model;
        if (o.method == "lc") {
            const auto& s = need_scores();
            const std::uint64_t seed = require_seed(o.seed, o.method);
            EasyDiverseOptions opts;
            opts.cluster_layer = cluster_layer;
            opts.eta = eta;
            opts.seed = seed;
            if (o.clusters) {
                opts.k_clusters = *o.clusters;
                model.emplace();
                selection = easy_diverse_select(train, s, opts, &*model);
            } else {
                const auto& candidates = o.cluster_candidates.empty() ? kDefaultClusterCandidates : o.cluster_candidates;
                double best_acc = -1.0;
                Params trials = Params::array();
                for (const auto k : candidates) {
                    if (k < 1 || k > train.n_samples) continue;
                    opts.k_clusters = k;
                    ClusterModel candidate_model;
                    auto candidate = easy_diverse_select(train, s, opts, &candidate_model);
                    const double acc = subset_val_accuracy(train, *val, candidate, cluster_layer, o.knn_k);
                    trials.push_back({{"k_clusters", k}, {"val_accuracy", acc}});
                    if (acc > best_acc) {
                        best_acc = acc;
                        selection = std::move(candidate);
                        model = std::move(candidate_model);
                    }
                }
                if (!model) throw NumericError("no cluster-count candidate fits the pack");
                selection.params["cluster_search"] = trials;
                log << "eta " << eta_tag(eta) << ": k_clusters = " << model->k << " chosen on validation\n";
            }
        } else if (o.method == "topk") {
            const auto& s = need_scores();
            const Keep keep = o.keep == "easiest" ? easiest(s) : parse_keep(o.keep);
            selection = top_k_select(s, eta, keep);
        } else if (o.method == "random") {
            selection = random_select(train.n_samples, eta, require_seed(o.seed, o.method));
        } else if (o.method == "herding") {
            const auto* labels = train.labels ? &*train.labels : nullptr;
            selection = herding_select(train.layer(report_layer).features, labels, eta, o.per_class && labels);
            selection.params["layer"] = report_layer;
        } else if (o.method == "kcg") {
            selection = kcenter_greedy_select(train.layer(report_layer).features, eta, require_seed(o.seed, o.method),
                                              o.initial);
            selection.params["layer"] = report_layer;
        } else if (o.method == "cd") {
            selection = cd_select(require_probs(train, o.method), eta, require_seed(o.seed, o.method), o.initial);
        } else {
            throw UsageError("unknown selection method '" + o.method + "'");
        }

        const std::string tag = eta_tag(eta);
        out.write("selection_eta" + tag + ".json", selection.to_json());
        out.write("selection_eta" + tag + ".txt", selection.to_text());
        if (model) out.write("clusters_eta" + tag + ".json", model->to_json());
        const EvalReport report = summarize(selection, train, report_layer);
        out.write("report_eta" + tag + ".json", report.to_json());
        out.write("report_eta" + tag + ".csv", report.to_csv());
        log << "eta " << tag << ": kept " << selection.indices.size() << " of " << train.n_samples << "\n";
    }
    out.commit();
}

void cmd_eval(const EvalOptions& o, std::ostream& log) {
    const ScoreVector a = read_scores(o.a);
    const ScoreVector b = read_scores(o.b);
    if (a.size() != b.size())
        throw DataError("score files differ in length (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                        ")");
    std::optional<FeaturePack> pack;
    if (o.train) pack = load_pack(*o.train);
    const Matrix* features = pack ? &pack->layer(o.layer).features : nullptr;
    StagedOutput out(o.out);
    EvalReport report = compare_scores(a, b, o.etas, features);
    report.metadata["a"]["file"] = o.a.string();
    report.metadata["b"]["file"] = o.b.string();
    out.write("report.json", report.to_json());
    out.write("report.csv", report.to_csv());
    out.commit();
    log << "rho = " << *report.rho << "\n";
}

void cmd_synth(const SynthOptions& o, std::ostream& log) {
    const std::uint64_t seed = require_seed(o.seed, "synth");
    const GmmSpec spec = reference_gmm(seed, o.classes, o.separation, o.dim);
    KnnConfig cfg;
    cfg.k = o.k;
    cfg.tie_epsilon = o.tie_epsilon;
    const Prop31Result result = prop31_check(spec, o.n, cfg);
    const auto [high, low] = result.decile_confidence();

    StagedOutput out(o.out);
    const Manifest manifest = write_pack(result.data.pack, out.staging_dir());
    for (const auto& l : manifest.layers) out.adopt(l.file);
    if (manifest.labels_file) out.adopt(*manifest.labels_file);
    out.adopt(kManifestName);
    out.write("densities.csv", result.data.densities_csv());

    std::string table = "index,label,confidence,p,p_class\n";
    char buf[160];
    for (const auto& row : result.rows) {
        const int len = std::snprintf(buf, sizeof buf, "%zu,%u,%.17g,%.17g,%.17g\n", row.index, row.label, row.confidence,
                                      row.density, row.class_density);
        table.append(buf, static_cast<std::size_t>(len));
    }
    out.write("prop31_table.csv", table);

    Params report;
    report["rho"] = result.rho;
    report["top_decile_confidence"] = high;
    report["bottom_decile_confidence"] = low;
    report["n"] = o.n;
    report["k"] = o.k;
    report["seed"] = seed;
    Params components = Params::array();
    for (const auto& c : spec.components)
        components.push_back({{"class_id", c.class_id}, {"weight", c.weight}, {"mean", c.mean}, {"variance", c.variance}});
    report["spec"] = {{"dim", spec.dim}, {"components", components}};
    out.write("prop31.json", report.dump(2) + "\n");
    out.commit();
    log << "rho(confidence, density) = " << result.rho << "\n";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Training-free dataset pruning by learning complexity", "lcprune"};
    app.require_subcommand(1);

    ScoreOptions score;
    auto* score_cmd = app.add_subcommand("score", "Compute per-sample scores for a feature pack");
    score_cmd->add_option("--train", score.train, "Training pack manifest")->required();
    score_cmd->add_option("--val", score.val, "Validation pack manifest (enables k tuning)");
    score_cmd->add_option("--method", score.method, "lc | lc-reg | least-conf | entropy | margin");
    score_cmd->add_option("--k", score.k, "Neighbor count");
    score_cmd->add_option("--k-candidates", score.k_candidates, "Candidate k values tuned on --val")->delimiter(',');
    score_cmd->add_option("--layers", score.layers, "Layer subset (0-based)")->delimiter(',');
    score_cmd->add_option("--tune-layer", score.tune_layer, "Layer used for k tuning (default: last scored layer)");
    score_cmd->add_flag("--l2-normalize", score.l2_normalize, "Normalize feature rows before neighbor search");
    score_cmd->add_option("--tie-epsilon", score.tie_epsilon, "Added to every distance before inversion");
    score_cmd->add_option("--out", score.out, "Output directory")->required();

    SelectOptions select;
    std::optional<double> single_eta;
    bool no_per_class = false;
    auto* select_cmd = app.add_subcommand("select", "Select a budgeted subset");
    select_cmd->add_option("--train", select.train, "Training pack manifest")->required();
    select_cmd->add_option("--val", select.val, "Validation pack manifest (layer and cluster-count search)");
    select_cmd->add_option("--scores", select.scores, "Score CSV from `score`");
    select_cmd->add_option("--method", select.method, "lc | topk | random | herding | kcg | cd");
    auto* eta_opt = select_cmd->add_option("--eta", single_eta, "Preserving rate in (0, 1]");
    select_cmd->add_option("--eta-list", select.etas, "Comma-separated preserving rates")->delimiter(',')->excludes(eta_opt);
    select_cmd->add_option("--clusters", select.clusters, "Cluster count for lc");
    select_cmd->add_option("--cluster-candidates", select.cluster_candidates, "Cluster counts searched on --val")
        ->delimiter(',');
    select_cmd->add_option("--layer", select.layer, "Feature layer (0-based)");
    select_cmd->add_option("--seed", select.seed, "Seed for seeded methods");
    select_cmd->add_option("--keep", select.keep, "easiest | highest | lowest (topk)");
    select_cmd->add_option("--initial", select.initial, "First center for kcg / cd");
    select_cmd->add_option("--knn-k", select.knn_k, "Neighbor count for validation accuracy");
    select_cmd->add_flag("--no-per-class", no_per_class, "Herding toward the global mean");
    select_cmd->add_option("--out", select.out, "Output directory")->required();

    EvalOptions eval;
    auto* eval_cmd = app.add_subcommand("eval", "Compare two score files");
    eval_cmd->add_option("--a", eval.a, "First score CSV")->required();
    eval_cmd->add_option("--b", eval.b, "Second score CSV")->required();
    eval_cmd->add_option("--eta-list", eval.etas, "Budgets for Jaccard overlap")->delimiter(',');
    eval_cmd->add_option("--train", eval.train, "Pack manifest for diversity summaries");
    eval_cmd->add_option("--layer", eval.layer, "Layer for diversity summaries");
    eval_cmd->add_option("--out", eval.out, "Output directory")->required();

    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "Sample a Gaussian mixture and check confidence vs density");
    synth_cmd->add_option("--n", synth.n, "Sample count");
    synth_cmd->add_option("--k", synth.k, "Neighbor count");
    synth_cmd->add_option("--classes", synth.classes, "Number of classes");
    synth_cmd->add_option("--separation", synth.separation, "Distance between adjacent class means");
    synth_cmd->add_option("--dim", synth.dim, "Feature dimension");
    synth_cmd->add_option("--seed", synth.seed, "Sampling seed");
    synth_cmd->add_option("--tie-epsilon", synth.tie_epsilon, "Added to every distance before inversion");
    synth_cmd->add_option("--out", synth.out, "Output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "lcprune: usage error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::usage);
    }

    try {
        if (*score_cmd) cmd_score(score, out);
        if (*select_cmd) {
            if (single_eta) select.etas = {*single_eta};
            select.per_class = !no_per_class;
            cmd_select(select, out);
        }
        if (*eval_cmd) cmd_eval(eval, out);
        if (*synth_cmd) cmd_synth(synth, out);
    } catch (const Error& e) {
        err << "lcprune: error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        err << "lcprune: error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::data);
    }
    return 0;
}

}  // namespace lcprune::cli
