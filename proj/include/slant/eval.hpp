#pragma once

// Cross-source validation: source selection, class balancing, fold planning
// (leave-one-source-out per party), metric computation, and the end-to-end
// eval pipeline over articles.
//
// Feature fitting modes: strict (default) refits vocabulary, embeddings and
// clusters per fold on the training sources only, so nothing about the test
// outlet's text leaks into the feature space; shared_features fits them once
// on all selected sources, matching the original protocol.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slant/clusters.hpp"
#include "slant/common.hpp"
#include "slant/corpus.hpp"
#include "slant/embedding.hpp"
#include "slant/features.hpp"
#include "slant/forest.hpp"

namespace slant {

// ---------------------------------------------------------------------------
// Source selection and fold planning
// ---------------------------------------------------------------------------

struct SourceSelection {
    std::vector<std::string> parties;  // lexicographic
    // party -> sources ordered by article count desc, ties lexicographic
    std::map<std::string, std::vector<std::string>> sources_per_party;
    std::map<std::string, std::int64_t> article_counts;
};

/// Per party, the per_party sources with most articles among those with at
/// least min_articles; errors naming the party when one has too few.
inline SourceSelection select_sources(const Corpus& corpus, const SourceCatalog& catalog,
                                      std::int64_t min_articles = 329, int per_party = 5) {
    if (per_party < 1) raise("select_sources: per_party must be >= 1");
    std::map<std::string, std::int64_t> counts;
    for (const auto& doc : corpus.docs)
        if (catalog.find(doc.source)) ++counts[doc.source];

    SourceSelection sel;
    {
        std::set<std::string> ps(catalog.parties.begin(), catalog.parties.end());
        sel.parties.assign(ps.begin(), ps.end());
    }
    for (const auto& party : sel.parties) {
        std::vector<std::pair<std::int64_t, std::string>> qualifying;
        for (const auto& src : catalog.sources) {
            if (src.party != party) continue;
            const auto it = counts.find(src.id);
            const auto c = it == counts.end() ? 0 : it->second;
            if (c >= min_articles) qualifying.emplace_back(c, src.id);
        }
        std::sort(qualifying.begin(), qualifying.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        if (static_cast<int>(qualifying.size()) < per_party)
            raise("select_sources: party " + party + " has only " +
                  std::to_string(qualifying.size()) + " sources with >= " +
                  std::to_string(min_articles) + " articles (need " + std::to_string(per_party) +
                  ")");
        auto& list = sel.sources_per_party[party];
        for (int i = 0; i < per_party; ++i) {
            list.push_back(qualifying[static_cast<std::size_t>(i)].second);
            sel.article_counts[qualifying[static_cast<std::size_t>(i)].second] =
                qualifying[static_cast<std::size_t>(i)].first;
        }
    }
    return sel;
}

struct FoldPlan {
    struct Fold {
        std::vector<std::string> train_sources;
        std::vector<std::string> test_sources;  // exactly one per party
    };
    std::vector<Fold> folds;
};

/// F folds where fold i holds out the i-th source of every party.
inline FoldPlan cross_source_folds(const SourceSelection& sel) {
    std::size_t f = 0;
    bool first = true;
    for (const auto& [party, sources] : sel.sources_per_party) {
        if (first) {
            f = sources.size();
            first = false;
        } else if (sources.size() != f) {
            raise("cross_source_folds: unequal per-party source counts");
        }
    }
    if (f < 2) raise("cross_source_folds: need at least 2 sources per party");

    FoldPlan plan;
    for (std::size_t i = 0; i < f; ++i) {
        FoldPlan::Fold fold;
        for (const auto& [party, sources] : sel.sources_per_party) {
            for (std::size_t j = 0; j < sources.size(); ++j) {
                if (j == i)
                    fold.test_sources.push_back(sources[j]);
                else
                    fold.train_sources.push_back(sources[j]);
            }
        }
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Balancing
// ---------------------------------------------------------------------------

enum class BalanceUnit { source, party };

/// Seeded uniform down-sampling so every unit (source or party) keeps the
/// minimum unit count; retained examples stay in their original order.
inline std::vector<LabeledExample> balance(std::span<const LabeledExample> examples,
                                           BalanceUnit unit, std::uint64_t seed) {
    if (examples.empty()) return {};
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& key = unit == BalanceUnit::source ? examples[i].source : examples[i].party;
        groups[key].push_back(i);
    }
    std::size_t m = examples.size();
    for (const auto& [k, idx] : groups) m = std::min(m, idx.size());

    std::mt19937_64 rng(derive_seed(seed, 0));
    std::vector<std::size_t> kept;
    for (auto& [k, idx] : groups) {
        // partial Fisher-Yates over the group's positions
        for (std::size_t i = 0; i < m; ++i) {
            const auto j = i + static_cast<std::size_t>(uniform_below(rng, idx.size() - i));
            std::swap(idx[i], idx[j]);
        }
        kept.insert(kept.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m));
    }
    std::sort(kept.begin(), kept.end());
    std::vector<LabeledExample> out;
    out.reserve(kept.size());
    for (const auto i : kept) out.push_back(examples[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct FoldMetrics {
    int fold_index = 0;
    std::vector<std::string> test_sources;
    double accuracy = 0;
    double precision = 0;  // macro
    double recall = 0;     // macro
    double within_accuracy = -1;  // -1 when not measured
    std::vector<std::vector<std::int64_t>> confusion;  // [truth][predicted]
};

struct MetricsReport {
    std::string task;
    std::vector<std::string> parties;
    std::vector<FoldMetrics> folds;
    double accuracy = 0;
    double precision = 0;
    double recall = 0;
    double within_accuracy = -1;
    std::vector<std::vector<std::int64_t>> confusion;  // summed over folds
    nlohmann::json config_echo;
};

/// Confusion matrix plus accuracy and macro precision/recall from parallel
/// truth/prediction index vectors.
inline FoldMetrics compute_fold_metrics(const std::vector<std::string>& parties,
                                        std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) raise("metrics: truth/prediction size mismatch");
    const auto P = parties.size();
    FoldMetrics fm;
    fm.confusion.assign(P, std::vector<std::int64_t>(P, 0));
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        fm.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])]++;
        if (truth[i] == predicted[i]) ++correct;
    }
    const auto total = static_cast<std::int64_t>(truth.size());
    fm.accuracy = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    double prec_sum = 0, rec_sum = 0;
    for (std::size_t p = 0; p < P; ++p) {
        std::int64_t col = 0, row = 0;
        for (std::size_t q = 0; q < P; ++q) {
            col += fm.confusion[q][p];
            row += fm.confusion[p][q];
        }
        const auto tp = fm.confusion[p][p];
        prec_sum += col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
        rec_sum += row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    }
    fm.precision = P > 0 ? prec_sum / static_cast<double>(P) : 0.0;
    fm.recall = P > 0 ? rec_sum / static_cast<double>(P) : 0.0;
    return fm;
}

inline nlohmann::json metrics_to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["task"] = r.task;
    j["parties"] = r.parties;
    j["accuracy"] = r.accuracy;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    if (r.within_accuracy >= 0) j["within_accuracy"] = r.within_accuracy;
    j["confusion"] = r.confusion;
    j["folds"] = nlohmann::json::array();
    for (const auto& f : r.folds) {
        nlohmann::json fj;
        fj["fold"] = f.fold_index;
        fj["test_sources"] = f.test_sources;
        fj["accuracy"] = f.accuracy;
        fj["precision"] = f.precision;
        fj["recall"] = f.recall;
        if (f.within_accuracy >= 0) fj["within_accuracy"] = f.within_accuracy;
        fj["confusion"] = f.confusion;
        j["folds"].push_back(fj);
    }
    j["config"] = r.config_echo;
    return j;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct EvalConfig {
    std::int64_t min_articles = 329;
    int per_party = 5;
    std::int64_t vocab_min_count = 10;
    bool shared_features = false;  // strict per-fold feature fitting by default
    double within_holdout = 0.0;   // fraction of balanced train held out per source
    bool include_zero_coverage = false;
    std::vector<std::string> parties;  // restriction for binary tasks; empty = all
    std::uint64_t seed = 42;

    void validate() const {
        if (min_articles < 1) raise("eval: min_articles must be >= 1");
        if (per_party < 2) raise("eval: per_party must be >= 2 for cross-source folds");
        if (within_holdout < 0 || within_holdout >= 1)
            raise("eval: within_holdout must be in [0,1)");
    }
};

struct EvalPipelineConfig {
    EmbeddingConfig embedding;
    KMeansConfig clusters;
    ForestConfig forest;
    EvalConfig eval;
};

struct FoldData {
    std::vector<LabeledExample> train;  // balanced by source
    std::vector<LabeledExample> test;   // balanced by source
};

namespace detail {

inline SourceCatalog restrict_catalog(const SourceCatalog& catalog,
                                      const std::vector<std::string>& parties) {
    if (parties.empty()) return catalog;
    for (const auto& p : parties)
        if (!catalog.has_party(p)) raise("eval: unknown party in restriction: " + p);
    SourceCatalog out;
    out.parties = parties;
    for (const auto& s : catalog.sources)
        if (std::find(parties.begin(), parties.end(), s.party) != parties.end())
            out.sources.push_back(s);
    out.validate();
    return out;
}

inline Corpus docs_of_sources(const Corpus& corpus, const std::set<std::string>& sources) {
    Corpus out;
    out.kind = corpus.kind;
    for (const auto& d : corpus.docs)
        if (sources.count(d.source)) out.docs.push_back(d);
    return out;
}

}  // namespace detail

/// Featurize and balance every fold. The corpus must be tokenized and contain
/// articles only; sources outside the catalog are ignored by selection.
inline std::vector<FoldData> prepare_fold_data(const Corpus& corpus, const SourceCatalog& catalog_in,
                                               const EvalPipelineConfig& cfg,
                                               FoldPlan* plan_out = nullptr,
                                               std::vector<std::string>* parties_out = nullptr,
                                               std::vector<Vocabulary>* fold_vocabs_out = nullptr) {
    cfg.eval.validate();
    const auto catalog = detail::restrict_catalog(catalog_in, cfg.eval.parties);
    const auto selection = select_sources(corpus, catalog, cfg.eval.min_articles, cfg.eval.per_party);
    const auto plan = cross_source_folds(selection);
    if (plan_out) *plan_out = plan;
    if (parties_out) *parties_out = selection.parties;

    std::set<std::string> all_selected;
    for (const auto& [party, sources] : selection.sources_per_party)
        all_selected.insert(sources.begin(), sources.end());

    std::vector<FoldData> folds;

    // Shared mode fits one feature space over every selected source.
    Vocabulary shared_vocab;
    ClusterModel shared_cm;
    std::map<std::string, std::vector<LabeledExample>> shared_by_source;
    if (cfg.eval.shared_features) {
        const auto all_docs = detail::docs_of_sources(corpus, all_selected);
        shared_vocab = build_vocab(all_docs, cfg.eval.vocab_min_count);
        auto emb_cfg = cfg.embedding;
        const auto model = train_skipgram(all_docs, shared_vocab, emb_cfg);
        auto km_cfg = cfg.clusters;
        km_cfg.K = std::min(km_cfg.K, shared_vocab.size());
        shared_cm = kmeans(model, km_cfg);
        for (const auto& ex :
             corpus_examples(all_docs, catalog, shared_vocab, shared_cm,
                             cfg.eval.include_zero_coverage))
            shared_by_source[ex.source].push_back(ex);
    }

    for (std::size_t fi = 0; fi < plan.folds.size(); ++fi) {
        const auto& fold = plan.folds[fi];
        std::vector<LabeledExample> train_ex, test_ex;
        if (cfg.eval.shared_features) {
            for (const auto& s : fold.train_sources)
                for (const auto& ex : shared_by_source[s]) train_ex.push_back(ex);
            for (const auto& s : fold.test_sources)
                for (const auto& ex : shared_by_source[s]) test_ex.push_back(ex);
            if (fold_vocabs_out) fold_vocabs_out->push_back(shared_vocab);
        } else {
            const std::set<std::string> train_set(fold.train_sources.begin(),
                                                  fold.train_sources.end());
            const std::set<std::string> test_set(fold.test_sources.begin(),
                                                 fold.test_sources.end());
            const auto train_docs = detail::docs_of_sources(corpus, train_set);
            const auto test_docs = detail::docs_of_sources(corpus, test_set);
            const auto vocab = build_vocab(train_docs, cfg.eval.vocab_min_count);
            auto emb_cfg = cfg.embedding;
            emb_cfg.seed = derive_seed(cfg.embedding.seed, fi);
            const auto model = train_skipgram(train_docs, vocab, emb_cfg);
            auto km_cfg = cfg.clusters;
            km_cfg.K = std::min(km_cfg.K, vocab.size());
            km_cfg.seed = derive_seed(cfg.clusters.seed, fi);
            const auto cm = kmeans(model, km_cfg);
            train_ex = corpus_examples(train_docs, catalog, vocab, cm,
                                       cfg.eval.include_zero_coverage);
            test_ex = corpus_examples(test_docs, catalog, vocab, cm,
                                      cfg.eval.include_zero_coverage);
            if (fold_vocabs_out) fold_vocabs_out->push_back(vocab);
        }
        FoldData fd;
        fd.train = balance(train_ex, BalanceUnit::source, derive_seed(cfg.eval.seed, 1000 + fi));
        fd.test = balance(test_ex, BalanceUnit::source, derive_seed(cfg.eval.seed, 2000 + fi));
        folds.push_back(std::move(fd));
    }
    return folds;
}

/// Train and score a forest per fold; parties must cover every label in the
/// fold data. Within-source accuracy is measured on a per-source holdout of
/// the training examples when eval.within_holdout > 0.
inline MetricsReport evaluate_prepared(std::span<const FoldData> folds,
                                       const std::vector<std::string>& parties,
                                       const ForestConfig& forest_cfg, const EvalConfig& eval_cfg,
                                       const FoldPlan* plan = nullptr) {
    MetricsReport report;
    report.parties = parties;
    auto party_index = [&](const std::string& p) {
        const auto it = std::find(parties.begin(), parties.end(), p);
        if (it == parties.end()) raise("evaluate: label outside the party set: " + p);
        return static_cast<int>(it - parties.begin());
    };

    const auto P = parties.size();
    report.confusion.assign(P, std::vector<std::int64_t>(P, 0));
    double acc_sum = 0, prec_sum = 0, rec_sum = 0, within_sum = 0;
    int within_folds = 0;

    for (std::size_t fi = 0; fi < folds.size(); ++fi) {
        const auto& fd = folds[fi];
        std::vector<LabeledExample> train = fd.train;
        std::vector<LabeledExample> within_test;
        if (eval_cfg.within_holdout > 0) {
            // per-source holdout, seeded independently of balancing
            std::map<std::string, std::vector<std::size_t>> by_source;
            for (std::size_t i = 0; i < train.size(); ++i) by_source[train[i].source].push_back(i);
            std::mt19937_64 rng(derive_seed(eval_cfg.seed, 3000 + fi));
            std::set<std::size_t> held;
            for (auto& [s, idx] : by_source) {
                const auto h = static_cast<std::size_t>(
                    eval_cfg.within_holdout * static_cast<double>(idx.size()));
                for (std::size_t i = 0; i < h; ++i) {
                    const auto j = i + static_cast<std::size_t>(uniform_below(rng, idx.size() - i));
                    std::swap(idx[i], idx[j]);
                    held.insert(idx[i]);
                }
            }
            std::vector<LabeledExample> kept;
            for (std::size_t i = 0; i < train.size(); ++i) {
                if (held.count(i))
                    within_test.push_back(train[i]);
                else
                    kept.push_back(train[i]);
            }
            train = std::move(kept);
        }

        auto fcfg = forest_cfg;
        fcfg.seed = derive_seed(forest_cfg.seed, fi);
        const auto forest = train_forest(train, fcfg);

        std::vector<int> truth, pred;
        for (const auto& ex : fd.test) {
            truth.push_back(party_index(ex.party));
            pred.push_back(party_index(predict(forest, ex.features).party));
        }
        auto fm = compute_fold_metrics(parties, truth, pred);
        fm.fold_index = static_cast<int>(fi);
        if (plan && fi < plan->folds.size()) fm.test_sources = plan->folds[fi].test_sources;

        if (!within_test.empty()) {
            std::int64_t correct = 0;
            for (const auto& ex : within_test)
                if (predict(forest, ex.features).party == ex.party) ++correct;
            fm.within_accuracy =
                static_cast<double>(correct) / static_cast<double>(within_test.size());
            within_sum += fm.within_accuracy;
            ++within_folds;
        }

        acc_sum += fm.accuracy;
        prec_sum += fm.precision;
        rec_sum += fm.recall;
        for (std::size_t a = 0; a < P; ++a)
            for (std::size_t b = 0; b < P; ++b) report.confusion[a][b] += fm.confusion[a][b];
        report.folds.push_back(std::move(fm));
    }
    const auto nf = static_cast<double>(folds.size());
    if (nf > 0) {
        report.accuracy = acc_sum / nf;
        report.precision = prec_sum / nf;
        report.recall = rec_sum / nf;
    }
    if (within_folds > 0) report.within_accuracy = within_sum / static_cast<double>(within_folds);
    return report;
}

/// The whole article experiment: featurize, balance, fold, train, predict.
inline MetricsReport run_eval(const Corpus& corpus, const SourceCatalog& catalog,
                              const EvalPipelineConfig& cfg) {
    FoldPlan plan;
    std::vector<std::string> parties;
    const auto folds = prepare_fold_data(corpus, catalog, cfg, &plan, &parties);
    auto report = evaluate_prepared(folds, parties, cfg.forest, cfg.eval, &plan);
    report.task = cfg.eval.parties.empty() ? "all-parties" : "restricted";
    return report;
}

}  // namespace slant
