#pragma once

// Random forest with a source-entropy-penalized split criterion.
//
// A standard entropy forest picks the split minimizing the class entropy of
// the children; trained on few outlets it happily splits on outlet-marker
// features. The criterion here subtracts alpha times a source-entropy term,
// so a good split separates parties while keeping each child mixed across
// news sources.
//
// Two criterion shapes:
//   corrected_sum:       classTerm - alpha * (wl*Hs(L) + wr*Hs(R))
//   literal_difference:  classTerm - alpha * (wl*Hs(L) - wr*Hs(R))
// where classTerm = wl*Ht(L) + wr*Ht(R) and the child weights w are
// |child|/|parent| when weighted_children is on, else 1. The combination
// literal_difference + unweighted children reproduces the difference form
// verbatim; the default corrected_sum rewards splits whose children both
// stay source-mixed.
//
// Determinism protocol (mirrored by test oracles): tree t draws from
// mt19937_64(derive_seed(seed, t)); first the bootstrap rows (n draws of
// uniform_below(n)), then per node, in preorder with left subtrees built
// first, one sample_distinct(K, features_per_split) call.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "slant/bytes.hpp"
#include "slant/common.hpp"
#include "slant/features.hpp"

namespace slant {

enum class CriterionMode { corrected_sum, literal_difference };

inline const char* to_string(CriterionMode m) {
    return m == CriterionMode::corrected_sum ? "corrected_sum" : "literal_difference";
}

struct ForestConfig {
    int n_trees = 100;
    std::optional<int> max_depth;
    int min_samples_leaf = 5;
    int features_per_split = 0;  // <=0: ceil(sqrt(K))
    double alpha = 0.5;
    CriterionMode criterion = CriterionMode::corrected_sum;
    bool weighted_children = true;
    bool bootstrap = true;
    std::uint64_t seed = 42;

    void validate() const {
        if (n_trees < 1) raise("forest: n_trees must be >= 1");
        if (min_samples_leaf < 1) raise("forest: min_samples_leaf must be >= 1");
        if (alpha < 0) raise("forest: alpha must be >= 0");
        if (max_depth && *max_depth < 0) raise("forest: max_depth must be >= 0");
    }
};

struct Tree {
    struct Node {
        std::int32_t feature = -1;  // -1 marks a leaf
        double threshold = 0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::int64_t n = 0;     // training rows reaching the node
        double h_t = 0;         // class entropy at the node
        std::vector<std::int64_t> histogram;  // leaf: per-party counts

        bool is_leaf() const { return feature < 0; }
    };
    std::vector<Node> nodes;  // preorder, root at 0
};

struct Forest {
    ForestConfig config;
    std::vector<std::string> parties;  // lexicographic
    int K = 0;
    std::vector<Tree> trees;
};

// ---------------------------------------------------------------------------
// Entropies
// ---------------------------------------------------------------------------

namespace detail {

// Shannon entropy (natural log) from a count array, iterated in index order.
// Normalizes the all-zero-term case to +0.0.
template <typename Counts>
double entropy_from_counts(const Counts& counts, std::int64_t total) {
    if (total <= 0) return 0.0;
    double acc = 0;
    for (const auto c : counts) {
        if (c <= 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        acc += p * std::log(p);
    }
    return acc == 0.0 ? 0.0 : -acc;
}

template <typename Key>
double entropy_of_groups(std::span<const LabeledExample> examples, Key key) {
    std::map<std::string, std::int64_t> counts;
    for (const auto& ex : examples) ++counts[key(ex)];
    std::vector<std::int64_t> vals;
    vals.reserve(counts.size());
    for (const auto& [k, c] : counts) vals.push_back(c);
    return entropy_from_counts(vals, static_cast<std::int64_t>(examples.size()));
}

}  // namespace detail

/// Shannon entropy (nats) of the party shares; 0 for the empty set.
inline double class_entropy(std::span<const LabeledExample> examples) {
    return detail::entropy_of_groups(examples, [](const LabeledExample& e) { return e.party; });
}

/// Shannon entropy (nats) of the source shares; 0 for the empty set.
inline double source_entropy(std::span<const LabeledExample> examples) {
    return detail::entropy_of_groups(examples, [](const LabeledExample& e) { return e.source; });
}

namespace detail {

inline double combine_score(double ht_l, double ht_r, double hs_l, double hs_r, double wl,
                            double wr, const ForestConfig& cfg) {
    const double class_part = wl * ht_l + wr * ht_r;
    const double source_part = cfg.criterion == CriterionMode::corrected_sum
                                   ? wl * hs_l + wr * hs_r
                                   : wl * hs_l - wr * hs_r;
    return class_part - cfg.alpha * source_part;
}

}  // namespace detail

/// Split score, lower is better. Children are scored by class entropy minus
/// alpha times the source-entropy term (see the header comment for shapes).
inline double split_score(std::span<const LabeledExample> left,
                          std::span<const LabeledExample> right, const ForestConfig& cfg) {
    if (left.empty() && right.empty()) raise("split_score: both sides empty");
    const auto parent = static_cast<double>(left.size() + right.size());
    const double wl = cfg.weighted_children ? static_cast<double>(left.size()) / parent : 1.0;
    const double wr = cfg.weighted_children ? static_cast<double>(right.size()) / parent : 1.0;
    return detail::combine_score(class_entropy(left), class_entropy(right), source_entropy(left),
                                 source_entropy(right), wl, wr, cfg);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace detail {

struct ForestDataset {
    int K = 0;
    std::vector<double> x;             // n x K row-major
    std::vector<std::int32_t> party;   // index into parties
    std::vector<std::int32_t> source;  // index into sources
    std::vector<std::string> parties;  // lexicographic
    std::vector<std::string> sources;  // lexicographic

    std::size_t n() const { return party.size(); }
    double at(std::size_t row, std::size_t feat) const {
        return x[row * static_cast<std::size_t>(K) + feat];
    }
};

inline ForestDataset make_dataset(std::span<const LabeledExample> examples) {
    if (examples.empty()) raise("forest: empty training set");
    ForestDataset ds;
    ds.K = static_cast<int>(examples[0].features.values.size());
    std::set<std::string> party_set, source_set;
    for (const auto& ex : examples) {
        if (static_cast<int>(ex.features.values.size()) != ds.K)
            raise("forest: inconsistent feature dimensions");
        party_set.insert(ex.party);
        source_set.insert(ex.source);
    }
    ds.parties.assign(party_set.begin(), party_set.end());
    ds.sources.assign(source_set.begin(), source_set.end());
    auto index_of = [](const std::vector<std::string>& v, const std::string& s) {
        return static_cast<std::int32_t>(
            std::lower_bound(v.begin(), v.end(), s) - v.begin());
    };
    ds.x.reserve(examples.size() * static_cast<std::size_t>(ds.K));
    for (const auto& ex : examples) {
        ds.x.insert(ds.x.end(), ex.features.values.begin(), ex.features.values.end());
        ds.party.push_back(index_of(ds.parties, ex.party));
        ds.source.push_back(index_of(ds.sources, ex.source));
    }
    return ds;
}

struct SplitChoice {
    std::int32_t feature = -1;
    double threshold = 0;
    double score = 0;
};

// Exhaustive scan over candidate features and midpoint thresholds. Candidates
// must be sorted ascending; strict score improvement plus the scan order give
// the lowest-feature-then-lowest-threshold tie rule.
inline std::optional<SplitChoice> best_split_rows(const ForestDataset& ds,
                                                  std::span<const std::int32_t> rows,
                                                  std::span<const int> features,
                                                  const ForestConfig& cfg) {
    const auto n = static_cast<std::int64_t>(rows.size());
    const auto msl = static_cast<std::int64_t>(cfg.min_samples_leaf);
    if (n < 2 * msl) return std::nullopt;

    const auto n_parties = ds.parties.size();
    const auto n_sources = ds.sources.size();
    std::vector<std::int64_t> parent_party(n_parties, 0), parent_source(n_sources, 0);
    for (const auto r : rows) {
        ++parent_party[static_cast<std::size_t>(ds.party[static_cast<std::size_t>(r)])];
        ++parent_source[static_cast<std::size_t>(ds.source[static_cast<std::size_t>(r)])];
    }
    const double ht_parent = entropy_from_counts(parent_party, n);
    const double hs_parent = entropy_from_counts(parent_source, n);
    const double unsplit = ht_parent - cfg.alpha * hs_parent;

    struct Entry {
        double value;
        std::int32_t party;
        std::int32_t source;
    };
    std::vector<Entry> entries(rows.size());
    std::vector<std::int64_t> left_party(n_parties), left_source(n_sources);
    std::vector<std::int64_t> right_party(n_parties), right_source(n_sources);

    std::optional<SplitChoice> best;
    double best_score = unsplit;

    for (const auto f : features) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto r = static_cast<std::size_t>(rows[i]);
            entries[i] = {ds.at(r, static_cast<std::size_t>(f)), ds.party[r], ds.source[r]};
        }
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return a.value < b.value; });

        std::fill(left_party.begin(), left_party.end(), 0);
        std::fill(left_source.begin(), left_source.end(), 0);
        for (std::int64_t i = 0; i + 1 < n; ++i) {
            const auto& e = entries[static_cast<std::size_t>(i)];
            ++left_party[static_cast<std::size_t>(e.party)];
            ++left_source[static_cast<std::size_t>(e.source)];
            const double v = e.value;
            const double next = entries[static_cast<std::size_t>(i + 1)].value;
            if (v == next) continue;  // not a boundary between distinct values
            const std::int64_t nl = i + 1;
            const std::int64_t nr = n - nl;
            if (nl < msl || nr < msl) continue;
            const double thr = (v + next) * 0.5;
            if (!(thr > v)) continue;  // no representable separating midpoint

            for (std::size_t p = 0; p < n_parties; ++p)
                right_party[p] = parent_party[p] - left_party[p];
            for (std::size_t s = 0; s < n_sources; ++s)
                right_source[s] = parent_source[s] - left_source[s];
            const double ht_l = entropy_from_counts(left_party, nl);
            const double ht_r = entropy_from_counts(right_party, nr);
            const double hs_l = entropy_from_counts(left_source, nl);
            const double hs_r = entropy_from_counts(right_source, nr);
            const double wl =
                cfg.weighted_children ? static_cast<double>(nl) / static_cast<double>(n) : 1.0;
            const double wr =
                cfg.weighted_children ? static_cast<double>(nr) / static_cast<double>(n) : 1.0;
            const double score = combine_score(ht_l, ht_r, hs_l, hs_r, wl, wr, cfg);
            if (score < best_score) {
                best_score = score;
                best = SplitChoice{f, thr, score};
            }
        }
    }
    return best;
}

inline std::int32_t build_node(const ForestDataset& ds, std::vector<std::int32_t>& rows,
                               const ForestConfig& cfg, int features_per_split, int depth,
                               std::mt19937_64& rng, Tree& tree) {
    const auto n = static_cast<std::int64_t>(rows.size());
    const auto n_parties = ds.parties.size();
    std::vector<std::int64_t> party_counts(n_parties, 0);
    for (const auto r : rows)
        ++party_counts[static_cast<std::size_t>(ds.party[static_cast<std::size_t>(r)])];
    const double h_t = entropy_from_counts(party_counts, n);

    const auto node_id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.back().n = n;
    tree.nodes.back().h_t = h_t;

    auto make_leaf = [&]() {
        tree.nodes[static_cast<std::size_t>(node_id)].histogram = party_counts;
        return node_id;
    };

    const bool pure = std::count_if(party_counts.begin(), party_counts.end(),
                                    [](std::int64_t c) { return c > 0; }) <= 1;
    if (pure || n < 2 * cfg.min_samples_leaf) return make_leaf();
    if (cfg.max_depth && depth >= *cfg.max_depth) return make_leaf();

    auto feats = sample_distinct(rng, ds.K, features_per_split);
    std::sort(feats.begin(), feats.end());
    const auto split = best_split_rows(ds, rows, feats, cfg);
    if (!split) return make_leaf();

    std::vector<std::int32_t> left_rows, right_rows;
    left_rows.reserve(rows.size());
    right_rows.reserve(rows.size());
    for (const auto r : rows) {
        if (ds.at(static_cast<std::size_t>(r), static_cast<std::size_t>(split->feature)) <
            split->threshold)
            left_rows.push_back(r);
        else
            right_rows.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    tree.nodes[static_cast<std::size_t>(node_id)].feature = split->feature;
    tree.nodes[static_cast<std::size_t>(node_id)].threshold = split->threshold;
    const auto left_id = build_node(ds, left_rows, cfg, features_per_split, depth + 1, rng, tree);
    tree.nodes[static_cast<std::size_t>(node_id)].left = left_id;
    const auto right_id = build_node(ds, right_rows, cfg, features_per_split, depth + 1, rng, tree);
    tree.nodes[static_cast<std::size_t>(node_id)].right = right_id;
    return node_id;
}

}  // namespace detail

/// Best (feature, threshold) over the candidate features: exhaustive midpoint
/// scan, argmin of split_score honoring min_samples_leaf; ties resolve to the
/// lowest feature index then lowest threshold. Empty when no split improves
/// on the unsplit score.
inline std::optional<std::tuple<std::int32_t, double, double>> best_split(
    std::span<const LabeledExample> examples, std::span<const int> candidate_features,
    const ForestConfig& cfg) {
    const auto ds = detail::make_dataset(examples);
    std::vector<std::int32_t> rows(examples.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::int32_t>(i);
    std::vector<int> feats(candidate_features.begin(), candidate_features.end());
    std::sort(feats.begin(), feats.end());
    const auto split = detail::best_split_rows(ds, rows, feats, cfg);
    if (!split) return std::nullopt;
    return std::make_tuple(split->feature, split->threshold, split->score);
}

/// Train the forest: per tree, a bootstrap sample and recursive best-split
/// search with per-node feature subsampling. Deterministic given the seed;
/// trees may train in parallel because each draws from a pre-derived stream.
inline Forest train_forest(std::span<const LabeledExample> examples, const ForestConfig& cfg,
                           int parallel_workers = 1) {
    cfg.validate();
    const auto ds = detail::make_dataset(examples);
    if (ds.parties.size() < 2) raise("forest: training set must contain at least 2 parties");
    if (cfg.alpha > 0 && ds.sources.size() < 2)
        raise("forest: alpha > 0 requires at least 2 sources (source entropy is degenerate)");

    int m = cfg.features_per_split;
    if (m <= 0) m = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(ds.K))));
    m = std::clamp(m, 1, ds.K);

    Forest forest;
    forest.config = cfg;
    forest.config.features_per_split = m;
    forest.parties = ds.parties;
    forest.K = ds.K;
    forest.trees.resize(static_cast<std::size_t>(cfg.n_trees));

    const auto n = ds.n();
    auto build_tree = [&](int t) {
        std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
        std::vector<std::int32_t> rows;
        rows.reserve(n);
        if (cfg.bootstrap) {
            for (std::size_t i = 0; i < n; ++i)
                rows.push_back(static_cast<std::int32_t>(uniform_below(rng, n)));
        } else {
            for (std::size_t i = 0; i < n; ++i) rows.push_back(static_cast<std::int32_t>(i));
        }
        Tree tree;
        detail::build_node(ds, rows, cfg, m, 0, rng, tree);
        forest.trees[static_cast<std::size_t>(t)] = std::move(tree);
    };

    if (parallel_workers <= 1) {
        for (int t = 0; t < cfg.n_trees; ++t) build_tree(t);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < parallel_workers; ++w) {
            pool.emplace_back([&] {
                for (int t = next.fetch_add(1); t < cfg.n_trees; t = next.fetch_add(1))
                    build_tree(t);
            });
        }
        for (auto& th : pool) th.join();
    }
    return forest;
}

// ---------------------------------------------------------------------------
// Prediction and importances
// ---------------------------------------------------------------------------

struct Prediction {
    std::string party;
    std::vector<double> vote_shares;  // indexed like forest.parties
};

inline std::size_t tree_leaf_class(const Tree& tree, std::span<const double> x) {
    std::int32_t node = 0;
    while (!tree.nodes[static_cast<std::size_t>(node)].is_leaf()) {
        const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left : nd.right;
    }
    const auto& hist = tree.nodes[static_cast<std::size_t>(node)].histogram;
    std::size_t best = 0;
    for (std::size_t p = 1; p < hist.size(); ++p)
        if (hist[p] > hist[best]) best = p;
    return best;
}

/// Plurality vote over the trees' leaf-majority classes; ties resolve in
/// party id order.
inline Prediction predict(const Forest& forest, std::span<const double> x) {
    if (static_cast<int>(x.size()) != forest.K) raise("predict: feature dimension mismatch");
    std::vector<std::int64_t> votes(forest.parties.size(), 0);
    for (const auto& tree : forest.trees) ++votes[tree_leaf_class(tree, x)];
    std::size_t best = 0;
    for (std::size_t p = 1; p < votes.size(); ++p)
        if (votes[p] > votes[best]) best = p;
    Prediction out;
    out.party = forest.parties[best];
    out.vote_shares.reserve(votes.size());
    for (const auto v : votes)
        out.vote_shares.push_back(static_cast<double>(v) /
                                  static_cast<double>(forest.trees.size()));
    return out;
}

inline Prediction predict(const Forest& forest, const FeatureVector& x) {
    return predict(forest, std::span<const double>(x.values));
}

/// Mean decrease of the class-entropy part of the criterion, weighted by
/// node sample counts and normalized to sum to 1.
inline std::vector<double> feature_importance(const Forest& forest) {
    std::vector<double> imp(static_cast<std::size_t>(forest.K), 0.0);
    for (const auto& tree : forest.trees) {
        for (const auto& nd : tree.nodes) {
            if (nd.is_leaf()) continue;
            const auto& l = tree.nodes[static_cast<std::size_t>(nd.left)];
            const auto& r = tree.nodes[static_cast<std::size_t>(nd.right)];
            const double decrease = static_cast<double>(nd.n) * nd.h_t -
                                    (static_cast<double>(l.n) * l.h_t +
                                     static_cast<double>(r.n) * r.h_t);
            imp[static_cast<std::size_t>(nd.feature)] += decrease;
        }
    }
    double total = 0;
    for (const auto v : imp) total += v;
    if (total > 0)
        for (auto& v : imp) v /= total;
    return imp;
}

// ---------------------------------------------------------------------------
// Canonical tree encoding (byte-exact; used by tests and the file container)
// ---------------------------------------------------------------------------

inline void encode_tree(const Tree& tree, ByteWriter& w) {
    w.put_u64(tree.nodes.size());
    for (const auto& nd : tree.nodes) {
        w.put_i32(nd.feature);
        w.put_f64(nd.threshold);
        w.put_i32(nd.left);
        w.put_i32(nd.right);
        w.put_i64(nd.n);
        w.put_f64(nd.h_t);
        w.put_u64(nd.histogram.size());
        for (const auto c : nd.histogram) w.put_i64(c);
    }
}

inline Tree decode_tree(ByteReader& r) {
    Tree tree;
    const auto count = r.get_u64();
    tree.nodes.resize(count);
    for (auto& nd : tree.nodes) {
        nd.feature = r.get_i32();
        nd.threshold = r.get_f64();
        nd.left = r.get_i32();
        nd.right = r.get_i32();
        nd.n = r.get_i64();
        nd.h_t = r.get_f64();
        nd.histogram.resize(r.get_u64());
        for (auto& c : nd.histogram) c = r.get_i64();
    }
    return tree;
}

/// Byte encoding of the trees alone (no config echo), so structurally equal
/// forests compare bitwise regardless of how they were configured.
inline std::vector<std::uint8_t> serialize_trees(const Forest& forest) {
    ByteWriter w;
    w.put_u64(forest.trees.size());
    for (const auto& t : forest.trees) encode_tree(t, w);
    return w.bytes;
}

}  // namespace slant
