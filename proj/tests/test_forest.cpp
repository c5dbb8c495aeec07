#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "slant/forest.hpp"
#include "slant/synthgen.hpp"

using namespace slant;

namespace {

LabeledExample example(std::vector<double> features, std::string party, std::string source) {
    LabeledExample ex;
    ex.features.values = std::move(features);
    ex.features.covered_tokens = 1;
    ex.party = std::move(party);
    ex.source = std::move(source);
    return ex;
}

std::vector<LabeledExample> random_examples(std::mt19937_64& rng, int n, int K, int n_parties,
                                            int n_sources) {
    std::vector<LabeledExample> out;
    for (int i = 0; i < n; ++i) {
        std::vector<double> f(static_cast<std::size_t>(K));
        for (auto& x : f) x = uniform_real01(rng);
        out.push_back(example(std::move(f), "p" + std::to_string(rng() % n_parties),
                              "s" + std::to_string(rng() % n_sources)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Independent reference: a plain weighted-entropy forest. Shares the seeding
// and sampling protocol with the library but scores splits with class
// entropy alone, with its own entropy and scan code.
// ---------------------------------------------------------------------------
namespace reference {

struct Data {
    int K;
    std::vector<std::vector<double>> x;
    std::vector<int> party;
    std::vector<std::string> parties;
};

Data make_data(std::span<const LabeledExample> examples) {
    Data d;
    d.K = static_cast<int>(examples[0].features.values.size());
    std::set<std::string> ps;
    for (const auto& e : examples) ps.insert(e.party);
    d.parties.assign(ps.begin(), ps.end());
    for (const auto& e : examples) {
        d.x.push_back(e.features.values);
        d.party.push_back(static_cast<int>(
            std::lower_bound(d.parties.begin(), d.parties.end(), e.party) - d.parties.begin()));
    }
    return d;
}

double entropy(const std::vector<std::int64_t>& counts, std::int64_t total) {
    if (total <= 0) return 0.0;
    double acc = 0;
    for (const auto c : counts) {
        if (c <= 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        acc += p * std::log(p);
    }
    return acc == 0.0 ? 0.0 : -acc;
}

std::int32_t build(const Data& d, const std::vector<std::int32_t>& rows, const ForestConfig& cfg,
                   int m, int depth, std::mt19937_64& rng, Tree& tree) {
    const auto n = static_cast<std::int64_t>(rows.size());
    std::vector<std::int64_t> counts(d.parties.size(), 0);
    for (const auto r : rows) ++counts[static_cast<std::size_t>(d.party[static_cast<std::size_t>(r)])];
    const double h = entropy(counts, n);

    const auto id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.back().n = n;
    tree.nodes.back().h_t = h;

    auto leaf = [&]() {
        tree.nodes[static_cast<std::size_t>(id)].histogram = counts;
        return id;
    };
    int live = 0;
    for (const auto c : counts)
        if (c > 0) ++live;
    if (live <= 1 || n < 2 * cfg.min_samples_leaf) return leaf();
    if (cfg.max_depth && depth >= *cfg.max_depth) return leaf();

    auto feats = sample_distinct(rng, d.K, m);
    std::sort(feats.begin(), feats.end());

    const double unsplit = h;
    double best_score = unsplit;
    int best_f = -1;
    double best_thr = 0;
    std::vector<std::pair<double, int>> vals(rows.size());
    for (const auto f : feats) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto r = static_cast<std::size_t>(rows[i]);
            vals[i] = {d.x[r][static_cast<std::size_t>(f)], d.party[r]};
        }
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<std::int64_t> left(d.parties.size(), 0);
        for (std::int64_t i = 0; i + 1 < n; ++i) {
            ++left[static_cast<std::size_t>(vals[static_cast<std::size_t>(i)].second)];
            const double v = vals[static_cast<std::size_t>(i)].first;
            const double next = vals[static_cast<std::size_t>(i + 1)].first;
            if (v == next) continue;
            const std::int64_t nl = i + 1, nr = n - nl;
            if (nl < cfg.min_samples_leaf || nr < cfg.min_samples_leaf) continue;
            const double thr = (v + next) * 0.5;
            if (!(thr > v)) continue;
            std::vector<std::int64_t> right(d.parties.size());
            for (std::size_t p = 0; p < right.size(); ++p) right[p] = counts[p] - left[p];
            const double wl =
                cfg.weighted_children ? static_cast<double>(nl) / static_cast<double>(n) : 1.0;
            const double wr =
                cfg.weighted_children ? static_cast<double>(nr) / static_cast<double>(n) : 1.0;
            const double score = wl * entropy(left, nl) + wr * entropy(right, nr);
            if (score < best_score) {
                best_score = score;
                best_f = f;
                best_thr = thr;
            }
        }
    }
    if (best_f < 0) return leaf();

    std::vector<std::int32_t> lr, rr;
    for (const auto r : rows) {
        if (d.x[static_cast<std::size_t>(r)][static_cast<std::size_t>(best_f)] < best_thr)
            lr.push_back(r);
        else
            rr.push_back(r);
    }
    tree.nodes[static_cast<std::size_t>(id)].feature = best_f;
    tree.nodes[static_cast<std::size_t>(id)].threshold = best_thr;
    const auto li = build(d, lr, cfg, m, depth + 1, rng, tree);
    tree.nodes[static_cast<std::size_t>(id)].left = li;
    const auto ri = build(d, rr, cfg, m, depth + 1, rng, tree);
    tree.nodes[static_cast<std::size_t>(id)].right = ri;
    return id;
}

Forest train(std::span<const LabeledExample> examples, const ForestConfig& cfg) {
    const auto d = make_data(examples);
    int m = cfg.features_per_split <= 0
                ? static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d.K))))
                : cfg.features_per_split;
    m = std::clamp(m, 1, d.K);
    Forest f;
    f.parties = d.parties;
    f.K = d.K;
    const auto n = examples.size();
    for (int t = 0; t < cfg.n_trees; ++t) {
        std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
        std::vector<std::int32_t> rows;
        if (cfg.bootstrap) {
            for (std::size_t i = 0; i < n; ++i)
                rows.push_back(static_cast<std::int32_t>(uniform_below(rng, n)));
        } else {
            for (std::size_t i = 0; i < n; ++i) rows.push_back(static_cast<std::int32_t>(i));
        }
        Tree tree;
        build(d, rows, cfg, m, 0, rng, tree);
        f.trees.push_back(std::move(tree));
    }
    return f;
}

}  // namespace reference

// Brute-force best split: every (feature, midpoint) pair scored through the
// public split_score, same tie rules.
std::optional<std::tuple<std::int32_t, double, double>> brute_force_best_split(
    std::span<const LabeledExample> examples, std::span<const int> features,
    const ForestConfig& cfg) {
    const auto n = static_cast<std::int64_t>(examples.size());
    if (n < 2 * cfg.min_samples_leaf) return std::nullopt;
    std::vector<LabeledExample> all(examples.begin(), examples.end());
    const double unsplit = class_entropy(all) - cfg.alpha * source_entropy(all);

    std::vector<int> feats(features.begin(), features.end());
    std::sort(feats.begin(), feats.end());
    std::optional<std::tuple<std::int32_t, double, double>> best;
    double best_score = unsplit;
    for (const auto f : feats) {
        std::vector<double> vals;
        for (const auto& e : examples) vals.push_back(e.features.values[static_cast<std::size_t>(f)]);
        std::sort(vals.begin(), vals.end());
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            if (vals[i] == vals[i + 1]) continue;
            const double thr = (vals[i] + vals[i + 1]) * 0.5;
            if (!(thr > vals[i])) continue;
            std::vector<LabeledExample> left, right;
            for (const auto& e : examples) {
                if (e.features.values[static_cast<std::size_t>(f)] < thr)
                    left.push_back(e);
                else
                    right.push_back(e);
            }
            if (static_cast<std::int64_t>(left.size()) < cfg.min_samples_leaf ||
                static_cast<std::int64_t>(right.size()) < cfg.min_samples_leaf)
                continue;
            const double score = split_score(left, right, cfg);
            if (score < best_score) {
                best_score = score;
                best = std::make_tuple(f, thr, score);
            }
        }
    }
    return best;
}

}  // namespace

TEST_CASE("class entropy matches hand values", "[forest]") {
    std::vector<LabeledExample> same = {example({0}, "A", "s1"), example({0}, "A", "s2"),
                                        example({0}, "A", "s3")};
    REQUIRE(class_entropy(same) == 0.0);

    std::vector<LabeledExample> half = {example({0}, "A", "s1"), example({0}, "B", "s1")};
    REQUIRE(class_entropy(half) == Catch::Approx(std::log(2.0)).epsilon(1e-12));

    std::vector<LabeledExample> mixed;
    for (int i = 0; i < 4; ++i) mixed.push_back(example({0}, "A", "s1"));
    for (int i = 0; i < 2; ++i) mixed.push_back(example({0}, "B", "s1"));
    const double expected = -(2.0 / 3) * std::log(2.0 / 3) - (1.0 / 3) * std::log(1.0 / 3);
    REQUIRE(class_entropy(mixed) == Catch::Approx(expected).epsilon(1e-12));
    REQUIRE(class_entropy(std::vector<LabeledExample>{}) == 0.0);
}

TEST_CASE("source entropy mirrors class entropy on source ids", "[forest]") {
    std::vector<LabeledExample> same = {example({0}, "A", "s1"), example({0}, "B", "s1")};
    REQUIRE(source_entropy(same) == 0.0);

    std::vector<LabeledExample> half = {example({0}, "A", "s1"), example({0}, "A", "s2")};
    REQUIRE(source_entropy(half) == Catch::Approx(std::log(2.0)).epsilon(1e-12));

    std::vector<LabeledExample> mixed;
    for (int i = 0; i < 4; ++i) mixed.push_back(example({0}, "A", "s1"));
    for (int i = 0; i < 2; ++i) mixed.push_back(example({0}, "A", "s2"));
    const double expected = -(2.0 / 3) * std::log(2.0 / 3) - (1.0 / 3) * std::log(1.0 / 3);
    REQUIRE(source_entropy(mixed) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("split_score at alpha 0 is the weighted class-entropy impurity", "[forest]") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        const auto left = random_examples(rng, 2 + static_cast<int>(rng() % 10), 1, 3, 3);
        const auto right = random_examples(rng, 2 + static_cast<int>(rng() % 10), 1, 3, 3);
        ForestConfig cfg;
        cfg.alpha = 0;
        cfg.weighted_children = true;
        const double parent = static_cast<double>(left.size() + right.size());
        const double expected = (static_cast<double>(left.size()) / parent) * class_entropy(left) +
                                (static_cast<double>(right.size()) / parent) * class_entropy(right);
        REQUIRE(split_score(left, right, cfg) == expected);
    }
}

TEST_CASE("split_score hand case: pure classes with full source mixing", "[forest]") {
    const std::vector<LabeledExample> left = {example({0}, "A", "s1"), example({0}, "A", "s2")};
    const std::vector<LabeledExample> right = {example({0}, "B", "s3"), example({0}, "B", "s4")};
    ForestConfig cfg;
    cfg.alpha = 1.0;
    cfg.weighted_children = true;

    cfg.criterion = CriterionMode::corrected_sum;
    REQUIRE(split_score(left, right, cfg) == Catch::Approx(-std::log(2.0)).epsilon(1e-12));

    cfg.criterion = CriterionMode::literal_difference;
    REQUIRE(split_score(left, right, cfg) == Catch::Approx(0.0).margin(1e-15));

    SECTION("the literal printed form: unweighted difference") {
        cfg.weighted_children = false;
        REQUIRE(split_score(left, right, cfg) == Catch::Approx(0.0).margin(1e-15));
    }

    SECTION("both sides empty is an error") {
        REQUIRE_THROWS_AS(split_score(std::vector<LabeledExample>{}, std::vector<LabeledExample>{}, cfg),
                          Error);
    }
}

TEST_CASE("best_split finds the separating midpoint on 1-D separable data", "[forest]") {
    std::vector<LabeledExample> ex;
    ex.push_back(example({0.1}, "A", "s1"));
    ex.push_back(example({0.2}, "A", "s2"));
    ex.push_back(example({0.7}, "B", "s1"));
    ex.push_back(example({0.9}, "B", "s2"));
    ForestConfig cfg;
    cfg.alpha = 0;
    cfg.min_samples_leaf = 1;
    const std::vector<int> feats = {0};
    const auto split = best_split(ex, feats, cfg);
    REQUIRE(split.has_value());
    REQUIRE(std::get<0>(*split) == 0);
    REQUIRE(std::get<1>(*split) == Catch::Approx(0.45).epsilon(1e-12));
}

TEST_CASE("constant features yield no split", "[forest]") {
    std::vector<LabeledExample> ex;
    for (int i = 0; i < 8; ++i)
        ex.push_back(example({0.5, 0.5}, i % 2 ? "A" : "B", "s" + std::to_string(i % 3)));
    ForestConfig cfg;
    cfg.min_samples_leaf = 1;
    const std::vector<int> feats = {0, 1};
    REQUIRE_FALSE(best_split(ex, feats, cfg).has_value());
}

TEST_CASE("best_split matches the brute-force oracle", "[forest]") {
    std::mt19937_64 rng(1234);
    const std::vector<int> feats = {0, 1, 2};
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 4 + static_cast<int>(rng() % 9);  // n <= 12
        auto ex = random_examples(rng, n, 3, 2 + static_cast<int>(rng() % 2),
                                  2 + static_cast<int>(rng() % 3));
        ForestConfig cfg;
        cfg.min_samples_leaf = 1 + static_cast<int>(rng() % 2);
        cfg.alpha = std::vector<double>{0.0, 0.5, 1.0}[rng() % 3];
        cfg.criterion = (rng() % 2) ? CriterionMode::corrected_sum : CriterionMode::literal_difference;
        cfg.weighted_children = (rng() % 2) != 0;

        const auto got = best_split(ex, feats, cfg);
        const auto want = brute_force_best_split(ex, feats, cfg);
        CAPTURE(trial, n, cfg.alpha, static_cast<int>(cfg.criterion), cfg.weighted_children);
        REQUIRE(got.has_value() == want.has_value());
        if (got) {
            REQUIRE(std::get<0>(*got) == std::get<0>(*want));
            REQUIRE(std::get<1>(*got) == std::get<1>(*want));
            REQUIRE(std::get<2>(*got) == Catch::Approx(std::get<2>(*want)).margin(1e-12));
        }
    }
}

TEST_CASE("a depth-1 no-bootstrap forest is the best_split stump", "[forest]") {
    std::vector<LabeledExample> ex;
    ex.push_back(example({0.1, 0.9}, "A", "s1"));
    ex.push_back(example({0.2, 0.1}, "A", "s2"));
    ex.push_back(example({0.3, 0.5}, "A", "s1"));
    ex.push_back(example({0.8, 0.8}, "B", "s2"));
    ex.push_back(example({0.85, 0.2}, "B", "s1"));
    ex.push_back(example({0.95, 0.6}, "B", "s2"));
    ForestConfig cfg;
    cfg.n_trees = 1;
    cfg.max_depth = 1;
    cfg.min_samples_leaf = 1;
    cfg.alpha = 0.5;
    cfg.bootstrap = false;
    cfg.features_per_split = 2;

    const auto forest = train_forest(ex, cfg);
    const std::vector<int> feats = {0, 1};
    const auto stump = best_split(ex, feats, cfg);
    REQUIRE(stump.has_value());
    const auto& root = forest.trees[0].nodes[0];
    REQUIRE_FALSE(root.is_leaf());
    REQUIRE(root.feature == std::get<0>(*stump));
    REQUIRE(root.threshold == std::get<1>(*stump));
    REQUIRE(root.threshold == Catch::Approx(0.55).epsilon(1e-12));
}

TEST_CASE("corrected_sum with alpha 0 reduces bitwise to plain entropy trees", "[forest]") {
    std::mt19937_64 rng(777);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 30 + static_cast<int>(rng() % 171);  // n <= 200
        const int K = 2 + static_cast<int>(rng() % 9);     // K <= 10
        auto ex = random_examples(rng, n, K, 2 + static_cast<int>(rng() % 2),
                                  2 + static_cast<int>(rng() % 3));
        ForestConfig cfg;
        cfg.n_trees = 3;
        cfg.min_samples_leaf = 1 + static_cast<int>(rng() % 5);
        cfg.alpha = 0.0;
        cfg.criterion = CriterionMode::corrected_sum;
        cfg.weighted_children = (trial % 2) == 0;
        cfg.bootstrap = (trial % 4) < 2;
        cfg.seed = rng();
        cfg.features_per_split = 1 + static_cast<int>(rng() % K);

        const auto ours = train_forest(ex, cfg);
        const auto ref = reference::train(ex, cfg);
        CAPTURE(trial, n, K, cfg.min_samples_leaf, cfg.weighted_children, cfg.bootstrap);
        REQUIRE(serialize_trees(ours) == serialize_trees(ref));
    }
}

TEST_CASE("training is deterministic given the seed", "[forest]") {
    std::mt19937_64 rng(505);
    auto ex = random_examples(rng, 120, 6, 3, 4);
    ForestConfig cfg;
    cfg.n_trees = 10;
    cfg.seed = 99;
    const auto a = train_forest(ex, cfg);
    const auto b = train_forest(ex, cfg);
    REQUIRE(serialize_trees(a) == serialize_trees(b));

    SECTION("parallel workers build the same forest") {
        const auto c = train_forest(ex, cfg, /*parallel_workers=*/4);
        REQUIRE(serialize_trees(a) == serialize_trees(c));
    }
}

TEST_CASE("train_forest validates parties and sources", "[forest]") {
    std::mt19937_64 rng(2);
    auto single_party = random_examples(rng, 20, 3, 1, 3);
    ForestConfig cfg;
    REQUIRE_THROWS_AS(train_forest(single_party, cfg), Error);

    auto single_source = random_examples(rng, 20, 3, 2, 1);
    cfg.alpha = 0.5;
    REQUIRE_THROWS_AS(train_forest(single_source, cfg), Error);
    cfg.alpha = 0.0;  // fine without the source term
    REQUIRE_NOTHROW(train_forest(single_source, cfg));
}

TEST_CASE("prediction votes and tie rules", "[forest]") {
    Forest forest;
    forest.K = 1;
    forest.parties = {"A", "B"};
    auto leaf_tree = [&](std::int64_t a, std::int64_t b) {
        Tree t;
        Tree::Node nd;
        nd.n = a + b;
        nd.histogram = {a, b};
        t.nodes.push_back(nd);
        return t;
    };

    SECTION("all trees agree") {
        forest.trees = {leaf_tree(5, 1), leaf_tree(9, 2), leaf_tree(3, 0)};
        const auto pred = predict(forest, std::vector<double>{0.0});
        REQUIRE(pred.party == "A");
        REQUIRE(pred.vote_shares == std::vector<double>{1.0, 0.0});
    }

    SECTION("a 2-tree tie resolves in party order") {
        forest.trees = {leaf_tree(5, 1), leaf_tree(0, 9)};
        const auto pred = predict(forest, std::vector<double>{0.0});
        REQUIRE(pred.party == "A");
        REQUIRE(pred.vote_shares == std::vector<double>{0.5, 0.5});
    }

    SECTION("5-tree hand tally") {
        forest.trees = {leaf_tree(5, 1), leaf_tree(0, 9), leaf_tree(1, 4), leaf_tree(2, 8),
                        leaf_tree(7, 0)};
        const auto pred = predict(forest, std::vector<double>{0.0});
        REQUIRE(pred.party == "B");
        REQUIRE(pred.vote_shares[0] == Catch::Approx(0.4));
        REQUIRE(pred.vote_shares[1] == Catch::Approx(0.6));
    }

    SECTION("dimension mismatch") {
        forest.trees = {leaf_tree(1, 0)};
        REQUIRE_THROWS_AS(predict(forest, std::vector<double>{0.0, 1.0}), Error);
    }

    SECTION("leaf tie resolves to the lowest party index") {
        forest.trees = {leaf_tree(4, 4)};
        REQUIRE(predict(forest, std::vector<double>{0.0}).party == "A");
    }
}

TEST_CASE("feature importance shapes", "[forest]") {
    std::vector<LabeledExample> ex;
    ex.push_back(example({0.1, 0.5}, "A", "s1"));
    ex.push_back(example({0.2, 0.5}, "A", "s2"));
    ex.push_back(example({0.9, 0.5}, "B", "s1"));
    ex.push_back(example({0.8, 0.5}, "B", "s2"));
    ForestConfig cfg;
    cfg.n_trees = 1;
    cfg.min_samples_leaf = 1;
    cfg.alpha = 0;
    cfg.bootstrap = false;
    cfg.features_per_split = 2;

    SECTION("single stump gives one-hot importance") {
        const auto forest = train_forest(ex, cfg);
        const auto imp = feature_importance(forest);
        REQUIRE(imp == std::vector<double>{1.0, 0.0});
    }

    SECTION("two stumps on different features split importance 50/50") {
        // Hand-build two stumps with equal entropy decreases.
        Forest forest;
        forest.K = 2;
        forest.parties = {"A", "B"};
        for (int f = 0; f < 2; ++f) {
            Tree t;
            Tree::Node root;
            root.feature = f;
            root.threshold = 0.5;
            root.n = 4;
            root.h_t = std::log(2.0);
            root.left = 1;
            root.right = 2;
            Tree::Node l, r;
            l.n = 2; l.h_t = 0; l.histogram = {2, 0};
            r.n = 2; r.h_t = 0; r.histogram = {0, 2};
            t.nodes = {root, l, r};
            forest.trees.push_back(t);
        }
        const auto imp = feature_importance(forest);
        REQUIRE(imp[0] == Catch::Approx(0.5).epsilon(1e-12));
        REQUIRE(imp[1] == Catch::Approx(0.5).epsilon(1e-12));
    }

    SECTION("unused dimensions get zero importance") {
        std::vector<LabeledExample> wide;
        for (const auto& e : ex) {
            auto copy = e;
            copy.features.values.push_back(0.25);  // constant third feature
            wide.push_back(copy);
        }
        cfg.features_per_split = 3;
        const auto forest = train_forest(wide, cfg);
        const auto imp = feature_importance(forest);
        REQUIRE(imp[2] == 0.0);
    }
}

TEST_CASE("entropy bounds hold on every trained node", "[forest]") {
    std::mt19937_64 rng(31337);
    auto ex = random_examples(rng, 150, 5, 3, 4);
    ForestConfig cfg;
    cfg.n_trees = 12;
    cfg.alpha = 0.7;
    cfg.min_samples_leaf = 2;
    const auto forest = train_forest(ex, cfg);
    const double h_max = std::log(static_cast<double>(forest.parties.size()));
    for (const auto& tree : forest.trees) {
        REQUIRE_FALSE(tree.nodes.empty());
        for (const auto& nd : tree.nodes) {
            REQUIRE(nd.h_t >= 0.0);
            REQUIRE(nd.h_t <= h_max + 1e-12);
            if (nd.is_leaf()) REQUIRE_FALSE(nd.histogram.empty());
        }
    }
}

TEST_CASE("growing alpha drains importance from marker features", "[forest]") {
    SynthConfig scfg;
    scfg.parties = 3;
    scfg.sources_per_party = 3;
    scfg.articles_per_source = 60;
    scfg.shared_words = 60;
    scfg.party_words_per_party = 15;
    scfg.marker_words_per_source = 4;
    scfg.article_len_min = 40;
    scfg.article_len_max = 80;
    scfg.users_per_party = 1;
    scfg.tweets_per_user = 1;
    scfg.seed = 11;
    const auto out = generate_synth(scfg);
    const auto vocab = build_vocab(out.articles, 1);

    // One cluster per vocabulary word keeps the marker features identifiable.
    ClusterModel cm;
    cm.K = vocab.size();
    cm.dim = 1;
    cm.centroids.assign(static_cast<std::size_t>(cm.K), 0.0f);
    for (std::int32_t i = 0; i < cm.K; ++i) cm.assignment.push_back(i);

    const auto examples = corpus_examples(out.articles, out.catalog, vocab, cm);
    std::set<std::size_t> marker_ids;
    for (const auto& [src, words] : out.manifest.marker_words)
        for (const auto& w : words)
            if (const auto id = vocab.id(w)) marker_ids.insert(static_cast<std::size_t>(*id));

    auto marker_mass = [&](const Forest& f) {
        const auto imp = feature_importance(f);
        double m = 0;
        for (const auto id : marker_ids) m += imp[id];
        return m;
    };
    const std::vector<double> grid = {0.0, 0.25, 0.5, 1.0, 2.0};

    SECTION("strict monotonicity without bootstrap") {
        std::vector<double> masses;
        for (const auto alpha : grid) {
            ForestConfig cfg;
            cfg.n_trees = 1;
            cfg.bootstrap = false;
            cfg.features_per_split = cm.K;
            cfg.alpha = alpha;
            cfg.min_samples_leaf = 5;
            cfg.seed = 3;
            masses.push_back(marker_mass(train_forest(examples, cfg)));
        }
        for (std::size_t i = 1; i < masses.size(); ++i) {
            CAPTURE(grid[i], masses);
            REQUIRE(masses[i] <= masses[i - 1]);
        }
        REQUIRE(masses.front() > 0.1);  // alpha = 0 leans on markers
        REQUIRE(masses.back() == 0.0);  // alpha = 2 abandons them
    }

    SECTION("bootstrap forests allow one small inversion") {
        std::vector<double> masses;
        for (const auto alpha : grid) {
            ForestConfig cfg;
            cfg.n_trees = 50;
            cfg.alpha = alpha;
            cfg.min_samples_leaf = 5;
            cfg.seed = 3;
            masses.push_back(marker_mass(train_forest(examples, cfg)));
        }
        int inversions = 0;
        for (std::size_t i = 1; i < masses.size(); ++i) {
            if (masses[i] > masses[i - 1]) {
                ++inversions;
                REQUIRE(masses[i] - masses[i - 1] < 0.01);
            }
        }
        REQUIRE(inversions <= 1);
    }
}

TEST_CASE("tree encode/decode round-trips and predicts identically", "[forest]") {
    std::mt19937_64 rng(8080);
    auto ex = random_examples(rng, 100, 4, 3, 3);
    ForestConfig cfg;
    cfg.n_trees = 7;
    cfg.alpha = 0.3;
    const auto forest = train_forest(ex, cfg);

    const auto bytes = serialize_trees(forest);
    ByteReader r(bytes);
    Forest restored;
    restored.config = forest.config;
    restored.parties = forest.parties;
    restored.K = forest.K;
    const auto n_trees = r.get_u64();
    for (std::uint64_t i = 0; i < n_trees; ++i) restored.trees.push_back(decode_tree(r));

    for (int t = 0; t < 1000; ++t) {
        std::vector<double> x(4);
        for (auto& v : x) v = uniform_real01(rng);
        const auto a = predict(forest, x);
        const auto b = predict(restored, x);
        REQUIRE(a.party == b.party);
        REQUIRE(a.vote_shares == b.vote_shares);
    }
}
