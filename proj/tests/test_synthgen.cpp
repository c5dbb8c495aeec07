#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "slant/markers.hpp"
#include "slant/synthgen.hpp"

using namespace slant;

namespace {

SynthConfig small_config() {
    SynthConfig cfg;
    cfg.parties = 3;
    cfg.sources_per_party = 3;
    cfg.articles_per_source = 40;
    cfg.shared_words = 80;
    cfg.party_words_per_party = 12;
    cfg.marker_words_per_source = 4;
    cfg.users_per_party = 6;
    cfg.tweets_per_user = 8;
    cfg.seed = 7;
    return cfg;
}

}  // namespace

TEST_CASE("generation is reproducible from (config, seed)", "[synthgen]") {
    const auto cfg = small_config();
    const auto a = generate_synth(cfg);
    const auto b = generate_synth(cfg);
    REQUIRE(a.articles.size() == b.articles.size());
    for (std::size_t i = 0; i < a.articles.size(); ++i) {
        REQUIRE(a.articles.docs[i].id == b.articles.docs[i].id);
        REQUIRE(a.articles.docs[i].text == b.articles.docs[i].text);
    }
    for (std::size_t i = 0; i < a.tweets.size(); ++i)
        REQUIRE(a.tweets.docs[i].text == b.tweets.docs[i].text);

    auto c = cfg;
    c.seed = 8;
    const auto d = generate_synth(c);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.articles.size() && !any_diff; ++i)
        any_diff = a.articles.docs[i].text != d.articles.docs[i].text;
    REQUIRE(any_diff);
}

TEST_CASE("structure: counts, catalog, and manifest line up", "[synthgen]") {
    const auto cfg = small_config();
    const auto out = generate_synth(cfg);
    REQUIRE(out.articles.size() ==
            static_cast<std::size_t>(cfg.parties * cfg.sources_per_party * cfg.articles_per_source));
    REQUIRE(out.tweets.size() ==
            static_cast<std::size_t>(cfg.parties * cfg.users_per_party * cfg.tweets_per_user));
    REQUIRE(out.catalog.sources.size() ==
            static_cast<std::size_t>(cfg.parties * cfg.sources_per_party));
    REQUIRE(out.manifest.marker_words.size() == out.catalog.sources.size());

    const auto j = out.manifest.to_json();
    const auto restored = SynthManifest::from_json(j);
    REQUIRE(restored.shared_words == out.manifest.shared_words);
    REQUIRE(restored.marker_words == out.manifest.marker_words);
}

TEST_CASE("planted markers appear in exactly one source each", "[synthgen]") {
    const auto out = generate_synth(small_config());
    // word -> set of sources whose articles contain it
    std::map<std::string, std::set<std::string>> seen;
    for (const auto& doc : out.articles.docs)
        for (const auto& t : doc.tokens) seen[t].insert(doc.source);
    for (const auto& [src, words] : out.manifest.marker_words) {
        for (const auto& w : words) {
            const auto it = seen.find(w);
            if (it == seen.end()) continue;  // may legitimately never be drawn
            CAPTURE(src, w);
            REQUIRE(it->second.size() == 1);
            REQUIRE(*it->second.begin() == src);
        }
    }

    SECTION("so marker_ranking assigns them rho_bar = 1.0") {
        const auto vocab = build_vocab(out.articles, 1);
        const auto table = source_frequencies(out.articles, out.catalog, vocab);
        const auto ranking = marker_ranking(table, 0.05);
        std::set<std::string> marker_set;
        for (const auto& [src, words] : out.manifest.marker_words)
            marker_set.insert(words.begin(), words.end());
        for (const auto& row : ranking.rows) {
            if (marker_set.count(row.word)) REQUIRE(row.rho_bar == 1.0);
        }
    }
}

TEST_CASE("null construction: zero rates produce no planted signal", "[synthgen]") {
    auto cfg = small_config();
    cfg.theta_party = 0;
    cfg.theta_marker = 0;
    const auto out = generate_synth(cfg);
    std::set<std::string> shared(out.manifest.shared_words.begin(),
                                 out.manifest.shared_words.end());
    for (const auto& doc : out.articles.docs)
        for (const auto& t : doc.tokens) REQUIRE(shared.count(t) == 1);
}

TEST_CASE("marker-free regime plants no marker words", "[synthgen]") {
    auto cfg = small_config();
    cfg.theta_marker = 0;
    cfg.theta_party = 0.3;
    const auto out = generate_synth(cfg);
    std::set<std::string> markers;
    for (const auto& [src, words] : out.manifest.marker_words)
        markers.insert(words.begin(), words.end());
    for (const auto& doc : out.articles.docs)
        for (const auto& t : doc.tokens) REQUIRE(markers.count(t) == 0);

    SECTION("top rho_bar values stay below 1 for frequent words") {
        const auto vocab = build_vocab(out.articles, 5);
        const auto table = source_frequencies(out.articles, out.catalog, vocab);
        const auto ranking = marker_ranking(table, 0.05);
        REQUIRE_FALSE(ranking.rows.empty());
        // with no exclusive markers, no frequent word is source-exclusive
        for (const auto& row : ranking.rows) REQUIRE(row.rho_bar < 1.0);
    }
}

TEST_CASE("empirical marker fraction tracks theta_marker", "[synthgen]") {
    SynthConfig cfg;  // defaults: 3 x 5 x 200 articles, theta_m = 0.15
    cfg.users_per_party = 1;
    cfg.tweets_per_user = 1;
    const auto out = generate_synth(cfg);
    std::set<std::string> markers;
    for (const auto& [src, words] : out.manifest.marker_words)
        markers.insert(words.begin(), words.end());
    std::int64_t total = 0, marker_hits = 0;
    for (const auto& doc : out.articles.docs) {
        for (const auto& t : doc.tokens) {
            ++total;
            if (markers.count(t)) ++marker_hits;
        }
    }
    const double fraction = static_cast<double>(marker_hits) / static_cast<double>(total);
    REQUIRE(fraction == Catch::Approx(cfg.theta_marker).margin(0.02));
}

TEST_CASE("share URLs resolve against the generated catalog", "[synthgen]") {
    auto cfg = small_config();
    cfg.share_rate = 1.0;
    cfg.share_purity = 1.0;
    cfg.retweet_rate = 0;
    const auto out = generate_synth(cfg);
    std::size_t with_url = 0;
    for (const auto& doc : out.tweets.docs) {
        const auto pos = doc.text.find("http://");
        if (pos == std::string::npos) continue;
        ++with_url;
        const auto end = doc.text.find(' ', pos);
        const auto url = doc.text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        const auto resolved = out.catalog.resolve_url(url);
        REQUIRE(resolved.has_value());
        // purity 1.0: the linked source belongs to the user's party
        const auto party = doc.user.substr(0, doc.user.find("-u"));
        REQUIRE(out.catalog.party_of(*resolved) == party);
    }
    REQUIRE(with_url == out.tweets.size());
}

TEST_CASE("config validation catches inconsistent rates", "[synthgen]") {
    auto cfg = small_config();
    cfg.marker_words_per_source = 0;
    cfg.theta_marker = 0.2;
    REQUIRE_THROWS_AS(generate_synth(cfg), Error);
    cfg.theta_marker = 0;
    REQUIRE_NOTHROW(generate_synth(cfg));
}
