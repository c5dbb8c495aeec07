#pragma once

// Seeded synthetic corpus generator with planted party lexicons and
// per-source marker words; ground truth comes with the corpus, so every
// end-to-end claim can be checked against closed-form expectations.
//
// Each article token is drawn: with probability theta_marker a marker word
// of the article's source, otherwise with probability theta_party a party
// word of its party, otherwise a shared word. Tweets draw from the user's
// party lexicon the same way (no markers) and carry share URLs pointing at
// same-party outlets with configurable purity.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slant/common.hpp"
#include "slant/corpus.hpp"

namespace slant {

struct SynthConfig {
    int parties = 3;
    int sources_per_party = 5;
    int articles_per_source = 200;

    int shared_words = 400;
    int party_words_per_party = 40;
    int marker_words_per_source = 6;

    double theta_party = 0.15;   // party-signal rate
    double theta_marker = 0.15;  // marker rate

    int article_len_min = 80;
    int article_len_max = 200;
    int tokens_per_paragraph = 25;

    int users_per_party = 40;
    int tweets_per_user = 30;
    int tweet_len_min = 8;
    int tweet_len_max = 20;
    double share_rate = 0.3;    // probability a tweet carries a news URL
    double share_purity = 0.9;  // probability the URL points at a same-party source
    double retweet_rate = 0.05;

    std::uint64_t seed = 42;

    void validate() const {
        if (parties < 2) raise("synth: parties must be >= 2");
        if (sources_per_party < 1) raise("synth: sources_per_party must be >= 1");
        if (articles_per_source < 1) raise("synth: articles_per_source must be >= 1");
        if (shared_words < 1) raise("synth: shared_words must be >= 1");
        if (theta_party < 0 || theta_party > 1) raise("synth: theta_party must be in [0,1]");
        if (theta_marker < 0 || theta_marker > 1) raise("synth: theta_marker must be in [0,1]");
        if (share_rate < 0 || share_rate > 1) raise("synth: share_rate must be in [0,1]");
        if (share_purity < 0 || share_purity > 1) raise("synth: share_purity must be in [0,1]");
        if (retweet_rate < 0 || retweet_rate > 1) raise("synth: retweet_rate must be in [0,1]");
        if (theta_marker > 0 && marker_words_per_source < 1)
            raise("synth: theta_marker > 0 requires marker words");
        if (theta_party > 0 && party_words_per_party < 1)
            raise("synth: theta_party > 0 requires party words");
        if (article_len_min < 1 || article_len_max < article_len_min)
            raise("synth: bad article length range");
        if (tweet_len_min < 1 || tweet_len_max < tweet_len_min)
            raise("synth: bad tweet length range");
    }
};

struct SynthManifest {
    std::vector<std::string> shared_words;
    std::map<std::string, std::vector<std::string>> party_words;   // party -> words
    std::map<std::string, std::vector<std::string>> marker_words;  // source -> words

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["shared_words"] = shared_words;
        j["party_words"] = party_words;
        j["marker_words"] = marker_words;
        return j;
    }

    static SynthManifest from_json(const nlohmann::json& j) {
        SynthManifest m;
        m.shared_words = j.at("shared_words").get<std::vector<std::string>>();
        m.party_words =
            j.at("party_words").get<std::map<std::string, std::vector<std::string>>>();
        m.marker_words =
            j.at("marker_words").get<std::map<std::string, std::vector<std::string>>>();
        return m;
    }
};

struct SynthOutput {
    Corpus articles;
    Corpus tweets;
    SourceCatalog catalog;
    SynthManifest manifest;
};

inline SynthOutput generate_synth(const SynthConfig& cfg) {
    cfg.validate();
    SynthOutput out;
    out.articles.kind = DocKind::article;
    out.tweets.kind = DocKind::tweet;

    auto party_name = [](int p) { return "party" + std::to_string(p); };
    auto source_name = [&](int p, int s) {
        return party_name(p) + "-s" + std::to_string(s);
    };

    for (int p = 0; p < cfg.parties; ++p) out.catalog.parties.push_back(party_name(p));
    for (int p = 0; p < cfg.parties; ++p) {
        for (int s = 0; s < cfg.sources_per_party; ++s) {
            SourceInfo info;
            info.id = source_name(p, s);
            info.name = info.id;
            info.party = party_name(p);
            info.url_patterns.push_back(info.id + ".news.example");
            out.catalog.sources.push_back(info);
        }
    }
    out.catalog.validate();

    for (int w = 0; w < cfg.shared_words; ++w)
        out.manifest.shared_words.push_back("sh" + std::to_string(w));
    for (int p = 0; p < cfg.parties; ++p) {
        auto& words = out.manifest.party_words[party_name(p)];
        for (int w = 0; w < cfg.party_words_per_party; ++w)
            words.push_back("p" + std::to_string(p) + "w" + std::to_string(w));
    }
    for (int p = 0; p < cfg.parties; ++p) {
        for (int s = 0; s < cfg.sources_per_party; ++s) {
            auto& words = out.manifest.marker_words[source_name(p, s)];
            for (int w = 0; w < cfg.marker_words_per_source; ++w)
                words.push_back("m" + std::to_string(p) + "x" + std::to_string(s) + "n" +
                                std::to_string(w));
        }
    }

    std::mt19937_64 rng(derive_seed(cfg.seed, 0));
    auto pick = [&](const std::vector<std::string>& v) -> const std::string& {
        return v[uniform_below(rng, v.size())];
    };

    // Articles.
    for (int p = 0; p < cfg.parties; ++p) {
        const auto& pwords = out.manifest.party_words[party_name(p)];
        for (int s = 0; s < cfg.sources_per_party; ++s) {
            const auto src = source_name(p, s);
            const auto& mwords = out.manifest.marker_words[src];
            for (int a = 0; a < cfg.articles_per_source; ++a) {
                const int len =
                    cfg.article_len_min +
                    static_cast<int>(uniform_below(
                        rng, static_cast<std::uint64_t>(cfg.article_len_max - cfg.article_len_min + 1)));
                std::string text;
                for (int t = 0; t < len; ++t) {
                    if (t > 0)
                        text += (t % cfg.tokens_per_paragraph == 0) ? '\n' : ' ';
                    const double u = uniform_real01(rng);
                    if (u < cfg.theta_marker)
                        text += pick(mwords);
                    else if (uniform_real01(rng) < cfg.theta_party)
                        text += pick(pwords);
                    else
                        text += pick(out.manifest.shared_words);
                }
                Document doc;
                doc.id = src + "-a" + std::to_string(a);
                doc.source = src;
                doc.text = std::move(text);
                doc.lang = "ru";
                out.articles.docs.push_back(std::move(doc));
            }
        }
    }

    // Tweets.
    for (int p = 0; p < cfg.parties; ++p) {
        const auto& pwords = out.manifest.party_words[party_name(p)];
        for (int u = 0; u < cfg.users_per_party; ++u) {
            const auto user = party_name(p) + "-u" + std::to_string(u);
            for (int t = 0; t < cfg.tweets_per_user; ++t) {
                const int len =
                    cfg.tweet_len_min +
                    static_cast<int>(uniform_below(
                        rng, static_cast<std::uint64_t>(cfg.tweet_len_max - cfg.tweet_len_min + 1)));
                std::string text;
                const bool is_retweet = uniform_real01(rng) < cfg.retweet_rate;
                if (is_retweet) text += "RT @other: ";
                for (int i = 0; i < len; ++i) {
                    if (i) text += ' ';
                    if (uniform_real01(rng) < cfg.theta_party)
                        text += pick(pwords);
                    else
                        text += pick(out.manifest.shared_words);
                }
                if (uniform_real01(rng) < cfg.share_rate) {
                    int share_party = p;
                    if (uniform_real01(rng) >= cfg.share_purity && cfg.parties > 1) {
                        share_party = static_cast<int>(
                            uniform_below(rng, static_cast<std::uint64_t>(cfg.parties - 1)));
                        if (share_party >= p) ++share_party;
                    }
                    const auto share_src = source_name(
                        share_party,
                        static_cast<int>(uniform_below(
                            rng, static_cast<std::uint64_t>(cfg.sources_per_party))));
                    text += " http://" + share_src + ".news.example/a/" +
                            std::to_string(uniform_below(rng, 100000));
                }
                Document doc;
                doc.id = user + "-t" + std::to_string(t);
                doc.user = user;
                doc.kind = DocKind::tweet;
                doc.text = std::move(text);
                doc.lang = "ru";
                doc.retweet = is_retweet;
                out.tweets.docs.push_back(std::move(doc));
            }
        }
    }

    tokenize_all(out.articles);
    tokenize_all(out.tweets);
    return out;
}

}  // namespace slant
