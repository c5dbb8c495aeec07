#pragma once

// Twitter-side analytics: news-share extraction, focus/diversity metrics,
// majority-share user labeling, tweet cleaning, and the user-slant
// classification experiment.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "slant/common.hpp"
#include "slant/corpus.hpp"
#include "slant/embedding.hpp"
#include "slant/eval.hpp"
#include "slant/features.hpp"
#include "slant/forest.hpp"

namespace slant {

struct ShareProfile {
    std::string user_id;
    std::map<std::string, std::int64_t> shares;  // source -> n_y
    std::int64_t total = 0;
};

struct UserLabel {
    std::string user_id;
    std::string party;
    double party_share = 0;
};

// ---------------------------------------------------------------------------
// URL extraction and share profiles
// ---------------------------------------------------------------------------

/// Raw URL substrings (http://, https://, www.-prefixed) with trailing
/// punctuation trimmed.
inline std::vector<std::string> extract_urls(std::string_view text) {
    std::vector<std::string> urls;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && detail::is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !detail::is_space(text[j])) ++j;
        std::string_view chunk = text.substr(i, j - i);
        const auto p = detail::find_url_scheme(chunk);
        std::string_view url;
        if (p != std::string_view::npos)
            url = chunk.substr(p);
        else if (detail::starts_with_ci(chunk, "www."))
            url = chunk;
        if (!url.empty()) {
            while (!url.empty()) {
                const char c = url.back();
                if (c == '.' || c == ',' || c == ')' || c == ']' || c == '!' || c == '?' ||
                    c == ';' || c == ':' || c == '"' || c == '\'')
                    url.remove_suffix(1);
                else
                    break;
            }
            if (!url.empty()) urls.emplace_back(url);
        }
        i = j;
    }
    return urls;
}

/// Resolve every URL in every tweet against the catalog; matches increment
/// the (user, source) counter, unmatched URLs are ignored. Profiles are
/// returned for users with at least one matched share, user id order.
inline std::vector<ShareProfile> parse_shares(const Corpus& tweets, const SourceCatalog& catalog) {
    std::map<std::string, ShareProfile> by_user;
    for (const auto& doc : tweets.docs) {
        if (doc.user.empty()) raise("parse_shares: tweet without user id: " + doc.id);
        for (const auto& url : extract_urls(doc.text)) {
            if (const auto src = catalog.resolve_url(url)) {
                auto& profile = by_user[doc.user];
                profile.user_id = doc.user;
                ++profile.shares[*src];
                ++profile.total;
            }
        }
    }
    std::vector<ShareProfile> out;
    out.reserve(by_user.size());
    for (auto& [user, profile] : by_user) out.push_back(std::move(profile));
    return out;
}

// ---------------------------------------------------------------------------
// Focus and diversity metrics
// ---------------------------------------------------------------------------

/// beta: share of the user's most-shared source.
inline double news_focus(const ShareProfile& p) {
    if (p.total < 1) raise("news_focus: empty profile");
    std::int64_t best = 0;
    for (const auto& [src, n] : p.shares) best = std::max(best, n);
    return static_cast<double>(best) / static_cast<double>(p.total);
}

/// beta_party: share of the user's most-shared party's outlets.
inline double party_focus(const ShareProfile& p, const SourceCatalog& catalog) {
    if (p.total < 1) raise("party_focus: empty profile");
    std::map<std::string, std::int64_t> per_party;
    for (const auto& [src, n] : p.shares) per_party[catalog.party_of(src)] += n;
    std::int64_t best = 0;
    for (const auto& [party, n] : per_party) best = std::max(best, n);
    return static_cast<double>(best) / static_cast<double>(p.total);
}

/// gamma: number of distinct sources shared at least once.
inline std::int64_t diversity(const ShareProfile& p) {
    std::int64_t n = 0;
    for (const auto& [src, c] : p.shares)
        if (c > 0) ++n;
    return n;
}

// ---------------------------------------------------------------------------
// User filtering, cleaning, labeling
// ---------------------------------------------------------------------------

/// Users with at least min_tweets tweets of which at least min_share_tweets
/// contain a catalog-matching URL.
inline std::set<std::string> filter_users(const Corpus& tweets, const SourceCatalog& catalog,
                                          std::int64_t min_tweets = 5,
                                          std::int64_t min_share_tweets = 3) {
    std::map<std::string, std::int64_t> tweet_counts, share_counts;
    for (const auto& doc : tweets.docs) {
        ++tweet_counts[doc.user];
        for (const auto& url : extract_urls(doc.text)) {
            if (catalog.resolve_url(url)) {
                ++share_counts[doc.user];
                break;  // count tweets, not links
            }
        }
    }
    std::set<std::string> kept;
    for (const auto& [user, n] : tweet_counts)
        if (n >= min_tweets && share_counts[user] >= min_share_tweets) kept.insert(user);
    return kept;
}

/// Drop (a) retweets (record flag or "RT @" prefix), (b) tweets whose token
/// sequence contains a known article title's token sequence, (c) tweets with
/// a catalog-matching URL. What survives is the user's own language.
inline std::vector<Document> clean_user_tweets(std::span<const Document> tweets,
                                               const std::set<std::string>& article_titles,
                                               const SourceCatalog& catalog) {
    std::vector<std::vector<std::string>> title_tokens;
    for (const auto& t : article_titles) {
        auto toks = tokenize(t);
        if (!toks.empty()) title_tokens.push_back(std::move(toks));
    }
    auto contains_subsequence = [](const std::vector<std::string>& haystack,
                                   const std::vector<std::string>& needle) {
        if (needle.empty() || needle.size() > haystack.size()) return false;
        for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
            bool ok = true;
            for (std::size_t j = 0; j < needle.size(); ++j) {
                if (haystack[i + j] != needle[j]) {
                    ok = false;
                    break;
                }
            }
            if (ok) return true;
        }
        return false;
    };

    std::vector<Document> out;
    for (const auto& doc : tweets) {
        if (doc.retweet) continue;
        if (detail::starts_with_ci(doc.text, "rt @")) continue;
        bool has_catalog_url = false;
        for (const auto& url : extract_urls(doc.text)) {
            if (catalog.resolve_url(url)) {
                has_catalog_url = true;
                break;
            }
        }
        if (has_catalog_url) continue;
        const auto& toks = doc.tokens.empty() ? tokenize(doc.text) : doc.tokens;
        bool has_title = false;
        for (const auto& title : title_tokens) {
            if (contains_subsequence(toks, title)) {
                has_title = true;
                break;
            }
        }
        if (has_title) continue;
        out.push_back(doc);
    }
    return out;
}

/// Majority-share party labels; exact ties are excluded (count reported via
/// excluded_ties when given).
inline std::vector<UserLabel> label_users(std::span<const ShareProfile> profiles,
                                          const SourceCatalog& catalog,
                                          std::int64_t* excluded_ties = nullptr) {
    std::vector<UserLabel> labels;
    std::int64_t ties = 0;
    for (const auto& p : profiles) {
        if (p.total < 1) continue;
        std::map<std::string, std::int64_t> per_party;
        for (const auto& [src, n] : p.shares) per_party[catalog.party_of(src)] += n;
        std::int64_t best = 0;
        for (const auto& [party, n] : per_party) best = std::max(best, n);
        std::vector<std::string> winners;
        for (const auto& [party, n] : per_party)
            if (n == best) winners.push_back(party);
        if (winners.size() != 1) {
            ++ties;
            continue;
        }
        labels.push_back({p.user_id, winners[0],
                          static_cast<double>(best) / static_cast<double>(p.total)});
    }
    if (excluded_ties) *excluded_ties = ties;
    return labels;
}

// ---------------------------------------------------------------------------
// User-slant experiment
// ---------------------------------------------------------------------------

struct UserSlantConfig {
    std::int64_t min_tweets = 5;
    std::int64_t min_share_tweets = 3;
    std::int64_t vocab_min_count = 10;
    int cv_folds = 10;
    std::vector<std::string> parties;  // restriction; empty = all
    std::set<std::string> article_titles;
    std::uint64_t seed = 42;
};

struct UserSlantPipelineConfig {
    EmbeddingConfig embedding;
    KMeansConfig clusters;
    ForestConfig forest;
    UserSlantConfig social;
};

/// Label users by their share majorities, clean their tweets, featurize the
/// remaining language, and run user-level stratified k-fold CV. A user's
/// examples never span folds because each user is one example; the example's
/// source id is the user's most-shared outlet.
inline MetricsReport user_slant_eval(const Corpus& tweets, const SourceCatalog& catalog_in,
                                     const UserSlantPipelineConfig& cfg) {
    const auto catalog = detail::restrict_catalog(catalog_in, cfg.social.parties);

    Corpus tokenized = tweets;
    bool needs_tokens = false;
    for (const auto& d : tokenized.docs)
        if (d.tokens.empty() && !d.text.empty()) { needs_tokens = true; break; }
    if (needs_tokens) tokenize_all(tokenized);

    const auto kept_users =
        filter_users(tokenized, catalog, cfg.social.min_tweets, cfg.social.min_share_tweets);
    const auto profiles = parse_shares(tokenized, catalog);
    std::map<std::string, const ShareProfile*> profile_of;
    for (const auto& p : profiles) profile_of[p.user_id] = &p;

    std::vector<ShareProfile> kept_profiles;
    for (const auto& u : kept_users)
        if (profile_of.count(u)) kept_profiles.push_back(*profile_of.at(u));
    const auto labels = label_users(kept_profiles, catalog);
    std::map<std::string, std::string> party_of_user;
    for (const auto& l : labels) party_of_user[l.user_id] = l.party;

    // Clean tweets of labeled users, then fit one feature space on them.
    std::map<std::string, std::vector<Document>> tweets_of;
    for (const auto& d : tokenized.docs)
        if (party_of_user.count(d.user)) tweets_of[d.user].push_back(d);
    Corpus cleaned;
    cleaned.kind = DocKind::tweet;
    std::map<std::string, std::vector<Document>> cleaned_of;
    for (auto& [user, docs] : tweets_of) {
        auto kept = clean_user_tweets(docs, cfg.social.article_titles, catalog);
        for (const auto& d : kept) cleaned.docs.push_back(d);
        cleaned_of[user] = std::move(kept);
    }
    if (cleaned.docs.empty()) raise("user_slant_eval: no tweets survive cleaning");

    const auto vocab = build_vocab(cleaned, cfg.social.vocab_min_count);
    const auto model = train_skipgram(cleaned, vocab, cfg.embedding);
    auto km_cfg = cfg.clusters;
    km_cfg.K = std::min(km_cfg.K, vocab.size());
    const auto cm = kmeans(model, km_cfg);

    std::vector<LabeledExample> examples;
    for (const auto& [user, docs] : cleaned_of) {
        if (docs.empty()) continue;
        LabeledExample ex;
        ex.features = user_features(docs, vocab, cm);
        if (!ex.features.covered()) continue;
        ex.party = party_of_user.at(user);
        // source id: the user's most-shared outlet (lowest id on ties)
        const auto& shares = profile_of.at(user)->shares;
        std::string top;
        std::int64_t top_n = -1;
        for (const auto& [src, n] : shares) {
            if (n > top_n) {
                top = src;
                top_n = n;
            }
        }
        ex.source = top;
        ex.doc_ids.push_back(user);
        examples.push_back(std::move(ex));
    }

    auto balanced = balance(examples, BalanceUnit::party, derive_seed(cfg.social.seed, 1));

    std::map<std::string, std::vector<std::size_t>> users_by_party;
    for (std::size_t i = 0; i < balanced.size(); ++i)
        users_by_party[balanced[i].party].push_back(i);
    const auto folds_n = static_cast<std::size_t>(cfg.social.cv_folds);
    for (const auto& [party, members] : users_by_party) {
        if (members.size() < folds_n)
            raise("user_slant_eval: party " + party + " has only " +
                  std::to_string(members.size()) + " users after balancing (need >= " +
                  std::to_string(folds_n) + ")");
    }

    // Stratified assignment: shuffle each party's users, deal round-robin.
    std::vector<int> fold_of(balanced.size(), 0);
    std::mt19937_64 rng(derive_seed(cfg.social.seed, 2));
    for (auto& [party, members] : users_by_party) {
        for (std::size_t i = 0; i + 1 < members.size(); ++i) {
            const auto j = i + static_cast<std::size_t>(uniform_below(rng, members.size() - i));
            std::swap(members[i], members[j]);
        }
        for (std::size_t i = 0; i < members.size(); ++i)
            fold_of[members[i]] = static_cast<int>(i % folds_n);
    }

    std::vector<FoldData> folds(folds_n);
    for (std::size_t i = 0; i < balanced.size(); ++i) {
        for (std::size_t f = 0; f < folds_n; ++f) {
            if (static_cast<std::size_t>(fold_of[i]) == f)
                folds[f].test.push_back(balanced[i]);
            else
                folds[f].train.push_back(balanced[i]);
        }
    }

    std::set<std::string> party_set;
    for (const auto& ex : balanced) party_set.insert(ex.party);
    const std::vector<std::string> parties(party_set.begin(), party_set.end());

    EvalConfig ecfg;
    ecfg.seed = cfg.social.seed;
    auto report = evaluate_prepared(folds, parties, cfg.forest, ecfg);
    report.task = "user-slant";
    return report;
}

}  // namespace slant
