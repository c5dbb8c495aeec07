#pragma once

// Bag-of-clusters featurization: documents (or concatenated user tweets)
// become K-dimensional normalized cluster-frequency vectors.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slant/clusters.hpp"
#include "slant/corpus.hpp"

namespace slant {

struct FeatureVector {
    std::vector<double> values;         // K bins, sum to 1 when covered
    std::int64_t covered_tokens = 0;    // in-vocabulary token count

    bool covered() const { return covered_tokens > 0; }
};

struct LabeledExample {
    FeatureVector features;
    std::string party;
    std::string source;
    std::vector<std::string> doc_ids;
};

/// Count each in-vocabulary token into its cluster bin and normalize by the
/// number of covered tokens; OOV tokens are skipped entirely. Pure in
/// (tokens, vocab, clusters) and invariant under token permutation.
inline FeatureVector tokens_features(std::span<const std::string> tokens, const Vocabulary& vocab,
                                     const ClusterModel& cm) {
    FeatureVector fv;
    fv.values.assign(static_cast<std::size_t>(cm.K), 0.0);
    for (const auto& t : tokens) {
        if (const auto id = vocab.id(t)) {
            ++fv.values[static_cast<std::size_t>(cm.assignment[static_cast<std::size_t>(*id)])];
            ++fv.covered_tokens;
        }
    }
    if (fv.covered_tokens > 0) {
        const auto denom = static_cast<double>(fv.covered_tokens);
        for (auto& v : fv.values) v /= denom;
    }
    return fv;
}

inline FeatureVector article_features(const Document& doc, const Vocabulary& vocab,
                                      const ClusterModel& cm) {
    return tokens_features(doc.tokens, vocab, cm);
}

/// Features of the concatenation of the given tweets' tokens; the caller is
/// expected to have cleaned them (clean_user_tweets).
inline FeatureVector user_features(std::span<const Document> tweets, const Vocabulary& vocab,
                                   const ClusterModel& cm) {
    std::vector<std::string> all;
    for (const auto& t : tweets) all.insert(all.end(), t.tokens.begin(), t.tokens.end());
    return tokens_features(all, vocab, cm);
}

/// Featurize every article of the corpus with its catalog party label.
/// Zero-coverage documents are dropped unless include_zero_coverage is set.
inline std::vector<LabeledExample> corpus_examples(const Corpus& corpus,
                                                   const SourceCatalog& catalog,
                                                   const Vocabulary& vocab, const ClusterModel& cm,
                                                   bool include_zero_coverage = false) {
    std::vector<LabeledExample> out;
    out.reserve(corpus.docs.size());
    for (const auto& doc : corpus.docs) {
        LabeledExample ex;
        ex.features = article_features(doc, vocab, cm);
        if (!ex.features.covered() && !include_zero_coverage) continue;
        ex.source = doc.source;
        ex.party = catalog.party_of(doc.source);
        ex.doc_ids.push_back(doc.id);
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace slant
