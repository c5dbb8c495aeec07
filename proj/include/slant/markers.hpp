#pragma once

// News-source marker detection: per-source relative document frequencies
// rho(w,s) and the concentration ratio rho_bar(w,s) = rho(w,s) / sum_s rho.
// Words whose rho_bar is close to 1 are fingerprints of a single outlet.
//
// The marker list is diagnostic output; the forest module does not consume
// it (removing markers up front is kept only as a baseline).

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "slant/corpus.hpp"

namespace slant {

struct SourceFrequencyTable {
    std::vector<std::string> sources;                       // sorted
    std::vector<std::string> words;                         // vocab-ordered
    std::map<std::string, std::int64_t> doc_counts;         // source -> N_s
    // rho[(word index) * n_sources + (source index)]
    std::vector<double> rho;

    std::size_t source_index(const std::string& s) const {
        const auto it = std::lower_bound(sources.begin(), sources.end(), s);
        if (it == sources.end() || *it != s) raise("unknown source in frequency table: " + s);
        return static_cast<std::size_t>(it - sources.begin());
    }

    double rho_at(std::size_t word_idx, std::size_t source_idx) const {
        return rho[word_idx * sources.size() + source_idx];
    }

    double rho_of(const std::string& word, const std::string& source) const {
        for (std::size_t w = 0; w < words.size(); ++w)
            if (words[w] == word) return rho_at(w, source_index(source));
        raise("unknown word in frequency table: " + word);
    }
};

struct MarkerRow {
    std::string word;
    std::string source;
    double rho = 0;
    double rho_bar = 0;
};

struct MarkerRanking {
    std::vector<MarkerRow> rows;  // rho_bar desc, rho desc, word asc
};

/// Document-level presence frequencies: rho(w,s) = (#docs of s containing w)
/// / N_s. A word counts once per document regardless of repetitions.
inline SourceFrequencyTable source_frequencies(const Corpus& corpus, const SourceCatalog& catalog,
                                               const Vocabulary& vocab) {
    SourceFrequencyTable table;
    {
        std::set<std::string> srcs;
        for (const auto& s : catalog.sources) srcs.insert(s.id);
        table.sources.assign(srcs.begin(), srcs.end());
    }
    table.words = vocab.words;
    for (const auto& s : table.sources) table.doc_counts[s] = 0;

    const auto n_sources = table.sources.size();
    std::vector<std::int64_t> presence(vocab.words.size() * n_sources, 0);
    std::vector<std::int64_t> per_source_docs(n_sources, 0);

    std::unordered_set<std::int32_t> seen;
    for (const auto& doc : corpus.docs) {
        const auto* info = catalog.find(doc.source);
        if (!info) raise("article with unknown source id: " + doc.source);
        const auto si = table.source_index(doc.source);
        ++per_source_docs[si];
        seen.clear();
        for (const auto& t : doc.tokens) {
            if (const auto id = vocab.id(t)) {
                if (seen.insert(*id).second)
                    ++presence[static_cast<std::size_t>(*id) * n_sources + si];
            }
        }
    }
    for (std::size_t si = 0; si < n_sources; ++si)
        table.doc_counts[table.sources[si]] = per_source_docs[si];

    table.rho.assign(vocab.words.size() * n_sources, 0.0);
    for (std::size_t w = 0; w < vocab.words.size(); ++w) {
        for (std::size_t si = 0; si < n_sources; ++si) {
            if (per_source_docs[si] > 0)
                table.rho[w * n_sources + si] =
                    static_cast<double>(presence[w * n_sources + si]) /
                    static_cast<double>(per_source_docs[si]);
        }
    }
    return table;
}

/// rho_bar(w,s) over all sources for one word; empty if the word never
/// appears. The denominator always spans every source, so the shares sum
/// to 1 regardless of any ranking filter.
inline std::map<std::string, double> source_shares(const SourceFrequencyTable& table,
                                                   std::size_t word_idx) {
    std::map<std::string, double> shares;
    double total = 0;
    for (std::size_t si = 0; si < table.sources.size(); ++si) total += table.rho_at(word_idx, si);
    if (total == 0) return shares;
    for (std::size_t si = 0; si < table.sources.size(); ++si) {
        const double r = table.rho_at(word_idx, si);
        if (r > 0) shares[table.sources[si]] = r / total;
    }
    return shares;
}

/// Rank (word, source) pairs by rho_bar; pairs with rho < min_rho are left
/// out of the ranking to suppress hapax noise, but rho_bar itself is always
/// computed against the full per-word denominator.
inline MarkerRanking marker_ranking(const SourceFrequencyTable& table, double min_rho = 0.01) {
    if (min_rho < 0 || min_rho > 1) raise("marker_ranking: min_rho must be in [0,1]");
    MarkerRanking out;
    const auto n_sources = table.sources.size();
    for (std::size_t w = 0; w < table.words.size(); ++w) {
        double total = 0;
        for (std::size_t si = 0; si < n_sources; ++si) total += table.rho_at(w, si);
        if (total == 0) continue;
        for (std::size_t si = 0; si < n_sources; ++si) {
            const double r = table.rho_at(w, si);
            if (r < min_rho || r == 0) continue;
            out.rows.push_back({table.words[w], table.sources[si], r, r / total});
        }
    }
    std::sort(out.rows.begin(), out.rows.end(), [](const MarkerRow& a, const MarkerRow& b) {
        if (a.rho_bar != b.rho_bar) return a.rho_bar > b.rho_bar;
        if (a.rho != b.rho) return a.rho > b.rho;
        return a.word < b.word;
    });
    return out;
}

/// The top-ranked words as a stop-list (diagnostic / baseline use only).
inline std::vector<std::string> marker_stoplist(const MarkerRanking& ranking, double min_rho_bar) {
    std::vector<std::string> words;
    std::set<std::string> seen;
    for (const auto& row : ranking.rows) {
        if (row.rho_bar < min_rho_bar) continue;
        if (seen.insert(row.word).second) words.push_back(row.word);
    }
    return words;
}

}  // namespace slant
