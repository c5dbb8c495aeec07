#pragma once

// Corpus ingestion and indexing: documents, tokenization, the source/party
// catalog and the vocabulary.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "slant/common.hpp"

namespace slant {

enum class DocKind { article, tweet };

inline const char* to_string(DocKind k) { return k == DocKind::article ? "article" : "tweet"; }

struct Document {
    std::string id;
    std::string source;                 // catalog key; required for articles
    std::string text;
    std::vector<std::string> tokens;    // filled by tokenize_all
    std::optional<std::string> timestamp;  // RFC3339, kept verbatim
    std::optional<std::string> lang;       // ISO-639-1
    std::optional<std::string> title;
    DocKind kind = DocKind::article;
    std::string user;                   // tweets only
    bool retweet = false;
};

struct Corpus {
    std::vector<Document> docs;
    DocKind kind = DocKind::article;

    std::size_t size() const { return docs.size(); }
    bool empty() const { return docs.empty(); }
};

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

inline constexpr std::string_view kUrlToken = "<url>";
inline constexpr std::string_view kMentionToken = "<mention>";
inline constexpr std::string_view kNumToken = "<num>";

namespace detail {

// Minimal UTF-8 decode; invalid bytes decode as U+FFFD with length 1.
inline char32_t decode_utf8(std::string_view s, std::size_t i, std::size_t& len) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) { len = 1; return b0; }
    auto cont = [&](std::size_t k) {
        return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
    };
    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        len = 2;
        return static_cast<char32_t>(((b0 & 0x1F) << 6) |
                                     (static_cast<unsigned char>(s[i + 1]) & 0x3F));
    }
    if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        len = 3;
        return static_cast<char32_t>(((b0 & 0x0F) << 12) |
                                     ((static_cast<unsigned char>(s[i + 1]) & 0x3F) << 6) |
                                     (static_cast<unsigned char>(s[i + 2]) & 0x3F));
    }
    if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        len = 4;
        return static_cast<char32_t>(((b0 & 0x07) << 18) |
                                     ((static_cast<unsigned char>(s[i + 1]) & 0x3F) << 12) |
                                     ((static_cast<unsigned char>(s[i + 2]) & 0x3F) << 6) |
                                     (static_cast<unsigned char>(s[i + 3]) & 0x3F));
    }
    len = 1;
    return 0xFFFD;
}

inline void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline bool is_ascii_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

inline bool is_letter(char32_t cp) {
    if ((cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z')) return true;
    if (cp >= 0x00C0 && cp <= 0x024F && cp != 0x00D7 && cp != 0x00F7) return true;  // Latin ext
    if (cp >= 0x0386 && cp <= 0x03FF) return true;                                  // Greek
    if (cp >= 0x0400 && cp <= 0x052F) return true;                                  // Cyrillic
    return false;
}

inline bool is_word_cp(char32_t cp) { return is_letter(cp) || is_ascii_digit(cp); }

// Case folding for the script ranges above; other letters pass through.
inline char32_t to_lower_cp(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 0x20;
    if (cp >= 0x0100 && cp <= 0x024F) {
        // Latin Extended mostly alternates upper/lower.
        if ((cp & 1) == 0 && cp <= 0x0177) return cp + 1;
        return cp;
    }
    if (cp >= 0x0391 && cp <= 0x03A9 && cp != 0x03A2) return cp + 0x20;
    if (cp >= 0x0410 && cp <= 0x042F) return cp + 0x20;  // А..Я
    if (cp >= 0x0400 && cp <= 0x040F) return cp + 0x50;  // Ѐ..Џ (incl. Ё, Є, І, Ї)
    return cp;
}

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        char a = s[i];
        if (a >= 'A' && a <= 'Z') a = static_cast<char>(a + 0x20);
        if (a != prefix[i]) return false;
    }
    return true;
}

inline std::size_t find_url_scheme(std::string_view chunk) {
    for (std::size_t i = 0; i + 7 <= chunk.size(); ++i) {
        if (starts_with_ci(chunk.substr(i), "http://") ||
            starts_with_ci(chunk.substr(i), "https://"))
            return i;
    }
    return std::string_view::npos;
}

inline void segment_words(std::string_view chunk, std::vector<std::string>& out) {
    std::string cur;
    bool all_digits = true;
    auto flush = [&] {
        if (cur.empty()) return;
        if (all_digits)
            out.emplace_back(kNumToken);
        else
            out.push_back(cur);
        cur.clear();
        all_digits = true;
    };
    std::size_t i = 0;
    while (i < chunk.size()) {
        std::size_t len = 1;
        const char32_t cp = decode_utf8(chunk, i, len);
        if (is_word_cp(cp)) {
            if (!is_ascii_digit(cp)) all_digits = false;
            encode_utf8(to_lower_cp(cp), cur);
        } else if (cp == '-' && !cur.empty() && i + len < chunk.size()) {
            std::size_t nlen = 1;
            const char32_t next = decode_utf8(chunk, i + len, nlen);
            if (is_word_cp(next)) {
                cur.push_back('-');
                all_digits = false;
            } else {
                flush();
            }
        } else {
            flush();
        }
        i += len;
    }
    flush();
}

}  // namespace detail

/// Lowercased Unicode word tokens. Punctuation is stripped except intra-word
/// hyphens; URLs become <url>, @-mentions <mention>, digits-only tokens <num>.
/// Idempotent on its own output joined by spaces.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && detail::is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < n && !detail::is_space(text[j])) ++j;
        if (j > i) {
            const std::string_view chunk = text.substr(i, j - i);
            if (chunk == kUrlToken || chunk == kMentionToken || chunk == kNumToken) {
                out.emplace_back(chunk);
            } else if (const auto p = detail::find_url_scheme(chunk);
                       p != std::string_view::npos) {
                detail::segment_words(chunk.substr(0, p), out);
                out.emplace_back(kUrlToken);  // URL swallows the rest of the chunk
            } else if (detail::starts_with_ci(chunk, "www.")) {
                out.emplace_back(kUrlToken);
            } else if (chunk.size() > 1 && chunk[0] == '@') {
                std::size_t len = 1;
                const char32_t next = detail::decode_utf8(chunk, 1, len);
                if (detail::is_word_cp(next) || next == '_')
                    out.emplace_back(kMentionToken);
                else
                    detail::segment_words(chunk, out);
            } else {
                detail::segment_words(chunk, out);
            }
        }
        i = j;
    }
    return out;
}

inline std::string lowercase(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t len = 1;
        const char32_t cp = detail::decode_utf8(s, i, len);
        detail::encode_utf8(detail::to_lower_cp(cp), out);
        i += len;
    }
    return out;
}

using StemmerHook = std::function<std::string(const std::string&)>;

/// Fill doc.tokens for every document. The optional stemmer runs per token;
/// by default tokens are kept in raw (unlemmatized) form.
inline void tokenize_all(Corpus& corpus, const StemmerHook& stemmer = nullptr) {
    for (auto& doc : corpus.docs) {
        doc.tokens = tokenize(doc.text);
        if (stemmer)
            for (auto& t : doc.tokens) t = stemmer(t);
    }
}

// ---------------------------------------------------------------------------
// Source catalog
// ---------------------------------------------------------------------------

struct SourceInfo {
    std::string id;
    std::string name;
    std::string party;
    std::vector<std::string> url_patterns;  // "host" or "host/path-prefix"
};

struct SourceCatalog {
    std::vector<SourceInfo> sources;   // declaration order, drives URL first-match
    std::vector<std::string> parties;  // closed set, size >= 2

    const SourceInfo* find(std::string_view id) const {
        for (const auto& s : sources)
            if (s.id == id) return &s;
        return nullptr;
    }

    const std::string& party_of(const std::string& source_id) const {
        const auto* s = find(source_id);
        if (!s) raise("unknown source id: " + source_id);
        return s->party;
    }

    bool has_party(std::string_view p) const {
        return std::find(parties.begin(), parties.end(), p) != parties.end();
    }

    void validate() const {
        if (parties.size() < 2) raise("catalog party set must have at least 2 entries");
        std::set<std::string> seen(parties.begin(), parties.end());
        if (seen.size() != parties.size()) raise("catalog party ids must be unique");
        std::set<std::string> ids;
        for (const auto& s : sources) {
            if (!ids.insert(s.id).second) raise("duplicate source id: " + s.id);
            if (!has_party(s.party))
                raise("source " + s.id + " references undeclared party " + s.party);
        }
    }

    // First matching source in declaration order; patterns match when the
    // URL's host equals (or is a subdomain of) the pattern host and the path
    // starts with the pattern path.
    std::optional<std::string> resolve_url(std::string_view url) const {
        std::string host, path;
        split_host_path(url, host, path);
        if (host.empty()) return std::nullopt;
        for (const auto& s : sources) {
            for (const auto& pat : s.url_patterns) {
                std::string ph, pp;
                split_host_path(pat, ph, pp);
                if (ph.empty()) continue;
                const bool host_ok =
                    host == ph ||
                    (host.size() > ph.size() && host.compare(host.size() - ph.size() - 1, 1, ".") == 0 &&
                     host.compare(host.size() - ph.size(), ph.size(), ph) == 0);
                if (host_ok && path.rfind(pp, 0) == 0) return s.id;
            }
        }
        return std::nullopt;
    }

    static void split_host_path(std::string_view url, std::string& host, std::string& path) {
        std::string_view rest = url;
        if (detail::starts_with_ci(rest, "http://")) rest.remove_prefix(7);
        else if (detail::starts_with_ci(rest, "https://")) rest.remove_prefix(8);
        if (detail::starts_with_ci(rest, "www.")) rest.remove_prefix(4);
        const auto slash = rest.find('/');
        std::string_view h = slash == std::string_view::npos ? rest : rest.substr(0, slash);
        std::string_view p = slash == std::string_view::npos ? std::string_view{"/"} : rest.substr(slash);
        host = lowercase(h);
        // strip port / trailing punctuation from bare hosts
        if (const auto colon = host.find(':'); colon != std::string::npos) host.resize(colon);
        path.assign(p);
    }
};

inline SourceCatalog load_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise("cannot open catalog file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise("malformed catalog JSON in " + path + ": " + e.what());
    }
    SourceCatalog cat;
    for (const auto& p : j.at("parties")) cat.parties.push_back(p.get<std::string>());
    for (const auto& s : j.at("sources")) {
        SourceInfo info;
        info.id = s.at("id").get<std::string>();
        info.name = s.value("name", info.id);
        info.party = s.at("party").get<std::string>();
        if (s.contains("url_patterns"))
            for (const auto& u : s["url_patterns"]) info.url_patterns.push_back(u.get<std::string>());
        cat.sources.push_back(std::move(info));
    }
    cat.validate();
    return cat;
}

inline nlohmann::json catalog_to_json(const SourceCatalog& cat) {
    nlohmann::json j;
    j["parties"] = cat.parties;
    j["sources"] = nlohmann::json::array();
    for (const auto& s : cat.sources) {
        nlohmann::json e;
        e["id"] = s.id;
        e["name"] = s.name;
        e["party"] = s.party;
        e["url_patterns"] = s.url_patterns;
        j["sources"].push_back(e);
    }
    return j;
}

// ---------------------------------------------------------------------------
// JSON-Lines ingestion
// ---------------------------------------------------------------------------

struct LoadStats {
    std::size_t lines = 0;
    std::vector<std::pair<std::size_t, std::string>> rejected;  // (line number, reason)
};

/// Load a JSON-Lines corpus: one record per line, {"id","source","text",
/// "ts","lang","user","title","retweet"}. Articles require id/source/text,
/// tweets id/user/text. Malformed lines abort with their line number unless
/// skip_bad is set, in which case they are recorded in stats and skipped.
inline Corpus load_jsonl(const std::string& path, DocKind kind, bool skip_bad = false,
                         LoadStats* stats = nullptr) {
    std::ifstream in(path);
    if (!in) raise("cannot open corpus file: " + path);
    Corpus corpus;
    corpus.kind = kind;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    LoadStats local;
    LoadStats& st = stats ? *stats : local;

    auto reject = [&](const std::string& reason) {
        if (!skip_bad)
            raise(path + ":" + std::to_string(line_no) + ": " + reason);
        st.rejected.emplace_back(line_no, reason);
    };

    while (std::getline(in, line)) {
        ++line_no;
        ++st.lines;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            reject("malformed JSON");
            continue;
        }
        auto str_field = [&](const char* key) -> std::optional<std::string> {
            if (!j.contains(key) || !j[key].is_string()) return std::nullopt;
            return j[key].get<std::string>();
        };
        Document doc;
        doc.kind = kind;
        if (auto id = str_field("id")) doc.id = *id;
        else { reject("missing required field: id"); continue; }
        if (auto text = str_field("text")) doc.text = *text;
        else { reject("missing required field: text"); continue; }
        if (kind == DocKind::article) {
            if (auto src = str_field("source")) doc.source = *src;
            else { reject("missing required field: source"); continue; }
        } else {
            if (auto user = str_field("user")) doc.user = *user;
            else { reject("missing required field: user"); continue; }
            if (auto src = str_field("source")) doc.source = *src;
        }
        if (!seen_ids.insert(doc.id).second) {
            reject("duplicate doc id: " + doc.id);
            continue;
        }
        doc.timestamp = str_field("ts");
        doc.lang = str_field("lang");
        doc.title = str_field("title");
        if (j.contains("retweet") && j["retweet"].is_boolean()) doc.retweet = j["retweet"].get<bool>();
        corpus.docs.push_back(std::move(doc));
    }
    if (corpus.docs.empty())
        std::cerr << "warning: " << path << ": empty corpus\n";
    return corpus;
}

inline void save_jsonl(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise("cannot write corpus file: " + path);
    for (const auto& d : corpus.docs) {
        nlohmann::json j;
        j["id"] = d.id;
        j["text"] = d.text;
        if (!d.source.empty()) j["source"] = d.source;
        if (d.kind == DocKind::tweet) j["user"] = d.user;
        if (d.timestamp) j["ts"] = *d.timestamp;
        if (d.lang) j["lang"] = *d.lang;
        if (d.title) j["title"] = *d.title;
        if (d.retweet) j["retweet"] = true;
        out << j.dump() << "\n";
    }
}

// ---------------------------------------------------------------------------
// Filters
// ---------------------------------------------------------------------------

/// Keep documents whose language tag matches (documents without a tag are
/// kept when keep_untagged is set).
inline Corpus filter_lang(const Corpus& corpus, std::string_view lang, bool keep_untagged = false) {
    Corpus out;
    out.kind = corpus.kind;
    for (const auto& d : corpus.docs)
        if ((d.lang && *d.lang == lang) || (!d.lang && keep_untagged)) out.docs.push_back(d);
    return out;
}

/// Topic keywords used for the conflict-related filter; Latin forms plus
/// Cyrillic stems so that morphological variants match by substring.
inline std::vector<std::string> default_topic_keywords() {
    return {"kyiv",   "ukraine", "donbass", "maidan",  "crimea",  "luhansk", "dnr",
            "lnr",    "киев",    "київ",    "украин",  "україн",  "донбас",  "майдан",
            "крым",   "луганск", "луганськ", "днр",     "лнр"};
}

/// Retain documents containing at least one keyword as a substring of a
/// token ("евромайдан" matches keyword "майдан"). Order preserved.
inline Corpus filter_topic(const Corpus& corpus, const std::vector<std::string>& keywords) {
    if (keywords.empty()) raise("filter_topic: empty keyword set");
    std::vector<std::string> keys;
    keys.reserve(keywords.size());
    for (const auto& k : keywords) keys.push_back(lowercase(k));
    Corpus out;
    out.kind = corpus.kind;
    for (const auto& d : corpus.docs) {
        bool hit = false;
        for (const auto& t : d.tokens) {
            for (const auto& k : keys) {
                if (t.find(k) != std::string::npos) { hit = true; break; }
            }
            if (hit) break;
        }
        if (hit) out.docs.push_back(d);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

struct Vocabulary {
    std::vector<std::string> words;                      // id -> word
    std::vector<std::int64_t> counts;                    // id -> corpus count
    std::unordered_map<std::string, std::int32_t> index; // word -> id
    std::int64_t min_count = 1;

    std::int32_t size() const { return static_cast<std::int32_t>(words.size()); }
    bool contains(const std::string& w) const { return index.count(w) != 0; }
    std::optional<std::int32_t> id(const std::string& w) const {
        const auto it = index.find(w);
        if (it == index.end()) return std::nullopt;
        return it->second;
    }
    std::int64_t total_count() const {
        std::int64_t t = 0;
        for (const auto c : counts) t += c;
        return t;
    }
};

/// Words with total count >= min_count; ids in descending count order, ties
/// broken lexicographically, which fixes every downstream artifact given the
/// same corpus.
inline Vocabulary build_vocab(const Corpus& corpus, std::int64_t min_count) {
    if (min_count < 1) raise("build_vocab: min_count must be >= 1");
    std::unordered_map<std::string, std::int64_t> counts;
    for (const auto& d : corpus.docs)
        for (const auto& t : d.tokens) ++counts[t];
    std::vector<std::pair<std::string, std::int64_t>> kept;
    for (auto& [w, c] : counts)
        if (c >= min_count) kept.emplace_back(w, c);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary vocab;
    vocab.min_count = min_count;
    vocab.words.reserve(kept.size());
    vocab.counts.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        vocab.words.push_back(kept[i].first);
        vocab.counts.push_back(kept[i].second);
        vocab.index.emplace(kept[i].first, static_cast<std::int32_t>(i));
    }
    return vocab;
}

}  // namespace slant
