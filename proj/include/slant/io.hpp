#pragma once

// Versioned binary artifacts and text exports.
//
// Model file: magic "SLNT", version u16, dim u64, V u64, vocabulary block,
// input and output matrices as row-major little-endian f32, followed by
// optional tagged sections ("CLUS": centroids + assignment). Forest files
// share the container: magic, version, then a "FRST" section.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slant/bytes.hpp"
#include "slant/clusters.hpp"
#include "slant/embedding.hpp"
#include "slant/features.hpp"
#include "slant/forest.hpp"
#include "slant/markers.hpp"

namespace slant {

inline constexpr char kMagic[5] = "SLNT";
inline constexpr std::uint16_t kFormatVersion = 1;

inline void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) raise("short write: " + path);
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) raise("cannot open file: " + path);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    std::vector<std::uint8_t> bytes(size);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (!in) raise("short read: " + path);
    return bytes;
}

// ---------------------------------------------------------------------------
// Model file (embedding + optional clusters)
// ---------------------------------------------------------------------------

inline void save_model(const std::string& path, const EmbeddingModel& model,
                       const ClusterModel* clusters = nullptr) {
    ByteWriter w;
    w.put_tag(kMagic);
    w.put_u16(kFormatVersion);
    w.put_u64(static_cast<std::uint64_t>(model.dim));
    w.put_u64(static_cast<std::uint64_t>(model.vocab.size()));
    w.put_u64(static_cast<std::uint64_t>(model.vocab.min_count));
    for (std::int32_t i = 0; i < model.vocab.size(); ++i) {
        w.put_string(model.vocab.words[static_cast<std::size_t>(i)]);
        w.put_i64(model.vocab.counts[static_cast<std::size_t>(i)]);
    }
    for (const auto x : model.input) w.put_f32(x);
    for (const auto x : model.output) w.put_f32(x);
    if (clusters) {
        ByteWriter section;
        section.put_u64(static_cast<std::uint64_t>(clusters->K));
        for (const auto x : clusters->centroids) section.put_f32(x);
        for (const auto a : clusters->assignment) section.put_i32(a);
        section.put_f64(clusters->inertia);
        w.put_tag("CLUS");
        w.put_u64(section.bytes.size());
        w.put_raw(section.bytes.data(), section.bytes.size());
    }
    write_file_bytes(path, w.bytes);
}

struct LoadedModel {
    EmbeddingModel model;
    std::optional<ClusterModel> clusters;
};

inline LoadedModel load_model(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    ByteReader r(bytes);
    if (r.get_tag() != kMagic) raise(path + ": not a model file (bad magic)");
    const auto version = r.get_u16();
    if (version != kFormatVersion)
        raise(path + ": unsupported format version " + std::to_string(version));
    LoadedModel out;
    auto& m = out.model;
    m.dim = static_cast<int>(r.get_u64());
    const auto v = r.get_u64();
    m.vocab.min_count = static_cast<std::int64_t>(r.get_u64());
    for (std::uint64_t i = 0; i < v; ++i) {
        auto word = r.get_string();
        const auto count = r.get_i64();
        m.vocab.index.emplace(word, static_cast<std::int32_t>(i));
        m.vocab.words.push_back(std::move(word));
        m.vocab.counts.push_back(count);
    }
    m.input.resize(v * static_cast<std::uint64_t>(m.dim));
    for (auto& x : m.input) x = r.get_f32();
    m.output.resize(v * static_cast<std::uint64_t>(m.dim));
    for (auto& x : m.output) x = r.get_f32();
    m.config.dim = m.dim;

    while (!r.at_end()) {
        const auto tag = r.get_tag();
        const auto size = r.get_u64();
        if (tag == "CLUS") {
            ClusterModel cm;
            cm.dim = m.dim;
            cm.K = static_cast<int>(r.get_u64());
            cm.centroids.resize(static_cast<std::size_t>(cm.K) * static_cast<std::size_t>(cm.dim));
            for (auto& x : cm.centroids) x = r.get_f32();
            cm.assignment.resize(v);
            for (auto& a : cm.assignment) a = r.get_i32();
            cm.inertia = r.get_f64();
            out.clusters = std::move(cm);
        } else {
            r.pos += size;  // unknown section, skip
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Forest file
// ---------------------------------------------------------------------------

inline void save_forest(const std::string& path, const Forest& forest) {
    ByteWriter section;
    section.put_u64(forest.parties.size());
    for (const auto& p : forest.parties) section.put_string(p);
    section.put_u64(static_cast<std::uint64_t>(forest.K));
    const auto& c = forest.config;
    section.put_u64(static_cast<std::uint64_t>(c.n_trees));
    section.put_i64(c.max_depth ? *c.max_depth : -1);
    section.put_u64(static_cast<std::uint64_t>(c.min_samples_leaf));
    section.put_u64(static_cast<std::uint64_t>(c.features_per_split));
    section.put_f64(c.alpha);
    section.put_u8(c.criterion == CriterionMode::corrected_sum ? 0 : 1);
    section.put_u8(c.weighted_children ? 1 : 0);
    section.put_u8(c.bootstrap ? 1 : 0);
    section.put_u64(c.seed);
    const auto trees = serialize_trees(forest);
    section.put_raw(trees.data(), trees.size());

    ByteWriter w;
    w.put_tag(kMagic);
    w.put_u16(kFormatVersion);
    w.put_tag("FRST");
    w.put_u64(section.bytes.size());
    w.put_raw(section.bytes.data(), section.bytes.size());
    write_file_bytes(path, w.bytes);
}

inline Forest load_forest(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    ByteReader r(bytes);
    if (r.get_tag() != kMagic) raise(path + ": not a forest file (bad magic)");
    const auto version = r.get_u16();
    if (version != kFormatVersion)
        raise(path + ": unsupported format version " + std::to_string(version));
    if (r.get_tag() != "FRST") raise(path + ": missing FRST section");
    r.get_u64();  // section size

    Forest f;
    const auto n_parties = r.get_u64();
    for (std::uint64_t i = 0; i < n_parties; ++i) f.parties.push_back(r.get_string());
    f.K = static_cast<int>(r.get_u64());
    f.config.n_trees = static_cast<int>(r.get_u64());
    const auto depth = r.get_i64();
    if (depth >= 0) f.config.max_depth = static_cast<int>(depth);
    f.config.min_samples_leaf = static_cast<int>(r.get_u64());
    f.config.features_per_split = static_cast<int>(r.get_u64());
    f.config.alpha = r.get_f64();
    f.config.criterion = r.get_u8() == 0 ? CriterionMode::corrected_sum
                                         : CriterionMode::literal_difference;
    f.config.weighted_children = r.get_u8() != 0;
    f.config.bootstrap = r.get_u8() != 0;
    f.config.seed = r.get_u64();
    const auto n_trees = r.get_u64();
    for (std::uint64_t i = 0; i < n_trees; ++i) f.trees.push_back(decode_tree(r));
    return f;
}

/// Full tree structure as JSON, for oracle comparison and debugging.
inline nlohmann::json forest_debug_json(const Forest& forest) {
    nlohmann::json j;
    j["parties"] = forest.parties;
    j["k"] = forest.K;
    j["alpha"] = forest.config.alpha;
    j["criterion"] = to_string(forest.config.criterion);
    j["trees"] = nlohmann::json::array();
    for (const auto& tree : forest.trees) {
        nlohmann::json tj = nlohmann::json::array();
        for (const auto& nd : tree.nodes) {
            nlohmann::json nj;
            nj["n"] = nd.n;
            nj["h_t"] = nd.h_t;
            if (nd.is_leaf()) {
                nj["histogram"] = nd.histogram;
            } else {
                nj["feature"] = nd.feature;
                nj["threshold"] = nd.threshold;
                nj["left"] = nd.left;
                nj["right"] = nd.right;
            }
            tj.push_back(nj);
        }
        j["trees"].push_back(tj);
    }
    return j;
}

// ---------------------------------------------------------------------------
// Text exports
// ---------------------------------------------------------------------------

inline void export_vocab_tsv(const std::string& path, const Vocabulary& vocab) {
    std::ofstream out(path);
    if (!out) raise("cannot write file: " + path);
    out << "word\tid\tcount\n";
    for (std::int32_t i = 0; i < vocab.size(); ++i)
        out << vocab.words[static_cast<std::size_t>(i)] << '\t' << i << '\t'
            << vocab.counts[static_cast<std::size_t>(i)] << '\n';
}

inline void export_embedding_tsv(const std::string& path, const EmbeddingModel& model) {
    std::ofstream out(path);
    if (!out) raise("cannot write file: " + path);
    out.precision(8);
    for (std::int32_t i = 0; i < model.vocab.size(); ++i) {
        out << model.vocab.words[static_cast<std::size_t>(i)];
        for (const auto x : model.input_row(i)) out << '\t' << x;
        out << '\n';
    }
}

inline void export_clusters_tsv(const std::string& path, const Vocabulary& vocab,
                                const ClusterModel& cm) {
    std::ofstream out(path);
    if (!out) raise("cannot write file: " + path);
    out << "word\tcluster\n";
    for (std::int32_t i = 0; i < vocab.size(); ++i)
        out << vocab.words[static_cast<std::size_t>(i)] << '\t'
            << cm.assignment[static_cast<std::size_t>(i)] << '\n';
}

inline void export_markers_tsv(const std::string& path, const MarkerRanking& ranking) {
    std::ofstream out(path);
    if (!out) raise("cannot write file: " + path);
    out << "word\tsource\trho\trho_bar\n";
    out.precision(10);
    for (const auto& row : ranking.rows)
        out << row.word << '\t' << row.source << '\t' << row.rho << '\t' << row.rho_bar << '\n';
}

// ---------------------------------------------------------------------------
// Feature matrix export
// ---------------------------------------------------------------------------

/// Row-major f32 matrix plus a JSON sidecar carrying labels and provenance.
inline void save_features(const std::string& bin_path, const std::string& json_path,
                          std::span<const LabeledExample> examples) {
    ByteWriter w;
    const std::uint64_t n = examples.size();
    const std::uint64_t k = n > 0 ? examples[0].features.values.size() : 0;
    w.put_u64(n);
    w.put_u64(k);
    for (const auto& ex : examples) {
        if (ex.features.values.size() != k) raise("save_features: inconsistent dimensions");
        for (const auto v : ex.features.values) w.put_f32(static_cast<float>(v));
    }
    write_file_bytes(bin_path, w.bytes);

    nlohmann::json j;
    j["n"] = n;
    j["k"] = k;
    auto parties = nlohmann::json::array();
    auto sources = nlohmann::json::array();
    auto doc_ids = nlohmann::json::array();
    auto covered = nlohmann::json::array();
    for (const auto& ex : examples) {
        parties.push_back(ex.party);
        sources.push_back(ex.source);
        doc_ids.push_back(ex.doc_ids);
        covered.push_back(ex.features.covered_tokens);
    }
    j["party"] = std::move(parties);
    j["source"] = std::move(sources);
    j["doc_ids"] = std::move(doc_ids);
    j["covered_tokens"] = std::move(covered);
    std::ofstream out(json_path);
    if (!out) raise("cannot write file: " + json_path);
    out << j.dump(2) << "\n";
}

inline std::vector<LabeledExample> load_features(const std::string& bin_path,
                                                 const std::string& json_path) {
    const auto bytes = read_file_bytes(bin_path);
    ByteReader r(bytes);
    const auto n = r.get_u64();
    const auto k = r.get_u64();
    std::ifstream in(json_path);
    if (!in) raise("cannot open file: " + json_path);
    nlohmann::json j;
    in >> j;
    if (j.at("n").get<std::uint64_t>() != n || j.at("k").get<std::uint64_t>() != k)
        raise("feature sidecar does not match the matrix dimensions");
    std::vector<LabeledExample> out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        LabeledExample ex;
        ex.features.values.resize(k);
        for (auto& v : ex.features.values) v = static_cast<double>(r.get_f32());
        ex.party = j.at("party").at(i).get<std::string>();
        ex.source = j.at("source").at(i).get<std::string>();
        ex.doc_ids = j.at("doc_ids").at(i).get<std::vector<std::string>>();
        ex.features.covered_tokens = j.at("covered_tokens").at(i).get<std::int64_t>();
        out.push_back(std::move(ex));
    }
    return out;
}

inline void export_features_csv(const std::string& path, std::span<const LabeledExample> examples) {
    std::ofstream out(path);
    if (!out) raise("cannot write file: " + path);
    const std::size_t k = examples.empty() ? 0 : examples[0].features.values.size();
    out << "party,source,covered_tokens";
    for (std::size_t i = 0; i < k; ++i) out << ",f" << i;
    out << "\n";
    out.precision(10);
    for (const auto& ex : examples) {
        out << ex.party << ',' << ex.source << ',' << ex.features.covered_tokens;
        for (const auto v : ex.features.values) out << ',' << v;
        out << "\n";
    }
}

}  // namespace slant
