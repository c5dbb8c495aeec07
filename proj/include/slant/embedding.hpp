#pragma once

// Skip-gram word embeddings with negative sampling, plus cosine-similarity
// neighbor queries.
//
// Two training modes: deterministic single-worker (output is a pure function
// of corpus/vocab/config) and multi-worker hogwild, where unsynchronized
// updates make the result nondeterministic. Tests rely on the former.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "slant/common.hpp"
#include "slant/corpus.hpp"

namespace slant {

struct EmbeddingConfig {
    int dim = 100;
    int window = 5;        // context half-width j; per-center width drawn from 1..j
    int negatives = 5;
    int epochs = 5;
    double initial_lr = 0.025;
    double min_lr = 1e-4;
    double subsample_t = 1e-5;  // 0 disables frequent-word subsampling
    double unigram_power = 0.75;
    std::uint64_t seed = 42;
    int workers = 1;
    int eval_batch_pairs = 2048;  // frozen-batch loss tracking; 0 disables

    bool deterministic() const { return workers <= 1; }

    void validate() const {
        if (dim < 1) raise("embedding: dim must be >= 1");
        if (window < 1) raise("embedding: window must be >= 1");
        if (negatives < 1) raise("embedding: negatives must be >= 1");
        if (epochs < 1) raise("embedding: epochs must be >= 1");
        if (!(initial_lr > 0)) raise("embedding: initial_lr must be > 0");
        if (subsample_t < 0) raise("embedding: subsample_t must be >= 0");
        if (workers < 1) raise("embedding: workers must be >= 1");
    }
};

struct EmbeddingModel {
    Vocabulary vocab;
    EmbeddingConfig config;
    int dim = 0;
    std::vector<float> input;   // V x dim row-major word vectors
    std::vector<float> output;  // V x dim row-major context vectors
    std::vector<double> epoch_eval_loss;  // frozen-batch mean loss after each epoch

    std::span<const float> input_row(std::int32_t id) const {
        return {input.data() + static_cast<std::size_t>(id) * static_cast<std::size_t>(dim),
                static_cast<std::size_t>(dim)};
    }
    std::span<const float> output_row(std::int32_t id) const {
        return {output.data() + static_cast<std::size_t>(id) * static_cast<std::size_t>(dim),
                static_cast<std::size_t>(dim)};
    }
};

class OovError : public Error {
public:
    explicit OovError(const std::string& word) : Error("out-of-vocabulary word: " + word) {}
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <typename T>
double cosine(std::span<const T> a, std::span<const T> b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
        nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// ---------------------------------------------------------------------------
// SGNS objective
// ---------------------------------------------------------------------------

struct SgnsGradient {
    double loss = 0;
    std::vector<double> d_center;                  // dL/d v_center
    std::vector<double> d_context;                 // dL/d u_context
    std::vector<std::vector<double>> d_negatives;  // dL/d u_neg[k]
};

/// loss = -log sigma(u_ctx . v_c) - sum_neg log sigma(-u_neg . v_c), with
/// exact analytic gradients for the involved rows.
template <typename T>
SgnsGradient sgns_loss_and_grad(std::span<const T> v_center, std::span<const T> u_context,
                                const std::vector<std::span<const T>>& u_negatives) {
    const std::size_t d = v_center.size();
    SgnsGradient g;
    g.d_center.assign(d, 0.0);
    g.d_context.assign(d, 0.0);

    double dot = 0;
    for (std::size_t i = 0; i < d; ++i)
        dot += static_cast<double>(u_context[i]) * static_cast<double>(v_center[i]);
    const double s = sigmoid(dot);
    g.loss = -std::log(std::max(s, 1e-300));
    for (std::size_t i = 0; i < d; ++i) {
        g.d_context[i] = (s - 1.0) * static_cast<double>(v_center[i]);
        g.d_center[i] = (s - 1.0) * static_cast<double>(u_context[i]);
    }
    for (const auto& u_neg : u_negatives) {
        double ndot = 0;
        for (std::size_t i = 0; i < d; ++i)
            ndot += static_cast<double>(u_neg[i]) * static_cast<double>(v_center[i]);
        const double sn = sigmoid(ndot);
        g.loss += -std::log(std::max(1.0 - sn, 1e-300));
        auto& dn = g.d_negatives.emplace_back(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            dn[i] = sn * static_cast<double>(v_center[i]);
            g.d_center[i] += sn * static_cast<double>(u_neg[i]);
        }
    }
    return g;
}

inline SgnsGradient sgns_loss_and_grad(const EmbeddingModel& model, std::int32_t center,
                                       std::int32_t context,
                                       std::span<const std::int32_t> negatives) {
    const auto v = static_cast<std::size_t>(model.vocab.size());
    auto check = [&](std::int32_t id) {
        if (id < 0 || static_cast<std::size_t>(id) >= v)
            raise("sgns_loss_and_grad: word id out of range");
    };
    check(center);
    check(context);
    std::vector<std::span<const float>> negs;
    negs.reserve(negatives.size());
    for (const auto n : negatives) {
        check(n);
        negs.push_back(model.output_row(n));
    }
    return sgns_loss_and_grad<float>(model.input_row(center), model.output_row(context), negs);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace detail {

// Sentence boundaries: paragraph per article (split on newlines), whole
// document per tweet; keeps contexts from bleeding across unrelated texts.
inline std::vector<std::vector<std::int32_t>> encode_sentences(const Corpus& corpus,
                                                               const Vocabulary& vocab) {
    std::vector<std::vector<std::int32_t>> sentences;
    auto push_tokens = [&](const std::vector<std::string>& tokens) {
        std::vector<std::int32_t> ids;
        ids.reserve(tokens.size());
        for (const auto& t : tokens)
            if (auto id = vocab.id(t)) ids.push_back(*id);
        if (!ids.empty()) sentences.push_back(std::move(ids));
    };
    for (const auto& doc : corpus.docs) {
        if (doc.kind == DocKind::article) {
            std::size_t start = 0;
            const std::string& text = doc.text;
            while (start < text.size()) {
                auto end = text.find('\n', start);
                if (end == std::string::npos) end = text.size();
                if (end > start) push_tokens(tokenize(std::string_view(text).substr(start, end - start)));
                start = end + 1;
            }
        } else {
            if (!doc.tokens.empty())
                push_tokens(doc.tokens);
            else
                push_tokens(tokenize(doc.text));
        }
    }
    return sentences;
}

struct UnigramSampler {
    std::vector<double> cumulative;  // cumulative count^power by word id

    UnigramSampler() = default;
    UnigramSampler(const Vocabulary& vocab, double power) {
        cumulative.reserve(vocab.counts.size());
        double acc = 0;
        for (const auto c : vocab.counts) {
            acc += std::pow(static_cast<double>(c), power);
            cumulative.push_back(acc);
        }
    }

    std::int32_t sample(std::mt19937_64& rng) const {
        const double r = uniform_real01(rng) * cumulative.back();
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
        const auto idx = static_cast<std::size_t>(it - cumulative.begin());
        return static_cast<std::int32_t>(std::min(idx, cumulative.size() - 1));
    }
};

struct FrozenPair {
    std::int32_t center, context;
    std::vector<std::int32_t> negatives;
};

inline double frozen_batch_loss(const EmbeddingModel& model, const std::vector<FrozenPair>& batch) {
    if (batch.empty()) return 0.0;
    double total = 0;
    for (const auto& p : batch)
        total += sgns_loss_and_grad(model, p.center, p.context, p.negatives).loss;
    return total / static_cast<double>(batch.size());
}

}  // namespace detail

inline EmbeddingModel train_skipgram(const Corpus& corpus, const Vocabulary& vocab,
                                     const EmbeddingConfig& cfg) {
    cfg.validate();
    if (vocab.size() == 0) raise("train_skipgram: empty vocabulary");

    const auto sentences = detail::encode_sentences(corpus, vocab);
    std::int64_t total_tokens = 0;
    for (const auto& s : sentences) total_tokens += static_cast<std::int64_t>(s.size());
    if (total_tokens == 0) raise("train_skipgram: corpus has no in-vocabulary tokens");

    const auto v = static_cast<std::size_t>(vocab.size());
    const auto d = static_cast<std::size_t>(cfg.dim);

    EmbeddingModel model;
    model.vocab = vocab;
    model.config = cfg;
    model.dim = cfg.dim;
    model.input.resize(v * d);
    model.output.assign(v * d, 0.0f);
    {
        std::mt19937_64 init_rng(derive_seed(cfg.seed, 0));
        const double scale = 1.0 / cfg.dim;
        for (auto& x : model.input)
            x = static_cast<float>((uniform_real01(init_rng) - 0.5) * scale);
    }

    const detail::UnigramSampler sampler(vocab, cfg.unigram_power);

    // Frozen evaluation batch: fixed-window pairs with pre-drawn negatives,
    // sampled once so per-epoch losses are comparable.
    std::vector<detail::FrozenPair> eval_batch;
    if (cfg.eval_batch_pairs > 0) {
        std::mt19937_64 eval_rng(derive_seed(cfg.seed, 1));
        for (const auto& sent : sentences) {
            const auto n = static_cast<std::int64_t>(sent.size());
            for (std::int64_t i = 0; i < n; ++i) {
                for (std::int64_t j = i - cfg.window; j <= i + cfg.window; ++j) {
                    if (j < 0 || j >= n || j == i) continue;
                    detail::FrozenPair p;
                    p.center = sent[static_cast<std::size_t>(i)];
                    p.context = sent[static_cast<std::size_t>(j)];
                    for (int k = 0; k < cfg.negatives; ++k) {
                        const auto neg = sampler.sample(eval_rng);
                        if (neg == p.context) continue;
                        p.negatives.push_back(neg);
                    }
                    eval_batch.push_back(std::move(p));
                    if (eval_batch.size() >= static_cast<std::size_t>(cfg.eval_batch_pairs))
                        goto eval_done;
                }
            }
        }
    eval_done:;
    }

    const double lr_span = static_cast<double>(cfg.epochs) * static_cast<double>(total_tokens) + 1.0;
    std::atomic<std::int64_t> processed{0};

    auto train_range = [&](std::size_t sent_begin, std::size_t sent_end, std::mt19937_64 rng) {
        std::vector<std::int32_t> kept;
        std::vector<double> neu1e(d);
        for (std::size_t si = sent_begin; si < sent_end; ++si) {
            const auto& sent = sentences[si];
            const double done = static_cast<double>(processed.load(std::memory_order_relaxed));
            const double lr =
                std::max(cfg.min_lr, cfg.initial_lr * (1.0 - done / lr_span));

            kept.clear();
            for (const auto id : sent) {
                if (cfg.subsample_t > 0) {
                    const double f = static_cast<double>(vocab.counts[static_cast<std::size_t>(id)]) /
                                     static_cast<double>(total_tokens);
                    const double keep =
                        (std::sqrt(f / cfg.subsample_t) + 1.0) * (cfg.subsample_t / f);
                    if (uniform_real01(rng) >= keep) continue;
                }
                kept.push_back(id);
            }
            const auto n = static_cast<std::int64_t>(kept.size());
            for (std::int64_t i = 0; i < n; ++i) {
                const auto center = kept[static_cast<std::size_t>(i)];
                float* vc = model.input.data() + static_cast<std::size_t>(center) * d;
                const auto b = static_cast<std::int64_t>(
                    1 + uniform_below(rng, static_cast<std::uint64_t>(cfg.window)));
                for (std::int64_t j = i - b; j <= i + b; ++j) {
                    if (j < 0 || j >= n || j == i) continue;
                    const auto ctx = kept[static_cast<std::size_t>(j)];
                    std::fill(neu1e.begin(), neu1e.end(), 0.0);
                    for (int k = 0; k <= cfg.negatives; ++k) {
                        std::int32_t target;
                        double label;
                        if (k == 0) {
                            target = ctx;
                            label = 1.0;
                        } else {
                            target = sampler.sample(rng);
                            if (target == ctx) continue;
                            label = 0.0;
                        }
                        float* ut = model.output.data() + static_cast<std::size_t>(target) * d;
                        double dot = 0;
                        for (std::size_t x = 0; x < d; ++x)
                            dot += static_cast<double>(vc[x]) * static_cast<double>(ut[x]);
                        const double grad = (label - sigmoid(dot)) * lr;
                        for (std::size_t x = 0; x < d; ++x) {
                            neu1e[x] += grad * static_cast<double>(ut[x]);
                            ut[x] = static_cast<float>(static_cast<double>(ut[x]) +
                                                       grad * static_cast<double>(vc[x]));
                        }
                    }
                    for (std::size_t x = 0; x < d; ++x)
                        vc[x] = static_cast<float>(static_cast<double>(vc[x]) + neu1e[x]);
                }
            }
            processed.fetch_add(static_cast<std::int64_t>(sent.size()), std::memory_order_relaxed);
        }
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.workers <= 1) {
            train_range(0, sentences.size(),
                        std::mt19937_64(derive_seed(cfg.seed, 2 + static_cast<std::uint64_t>(epoch))));
        } else {
            // Hogwild: workers share the parameter matrices without locks.
            std::vector<std::thread> threads;
            const std::size_t per = (sentences.size() + static_cast<std::size_t>(cfg.workers) - 1) /
                                    static_cast<std::size_t>(cfg.workers);
            for (int w = 0; w < cfg.workers; ++w) {
                const std::size_t lo = std::min(sentences.size(), static_cast<std::size_t>(w) * per);
                const std::size_t hi = std::min(sentences.size(), lo + per);
                if (lo >= hi) break;
                threads.emplace_back(train_range, lo, hi,
                                     std::mt19937_64(derive_seed(
                                         cfg.seed, 1000 + static_cast<std::uint64_t>(epoch) * 64 +
                                                       static_cast<std::uint64_t>(w))));
            }
            for (auto& t : threads) t.join();
        }
        if (!eval_batch.empty())
            model.epoch_eval_loss.push_back(detail::frozen_batch_loss(model, eval_batch));
    }
    return model;
}

// ---------------------------------------------------------------------------
// Neighbor queries
// ---------------------------------------------------------------------------

/// Top-k cosine neighbors of a word over the input vectors, query excluded,
/// ties broken by word id.
inline std::vector<std::pair<std::string, double>> neighbors(const EmbeddingModel& model,
                                                             const std::string& word, int k) {
    if (k < 1) raise("neighbors: k must be >= 1");
    const auto qid = model.vocab.id(word);
    if (!qid) throw OovError(word);
    const auto q = model.input_row(*qid);

    std::vector<std::pair<double, std::int32_t>> sims;
    sims.reserve(static_cast<std::size_t>(model.vocab.size()));
    for (std::int32_t i = 0; i < model.vocab.size(); ++i) {
        if (i == *qid) continue;
        sims.emplace_back(cosine(q, model.input_row(i)), i);
    }
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), sims.size());
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(take), sims.end(),
                      [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return a.second < b.second;
                      });
    std::vector<std::pair<std::string, double>> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i)
        out.emplace_back(model.vocab.words[static_cast<std::size_t>(sims[i].second)], sims[i].first);
    return out;
}

}  // namespace slant
