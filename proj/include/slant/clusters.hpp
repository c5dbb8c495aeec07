#pragma once

// k-means over embedding vectors; the resulting clusters define the
// K-dimensional feature space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "slant/common.hpp"
#include "slant/embedding.hpp"

namespace slant {

struct ClusterModel {
    int K = 0;
    int dim = 0;
    std::vector<float> centroids;          // K x dim row-major
    std::vector<std::int32_t> assignment;  // word id -> cluster id
    double inertia = 0;                    // sum of squared distances
    std::vector<double> inertia_history;   // per Lloyd iteration

    std::span<const float> centroid(std::int32_t c) const {
        return {centroids.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(dim),
                static_cast<std::size_t>(dim)};
    }
};

struct KMeansConfig {
    int K = 1000;
    std::uint64_t seed = 42;
    int max_iter = 100;
    std::optional<double> tol;  // default: 1e-4 * mean squared vector norm
    bool normalize = false;     // cluster unit-norm copies of the vectors

    void validate() const {
        if (K < 1) raise("kmeans: K must be >= 1");
        if (max_iter < 1) raise("kmeans: max_iter must be >= 1");
        if (tol && *tol < 0) raise("kmeans: tol must be >= 0");
    }
};

namespace detail {

inline double sq_dist(std::span<const double> a, const double* b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

}  // namespace detail

/// Index of the nearest centroid (Euclidean), ties to the lowest cluster id.
inline std::int32_t nearest_centroid(const ClusterModel& cm, std::span<const float> vec) {
    if (static_cast<int>(vec.size()) != cm.dim)
        raise("nearest_centroid: vector dimension mismatch");
    std::int32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::int32_t c = 0; c < cm.K; ++c) {
        const auto cent = cm.centroid(c);
        double d = 0;
        for (std::size_t i = 0; i < vec.size(); ++i) {
            const double diff = static_cast<double>(vec[i]) - static_cast<double>(cent[i]);
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

/// Lloyd's algorithm from k-means++ seeding. Deterministic given the seed;
/// empty clusters are reseeded from the point farthest from its centroid.
inline ClusterModel kmeans(const EmbeddingModel& model, const KMeansConfig& cfg) {
    cfg.validate();
    const auto v = static_cast<std::size_t>(model.vocab.size());
    const auto d = static_cast<std::size_t>(model.dim);
    if (static_cast<std::size_t>(cfg.K) > v) raise("kmeans: K exceeds vocabulary size");

    // Working copy in double, optionally unit-normalized.
    std::vector<double> points(v * d);
    for (std::size_t i = 0; i < v * d; ++i) points[i] = static_cast<double>(model.input[i]);
    if (cfg.normalize) {
        for (std::size_t p = 0; p < v; ++p) {
            double norm = 0;
            for (std::size_t i = 0; i < d; ++i) norm += points[p * d + i] * points[p * d + i];
            norm = std::sqrt(norm);
            if (norm > 0)
                for (std::size_t i = 0; i < d; ++i) points[p * d + i] /= norm;
        }
    }
    auto point = [&](std::size_t p) {
        return std::span<const double>(points.data() + p * d, d);
    };

    double tol = 0;
    if (cfg.tol) {
        tol = *cfg.tol;
    } else {
        double mean_sq = 0;
        for (std::size_t p = 0; p < v; ++p) {
            const auto pt = point(p);
            for (const auto x : pt) mean_sq += x * x;
        }
        tol = 1e-4 * (mean_sq / static_cast<double>(v));
    }

    const auto K = static_cast<std::size_t>(cfg.K);
    std::mt19937_64 rng(derive_seed(cfg.seed, 0));

    // k-means++ seeding; when every remaining point coincides with a chosen
    // center (D^2 sums to zero) fall back to the first unchosen point.
    std::vector<double> centers(K * d);
    std::vector<double> d2(v, std::numeric_limits<double>::infinity());
    std::vector<bool> chosen(v, false);
    {
        const auto first = static_cast<std::size_t>(uniform_below(rng, v));
        std::copy_n(points.data() + first * d, d, centers.data());
        chosen[first] = true;
        for (std::size_t p = 0; p < v; ++p)
            d2[p] = detail::sq_dist(point(p), centers.data());
        for (std::size_t c = 1; c < K; ++c) {
            double total = 0;
            for (std::size_t p = 0; p < v; ++p) total += d2[p];
            std::size_t pick = v;
            if (total > 0) {
                const double r = uniform_real01(rng) * total;
                double acc = 0;
                for (std::size_t p = 0; p < v; ++p) {
                    acc += d2[p];
                    if (acc > r) { pick = p; break; }
                }
                if (pick == v) {
                    for (std::size_t p = v; p-- > 0;)
                        if (d2[p] > 0) { pick = p; break; }
                }
            }
            if (pick == v) {
                for (std::size_t p = 0; p < v; ++p)
                    if (!chosen[p]) { pick = p; break; }
            }
            std::copy_n(points.data() + pick * d, d, centers.data() + c * d);
            chosen[pick] = true;
            for (std::size_t p = 0; p < v; ++p)
                d2[p] = std::min(d2[p], detail::sq_dist(point(p), centers.data() + c * d));
        }
    }

    std::vector<std::int32_t> assign(v, 0);
    std::vector<double> dists(v, 0);
    ClusterModel cm;
    cm.K = cfg.K;
    cm.dim = model.dim;

    auto assign_all = [&]() {
        double inertia = 0;
        for (std::size_t p = 0; p < v; ++p) {
            const auto pt = point(p);
            std::int32_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < K; ++c) {
                const double dist = detail::sq_dist(pt, centers.data() + c * d);
                if (dist < best_d) {
                    best_d = dist;
                    best = static_cast<std::int32_t>(c);
                }
            }
            assign[p] = best;
            dists[p] = best_d;
            inertia += best_d;
        }
        return inertia;
    };

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        cm.inertia = assign_all();
        cm.inertia_history.push_back(cm.inertia);

        // Mean update with fixed (ascending point id) summation order.
        std::vector<double> sums(K * d, 0.0);
        std::vector<std::int64_t> counts(K, 0);
        for (std::size_t p = 0; p < v; ++p) {
            const auto c = static_cast<std::size_t>(assign[p]);
            ++counts[c];
            for (std::size_t i = 0; i < d; ++i) sums[c * d + i] += points[p * d + i];
        }
        std::vector<double> next(K * d);
        for (std::size_t c = 0; c < K; ++c) {
            if (counts[c] > 0) {
                for (std::size_t i = 0; i < d; ++i)
                    next[c * d + i] = sums[c * d + i] / static_cast<double>(counts[c]);
            } else {
                std::copy_n(centers.data() + c * d, d, next.data() + c * d);
            }
        }
        // Reseed empty clusters at the points currently farthest from their
        // centroids (distinct points, lowest id on ties).
        std::vector<bool> taken(v, false);
        for (std::size_t c = 0; c < K; ++c) {
            if (counts[c] > 0) continue;
            std::size_t far = v;
            double far_d = -1;
            for (std::size_t p = 0; p < v; ++p) {
                if (taken[p]) continue;
                if (dists[p] > far_d) {
                    far_d = dists[p];
                    far = p;
                }
            }
            if (far == v) break;
            taken[far] = true;
            std::copy_n(points.data() + far * d, d, next.data() + c * d);
        }

        double max_shift = 0;
        for (std::size_t c = 0; c < K; ++c)
            max_shift = std::max(max_shift, std::sqrt(detail::sq_dist(
                                                std::span<const double>(next.data() + c * d, d),
                                                centers.data() + c * d)));
        centers = std::move(next);
        if (max_shift < tol) break;
    }
    // Store centroids as f32, then compute the final assignment and objective
    // against the stored values so they match any post-hoc nearest-centroid
    // scan over the serialized model. inertia_history keeps the per-iteration
    // double-precision objectives.
    cm.centroids.resize(K * d);
    for (std::size_t i = 0; i < K * d; ++i) cm.centroids[i] = static_cast<float>(centers[i]);
    for (std::size_t i = 0; i < K * d; ++i) centers[i] = static_cast<double>(cm.centroids[i]);
    cm.inertia = assign_all();
    cm.assignment = assign;
    return cm;
}

}  // namespace slant
