#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "kbin/adam.hpp"
#include "kbin/common.hpp"
#include "kbin/dataset.hpp"
#include "kbin/kmer.hpp"
#include "kbin/matrix.hpp"
#include "kbin/metrics.hpp"
#include "kbin/parallel.hpp"
#include "kbin/rng.hpp"

namespace kbin {

// Average per-read co-occurrence counts of k-mer pairs whose window start
// positions are at most `window` apart. Symmetric; the diagonal is recorded
// but never enters the loss.
struct CooccurrenceStats {
    int k = 0;
    int window = 0;
    std::size_t reads_seen = 0;
    Matrix o;  // 4^k x 4^k
};

inline CooccurrenceStats count_cooccurrences(const Dataset& d, int k, int window) {
    if (window < 1) throw std::invalid_argument("count_cooccurrences: window must be >= 1");
    const std::size_t dim = kmer_space_size(k);
    CooccurrenceStats stats;
    stats.k = k;
    stats.window = window;
    stats.reads_seen = d.reads.size();
    stats.o = Matrix(dim, dim, 0.0);

    const unsigned workers = effective_threads(d.reads.size());
    std::vector<Matrix> partial(workers, Matrix(dim, dim, 0.0));
    parallel_chunks(d.reads.size(), [&](std::size_t begin, std::size_t end, unsigned w) {
        Matrix& o = partial[w];
        std::vector<std::int64_t> ranks;
        for (std::size_t ri = begin; ri < end; ++ri) {
            const auto& bases = d.reads[ri].bases;
            if (bases.size() < static_cast<std::size_t>(k)) {
                throw std::invalid_argument("count_cooccurrences: read shorter than k");
            }
            // Window ranks in position order; -1 marks skipped (ambiguous) windows.
            ranks.assign(bases.size() - static_cast<std::size_t>(k) + 1, -1);
            std::size_t code = 0;
            int valid = 0;
            for (std::size_t i = 0; i < bases.size(); ++i) {
                const int b = base_code(bases[i]);
                if (b < 0) {
                    valid = 0;
                    code = 0;
                    continue;
                }
                code = ((code << 2) | static_cast<std::size_t>(b)) & (dim - 1);
                if (++valid >= k) ranks[i + 1 - static_cast<std::size_t>(k)] = static_cast<std::int64_t>(code);
            }
            for (std::size_t i = 0; i < ranks.size(); ++i) {
                if (ranks[i] < 0) continue;
                const std::size_t jmax = std::min(ranks.size(), i + static_cast<std::size_t>(window) + 1);
                for (std::size_t j = i + 1; j < jmax; ++j) {
                    if (ranks[j] < 0) continue;
                    const auto x = static_cast<std::size_t>(ranks[i]);
                    const auto y = static_cast<std::size_t>(ranks[j]);
                    o.at(x, y) += 1.0;
                    o.at(y, x) += 1.0;
                }
            }
        }
    });
    for (const auto& part : partial) {
        for (std::size_t i = 0; i < stats.o.data.size(); ++i) stats.o.data[i] += part.data[i];
    }
    if (stats.reads_seen > 0) {
        const double inv = 1.0 / static_cast<double>(stats.reads_seen);
        for (double& v : stats.o.data) v *= inv;
    }
    return stats;
}

// Learned per-k-mer embedding vectors; row x is the representation of the
// k-mer with lexicographic rank x.
struct KmerEmbeddings {
    int k = 0;
    int dim = 0;
    Matrix z;  // 4^k x dim
};

struct PoissonTrainConfig {
    int epochs = 1000;
    double learning_rate = 1e-3;
    int dim = 256;
    int window = 4;
    int reads_sampled = 10000;
    std::uint64_t seed = 0;
    AdamConfig adam = {};
    double init_sd = 0.1;
};

// Negative log-likelihood (up to constants) of o_xy ~ Pois(exp(-||z_x-z_y||^2)):
//   (1/2) sum_x sum_{y != x} o_xy * ||z_x - z_y||^2 + exp(-||z_x - z_y||^2)
inline double poisson_loss(const CooccurrenceStats& stats, const KmerEmbeddings& emb) {
    const std::size_t n = emb.z.rows;
    if (stats.o.rows != n) throw std::invalid_argument("poisson_loss: dimension mismatch");
    for (double v : emb.z.data) {
        if (!std::isfinite(v)) throw NumericalError("poisson_loss: non-finite embedding entry");
    }
    std::vector<double> partial(n, 0.0);
    parallel_for(n, [&](std::size_t x) {
        const double* zx = emb.z.row(x);
        double acc = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
            if (y == x) continue;
            const double d2 = squared_euclidean({zx, emb.z.cols}, emb.z.row_span(y));
            acc += stats.o.at(x, y) * d2 + std::exp(-d2);
        }
        partial[x] = acc;
    });
    double total = 0.0;
    for (double v : partial) total += v;
    return 0.5 * total;
}

// Loss and gradient in one sweep. grad row x is
//   sum_{y != x} 2 * (o_xy - exp(-||z_x - z_y||^2)) * (z_x - z_y),
// each row an independent serial reduction, so the result does not depend on
// the thread count.
inline double poisson_loss_grad(const CooccurrenceStats& stats, const KmerEmbeddings& emb, Matrix& grad) {
    const std::size_t n = emb.z.rows;
    const std::size_t dim = emb.z.cols;
    if (stats.o.rows != n) throw std::invalid_argument("poisson_loss_grad: dimension mismatch");
    grad.rows = n;
    grad.cols = dim;
    grad.data.assign(n * dim, 0.0);
    std::vector<double> partial(n, 0.0);
    parallel_for(n, [&](std::size_t x) {
        const double* zx = emb.z.row(x);
        double* gx = grad.row(x);
        double acc = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
            if (y == x) continue;
            const double* zy = emb.z.row(y);
            double d2 = 0.0;
            for (std::size_t t = 0; t < dim; ++t) {
                const double diff = zx[t] - zy[t];
                d2 += diff * diff;
            }
            const double lambda = std::exp(-d2);
            const double oxy = stats.o.at(x, y);
            acc += oxy * d2 + lambda;
            const double w = 2.0 * (oxy - lambda);
            for (std::size_t t = 0; t < dim; ++t) gx[t] += w * (zx[t] - zy[t]);
        }
        partial[x] = acc;
    });
    double total = 0.0;
    for (double v : partial) total += v;
    return 0.5 * total;
}

struct PoissonTrainResult {
    KmerEmbeddings embeddings;
    std::vector<double> loss_trace;
};

// Full-batch Adam on the Poisson loss, seeded Gaussian init.
inline PoissonTrainResult train_poisson(const CooccurrenceStats& stats, const PoissonTrainConfig& cfg) {
    if (cfg.epochs < 1 || cfg.dim < 1 || cfg.window < 1 || cfg.learning_rate <= 0.0) {
        throw std::invalid_argument("train_poisson: config values must be positive");
    }
    const std::size_t n = stats.o.rows;
    PoissonTrainResult out;
    out.embeddings.k = stats.k;
    out.embeddings.dim = cfg.dim;
    out.embeddings.z = Matrix(n, static_cast<std::size_t>(cfg.dim));

    Rng rng(cfg.seed);
    for (double& v : out.embeddings.z.data) v = cfg.init_sd * rng.normal();

    Adam opt(out.embeddings.z.data.size(), cfg.learning_rate, cfg.adam);
    Matrix grad;
    out.loss_trace.reserve(static_cast<std::size_t>(cfg.epochs));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double loss = poisson_loss_grad(stats, out.embeddings, grad);
        if (!std::isfinite(loss)) {
            throw NumericalError("train_poisson: loss diverged at epoch " + std::to_string(epoch));
        }
        out.loss_trace.push_back(loss);
        opt.step(out.embeddings.z.data, grad.data);
    }
    return out;
}

// Count-weighted mean of the k-mer vectors.
inline std::vector<double> embed_read_pois(const KmerProfile& p, const KmerEmbeddings& emb) {
    if (p.k != emb.k) throw std::invalid_argument("embed_read_pois: profile k mismatch");
    if (p.total == 0) throw DataError("embed_read_pois: profile has no countable windows");
    std::vector<double> out(static_cast<std::size_t>(emb.dim), 0.0);
    for (std::size_t x = 0; x < p.counts.size(); ++x) {
        const auto c = p.counts[x];
        if (c == 0) continue;
        const double* zx = emb.z.row(x);
        for (std::size_t t = 0; t < out.size(); ++t) out[t] += static_cast<double>(c) * zx[t];
    }
    const double inv = 1.0 / static_cast<double>(p.total);
    for (double& v : out) v *= inv;
    return out;
}

inline std::vector<double> embed_read_pois(const Read& r, const KmerEmbeddings& emb) {
    return embed_read_pois(profile(r.bases, KmerConfig{.k = emb.k, .canonical_fold = false}), emb);
}

}  // namespace kbin
