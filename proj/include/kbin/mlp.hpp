#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <span>
#include <string>
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

enum class NlLoss { bernoulli, poisson, hinge };

inline NlLoss parse_nl_loss(const std::string& name) {
    if (name == "bernoulli") return NlLoss::bernoulli;
    if (name == "poisson") return NlLoss::poisson;
    if (name == "hinge") return NlLoss::hinge;
    throw DataError("unknown loss '" + name + "' (expected bernoulli|poisson|hinge)");
}

inline const char* nl_loss_name(NlLoss l) {
    switch (l) {
        case NlLoss::bernoulli: return "bernoulli";
        case NlLoss::poisson: return "poisson";
        default: return "hinge";
    }
}

// Two-layer embedder: input (4^k profile features) -> hidden, sigmoid,
// batch normalization, dropout -> output embedding. All trainable state plus
// the batch-norm running statistics.
struct MlpParams {
    int k = 4;
    int input_dim = 256;
    int hidden = 512;
    int output_dim = 256;

    Matrix w1;  // hidden x input
    std::vector<double> b1;
    Matrix w2;  // output x hidden
    std::vector<double> b2;
    std::vector<double> bn_gamma, bn_beta, bn_running_mean, bn_running_var;

    double bn_eps = 1e-5;
    double bn_momentum = 0.1;
    double dropout = 0.2;

    static MlpParams init(int k, int hidden, int output_dim, std::uint64_t seed) {
        MlpParams p;
        p.k = k;
        p.input_dim = static_cast<int>(kmer_space_size(k));
        p.hidden = hidden;
        p.output_dim = output_dim;
        p.w1 = Matrix(static_cast<std::size_t>(hidden), static_cast<std::size_t>(p.input_dim));
        p.b1.assign(static_cast<std::size_t>(hidden), 0.0);
        p.w2 = Matrix(static_cast<std::size_t>(output_dim), static_cast<std::size_t>(hidden));
        p.b2.assign(static_cast<std::size_t>(output_dim), 0.0);
        p.bn_gamma.assign(static_cast<std::size_t>(hidden), 1.0);
        p.bn_beta.assign(static_cast<std::size_t>(hidden), 0.0);
        p.bn_running_mean.assign(static_cast<std::size_t>(hidden), 0.0);
        p.bn_running_var.assign(static_cast<std::size_t>(hidden), 1.0);

        Rng rng(seed);
        const double r1 = 1.0 / std::sqrt(static_cast<double>(p.input_dim));
        for (double& v : p.w1.data) v = (2.0 * rng.unit() - 1.0) * r1;
        const double r2 = 1.0 / std::sqrt(static_cast<double>(hidden));
        for (double& v : p.w2.data) v = (2.0 * rng.unit() - 1.0) * r2;
        return p;
    }

    std::size_t trainable_count() const {
        return w1.data.size() + b1.size() + w2.data.size() + b2.size() + bn_gamma.size() + bn_beta.size();
    }
};

// Segment profiles as model inputs. Frequencies (counts / total) by default;
// raw_counts preserves the unnormalized profile.
inline std::vector<double> profile_input(const KmerProfile& p, bool raw_counts = false) {
    if (p.total == 0) throw DataError("profile_input: profile has no countable windows");
    std::vector<double> x(p.counts.size());
    const double scale = raw_counts ? 1.0 : 1.0 / static_cast<double>(p.total);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = scale * static_cast<double>(p.counts[i]);
    return x;
}

// Everything the backward pass needs from one batched train-mode forward.
struct ForwardCache {
    Matrix x;                    // B x input
    Matrix s;                    // B x hidden, sigmoid outputs
    std::vector<double> mean;    // hidden, batch mean of s
    std::vector<double> inv_sd;  // hidden, 1/sqrt(var + eps)
    Matrix xhat;                 // B x hidden, normalized
    std::vector<std::uint8_t> keep;  // B x hidden dropout mask
    Matrix h;                    // B x hidden, after dropout scaling
    Matrix out;                  // B x output
};

namespace detail {

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

inline void affine_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b, Matrix& out) {
    matmul_abt(x, w, out);
    for (std::size_t r = 0; r < out.rows; ++r) {
        double* row = out.row(r);
        for (std::size_t c = 0; c < out.cols; ++c) row[c] += b[c];
    }
}

}  // namespace detail

// Train-mode forward over a batch. Batch statistics normalize the sigmoid
// activations and update the running statistics; inverted dropout keeps
// inference a plain affine pass. mask_seed fixes the dropout mask.
inline void forward_train(MlpParams& params, const Matrix& x, std::uint64_t mask_seed, ForwardCache& cache) {
    const std::size_t batch = x.rows;
    const std::size_t hidden = static_cast<std::size_t>(params.hidden);
    if (batch == 0) throw std::invalid_argument("forward_train: empty batch");

    cache.x = x;
    detail::affine_forward(x, params.w1, params.b1, cache.s);
    for (double& v : cache.s.data) v = detail::sigmoid(v);

    cache.mean.assign(hidden, 0.0);
    cache.inv_sd.assign(hidden, 0.0);
    const double inv_b = 1.0 / static_cast<double>(batch);
    parallel_for(hidden, [&](std::size_t c) {
        double m = 0.0;
        for (std::size_t r = 0; r < batch; ++r) m += cache.s.at(r, c);
        m *= inv_b;
        double var = 0.0;
        for (std::size_t r = 0; r < batch; ++r) {
            const double d = cache.s.at(r, c) - m;
            var += d * d;
        }
        var *= inv_b;
        cache.mean[c] = m;
        cache.inv_sd[c] = 1.0 / std::sqrt(var + params.bn_eps);
        params.bn_running_mean[c] = (1.0 - params.bn_momentum) * params.bn_running_mean[c] + params.bn_momentum * m;
        params.bn_running_var[c] = (1.0 - params.bn_momentum) * params.bn_running_var[c] + params.bn_momentum * var;
    });

    cache.xhat = Matrix(batch, hidden);
    cache.h = Matrix(batch, hidden);
    cache.keep.assign(batch * hidden, 1);
    Rng mask_rng(mask_seed);
    const double p_drop = params.dropout;
    const double keep_scale = p_drop > 0.0 ? 1.0 / (1.0 - p_drop) : 1.0;
    for (std::size_t r = 0; r < batch; ++r) {
        for (std::size_t c = 0; c < hidden; ++c) {
            const double xh = (cache.s.at(r, c) - cache.mean[c]) * cache.inv_sd[c];
            cache.xhat.at(r, c) = xh;
            double v = params.bn_gamma[c] * xh + params.bn_beta[c];
            if (p_drop > 0.0) {
                const bool keep = mask_rng.unit() >= p_drop;
                cache.keep[r * hidden + c] = keep ? 1 : 0;
                v = keep ? v * keep_scale : 0.0;
            }
            cache.h.at(r, c) = v;
        }
    }
    detail::affine_forward(cache.h, params.w2, params.b2, cache.out);
    for (double v : cache.out.data) {
        if (!std::isfinite(v)) throw NumericalError("forward_train: non-finite activation");
    }
}

// Inference: running statistics, no dropout. Pure function of the params.
inline void forward_infer(const MlpParams& params, const Matrix& x, Matrix& out) {
    const std::size_t hidden = static_cast<std::size_t>(params.hidden);
    Matrix s;
    detail::affine_forward(x, params.w1, params.b1, s);
    for (double& v : s.data) v = detail::sigmoid(v);
    for (std::size_t r = 0; r < s.rows; ++r) {
        double* row = s.row(r);
        for (std::size_t c = 0; c < hidden; ++c) {
            const double xh = (row[c] - params.bn_running_mean[c]) / std::sqrt(params.bn_running_var[c] + params.bn_eps);
            row[c] = params.bn_gamma[c] * xh + params.bn_beta[c];
        }
    }
    detail::affine_forward(s, params.w2, params.b2, out);
}

inline std::vector<double> forward_infer(const MlpParams& params, std::span<const double> x) {
    Matrix xin(1, x.size());
    std::copy(x.begin(), x.end(), xin.data.begin());
    Matrix out;
    forward_infer(params, xin, out);
    return out.data;
}

struct MlpGrads {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;
    std::vector<double> bn_gamma, bn_beta;
};

// Exact backward pass for the train-mode forward above, including the
// batch-statistic terms of batch normalization.
inline void backward(const MlpParams& params, const ForwardCache& cache, const Matrix& d_out, MlpGrads& grads) {
    const std::size_t batch = cache.x.rows;
    const std::size_t hidden = static_cast<std::size_t>(params.hidden);
    const double keep_scale = params.dropout > 0.0 ? 1.0 / (1.0 - params.dropout) : 1.0;

    grads.w2 = Matrix(params.w2.rows, params.w2.cols);
    grads.b2.assign(static_cast<std::size_t>(params.output_dim), 0.0);
    accumulate_atb(d_out, cache.h, grads.w2);
    for (std::size_t r = 0; r < batch; ++r) {
        const double* dr = d_out.row(r);
        for (std::size_t c = 0; c < grads.b2.size(); ++c) grads.b2[c] += dr[c];
    }

    // d wrt dropout output, then through mask, then batch norm.
    Matrix dh;
    matmul_ab(d_out, params.w2, dh);  // B x hidden
    Matrix dxhat(batch, hidden);
    grads.bn_gamma.assign(hidden, 0.0);
    grads.bn_beta.assign(hidden, 0.0);
    parallel_for(hidden, [&](std::size_t c) {
        double g_gamma = 0.0, g_beta = 0.0;
        for (std::size_t r = 0; r < batch; ++r) {
            double d = dh.at(r, c);
            if (params.dropout > 0.0) d = cache.keep[r * hidden + c] ? d * keep_scale : 0.0;
            g_gamma += d * cache.xhat.at(r, c);
            g_beta += d;
            dxhat.at(r, c) = d * params.bn_gamma[c];
        }
        grads.bn_gamma[c] = g_gamma;
        grads.bn_beta[c] = g_beta;
    });

    // ds = inv_sd/B * (B*dxhat - sum(dxhat) - xhat * sum(dxhat .* xhat)),
    // then through the sigmoid into the first affine layer.
    Matrix ds(batch, hidden);
    const double inv_b = 1.0 / static_cast<double>(batch);
    parallel_for(hidden, [&](std::size_t c) {
        double sum_d = 0.0, sum_dx = 0.0;
        for (std::size_t r = 0; r < batch; ++r) {
            sum_d += dxhat.at(r, c);
            sum_dx += dxhat.at(r, c) * cache.xhat.at(r, c);
        }
        for (std::size_t r = 0; r < batch; ++r) {
            const double term = static_cast<double>(batch) * dxhat.at(r, c) - sum_d - cache.xhat.at(r, c) * sum_dx;
            const double sig = cache.s.at(r, c);
            ds.at(r, c) = cache.inv_sd[c] * inv_b * term * sig * (1.0 - sig);
        }
    });

    grads.w1 = Matrix(params.w1.rows, params.w1.cols);
    grads.b1.assign(hidden, 0.0);
    accumulate_atb(ds, cache.x, grads.w1);
    for (std::size_t r = 0; r < batch; ++r) {
        const double* dr = ds.row(r);
        for (std::size_t c = 0; c < hidden; ++c) grads.b1[c] += dr[c];
    }
}

// ---------------------------------------------------------------------------
// Pair losses
// ---------------------------------------------------------------------------

// p_ij = exp(-||e_i - e_j||^2), the success probability of a positive pair.
inline double pair_probability(std::span<const double> ei, std::span<const double> ej) {
    return std::exp(-squared_euclidean(ei, ej));
}

inline constexpr double kProbClamp = 1e-12;

namespace detail {

// Per-pair loss value and d(loss)/d(squared distance), before the 1/|I| mean.
inline void pair_loss_terms(NlLoss kind, int label, double d2, double& loss, double& dloss_dd2) {
    const double p = std::exp(-d2);
    switch (kind) {
        case NlLoss::bernoulli: {
            if (label == 1) {
                // -log p with log p = -d2 exactly; clamp caps the pull of
                // extremely distant positives.
                if (p < kProbClamp) {
                    loss = -std::log(kProbClamp);
                    dloss_dd2 = 0.0;
                } else {
                    loss = d2;
                    dloss_dd2 = 1.0;
                }
            } else {
                const double q = 1.0 - p;
                if (q < kProbClamp) {
                    loss = -std::log(kProbClamp);
                    dloss_dd2 = 0.0;
                } else {
                    loss = -std::log1p(-p);
                    dloss_dd2 = -p / q;
                }
            }
            return;
        }
        case NlLoss::poisson: {
            // -y log lambda + lambda with lambda = exp(-d2).
            loss = (label == 1 ? d2 : 0.0) + p;
            dloss_dd2 = (label == 1 ? 1.0 : 0.0) - p;
            return;
        }
        case NlLoss::hinge: {
            if (label == 1) {
                loss = d2;
                dloss_dd2 = 1.0;
                return;
            }
            const double dist = std::sqrt(d2);
            if (dist >= 1.0) {
                loss = 0.0;
                dloss_dd2 = 0.0;
            } else if (dist == 0.0) {
                // Margin gradient is singular at coincident embeddings; skip.
                loss = 1.0;
                dloss_dd2 = 0.0;
            } else {
                const double slack = 1.0 - dist;
                loss = slack * slack;
                dloss_dd2 = -slack / dist;
            }
            return;
        }
    }
}

}  // namespace detail

// A batch of contrastive samples. Segment profiles are stored once; each
// pair references two rows and carries its label (1 = two halves of the same
// read, 0 = halves of distinct reads).
struct PairBatch {
    Matrix segments;  // rows of model inputs
    struct Pair {
        std::uint32_t a, b;
        std::uint8_t label;
    };
    std::vector<Pair> pairs;
};

// Mean pair loss over embeddings e (one row per segment), plus d(loss)/de.
inline double pair_loss(NlLoss kind, const Matrix& e, const std::vector<PairBatch::Pair>& pairs, Matrix* d_e) {
    if (pairs.empty()) throw std::invalid_argument("pair_loss: empty pair set");
    if (d_e != nullptr) {
        d_e->rows = e.rows;
        d_e->cols = e.cols;
        d_e->data.assign(e.rows * e.cols, 0.0);
    }
    const double inv = 1.0 / static_cast<double>(pairs.size());
    double total = 0.0;
    for (const auto& pr : pairs) {
        const double* ea = e.row(pr.a);
        const double* eb = e.row(pr.b);
        double d2 = 0.0;
        for (std::size_t t = 0; t < e.cols; ++t) {
            const double d = ea[t] - eb[t];
            d2 += d * d;
        }
        double loss = 0.0, slope = 0.0;
        detail::pair_loss_terms(kind, pr.label, d2, loss, slope);
        total += loss;
        if (d_e != nullptr) {
            const double w = 2.0 * slope * inv;
            double* ga = d_e->row(pr.a);
            double* gb = d_e->row(pr.b);
            for (std::size_t t = 0; t < e.cols; ++t) {
                const double d = ea[t] - eb[t];
                ga[t] += w * d;
                gb[t] -= w * d;
            }
        }
    }
    return total * inv;
}

inline double loss_bernoulli(const Matrix& e, const std::vector<PairBatch::Pair>& pairs) {
    return pair_loss(NlLoss::bernoulli, e, pairs, nullptr);
}

inline double loss_poisson_nl(const Matrix& e, const std::vector<PairBatch::Pair>& pairs) {
    return pair_loss(NlLoss::poisson, e, pairs, nullptr);
}

inline double loss_hinge(const Matrix& e, const std::vector<PairBatch::Pair>& pairs) {
    return pair_loss(NlLoss::hinge, e, pairs, nullptr);
}

// ---------------------------------------------------------------------------
// Pair construction and training
// ---------------------------------------------------------------------------

struct NlTrainConfig {
    int epochs = 300;
    int minibatch = 10000;  // pairs per Adam step
    int negatives_per_positive = 200;
    double learning_rate = 1e-3;
    double dropout = 0.2;
    NlLoss loss = NlLoss::bernoulli;
    int k = 4;
    std::uint64_t seed = 0;
    int hidden = 512;
    int output_dim = 256;
    bool raw_counts = false;
    AdamConfig adam = {};
};

namespace detail {

struct HalfProfiles {
    // Model inputs of the left and right half of every read, interleaved:
    // row 2i = left half of read i, row 2i+1 = right half.
    Matrix inputs;
};

inline HalfProfiles split_halves(const Dataset& d, const NlTrainConfig& cfg) {
    const KmerConfig kcfg{.k = cfg.k, .canonical_fold = false};
    HalfProfiles halves;
    halves.inputs = Matrix(2 * d.reads.size(), kmer_space_size(cfg.k));
    for (std::size_t i = 0; i < d.reads.size(); ++i) {
        const auto& bases = d.reads[i].bases;
        if (bases.size() < 2 * static_cast<std::size_t>(cfg.k)) {
            throw DataError("read " + d.reads[i].id + " too short to split into k-mer-bearing halves");
        }
        const std::size_t mid = bases.size() / 2;
        const auto left = profile_input(profile(std::string_view(bases).substr(0, mid), kcfg), cfg.raw_counts);
        const auto right = profile_input(profile(std::string_view(bases).substr(mid), kcfg), cfg.raw_counts);
        std::copy(left.begin(), left.end(), halves.inputs.row(2 * i));
        std::copy(right.begin(), right.end(), halves.inputs.row(2 * i + 1));
    }
    return halves;
}

}  // namespace detail

// One epoch worth of contrastive samples: per read, the positive pair of its
// two halves plus `negatives_per_positive` pairs against random halves of
// other reads. Deterministic in epoch_seed.
inline PairBatch make_pairs(const Dataset& d, const NlTrainConfig& cfg, std::uint64_t epoch_seed) {
    const std::size_t n = d.reads.size();
    if (n == 0) throw DataError("make_pairs: empty dataset");
    const auto halves = detail::split_halves(d, cfg);
    if (n == 1 && cfg.negatives_per_positive > 0) {
        std::cerr << "kbin: warning: single-read dataset, no negative pairs can be formed\n";
    }

    Rng rng(epoch_seed);
    PairBatch batch;
    batch.segments = halves.inputs;
    batch.pairs.reserve(n * (1 + static_cast<std::size_t>(cfg.negatives_per_positive)));
    for (std::size_t i = 0; i < n; ++i) {
        batch.pairs.push_back({static_cast<std::uint32_t>(2 * i), static_cast<std::uint32_t>(2 * i + 1), 1});
        if (n < 2) continue;
        const std::uint32_t anchor = static_cast<std::uint32_t>(2 * i + (rng.coin() ? 1 : 0));
        for (int neg = 0; neg < cfg.negatives_per_positive; ++neg) {
            std::size_t other = rng.below(n - 1);
            if (other >= i) ++other;
            const std::uint32_t row = static_cast<std::uint32_t>(2 * other + (rng.coin() ? 1 : 0));
            batch.pairs.push_back({anchor, row, 0});
        }
    }
    return batch;
}

struct NlTrainResult {
    MlpParams params;
    std::vector<double> loss_trace;  // mean loss per epoch
};

// Minibatch Adam on the selected pair loss. Each minibatch packs whole
// positive groups (a positive pair and its negatives stay together); the
// batch rows presented to batch normalization are the group segments.
inline NlTrainResult train_nl(const Dataset& d, const NlTrainConfig& cfg) {
    if (d.reads.size() < 2) throw DataError("train_nl: need at least 2 reads");
    if (cfg.epochs < 1 || cfg.minibatch < 1 || cfg.negatives_per_positive < 0 || cfg.hidden < 1 ||
        cfg.output_dim < 1 || cfg.learning_rate <= 0.0) {
        throw std::invalid_argument("train_nl: config values must be positive");
    }
    if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) throw std::invalid_argument("train_nl: dropout must be in [0, 1)");
    NlTrainResult result;
    result.params = MlpParams::init(cfg.k, cfg.hidden, cfg.output_dim, cfg.seed);
    result.params.dropout = cfg.dropout;
    MlpParams& params = result.params;

    const auto halves = detail::split_halves(d, cfg);
    const std::size_t n = d.reads.size();
    const std::size_t group_size = 1 + static_cast<std::size_t>(cfg.negatives_per_positive);
    const std::size_t groups_per_batch = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.minibatch) / group_size);

    // Flat parameter/gradient buffers for Adam.
    const std::size_t total_params = params.trainable_count();
    std::vector<double> flat_params(total_params), flat_grads(total_params);
    Adam opt(total_params, cfg.learning_rate, cfg.adam);

    Rng order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<std::size_t> read_order(n);
    for (std::size_t i = 0; i < n; ++i) read_order[i] = i;

    ForwardCache cache;
    MlpGrads grads;
    Matrix batch_x, d_e;
    std::vector<PairBatch::Pair> batch_pairs;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::uint64_t epoch_seed = order_rng.fork_seed();
        Rng rng(epoch_seed);
        order_rng.shuffle(read_order);

        double epoch_loss = 0.0;
        std::size_t epoch_pairs = 0;
        for (std::size_t start = 0; start < n; start += groups_per_batch) {
            const std::size_t stop = std::min(n, start + groups_per_batch);
            const std::size_t gcount = stop - start;
            const std::size_t rows = gcount * (2 + static_cast<std::size_t>(cfg.negatives_per_positive));
            batch_x = Matrix(rows, halves.inputs.cols);
            batch_pairs.clear();

            std::size_t row = 0;
            for (std::size_t gi = start; gi < stop; ++gi) {
                const std::size_t i = read_order[gi];
                const std::size_t left = row;
                std::copy(halves.inputs.row(2 * i), halves.inputs.row(2 * i) + halves.inputs.cols, batch_x.row(row++));
                const std::size_t right = row;
                std::copy(halves.inputs.row(2 * i + 1), halves.inputs.row(2 * i + 1) + halves.inputs.cols,
                          batch_x.row(row++));
                batch_pairs.push_back({static_cast<std::uint32_t>(left), static_cast<std::uint32_t>(right), 1});
                const std::size_t anchor = rng.coin() ? right : left;
                for (int neg = 0; neg < cfg.negatives_per_positive; ++neg) {
                    std::size_t other = rng.below(n - 1);
                    if (other >= i) ++other;
                    const std::size_t other_row = 2 * other + (rng.coin() ? 1 : 0);
                    std::copy(halves.inputs.row(other_row), halves.inputs.row(other_row) + halves.inputs.cols,
                              batch_x.row(row));
                    batch_pairs.push_back({static_cast<std::uint32_t>(anchor), static_cast<std::uint32_t>(row), 0});
                    ++row;
                }
            }

            forward_train(params, batch_x, rng.fork_seed(), cache);
            const double loss = pair_loss(cfg.loss, cache.out, batch_pairs, &d_e);
            if (!std::isfinite(loss)) {
                throw NumericalError("train_nl: loss diverged at epoch " + std::to_string(epoch) + ", step " +
                                     std::to_string(start / groups_per_batch));
            }
            epoch_loss += loss * static_cast<double>(batch_pairs.size());
            epoch_pairs += batch_pairs.size();

            backward(params, cache, d_e, grads);

            // Pack params/grads into flat buffers, step, unpack.
            std::size_t off = 0;
            auto pack = [&](const double* src, std::size_t sz, std::vector<double>& dst) {
                std::copy(src, src + sz, dst.begin() + static_cast<std::ptrdiff_t>(off));
                off += sz;
            };
            off = 0;
            pack(params.w1.data.data(), params.w1.data.size(), flat_params);
            pack(params.b1.data(), params.b1.size(), flat_params);
            pack(params.w2.data.data(), params.w2.data.size(), flat_params);
            pack(params.b2.data(), params.b2.size(), flat_params);
            pack(params.bn_gamma.data(), params.bn_gamma.size(), flat_params);
            pack(params.bn_beta.data(), params.bn_beta.size(), flat_params);
            off = 0;
            pack(grads.w1.data.data(), grads.w1.data.size(), flat_grads);
            pack(grads.b1.data(), grads.b1.size(), flat_grads);
            pack(grads.w2.data.data(), grads.w2.data.size(), flat_grads);
            pack(grads.b2.data(), grads.b2.size(), flat_grads);
            pack(grads.bn_gamma.data(), grads.bn_gamma.size(), flat_grads);
            pack(grads.bn_beta.data(), grads.bn_beta.size(), flat_grads);

            opt.step(flat_params, flat_grads);

            off = 0;
            auto unpack = [&](double* dst, std::size_t sz) {
                std::copy(flat_params.begin() + static_cast<std::ptrdiff_t>(off),
                          flat_params.begin() + static_cast<std::ptrdiff_t>(off + sz), dst);
                off += sz;
            };
            unpack(params.w1.data.data(), params.w1.data.size());
            unpack(params.b1.data(), params.b1.size());
            unpack(params.w2.data.data(), params.w2.data.size());
            unpack(params.b2.data(), params.b2.size());
            unpack(params.bn_gamma.data(), params.bn_gamma.size());
            unpack(params.bn_beta.data(), params.bn_beta.size());
        }
        result.loss_trace.push_back(epoch_loss / static_cast<double>(epoch_pairs));
    }
    return result;
}

// Whole-read embedding: inference on the read's own profile features
// (the half split is a training device only).
inline std::vector<double> embed_read_nl(const Read& r, const MlpParams& params, bool raw_counts = false) {
    const KmerConfig cfg{.k = params.k, .canonical_fold = false};
    const auto x = profile_input(profile(r.bases, cfg), raw_counts);
    return forward_infer(params, x);
}

}  // namespace kbin
