#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kbin/common.hpp"
#include "kbin/dataset.hpp"
#include "kbin/kmer.hpp"
#include "kbin/rng.hpp"

namespace kbin {

// Desk-scale stand-in for real reference corpora: each genome is drawn from
// its own randomly parameterized Markov chain, so genomes carry
// distinguishable k-mer compositions, and reads are uniform substrings.
struct GeneratorSpec {
    int genome_count = 2;
    std::size_t genome_length = 10000;
    int reads_per_genome = 10;
    std::size_t read_length = 1000;
    int markov_order = 1;
    std::uint64_t seed = 0;
};

struct SyntheticSplit {
    Dataset eval;
    Dataset calib;
};

namespace detail {

// Per-context transition weights: exp of a scaled unit normal, normalized.
// The scale controls how biased (and therefore how separable) genome
// compositions are.
inline constexpr double kTransitionLogSd = 0.5;

struct MarkovChain {
    int order;
    std::vector<std::array<double, 4>> cumulative;  // 4^order rows of CDFs

    static MarkovChain random(int order, Rng& rng) {
        MarkovChain c;
        c.order = order;
        const std::size_t contexts = std::size_t{1} << (2 * order);
        c.cumulative.resize(contexts);
        for (auto& row : c.cumulative) {
            std::array<double, 4> w{};
            double sum = 0.0;
            for (double& x : w) {
                x = std::exp(kTransitionLogSd * rng.normal());
                sum += x;
            }
            double acc = 0.0;
            for (int b = 0; b < 4; ++b) {
                acc += w[b] / sum;
                row[b] = acc;
            }
            row[3] = 1.0;
        }
        return c;
    }

    int draw(std::size_t context, Rng& rng) const {
        const double u = rng.unit();
        const auto& row = cumulative[context];
        for (int b = 0; b < 3; ++b) {
            if (u < row[b]) return b;
        }
        return 3;
    }
};

inline std::string sample_genome(std::size_t length, int order, Rng& rng) {
    const auto chain = MarkovChain::random(order, rng);
    std::string g(length, 'A');
    const std::size_t mask = (std::size_t{1} << (2 * order)) - 1;
    std::size_t context = 0;
    for (std::size_t i = 0; i < length; ++i) {
        int b;
        if (i < static_cast<std::size_t>(order)) {
            b = static_cast<int>(rng.below(4));
        } else {
            b = chain.draw(context, rng);
        }
        g[i] = kAlphabet[static_cast<std::size_t>(b)];
        context = ((context << 2) | static_cast<std::size_t>(b)) & mask;
    }
    return g;
}

inline void sample_reads(Dataset& out, const std::vector<std::string>& genomes,
                         int per_genome, std::size_t read_length, const char* id_infix, Rng& rng) {
    for (std::size_t g = 0; g < genomes.size(); ++g) {
        const std::string label = "g" + std::to_string(g);
        for (int j = 0; j < per_genome; ++j) {
            const std::size_t start = rng.below(genomes[g].size() - read_length + 1);
            Read r;
            r.id = label + id_infix + std::to_string(j);
            r.bases = genomes[g].substr(start, read_length);
            r.label = label;
            out.reads.push_back(std::move(r));
        }
    }
}

}  // namespace detail

inline SyntheticSplit generate_synthetic_split(const GeneratorSpec& spec, int calib_reads_per_genome) {
    if (spec.genome_count < 1 || spec.reads_per_genome < 1 || spec.genome_length == 0 ||
        spec.read_length == 0 || spec.markov_order < 0) {
        throw DataError("invalid generator spec");
    }
    if (spec.read_length > spec.genome_length) {
        throw DataError("read_length exceeds genome_length");
    }

    Rng master(spec.seed);
    std::vector<std::uint64_t> genome_seeds(static_cast<std::size_t>(spec.genome_count));
    for (auto& s : genome_seeds) s = master.fork_seed();
    const std::uint64_t eval_seed = master.fork_seed();
    const std::uint64_t calib_seed = master.fork_seed();

    std::vector<std::string> genomes;
    genomes.reserve(genome_seeds.size());
    for (const auto s : genome_seeds) {
        Rng g_rng(s);
        genomes.push_back(detail::sample_genome(spec.genome_length, spec.markov_order, g_rng));
    }

    SyntheticSplit split;
    Rng eval_rng(eval_seed);
    detail::sample_reads(split.eval, genomes, spec.reads_per_genome, spec.read_length, "_r", eval_rng);
    if (calib_reads_per_genome > 0) {
        Rng calib_rng(calib_seed);
        detail::sample_reads(split.calib, genomes, calib_reads_per_genome, spec.read_length, "_c", calib_rng);
    }
    return split;
}

inline Dataset generate_synthetic(const GeneratorSpec& spec) {
    return generate_synthetic_split(spec, 0).eval;
}

}  // namespace kbin
