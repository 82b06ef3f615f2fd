#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kbin {

inline constexpr int kMaxK = 15;
inline constexpr std::array<char, 4> kAlphabet = {'A', 'C', 'G', 'T'};

// A=0 < C=1 < G=2 < T=3, so numeric order on codes equals lexicographic
// order on k-mer strings.
inline int base_code(char c) {
    switch (c) {
        case 'A': return 0;
        case 'C': return 1;
        case 'G': return 2;
        case 'T': return 3;
        default: return -1;
    }
}

inline bool is_acgt(char c) { return base_code(c) >= 0; }

inline char complement_base(char c) {
    switch (c) {
        case 'A': return 'T';
        case 'C': return 'G';
        case 'G': return 'C';
        case 'T': return 'A';
        default: throw std::invalid_argument(std::string("complement of non-ACGT symbol '") + c + "'");
    }
}

inline std::string reverse_complement(std::string_view bases) {
    std::string out(bases.size(), '\0');
    for (std::size_t i = 0; i < bases.size(); ++i) {
        out[bases.size() - 1 - i] = complement_base(bases[i]);
    }
    return out;
}

inline std::size_t kmer_space_size(int k) {
    if (k < 1 || k > kMaxK) throw std::invalid_argument("k must be in [1, 15]");
    return std::size_t{1} << (2 * k);
}

// Lexicographic rank of a k-mer: positional base-4 value.
inline std::size_t rank(std::string_view kmer) {
    if (kmer.empty() || kmer.size() > static_cast<std::size_t>(kMaxK)) {
        throw std::invalid_argument("rank: k-mer length must be in [1, 15]");
    }
    std::size_t value = 0;
    for (char c : kmer) {
        const int d = base_code(c);
        if (d < 0) throw std::invalid_argument(std::string("rank: symbol '") + c + "' outside {A,C,G,T}");
        value = (value << 2) | static_cast<std::size_t>(d);
    }
    return value;
}

inline std::string unrank(std::size_t value, int k) {
    if (value >= kmer_space_size(k)) throw std::invalid_argument("unrank: value out of range");
    std::string out(static_cast<std::size_t>(k), 'A');
    for (int i = k - 1; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kAlphabet[value & 3];
        value >>= 2;
    }
    return out;
}

// Rank of the reverse complement, computed directly from a rank.
inline std::size_t reverse_complement_rank(std::size_t value, int k) {
    std::size_t out = 0;
    for (int i = 0; i < k; ++i) {
        out = (out << 2) | (3 - (value & 3));
        value >>= 2;
    }
    return out;
}

struct KmerConfig {
    int k = 4;
    bool canonical_fold = false;  // fold each k-mer with its reverse complement

    std::size_t dimension() const { return kmer_space_size(k); }
};

// Occurrence counts of every k-mer of a read, indexed by lexicographic rank.
// For an ambiguity-free read, total == length - k + 1; windows containing a
// non-ACGT symbol are skipped and reduce total.
struct KmerProfile {
    int k = 0;
    std::vector<std::uint32_t> counts;
    std::uint64_t total = 0;
    std::size_t source_length = 0;
};

inline KmerProfile profile(std::string_view bases, const KmerConfig& cfg) {
    const int k = cfg.k;
    const std::size_t dim = cfg.dimension();
    if (bases.size() < static_cast<std::size_t>(k)) {
        throw std::invalid_argument("profile: read shorter than k");
    }
    KmerProfile p;
    p.k = k;
    p.counts.assign(dim, 0);
    p.source_length = bases.size();

    const std::size_t mask = dim - 1;
    const int rc_shift = 2 * (k - 1);
    std::size_t fwd = 0;
    std::size_t rc = 0;
    int valid = 0;  // length of the current run of ACGT symbols
    for (std::size_t i = 0; i < bases.size(); ++i) {
        const int d = base_code(bases[i]);
        if (d < 0) {
            valid = 0;
            fwd = 0;
            rc = 0;
            continue;
        }
        fwd = ((fwd << 2) | static_cast<std::size_t>(d)) & mask;
        rc = (rc >> 2) | (static_cast<std::size_t>(3 - d) << rc_shift);
        if (++valid >= k) {
            const std::size_t idx = cfg.canonical_fold ? std::min(fwd, rc) : fwd;
            ++p.counts[idx];
            ++p.total;
        }
    }
    return p;
}

}  // namespace kbin
