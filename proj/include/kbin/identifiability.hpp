#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kbin/common.hpp"
#include "kbin/dataset.hpp"
#include "kbin/kmer.hpp"
#include "kbin/metrics.hpp"
#include "kbin/rng.hpp"

namespace kbin {

// Outcome of the uniqueness test for a single read. A read is identifiable
// when no other read of the same length shares its k-mer profile. When it is
// not, `counterexample` holds a distinct read with an identical profile,
// built from the reported witness positions (0-based):
//   condition 1: {s}          rotation offset of the circular spelling
//   condition 2: {i, g, j, h} two interleaved repeated (k-1)-mer pairs
//   condition 3: {i, j, h}    a (k-1)-mer occurring at three positions
struct IdentifiabilityVerdict {
    bool identifiable = true;
    int violated_condition = 0;  // 0 when identifiable, else 1..3
    std::vector<std::size_t> witness_indices;
    std::string counterexample;
};

namespace detail {

// The de Bruijn walk view is used throughout: node p is the (k-1)-mer at
// position p (p in [0, len-k+1]), edge p is the k-mer window at p, and the
// char spelled by edge p is read[p+k-1]. Every read with the same profile is
// a re-spelling of the same edge multiset, reachable through rotations of a
// closed walk and exchanges of equal-endpoint sub-walks. A candidate witness
// counts only if its re-spelling differs from the read; the re-spelling
// always preserves the profile by construction.

// Rotation: requires first (k-1)-mer == last (k-1)-mer, which makes the read
// periodic with period circ = len-k+1. Spells the walk starting s edges in.
inline void spell_rotation(std::string_view r, int k, std::size_t s, std::string& out) {
    const std::size_t circ = r.size() - static_cast<std::size_t>(k) + 1;
    out.resize(r.size());
    for (std::size_t t = 0; t < r.size(); ++t) {
        out[t] = r[(t + s) % circ];
    }
}

// Exchange of sub-walks [i,g) and [j,h) (edge index ranges). Valid for
// node(i)==node(j), node(g)==node(h), i < g <= j < h. Working on edge ranges
// keeps the surgery well-defined even when the occurrences overlap.
inline void spell_exchange(std::string_view r, int k, std::size_t i, std::size_t g, std::size_t j,
                           std::size_t h, std::string& out) {
    const std::size_t off = static_cast<std::size_t>(k) - 1;
    out.clear();
    out.reserve(r.size());
    out.append(r.substr(0, i + off));                 // nodes up to node i
    out.append(r.substr(j + off, h - j));             // edge chars of [j,h)
    out.append(r.substr(g + off, j - g));             // edge chars of [g,j)
    out.append(r.substr(i + off, g - i));             // edge chars of [i,g)
    out.append(r.substr(h + off));                    // edge chars of [h,...)
}

struct WitnessScratch {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> occurrences;  // (code, position)
    std::vector<std::pair<std::uint32_t, std::uint32_t>> repeat_pairs; // (p, q), p < q, same code
    std::string candidate;
};

inline WitnessScratch& witness_scratch() {
    thread_local WitnessScratch scratch;
    return scratch;
}

}  // namespace detail

// Condition-based uniqueness check. Tries the three violation conditions in
// order and accepts the first witness whose materialized counterexample is
// distinct from the read. Literal segment-inequality readings of conditions
// 2 and 3 over-fire on degenerate periodic reads, so distinctness of the
// constructed read is the arbiter; this matches the exhaustive preimage
// oracle on every tested family.
inline IdentifiabilityVerdict check_conditions(std::string_view read, int k) {
    const std::size_t len = read.size();
    if (k < 1) throw std::invalid_argument("check_conditions: k must be positive");
    if (len < static_cast<std::size_t>(k)) throw std::invalid_argument("check_conditions: read shorter than k");
    for (char c : read) {
        if (!is_acgt(c)) throw std::invalid_argument("check_conditions: read contains non-ACGT symbol");
    }

    auto& scratch = detail::witness_scratch();
    std::string& q = scratch.candidate;
    IdentifiabilityVerdict verdict;

    // Condition 1: closed walk, some rotation spells a different read.
    const std::size_t km1 = static_cast<std::size_t>(k) - 1;
    const std::size_t circ = len - km1;
    if (read.substr(0, km1) == read.substr(circ, km1)) {
        for (std::size_t s = 1; s < circ; ++s) {
            bool differs = false;
            for (std::size_t t = 0; t < len; ++t) {
                if (read[(t + s) % circ] != read[t]) {
                    differs = true;
                    break;
                }
            }
            if (differs) {
                detail::spell_rotation(read, k, s, q);
                verdict.identifiable = false;
                verdict.violated_condition = 1;
                verdict.witness_indices = {s};
                verdict.counterexample = q;
                return verdict;
            }
        }
    }
    if (k == 1) return verdict;  // rotations are complete for k = 1

    // Gather repeated (k-1)-mer occurrences: (code, position) sorted by code.
    const std::size_t n_nodes = len - km1 + 1;
    auto& occ = scratch.occurrences;
    occ.clear();
    {
        std::uint32_t code = 0;
        const std::uint32_t mask = static_cast<std::uint32_t>((std::size_t{1} << (2 * km1)) - 1);
        for (std::size_t p = 0; p < len; ++p) {
            code = ((code << 2) | static_cast<std::uint32_t>(base_code(read[p]))) & mask;
            if (p + 1 >= km1) {
                const std::size_t pos = p + 1 - km1;
                if (pos < n_nodes) occ.emplace_back(code, static_cast<std::uint32_t>(pos));
            }
        }
    }
    std::sort(occ.begin(), occ.end());

    auto& pairs = scratch.repeat_pairs;
    pairs.clear();
    for (std::size_t a = 0; a < occ.size();) {
        std::size_t b = a;
        while (b < occ.size() && occ[b].first == occ[a].first) ++b;
        for (std::size_t x = a; x < b; ++x) {
            for (std::size_t y = x + 1; y < b; ++y) {
                pairs.emplace_back(occ[x].second, occ[y].second);
            }
        }
        a = b;
    }

    // Condition 2: interleaved repeats i < g < j < h with node(i)==node(j)
    // and node(g)==node(h); exchange the two equal-endpoint sub-walks.
    for (const auto& [i, j] : pairs) {
        for (const auto& [g, h] : pairs) {
            if (!(i < g && g < j && j < h)) continue;
            const auto sv = std::string_view(read);
            if (sv.substr(i + km1, g - i) == sv.substr(j + km1, h - j)) continue;
            detail::spell_exchange(read, k, i, g, j, h, q);
            if (q != read) {
                verdict.identifiable = false;
                verdict.violated_condition = 2;
                verdict.witness_indices = {i, g, j, h};
                verdict.counterexample = q;
                return verdict;
            }
        }
    }

    // Condition 3: one (k-1)-mer at i < j < h; exchange [i,j) with [j,h).
    for (std::size_t a = 0; a < occ.size();) {
        std::size_t b = a;
        while (b < occ.size() && occ[b].first == occ[a].first) ++b;
        for (std::size_t x = a; x < b; ++x) {
            for (std::size_t y = x + 1; y < b; ++y) {
                for (std::size_t z = y + 1; z < b; ++z) {
                    const std::size_t i = occ[x].second, j = occ[y].second, h = occ[z].second;
                    const auto sv = std::string_view(read);
                    if (sv.substr(i + km1, j - i) == sv.substr(j + km1, h - j)) continue;
                    detail::spell_exchange(read, k, i, j, j, h, q);
                    if (q != read) {
                        verdict.identifiable = false;
                        verdict.violated_condition = 3;
                        verdict.witness_indices = {i, j, h};
                        verdict.counterexample = q;
                        return verdict;
                    }
                }
            }
        }
        a = b;
    }
    return verdict;
}

// ---------------------------------------------------------------------------
// Exhaustive preimage oracle
// ---------------------------------------------------------------------------

struct OracleOptions {
    std::size_t max_results = 0;   // 0 = unbounded
    bool allow_large = false;      // override the enumeration guard
};

namespace detail {

template <typename Visit>
void preimage_dfs(const KmerProfile& p, std::size_t length, int k, Visit&& visit) {
    const std::size_t windows = length - static_cast<std::size_t>(k) + 1;
    std::vector<std::uint32_t> remaining = p.counts;
    const std::size_t dim = remaining.size();
    const std::size_t suffix_mask = (dim >> 2) - 1;  // low 2(k-1) bits of a rank

    std::string current;
    current.reserve(length);

    // Extends current (which already spells `used` windows) one char at a
    // time in A<C<G<T order; abandons any prefix that overdraws a count.
    auto extend = [&](auto&& self, std::size_t last_rank, std::size_t used) -> bool {
        if (used == windows) {
            return visit(current);
        }
        const std::size_t base = (last_rank & suffix_mask) << 2;
        for (std::size_t c = 0; c < 4; ++c) {
            const std::size_t next = base | c;
            if (remaining[next] == 0) continue;
            --remaining[next];
            current.push_back(kAlphabet[c]);
            const bool stop = self(self, next, used + 1);
            current.pop_back();
            ++remaining[next];
            if (stop) return true;
        }
        return false;
    };

    for (std::size_t first = 0; first < dim; ++first) {
        if (remaining[first] == 0) continue;
        --remaining[first];
        current = unrank(first, k);
        if (extend(extend, first, 1)) {
            ++remaining[first];
            return;
        }
        ++remaining[first];
    }
}

inline void oracle_guard(const KmerProfile& p, std::size_t length, int k, const OracleOptions& opts) {
    if (opts.allow_large) return;
    // Count the distinct symbols that can appear in any preimage; the guard
    // bounds sigma^length, the worst-case enumeration space.
    bool present[4] = {false, false, false, false};
    for (std::size_t r = 0; r < p.counts.size(); ++r) {
        if (p.counts[r] == 0) continue;
        std::size_t v = r;
        for (int i = 0; i < k; ++i) {
            present[v & 3] = true;
            v >>= 2;
        }
    }
    int sigma = 0;
    for (bool b : present) sigma += b ? 1 : 0;
    const double budget = 14.0 * std::log(4.0);
    if (sigma > 1 && static_cast<double>(length) * std::log(static_cast<double>(sigma)) > budget) {
        throw DataError("oracle_preimages: enumeration over " + std::to_string(sigma) + "^" +
                        std::to_string(length) + " exceeds the guard; pass allow_large to override");
    }
}

}  // namespace detail

// All reads of the given length whose profile equals p, found by pruned
// depth-first enumeration in lexicographic order. Ground truth for
// check_conditions; deliberately independent of it.
inline std::set<std::string> oracle_preimages(const KmerProfile& p, std::size_t length,
                                              const OracleOptions& opts = {}) {
    const int k = p.k;
    if (length < static_cast<std::size_t>(k)) throw std::invalid_argument("oracle_preimages: length < k");
    detail::oracle_guard(p, length, k, opts);
    std::set<std::string> found;
    if (p.total != length - static_cast<std::size_t>(k) + 1) return found;  // no gap-free read fits
    detail::preimage_dfs(p, length, k, [&](const std::string& s) {
        found.insert(s);
        return opts.max_results != 0 && found.size() >= opts.max_results;
    });
    return found;
}

// Number of preimages, stopping early once `cap` have been seen (cap = 2
// suffices for uniqueness tests).
inline std::size_t count_preimages(const KmerProfile& p, std::size_t length, std::size_t cap,
                                   const OracleOptions& opts = {}) {
    const int k = p.k;
    if (length < static_cast<std::size_t>(k)) throw std::invalid_argument("count_preimages: length < k");
    detail::oracle_guard(p, length, k, opts);
    if (p.total != length - static_cast<std::size_t>(k) + 1) return 0;
    std::size_t n = 0;
    detail::preimage_dfs(p, length, k, [&](const std::string&) {
        ++n;
        return cap != 0 && n >= cap;
    });
    return n;
}

// ---------------------------------------------------------------------------
// Metric-equivalence verification
// ---------------------------------------------------------------------------

// Empirical check of the two-sided bound between Hamming distance on reads
// and l1 distance on their profiles:
//   (1/len) * dH(r, q) <= ||c_r - c_q||_1 <= k * 4^k * dH(r, q).
// The bound is stated on the metric space of identifiable reads. A sampled
// pair of distinct reads with equal profiles certifies that both reads are
// non-identifiable (each is the other's same-profile witness), so such pairs
// lie outside the bound's domain and are tallied separately.
struct LipschitzCheck {
    double alpha_l = 0.0;           // 1 / len of the sampled pairs
    double alpha_u = 0.0;           // k * 4^k
    std::uint64_t pairs_checked = 0;
    std::uint64_t violations = 0;
    std::uint64_t non_identifiable_pairs = 0;
};

namespace detail {

// Exact integer form of both inequalities (alpha_l = 1/len, alpha_u = k*4^k).
inline bool lipschitz_holds(std::uint64_t l1, std::size_t hamming, std::size_t len, int k) {
    const auto dh = static_cast<std::uint64_t>(hamming);
    if (l1 * len < dh) return false;
    const std::uint64_t upper = static_cast<std::uint64_t>(k) * (std::uint64_t{1} << (2 * k));
    return l1 <= upper * dh || dh == 0;
}

inline std::string mutate(std::string_view r, std::size_t substitutions, Rng& rng) {
    std::string q(r);
    for (std::size_t s = 0; s < substitutions; ++s) {
        const std::size_t pos = rng.below(q.size());
        char c;
        do {
            c = kAlphabet[rng.below(4)];
        } while (c == q[pos]);
        q[pos] = c;
    }
    return q;
}

}  // namespace detail

inline LipschitzCheck verify_lipschitz(const Dataset& d, int k, int trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("verify_lipschitz: trials must be >= 1");
    // Group reads by length; pairs are only defined on equal lengths.
    std::unordered_map<std::size_t, std::vector<std::size_t>> by_len;
    for (std::size_t i = 0; i < d.reads.size(); ++i) {
        const auto& r = d.reads[i];
        if (r.length() >= static_cast<std::size_t>(k)) by_len[r.length()].push_back(i);
    }
    std::vector<std::size_t> pairable;
    for (const auto& [len, idx] : by_len) {
        if (idx.size() >= 2) pairable.push_back(len);
    }
    if (pairable.empty()) throw DataError("verify_lipschitz: no equal-length read pair available");
    std::sort(pairable.begin(), pairable.end());

    Rng rng(seed);
    const KmerConfig cfg{.k = k, .canonical_fold = false};
    LipschitzCheck out;
    out.alpha_u = static_cast<double>(k) * static_cast<double>(std::size_t{1} << (2 * k));

    auto check = [&](std::string_view a, std::string_view b) {
        const auto pa = profile(a, cfg);
        const auto pb = profile(b, cfg);
        const auto l1 = l1_distance(pa, pb);
        const auto dh = hamming_distance(a, b);
        ++out.pairs_checked;
        if (l1 == 0 && dh > 0) {
            ++out.non_identifiable_pairs;
            return;
        }
        if (!detail::lipschitz_holds(l1, dh, a.size(), k)) ++out.violations;
    };

    for (int t = 0; t < trials; ++t) {
        const std::size_t len = pairable[rng.below(pairable.size())];
        const auto& group = by_len[len];
        out.alpha_l = 1.0 / static_cast<double>(len);

        // Random distinct pair of existing reads.
        const std::size_t a = rng.below(group.size());
        std::size_t b = rng.below(group.size() - 1);
        if (b >= a) ++b;
        check(d.reads[group[a]].bases, d.reads[group[b]].bases);

        // Mutation pair: a read against a copy with m substitutions.
        const auto& base = d.reads[group[rng.below(group.size())]].bases;
        const std::size_t m = 1 + rng.below(std::max<std::size_t>(1, base.size() / 10));
        check(base, detail::mutate(base, m, rng));
    }
    return out;
}

// Fraction of reads whose profile determines them uniquely.
inline double identifiability_rate(const Dataset& d, int k) {
    if (d.reads.empty()) return 0.0;
    std::size_t identifiable = 0;
    for (const auto& r : d.reads) {
        if (check_conditions(r.bases, k).identifiable) ++identifiable;
    }
    return static_cast<double>(identifiable) / static_cast<double>(d.reads.size());
}

}  // namespace kbin
