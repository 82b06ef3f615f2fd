#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <stdexcept>
#include <string_view>

#include "kbin/kmer.hpp"

namespace kbin {

inline void require_same_dimension(std::size_t a, std::size_t b, const char* op) {
    if (a != b) throw std::invalid_argument(std::string(op) + ": dimension mismatch");
}

inline std::uint64_t l1_distance(const KmerProfile& p, const KmerProfile& q) {
    if (p.k != q.k) throw std::invalid_argument("l1_distance: profiles have different k");
    require_same_dimension(p.counts.size(), q.counts.size(), "l1_distance");
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < p.counts.size(); ++i) {
        const std::int64_t d = static_cast<std::int64_t>(p.counts[i]) - static_cast<std::int64_t>(q.counts[i]);
        sum += static_cast<std::uint64_t>(d < 0 ? -d : d);
    }
    return sum;
}

inline double l1_distance(std::span<const double> u, std::span<const double> v) {
    require_same_dimension(u.size(), v.size(), "l1_distance");
    double sum = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) sum += std::abs(u[i] - v[i]);
    return sum;
}

inline double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    require_same_dimension(u.size(), v.size(), "cosine_similarity");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) throw std::invalid_argument("cosine_similarity: zero vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

inline double squared_euclidean(std::span<const double> u, std::span<const double> v) {
    require_same_dimension(u.size(), v.size(), "euclidean_distance");
    double sum = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - v[i];
        sum += d * d;
    }
    return sum;
}

inline double euclidean_distance(std::span<const double> u, std::span<const double> v) {
    return std::sqrt(squared_euclidean(u, v));
}

inline std::size_t hamming_distance(std::string_view r, std::string_view q) {
    if (r.size() != q.size()) throw std::invalid_argument("hamming_distance: length mismatch");
    std::size_t d = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        d += (r[i] != q[i]) ? 1 : 0;
    }
    return d;
}

inline double exp_l1_similarity(const KmerProfile& p, const KmerProfile& q) {
    return std::exp(-static_cast<double>(l1_distance(p, q)));
}

inline double exp_l1_similarity(std::span<const double> u, std::span<const double> v) {
    return std::exp(-l1_distance(u, v));
}

}  // namespace kbin
