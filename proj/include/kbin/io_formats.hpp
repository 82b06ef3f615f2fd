#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "kbin/common.hpp"
#include "kbin/kmer.hpp"
#include "kbin/matrix.hpp"
#include "kbin/mlp.hpp"
#include "kbin/poisson.hpp"

namespace kbin {

// Binary matrix containers, all little-endian:
//   KBPF: "KBPF" u32 k, u32 rows, then u32 counts row-major (4^k per row)
//   KBEM: "KBEM" u32 k, u32 dim, then f32 values row-major; the row count is
//         implied (4^k rows for k-mer embeddings, file size otherwise)
//   KBNL: "KBNL" u32 k, u32 hidden, u32 out, then f32 blocks: w1, b1, w2,
//         b2, bn_gamma, bn_beta, bn_running_mean, bn_running_var

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes, 4);
}

inline std::uint32_t get_u32(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) throw DataError("unexpected end of binary stream");
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

inline void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

inline float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
    char buf[4];
    in.read(buf, 4);
    if (!in || std::memcmp(buf, magic, 4) != 0) {
        throw DataError(std::string("bad magic, expected ") + magic);
    }
}

}  // namespace detail

// --- KBPF: profile matrices ------------------------------------------------

inline void write_kbpf(std::ostream& out, int k, const std::vector<KmerProfile>& profiles) {
    out.write("KBPF", 4);
    detail::put_u32(out, static_cast<std::uint32_t>(k));
    detail::put_u32(out, static_cast<std::uint32_t>(profiles.size()));
    for (const auto& p : profiles) {
        if (p.k != k) throw std::invalid_argument("write_kbpf: mixed k");
        for (const auto c : p.counts) detail::put_u32(out, c);
    }
    if (!out) throw DataError("I/O failure while writing KBPF stream");
}

inline std::vector<KmerProfile> read_kbpf(std::istream& in, int& k) {
    detail::expect_magic(in, "KBPF");
    k = static_cast<int>(detail::get_u32(in));
    const std::size_t rows = detail::get_u32(in);
    const std::size_t dim = kmer_space_size(k);
    std::vector<KmerProfile> profiles(rows);
    for (auto& p : profiles) {
        p.k = k;
        p.counts.resize(dim);
        for (auto& c : p.counts) c = detail::get_u32(in);
        p.total = 0;
        for (const auto c : p.counts) p.total += c;
    }
    return profiles;
}

// Profile matrix as TSV: header of k-mer strings in lexicographic order, one
// row per read prefixed by its id.
inline void write_profile_tsv(std::ostream& out, int k, const std::vector<std::string>& ids,
                              const std::vector<KmerProfile>& profiles) {
    const std::size_t dim = kmer_space_size(k);
    out << "read_id";
    for (std::size_t x = 0; x < dim; ++x) out << '\t' << unrank(x, k);
    out << '\n';
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        out << ids[i];
        for (const auto c : profiles[i].counts) out << '\t' << c;
        out << '\n';
    }
}

// --- KBEM: embedding matrices ----------------------------------------------

inline void write_kbem(std::ostream& out, int k, const Matrix& m) {
    out.write("KBEM", 4);
    detail::put_u32(out, static_cast<std::uint32_t>(k));
    detail::put_u32(out, static_cast<std::uint32_t>(m.cols));
    for (const auto v : m.data) detail::put_f32(out, static_cast<float>(v));
    if (!out) throw DataError("I/O failure while writing KBEM stream");
}

inline Matrix read_kbem(std::istream& in, int& k) {
    detail::expect_magic(in, "KBEM");
    k = static_cast<int>(detail::get_u32(in));
    const std::size_t dim = detail::get_u32(in);
    if (dim == 0) throw DataError("KBEM: zero embedding dimension");
    std::vector<float> values;
    for (;;) {
        unsigned char bytes[4];
        in.read(reinterpret_cast<char*>(bytes), 4);
        if (in.gcount() == 0) break;
        if (in.gcount() != 4) throw DataError("KBEM: truncated value block");
        const std::uint32_t u = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
                                (static_cast<std::uint32_t>(bytes[2]) << 16) |
                                (static_cast<std::uint32_t>(bytes[3]) << 24);
        values.push_back(std::bit_cast<float>(u));
    }
    if (values.size() % dim != 0) throw DataError("KBEM: value block is not a whole number of rows");
    Matrix m(values.size() / dim, dim);
    for (std::size_t i = 0; i < values.size(); ++i) m.data[i] = static_cast<double>(values[i]);
    return m;
}

inline void save_kmer_embeddings(const std::string& path, const KmerEmbeddings& emb) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    write_kbem(out, emb.k, emb.z);
}

inline KmerEmbeddings load_kmer_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("file not found: " + path);
    KmerEmbeddings emb;
    emb.z = read_kbem(in, emb.k);
    emb.dim = static_cast<int>(emb.z.cols);
    if (emb.z.rows != kmer_space_size(emb.k)) {
        throw DataError(path + " is not a k-mer embedding matrix (row count != 4^k)");
    }
    return emb;
}

// Read-id sidecar for read-embedding matrices (the KBEM block itself has no
// id strings).
inline void write_ids(const std::string& path, const std::vector<std::string>& ids) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    for (const auto& id : ids) out << id << '\n';
}

inline std::vector<std::string> read_ids(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("file not found: " + path);
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) ids.push_back(line);
    }
    return ids;
}

// --- KBNL: network parameters ----------------------------------------------

inline void write_kbnl(std::ostream& out, const MlpParams& p) {
    out.write("KBNL", 4);
    detail::put_u32(out, static_cast<std::uint32_t>(p.k));
    detail::put_u32(out, static_cast<std::uint32_t>(p.hidden));
    detail::put_u32(out, static_cast<std::uint32_t>(p.output_dim));
    auto block = [&](const std::vector<double>& v) {
        for (const auto x : v) detail::put_f32(out, static_cast<float>(x));
    };
    block(p.w1.data);
    block(p.b1);
    block(p.w2.data);
    block(p.b2);
    block(p.bn_gamma);
    block(p.bn_beta);
    block(p.bn_running_mean);
    block(p.bn_running_var);
    if (!out) throw DataError("I/O failure while writing KBNL stream");
}

inline MlpParams read_kbnl(std::istream& in) {
    detail::expect_magic(in, "KBNL");
    MlpParams p;
    p.k = static_cast<int>(detail::get_u32(in));
    p.hidden = static_cast<int>(detail::get_u32(in));
    p.output_dim = static_cast<int>(detail::get_u32(in));
    p.input_dim = static_cast<int>(kmer_space_size(p.k));
    p.w1 = Matrix(static_cast<std::size_t>(p.hidden), static_cast<std::size_t>(p.input_dim));
    p.b1.resize(static_cast<std::size_t>(p.hidden));
    p.w2 = Matrix(static_cast<std::size_t>(p.output_dim), static_cast<std::size_t>(p.hidden));
    p.b2.resize(static_cast<std::size_t>(p.output_dim));
    p.bn_gamma.resize(static_cast<std::size_t>(p.hidden));
    p.bn_beta.resize(static_cast<std::size_t>(p.hidden));
    p.bn_running_mean.resize(static_cast<std::size_t>(p.hidden));
    p.bn_running_var.resize(static_cast<std::size_t>(p.hidden));
    auto block = [&](std::vector<double>& v) {
        for (auto& x : v) x = static_cast<double>(detail::get_f32(in));
    };
    block(p.w1.data);
    block(p.b1);
    block(p.w2.data);
    block(p.b2);
    block(p.bn_gamma);
    block(p.bn_beta);
    block(p.bn_running_mean);
    block(p.bn_running_var);
    return p;
}

inline void save_mlp(const std::string& path, const MlpParams& p) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    write_kbnl(out, p);
}

inline MlpParams load_mlp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("file not found: " + path);
    return read_kbnl(in);
}

}  // namespace kbin
