#pragma once

#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>

#include "kbin/common.hpp"
#include "kbin/dataset.hpp"

namespace kbin {

namespace detail {

inline std::string header_token(std::string_view line, std::size_t line_no) {
    std::size_t begin = 1;  // skip the marker character
    while (begin < line.size() && std::isspace(static_cast<unsigned char>(line[begin]))) ++begin;
    std::size_t end = begin;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    if (begin == end) throw ParseError("empty sequence header", line_no);
    return std::string(line.substr(begin, end - begin));
}

inline void append_bases(std::string& bases, std::string_view line, std::size_t line_no) {
    for (char c : line) {
        if (c == '\r') continue;
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (up < 'A' || up > 'Z') {
            throw ParseError(std::string("invalid sequence symbol '") + c + "'", line_no);
        }
        bases.push_back(up);
    }
}

inline void check_unique_ids(const Dataset& d) { (void)d.id_index(); }

inline std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace detail

inline Dataset parse_fasta(std::istream& in) {
    Dataset d;
    std::string line;
    std::size_t line_no = 0;
    bool have_record = false;
    std::size_t record_line = 0;
    Read current;

    auto flush = [&] {
        if (!have_record) return;
        if (current.bases.empty()) throw ParseError("empty sequence record", record_line);
        d.reads.push_back(std::move(current));
        current = Read{};
    };

    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        if (line[0] == '>') {
            flush();
            have_record = true;
            record_line = line_no;
            current.id = detail::header_token(line, line_no);
        } else {
            if (!have_record) throw ParseError("sequence data before any '>' header", line_no);
            detail::append_bases(current.bases, line, line_no);
        }
    }
    if (in.bad()) throw DataError("I/O failure while reading FASTA stream");
    flush();
    detail::check_unique_ids(d);
    return d;
}

// FASTQ records are accepted and converted by discarding the quality lines.
inline Dataset parse_fastq(std::istream& in) {
    Dataset d;
    std::string header, seq, plus, qual;
    std::size_t line_no = 0;
    while (std::getline(in, header)) {
        ++line_no;
        header = detail::strip_cr(header);
        if (header.empty()) continue;
        if (header[0] != '@') throw ParseError("expected '@' FASTQ header", line_no);
        const std::size_t record_line = line_no;
        if (!std::getline(in, seq)) throw ParseError("truncated FASTQ record", record_line);
        ++line_no;
        if (!std::getline(in, plus)) throw ParseError("truncated FASTQ record", record_line);
        ++line_no;
        plus = detail::strip_cr(plus);
        if (plus.empty() || plus[0] != '+') throw ParseError("expected '+' separator", line_no);
        if (!std::getline(in, qual)) throw ParseError("truncated FASTQ record", record_line);
        ++line_no;

        Read r;
        r.id = detail::header_token(header, record_line);
        detail::append_bases(r.bases, detail::strip_cr(seq), record_line + 1);
        if (r.bases.empty()) throw ParseError("empty sequence record", record_line);
        d.reads.push_back(std::move(r));
    }
    if (in.bad()) throw DataError("I/O failure while reading FASTQ stream");
    detail::check_unique_ids(d);
    return d;
}

// Auto-detects FASTA vs FASTQ from the first non-blank character.
inline Dataset parse_sequences(std::istream& in) {
    int c;
    while ((c = in.peek()) != EOF && (c == '\n' || c == '\r')) in.get();
    if (c == '@') return parse_fastq(in);
    return parse_fasta(in);
}

inline void write_fasta(std::ostream& out, const Dataset& d, std::size_t width = 60) {
    for (const auto& r : d.reads) {
        out << '>' << r.id << '\n';
        for (std::size_t i = 0; i < r.bases.size(); i += width) {
            out << std::string_view(r.bases).substr(i, width) << '\n';
        }
    }
}

// Ground-truth labels, one `read_id<TAB>species_id` per line.
inline Dataset load_labels(std::istream& in, const Dataset& dataset) {
    Dataset out = dataset;
    const auto idx = out.id_index();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("expected read_id<TAB>species_id", line_no);
        const std::string id = line.substr(0, tab);
        const std::string label = line.substr(tab + 1);
        if (label.empty()) throw ParseError("empty species id", line_no);
        const auto it = idx.find(id);
        if (it == idx.end()) throw ParseError("unknown read id " + id, line_no);
        Read& r = out.reads[it->second];
        if (r.labeled() && r.label != label) throw ParseError("conflicting label for " + id, line_no);
        r.label = label;
    }
    if (in.bad()) throw DataError("I/O failure while reading labels stream");
    return out;
}

inline void write_labels(std::ostream& out, const Dataset& d) {
    for (const auto& r : d.reads) {
        if (r.labeled()) out << r.id << '\t' << r.label << '\n';
    }
}

}  // namespace kbin
