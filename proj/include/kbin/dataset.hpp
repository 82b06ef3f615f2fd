#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "kbin/common.hpp"

namespace kbin {

// A sequencing read. label is the ground-truth genome/species id; empty
// means unlabeled. Bases are stored uppercase; symbols outside {A,C,G,T}
// (ambiguity codes such as N) are retained and skipped at k-mer extraction.
struct Read {
    std::string id;
    std::string bases;
    std::string label;

    std::size_t length() const { return bases.size(); }
    bool labeled() const { return !label.empty(); }
};

struct Dataset {
    std::vector<Read> reads;

    std::size_t size() const { return reads.size(); }

    // Number of distinct non-empty labels present.
    std::size_t species_count() const {
        std::set<std::string> labels;
        for (const auto& r : reads) {
            if (r.labeled()) labels.insert(r.label);
        }
        return labels.size();
    }

    bool fully_labeled() const {
        return !reads.empty() && std::all_of(reads.begin(), reads.end(),
                                             [](const Read& r) { return r.labeled(); });
    }

    std::unordered_map<std::string, std::size_t> id_index() const {
        std::unordered_map<std::string, std::size_t> idx;
        idx.reserve(reads.size());
        for (std::size_t i = 0; i < reads.size(); ++i) {
            auto [it, inserted] = idx.emplace(reads[i].id, i);
            if (!inserted) throw DataError("duplicate read id " + reads[i].id);
        }
        return idx;
    }
};

// Dataset preparation rules: truncate long reads, drop short ones, then drop
// species left with too few reads. Idempotent.
inline Dataset filter_dataset(const Dataset& d,
                              std::size_t max_len = 10000,
                              std::size_t min_len = 2500,
                              std::size_t min_per_species = 10) {
    Dataset out;
    out.reads.reserve(d.reads.size());
    for (const auto& r : d.reads) {
        if (r.length() < min_len) continue;
        Read kept = r;
        if (kept.length() > max_len) kept.bases.resize(max_len);
        out.reads.push_back(std::move(kept));
    }
    if (min_per_species > 1) {
        std::unordered_map<std::string, std::size_t> per_species;
        for (const auto& r : out.reads) {
            if (!r.labeled()) throw DataError("species filtering requires a fully labeled dataset");
            ++per_species[r.label];
        }
        std::erase_if(out.reads, [&](const Read& r) { return per_species[r.label] < min_per_species; });
    }
    return out;
}

}  // namespace kbin
