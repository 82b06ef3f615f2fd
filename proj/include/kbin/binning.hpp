#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kbin/common.hpp"
#include "kbin/dataset.hpp"
#include "kbin/hungarian.hpp"
#include "kbin/kmer.hpp"
#include "kbin/matrix.hpp"
#include "kbin/metrics.hpp"
#include "kbin/mlp.hpp"
#include "kbin/parallel.hpp"
#include "kbin/poisson.hpp"

namespace kbin {

// Similarity used for calibration and clustering; higher always means more
// similar. neg_euclidean is -||a-b||, which preserves the order statistics
// of the Euclidean distance.
enum class Similarity { cosine, exp_l1, neg_euclidean };

inline Similarity parse_similarity(const std::string& name) {
    if (name == "cosine") return Similarity::cosine;
    if (name == "expl1" || name == "exp_l1") return Similarity::exp_l1;
    if (name == "negeuclid" || name == "neg_euclidean") return Similarity::neg_euclidean;
    throw DataError("unknown similarity '" + name + "' (expected cosine|expl1|negeuclid)");
}

inline const char* similarity_name(Similarity s) {
    switch (s) {
        case Similarity::cosine: return "cosine";
        case Similarity::exp_l1: return "expl1";
        default: return "negeuclid";
    }
}

// exp_l1 is evaluated in log space (-l1 instead of exp(-l1)): exp(-d)
// underflows to zero beyond d ~ 745 on kilobase-scale profiles, destroying
// the order statistics. The clustering and calibration depend only on the
// similarity order, which the log preserves exactly; thresholds for exp_l1
// are therefore on the -l1 scale.
inline double similarity_value(Similarity kind, std::span<const double> a, std::span<const double> b) {
    switch (kind) {
        case Similarity::cosine: return cosine_similarity(a, b);
        case Similarity::exp_l1: return -l1_distance(a, b);
        default: return -euclidean_distance(a, b);
    }
}

// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
inline double nearest_rank_percentile(std::vector<double> values, double percentile) {
    if (values.empty()) throw std::invalid_argument("nearest_rank_percentile: empty value list");
    std::sort(values.begin(), values.end());
    std::size_t nrank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(values.size())));
    nrank = std::clamp<std::size_t>(nrank, 1, values.size());
    return values[nrank - 1];
}

// Threshold calibration on a labeled split. Per ground-truth cluster, the
// centroid is the mean member embedding; the similarities of each centroid
// to its own members (intra) and to every other read (inter) are pooled.
//
// The threshold's job is to separate same-genome from different-genome
// similarity. When the calibration separates cleanly (every intra similarity
// above every inter similarity), the largest inter similarity is returned:
// the bottom edge of the separating gap, which keeps every same-cluster link
// and sits above every observed cross-cluster one. Member-to-medoid
// similarities run below member-to-centroid similarities by the medoid's own
// noise, so a threshold at the top of the gap would shed genuine members;
// the bottom edge does not. In the overlapping regime no separating value
// exists and the nearest-rank percentile of the intra similarities is
// returned instead. Both branches are order statistics, so any strictly
// increasing re-scaling of the similarity moves the threshold covariantly.
inline double calibrate_threshold(const Matrix& embeddings, const std::vector<std::string>& labels,
                                  Similarity kind, double percentile = 70.0) {
    if (embeddings.rows == 0) throw DataError("calibrate_threshold: empty calibration set");
    if (labels.size() != embeddings.rows) throw std::invalid_argument("calibrate_threshold: label count mismatch");
    std::map<std::string, std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].empty()) throw DataError("calibrate_threshold: calibration set must be fully labeled");
        clusters[labels[i]].push_back(i);
    }

    std::vector<double> intra, inter;
    intra.reserve(embeddings.rows);
    std::vector<char> in_cluster(embeddings.rows, 0);
    std::vector<double> centroid(embeddings.cols);
    for (const auto& [label, members] : clusters) {
        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (const auto m : members) {
            const double* row = embeddings.row(m);
            for (std::size_t c = 0; c < centroid.size(); ++c) centroid[c] += row[c];
        }
        const double inv = 1.0 / static_cast<double>(members.size());
        for (double& v : centroid) v *= inv;
        for (const auto m : members) in_cluster[m] = 1;
        for (std::size_t r = 0; r < embeddings.rows; ++r) {
            const double s = similarity_value(kind, centroid, embeddings.row_span(r));
            (in_cluster[r] ? intra : inter).push_back(s);
        }
        for (const auto m : members) in_cluster[m] = 0;
    }

    const double lowest_intra = *std::min_element(intra.begin(), intra.end());
    if (!inter.empty()) {
        const double highest_inter = *std::max_element(inter.begin(), inter.end());
        if (highest_inter < lowest_intra) return highest_inter;
    }
    return nearest_rank_percentile(std::move(intra), percentile);
}

struct ClusterAssignment {
    std::vector<int> cluster_of;  // row -> cluster index
    std::vector<int> medoid_of;   // cluster index -> row
    int cluster_count = 0;
};

// Threshold-driven K-medoid variant for an unknown number of clusters:
// repeatedly seed a cluster at the unassigned read with the most unassigned
// neighbors at similarity >= threshold, then refine the medoid and its
// within-threshold membership until stable. Ties break on the lowest row
// index; fully deterministic in the input order.
inline ClusterAssignment kmedoid_cluster_sim(const Matrix& sim, double threshold, int max_iter = 100) {
    const std::size_t n = sim.rows;
    if (n == 0) throw DataError("kmedoid_cluster: no embeddings");
    if (sim.cols != n) throw std::invalid_argument("kmedoid_cluster: similarity matrix must be square");

    // Medoid refinement compares total intra-cluster similarity in dense-rank
    // space. The whole procedure then depends only on the order statistics of
    // the similarities, so any strictly increasing re-scaling of the
    // similarity (with a matching threshold) yields the same clustering.
    std::vector<std::int64_t> rank_of(n * n, 0);
    {
        std::vector<std::size_t> order(n * n);
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return sim.data[a] < sim.data[b]; });
        std::int64_t rank = 0;
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (i > 0 && sim.data[order[i]] != sim.data[order[i - 1]]) ++rank;
            rank_of[order[i]] = rank;
        }
    }

    ClusterAssignment out;
    out.cluster_of.assign(n, -1);
    std::vector<char> unassigned(n, 1);
    std::vector<std::size_t> members, next_members;
    std::size_t remaining = n;

    int rounds = 0;
    while (remaining > 0 && rounds++ < max_iter + static_cast<int>(n)) {
        // Seed: densest unassigned read.
        std::size_t best = n;
        std::size_t best_count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!unassigned[i]) continue;
            std::size_t count = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (unassigned[j] && j != i && sim.at(i, j) >= threshold) ++count;
            }
            if (best == n || count > best_count) {
                best = i;
                best_count = count;
            }
        }
        std::size_t medoid = best;
        members.clear();
        members.push_back(medoid);
        for (std::size_t j = 0; j < n; ++j) {
            if (unassigned[j] && j != medoid && sim.at(medoid, j) >= threshold) members.push_back(j);
        }
        std::sort(members.begin(), members.end());

        for (int refine = 0; refine < 10; ++refine) {
            // Medoid = member with the greatest total intra-cluster similarity.
            std::size_t new_medoid = members.front();
            std::int64_t best_total = std::numeric_limits<std::int64_t>::min();
            for (const auto cand : members) {
                std::int64_t total = 0;
                for (const auto other : members) {
                    if (other != cand) total += rank_of[cand * n + other];
                }
                if (total > best_total) {
                    best_total = total;
                    new_medoid = cand;
                }
            }
            next_members.clear();
            next_members.push_back(new_medoid);
            for (std::size_t j = 0; j < n; ++j) {
                if (unassigned[j] && j != new_medoid && sim.at(new_medoid, j) >= threshold) next_members.push_back(j);
            }
            std::sort(next_members.begin(), next_members.end());
            const bool stable = (new_medoid == medoid && next_members == members);
            medoid = new_medoid;
            members.swap(next_members);
            if (stable) break;
        }

        const int cluster = out.cluster_count++;
        out.medoid_of.push_back(static_cast<int>(medoid));
        for (const auto m : members) {
            out.cluster_of[m] = cluster;
            unassigned[m] = 0;
        }
        remaining -= members.size();
    }
    return out;
}

inline ClusterAssignment kmedoid_cluster(const Matrix& embeddings, Similarity kind, double threshold,
                                         int max_iter = 100) {
    const std::size_t n = embeddings.rows;
    if (n == 0) throw DataError("kmedoid_cluster: no embeddings");
    for (double v : embeddings.data) {
        if (!std::isfinite(v)) throw NumericalError("kmedoid_cluster: non-finite embedding");
    }
    // Dense similarity matrix; rows are independent so the fill is parallel.
    Matrix sim(n, n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        sim.at(i, i) = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            sim.at(i, j) = similarity_value(kind, embeddings.row_span(i), embeddings.row_span(j));
        }
    });
    return kmedoid_cluster_sim(sim, threshold, max_iter);
}

// Maximum-overlap one-to-one alignment between clusters and ground-truth
// species. align[cluster] = species index or -1.
struct Alignment {
    std::vector<int> cluster_to_species;
    std::vector<int> species_to_cluster;
    std::int64_t total_overlap = 0;
};

inline Alignment hungarian_align(const std::vector<std::vector<std::int64_t>>& overlap) {
    const std::size_t n_clusters = overlap.size();
    const std::size_t n_species = n_clusters == 0 ? 0 : overlap[0].size();
    Alignment out;
    out.cluster_to_species.assign(n_clusters, -1);
    out.species_to_cluster.assign(n_species, -1);
    if (n_clusters == 0 || n_species == 0) return out;

    // Square padding with zero-weight dummies; costs are negated overlaps.
    const std::size_t dim = std::max(n_clusters, n_species);
    std::vector<std::vector<std::int64_t>> cost(dim, std::vector<std::int64_t>(dim, 0));
    for (std::size_t c = 0; c < n_clusters; ++c) {
        for (std::size_t s = 0; s < n_species; ++s) cost[c][s] = -overlap[c][s];
    }
    const auto row_to_col = min_cost_assignment(cost);
    for (std::size_t c = 0; c < n_clusters; ++c) {
        const int s = row_to_col[c];
        if (s < 0 || s >= static_cast<int>(n_species)) continue;  // dummy column
        out.cluster_to_species[c] = s;
        out.species_to_cluster[static_cast<std::size_t>(s)] = static_cast<int>(c);
        out.total_overlap += overlap[c][static_cast<std::size_t>(s)];
    }
    return out;
}

struct SpeciesScore {
    std::string species;
    int cluster = -1;  // -1 when no cluster was aligned to this species
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Five F1 quality levels: (0.9, 1], (0.8, 0.9], (0.7, 0.8], (0.6, 0.7],
// (0.5, 0.6]. Scores at or below 0.5 fall outside every bucket.
struct BinningReport {
    std::vector<SpeciesScore> per_species;
    std::array<int, 5> histogram = {0, 0, 0, 0, 0};
    int detected_high_quality = 0;
    int cluster_count = 0;
    int species_count = 0;
    double threshold = 0.0;
    std::string similarity;
    std::string model;
};

inline std::vector<std::vector<std::int64_t>> contingency(const std::vector<int>& cluster_of,
                                                          const std::vector<int>& species_of, int n_clusters,
                                                          int n_species) {
    std::vector<std::vector<std::int64_t>> overlap(static_cast<std::size_t>(n_clusters),
                                                   std::vector<std::int64_t>(static_cast<std::size_t>(n_species), 0));
    for (std::size_t i = 0; i < cluster_of.size(); ++i) {
        ++overlap[static_cast<std::size_t>(cluster_of[i])][static_cast<std::size_t>(species_of[i])];
    }
    return overlap;
}

inline BinningReport score(const std::vector<int>& cluster_of, const std::vector<int>& species_of,
                           const std::vector<std::string>& species_names, int n_clusters, const Alignment& align) {
    const int n_species = static_cast<int>(species_names.size());
    const auto overlap = contingency(cluster_of, species_of, n_clusters, n_species);

    std::vector<std::int64_t> cluster_size(static_cast<std::size_t>(n_clusters), 0);
    std::vector<std::int64_t> species_size(static_cast<std::size_t>(n_species), 0);
    for (std::size_t i = 0; i < cluster_of.size(); ++i) {
        ++cluster_size[static_cast<std::size_t>(cluster_of[i])];
        ++species_size[static_cast<std::size_t>(species_of[i])];
    }

    BinningReport report;
    report.cluster_count = n_clusters;
    report.species_count = n_species;
    for (int s = 0; s < n_species; ++s) {
        SpeciesScore row;
        row.species = species_names[static_cast<std::size_t>(s)];
        row.cluster = align.species_to_cluster[static_cast<std::size_t>(s)];
        if (row.cluster >= 0) {
            const auto ov = overlap[static_cast<std::size_t>(row.cluster)][static_cast<std::size_t>(s)];
            const auto csz = cluster_size[static_cast<std::size_t>(row.cluster)];
            row.precision = csz > 0 ? static_cast<double>(ov) / static_cast<double>(csz) : 0.0;
            row.recall = species_size[static_cast<std::size_t>(s)] > 0
                             ? static_cast<double>(ov) / static_cast<double>(species_size[static_cast<std::size_t>(s)])
                             : 0.0;
            row.f1 = (row.precision + row.recall) > 0.0
                         ? 2.0 * row.precision * row.recall / (row.precision + row.recall)
                         : 0.0;
        }
        if (row.f1 > 0.9) {
            ++report.histogram[0];
            ++report.detected_high_quality;
        } else if (row.f1 > 0.8) {
            ++report.histogram[1];
        } else if (row.f1 > 0.7) {
            ++report.histogram[2];
        } else if (row.f1 > 0.6) {
            ++report.histogram[3];
        } else if (row.f1 > 0.5) {
            ++report.histogram[4];
        }
        report.per_species.push_back(std::move(row));
    }
    return report;
}

// ---------------------------------------------------------------------------
// End-to-end pipeline
// ---------------------------------------------------------------------------

enum class ModelKind { kmer_cosine, kmer_l1, pois, nl };

inline ModelKind parse_model(const std::string& name) {
    if (name == "kmer-cosine") return ModelKind::kmer_cosine;
    if (name == "kmer-l1") return ModelKind::kmer_l1;
    if (name == "pois") return ModelKind::pois;
    if (name == "nl") return ModelKind::nl;
    throw DataError("unknown model '" + name + "' (expected kmer-cosine|kmer-l1|pois|nl)");
}

inline const char* model_name(ModelKind m) {
    switch (m) {
        case ModelKind::kmer_cosine: return "kmer-cosine";
        case ModelKind::kmer_l1: return "kmer-l1";
        case ModelKind::pois: return "pois";
        default: return "nl";
    }
}

inline Similarity paired_similarity(ModelKind m) {
    switch (m) {
        case ModelKind::kmer_cosine: return Similarity::cosine;
        case ModelKind::kmer_l1: return Similarity::exp_l1;
        default: return Similarity::neg_euclidean;
    }
}

struct ModelArtifacts {
    const KmerEmbeddings* pois = nullptr;
    const MlpParams* nl = nullptr;
    bool nl_raw_counts = false;
};

// Embeds every read of the dataset with the chosen model: raw count profiles
// for the k-mer baselines, learned vectors otherwise.
inline Matrix embed_dataset(const Dataset& d, ModelKind model, const ModelArtifacts& artifacts, int k) {
    const KmerConfig cfg{.k = k, .canonical_fold = false};
    Matrix out;
    switch (model) {
        case ModelKind::kmer_cosine:
        case ModelKind::kmer_l1: {
            out = Matrix(d.reads.size(), kmer_space_size(k));
            parallel_for(d.reads.size(), [&](std::size_t i) {
                const auto p = profile(d.reads[i].bases, cfg);
                double* row = out.row(i);
                for (std::size_t c = 0; c < p.counts.size(); ++c) row[c] = static_cast<double>(p.counts[c]);
            });
            return out;
        }
        case ModelKind::pois: {
            if (artifacts.pois == nullptr) throw DataError("pois model requires trained k-mer embeddings");
            out = Matrix(d.reads.size(), static_cast<std::size_t>(artifacts.pois->dim));
            parallel_for(d.reads.size(), [&](std::size_t i) {
                const auto e = embed_read_pois(d.reads[i], *artifacts.pois);
                std::copy(e.begin(), e.end(), out.row(i));
            });
            return out;
        }
        case ModelKind::nl: {
            if (artifacts.nl == nullptr) throw DataError("nl model requires trained network parameters");
            out = Matrix(d.reads.size(), static_cast<std::size_t>(artifacts.nl->output_dim));
            parallel_for(d.reads.size(), [&](std::size_t i) {
                const auto e = embed_read_nl(d.reads[i], *artifacts.nl, artifacts.nl_raw_counts);
                std::copy(e.begin(), e.end(), out.row(i));
            });
            return out;
        }
    }
    throw std::logic_error("unreachable");
}

inline std::vector<std::string> dataset_labels(const Dataset& d) {
    std::vector<std::string> labels;
    labels.reserve(d.reads.size());
    for (const auto& r : d.reads) labels.push_back(r.label);
    return labels;
}

// Scores a clustering against ground-truth labels: Hungarian alignment on
// the contingency overlaps, then per-species precision/recall/F1.
inline BinningReport score_clustering(const ClusterAssignment& clusters, const std::vector<std::string>& truth) {
    std::vector<std::string> species_names;
    std::map<std::string, int> species_index;
    std::vector<int> species_of(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i].empty()) throw DataError("ground truth required for scoring");
        auto [it, inserted] = species_index.emplace(truth[i], static_cast<int>(species_names.size()));
        if (inserted) species_names.push_back(truth[i]);
        species_of[i] = it->second;
    }
    const auto overlap =
        contingency(clusters.cluster_of, species_of, clusters.cluster_count, static_cast<int>(species_names.size()));
    const auto align = hungarian_align(overlap);
    auto report = score(clusters.cluster_of, species_of, species_names, clusters.cluster_count, align);
    return report;
}

inline BinningReport end_to_end_bin(const Dataset& eval, ModelKind model, const ModelArtifacts& artifacts,
                                    const Dataset& calib, int k, double percentile = 70.0, int max_iter = 100) {
    if (!calib.fully_labeled()) throw DataError("calibration set must be labeled");
    if (!eval.fully_labeled()) throw DataError("ground truth required for scoring");
    const Similarity sim = paired_similarity(model);
    const Matrix calib_emb = embed_dataset(calib, model, artifacts, k);
    const double threshold = calibrate_threshold(calib_emb, dataset_labels(calib), sim, percentile);
    const Matrix eval_emb = embed_dataset(eval, model, artifacts, k);
    const auto clusters = kmedoid_cluster(eval_emb, sim, threshold, max_iter);
    auto report = score_clustering(clusters, dataset_labels(eval));
    report.threshold = threshold;
    report.similarity = similarity_name(sim);
    report.model = model_name(model);
    return report;
}

}  // namespace kbin
