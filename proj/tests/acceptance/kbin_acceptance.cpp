// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. argv[1] must be the path to the kbin binary (used by the
// determinism criterion); argv[2] optionally overrides the scratch dir.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kbin/binning.hpp"
#include "kbin/dataset.hpp"
#include "kbin/identifiability.hpp"
#include "kbin/kmer.hpp"
#include "kbin/metrics.hpp"
#include "kbin/mlp.hpp"
#include "kbin/poisson.hpp"
#include "kbin/rng.hpp"
#include "kbin/synthetic.hpp"

namespace {

namespace fs = std::filesystem;

struct Outcome {
    bool pass = true;
    std::string detail;
};

int g_failures = 0;

template <typename Fn>
void criterion(int id, const std::string& name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
        outcome = fn();
    } catch (const std::exception& e) {
        outcome.pass = false;
        outcome.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!outcome.pass) ++g_failures;
    std::printf("[%s] criterion %d: %s (%s; %.1fs)\n", outcome.pass ? "PASS" : "FAIL", id, name.c_str(),
                outcome.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string g_kbin;
fs::path g_scratch;

std::string random_read(std::size_t len, kbin::Rng& rng) {
    std::string s(len, 'A');
    for (auto& c : s) c = kbin::kAlphabet[rng.below(4)];
    return s;
}

// ---------------------------------------------------------------------------
// Criterion 1: exhaustive checker-vs-oracle equivalence.
// ---------------------------------------------------------------------------

struct Discrepancy {
    std::string read;
    int k;
    bool checker_identifiable;
    std::size_t oracle_preimages;
};

// Profile key: the read's window ranks in sorted order, packed 8 bits each.
// Exact for k <= 4 and up to 16 windows; two reads share a profile iff they
// share a key. This is a second, independent brute-force route used for the
// full-alphabet sweep where per-read DFS would be too slow.
unsigned __int128 profile_key(const std::string& read, int k) {
    std::array<std::uint8_t, 16> ranks{};
    const std::size_t windows = read.size() - static_cast<std::size_t>(k) + 1;
    std::size_t code = 0;
    const std::size_t mask = kbin::kmer_space_size(k) - 1;
    for (std::size_t i = 0; i < read.size(); ++i) {
        code = ((code << 2) | static_cast<std::size_t>(kbin::base_code(read[i]))) & mask;
        if (i + 1 >= static_cast<std::size_t>(k)) ranks[i + 1 - static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(code);
    }
    std::sort(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(windows));
    unsigned __int128 key = 0;
    for (std::size_t i = 0; i < windows; ++i) key = (key << 8) | ranks[i];
    return key | (static_cast<unsigned __int128>(windows) << 120);
}

// Full ACGT sweep for one (k, len): group all 4^len reads by profile key,
// then compare class-size-1 against the checker verdict for every read.
void sweep_full_alphabet(int k, std::size_t len, std::vector<Discrepancy>& discrepancies,
                         std::uint64_t& instances, std::uint64_t& dfs_cross_checks) {
    struct Entry {
        unsigned __int128 key;
        std::uint32_t idx;
    };
    const std::size_t count = std::size_t{1} << (2 * len);
    std::vector<Entry> entries;
    entries.reserve(count);

    std::string read(len, 'A');
    auto decode = [&](std::size_t idx) {
        for (std::size_t p = 0; p < len; ++p) {
            read[len - 1 - p] = kbin::kAlphabet[idx & 3];
            idx >>= 2;
        }
    };
    for (std::size_t idx = 0; idx < count; ++idx) {
        decode(idx);
        entries.push_back({profile_key(read, k), static_cast<std::uint32_t>(idx)});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.key < b.key; });

    std::vector<bool> duplicated(count, false);
    for (std::size_t i = 0; i < entries.size();) {
        std::size_t j = i;
        while (j < entries.size() && entries[j].key == entries[i].key) ++j;
        if (j - i > 1) {
            for (std::size_t t = i; t < j; ++t) duplicated[entries[t].idx] = true;
        }
        i = j;
    }
    entries.clear();
    entries.shrink_to_fit();

    const kbin::KmerConfig cfg{.k = k};
    for (std::size_t idx = 0; idx < count; ++idx) {
        decode(idx);
        const bool checker = kbin::check_conditions(read, k).identifiable;
        const bool oracle = !duplicated[idx];
        ++instances;
        if (checker != oracle) {
            discrepancies.push_back(
                {read, k, checker, kbin::count_preimages(kbin::profile(read, cfg), len, 0)});
        }
        // Tie the grouping route to the DFS oracle on a sparse subsample.
        if (idx % 131071 == 0) {
            ++dfs_cross_checks;
            const auto n = kbin::count_preimages(kbin::profile(read, cfg), len, 2);
            if ((n == 1) != oracle) {
                discrepancies.push_back({read, k, checker, n});
            }
        }
    }
}

Outcome criterion1() {
    std::vector<Discrepancy> discrepancies;
    std::uint64_t instances = 0;
    std::uint64_t cross_checks = 0;

    // {A,C}^len, len <= 16: per-read DFS preimage oracle.
    for (int k = 2; k <= 4; ++k) {
        const kbin::KmerConfig cfg{.k = k};
        for (std::size_t len = static_cast<std::size_t>(k); len <= 16; ++len) {
            const std::size_t count = std::size_t{1} << len;
            std::string read(len, 'A');
            for (std::size_t idx = 0; idx < count; ++idx) {
                for (std::size_t p = 0; p < len; ++p) read[p] = (idx >> p) & 1 ? 'C' : 'A';
                const bool checker = kbin::check_conditions(read, k).identifiable;
                const auto preimages = kbin::count_preimages(kbin::profile(read, cfg), len, 2);
                ++instances;
                if (checker != (preimages == 1)) discrepancies.push_back({read, k, checker, preimages});
            }
        }
    }

    // {A,C,G,T}^len, len <= 12: profile-key grouping oracle.
    for (int k = 2; k <= 4; ++k) {
        for (std::size_t len = static_cast<std::size_t>(k); len <= 12; ++len) {
            sweep_full_alphabet(k, len, discrepancies, instances, cross_checks);
        }
    }

    if (!discrepancies.empty()) {
        const auto path = g_scratch / "identifiability_discrepancies.tsv";
        std::ofstream out(path);
        out << "read\tk\tchecker_verdict\toracle_preimage_count\n";
        for (const auto& d : discrepancies) {
            out << d.read << '\t' << d.k << '\t' << (d.checker_identifiable ? 1 : 0) << '\t' << d.oracle_preimages
                << '\n';
        }
        return {false, std::to_string(discrepancies.size()) + " discrepancies over " + std::to_string(instances) +
                           " instances; report: " + path.string()};
    }
    return {true, std::to_string(instances) + " instances, 0 discrepancies, " + std::to_string(cross_checks) +
                      " DFS cross-checks"};
}

// ---------------------------------------------------------------------------
// Criterion 2: materialized counterexamples are distinct and profile-equal.
// ---------------------------------------------------------------------------

std::map<std::string, int> window_counts(const std::string& read, int k) {
    std::map<std::string, int> counts;
    for (std::size_t i = 0; i + k <= read.size(); ++i) ++counts[read.substr(i, static_cast<std::size_t>(k))];
    return counts;
}

Outcome criterion2() {
    kbin::Rng rng(20240811);
    const int k = 3;
    std::size_t flagged = 0, bad = 0;
    while (flagged < 1000) {
        const std::size_t len = 10 + rng.below(51);  // up to 60
        const auto read = random_read(len, rng);
        const auto verdict = kbin::check_conditions(read, k);
        if (verdict.identifiable) continue;
        ++flagged;
        const bool distinct = verdict.counterexample != read && verdict.counterexample.size() == read.size();
        const bool same_profile = window_counts(verdict.counterexample, k) == window_counts(read, k);
        if (!distinct || !same_profile) ++bad;
    }
    if (bad > 0) return {false, std::to_string(bad) + " of 1000 counterexamples invalid"};
    return {true, "1000 of 1000 counterexamples distinct with identical profiles"};
}

// ---------------------------------------------------------------------------
// Criterion 3: profile distance bounds on sampled pairs.
// ---------------------------------------------------------------------------

Outcome criterion3() {
    std::uint64_t pairs = 0, violations = 0, outside_domain = 0;
    std::uint64_t seed = 31337;
    for (const std::size_t len : {50u, 100u, 500u}) {
        for (int k = 2; k <= 6; ++k) {
            kbin::Rng gen(seed++);
            kbin::Dataset d;
            for (int i = 0; i < 80; ++i) d.reads.push_back({"r" + std::to_string(i), random_read(len, gen), ""});
            // 6667 trials produce 6667 random pairs and 6667 mutation pairs
            // per cell; 15 cells make 100005 of each kind.
            const auto check = kbin::verify_lipschitz(d, k, 6667, seed++);
            pairs += check.pairs_checked;
            violations += check.violations;
            outside_domain += check.non_identifiable_pairs;
        }
    }
    const auto detail = std::to_string(pairs) + " pairs, " + std::to_string(violations) + " violations (" +
                        std::to_string(outside_domain) + " equal-profile pairs outside the identifiable domain)";
    return {violations == 0, detail};
}

// ---------------------------------------------------------------------------
// Criterion 4: gradient correctness on miniature instances.
// ---------------------------------------------------------------------------

bool poisson_gradcheck(std::uint64_t seed, double tol) {
    kbin::Rng rng(seed);
    const std::size_t dim = kbin::kmer_space_size(2);
    kbin::CooccurrenceStats stats;
    stats.k = 2;
    stats.window = 4;
    stats.reads_seen = 1;
    stats.o = kbin::Matrix(dim, dim, 0.0);
    for (std::size_t x = 0; x < dim; ++x) {
        for (std::size_t y = x + 1; y < dim; ++y) {
            const double v = rng.unit() < 0.5 ? 0.0 : 3.0 * rng.unit();
            stats.o.at(x, y) = v;
            stats.o.at(y, x) = v;
        }
    }
    kbin::KmerEmbeddings emb;
    emb.k = 2;
    emb.dim = 4;
    emb.z = kbin::Matrix(dim, 4);
    for (auto& v : emb.z.data) v = 0.5 * rng.normal();

    kbin::Matrix grad;
    kbin::poisson_loss_grad(stats, emb, grad);
    const double h = 1e-4;
    for (std::size_t i = 0; i < emb.z.data.size(); ++i) {
        const double saved = emb.z.data[i];
        emb.z.data[i] = saved + h;
        const double up = kbin::poisson_loss(stats, emb);
        emb.z.data[i] = saved - h;
        const double down = kbin::poisson_loss(stats, emb);
        emb.z.data[i] = saved;
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(grad.data[i]), 1.0});
        if (std::abs(fd - grad.data[i]) / denom > tol) return false;
    }
    return true;
}

bool nl_gradcheck(kbin::NlLoss loss, std::uint64_t seed, double tol) {
    kbin::Rng rng(seed);
    kbin::MlpParams p = kbin::MlpParams::init(2, 8, 4, seed);
    p.dropout = 0.2;
    kbin::Matrix x(8, 16);
    for (auto& v : x.data) v = 0.5 * rng.normal();
    const std::vector<kbin::PairBatch::Pair> pairs = {{0, 1, 1}, {2, 3, 0}, {4, 5, 1}, {6, 7, 0}};
    const std::uint64_t mask_seed = seed ^ 0xabcdef;

    kbin::ForwardCache cache;
    kbin::forward_train(p, x, mask_seed, cache);
    kbin::Matrix d_e;
    kbin::pair_loss(loss, cache.out, pairs, &d_e);
    kbin::MlpGrads grads;
    kbin::backward(p, cache, d_e, grads);

    std::vector<double*> entries;
    for (auto& v : p.w1.data) entries.push_back(&v);
    for (auto& v : p.b1) entries.push_back(&v);
    for (auto& v : p.w2.data) entries.push_back(&v);
    for (auto& v : p.b2) entries.push_back(&v);
    for (auto& v : p.bn_gamma) entries.push_back(&v);
    for (auto& v : p.bn_beta) entries.push_back(&v);
    std::vector<double> analytic;
    analytic.insert(analytic.end(), grads.w1.data.begin(), grads.w1.data.end());
    analytic.insert(analytic.end(), grads.b1.begin(), grads.b1.end());
    analytic.insert(analytic.end(), grads.w2.data.begin(), grads.w2.data.end());
    analytic.insert(analytic.end(), grads.b2.begin(), grads.b2.end());
    analytic.insert(analytic.end(), grads.bn_gamma.begin(), grads.bn_gamma.end());
    analytic.insert(analytic.end(), grads.bn_beta.begin(), grads.bn_beta.end());

    const double h = 1e-4;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const double saved = *entries[i];
        auto eval = [&] {
            kbin::ForwardCache c;
            kbin::forward_train(p, x, mask_seed, c);
            return kbin::pair_loss(loss, c.out, pairs, nullptr);
        };
        *entries[i] = saved + h;
        const double up = eval();
        *entries[i] = saved - h;
        const double down = eval();
        *entries[i] = saved;
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1.0});
        if (std::abs(fd - analytic[i]) / denom > tol) return false;
    }
    return true;
}

Outcome criterion4() {
    const double tol = 1e-4;
    int failures = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        if (!poisson_gradcheck(seed, tol)) ++failures;
        for (const auto loss : {kbin::NlLoss::bernoulli, kbin::NlLoss::poisson, kbin::NlLoss::hinge}) {
            if (!nl_gradcheck(loss, seed, tol)) ++failures;
        }
    }
    if (failures > 0) return {false, std::to_string(failures) + " gradient checks out of tolerance"};
    return {true, "200 gradient checks (Poisson + 3 NL losses x 50 seeds) within 1e-4"};
}

// ---------------------------------------------------------------------------
// Criteria 5 and 6: desk-scale binning recovery and the k-ablation shape.
// ---------------------------------------------------------------------------

struct DeskScale {
    kbin::SyntheticSplit split;
    kbin::KmerEmbeddings pois;
    kbin::MlpParams nl;
};

DeskScale& desk_scale() {
    static DeskScale ds = [] {
        DeskScale out;
        const kbin::GeneratorSpec spec{.genome_count = 8,
                                       .genome_length = 20000,
                                       .reads_per_genome = 100,
                                       .read_length = 2000,
                                       .markov_order = 1,
                                       .seed = 1234};
        out.split = kbin::generate_synthetic_split(spec, 25);

        kbin::PoissonTrainConfig pois_cfg;  // library defaults: 1000 epochs, dim 256, window 4
        pois_cfg.seed = 1234;
        out.pois = kbin::train_poisson(kbin::count_cooccurrences(out.split.eval, 4, pois_cfg.window), pois_cfg)
                       .embeddings;

        kbin::NlTrainConfig nl_cfg;  // reduced desk-scale settings: 50 epochs, batch 512, 20 negatives
        nl_cfg.epochs = 50;
        nl_cfg.minibatch = 512;
        nl_cfg.negatives_per_positive = 20;
        nl_cfg.seed = 1234;
        out.nl = kbin::train_nl(out.split.eval, nl_cfg).params;
        return out;
    }();
    return ds;
}

Outcome criterion5() {
    auto& ds = desk_scale();
    kbin::ModelArtifacts artifacts;
    artifacts.pois = &ds.pois;
    artifacts.nl = &ds.nl;

    std::string detail;
    bool pass = true;
    const auto run = [&](kbin::ModelKind model, int min_hq) {
        const auto report = kbin::end_to_end_bin(ds.split.eval, model, artifacts, ds.split.calib, 4);
        detail += std::string(kbin::model_name(model)) + " " + std::to_string(report.detected_high_quality) + "/8 ";
        if (report.detected_high_quality < min_hq) pass = false;
    };
    run(kbin::ModelKind::kmer_cosine, 7);
    run(kbin::ModelKind::kmer_l1, 7);
    run(kbin::ModelKind::nl, 7);
    run(kbin::ModelKind::pois, 6);
    detail += "(thresholds 7/7/7/6)";
    return {pass, detail};
}

Outcome criterion6() {
    auto& ds = desk_scale();
    const auto at_k = [&](int k) {
        return kbin::end_to_end_bin(ds.split.eval, kbin::ModelKind::kmer_l1, {}, ds.split.calib, k)
            .detected_high_quality;
    };
    const int hq2 = at_k(2);
    const int hq4 = at_k(4);
    return {hq4 >= hq2, "kmer-l1 high-quality at k=4: " + std::to_string(hq4) + ", k=2: " + std::to_string(hq2)};
}

// ---------------------------------------------------------------------------
// Criterion 7: Hungarian alignment equals brute force.
// ---------------------------------------------------------------------------

std::int64_t brute_force_best_overlap(const std::vector<std::vector<std::int64_t>>& overlap) {
    const std::size_t n_clusters = overlap.size();
    const std::size_t n_species = overlap.empty() ? 0 : overlap[0].size();
    const std::size_t dim = std::max(n_clusters, n_species);
    std::vector<std::size_t> perm(dim);
    std::iota(perm.begin(), perm.end(), 0);
    std::int64_t best = 0;
    do {
        std::int64_t total = 0;
        for (std::size_t c = 0; c < n_clusters; ++c) {
            if (perm[c] < n_species) total += overlap[c][perm[c]];
        }
        best = std::max(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

Outcome criterion7() {
    kbin::Rng rng(777);
    std::uint64_t mismatches = 0;
    for (int iter = 0; iter < 10000; ++iter) {
        const std::size_t rows = 1 + rng.below(7);
        const std::size_t cols = 1 + rng.below(7);
        std::vector<std::vector<std::int64_t>> overlap(rows, std::vector<std::int64_t>(cols));
        for (auto& row : overlap) {
            for (auto& v : row) v = static_cast<std::int64_t>(rng.below(50));
        }
        if (kbin::hungarian_align(overlap).total_overlap != brute_force_best_overlap(overlap)) ++mismatches;
    }
    return {mismatches == 0, "10000 random contingency matrices, " + std::to_string(mismatches) + " mismatches"};
}

// ---------------------------------------------------------------------------
// Criterion 8: pipeline determinism.
// ---------------------------------------------------------------------------

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Outcome criterion8() {
    const auto dir_a = g_scratch / "pipeline_a";
    const auto dir_b = g_scratch / "pipeline_b";
    for (const auto& dir : {dir_a, dir_b}) {
        const std::string cmd =
            g_kbin + " pipeline --seed 7 --threads 1 --outdir " + dir.string() + " > /dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0) return {false, "pipeline run failed"};
    }
    for (const char* name : {"report.json", "eval_emb.kbem", "model.kbnl"}) {
        if (slurp(dir_a / name) != slurp(dir_b / name)) {
            return {false, std::string(name) + " differs between runs"};
        }
        if (slurp(dir_a / name).empty()) return {false, std::string(name) + " missing or empty"};
    }
    return {true, "report.json, eval_emb.kbem, model.kbnl byte-identical across two seeded runs"};
}

// ---------------------------------------------------------------------------
// Criterion 9: filtering rules as properties.
// ---------------------------------------------------------------------------

Outcome criterion9() {
    kbin::Rng rng(909);
    std::uint64_t checks = 0, failures = 0;
    for (int iter = 0; iter < 100; ++iter) {
        kbin::Dataset d;
        const int species = 1 + static_cast<int>(rng.below(5));
        const int reads = 1 + static_cast<int>(rng.below(60));
        for (int i = 0; i < reads; ++i) {
            const std::size_t len = 1 + rng.below(16000);
            d.reads.push_back({"r" + std::to_string(i), std::string(len, 'A'),
                               "s" + std::to_string(rng.below(static_cast<std::uint64_t>(species)))});
        }
        const auto once = kbin::filter_dataset(d);

        std::map<std::string, int> survivors;
        for (const auto& r : once.reads) ++survivors[r.label];
        for (const auto& r : once.reads) {
            ++checks;
            if (r.length() > 10000 || r.length() < 2500 || survivors[r.label] < 10) ++failures;
        }
        // Truncation keeps the prefix.
        for (const auto& r : d.reads) {
            if (r.length() <= 10000) continue;
            for (const auto& kept : once.reads) {
                if (kept.id == r.id) {
                    ++checks;
                    if (kept.bases != r.bases.substr(0, 10000)) ++failures;
                }
            }
        }
        // Dropped reads are exactly the short ones or thin-species ones.
        std::map<std::string, int> eligible;
        for (const auto& r : d.reads) {
            if (r.length() >= 2500) ++eligible[r.label];
        }
        for (const auto& r : d.reads) {
            ++checks;
            const bool should_survive = r.length() >= 2500 && eligible[r.label] >= 10;
            bool survived = false;
            for (const auto& kept : once.reads) survived |= kept.id == r.id;
            if (should_survive != survived) ++failures;
        }
        // Idempotence.
        const auto twice = kbin::filter_dataset(once);
        ++checks;
        if (twice.size() != once.size()) ++failures;
    }
    return {failures == 0,
            std::to_string(checks) + " property checks, " + std::to_string(failures) + " failures"};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: kbin_acceptance <path-to-kbin> [scratch-dir]\n");
        return 2;
    }
    g_kbin = argv[1];
    g_scratch = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "kbin_acceptance";
    fs::create_directories(g_scratch);

    criterion(1, "identifiability checker-oracle equivalence", criterion1);
    criterion(2, "counterexample materialization", criterion2);
    criterion(3, "profile distance bounds", criterion3);
    criterion(4, "gradient correctness", criterion4);
    criterion(5, "desk-scale binning recovery", criterion5);
    criterion(6, "k-ablation shape", criterion6);
    criterion(7, "Hungarian oracle equivalence", criterion7);
    criterion(8, "pipeline determinism", criterion8);
    criterion(9, "filtering rules", criterion9);

    if (g_failures > 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all 9 criteria passed\n");
    return 0;
}
