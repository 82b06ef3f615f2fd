// kbin: k-mer read profiles, identifiability checks, trainable read
// embeddings, and threshold-medoid binning, behind one reproducible CLI.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kbin/binning.hpp"
#include "kbin/common.hpp"
#include "kbin/dataset.hpp"
#include "kbin/fasta.hpp"
#include "kbin/identifiability.hpp"
#include "kbin/io_formats.hpp"
#include "kbin/kmer.hpp"
#include "kbin/manifest.hpp"
#include "kbin/mlp.hpp"
#include "kbin/parallel.hpp"
#include "kbin/poisson.hpp"
#include "kbin/synthetic.hpp"
#include "kbin/version.hpp"

namespace {

using nlohmann::ordered_json;

kbin::Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw kbin::DataError("file not found: " + path);
    return kbin::parse_sequences(in);
}

kbin::Dataset load_dataset(const std::string& path, const std::string& labels_path) {
    auto d = load_dataset(path);
    if (!labels_path.empty()) {
        std::ifstream in(labels_path);
        if (!in) throw kbin::DataError("file not found: " + labels_path);
        d = kbin::load_labels(in, d);
    }
    return d;
}

void save_fasta(const std::string& path, const kbin::Dataset& d) {
    std::ofstream out(path);
    if (!out) throw kbin::DataError("cannot open " + path + " for writing");
    kbin::write_fasta(out, d);
}

void save_labels(const std::string& path, const kbin::Dataset& d) {
    std::ofstream out(path);
    if (!out) throw kbin::DataError("cannot open " + path + " for writing");
    kbin::write_labels(out, d);
}

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

ordered_json report_to_json(const kbin::BinningReport& report) {
    ordered_json doc;
    if (!report.model.empty()) {
        doc["model"] = report.model;
        doc["similarity"] = report.similarity;
        doc["threshold"] = report.threshold;
    }
    doc["species_count"] = report.species_count;
    doc["cluster_count"] = report.cluster_count;
    doc["detected_high_quality"] = report.detected_high_quality;
    doc["histogram"] = {{"f1_gt_0.9", report.histogram[0]},
                        {"f1_0.8_0.9", report.histogram[1]},
                        {"f1_0.7_0.8", report.histogram[2]},
                        {"f1_0.6_0.7", report.histogram[3]},
                        {"f1_0.5_0.6", report.histogram[4]}};
    doc["per_species"] = ordered_json::array();
    for (const auto& s : report.per_species) {
        doc["per_species"].push_back({{"species", s.species},
                                      {"cluster", s.cluster},
                                      {"precision", s.precision},
                                      {"recall", s.recall},
                                      {"f1", s.f1}});
    }
    return doc;
}

void print_histogram(std::ostream& out, const kbin::BinningReport& report) {
    static const char* buckets[] = {">0.9", "0.8-0.9", "0.7-0.8", "0.6-0.7", "0.5-0.6"};
    out << "F1 bucket   clusters\n";
    for (int i = 0; i < 5; ++i) {
        out << buckets[i] << std::string(12 - std::string(buckets[i]).size(), ' ') << report.histogram[i] << '\n';
    }
    out << "species detected at high quality (F1 > 0.9): " << report.detected_high_quality << " of "
        << report.species_count << '\n';
}

void write_report(const std::string& path, const kbin::BinningReport& report) {
    std::ofstream out(path);
    if (!out) throw kbin::DataError("cannot open " + path + " for writing");
    out << report_to_json(report).dump(2) << '\n';
}

// --- subcommand configs ------------------------------------------------------

struct GenArgs {
    kbin::GeneratorSpec spec;
    int calib_reads = 0;
    std::string out, labels, calib_out, calib_labels;
};

struct FilterArgs {
    std::string input, labels, out, out_labels;
    std::size_t max_len = 10000, min_len = 2500, min_per_species = 10;
};

struct ProfileArgs {
    std::string input, out;
    int k = 4;
    bool fold = false;
};

struct CheckArgs {
    std::string input, report, discrepancies;
    int k = 4;
    bool oracle = false;
};

struct LipschitzArgs {
    std::string input, report;
    int k = 4;
    int trials = 1000;
    std::uint64_t seed = 0;
};

struct TrainPoisArgs {
    std::string input, out;
    int k = 4;
    kbin::PoissonTrainConfig cfg;
};

struct TrainNlArgs {
    std::string input, out, loss = "bernoulli";
    kbin::NlTrainConfig cfg;
};

struct EmbedArgs {
    std::string model, input, out;
    int k = 4;
    bool raw_counts = false;
    bool halves = false;
};

struct BinArgs {
    std::string emb, sim = "cosine", calib, calib_labels, out;
    double threshold = 0.0;
    bool have_threshold = false;
    int max_iter = 100;
    double percentile = 70.0;
};

struct EvalArgs {
    std::string assignments, truth, report;
};

struct PipelineArgs {
    std::string outdir, model = "nl", loss = "bernoulli";
    kbin::GeneratorSpec spec{.genome_count = 4,
                             .genome_length = 10000,
                             .reads_per_genome = 30,
                             .read_length = 1000,
                             .markov_order = 1,
                             .seed = 0};
    int calib_reads = 10;
    int k = 4;
    int nl_epochs = 8, nl_batch = 256, nl_neg = 10, nl_hidden = 512, nl_dim = 256;
    int pois_epochs = 300, pois_dim = 64, pois_window = 4;
    double lr = 1e-3, dropout = 0.2, percentile = 70.0;
};

// --- subcommand bodies -------------------------------------------------------

int run_gen(const GenArgs& a, kbin::RunManifest& manifest) {
    manifest.config("seed", a.spec.seed);
    const auto split = kbin::generate_synthetic_split(a.spec, a.calib_reads);
    save_fasta(a.out, split.eval);
    manifest.output(a.out);
    if (!a.labels.empty()) {
        save_labels(a.labels, split.eval);
        manifest.output(a.labels);
    }
    if (a.calib_reads > 0) {
        if (a.calib_out.empty()) throw kbin::DataError("--calib-reads requires --calib-out");
        save_fasta(a.calib_out, split.calib);
        manifest.output(a.calib_out);
        if (!a.calib_labels.empty()) {
            save_labels(a.calib_labels, split.calib);
            manifest.output(a.calib_labels);
        }
    }
    std::cout << "generated " << split.eval.size() << " reads from " << a.spec.genome_count << " genomes\n";
    manifest.write(a.out);
    return 0;
}

int run_filter(const FilterArgs& a, kbin::RunManifest& manifest) {
    manifest.input(a.input);
    auto d = load_dataset(a.input, a.labels);
    if (!a.labels.empty()) manifest.input(a.labels);
    const auto filtered = kbin::filter_dataset(d, a.max_len, a.min_len, a.min_per_species);
    save_fasta(a.out, filtered);
    manifest.output(a.out);
    if (!a.out_labels.empty()) {
        save_labels(a.out_labels, filtered);
        manifest.output(a.out_labels);
    }
    std::cout << "kept " << filtered.size() << " of " << d.size() << " reads\n";
    manifest.write(a.out);
    return 0;
}

int run_profile(const ProfileArgs& a, kbin::RunManifest& manifest) {
    manifest.input(a.input);
    const auto d = load_dataset(a.input);
    const kbin::KmerConfig cfg{.k = a.k, .canonical_fold = a.fold};
    std::vector<kbin::KmerProfile> profiles;
    std::vector<std::string> ids;
    profiles.reserve(d.size());
    for (const auto& r : d.reads) {
        profiles.push_back(kbin::profile(r.bases, cfg));
        ids.push_back(r.id);
    }
    if (has_suffix(a.out, ".kbpf")) {
        std::ofstream out(a.out, std::ios::binary);
        if (!out) throw kbin::DataError("cannot open " + a.out + " for writing");
        kbin::write_kbpf(out, a.k, profiles);
        kbin::write_ids(a.out + ".ids", ids);
        manifest.output(a.out + ".ids");
    } else {
        std::ofstream out(a.out);
        if (!out) throw kbin::DataError("cannot open " + a.out + " for writing");
        kbin::write_profile_tsv(out, a.k, ids, profiles);
    }
    manifest.output(a.out);
    manifest.write(a.out);
    return 0;
}

int run_check(const CheckArgs& a, kbin::RunManifest& manifest) {
    manifest.input(a.input);
    const auto d = load_dataset(a.input);
    std::ofstream out(a.report);
    if (!out) throw kbin::DataError("cannot open " + a.report + " for writing");
    out << "read_id\tidentifiable\tviolated_condition\twitnesses\n";

    std::ofstream disc;
    std::size_t disagreements = 0;
    if (a.oracle && !a.discrepancies.empty()) {
        disc.open(a.discrepancies);
        if (!disc) throw kbin::DataError("cannot open " + a.discrepancies + " for writing");
        disc << "read_id\tk\tchecker_verdict\toracle_preimage_count\n";
    }

    const kbin::KmerConfig cfg{.k = a.k, .canonical_fold = false};
    for (const auto& r : d.reads) {
        const auto verdict = kbin::check_conditions(r.bases, a.k);
        out << r.id << '\t' << (verdict.identifiable ? 1 : 0) << '\t';
        if (verdict.identifiable) {
            out << "-\t-\n";
        } else {
            out << verdict.violated_condition << '\t';
            for (std::size_t i = 0; i < verdict.witness_indices.size(); ++i) {
                if (i > 0) out << ';';
                out << verdict.witness_indices[i];
            }
            out << '\n';
        }
        if (a.oracle) {
            const auto preimages = kbin::count_preimages(kbin::profile(r.bases, cfg), r.length(), 2);
            const bool oracle_identifiable = preimages == 1;
            if (oracle_identifiable != verdict.identifiable) {
                ++disagreements;
                if (disc.is_open()) {
                    disc << r.id << '\t' << a.k << '\t' << (verdict.identifiable ? 1 : 0) << '\t' << preimages << '\n';
                }
            }
        }
    }
    manifest.output(a.report);
    manifest.write(a.report);
    if (a.oracle) {
        std::cout << "oracle disagreements: " << disagreements << '\n';
        if (disagreements > 0) return 2;
    }
    return 0;
}

int run_lipschitz(const LipschitzArgs& a, kbin::RunManifest& manifest) {
    manifest.input(a.input);
    const auto d = load_dataset(a.input);
    const auto check = kbin::verify_lipschitz(d, a.k, a.trials, a.seed);
    std::cout << "alpha_l=" << check.alpha_l << " alpha_u=" << check.alpha_u
              << " pairs_checked=" << check.pairs_checked << " violations=" << check.violations
              << " non_identifiable_pairs=" << check.non_identifiable_pairs << '\n';
    if (!a.report.empty()) {
        ordered_json doc = {{"k", a.k},
                            {"trials", a.trials},
                            {"seed", a.seed},
                            {"alpha_l", check.alpha_l},
                            {"alpha_u", check.alpha_u},
                            {"pairs_checked", check.pairs_checked},
                            {"violations", check.violations},
                            {"non_identifiable_pairs", check.non_identifiable_pairs}};
        std::ofstream out(a.report);
        if (!out) throw kbin::DataError("cannot open " + a.report + " for writing");
        out << doc.dump(2) << '\n';
        manifest.output(a.report);
        manifest.write(a.report);
    }
    return check.violations == 0 ? 0 : 3;
}

kbin::Dataset sample_reads(const kbin::Dataset& d, int count, std::uint64_t seed) {
    if (count <= 0 || static_cast<std::size_t>(count) >= d.size()) return d;
    kbin::Rng rng(seed ^ 0x5851f42d4c957f2dull);
    std::vector<std::size_t> order(d.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    order.resize(static_cast<std::size_t>(count));
    std::sort(order.begin(), order.end());
    kbin::Dataset out;
    for (const auto i : order) out.reads.push_back(d.reads[i]);
    return out;
}

int run_train_pois(const TrainPoisArgs& a, kbin::RunManifest& manifest) {
    manifest.input(a.input);
    manifest.config("seed", a.cfg.seed);
    auto d = load_dataset(a.input);
    d = sample_reads(d, a.cfg.reads_sampled, a.cfg.seed);
    const auto stats = kbin::count_cooccurrences(d, a.k, a.cfg.window);
    const auto result = kbin::train_poisson(stats, a.cfg);
    kbin::save_kmer_embeddings(a.out, result.embeddings);
    manifest.output(a.out);
    std::cout << "trained " << stats.o.rows << " k-mer embeddings, loss " << result.loss_trace.front() << " -> "
              << result.loss_trace.back() << '\n';
    manifest.write(a.out);
    return 0;
}

int run_train_nl(const TrainNlArgs& a, kbin::RunManifest& manifest) {
    manifest.input(a.input);
    manifest.config("seed", a.cfg.seed);
    const auto d = load_dataset(a.input);
    kbin::NlTrainConfig cfg = a.cfg;
    cfg.loss = kbin::parse_nl_loss(a.loss);
    const auto result = kbin::train_nl(d, cfg);
    kbin::save_mlp(a.out, result.params);
    manifest.output(a.out);
    std::cout << "trained " << result.params.trainable_count() << " parameters over " << cfg.epochs
              << " epochs, loss " << result.loss_trace.front() << " -> " << result.loss_trace.back() << '\n';
    manifest.write(a.out);
    return 0;
}

char sniff_magic(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw kbin::DataError("file not found: " + path);
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    if (std::string_view(magic, 4) == "KBNL") return 'n';
    if (std::string_view(magic, 4) == "KBEM") return 'e';
    throw kbin::DataError(path + " is neither a KBNL model nor a KBEM embedding file");
}

int run_embed(const EmbedArgs& a, kbin::RunManifest& manifest) {
    manifest.input(a.input);
    const auto d = load_dataset(a.input);
    kbin::Matrix emb;
    int k = a.k;
    if (a.model == "raw") {
        emb = kbin::embed_dataset(d, kbin::ModelKind::kmer_cosine, {}, a.k);
    } else {
        manifest.input(a.model);
        if (sniff_magic(a.model) == 'n') {
            const auto params = kbin::load_mlp(a.model);
            k = params.k;
            if (a.halves) {
                emb = kbin::Matrix(d.size(), static_cast<std::size_t>(params.output_dim));
                const kbin::KmerConfig cfg{.k = params.k, .canonical_fold = false};
                for (std::size_t i = 0; i < d.size(); ++i) {
                    const auto& bases = d.reads[i].bases;
                    const std::size_t mid = bases.size() / 2;
                    const auto left = kbin::forward_infer(
                        params, kbin::profile_input(kbin::profile(std::string_view(bases).substr(0, mid), cfg),
                                                    a.raw_counts));
                    const auto right = kbin::forward_infer(
                        params,
                        kbin::profile_input(kbin::profile(std::string_view(bases).substr(mid), cfg), a.raw_counts));
                    for (std::size_t c = 0; c < left.size(); ++c) emb.at(i, c) = 0.5 * (left[c] + right[c]);
                }
            } else {
                kbin::ModelArtifacts artifacts;
                artifacts.nl = &params;
                artifacts.nl_raw_counts = a.raw_counts;
                emb = kbin::embed_dataset(d, kbin::ModelKind::nl, artifacts, params.k);
            }
        } else {
            const auto kemb = kbin::load_kmer_embeddings(a.model);
            k = kemb.k;
            kbin::ModelArtifacts artifacts;
            artifacts.pois = &kemb;
            emb = kbin::embed_dataset(d, kbin::ModelKind::pois, artifacts, kemb.k);
        }
    }
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw kbin::DataError("cannot open " + a.out + " for writing");
    kbin::write_kbem(out, k, emb);
    std::vector<std::string> ids;
    for (const auto& r : d.reads) ids.push_back(r.id);
    kbin::write_ids(a.out + ".ids", ids);
    manifest.output(a.out);
    manifest.output(a.out + ".ids");
    manifest.write(a.out);
    return 0;
}

std::unordered_map<std::string, std::string> load_label_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw kbin::DataError("file not found: " + path);
    std::unordered_map<std::string, std::string> map;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw kbin::ParseError("expected read_id<TAB>species_id", line_no);
        map[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return map;
}

int run_bin(const BinArgs& a, kbin::RunManifest& manifest) {
    manifest.input(a.emb);
    int k = 0;
    std::ifstream in(a.emb, std::ios::binary);
    if (!in) throw kbin::DataError("file not found: " + a.emb);
    const kbin::Matrix emb = kbin::read_kbem(in, k);
    const auto ids = kbin::read_ids(a.emb + ".ids");
    if (ids.size() != emb.rows) throw kbin::DataError(a.emb + ".ids does not match the embedding row count");

    const auto sim = kbin::parse_similarity(a.sim);
    double threshold = a.threshold;
    if (!a.have_threshold) {
        if (a.calib.empty() || a.calib_labels.empty()) {
            throw kbin::DataError("binning needs either --threshold or --calib with --calib-labels");
        }
        manifest.input(a.calib);
        manifest.input(a.calib_labels);
        int ck = 0;
        std::ifstream cin_(a.calib, std::ios::binary);
        if (!cin_) throw kbin::DataError("file not found: " + a.calib);
        const kbin::Matrix calib_emb = kbin::read_kbem(cin_, ck);
        const auto calib_ids = kbin::read_ids(a.calib + ".ids");
        if (calib_ids.size() != calib_emb.rows) {
            throw kbin::DataError(a.calib + ".ids does not match the embedding row count");
        }
        const auto label_map = load_label_map(a.calib_labels);
        std::vector<std::string> labels;
        for (const auto& id : calib_ids) {
            const auto it = label_map.find(id);
            if (it == label_map.end()) throw kbin::DataError("no label for calibration read " + id);
            labels.push_back(it->second);
        }
        threshold = kbin::calibrate_threshold(calib_emb, labels, sim, a.percentile);
    }

    const auto clusters = kbin::kmedoid_cluster(emb, sim, threshold, a.max_iter);
    std::ofstream out(a.out);
    if (!out) throw kbin::DataError("cannot open " + a.out + " for writing");
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << ids[i] << '\t' << clusters.cluster_of[i] << '\n';
    }
    manifest.output(a.out);
    manifest.config("threshold", threshold);
    manifest.config("clusters", clusters.cluster_count);
    std::cout << "threshold " << threshold << ", " << clusters.cluster_count << " clusters\n";
    manifest.write(a.out);
    return 0;
}

int run_eval(const EvalArgs& a, kbin::RunManifest& manifest) {
    manifest.input(a.assignments);
    manifest.input(a.truth);
    std::ifstream in(a.assignments);
    if (!in) throw kbin::DataError("file not found: " + a.assignments);
    std::vector<std::string> ids;
    std::vector<int> raw_cluster;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw kbin::ParseError("expected read_id<TAB>cluster", line_no);
        ids.push_back(line.substr(0, tab));
        raw_cluster.push_back(std::stoi(line.substr(tab + 1)));
    }

    // Densify cluster indices in first-appearance order.
    kbin::ClusterAssignment clusters;
    std::map<int, int> dense;
    for (const auto c : raw_cluster) {
        auto [it, inserted] = dense.emplace(c, clusters.cluster_count);
        if (inserted) ++clusters.cluster_count;
        clusters.cluster_of.push_back(it->second);
    }

    const auto label_map = load_label_map(a.truth);
    std::vector<std::string> truth;
    for (const auto& id : ids) {
        const auto it = label_map.find(id);
        if (it == label_map.end()) throw kbin::DataError("ground truth required for scoring: no label for " + id);
        truth.push_back(it->second);
    }

    const auto report = kbin::score_clustering(clusters, truth);
    write_report(a.report, report);
    manifest.output(a.report);
    print_histogram(std::cout, report);
    manifest.write(a.report);
    return 0;
}

int run_pipeline(const PipelineArgs& a, kbin::RunManifest& manifest) {
    namespace fs = std::filesystem;
    fs::create_directories(a.outdir);
    const auto path = [&](const std::string& name) { return (fs::path(a.outdir) / name).string(); };

    const auto split = kbin::generate_synthetic_split(a.spec, a.calib_reads);
    save_fasta(path("eval.fasta"), split.eval);
    save_labels(path("eval.tsv"), split.eval);
    save_fasta(path("calib.fasta"), split.calib);
    save_labels(path("calib.tsv"), split.calib);

    const auto model = kbin::parse_model(a.model);
    kbin::KmerEmbeddings pois_emb;
    kbin::MlpParams nl_params;
    kbin::ModelArtifacts artifacts;
    if (model == kbin::ModelKind::pois) {
        kbin::PoissonTrainConfig cfg;
        cfg.epochs = a.pois_epochs;
        cfg.dim = a.pois_dim;
        cfg.window = a.pois_window;
        cfg.learning_rate = a.lr;
        cfg.seed = a.spec.seed;
        const auto stats = kbin::count_cooccurrences(split.eval, a.k, cfg.window);
        pois_emb = kbin::train_poisson(stats, cfg).embeddings;
        kbin::save_kmer_embeddings(path("kmer_emb.kbem"), pois_emb);
        artifacts.pois = &pois_emb;
    } else if (model == kbin::ModelKind::nl) {
        kbin::NlTrainConfig cfg;
        cfg.epochs = a.nl_epochs;
        cfg.minibatch = a.nl_batch;
        cfg.negatives_per_positive = a.nl_neg;
        cfg.learning_rate = a.lr;
        cfg.dropout = a.dropout;
        cfg.loss = kbin::parse_nl_loss(a.loss);
        cfg.k = a.k;
        cfg.seed = a.spec.seed;
        cfg.hidden = a.nl_hidden;
        cfg.output_dim = a.nl_dim;
        nl_params = kbin::train_nl(split.eval, cfg).params;
        kbin::save_mlp(path("model.kbnl"), nl_params);
        artifacts.nl = &nl_params;
    }

    const auto eval_emb = kbin::embed_dataset(split.eval, model, artifacts, a.k);
    {
        std::ofstream out(path("eval_emb.kbem"), std::ios::binary);
        kbin::write_kbem(out, a.k, eval_emb);
        std::vector<std::string> ids;
        for (const auto& r : split.eval.reads) ids.push_back(r.id);
        kbin::write_ids(path("eval_emb.kbem.ids"), ids);
    }

    auto report = kbin::end_to_end_bin(split.eval, model, artifacts, split.calib, a.k, a.percentile);
    write_report(path("report.json"), report);
    print_histogram(std::cout, report);

    manifest.config("model", a.model);
    manifest.config("seed", a.spec.seed);
    manifest.output(path("report.json"));
    manifest.output(path("eval_emb.kbem"));
    manifest.write(path("report.json"));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"k-mer read representations for metagenomic binning"};
    app.require_subcommand(1);

    unsigned threads = 0;
    app.add_option("--threads", threads, "cap worker threads (1 = fully serial)")->capture_default_str();
    // Global flags like --threads may appear after the subcommand name.
    app.fallthrough();
    std::ostringstream version;
    version << "kbin " << kbin::kVersion << " (formats: KBPF v" << kbin::kFormatVersionKbpf << ", KBEM v"
            << kbin::kFormatVersionKbem << ", KBNL v" << kbin::kFormatVersionKbnl << ")";
    app.set_version_flag("--version", version.str());

    GenArgs gen;
    auto* cmd_gen = app.add_subcommand("gen", "generate a synthetic labeled read set");
    cmd_gen->add_option("--genomes", gen.spec.genome_count, "number of genomes")->capture_default_str();
    cmd_gen->add_option("--glen", gen.spec.genome_length, "genome length in bases")->capture_default_str();
    cmd_gen->add_option("--reads", gen.spec.reads_per_genome, "reads per genome")->capture_default_str();
    cmd_gen->add_option("--rlen", gen.spec.read_length, "read length in bases")->capture_default_str();
    cmd_gen->add_option("--order", gen.spec.markov_order, "Markov chain order")->capture_default_str();
    cmd_gen->add_option("--seed", gen.spec.seed, "generator seed")->capture_default_str();
    cmd_gen->add_option("--out", gen.out, "output FASTA")->required();
    cmd_gen->add_option("--labels", gen.labels, "output labels TSV");
    cmd_gen->add_option("--calib-reads", gen.calib_reads, "calibration reads per genome")->capture_default_str();
    cmd_gen->add_option("--calib-out", gen.calib_out, "calibration FASTA");
    cmd_gen->add_option("--calib-labels", gen.calib_labels, "calibration labels TSV");

    FilterArgs filter;
    auto* cmd_filter = app.add_subcommand("filter", "truncate/drop reads and thin species");
    cmd_filter->add_option("--input", filter.input, "input FASTA/FASTQ")->required();
    cmd_filter->add_option("--labels", filter.labels, "labels TSV");
    cmd_filter->add_option("--max-len", filter.max_len, "truncate longer reads")->capture_default_str();
    cmd_filter->add_option("--min-len", filter.min_len, "drop shorter reads")->capture_default_str();
    cmd_filter->add_option("--min-per-species", filter.min_per_species, "drop thinner species (0/1 disables)")
        ->capture_default_str();
    cmd_filter->add_option("--out", filter.out, "output FASTA")->required();
    cmd_filter->add_option("--out-labels", filter.out_labels, "output labels TSV");

    ProfileArgs prof;
    auto* cmd_profile = app.add_subcommand("profile", "k-mer count profiles (TSV or .kbpf)");
    cmd_profile->add_option("--input", prof.input, "input FASTA/FASTQ")->required();
    cmd_profile->add_option("--k", prof.k, "k-mer length")->capture_default_str();
    cmd_profile->add_flag("--fold", prof.fold, "fold each k-mer with its reverse complement");
    cmd_profile->add_option("--out", prof.out, "output path (.kbpf for binary)")->required();

    CheckArgs check;
    auto* cmd_check = app.add_subcommand("check", "per-read profile identifiability verdicts");
    cmd_check->add_option("--input", check.input, "input FASTA/FASTQ")->required();
    cmd_check->add_option("--k", check.k, "k-mer length")->capture_default_str();
    cmd_check->add_option("--report", check.report, "verdicts TSV")->required();
    cmd_check->add_flag("--oracle", check.oracle, "cross-check against the exhaustive preimage oracle");
    cmd_check->add_option("--discrepancies", check.discrepancies, "discrepancy report TSV (with --oracle)");

    LipschitzArgs lip;
    auto* cmd_lip = app.add_subcommand("verify-lipschitz", "sample pairs and verify the profile distance bounds");
    cmd_lip->add_option("--input", lip.input, "input FASTA/FASTQ")->required();
    cmd_lip->add_option("--k", lip.k, "k-mer length")->capture_default_str();
    cmd_lip->add_option("--trials", lip.trials, "sampled trials")->capture_default_str();
    cmd_lip->add_option("--seed", lip.seed, "sampling seed")->capture_default_str();
    cmd_lip->add_option("--report", lip.report, "JSON report path");

    TrainPoisArgs tpois;
    auto* cmd_tpois = app.add_subcommand("train-pois", "train Poisson co-occurrence k-mer embeddings");
    cmd_tpois->add_option("--input", tpois.input, "input FASTA/FASTQ")->required();
    cmd_tpois->add_option("--k", tpois.k, "k-mer length")->capture_default_str();
    cmd_tpois->add_option("--dim", tpois.cfg.dim, "embedding dimension")->capture_default_str();
    cmd_tpois->add_option("--window", tpois.cfg.window, "co-occurrence window")->capture_default_str();
    cmd_tpois->add_option("--epochs", tpois.cfg.epochs, "full-batch epochs")->capture_default_str();
    cmd_tpois->add_option("--lr", tpois.cfg.learning_rate, "Adam learning rate")->capture_default_str();
    cmd_tpois->add_option("--reads-sampled", tpois.cfg.reads_sampled, "reads sampled for counting")
        ->capture_default_str();
    cmd_tpois->add_option("--seed", tpois.cfg.seed, "training seed")->capture_default_str();
    cmd_tpois->add_option("--out", tpois.out, "output KBEM")->required();

    TrainNlArgs tnl;
    auto* cmd_tnl = app.add_subcommand("train-nl", "train the contrastive two-layer embedder");
    cmd_tnl->add_option("--input", tnl.input, "input FASTA/FASTQ")->required();
    cmd_tnl->add_option("--k", tnl.cfg.k, "k-mer length")->capture_default_str();
    cmd_tnl->add_option("--epochs", tnl.cfg.epochs, "epochs")->capture_default_str();
    cmd_tnl->add_option("--batch", tnl.cfg.minibatch, "minibatch size in pairs")->capture_default_str();
    cmd_tnl->add_option("--neg", tnl.cfg.negatives_per_positive, "negatives per positive")->capture_default_str();
    cmd_tnl->add_option("--loss", tnl.loss, "bernoulli|poisson|hinge")->capture_default_str();
    cmd_tnl->add_option("--lr", tnl.cfg.learning_rate, "Adam learning rate")->capture_default_str();
    cmd_tnl->add_option("--dropout", tnl.cfg.dropout, "dropout ratio")->capture_default_str();
    cmd_tnl->add_option("--hidden", tnl.cfg.hidden, "hidden width")->capture_default_str();
    cmd_tnl->add_option("--dim", tnl.cfg.output_dim, "output embedding dimension")->capture_default_str();
    cmd_tnl->add_flag("--raw-counts", tnl.cfg.raw_counts, "feed raw counts instead of frequencies");
    cmd_tnl->add_option("--seed", tnl.cfg.seed, "training seed")->capture_default_str();
    cmd_tnl->add_option("--out", tnl.out, "output KBNL")->required();

    EmbedArgs embed;
    auto* cmd_embed = app.add_subcommand("embed", "embed reads with a trained model (or raw profiles)");
    cmd_embed->add_option("--model", embed.model, "KBNL model, KBEM k-mer embeddings, or 'raw'")->required();
    cmd_embed->add_option("--input", embed.input, "input FASTA/FASTQ")->required();
    cmd_embed->add_option("--k", embed.k, "k-mer length (raw model only)")->capture_default_str();
    cmd_embed->add_flag("--raw-counts", embed.raw_counts, "match a model trained with --raw-counts");
    cmd_embed->add_flag("--halves", embed.halves, "average the two half embeddings instead of embedding whole reads");
    cmd_embed->add_option("--out", embed.out, "output KBEM (+ .ids sidecar)")->required();

    BinArgs bin;
    auto* cmd_bin = app.add_subcommand("bin", "threshold-medoid clustering of embeddings");
    cmd_bin->add_option("--emb", bin.emb, "read embeddings KBEM (with .ids sidecar)")->required();
    cmd_bin->add_option("--sim", bin.sim, "cosine|expl1|negeuclid")->capture_default_str();
    auto* thr = cmd_bin->add_option("--threshold", bin.threshold, "similarity threshold");
    cmd_bin->add_option("--calib", bin.calib, "calibration embeddings KBEM");
    cmd_bin->add_option("--calib-labels", bin.calib_labels, "calibration labels TSV");
    cmd_bin->add_option("--percentile", bin.percentile, "calibration percentile")->capture_default_str();
    cmd_bin->add_option("--max-iter", bin.max_iter, "outer iteration cap")->capture_default_str();
    cmd_bin->add_option("--out", bin.out, "assignments TSV")->required();

    EvalArgs eval;
    auto* cmd_eval = app.add_subcommand("eval", "score cluster assignments against ground truth");
    cmd_eval->add_option("--assignments", eval.assignments, "assignments TSV")->required();
    cmd_eval->add_option("--truth", eval.truth, "ground-truth labels TSV")->required();
    cmd_eval->add_option("--report", eval.report, "JSON report")->required();

    PipelineArgs pipe;
    auto* cmd_pipe = app.add_subcommand("pipeline", "gen -> train -> embed -> bin -> eval in one run");
    cmd_pipe->add_option("--outdir", pipe.outdir, "output directory")->required();
    cmd_pipe->add_option("--seed", pipe.spec.seed, "seed for every stage")->capture_default_str();
    cmd_pipe->add_option("--model", pipe.model, "kmer-cosine|kmer-l1|pois|nl")->capture_default_str();
    cmd_pipe->add_option("--genomes", pipe.spec.genome_count, "number of genomes")->capture_default_str();
    cmd_pipe->add_option("--glen", pipe.spec.genome_length, "genome length")->capture_default_str();
    cmd_pipe->add_option("--reads", pipe.spec.reads_per_genome, "reads per genome")->capture_default_str();
    cmd_pipe->add_option("--calib-reads", pipe.calib_reads, "calibration reads per genome")->capture_default_str();
    cmd_pipe->add_option("--rlen", pipe.spec.read_length, "read length")->capture_default_str();
    cmd_pipe->add_option("--order", pipe.spec.markov_order, "Markov order")->capture_default_str();
    cmd_pipe->add_option("--k", pipe.k, "k-mer length")->capture_default_str();
    cmd_pipe->add_option("--epochs", pipe.nl_epochs, "nl training epochs")->capture_default_str();
    cmd_pipe->add_option("--batch", pipe.nl_batch, "nl minibatch size")->capture_default_str();
    cmd_pipe->add_option("--neg", pipe.nl_neg, "nl negatives per positive")->capture_default_str();
    cmd_pipe->add_option("--loss", pipe.loss, "nl loss")->capture_default_str();
    cmd_pipe->add_option("--pois-epochs", pipe.pois_epochs, "pois epochs")->capture_default_str();
    cmd_pipe->add_option("--pois-dim", pipe.pois_dim, "pois embedding dimension")->capture_default_str();
    cmd_pipe->add_option("--lr", pipe.lr, "learning rate")->capture_default_str();
    cmd_pipe->add_option("--percentile", pipe.percentile, "calibration percentile")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage errors are exit 1; --help/--version exit 0
    }
    kbin::set_thread_cap(threads);
    bin.have_threshold = thr->count() > 0;

    try {
        kbin::RunManifest manifest(app.get_subcommands().front()->get_name());
        manifest.set_argv(argc, argv);
        manifest.config("threads", threads);
        if (cmd_gen->parsed()) return run_gen(gen, manifest);
        if (cmd_filter->parsed()) return run_filter(filter, manifest);
        if (cmd_profile->parsed()) return run_profile(prof, manifest);
        if (cmd_check->parsed()) return run_check(check, manifest);
        if (cmd_lip->parsed()) return run_lipschitz(lip, manifest);
        if (cmd_tpois->parsed()) return run_train_pois(tpois, manifest);
        if (cmd_tnl->parsed()) return run_train_nl(tnl, manifest);
        if (cmd_embed->parsed()) return run_embed(embed, manifest);
        if (cmd_bin->parsed()) return run_bin(bin, manifest);
        if (cmd_eval->parsed()) return run_eval(eval, manifest);
        if (cmd_pipe->parsed()) return run_pipeline(pipe, manifest);
    } catch (const kbin::NumericalError& e) {
        std::cerr << "kbin: numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const kbin::DataError& e) {
        std::cerr << "kbin: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "kbin: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
