// End-to-end checks of the kbin binary: exit codes, file outputs, manifests.
// The binary path arrives as argv[1] from ctest.

#include <gtest/gtest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

std::string g_kbin;

struct CliResult {
    int exit_code;
    std::string stdout_text;
};

CliResult run(const std::string& args) {
    const auto out_path = fs::temp_directory_path() / "kbin_cli_out.txt";
    const std::string cmd = g_kbin + " " + args + " > " + out_path.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(out_path);
    std::stringstream buf;
    buf << in.rdbuf();
    return {WEXITSTATUS(status), buf.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("kbin_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

TEST_F(CliTest, HelpAndVersion) {
    EXPECT_EQ(run("--help").exit_code, 0);
    const auto version = run("--version");
    EXPECT_EQ(version.exit_code, 0);
    EXPECT_NE(version.stdout_text.find("KBNL"), std::string::npos);
}

TEST_F(CliTest, UnknownFlagIsUsageError) {
    EXPECT_EQ(run("profile --no-such-flag").exit_code, 1);
}

TEST_F(CliTest, MissingFileIsDataError) {
    EXPECT_EQ(run("bin --emb " + path("missing.kbem") + " --threshold 0 --out " + path("a.tsv")).exit_code, 2);
    EXPECT_EQ(run("profile --input " + path("missing.fasta") + " --out " + path("p.tsv")).exit_code, 2);
}

TEST_F(CliTest, GenIsSeedDeterministic) {
    const std::string args = "gen --genomes 2 --glen 600 --reads 3 --rlen 100 --seed 11 --labels ";
    ASSERT_EQ(run(args + path("a.tsv") + " --out " + path("a.fasta")).exit_code, 0);
    ASSERT_EQ(run(args + path("b.tsv") + " --out " + path("b.fasta")).exit_code, 0);
    EXPECT_EQ(slurp(path("a.fasta")), slurp(path("b.fasta")));
    EXPECT_EQ(slurp(path("a.tsv")), slurp(path("b.tsv")));
    EXPECT_TRUE(fs::exists(path("a.fasta.manifest.json")));
}

TEST_F(CliTest, ProfileTsvHas4kColumns) {
    ASSERT_EQ(run("gen --genomes 1 --glen 500 --reads 2 --rlen 60 --seed 1 --out " + path("r.fasta")).exit_code, 0);
    ASSERT_EQ(run("profile --input " + path("r.fasta") + " --k 4 --out " + path("p.tsv")).exit_code, 0);
    std::ifstream in(path("p.tsv"));
    std::string header;
    std::getline(in, header);
    std::size_t tabs = 0;
    for (const char c : header) tabs += c == '\t' ? 1 : 0;
    EXPECT_EQ(tabs, 256u);  // read_id plus 256 k-mer columns
}

TEST_F(CliTest, CheckWritesVerdicts) {
    std::ofstream fasta(path("r.fasta"));
    fasta << ">ident\nACGT\n>rot\nACGTAC\n";
    fasta.close();
    ASSERT_EQ(run("check --input " + path("r.fasta") + " --k 3 --report " + path("v.tsv")).exit_code, 0);
    const auto report = slurp(path("v.tsv"));
    EXPECT_NE(report.find("ident\t1"), std::string::npos);
    EXPECT_NE(report.find("rot\t0\t1"), std::string::npos);
}

TEST_F(CliTest, FullPipelineSubcommandsChain) {
    ASSERT_EQ(run("gen --genomes 3 --glen 4000 --reads 12 --rlen 400 --seed 3 --out " + path("eval.fasta") +
                  " --labels " + path("eval.tsv") + " --calib-reads 6 --calib-out " + path("calib.fasta") +
                  " --calib-labels " + path("calib.tsv"))
                  .exit_code,
              0);
    ASSERT_EQ(run("embed --model raw --k 4 --input " + path("eval.fasta") + " --out " + path("eval.kbem")).exit_code, 0);
    ASSERT_EQ(run("embed --model raw --k 4 --input " + path("calib.fasta") + " --out " + path("calib.kbem")).exit_code,
              0);
    ASSERT_EQ(run("bin --emb " + path("eval.kbem") + " --sim cosine --calib " + path("calib.kbem") +
                  " --calib-labels " + path("calib.tsv") + " --out " + path("assign.tsv"))
                  .exit_code,
              0);
    ASSERT_EQ(run("eval --assignments " + path("assign.tsv") + " --truth " + path("eval.tsv") + " --report " +
                  path("report.json"))
                  .exit_code,
              0);
    const auto report = slurp(path("report.json"));
    EXPECT_NE(report.find("\"species_count\": 3"), std::string::npos);
    EXPECT_NE(report.find("detected_high_quality"), std::string::npos);
    EXPECT_TRUE(fs::exists(path("report.json.manifest.json")));
}

TEST_F(CliTest, PoissonModelChain) {
    ASSERT_EQ(run("gen --genomes 2 --glen 3000 --reads 10 --rlen 300 --seed 9 --out " + path("r.fasta") +
                  " --labels " + path("r.tsv"))
                  .exit_code,
              0);
    ASSERT_EQ(run("train-pois --input " + path("r.fasta") + " --k 2 --dim 8 --window 4 --epochs 25 --seed 9 --out " +
                  path("emb.kbem"))
                  .exit_code,
              0);
    ASSERT_EQ(run("embed --model " + path("emb.kbem") + " --input " + path("r.fasta") + " --out " +
                  path("reads.kbem"))
                  .exit_code,
              0);
    ASSERT_EQ(run("bin --emb " + path("reads.kbem") + " --sim negeuclid --threshold -1e9 --out " + path("a.tsv"))
                  .exit_code,
              0);
    std::ifstream in(path("a.tsv"));
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 20u);
}

TEST_F(CliTest, CheckAgainstOracleWritesNoDiscrepancies) {
    std::ofstream fasta(path("r.fasta"));
    fasta << ">a\nACGTACGT\n>b\nAAAACCCC\n>c\nACACACAC\n";
    fasta.close();
    const auto result = run("check --input " + path("r.fasta") + " --k 3 --oracle --discrepancies " +
                            path("d.tsv") + " --report " + path("v.tsv"));
    EXPECT_EQ(result.exit_code, 0);
    EXPECT_NE(result.stdout_text.find("oracle disagreements: 0"), std::string::npos);
}

TEST_F(CliTest, FastqInputAccepted) {
    std::ofstream fastq(path("r.fastq"));
    fastq << "@q1\nACGTACGT\n+\nIIIIIIII\n";
    fastq.close();
    ASSERT_EQ(run("profile --input " + path("r.fastq") + " --k 2 --out " + path("p.tsv")).exit_code, 0);
    const auto tsv = slurp(path("p.tsv"));
    EXPECT_NE(tsv.find("q1"), std::string::npos);
}

TEST_F(CliTest, VerifyLipschitzReportsZeroViolations) {
    ASSERT_EQ(run("gen --genomes 2 --glen 2000 --reads 10 --rlen 80 --seed 5 --out " + path("r.fasta")).exit_code, 0);
    const auto result = run("verify-lipschitz --input " + path("r.fasta") + " --k 3 --trials 200 --seed 2");
    EXPECT_EQ(result.exit_code, 0);
    EXPECT_NE(result.stdout_text.find("violations=0"), std::string::npos);
}

TEST_F(CliTest, FilterAppliesRules) {
    std::ofstream fasta(path("r.fasta"));
    fasta << ">short\n" << std::string(100, 'A') << "\n>keep\n" << std::string(3000, 'C') << "\n";
    fasta.close();
    ASSERT_EQ(
        run("filter --input " + path("r.fasta") + " --min-per-species 0 --out " + path("f.fasta")).exit_code, 0);
    const auto out = slurp(path("f.fasta"));
    EXPECT_EQ(out.find(">short"), std::string::npos);
    EXPECT_NE(out.find(">keep"), std::string::npos);
}

}  // namespace

int main(int argc, char** argv) {
    ::testing::InitGoogleTest(&argc, argv);
    if (argc < 2) {
        std::fprintf(stderr, "usage: test_cli <path-to-kbin>\n");
        return 2;
    }
    g_kbin = argv[1];
    return RUN_ALL_TESTS();
}
