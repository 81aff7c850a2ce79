#include "eventcast/io.hpp"
#include "eventcast/text.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <array>
#include <cstdio>
#include <sys/wait.h>

namespace {

struct CliRun {
    int code = -1;
    std::string out;
};

CliRun run(const std::string& args) {
    const std::string cmd = std::string(EVENTCAST_CLI) + " " + args + " 2>/dev/null";
    CliRun r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<std::vector<std::string>> rows(const std::string& csv) {
    std::vector<std::vector<std::string>> out;
    for (const auto& line : eventcast::text::split(csv, '\n'))
        if (!line.empty()) out.push_back(eventcast::text::split(line, ','));
    return out;
}

/// Tiny generated dataset and trained checkpoint shared by the tests below.
class CliFixture : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = ectest::scratch("cli").string();
        eventcast::io::write_file_atomic(dir_ + "/scenario.json",
                                         R"({"countries": 1, "regions_per_country": 2, "days": 90})");
        eventcast::io::write_file_atomic(
            dir_ + "/train.json",
            R"({"model": {"d_align": 8, "heads": 1, "d_k": 4, "d_m": 4, "layers": 1},
                "train": {"epochs": 2, "batch_size": 32}})");
        gen_ = run("gen-data --config " + dir_ + "/scenario.json --out " + dir_ + "/data");
        train_ = run("train --config " + dir_ + "/train.json --data " + dir_ + "/data/dataset.csv --db " + dir_ +
                     "/data/db --out " + dir_ + "/ckpt");
    }
    static std::string dir_;
    static CliRun gen_, train_;
};

std::string CliFixture::dir_;
CliRun CliFixture::gen_;
CliRun CliFixture::train_;

} // namespace

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("no-such-command").code, 2);
    EXPECT_EQ(run("reason --country 01").code, 2);
    EXPECT_EQ(run("gen-data --lambda 1.5 --out /tmp/x").code, 2);
    EXPECT_EQ(run("gen-data").code, 2);
    EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, DataErrorsExitThree) {
    EXPECT_EQ(run("reason --db /nonexistent --country 01 --date 2025-03-23").code, 3);
    EXPECT_EQ(run("reason --db " + ectest::fixture("reference_db").string() + " --country 01 --date 2025-13-01").code, 3);
    EXPECT_EQ(run("reason --strict --db " + ectest::fixture("reference_db").string() + " --country 77 --date 2025-03-23")
                  .code,
              3);
}

TEST(Cli, ReasonPrintsWorkedExample) {
    auto dir = ectest::scratch("cli_reason");
    auto db = ectest::worked_example_db();
    eventcast::save_database(db, dir);
    auto r = run("reason --db " + dir.string() + " --country 01 --date 2025-03-23");
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("<result>" + ectest::kWorkedSummary + "</result>"), std::string::npos);
    EXPECT_NE(r.out.find("5: campaign level 12"), std::string::npos);
    EXPECT_NE(r.out.find("8: demand surge"), std::string::npos);
}

TEST(Cli, PromptAndParse) {
    auto fx = ectest::fixture("reference_db").string();
    auto p = run("prompt --db " + fx + " --country 01 --date 2025-03-14");
    ASSERT_EQ(p.code, 0);
    EXPECT_NE(p.out.find("Flash Deal Friday"), std::string::npos);
    auto dir = ectest::scratch("cli_parse");
    eventcast::io::write_file_atomic(dir / "r.txt", "x <result>A; B ;c</result>");
    auto parsed = run("parse " + (dir / "r.txt").string() + " -k 3");
    ASSERT_EQ(parsed.code, 0);
    EXPECT_EQ(parsed.out, "a\nb\nc\n");
    EXPECT_EQ(run("parse " + (dir / "r.txt").string() + " -k 4").code, 3);
}

TEST_F(CliFixture, GenerateAndTrain) {
    ASSERT_EQ(gen_.code, 0);
    ASSERT_EQ(train_.code, 0);
    for (const char* f : {"model.manifest", "model.tensors", "model.vocab", "train_log.csv", "run_manifest.json"})
        EXPECT_TRUE(std::filesystem::exists(dir_ + "/ckpt/" + f)) << f;
    auto log = rows(eventcast::io::read_file(dir_ + "/ckpt/train_log.csv"));
    ASSERT_EQ(log.size(), 3u);
    EXPECT_EQ(log[0], (std::vector<std::string>{"epoch", "loss"}));
    auto man = nlohmann::json::parse(eventcast::io::read_file(dir_ + "/ckpt/run_manifest.json"));
    EXPECT_EQ(man["subcommand"], "train");
    EXPECT_TRUE(man["artifacts"].contains("model.tensors"));
}

TEST_F(CliFixture, ForecastLambdaEndpoints) {
    ASSERT_EQ(train_.code, 0);
    const std::string base = "forecast --checkpoint " + dir_ + "/ckpt --data " + dir_ + "/data/dataset.csv --db " +
                             dir_ + "/data/db --country 01 --region R02 --origin 2023-03-01";
    auto one = run(base + " --lambda 1");
    auto zero = run(base + " --lambda 0");
    ASSERT_EQ(one.code, 0);
    ASSERT_EQ(zero.code, 0);
    auto a = rows(one.out), b = rows(zero.out);
    ASSERT_EQ(a.size(), 5u);
    EXPECT_EQ(a[0], (std::vector<std::string>{"horizon", "date", "trend", "event", "forecast"}));
    EXPECT_EQ(a[1][1], "2023-03-02");
    for (std::size_t i = 1; i < 5; ++i) {
        EXPECT_EQ(a[i][4], a[i][2]);
        EXPECT_EQ(b[i][4], b[i][3]);
        EXPECT_EQ(a[i][2], b[i][2]);
    }
    EXPECT_EQ(run(base + " --lambda 2").code, 2);
    EXPECT_EQ(run("forecast --checkpoint " + dir_ + "/ckpt --data " + dir_ + "/data/dataset.csv --db " + dir_ +
                  "/data/db --country 01 --region R09 --origin 2023-03-01")
                  .code,
              3);
}

TEST_F(CliFixture, EvaluateAndSweep) {
    ASSERT_EQ(train_.code, 0);
    const std::string common = " --checkpoint " + dir_ + "/ckpt --data " + dir_ + "/data/dataset.csv --db " + dir_ + "/data/db";
    auto ev = run("evaluate" + common + " --out " + dir_ + "/eval");
    ASSERT_EQ(ev.code, 0);
    auto rep = rows(eventcast::io::read_file(dir_ + "/eval/report.csv"));
    EXPECT_EQ(rep.size(), 9u);
    EXPECT_TRUE(std::filesystem::exists(dir_ + "/eval/seasonal_naive.csv"));
    auto sw = run("sweep-lambda" + common + " --grid 0,0.5,1 --out " + dir_ + "/sweep");
    ASSERT_EQ(sw.code, 0);
    EXPECT_EQ(rows(sw.out).size(), 1u + 3 * 4 * 2);
}
