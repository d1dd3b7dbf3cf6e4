#include <gtest/gtest.h>

#include <sstream>

#include "pipewright/evaluation.hpp"
#include "pipewright/pipeline_io.hpp"
#include "pipewright/tools/cli.hpp"
#include "support.hpp"

using namespace pipewright;
using json = nlohmann::json;
namespace fs = std::filesystem;
using pw_test::fixture_path;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pipewright");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = tools::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string fx(const std::string& name) { return fixture_path(name).string(); }

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("pipewright-cli-" + std::to_string(::getpid()) + "-" + name);
}

}  // namespace

TEST(Cli, ValidateExitCodes) {
  auto ok = cli({"validate", fx("figure1.json")});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_TRUE(json::parse(ok.out)["is_valid"].get<bool>());
  auto bad = cli({"validate", fx("codes/dup_output.json")});
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(json::parse(bad.out)["issues"][0]["code"], "DUP_OUTPUT");
  auto quiet = cli({"validate", "-q", fx("fig9c.json")});
  EXPECT_EQ(quiet.code, 1);
  EXPECT_TRUE(quiet.out.empty());
  EXPECT_EQ(cli({"validate", fx("figure1.dot")}).code, 0);
}

TEST(Cli, FixWritesTheRepairedPipeline) {
  const auto out = temp_file("fixed.json");
  auto r = cli({"fix", fx("fig5a.json"), "-o", out.string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("fixed DUP_OUTPUT"), std::string::npos);
  EXPECT_EQ(cli({"validate", "-q", out.string()}).code, 0);
  fs::remove(out);
}

TEST(Cli, MetricsOnFixtures) {
  auto same = cli({"ged", fx("figure1.json"), fx("figure1.dot")});
  ASSERT_EQ(same.code, 0) << same.err;
  EXPECT_EQ(json::parse(same.out)["distance"], 0.0);
  auto em = cli({"em", fx("fig9b.json"), fx("fig9d.json")});
  EXPECT_FALSE(json::parse(em.out)["exact_match"].get<bool>());
  auto d = cli({"ged", fx("fig9b.json"), fx("fig9d.json")});
  EXPECT_EQ(json::parse(d.out)["distance"], 3.0);
  // Global options may follow the subcommand.
  auto scaled = cli({"ged", fx("fig9b.json"), fx("fig9d.json"), "--time-budget", "5"});
  EXPECT_EQ(scaled.code, 0) << scaled.err;
}

TEST(Cli, EvalReproducesTheGoldenReport) {
  auto r = cli({"eval", "--dataset", fx("corpus.jsonl"), "--generated", fx("generated.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, pw_test::read_text(fixture_path("golden_report.json")));
}

TEST(Cli, SynthIsDeterministic) {
  auto a = cli({"synth", "--n-nodes", "4", "--count", "3", "--seed", "9"});
  auto b = cli({"synth", "--n-nodes", "4", "--count", "3", "--seed", "9"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  std::istringstream in(a.out);
  auto entries = read_dataset(in, FunctionCatalog::builtin());
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_EQ(entries[2].id, "syn-4-11");
  for (const auto& e : entries) {
    EXPECT_TRUE(validate(e.reference, FunctionCatalog::builtin()).is_valid());
    EXPECT_EQ(e.provenance, Provenance::Synthetic);
  }
}

TEST(Cli, BuildReplaysATranscript) {
  const auto out = temp_file("built.json");
  auto r = cli({"build", "--query", pw_test::kFigure9Query, "--answer", pw_test::kFigure9Answer1, "--answer",
                pw_test::kFigure9Answer2, "--transcript", fx("transcripts/figure9.json"), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto em = cli({"em", out.string(), fx("fig9d.json")});
  EXPECT_TRUE(json::parse(em.out)["exact_match"].get<bool>());

  // Too few answers: the clarifier's second question goes unanswered.
  auto short_run = cli({"build", "--query", pw_test::kFigure9Query, "--answer", pw_test::kFigure9Answer1,
                        "--transcript", fx("transcripts/figure9.json"), "--out", out.string()});
  EXPECT_EQ(short_run.code, 1);
  EXPECT_NE(short_run.err.find("no --answer is left"), std::string::npos);
  fs::remove(out);
}

TEST(Cli, UsageErrors) {
  EXPECT_NE(cli({}).code, 0);
  EXPECT_NE(cli({"validate"}).code, 0);
  EXPECT_NE(cli({"validate", "/nonexistent.json"}).code, 0);
  EXPECT_NE(cli({"synth", "--n-nodes", "0"}).code, 0);
  EXPECT_NE(cli({"em", fx("figure1.json"), fx("figure1.json"), "--threshold", "3"}).code, 0);
  auto help = cli({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("validate"), std::string::npos);
}
