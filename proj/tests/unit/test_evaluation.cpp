#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pipewright/evaluation.hpp"
#include "support.hpp"

using namespace pipewright;
using pw_test::fixture_path;

namespace {

const FunctionCatalog& cat() { return FunctionCatalog::builtin(); }

std::vector<DatasetEntry> corpus() { return read_dataset_file(fixture_path("corpus.jsonl").string(), cat()); }
std::vector<GeneratedPipeline> generated() {
  return read_generated_file(fixture_path("generated.jsonl").string(), cat());
}

double round4(double x) { return std::round(x * 1e4) / 1e4; }

}  // namespace

TEST(Evaluation, SizeBins) {
  EXPECT_EQ(size_bin(1), "1-5");
  EXPECT_EQ(size_bin(5), "1-5");
  EXPECT_EQ(size_bin(6), "6-10");
  EXPECT_EQ(size_bin(12), "11-15");
  EXPECT_EQ(size_bin(12, 4), "9-12");
  EXPECT_EQ(size_bin(0), "0");
}

TEST(Evaluation, CorpusHasAtLeastTenEntriesOfBothProvenances) {
  auto c = corpus();
  EXPECT_GE(c.size(), 10u);
  std::set<Provenance> seen;
  std::set<AmbiguityLevel> levels;
  for (const auto& e : c) {
    seen.insert(e.provenance);
    levels.insert(e.ambiguity_level);
    EXPECT_TRUE(validate(e.reference, cat()).is_valid()) << e.id;
  }
  EXPECT_EQ(seen.size(), 2u);
  EXPECT_EQ(levels.size(), 3u);
}

TEST(Evaluation, GoldenReportIsByteIdentical) {
  auto report = evaluate_dataset(corpus(), generated(), MatchConfig{});
  const std::string first = evaluation_to_json(report).dump(2) + "\n";
  const std::string again = evaluation_to_json(evaluate_dataset(corpus(), generated(), MatchConfig{})).dump(2) + "\n";
  EXPECT_EQ(first, again);
  EXPECT_EQ(first, pw_test::read_text(fixture_path("golden_report.json")));
}

TEST(Evaluation, AggregatesFollowFromPerPairRecords) {
  auto entries = corpus();
  auto r = evaluate_dataset(entries, generated(), MatchConfig{});
  ASSERT_EQ(r.records.size(), entries.size());
  double em = 0, g = 0;
  std::map<std::string, std::pair<int, double>> amb;
  for (const auto& rec : r.records) {
    em += rec.exact_match;
    g += rec.ged.normalized;
    // EM pairs are exactly the zero-distance ones here (no timeouts).
    EXPECT_EQ(rec.exact_match, rec.ged.distance == 0.0) << rec.id;
    amb[std::string(to_string(rec.ambiguity))].first += 1;
    amb[std::string(to_string(rec.ambiguity))].second += rec.ged.normalized;
  }
  const double n = static_cast<double>(r.records.size());
  EXPECT_NEAR(r.em_percent, 100.0 * em / n, 1e-9);
  EXPECT_NEAR(r.ged_percent, 100.0 * g / n, 1e-9);
  for (const auto& [level, agg] : amb) {
    EXPECT_EQ(r.by_ambiguity.at(level).n, static_cast<std::size_t>(agg.first));
    EXPECT_NEAR(r.by_ambiguity.at(level).ged_percent, 100.0 * agg.second / agg.first, 1e-9);
  }
  auto j = evaluation_to_json(r);
  EXPECT_EQ(j["em_percent"].get<double>(), round4(r.em_percent));
  EXPECT_EQ(j["n"], entries.size());
}

TEST(Evaluation, DubbingPairIsSixEditsAwayFromFigure1) {
  auto r = evaluate_dataset(corpus(), generated(), MatchConfig{});
  for (const auto& rec : r.records) {
    if (rec.id != "man-dubbing") continue;
    EXPECT_EQ(rec.ged.distance, 6.0);  // one branch (3 nodes, 3 edges) missing
    EXPECT_NEAR(rec.ged.normalized, 6.0 / 23.0, 1e-12);
    EXPECT_EQ(rec.size_bin, "11-15");
    return;
  }
  FAIL() << "man-dubbing missing";
}

TEST(Evaluation, IdSetsMustAgree) {
  auto entries = corpus();
  auto gen = generated();
  gen.pop_back();
  EXPECT_THROW(evaluate_dataset(entries, gen, MatchConfig{}), Error);
  gen = generated();
  gen.push_back(gen.front());
  EXPECT_THROW(evaluate_dataset(entries, gen, MatchConfig{}), Error);
}

TEST(Evaluation, GeneratedJsonlRoundTrips) {
  auto gen = generated();
  std::ostringstream out;
  write_generated(out, gen);
  std::istringstream in(out.str());
  auto back = read_generated(in, cat());
  ASSERT_EQ(back.size(), gen.size());
  for (std::size_t i = 0; i < gen.size(); ++i) {
    EXPECT_EQ(back[i].id, gen[i].id);
    EXPECT_EQ(back[i].pipeline, gen[i].pipeline);
  }
  std::istringstream bad("{\"id\": \"x\"}\n");
  EXPECT_THROW(read_generated(bad, cat()), ParseError);
}
