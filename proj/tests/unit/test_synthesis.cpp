#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "pipewright/llm_gateway.hpp"
#include "pipewright/pipeline_io.hpp"
#include "pipewright/synthesis.hpp"
#include "pipewright/validator.hpp"
#include "support.hpp"

using namespace pipewright;

namespace {

const FunctionCatalog& cat() { return FunctionCatalog::builtin(); }

std::map<std::string, int> out_degree(const Pipeline& p) {
  std::map<std::string, int> d;
  for (const auto& e : p.edges) ++d[e.from.node];
  return d;
}

}  // namespace

TEST(Synthesis, HundredPipelinesValidateRespectBoundAndRoundTrip) {
  for (int i = 0; i < 100; ++i) {
    SynthesisConfig c;
    c.n_function_nodes = 1 + i % 8;
    c.n_inputs = 1 + (i / 8) % 2;
    c.seed = 1000 + static_cast<std::uint64_t>(i);
    Pipeline p = expand_pipeline(c);
    auto r = validate(p, cat());
    EXPECT_TRUE(r.is_valid()) << report_to_json(r).dump() << serialize_pipeline_json(p);
    EXPECT_EQ(static_cast<int>(p.nodes_of_kind(NodeKind::Function).size()), c.n_function_nodes);
    EXPECT_EQ(static_cast<int>(p.nodes_of_kind(NodeKind::Input).size()), c.n_inputs);
    for (const auto& [node, d] : out_degree(p)) EXPECT_LE(d, c.max_children) << node;
    const std::string text = serialize_pipeline_json(p);
    EXPECT_EQ(serialize_pipeline_json(parse_pipeline_json(text, cat())), text);
  }
}

TEST(Synthesis, SameSeedSamePipeline) {
  SynthesisConfig c;
  c.n_function_nodes = 5;
  c.seed = 42;
  EXPECT_EQ(expand_pipeline(c), expand_pipeline(c));
  SynthesisConfig d = c;
  d.seed = 43;
  int differ = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    d.seed = s;
    differ += !(expand_pipeline(d) == expand_pipeline(c));
  }
  EXPECT_GT(differ, 5);
}

TEST(Synthesis, TighterChildBoundHolds) {
  for (std::uint64_t s = 0; s < 40; ++s) {
    SynthesisConfig c;
    c.n_function_nodes = 4;
    c.max_children = 1;
    c.seed = s;
    Pipeline p = expand_pipeline(c);
    for (const auto& [node, d] : out_degree(p)) EXPECT_LE(d, 1) << node;
    EXPECT_TRUE(validate(p, cat()).is_valid());
  }
}

TEST(Synthesis, LanguagesFollowThePorts) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    SynthesisConfig c;
    c.n_function_nodes = 3;
    c.seed = s;
    Pipeline p = expand_pipeline(c);
    for (const auto& n : p.nodes) {
      if (n.function_id != "machine_translation") continue;
      EXPECT_NE(n.params.at("source_language"), n.params.at("target_language"));
    }
  }
}

TEST(Synthesis, RejectsBadConfig) {
  SynthesisConfig c;
  c.n_function_nodes = 0;
  EXPECT_THROW(expand_pipeline(c), Error);
  c = {};
  c.max_children = 0;
  EXPECT_THROW(expand_pipeline(c), Error);
}

TEST(Synthesis, Figure1SpecificationMatchesTheExampleTable) {
  Specification s = specification_from_pipeline(pw_test::load_fixture("figure1.json"));
  ASSERT_EQ(s.inputs().size(), 1u);
  ASSERT_EQ(s.outputs().size(), 3u);
  EXPECT_EQ(s.inputs()[0]->modality, Modality::Video);
  EXPECT_EQ(s.inputs()[0]->language, "en");
  EXPECT_EQ(s.inputs()[0]->name, "English video");
  std::set<std::string> langs;
  for (const auto* r : s.outputs()) {
    EXPECT_EQ(r->modality, Modality::Audio);
    langs.insert(*r->language);
  }
  EXPECT_EQ(langs, (std::set<std::string>{"fr", "de", "es"}));
  EXPECT_NE(describe_specification(s).find("- input English video: video, language en"), std::string::npos);
}

TEST(Synthesis, AmbiguityVerdicts) {
  EXPECT_EQ(parse_ambiguity_verdict("Unambiguous."), AmbiguityLevel::Unambiguous);
  EXPECT_EQ(parse_ambiguity_verdict("ambiguous"), AmbiguityLevel::Ambiguous);
  EXPECT_EQ(parse_ambiguity_verdict("Very ambiguous: languages missing"), AmbiguityLevel::VeryAmbiguous);
  EXPECT_EQ(parse_ambiguity_verdict("very_ambiguous"), AmbiguityLevel::VeryAmbiguous);
  EXPECT_FALSE(parse_ambiguity_verdict("no idea"));
  EXPECT_EQ(ambiguity_from_string(to_string(AmbiguityLevel::VeryAmbiguous)), AmbiguityLevel::VeryAmbiguous);
}

TEST(Synthesis, QueriesAndRatingComeFromTheUtilityModel) {
  auto llm = ScriptedGateway::from_responses(
      {"I want my English video dubbed into French, German and Spanish audio.", "I want my video dubbed.",
       "ambiguous"});
  Pipeline p = pw_test::load_fixture("figure1.json");
  auto q = generate_spec_and_queries(p, llm);
  EXPECT_EQ(q.clear_query, "I want my English video dubbed into French, German and Spanish audio.");
  EXPECT_EQ(q.ambiguous_query, "I want my video dubbed.");
  EXPECT_EQ(q.specification, specification_from_pipeline(p));
  EXPECT_EQ(rate_ambiguity(q.ambiguous_query, llm), AmbiguityLevel::Ambiguous);
  auto reqs = llm.requests();
  ASSERT_EQ(reqs.size(), 3u);
  EXPECT_NE(reqs[0].messages.back().content.find("speech_recognition"), std::string::npos);
  EXPECT_NE(reqs[1].messages.back().content.find("dubbed into French"), std::string::npos);
  EXPECT_NE(reqs[2].messages.back().content.find("I want my video dubbed."), std::string::npos);
  for (const auto& r : reqs) EXPECT_EQ(r.model, "utility");

  auto bad = ScriptedGateway::from_responses({"maybe?"});
  EXPECT_THROW(rate_ambiguity("x", bad), Error);
}

TEST(Synthesis, DatasetJsonlRoundTrips) {
  std::vector<DatasetEntry> entries;
  for (int i = 0; i < 5; ++i) {
    SynthesisConfig c;
    c.n_function_nodes = 1 + i;
    c.seed = static_cast<std::uint64_t>(i);
    DatasetEntry e;
    e.id = "e" + std::to_string(i);
    e.reference = expand_pipeline(c);
    e.specification = specification_from_pipeline(e.reference);
    e.clear_query = "clear " + std::to_string(i);
    e.ambiguous_query = "vague";
    e.ambiguity_level = static_cast<AmbiguityLevel>(i % 3);
    entries.push_back(e);
  }
  std::ostringstream out;
  write_dataset(out, entries);
  std::istringstream in(out.str());
  EXPECT_EQ(read_dataset(in, cat()), entries);

  std::istringstream bad(out.str() + "{\"id\": 3}\n");
  try {
    read_dataset(bad, cat());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 6"), std::string::npos) << e.what();
  }
}
