#include <gtest/gtest.h>

#include <random>

#include "pipewright/error.hpp"
#include "pipewright/pipeline_io.hpp"
#include "support.hpp"

using namespace pipewright;
using pw_test::fixture_path;
using pw_test::load_fixture;
using pw_test::read_text;

namespace {

const FunctionCatalog& cat() { return FunctionCatalog::builtin(); }

}  // namespace

TEST(GraphIr, Figure1HasTwelveNodesAndElevenEdges) {
  Pipeline p = load_fixture("figure1.json");
  EXPECT_EQ(p.nodes.size(), 12u);
  EXPECT_EQ(p.edges.size(), 11u);
  EXPECT_EQ(p.nodes_of_kind(NodeKind::Input).size(), 1u);
  EXPECT_EQ(p.nodes_of_kind(NodeKind::Output).size(), 3u);
  int mt = 0, tts = 0;
  for (const auto& n : p.nodes) {
    mt += n.function_id == "machine_translation";
    tts += n.function_id == "speech_synthesis";
  }
  EXPECT_EQ(mt, 3);
  EXPECT_EQ(tts, 3);
}

TEST(GraphIr, FunctionNodesTakePortsFromCatalog) {
  Pipeline p = load_fixture("figure1.json");
  const Node* asr = p.find("asr");
  ASSERT_NE(asr, nullptr);
  ASSERT_NE(asr->input("audio"), nullptr);
  EXPECT_EQ(asr->input("audio")->modality, Modality::Audio);
  ASSERT_NE(asr->output("text"), nullptr);
  EXPECT_EQ(asr->output("text")->modality, Modality::Text);
}

TEST(GraphIr, DotFixtureEqualsJson) {
  Pipeline a = load_fixture("figure1.json");
  Pipeline b = parse_pipeline_dot(read_text(fixture_path("figure1.dot")), cat());
  EXPECT_EQ(a, b);
}

TEST(GraphIr, JsonRoundTripIsByteStable) {
  for (const char* name : {"figure1.json", "fig5a.json", "fig5b.json", "fig9b.json", "fig9d.json"}) {
    Pipeline p = load_fixture(name);
    std::string once = serialize_pipeline_json(p);
    Pipeline q = parse_pipeline_json(once, cat());
    EXPECT_EQ(p, q) << name;
    EXPECT_EQ(once, serialize_pipeline_json(q)) << name;
  }
}

TEST(GraphIr, DotRoundTripKeepsEverything) {
  Pipeline p = load_fixture("figure1.json");
  p.metadata["branch.dub_fr"] = "quotes \" and = & and\nnewlines";
  Node& s = p.nodes.emplace_back();
  s.id = "zz_script";
  s.kind = NodeKind::Script;
  s.input_ports = {{"x", Modality::Text}};
  s.output_ports = {{"y", Modality::Label}};
  s.payload = "class Script:\n    def run(self, x):\n        return {\"y\": x}\n";
  s.model_id = "python";
  p.canonicalize();
  Pipeline q = parse_pipeline_dot(serialize_pipeline_dot(p), cat());
  EXPECT_EQ(p, q);
}

TEST(GraphIr, RandomPipelinesRoundTripThroughBothFormats) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 30; ++i) {
    Pipeline p = pw_test::random_pipeline(rng, 6, 1 + i % 2);
    EXPECT_EQ(parse_pipeline_json(serialize_pipeline_json(p), cat()), p);
    EXPECT_EQ(parse_pipeline_dot(serialize_pipeline_dot(p), cat()), p);
  }
}

TEST(GraphIr, BranchesOfFigure1ShareTheRecognizer) {
  auto branches = extract_branches(load_fixture("figure1.json"));
  ASSERT_EQ(branches.size(), 3u);
  std::vector<std::string> outs;
  for (const auto& b : branches) {
    outs.push_back(b.output_node_id);
    EXPECT_TRUE(b.reachable_from_input);
    EXPECT_NE(std::find(b.node_ids_in_path_order.begin(), b.node_ids_in_path_order.end(), "asr"),
              b.node_ids_in_path_order.end());
    EXPECT_EQ(b.node_ids_in_path_order.front(), "video");
    EXPECT_EQ(b.node_ids_in_path_order.back(), b.output_node_id);
    EXPECT_EQ(b.node_ids_in_path_order.size(), 6u);
  }
  EXPECT_EQ(outs, (std::vector<std::string>{"dub_de", "dub_es", "dub_fr"}));
}

TEST(GraphIr, BranchCommentsComeFromMetadata) {
  auto branches = extract_branches(load_fixture("fig9d.json"));
  ASSERT_EQ(branches.size(), 1u);
  EXPECT_NE(branches[0].comment.find("French"), std::string::npos);
}

TEST(GraphIr, CyclesAreRejectedAtParse) {
  const char* doc = R"({"nodes": [
      {"id": "a", "kind": "function", "function": "text_normalization", "params": {"language": "en"}},
      {"id": "b", "kind": "function", "function": "text_denormalization", "params": {"language": "en"}}],
    "edges": [{"from": "a.text", "to": "b.text"}, {"from": "b.text", "to": "a.text"}]})";
  EXPECT_THROW(parse_pipeline_json(doc, cat()), ParseError);
}

TEST(GraphIr, MalformedDocumentsNameTheProblem) {
  struct Case {
    const char* doc;
    const char* needle;
  };
  const Case cases[] = {
      {R"({"nodes": [{"id": "a", "kind": "wizard"}]})", "wizard"},
      {R"({"nodes": [{"id": "a", "kind": "input", "outputs": [{"name": "out", "modality": "smell"}]}]})", "smell"},
      {R"({"nodes": [{"id": "a", "kind": "function"}]})", "function"},
      {R"({"nodes": [{"id": "a", "kind": "input", "outputs": []}, {"id": "a", "kind": "input", "outputs": []}]})", "a"},
      {R"({"nodes": [], "edges": [{"from": "nodot", "to": "x.y"}]})", "nodot"},
      {R"([1, 2])", "object"},
  };
  for (const auto& c : cases) {
    try {
      parse_pipeline_json(c.doc, cat());
      ADD_FAILURE() << "accepted: " << c.doc;
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find(c.needle), std::string::npos) << e.what();
    }
  }
}

TEST(GraphIr, DanglingEdgesStillParse) {
  Pipeline p = load_fixture("codes/invalid_endpoint.json");
  EXPECT_EQ(p.edges.size(), 3u);
}

TEST(GraphIr, TopologicalOrderPutsInputsFirst) {
  auto order = topological_order(load_fixture("figure1.json"));
  ASSERT_TRUE(order);
  EXPECT_EQ(order->front(), "video");
  auto pos = [&](const std::string& id) { return std::find(order->begin(), order->end(), id) - order->begin(); };
  EXPECT_LT(pos("extract"), pos("asr"));
  EXPECT_LT(pos("mt_fr"), pos("tts_fr"));
  EXPECT_LT(pos("tts_fr"), pos("dub_fr"));
}

TEST(GraphIr, PortRefSplitsAtLastDot) {
  auto r = PortRef::parse("a.b.c");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->node, "a.b");
  EXPECT_EQ(r->port, "c");
  EXPECT_FALSE(PortRef::parse("nodot"));
}

TEST(GraphIr, SpecificationJsonAcceptsBothShapes) {
  auto a = specification_from_json(nlohmann::json::parse(
      R"({"inputs": [{"name": "v", "modality": "video", "language": "en"}],
          "outputs": [{"name": "a", "modality": "audio", "language": "fr"}]})"));
  auto b = specification_from_json(nlohmann::json::parse(
      R"({"rows": [{"role": "input", "name": "v", "modality": "video", "language": "en"},
                   {"role": "output", "name": "a", "modality": "audio", "language": "fr"}]})"));
  EXPECT_EQ(a, b);
  EXPECT_EQ(specification_from_json(specification_to_json(a)), a);
  EXPECT_THROW(specification_from_json(nlohmann::json::parse(R"({"inputs": []})")), ParseError);
}
