#include <gtest/gtest.h>

#include "pipewright/matchmaker.hpp"
#include "pipewright/pipeline_io.hpp"
#include "support.hpp"

using namespace pipewright;

namespace {

const ModelRegistry& reg() { return ModelRegistry::builtin(); }

ModelPreferences prefs(std::optional<std::string> supplier, std::optional<std::string> domain, bool latest) {
  ModelPreferences p;
  p.supplier = std::move(supplier);
  p.domain = std::move(domain);
  p.latest = latest;
  return p;
}

const char* kNoPrefs = R"({"supplier": null, "domain": null, "latest": false})";

// English text -> `function_id` -> output of `out` modality.
Pipeline single_function(const std::string& function_id, Modality out, std::map<std::string, std::string> params = {}) {
  const auto& cat = FunctionCatalog::builtin();
  Pipeline p;
  Node in;
  in.id = "in";
  in.kind = NodeKind::Input;
  in.output_ports = {{"out", Modality::Text}};
  in.params = {{"language", "en"}};
  Node f;
  f.id = "f";
  f.kind = NodeKind::Function;
  f.function_id = function_id;
  f.params = std::move(params);
  const FunctionSpec* spec = cat.find(function_id);
  for (const auto& port : spec->inputs) f.input_ports.push_back({port.name, port.modality});
  for (const auto& port : spec->outputs) f.output_ports.push_back({port.name, port.modality});
  Node o;
  o.id = "out";
  o.kind = NodeKind::Output;
  o.input_ports = {{"in", out}};
  p.nodes = {in, f, o};
  p.edges = {{{"in", "out"}, {"f", spec->data_inputs()[0]->name}}, {{"f", spec->outputs[0].name}, {"out", "in"}}};
  return p;
}

}  // namespace

TEST(Registry, BuiltinHasOneDefaultPerFunction) {
  std::map<std::string, int> defaults;
  for (const auto& e : reg().entries()) {
    defaults[e.function_id] += e.is_default;
    EXPECT_NE(FunctionCatalog::builtin().find(e.function_id), nullptr) << e.function_id;
  }
  for (const auto& [f, n] : defaults) EXPECT_EQ(n, 1) << f;
}

TEST(Registry, RejectsBrokenFiles) {
  EXPECT_THROW(ModelRegistry::from_json("[]"), ParseError);
  EXPECT_THROW(ModelRegistry::from_json(R"({"models": [{"model_id": "a"}]})"), ParseError);
  EXPECT_THROW(ModelRegistry::from_json(
                   R"({"models": [{"model_id": "a", "function": "f"}, {"model_id": "b", "function": "f"}]})"),
               ParseError);
  EXPECT_THROW(ModelRegistry::from_json(R"({"models": [{"model_id": "a", "function": "f", "default": true},
                                                       {"model_id": "a", "function": "g", "default": true}]})"),
               ParseError);
  EXPECT_NO_THROW(ModelRegistry::from_json(R"({"models": [{"model_id": "a", "function": "f", "default": true}]})"));
}

TEST(ChooseModel, DefaultWithoutPreferences) {
  EXPECT_EQ(choose_model(reg(), "speech_recognition", {})->model_id, "asr-general-v3");
  EXPECT_EQ(choose_model(reg(), "summarization", {}), nullptr);
}

TEST(ChooseModel, NarrowsBySupplierThenDomainThenVersion) {
  EXPECT_EQ(choose_model(reg(), "speech_recognition", prefs(std::nullopt, "medical", false))->model_id,
            "asr-medical-v2");
  EXPECT_EQ(choose_model(reg(), "speech_recognition", prefs(std::nullopt, std::nullopt, true))->model_id,
            "asr-general-v4");
  EXPECT_EQ(choose_model(reg(), "machine_translation", prefs("lexaudio", std::nullopt, false))->model_id,
            "mt-legal-v3");
  // A filter that would leave nothing is skipped.
  EXPECT_EQ(choose_model(reg(), "speech_synthesis", prefs("Clinivox", "medical", false))->model_id, "tts-neural-v2");
  EXPECT_EQ(choose_model(reg(), "speech_synthesis", prefs("Clinivox", std::nullopt, true))->model_id,
            "tts-neural-v3");
}

TEST(ChooseModel, VersionsCompareNumerically) {
  auto r = ModelRegistry::from_json(R"({"models": [
      {"model_id": "m9", "function": "f", "version": "1.9", "default": true},
      {"model_id": "m10", "function": "f", "version": "1.10"}]})");
  EXPECT_EQ(choose_model(r, "f", prefs(std::nullopt, std::nullopt, true))->model_id, "m10");
}

TEST(Preferences, ParsesTheFixedShape) {
  auto p = parse_preferences(R"(Sure: {"supplier": "Clinivox", "domain": "", "latest": true})");
  ASSERT_TRUE(p);
  EXPECT_EQ(p->supplier, "Clinivox");
  EXPECT_FALSE(p->domain);
  EXPECT_TRUE(p->latest);
  EXPECT_TRUE(parse_preferences(kNoPrefs)->empty());
  EXPECT_FALSE(parse_preferences("no preference"));
  EXPECT_FALSE(parse_preferences(R"({"latest": "yes"})"));
  EXPECT_FALSE(parse_preferences(R"({"supplier": 3})"));
}

TEST(GenericNode, TextOnlyWithTheRequestAppended) {
  Node n = make_generic_node("g", "Summarize the text", "I need a short summary of my report");
  EXPECT_EQ(n.kind, NodeKind::GenericLLM);
  EXPECT_NE(n.payload.find("Summarize the text"), std::string::npos);
  EXPECT_NE(n.payload.find("short summary of my report"), std::string::npos);
  EXPECT_THROW(make_generic_node("g", "caption", "", Modality::Image, Modality::Text), AgentError);
  EXPECT_THROW(make_generic_node("g", "  ", ""), AgentError);
}

TEST(Matchmaker, UnregisteredTextFunctionsBecomeGenericNodes) {
  for (const char* f : {"summarization", "text_transformation"}) {
    Pipeline p = single_function(f, Modality::Text, std::string(f) == "summarization"
                                                        ? std::map<std::string, std::string>{{"language", "en"}}
                                                        : std::map<std::string, std::string>{});
    ASSERT_TRUE(validate(p, FunctionCatalog::builtin()).is_valid()) << f;
    auto llm = ScriptedGateway::from_responses({kNoPrefs});
    auto r = matchmaker_assign(p, {{"user", "shorten my notes please"}}, reg(), llm, {});
    const Node* g = r.pipeline.find("f");
    ASSERT_NE(g, nullptr);
    EXPECT_EQ(g->kind, NodeKind::GenericLLM) << f;
    EXPECT_NE(g->payload.find("shorten my notes please"), std::string::npos);
    EXPECT_FALSE(g->unresolved);
    // Port names are kept, so the edges still resolve.
    EXPECT_TRUE(validate(r.pipeline, FunctionCatalog::builtin()).is_valid()) << f;
  }
}

TEST(Matchmaker, OtherUnregisteredFunctionsAreUnresolved) {
  Pipeline p = single_function("text_classification", Modality::Label);
  auto llm = ScriptedGateway::from_responses({kNoPrefs});
  auto r = matchmaker_assign(p, {{"user", "classify"}}, reg(), llm, {});
  const Node* n = r.pipeline.find("f");
  EXPECT_EQ(n->kind, NodeKind::Function);
  EXPECT_TRUE(n->unresolved);
  EXPECT_FALSE(n->model_id);
}

TEST(Matchmaker, PreferencesComeFromUserTurnsOnly) {
  Pipeline p = pw_test::load_fixture("fig9d.json");
  auto llm = ScriptedGateway::from_responses({R"({"supplier": null, "domain": "medical", "latest": false})"});
  auto r = matchmaker_assign(p, {{"user", "these are patient interviews"}, {"assistant", "SECRET-ASSISTANT-TEXT"}},
                             reg(), llm, {});
  EXPECT_EQ(r.pipeline.find("asr")->model_id, "asr-medical-v2");
  EXPECT_EQ(r.pipeline.find("mt")->model_id, "mt-medical-v2");
  EXPECT_EQ(r.pipeline.find("lid")->model_id, "audio-lid-v2");
  const auto& prompt = llm.requests()[0].messages.back().content;
  EXPECT_NE(prompt.find("patient interviews"), std::string::npos);
  EXPECT_EQ(prompt.find("SECRET-ASSISTANT-TEXT"), std::string::npos);
  // Model choice leaves the graph itself alone.
  EXPECT_TRUE(exact_match(r.pipeline, p, MatchConfig{}).matched);
}

TEST(Matchmaker, UnreadablePreferencesFallBackToDefaults) {
  std::vector<AgentEvent> events;
  AgentConfig cfg;
  cfg.sink = [&](const AgentEvent& e) { events.push_back(e); };
  auto llm = ScriptedGateway::from_responses({"I cannot tell"});
  auto r = matchmaker_assign(pw_test::load_fixture("fig9d.json"), {{"user", "x"}}, reg(), llm, cfg);
  EXPECT_EQ(r.pipeline.find("asr")->model_id, "asr-general-v3");
  EXPECT_TRUE(r.preferences.empty());
  EXPECT_EQ(events.front().type, "warning");
}

TEST(Script, BodyLandsInTheTemplate) {
  auto llm = ScriptedGateway::from_responses({"```python\nwords = text.split()\nreturn {\"text\": \" \".join(words[:10])}\n```"});
  Node n = generate_script("s", "keep the first ten words", {{"text", Modality::Text}}, {{"text", Modality::Text}}, llm);
  EXPECT_EQ(n.kind, NodeKind::Script);
  EXPECT_NE(n.payload.find("        words = text.split()\n"), std::string::npos) << n.payload;
  EXPECT_NE(n.payload.find("keep the first ten words"), std::string::npos);
  EXPECT_NE(n.payload.find(", text"), std::string::npos);
  EXPECT_EQ(n.payload.find("```"), std::string::npos);
  EXPECT_THROW(generate_script("s", "x", {}, {{"text", Modality::Text}}, llm), AgentError);
}

TEST(Script, EmptyScriptNodesGetGeneratedPayloads) {
  Pipeline p = parse_pipeline_json(R"({
    "nodes": [
      {"id": "in", "kind": "input", "inputs": [], "outputs": [{"name": "out", "modality": "text"}],
       "params": {"language": "en"}},
      {"id": "cut", "kind": "script", "inputs": [{"name": "text", "modality": "text"}],
       "outputs": [{"name": "text", "modality": "text"}], "params": {"task": "keep the first sentence"}},
      {"id": "bare", "kind": "script", "inputs": [{"name": "text", "modality": "text"}],
       "outputs": [{"name": "text", "modality": "text"}]},
      {"id": "out", "kind": "output", "inputs": [{"name": "in", "modality": "text"}], "outputs": []}
    ],
    "edges": [{"from": "in.out", "to": "cut.text"}, {"from": "cut.text", "to": "bare.text"},
              {"from": "bare.text", "to": "out.in"}]
  })", FunctionCatalog::builtin());
  auto llm = ScriptedGateway::from_responses({kNoPrefs, "return {\"text\": text.split(\".\")[0]}"});
  auto r = matchmaker_assign(p, {{"user", "x"}}, reg(), llm, {});
  EXPECT_EQ(llm.calls(), 2u);
  EXPECT_NE(r.pipeline.find("cut")->payload.find("text.split"), std::string::npos);
  EXPECT_FALSE(r.pipeline.find("cut")->unresolved);
  EXPECT_TRUE(r.pipeline.find("bare")->unresolved);
}
