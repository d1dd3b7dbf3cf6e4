#include "pipewright/tools/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "pipewright/agents.hpp"
#include "pipewright/evaluation.hpp"
#include "pipewright/matchmaker.hpp"
#include "pipewright/metrics.hpp"
#include "pipewright/pipeline_io.hpp"
#include "pipewright/synthesis.hpp"
#include "pipewright/tools/service.hpp"
#include "pipewright/validator.hpp"

namespace pipewright::tools {

namespace {

using json = nlohmann::json;

struct Globals {
  std::string catalog_path;
  std::string registry_path;
  std::string data_dir = "pipewright-data";
  int max_iterations = 3;
  int max_turns = 8;
  double time_budget = 60.0;
  double threshold = 0.5;
  std::string llm_url;
  std::string llm_key;
  double llm_timeout = 60.0;
  int llm_retries = 2;

  std::optional<FunctionCatalog> catalog_storage;
  std::optional<ModelRegistry> registry_storage;

  const FunctionCatalog& catalog() {
    if (catalog_path.empty()) return FunctionCatalog::builtin();
    if (!catalog_storage) catalog_storage = FunctionCatalog::load(catalog_path);
    return *catalog_storage;
  }
  const ModelRegistry& registry() {
    if (registry_path.empty()) return ModelRegistry::builtin();
    if (!registry_storage) registry_storage = ModelRegistry::load(registry_path);
    return *registry_storage;
  }
  MatchConfig match_config() const {
    MatchConfig m;
    m.prompt_similarity_threshold = threshold;
    m.time_budget = std::chrono::duration<double>(time_budget);
    m.check();
    return m;
  }
  GatewayConfig gateway_config() const {
    GatewayConfig g = GatewayConfig::from_env();
    if (!llm_url.empty()) g.url = llm_url;
    if (!llm_key.empty()) g.api_key = llm_key;
    g.timeout = std::chrono::duration<double>(llm_timeout);
    g.retries = llm_retries;
    return g;
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Pipeline load_pipeline(const std::string& path, const FunctionCatalog& catalog) {
  const std::string text = read_file(path);
  const bool dot = path.size() > 4 && path.substr(path.size() - 4) == ".dot";
  return dot ? parse_pipeline_dot(text, catalog) : parse_pipeline_json(text, catalog);
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

std::string serialize(const Pipeline& p, const std::string& path) {
  const bool dot = path.size() > 4 && path.substr(path.size() - 4) == ".dot";
  return dot ? serialize_pipeline_dot(p) : serialize_pipeline_json(p);
}

// Offline build: user turns come from the query and the scripted answers,
// the refined query is confirmed as soon as the clarifier offers one.
int run_build(Globals& g, const std::string& query, const std::vector<std::string>& answers,
              const std::string& transcript, const std::string& out_path, const std::string& stamp_path,
              std::ostream& out, std::ostream& err) {
  ScriptedGateway llm = ScriptedGateway::from_file(transcript, !stamp_path.empty());
  AgentConfig cfg;
  cfg.max_iterations = g.max_iterations;
  cfg.max_turns = g.max_turns;
  cfg.catalog = &g.catalog();
  cfg.sink = [&err](const AgentEvent& ev) {
    if (ev.type == "status" || ev.type == "warning" || ev.type == "error") {
      err << ev.type << ": " << ev.data.dump() << "\n";
    }
  };
  Session session;
  session.id = "cli";

  auto save_stamp = [&] {
    if (!stamp_path.empty()) write_text(stamp_path, llm.stamped().dump(2) + "\n", out);
  };

  std::size_t next_answer = 0;
  std::string message = query;
  while (true) {
    auto reply = mentalist_turn(session, message, llm, cfg);
    if (reply.refined_query) break;
    if (next_answer == answers.size()) {
      save_stamp();
      err << "clarifier asked a question and no --answer is left: " << reply.reply << "\n";
      return 1;
    }
    message = answers[next_answer++];
  }
  session.confirm(cfg);
  run_after_confirmation(session, llm, g.registry(), cfg);
  save_stamp();
  if (session.final_pipeline) write_text(out_path, serialize(*session.final_pipeline, out_path), out);
  if (session.status != SessionStatus::Done) {
    err << "build failed: " << session.failure_reason << "\n";
    return 1;
  }
  if (llm.remaining() != 0) err << "warning: " << llm.remaining() << " transcript entries unused\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"pipewright: build, check and score AI pipelines"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI or TOML file with option defaults");
  Globals g;
  app.add_option("--catalog", g.catalog_path, "function catalog JSON")->envname("PIPEWRIGHT_CATALOG");
  app.add_option("--registry", g.registry_path, "model registry JSON")->envname("PIPEWRIGHT_REGISTRY");
  app.add_option("--data-dir", g.data_dir, "session storage for serve")->envname("PIPEWRIGHT_DATA_DIR");
  app.add_option("--max-iterations", g.max_iterations, "builder/inspector rounds")
      ->envname("PIPEWRIGHT_MAX_ITERATIONS")
      ->check(CLI::PositiveNumber);
  app.add_option("--max-turns", g.max_turns, "clarification turns per session")
      ->envname("PIPEWRIGHT_MAX_TURNS")
      ->check(CLI::PositiveNumber);
  app.add_option("--time-budget", g.time_budget, "GED search budget in seconds")
      ->envname("PIPEWRIGHT_TIME_BUDGET")
      ->check(CLI::PositiveNumber);
  app.add_option("--threshold", g.threshold, "prompt similarity threshold")
      ->envname("PIPEWRIGHT_THRESHOLD")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--llm-url", g.llm_url, "chat-completions base URL")->envname("PIPEWRIGHT_LLM_URL");
  app.add_option("--llm-api-key", g.llm_key, "API key")->envname("PIPEWRIGHT_LLM_API_KEY");
  app.add_option("--llm-timeout", g.llm_timeout, "seconds per attempt")->envname("PIPEWRIGHT_LLM_TIMEOUT");
  app.add_option("--llm-retries", g.llm_retries, "retries on transient errors")->envname("PIPEWRIGHT_LLM_RETRIES");

  int code = 0;

  std::string validate_path;
  bool validate_quiet = false;
  auto* validate_cmd = app.add_subcommand("validate", "check a pipeline, print the report");
  validate_cmd->add_option("pipeline", validate_path)->required()->check(CLI::ExistingFile);
  validate_cmd->add_flag("-q,--quiet", validate_quiet, "exit code only");
  validate_cmd->callback([&] {
    auto report = pipewright::validate(load_pipeline(validate_path, g.catalog()), g.catalog());
    if (!validate_quiet) out << report_to_json(report).dump(2) << "\n";
    code = report.is_valid() ? 0 : 1;
  });

  std::string fix_path, fix_out;
  auto* fix = app.add_subcommand("fix", "apply mechanical fixes");
  fix->add_option("pipeline", fix_path)->required()->check(CLI::ExistingFile);
  fix->add_option("-o,--out", fix_out, "output file (default stdout)");
  fix->callback([&] {
    Pipeline p = load_pipeline(fix_path, g.catalog());
    auto fixed = apply_mechanical_fixes(p, pipewright::validate(p, g.catalog()));
    for (const auto& f : fixed.fixes) err << "fixed " << to_string(f.code) << ": " << f.description << "\n";
    write_text(fix_out, serialize(fixed.pipeline, fix_out.empty() ? fix_path : fix_out), out);
    auto after = pipewright::validate(fixed.pipeline, g.catalog());
    for (const auto& i : after.issues) err << "remaining " << to_string(i.code) << ": " << i.message << "\n";
    code = 0;
  });

  std::string em_a, em_b;
  auto* em = app.add_subcommand("em", "exact match of generated against reference");
  em->add_option("generated", em_a)->required()->check(CLI::ExistingFile);
  em->add_option("reference", em_b)->required()->check(CLI::ExistingFile);
  em->callback([&] {
    auto r = exact_match(load_pipeline(em_a, g.catalog()), load_pipeline(em_b, g.catalog()), g.match_config());
    out << json{{"exact_match", r.matched}, {"witness", r.witness}}.dump(2) << "\n";
  });

  std::string ged_a, ged_b;
  auto* gedc = app.add_subcommand("ged", "graph edit distance of generated to reference");
  gedc->add_option("generated", ged_a)->required()->check(CLI::ExistingFile);
  gedc->add_option("reference", ged_b)->required()->check(CLI::ExistingFile);
  gedc->callback([&] {
    auto r = ged(load_pipeline(ged_a, g.catalog()), load_pipeline(ged_b, g.catalog()), g.match_config());
    out << ged_to_json(r).dump(2) << "\n";
  });

  std::string eval_dataset, eval_generated, eval_out;
  std::size_t eval_bin = 5;
  auto* eval = app.add_subcommand("eval", "score generated pipelines against a dataset");
  eval->add_option("--dataset", eval_dataset)->required()->check(CLI::ExistingFile);
  eval->add_option("--generated", eval_generated)->required()->check(CLI::ExistingFile);
  eval->add_option("-o,--out", eval_out, "report file (default stdout)");
  eval->add_option("--size-bin", eval_bin, "size bin width")->check(CLI::PositiveNumber);
  eval->callback([&] {
    auto entries = read_dataset_file(eval_dataset, g.catalog());
    auto generated = read_generated_file(eval_generated, g.catalog());
    auto report = evaluate_dataset(entries, generated, g.match_config(), eval_bin);
    write_text(eval_out, evaluation_to_json(report).dump(2) + "\n", out);
  });

  int synth_nodes = 1, synth_count = 1, synth_inputs = 1, synth_children = 2;
  std::uint64_t synth_seed = 0;
  std::string synth_out, synth_transcript;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--n-nodes", synth_nodes, "function nodes per pipeline")->check(CLI::PositiveNumber);
  synth->add_option("--count", synth_count, "entries to generate")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "base seed; entry i uses seed + i");
  synth->add_option("--n-inputs", synth_inputs)->check(CLI::PositiveNumber);
  synth->add_option("--max-children", synth_children)->check(CLI::PositiveNumber);
  synth->add_option("--out", synth_out, "JSONL file (default stdout)");
  synth->add_option("--transcript", synth_transcript, "scripted utility-model replies for queries and ratings")
      ->check(CLI::ExistingFile);
  synth->callback([&] {
    std::unique_ptr<ScriptedGateway> llm;
    if (!synth_transcript.empty()) llm = std::make_unique<ScriptedGateway>(json::parse(read_file(synth_transcript)));
    std::vector<DatasetEntry> entries;
    for (int i = 0; i < synth_count; ++i) {
      SynthesisConfig sc;
      sc.n_function_nodes = synth_nodes;
      sc.n_inputs = synth_inputs;
      sc.max_children = synth_children;
      sc.seed = synth_seed + static_cast<std::uint64_t>(i);
      sc.catalog = &g.catalog();
      DatasetEntry e;
      std::ostringstream id;
      id << "syn-" << synth_nodes << "-" << sc.seed;
      e.id = id.str();
      e.reference = expand_pipeline(sc);
      e.provenance = Provenance::Synthetic;
      if (llm) {
        auto q = generate_spec_and_queries(e.reference, *llm);
        e.specification = q.specification;
        e.clear_query = q.clear_query;
        e.ambiguous_query = q.ambiguous_query;
        e.ambiguity_level = rate_ambiguity(e.ambiguous_query, *llm);
      } else {
        // Without a model the query is the specification itself.
        e.specification = specification_from_pipeline(e.reference);
        e.clear_query = "Build a pipeline with these inputs and outputs:\n" + describe_specification(e.specification);
        e.ambiguous_query = e.clear_query;
        e.ambiguity_level = AmbiguityLevel::Unambiguous;
      }
      entries.push_back(std::move(e));
    }
    std::ostringstream s;
    write_dataset(s, entries);
    write_text(synth_out, s.str(), out);
  });

  std::string build_query, build_transcript, build_out, build_stamp;
  std::vector<std::string> build_answers;
  auto* build = app.add_subcommand("build", "run the agent loop offline against a scripted transcript");
  build->add_option("--query", build_query)->required();
  build->add_option("--transcript", build_transcript)->required()->check(CLI::ExistingFile);
  build->add_option("--answer", build_answers, "reply to a clarifying question; repeatable, used in order");
  build->add_option("--out", build_out, "pipeline file (default stdout)");
  build->add_option("--stamp", build_stamp, "write the transcript back with request digests filled in");
  build->callback([&] {
    code = run_build(g, build_query, build_answers, build_transcript, build_out, build_stamp, out, err);
  });

  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP session API");
  serve->add_option("--host", serve_host)->envname("PIPEWRIGHT_HOST");
  serve->add_option("--port", serve_port)->envname("PIPEWRIGHT_PORT");
  serve->callback([&] {
    ServiceConfig sc;
    sc.data_dir = g.data_dir;
    sc.max_iterations = g.max_iterations;
    sc.max_turns = g.max_turns;
    sc.catalog = &g.catalog();
    sc.registry = &g.registry();
    GatewayConfig gc = g.gateway_config();
    if (!gc.url.empty()) {
      sc.gateway = [gc](const std::string&) { return std::make_shared<HttpGateway>(gc); };
    } else {
      err << "warning: no LLM URL configured; session endpoints will answer 503\n";
    }
    Service service(std::move(sc));
    err << "listening on " << serve_host << ":" << serve_port << "\n";
    serve_http(service, serve_host, serve_port);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) err << sub->help();
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return code;
}

}  // namespace pipewright::tools
