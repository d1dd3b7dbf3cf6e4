#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pipewright/agents.hpp"
#include "pipewright/catalog.hpp"
#include "pipewright/metrics.hpp"
#include "pipewright/pipeline.hpp"

namespace pw_test {

using pipewright::Pipeline;

std::filesystem::path fixture_path(const std::string& name);
std::string read_text(const std::filesystem::path& p);
Pipeline load_fixture(const std::string& name);

/// Valid pipeline from the synthesizer with between 1 and `max_functions`
/// function nodes.
Pipeline random_pipeline(std::mt19937_64& rng, int max_functions, int n_inputs = 1);

/// Same graph with every node id replaced (random permutation of fresh ids)
/// and node/edge order shuffled.
Pipeline relabel(const Pipeline& p, std::mt19937_64& rng);

/// Small structural change that usually breaks isomorphism: a param value,
/// an edge port, an extra edge or a removed one.
Pipeline perturb(const Pipeline& p, std::mt19937_64& rng);

/// Exact match by trying every bijection between the node sets.
bool brute_force_em(const Pipeline& gen, const Pipeline& ref, const pipewright::MatchConfig& cfg);

/// Minimum edit cost (unit costs) by enumerating every injective partial
/// mapping of gen nodes into ref nodes. Exponential; keep graphs tiny.
int exhaustive_ged(const Pipeline& gen, const Pipeline& ref, const pipewright::MatchConfig& cfg);

/// Applies `k` edits that cannot cancel or be shortcut: each either gives
/// a distinct function node a parameter combination unseen in `p`, or
/// removes a distinct edge. The optimum edit distance to `p` is then k.
Pipeline seeded_edits(const Pipeline& p, int k, std::mt19937_64& rng);

/// Random damage for the mechanical fixer: duplicate outputs, edges to
/// missing nodes or ports, dropped edges, bad params.
Pipeline damage(const Pipeline& p, std::mt19937_64& rng);

/// n Input / question_answering / Output triples. Plain: input i feeds
/// both ports of qa i. Crossed: input i feeds qa i's context and qa i+1's
/// question (mod n). Every node and edge label count agrees between the two,
/// yet each qa node costs at least 2 (its two in-edges come from one node
/// on one side and from two on the other), and the identity mapping costs
/// exactly 2 per qa node, so the distance is 2n for n >= 2.
Pipeline qa_ring(int n, bool crossed);

struct ScriptedRun {
  pipewright::Session session;
  std::vector<pipewright::AgentEvent> events;
  std::size_t unused_responses = 0;
};

/// Drives a whole session from a stamped transcript under fixtures/
/// transcripts: the query, then `answers` while the clarifier asks, then
/// confirmation and the build.
ScriptedRun run_transcript(const std::string& transcript, const std::string& query,
                           const std::vector<std::string>& answers);

// The conversations recorded in the two stamped transcripts.
inline const char* kDubbingQuery = "Dub my video";
inline const char* kDubbingAnswer = "The video is in English. I need French, German and Spanish.";
inline const char* kFigure9Query = "I want to translate my speech into French and German";
inline const char* kFigure9Answer1 =
    "I don't know which language it is, please detect it automatically. Text output is fine.";
inline const char* kFigure9Answer2 = "Just French for now.";

}  // namespace pw_test
