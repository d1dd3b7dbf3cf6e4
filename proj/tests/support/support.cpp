#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "pipewright/matchmaker.hpp"
#include "pipewright/pipeline_io.hpp"
#include "pipewright/synthesis.hpp"

namespace pw_test {

using namespace pipewright;

std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(PIPEWRIGHT_FIXTURE_DIR) / name;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("missing file " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Pipeline load_fixture(const std::string& name) {
  return parse_pipeline_json(read_text(fixture_path(name)), FunctionCatalog::builtin());
}

Pipeline random_pipeline(std::mt19937_64& rng, int max_functions, int n_inputs) {
  SynthesisConfig cfg;
  cfg.n_function_nodes = std::uniform_int_distribution<int>(1, max_functions)(rng);
  cfg.n_inputs = n_inputs;
  cfg.seed = rng();
  return expand_pipeline(cfg);
}

Pipeline relabel(const Pipeline& p, std::mt19937_64& rng) {
  std::vector<int> perm(p.nodes.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::map<std::string, std::string> to;
  for (std::size_t i = 0; i < p.nodes.size(); ++i) to[p.nodes[i].id] = "v" + std::to_string(perm[i]);
  Pipeline q;
  for (auto n : p.nodes) {
    n.id = to.at(n.id);
    q.nodes.push_back(std::move(n));
  }
  for (auto e : p.edges) {
    e.from.node = to.at(e.from.node);
    e.to.node = to.at(e.to.node);
    q.edges.push_back(std::move(e));
  }
  std::shuffle(q.nodes.begin(), q.nodes.end(), rng);
  std::shuffle(q.edges.begin(), q.edges.end(), rng);
  return q;
}

Pipeline perturb(const Pipeline& p, std::mt19937_64& rng) {
  Pipeline q = p;
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  switch (pick(4)) {
    case 0: {
      std::vector<Node*> with_params;
      for (auto& n : q.nodes) {
        if (!n.params.empty()) with_params.push_back(&n);
      }
      if (!with_params.empty()) {
        auto& params = with_params[pick(with_params.size())]->params;
        auto it = std::next(params.begin(), static_cast<long>(pick(params.size())));
        it->second = it->second == "ja" ? "zh" : "ja";
        break;
      }
      [[fallthrough]];
    }
    case 1:
      if (!q.edges.empty()) {
        q.edges.erase(q.edges.begin() + static_cast<long>(pick(q.edges.size())));
        break;
      }
      [[fallthrough]];
    case 2: {
      // Duplicate an edge from a random output port to a random node's port
      // name; may or may not exist in the catalog, which EM does not care about.
      const auto& e = q.edges[pick(q.edges.size())];
      const auto& target = q.nodes[pick(q.nodes.size())];
      q.edges.push_back({e.from, {target.id, e.to.port}});
      break;
    }
    default: {
      auto& e = q.edges[pick(q.edges.size())];
      e.to.port += "_x";
      break;
    }
  }
  q.canonicalize();
  return q;
}

namespace {

// Edge multiset keyed by (from index, to index, from port, to port).
using EdgeKey = std::tuple<int, int, std::string, std::string>;

std::map<std::string, int> index_of(const Pipeline& p) {
  std::map<std::string, int> idx;
  for (std::size_t i = 0; i < p.nodes.size(); ++i) idx[p.nodes[i].id] = static_cast<int>(i);
  return idx;
}

}  // namespace

bool brute_force_em(const Pipeline& gen, const Pipeline& ref, const MatchConfig& cfg) {
  if (gen.nodes.size() != ref.nodes.size() || gen.edges.size() != ref.edges.size()) return false;
  const std::size_t n = gen.nodes.size();
  auto gi = index_of(gen), ri = index_of(ref);
  std::vector<std::vector<char>> ok(n, std::vector<char>(n));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) ok[a][b] = node_match(gen.nodes[a], ref.nodes[b], cfg);
  }
  std::multiset<EdgeKey> target;
  for (const auto& e : ref.edges) target.insert({ri.at(e.from.node), ri.at(e.to.node), e.from.port, e.to.port});

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool nodes_ok = true;
    for (std::size_t a = 0; a < n && nodes_ok; ++a) nodes_ok = ok[a][perm[a]];
    if (!nodes_ok) continue;
    std::multiset<EdgeKey> mapped;
    for (const auto& e : gen.edges) {
      mapped.insert({perm[gi.at(e.from.node)], perm[gi.at(e.to.node)], e.from.port, e.to.port});
    }
    if (mapped == target) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

int exhaustive_ged(const Pipeline& gen, const Pipeline& ref, const MatchConfig& cfg) {
  const int n = static_cast<int>(gen.nodes.size());
  const int m = static_cast<int>(ref.nodes.size());
  auto gi = index_of(gen), ri = index_of(ref);
  std::vector<std::vector<int>> sub(n, std::vector<int>(m));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < m; ++b) sub[a][b] = node_match(gen.nodes[a], ref.nodes[b], cfg) ? 0 : 1;
  }
  // Edge label multisets per ordered node pair.
  std::map<std::pair<int, int>, std::multiset<std::string>> ge, re;
  for (const auto& e : gen.edges) ge[{gi.at(e.from.node), gi.at(e.to.node)}].insert(e.from.port + ">" + e.to.port);
  for (const auto& e : ref.edges) re[{ri.at(e.from.node), ri.at(e.to.node)}].insert(e.from.port + ">" + e.to.port);

  auto cost_of = [&](const std::vector<int>& img) {
    int c = 0;
    std::vector<char> used(m, 0);
    for (int a = 0; a < n; ++a) {
      if (img[a] < 0) {
        ++c;
      } else {
        c += sub[a][img[a]];
        used[img[a]] = 1;
      }
    }
    for (int b = 0; b < m; ++b) c += used[b] ? 0 : 1;
    // Gen edges: matched against the ref pair they map onto.
    std::map<std::pair<int, int>, std::multiset<std::string>> mapped;
    for (const auto& [uv, labels] : ge) {
      auto [u, v] = uv;
      if (img[u] < 0 || img[v] < 0) {
        c += static_cast<int>(labels.size());
      } else {
        mapped[{img[u], img[v]}] = labels;
      }
    }
    std::set<std::pair<int, int>> pairs;
    for (const auto& [k, v] : mapped) pairs.insert(k);
    for (const auto& [k, v] : re) pairs.insert(k);
    for (const auto& k : pairs) {
      const auto& a = mapped[k];
      const auto& b = re.count(k) ? re.at(k) : std::multiset<std::string>{};
      std::vector<std::string> common;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
      c += static_cast<int>(std::max(a.size(), b.size()) - common.size());
    }
    return c;
  };

  int best = n + m + static_cast<int>(gen.edges.size() + ref.edges.size());
  std::vector<int> img(n, -1);
  std::vector<char> taken(m, 0);
  auto rec = [&](auto&& self, int a) -> void {
    if (a == n) {
      best = std::min(best, cost_of(img));
      return;
    }
    img[a] = -1;
    self(self, a + 1);
    for (int b = 0; b < m; ++b) {
      if (taken[b]) continue;
      taken[b] = 1;
      img[a] = b;
      self(self, a + 1);
      taken[b] = 0;
    }
    img[a] = -1;
  };
  rec(rec, 0);
  return best;
}

namespace {

std::string class_of(const Node& n) {
  std::string s = std::string(to_string(n.kind)) + "|" + n.function_id;
  for (const auto& [k, v] : n.params) s += "|" + k + "=" + v;
  return s;
}

}  // namespace

Pipeline seeded_edits(const Pipeline& p, int k, std::mt19937_64& rng) {
  Pipeline q = p;
  const auto& langs = FunctionCatalog::builtin().languages();
  std::set<std::string> classes;
  for (const auto& n : p.nodes) classes.insert(class_of(n));

  std::vector<int> param_nodes;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    if (q.nodes[i].kind == NodeKind::Function && !q.nodes[i].params.empty()) param_nodes.push_back(static_cast<int>(i));
  }
  std::vector<int> edges(q.edges.size());
  std::iota(edges.begin(), edges.end(), 0);
  std::shuffle(param_nodes.begin(), param_nodes.end(), rng);
  std::shuffle(edges.begin(), edges.end(), rng);

  std::vector<int> drop;
  for (int done = 0; done < k; ++done) {
    bool use_param = !param_nodes.empty() && (edges.empty() || rng() % 2 == 0);
    if (use_param) {
      Node& n = q.nodes[param_nodes.back()];
      param_nodes.pop_back();
      // Any new value works as long as the resulting class is unseen.
      bool changed = false;
      for (auto& [key, value] : n.params) {
        for (const auto& l : langs) {
          std::string old = value;
          value = l;
          if (!classes.count(class_of(n))) {
            changed = true;
            break;
          }
          value = old;
        }
        if (changed) break;
      }
      if (!changed) n.params["seeded_mark"] = std::to_string(done);
      classes.insert(class_of(n));
    } else if (!edges.empty()) {
      drop.push_back(edges.back());
      edges.pop_back();
    } else {
      throw std::runtime_error("pipeline too small for " + std::to_string(k) + " seeded edits");
    }
  }
  std::sort(drop.rbegin(), drop.rend());
  for (int i : drop) q.edges.erase(q.edges.begin() + i);
  q.canonicalize();
  return q;
}

Pipeline damage(const Pipeline& p, std::mt19937_64& rng) {
  Pipeline q = p;
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  const int hits = 1 + static_cast<int>(pick(3));
  for (int h = 0; h < hits; ++h) {
    switch (pick(5)) {
      case 0: {  // second Output on an already consumed port
        const auto& e = q.edges[pick(q.edges.size())];
        const Node* src = q.find(e.from.node);
        const Port* port = src ? src->output(e.from.port) : nullptr;
        if (!port) break;
        Node out;
        out.id = "dup" + std::to_string(h) + "_" + std::to_string(rng() % 1000);
        out.kind = NodeKind::Output;
        out.input_ports = {{"in", port->modality}};
        if (q.find(out.id)) break;
        q.edges.push_back({e.from, {out.id, "in"}});
        q.nodes.push_back(std::move(out));
        break;
      }
      case 1:  // edge to a missing node
        q.edges.push_back({q.edges[pick(q.edges.size())].from, {"ghost" + std::to_string(h), "in"}});
        break;
      case 2:  // edge to a missing port
        q.edges.push_back({q.edges[pick(q.edges.size())].from, {q.nodes[pick(q.nodes.size())].id, "nope"}});
        break;
      case 3:
        if (q.edges.size() > 1) q.edges.erase(q.edges.begin() + static_cast<long>(pick(q.edges.size())));
        break;
      default: {
        auto& n = q.nodes[pick(q.nodes.size())];
        if (n.kind == NodeKind::Function) n.params["bogus"] = "x";
        break;
      }
    }
  }
  q.canonicalize();
  return q;
}

Pipeline qa_ring(int n, bool crossed) {
  const FunctionCatalog& cat = FunctionCatalog::builtin();
  const FunctionSpec* qa = cat.find("question_answering");
  Pipeline p;
  for (int i = 0; i < n; ++i) {
    const std::string k = std::to_string(i);
    Node in;
    in.id = "x" + k;
    in.kind = NodeKind::Input;
    in.output_ports = {{"out", Modality::Text}};
    in.params["language"] = "en";
    Node f;
    f.id = "qa" + k;
    f.kind = NodeKind::Function;
    f.function_id = "question_answering";
    for (const auto& ps : qa->inputs) f.input_ports.push_back({ps.name, ps.modality});
    for (const auto& ps : qa->outputs) f.output_ports.push_back({ps.name, ps.modality});
    Node o;
    o.id = "o" + k;
    o.kind = NodeKind::Output;
    o.input_ports = {{"in", Modality::Text}};
    p.edges.push_back({{in.id, "out"}, {f.id, "context"}});
    p.edges.push_back({{in.id, "out"}, {"qa" + std::to_string(crossed ? (i + 1) % n : i), "question"}});
    p.edges.push_back({{f.id, qa->outputs[0].name}, {o.id, "in"}});
    p.nodes.push_back(std::move(in));
    p.nodes.push_back(std::move(f));
    p.nodes.push_back(std::move(o));
  }
  p.canonicalize();
  return p;
}

ScriptedRun run_transcript(const std::string& transcript, const std::string& query,
                           const std::vector<std::string>& answers) {
  using namespace pipewright;
  auto llm = ScriptedGateway::from_file(fixture_path("transcripts/" + transcript).string());
  ScriptedRun run;
  AgentConfig cfg;
  cfg.sink = [&run](const AgentEvent& ev) { run.events.push_back(ev); };
  run.session.id = "t";
  std::string message = query;
  std::size_t next = 0;
  while (!mentalist_turn(run.session, message, llm, cfg).refined_query) {
    if (next == answers.size()) throw Error("clarifier asked more questions than there are answers");
    message = answers[next++];
  }
  run.session.confirm(cfg);
  run_after_confirmation(run.session, llm, ModelRegistry::builtin(), cfg);
  run.unused_responses = llm.remaining();
  return run;
}

}  // namespace pw_test
