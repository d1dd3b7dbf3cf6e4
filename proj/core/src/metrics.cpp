#include "pipewright/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "pipewright/embedding.hpp"

namespace pipewright {
namespace {

constexpr int kDeleted = -1;
constexpr int kUnset = -2;

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string normalize_code(std::string_view code) {
  std::string out;
  bool space = false;
  for (char c : code) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
    } else {
      if (space) out += ' ';
      space = false;
      out += c;
    }
  }
  return out;
}

// Nodes that could ever satisfy node_match share a class key; generic LLM
// and script nodes are compared by payload, so their key ignores it.
std::string class_key(const Node& n) {
  std::string key(to_string(n.kind));
  key += '|';
  for (const auto& p : n.input_ports) key += p.name + ":" + std::string(to_string(p.modality)) + ",";
  key += '|';
  for (const auto& p : n.output_ports) key += p.name + ":" + std::string(to_string(p.modality)) + ",";
  key += '|';
  if (n.kind == NodeKind::GenericLLM || n.kind == NodeKind::Script) return key;
  if (n.kind == NodeKind::Function) key += lower(n.function_id) + '|';
  for (const auto& [k, v] : n.params) key += k + "=" + v + "&";
  return key;
}

struct LabelTable {
  std::map<std::string, int> ids;
  int id(const Edge& e) {
    auto [it, inserted] = ids.emplace(e.from.port + "->" + e.to.port, static_cast<int>(ids.size()));
    return it->second;
  }
};

// Dense view of a pipeline: lab[u][v] holds the sorted port-pair labels of
// the edges u -> v. Edges naming missing nodes are ignored.
struct Graph {
  std::vector<const Node*> nodes;
  std::vector<std::vector<std::vector<int>>> lab;
  std::vector<std::vector<int>> adj;  // distinct neighbours, either direction
  std::vector<int> in_deg, out_deg;
  std::vector<std::pair<std::pair<int, int>, const Edge*>> edges;

  int size() const { return static_cast<int>(nodes.size()); }
  int edge_count() const { return static_cast<int>(edges.size()); }
};

Graph index_graph(const Pipeline& p, LabelTable& labels) {
  Graph g;
  std::map<std::string, int, std::less<>> index;
  for (const auto& n : p.nodes) {
    index[n.id] = static_cast<int>(g.nodes.size());
    g.nodes.push_back(&n);
  }
  const int n = g.size();
  g.lab.assign(n, std::vector<std::vector<int>>(n));
  g.adj.assign(n, {});
  g.in_deg.assign(n, 0);
  g.out_deg.assign(n, 0);
  for (const auto& e : p.edges) {
    auto a = index.find(e.from.node);
    auto b = index.find(e.to.node);
    if (a == index.end() || b == index.end()) continue;
    int u = a->second, v = b->second;
    g.lab[u][v].push_back(labels.id(e));
    ++g.out_deg[u];
    ++g.in_deg[v];
    g.edges.push_back({{u, v}, &e});
  }
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      std::sort(g.lab[u][v].begin(), g.lab[u][v].end());
      if (u != v && (!g.lab[u][v].empty() || !g.lab[v][u].empty())) g.adj[u].push_back(v);
    }
  }
  return g;
}

int common_count(const std::vector<int>& a, const std::vector<int>& b) {
  int common = 0;
  auto i = a.begin(), j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  return common;
}

int edge_diff(const std::vector<int>& a, const std::vector<int>& b) {
  return static_cast<int>(std::max(a.size(), b.size())) - common_count(a, b);
}

class NodeMatcher {
 public:
  explicit NodeMatcher(const MatchConfig& cfg) : cfg_(cfg) {}

  bool operator()(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    if (a.input_ports != b.input_ports || a.output_ports != b.output_ports) return false;
    switch (a.kind) {
      case NodeKind::Function:
        return lower(a.function_id) == lower(b.function_id) && a.params == b.params;
      case NodeKind::GenericLLM:
        return cosine_similarity(embedding(a.payload), embedding(b.payload)) >= cfg_.prompt_similarity_threshold;
      case NodeKind::Script:
        return cfg_.code_equivalence ? cfg_.code_equivalence(a.payload, b.payload)
                                     : normalize_code(a.payload) == normalize_code(b.payload);
      default:
        return a.params == b.params;
    }
  }

 private:
  const Embedding& embedding(const std::string& text) {
    auto it = cache_.find(text);
    if (it == cache_.end()) {
      it = cache_.emplace(text, cfg_.embed ? cfg_.embed(text) : hashing_embed(text)).first;
    }
    return it->second;
  }

  const MatchConfig& cfg_;
  std::map<std::string, Embedding> cache_;
};

// 0 when the nodes match, 1 otherwise.
std::vector<std::vector<int>> node_costs(const Graph& g, const Graph& r, const MatchConfig& cfg) {
  NodeMatcher match(cfg);
  std::vector<std::vector<int>> cost(g.size(), std::vector<int>(r.size(), 1));
  for (int u = 0; u < g.size(); ++u) {
    for (int v = 0; v < r.size(); ++v) cost[u][v] = match(*g.nodes[u], *r.nodes[v]) ? 0 : 1;
  }
  return cost;
}

// Most-constrained-first: each next node has the most links into the
// already ordered set; ties go to higher degree, then lower index.
std::vector<int> search_order(const Graph& g) {
  const int n = g.size();
  std::vector<int> order;
  std::vector<char> placed(n, 0);
  std::vector<int> links(n, 0);
  for (int step = 0; step < n; ++step) {
    int best = -1;
    for (int u = 0; u < n; ++u) {
      if (placed[u]) continue;
      if (best < 0) {
        best = u;
        continue;
      }
      int du = g.in_deg[u] + g.out_deg[u], db = g.in_deg[best] + g.out_deg[best];
      if (links[u] > links[best] || (links[u] == links[best] && du > db)) best = u;
    }
    placed[best] = 1;
    order.push_back(best);
    for (int v : g.adj[best]) ++links[v];
  }
  return order;
}

// ---------------------------------------------------------------------------
// Exact match: VF2 over the node-signature-filtered candidate pairs.

class Vf2 {
 public:
  Vf2(const Graph& g, const Graph& r, std::vector<std::vector<int>> cost)
      : g_(g), r_(r), cost_(std::move(cost)), core_g_(g.size(), -1), core_r_(r.size(), -1),
        in_g_(g.size(), 0), out_g_(g.size(), 0), in_r_(r.size(), 0), out_r_(r.size(), 0) {
    candidates_.resize(g.size());
    for (int u = 0; u < g.size(); ++u) {
      for (int v = 0; v < r.size(); ++v) {
        if (cost_[u][v] == 0 && g.in_deg[u] == r.in_deg[v] && g.out_deg[u] == r.out_deg[v]) {
          candidates_[u].push_back(v);
        }
      }
    }
    order_ = search_order(g);
  }

  bool run() {
    for (const auto& c : candidates_) {
      if (c.empty()) return false;
    }
    return match(0);
  }

  NodeMapping witness() const {
    NodeMapping m;
    for (int u = 0; u < g_.size(); ++u) m[g_.nodes[u]->id] = r_.nodes[core_g_[u]]->id;
    return m;
  }

 private:
  bool match(std::size_t depth) {
    if (depth == order_.size()) return true;
    const int u = order_[depth];
    for (int v : candidates_[u]) {
      if (core_r_[v] >= 0 || !feasible(u, v)) continue;
      push(u, v, static_cast<int>(depth) + 1);
      if (match(depth + 1)) return true;
      pop(u, v, static_cast<int>(depth) + 1);
    }
    return false;
  }

  bool feasible(int u, int v) const {
    // Edges towards already mapped nodes must correspond exactly.
    int mapped_g = 0, mapped_r = 0;
    for (int w : g_.adj[u]) {
      int s = core_g_[w];
      if (s < 0) continue;
      ++mapped_g;
      if (g_.lab[u][w] != r_.lab[v][s] || g_.lab[w][u] != r_.lab[s][v]) return false;
    }
    for (int s : r_.adj[v]) {
      if (core_r_[s] >= 0) ++mapped_r;
    }
    if (mapped_g != mapped_r) return false;

    // One-step look-ahead over the terminal sets.
    int g_in = 0, g_out = 0, g_new = 0, r_in = 0, r_out = 0, r_new = 0;
    for (int w : g_.adj[u]) {
      if (core_g_[w] >= 0) continue;
      if (in_g_[w]) ++g_in;
      if (out_g_[w]) ++g_out;
      if (!in_g_[w] && !out_g_[w]) ++g_new;
    }
    for (int s : r_.adj[v]) {
      if (core_r_[s] >= 0) continue;
      if (in_r_[s]) ++r_in;
      if (out_r_[s]) ++r_out;
      if (!in_r_[s] && !out_r_[s]) ++r_new;
    }
    return g_in == r_in && g_out == r_out && g_new == r_new;
  }

  void push(int u, int v, int depth) {
    core_g_[u] = v;
    core_r_[v] = u;
    mark(g_, u, in_g_, out_g_, depth);
    mark(r_, v, in_r_, out_r_, depth);
  }

  void pop(int u, int v, int depth) {
    core_g_[u] = -1;
    core_r_[v] = -1;
    unmark(in_g_, out_g_, depth);
    unmark(in_r_, out_r_, depth);
  }

  // Terminal-set membership is stamped with the depth that added it so
  // backtracking can clear exactly those entries.
  static void mark(const Graph& g, int u, std::vector<int>& in, std::vector<int>& out, int depth) {
    if (!in[u]) in[u] = depth;
    if (!out[u]) out[u] = depth;
    for (int w = 0; w < g.size(); ++w) {
      if (!g.lab[u][w].empty() && !out[w]) out[w] = depth;
      if (!g.lab[w][u].empty() && !in[w]) in[w] = depth;
    }
  }

  static void unmark(std::vector<int>& in, std::vector<int>& out, int depth) {
    for (auto& x : in) {
      if (x == depth) x = 0;
    }
    for (auto& x : out) {
      if (x == depth) x = 0;
    }
  }

  const Graph& g_;
  const Graph& r_;
  std::vector<std::vector<int>> cost_;
  std::vector<std::vector<int>> candidates_;
  std::vector<int> order_;
  std::vector<int> core_g_, core_r_;
  std::vector<int> in_g_, out_g_, in_r_, out_r_;
};

// ---------------------------------------------------------------------------
// Graph edit distance: depth-first branch and bound over node assignments.

class GedSearch {
 public:
  GedSearch(const Graph& g, const Graph& r, std::vector<std::vector<int>> cost,
            std::chrono::duration<double> budget)
      : g_(g), r_(r), cost_(std::move(cost)), order_(search_order(g)), img_(g.size(), kUnset),
        pre_(r.size(), kUnset), done_(g.size(), 0) {
    deadline_ = std::chrono::steady_clock::now() +
                std::chrono::duration_cast<std::chrono::steady_clock::duration>(budget);
    build_classes();
  }

  void run() {
    // Trivial upper bound: delete everything, insert everything.
    best_ = g_.size() + g_.edge_count() + r_.size() + r_.edge_count();
    best_img_.assign(g_.size(), kDeleted);
    dfs(0, 0);
  }

  int best() const { return best_; }
  const std::vector<int>& assignment() const { return best_img_; }
  bool timed_out() const { return timed_out_; }
  std::uint64_t expanded() const { return expanded_; }

 private:
  void build_classes() {
    std::map<std::string, int> ids;
    auto id_of = [&](const Node& n) {
      return ids.emplace(class_key(n), static_cast<int>(ids.size())).first->second;
    };
    for (const Node* n : g_.nodes) g_class_.push_back(id_of(*n));
    for (const Node* n : r_.nodes) r_class_.push_back(id_of(*n));
    cnt_g_.assign(ids.size(), 0);
    cnt_r_.assign(ids.size(), 0);
    for (int c : g_class_) ++cnt_g_[c];
    for (int c : r_class_) ++cnt_r_[c];
    for (std::size_t c = 0; c < ids.size(); ++c) node_common_ += std::min(cnt_g_[c], cnt_r_[c]);
    rem_g_ = g_.size();
    rem_r_ = r_.size();

    int labels = 0;
    for (const auto& [uv, e] : g_.edges) labels = std::max(labels, g_.lab[uv.first][uv.second].back() + 1);
    for (const auto& [uv, e] : r_.edges) labels = std::max(labels, r_.lab[uv.first][uv.second].back() + 1);
    ecnt_g_.assign(labels, 0);
    ecnt_r_.assign(labels, 0);
    for (int u = 0; u < g_.size(); ++u) {
      for (int v = 0; v < g_.size(); ++v) {
        for (int l : g_.lab[u][v]) ++ecnt_g_[l];
      }
    }
    for (int u = 0; u < r_.size(); ++u) {
      for (int v = 0; v < r_.size(); ++v) {
        for (int l : r_.lab[u][v]) ++ecnt_r_[l];
      }
    }
    for (int l = 0; l < labels; ++l) edge_common_ += std::min(ecnt_g_[l], ecnt_r_[l]);
    erem_g_ = g_.edge_count();
    erem_r_ = r_.edge_count();
  }

  int lower_bound() const {
    return std::max(rem_g_, rem_r_) - node_common_ + std::max(erem_g_, erem_r_) - edge_common_;
  }

  // Cost of mapping gen node u to t (or deleting it) given the nodes
  // already decided: the node operation plus every edge between u and a
  // decided gen node, plus ref edges between t and used ref nodes whose
  // preimage is not adjacent to u.
  int step_cost(int u, int t) const {
    int c = t == kDeleted ? 1 : cost_[u][t];
    for (int w : g_.adj[u]) {
      if (!done_[w]) continue;
      int s = img_[w];
      if (t != kDeleted && s != kDeleted) {
        c += edge_diff(g_.lab[u][w], r_.lab[t][s]) + edge_diff(g_.lab[w][u], r_.lab[s][t]);
      } else {
        c += static_cast<int>(g_.lab[u][w].size() + g_.lab[w][u].size());
      }
    }
    if (t != kDeleted) {
      for (int s : r_.adj[t]) {
        int w = pre_[s];
        if (w < 0) continue;
        if (g_.lab[u][w].empty() && g_.lab[w][u].empty()) {
          c += static_cast<int>(r_.lab[t][s].size() + r_.lab[s][t].size());
        }
      }
    }
    return c;
  }

  static void dec(std::vector<int>& mine, const std::vector<int>& other, int c, int& common) {
    if (mine[c] <= other[c]) --common;
    --mine[c];
  }
  static void inc(std::vector<int>& mine, const std::vector<int>& other, int c, int& common) {
    if (mine[c] < other[c]) ++common;
    ++mine[c];
  }

  void apply(int u, int t) {
    done_[u] = 1;
    img_[u] = t;
    --rem_g_;
    dec(cnt_g_, cnt_r_, g_class_[u], node_common_);
    for (int w : g_.adj[u]) {
      if (!done_[w] || w == u) continue;
      for (int l : g_.lab[u][w]) dec(ecnt_g_, ecnt_r_, l, edge_common_), --erem_g_;
      for (int l : g_.lab[w][u]) dec(ecnt_g_, ecnt_r_, l, edge_common_), --erem_g_;
    }
    if (t == kDeleted) return;
    pre_[t] = u;
    --rem_r_;
    dec(cnt_r_, cnt_g_, r_class_[t], node_common_);
    for (int s : r_.adj[t]) {
      if (pre_[s] < 0 || s == t) continue;
      for (int l : r_.lab[t][s]) dec(ecnt_r_, ecnt_g_, l, edge_common_), --erem_r_;
      for (int l : r_.lab[s][t]) dec(ecnt_r_, ecnt_g_, l, edge_common_), --erem_r_;
    }
  }

  void undo(int u, int t) {
    if (t != kDeleted) {
      for (int s : r_.adj[t]) {
        if (pre_[s] < 0 || s == t) continue;
        for (int l : r_.lab[t][s]) inc(ecnt_r_, ecnt_g_, l, edge_common_), ++erem_r_;
        for (int l : r_.lab[s][t]) inc(ecnt_r_, ecnt_g_, l, edge_common_), ++erem_r_;
      }
      inc(cnt_r_, cnt_g_, r_class_[t], node_common_);
      ++rem_r_;
      pre_[t] = kUnset;
    }
    for (int w : g_.adj[u]) {
      if (!done_[w] || w == u) continue;
      for (int l : g_.lab[u][w]) inc(ecnt_g_, ecnt_r_, l, edge_common_), ++erem_g_;
      for (int l : g_.lab[w][u]) inc(ecnt_g_, ecnt_r_, l, edge_common_), ++erem_g_;
    }
    inc(cnt_g_, cnt_r_, g_class_[u], node_common_);
    ++rem_g_;
    img_[u] = kUnset;
    done_[u] = 0;
  }

  bool out_of_time() {
    if (timed_out_) return true;
    if ((++expanded_ & 255u) == 0 && std::chrono::steady_clock::now() >= deadline_) timed_out_ = true;
    return timed_out_;
  }

  void dfs(std::size_t depth, int cost) {
    if (out_of_time()) return;
    if (depth == order_.size()) {
      // Remaining ref nodes and every ref edge touching them get inserted.
      int total = cost + rem_r_ + erem_r_;
      if (total < best_) {
        best_ = total;
        best_img_ = img_;
      }
      return;
    }
    const int u = order_[depth];
    std::vector<std::pair<int, int>> options;  // (step cost, target)
    options.reserve(r_.size() + 1);
    for (int t = 0; t < r_.size(); ++t) {
      if (pre_[t] == kUnset) options.emplace_back(step_cost(u, t), t);
    }
    options.emplace_back(step_cost(u, kDeleted), kDeleted);
    std::stable_sort(options.begin(), options.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [step, t] : options) {
      if (cost + step >= best_) break;  // sorted: nothing cheaper follows
      apply(u, t);
      if (cost + step + lower_bound() < best_) dfs(depth + 1, cost + step);
      undo(u, t);
      if (timed_out_) return;
    }
  }

  const Graph& g_;
  const Graph& r_;
  std::vector<std::vector<int>> cost_;
  std::vector<int> order_;
  std::vector<int> img_, pre_;
  std::vector<char> done_;
  std::vector<int> g_class_, r_class_, cnt_g_, cnt_r_, ecnt_g_, ecnt_r_;
  int node_common_ = 0, edge_common_ = 0;
  int rem_g_ = 0, rem_r_ = 0, erem_g_ = 0, erem_r_ = 0;
  int best_ = std::numeric_limits<int>::max();
  std::vector<int> best_img_;
  std::chrono::steady_clock::time_point deadline_;
  bool timed_out_ = false;
  std::uint64_t expanded_ = 0;
};

std::string edge_text(const Edge& e) { return e.from.str() + " -> " + e.to.str(); }

// Pairs up the edges between one mapped node pair: identical labels are
// free, leftovers are substituted pairwise, the rest deleted or inserted.
void script_edges(const std::vector<const Edge*>& gen, const std::vector<const Edge*>& ref,
                  std::vector<EditOp>& ops) {
  std::vector<char> used(ref.size(), 0);
  std::vector<const Edge*> left;
  for (const Edge* e : gen) {
    bool matched = false;
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (!used[j] && ref[j]->from.port == e->from.port && ref[j]->to.port == e->to.port) {
        used[j] = 1;
        matched = true;
        break;
      }
    }
    if (!matched) left.push_back(e);
  }
  std::vector<const Edge*> right;
  for (std::size_t j = 0; j < ref.size(); ++j) {
    if (!used[j]) right.push_back(ref[j]);
  }
  std::size_t k = 0;
  for (; k < left.size() && k < right.size(); ++k) {
    ops.push_back({EditKind::Substitute, EditEntity::Edge, edge_text(*left[k]) + " => " + edge_text(*right[k]), {}});
  }
  for (std::size_t i = k; i < left.size(); ++i) {
    ops.push_back({EditKind::Delete, EditEntity::Edge, edge_text(*left[i]), {}});
  }
  for (std::size_t i = k; i < right.size(); ++i) {
    ops.push_back({EditKind::Insert, EditEntity::Edge, edge_text(*right[i]), {}});
  }
}

std::vector<EditOp> edit_script(const Graph& g, const Graph& r, const std::vector<int>& img,
                                const std::vector<std::vector<int>>& cost) {
  std::vector<EditOp> ops;
  std::vector<int> pre(r.size(), kUnset);
  for (int u = 0; u < g.size(); ++u) {
    if (img[u] >= 0) pre[img[u]] = u;
  }
  for (int u = 0; u < g.size(); ++u) {
    const Node& a = *g.nodes[u];
    if (img[u] == kDeleted) {
      ops.push_back({EditKind::Delete, EditEntity::Node, a.id, {}});
    } else if (cost[u][img[u]] != 0) {
      const Node& b = *r.nodes[img[u]];
      ops.push_back({EditKind::Substitute, EditEntity::Node, a.id + " => " + b.id, substitution_cause(a, b)});
    }
  }
  for (int v = 0; v < r.size(); ++v) {
    if (pre[v] == kUnset) ops.push_back({EditKind::Insert, EditEntity::Node, r.nodes[v]->id, {}});
  }

  std::map<std::pair<int, int>, std::vector<const Edge*>> gen_edges, ref_edges;
  for (const auto& [uv, e] : g.edges) {
    auto [u, v] = uv;
    if (img[u] < 0 || img[v] < 0) {
      ops.push_back({EditKind::Delete, EditEntity::Edge, edge_text(*e), {}});
    } else {
      gen_edges[{img[u], img[v]}].push_back(e);
    }
  }
  for (const auto& [uv, e] : r.edges) {
    auto [s, t] = uv;
    if (pre[s] == kUnset || pre[t] == kUnset) {
      ops.push_back({EditKind::Insert, EditEntity::Edge, edge_text(*e), {}});
    } else {
      ref_edges[{s, t}].push_back(e);
    }
  }
  std::set<std::pair<int, int>> keys;
  for (const auto& [k, v] : gen_edges) keys.insert(k);
  for (const auto& [k, v] : ref_edges) keys.insert(k);
  for (const auto& k : keys) script_edges(gen_edges[k], ref_edges[k], ops);
  return ops;
}

}  // namespace

void MatchConfig::check() const {
  if (!(prompt_similarity_threshold >= 0.0 && prompt_similarity_threshold <= 1.0)) {
    throw std::invalid_argument("prompt_similarity_threshold must lie in [0, 1]");
  }
  if (!(edit_cost > 0.0)) throw std::invalid_argument("edit_cost must be positive");
  if (!(time_budget.count() > 0.0)) throw std::invalid_argument("time_budget must be positive");
}

bool node_match(const Node& a, const Node& b, const MatchConfig& cfg) { return NodeMatcher(cfg)(a, b); }

bool edge_match(const Edge& a, const Edge& b, const NodeMapping& mapping) {
  auto from = mapping.find(a.from.node);
  auto to = mapping.find(a.to.node);
  if (from == mapping.end() || to == mapping.end()) return false;
  return from->second == b.from.node && to->second == b.to.node && a.from.port == b.from.port &&
         a.to.port == b.to.port;
}

ExactMatchResult exact_match(const Pipeline& gen, const Pipeline& ref, const MatchConfig& cfg) {
  LabelTable labels;
  Graph g = index_graph(gen, labels);
  Graph r = index_graph(ref, labels);
  if (g.size() != r.size() || g.edge_count() != r.edge_count()) return {};
  if (g.size() == 0) return {true, {}};
  Vf2 vf2(g, r, node_costs(g, r, cfg));
  if (!vf2.run()) return {};
  return {true, vf2.witness()};
}

SubstitutionCause substitution_cause(const Node& a, const Node& b) {
  if (a.kind != b.kind) return SubstitutionCause::WrongNodeType;
  if (a.kind == NodeKind::Function && lower(a.function_id) != lower(b.function_id)) {
    return SubstitutionCause::WrongFunction;
  }
  if (a.kind == NodeKind::GenericLLM || a.kind == NodeKind::Script) {
    if (a.input_ports != b.input_ports || a.output_ports != b.output_ports) {
      return SubstitutionCause::ParameterMismatch;
    }
    return SubstitutionCause::PayloadMismatch;
  }
  return SubstitutionCause::ParameterMismatch;
}

GedResult ged(const Pipeline& gen, const Pipeline& ref, const MatchConfig& cfg) {
  cfg.check();
  LabelTable labels;
  Graph g = index_graph(gen, labels);
  Graph r = index_graph(ref, labels);
  auto cost = node_costs(g, r, cfg);
  GedSearch search(g, r, cost, cfg.time_budget);
  search.run();

  GedResult result;
  result.edit_script = edit_script(g, r, search.assignment(), cost);
  result.distance = cfg.edit_cost * static_cast<double>(result.edit_script.size());
  const double denom = static_cast<double>(r.size() + r.edge_count());
  result.normalized = result.distance == 0.0 ? 0.0 : result.distance / std::max(1.0, denom);
  result.timed_out = search.timed_out();
  result.expanded_states = search.expanded();
  return result;
}

std::string_view to_string(EditKind k) noexcept {
  switch (k) {
    case EditKind::Insert: return "insert";
    case EditKind::Delete: return "delete";
    case EditKind::Substitute: return "substitute";
  }
  return "insert";
}

std::string_view to_string(EditEntity e) noexcept { return e == EditEntity::Node ? "node" : "edge"; }

std::string_view to_string(SubstitutionCause c) noexcept {
  switch (c) {
    case SubstitutionCause::ParameterMismatch: return "parameter_mismatch";
    case SubstitutionCause::WrongFunction: return "wrong_function";
    case SubstitutionCause::WrongNodeType: return "wrong_node_type";
    case SubstitutionCause::PayloadMismatch: return "payload_mismatch";
  }
  return "parameter_mismatch";
}

namespace {

std::map<std::string, double> shares(const std::map<std::string, std::size_t>& counts, std::size_t total) {
  std::map<std::string, double> out;
  if (total == 0) return out;
  for (const auto& [k, v] : counts) out[k] = static_cast<double>(v) / static_cast<double>(total);
  return out;
}

}  // namespace

std::map<std::string, double> EditHistogram::kind_shares() const { return shares(by_kind, total_operations); }
std::map<std::string, double> EditHistogram::operation_shares() const {
  return shares(by_operation, total_operations);
}
std::map<std::string, double> EditHistogram::cause_shares() const { return shares(by_cause, total_substitutions); }

EditHistogram error_breakdown(const std::vector<GedResult>& results) {
  EditHistogram h;
  for (const auto& r : results) {
    for (const auto& op : r.edit_script) {
      ++h.by_kind[std::string(to_string(op.kind))];
      ++h.by_operation[std::string(to_string(op.kind)) + "_" + std::string(to_string(op.entity))];
      ++h.total_operations;
      if (op.cause) {
        ++h.by_cause[std::string(to_string(*op.cause))];
        ++h.total_substitutions;
      }
    }
  }
  return h;
}

nlohmann::json ged_to_json(const GedResult& r) {
  nlohmann::json script = nlohmann::json::array();
  for (const auto& op : r.edit_script) {
    nlohmann::json j = {{"kind", std::string(to_string(op.kind))}, {"entity", std::string(to_string(op.entity))}, {"detail", op.detail}};
    if (op.cause) j["cause"] = std::string(to_string(*op.cause));
    script.push_back(std::move(j));
  }
  return {{"distance", r.distance},
          {"normalized", r.normalized},
          {"timed_out", r.timed_out},
          {"edit_script", std::move(script)}};
}

}  // namespace pipewright
