#include <cctype>
#include <map>
#include <sstream>

#include "pipewright/error.hpp"
#include "pipewright/pipeline_io.hpp"

namespace pipewright {
namespace {

using nlohmann::json;
using Attrs = std::map<std::string, std::string>;

enum class Tok { Id, Str, LBrace, RBrace, LBracket, RBracket, Eq, Semi, Comma, Arrow, UndirEdge, End };

struct Token {
  Tok kind;
  std::string text;
  int line;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space_and_comments();
    if (pos_ >= src_.size()) return {Tok::End, "", line_};
    char c = src_[pos_];
    const int line = line_;
    switch (c) {
      case '{': ++pos_; return {Tok::LBrace, "{", line};
      case '}': ++pos_; return {Tok::RBrace, "}", line};
      case '[': ++pos_; return {Tok::LBracket, "[", line};
      case ']': ++pos_; return {Tok::RBracket, "]", line};
      case '=': ++pos_; return {Tok::Eq, "=", line};
      case ';': ++pos_; return {Tok::Semi, ";", line};
      case ',': ++pos_; return {Tok::Comma, ",", line};
      case '"': return quoted();
      default: break;
    }
    if (c == '-' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == '>' || src_[pos_ + 1] == '-')) {
      pos_ += 2;
      return {src_[pos_ - 1] == '>' ? Tok::Arrow : Tok::UndirEdge, std::string(src_.substr(pos_ - 2, 2)), line};
    }
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-') {
      std::size_t start = pos_;
      while (pos_ < src_.size()) {
        char d = src_[pos_];
        if (!(std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '.' || d == '-')) break;
        if (d == '-' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == '>' || src_[pos_ + 1] == '-')) break;
        ++pos_;
      }
      return {Tok::Id, std::string(src_.substr(start, pos_ - start)), line};
    }
    throw ParseError("line " + std::to_string(line), std::string("unexpected character '") + c + "'");
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#' && at_line_start()) {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (src_.substr(pos_, 2) == "//") {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (src_.substr(pos_, 2) == "/*") {
        auto end = src_.find("*/", pos_ + 2);
        if (end == std::string_view::npos) {
          throw ParseError("line " + std::to_string(line_), "unterminated comment");
        }
        for (std::size_t i = pos_; i < end; ++i) line_ += src_[i] == '\n';
        pos_ = end + 2;
      } else {
        return;
      }
    }
  }

  bool at_line_start() const {
    for (std::size_t i = pos_; i-- > 0;) {
      if (src_[i] == '\n') return true;
      if (!std::isspace(static_cast<unsigned char>(src_[i]))) return false;
    }
    return true;
  }

  Token quoted() {
    const int line = line_;
    ++pos_;
    std::string out;
    while (pos_ < src_.size() && src_[pos_] != '"') {
      char c = src_[pos_++];
      if (c == '\n') ++line_;
      if (c == '\\' && pos_ < src_.size()) {
        char e = src_[pos_++];
        switch (e) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          case '\n': ++line_; break;  // line continuation
          default: out += '\\'; out += e; break;
        }
      } else {
        out += c;
      }
    }
    if (pos_ >= src_.size()) throw ParseError("line " + std::to_string(line), "unterminated string");
    ++pos_;
    return {Tok::Str, out, line};
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

struct DotNode {
  std::string id;
  Attrs attrs;
  int line;
};

struct DotEdge {
  std::string from;
  std::string to;
  Attrs attrs;
  int line;
};

struct DotGraph {
  Attrs graph_attrs;
  std::vector<DotNode> nodes;
  std::vector<DotEdge> edges;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { advance(); }

  DotGraph parse() {
    if (is_keyword("strict")) advance();
    if (!is_keyword("digraph")) fail("expected 'digraph'");
    advance();
    if (cur_.kind == Tok::Id || cur_.kind == Tok::Str) advance();
    expect(Tok::LBrace, "'{'");
    while (cur_.kind != Tok::RBrace) {
      if (cur_.kind == Tok::End) fail("unexpected end of input, expected '}'");
      statement();
      if (cur_.kind == Tok::Semi || cur_.kind == Tok::Comma) advance();
    }
    advance();
    if (cur_.kind != Tok::End) fail("trailing content after graph");
    return std::move(graph_);
  }

 private:
  void statement() {
    if (is_keyword("subgraph") || cur_.kind == Tok::LBrace) fail("subgraphs are not supported");
    if (is_keyword("graph") || is_keyword("node") || is_keyword("edge")) {
      std::string which = lower(cur_.text);
      advance();
      Attrs a = attr_lists();
      Attrs& target = which == "graph" ? graph_.graph_attrs : which == "node" ? node_defaults_ : edge_defaults_;
      for (auto& [k, v] : a) target[k] = v;
      return;
    }
    if (cur_.kind != Tok::Id && cur_.kind != Tok::Str) fail("expected a statement");
    Token first = cur_;
    advance();
    if (cur_.kind == Tok::Eq) {
      advance();
      graph_.graph_attrs[first.text] = value();
      return;
    }
    if (cur_.kind == Tok::UndirEdge) fail("undirected edge '--' in a digraph");
    if (cur_.kind == Tok::Arrow) {
      std::vector<std::string> chain{first.text};
      while (cur_.kind == Tok::Arrow) {
        advance();
        if (cur_.kind != Tok::Id && cur_.kind != Tok::Str) fail("expected a node id after '->'");
        chain.push_back(cur_.text);
        advance();
      }
      Attrs a = edge_defaults_;
      for (auto& [k, v] : attr_lists()) a[k] = v;
      for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        graph_.edges.push_back({chain[i], chain[i + 1], a, first.line});
      }
      return;
    }
    Attrs a = node_defaults_;
    for (auto& [k, v] : attr_lists()) a[k] = v;
    graph_.nodes.push_back({first.text, std::move(a), first.line});
  }

  Attrs attr_lists() {
    Attrs out;
    while (cur_.kind == Tok::LBracket) {
      advance();
      while (cur_.kind != Tok::RBracket) {
        if (cur_.kind != Tok::Id && cur_.kind != Tok::Str) fail("expected an attribute name");
        std::string key = cur_.text;
        advance();
        expect(Tok::Eq, "'='");
        out[key] = value();
        if (cur_.kind == Tok::Comma || cur_.kind == Tok::Semi) advance();
      }
      advance();
    }
    return out;
  }

  std::string value() {
    if (cur_.kind != Tok::Id && cur_.kind != Tok::Str) fail("expected an attribute value");
    std::string v = cur_.text;
    advance();
    return v;
  }

  static std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  }

  bool is_keyword(std::string_view kw) const { return cur_.kind == Tok::Id && lower(cur_.text) == kw; }
  void advance() { cur_ = lex_.next(); }
  void expect(Tok k, const char* what) {
    if (cur_.kind != k) fail(std::string("expected ") + what);
    advance();
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("line " + std::to_string(cur_.line), msg);
  }

  Lexer lex_;
  Token cur_{Tok::End, "", 1};
  DotGraph graph_;
  Attrs node_defaults_;
  Attrs edge_defaults_;
};

std::map<std::string, std::string> decode_pairs(std::string_view text, const std::string& loc) {
  std::map<std::string, std::string> out;
  std::size_t start = 0;
  while (start <= text.size() && !text.empty()) {
    auto amp = text.find('&', start);
    auto piece = text.substr(start, amp == std::string_view::npos ? std::string_view::npos : amp - start);
    if (!piece.empty()) {
      auto eq = piece.find('=');
      if (eq == std::string_view::npos) throw ParseError(loc, "expected key=value in '" + std::string(piece) + "'");
      out[url_decode(piece.substr(0, eq))] = url_decode(piece.substr(eq + 1));
    }
    if (amp == std::string_view::npos) break;
    start = amp + 1;
  }
  return out;
}

std::string encode_pairs(const std::map<std::string, std::string>& m) {
  std::string out;
  for (const auto& [k, v] : m) {
    if (!out.empty()) out += '&';
    out += url_encode(k) + "=" + url_encode(v);
  }
  return out;
}

json decode_ports(std::string_view text, const std::string& loc) {
  json arr = json::array();
  std::size_t start = 0;
  while (start < text.size()) {
    auto comma = text.find(',', start);
    auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    auto colon = piece.find(':');
    if (colon == std::string_view::npos) throw ParseError(loc, "expected name:modality in '" + std::string(piece) + "'");
    arr.push_back({{"name", std::string(piece.substr(0, colon))}, {"modality", std::string(piece.substr(colon + 1))}});
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return arr;
}

std::string encode_ports(const std::vector<Port>& ports) {
  std::string out;
  for (const auto& p : ports) {
    if (!out.empty()) out += ',';
    out += p.name + ":" + std::string(to_string(p.modality));
  }
  return out;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string url_encode(std::string_view s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    }
  }
  return out;
}

std::string url_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%') {
      if (i + 2 >= s.size() || !std::isxdigit(static_cast<unsigned char>(s[i + 1])) ||
          !std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
        throw ParseError("", "malformed percent escape in '" + std::string(s) + "'");
      }
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

Pipeline parse_pipeline_dot(std::string_view text, const FunctionCatalog& catalog) {
  DotGraph g = Parser(text).parse();
  json doc = {{"nodes", json::array()}, {"edges", json::array()}};

  std::map<std::string, std::size_t> declared;
  for (const auto& n : g.nodes) {
    const std::string loc = "line " + std::to_string(n.line);
    json* target = nullptr;
    if (auto it = declared.find(n.id); it != declared.end()) {
      target = &doc["nodes"][it->second];  // repeated statements merge attributes
    } else {
      declared[n.id] = doc["nodes"].size();
      doc["nodes"].push_back({{"id", n.id}});
      target = &doc["nodes"].back();
    }
    json& j = *target;
    for (const auto& [key, value] : n.attrs) {
      if (key == "kind" || key == "function" || key == "payload" || key == "model") {
        j[key] = value;
      } else if (key == "params") {
        j["params"] = decode_pairs(value, loc);
      } else if (key == "inputs" || key == "outputs") {
        j[key] = decode_ports(value, loc);
      } else if (key == "unresolved") {
        j["unresolved"] = value == "true";
      }
      // Anything else (label, shape, color, ...) is presentation only.
    }
    if (!j.contains("kind")) throw ParseError(loc, "node '" + n.id + "' is missing required attribute 'kind'");
  }
  for (const auto& e : g.edges) {
    const std::string loc = "line " + std::to_string(e.line);
    auto it = e.attrs.find("ports");
    if (it == e.attrs.end()) {
      throw ParseError(loc, "edge " + e.from + " -> " + e.to + " is missing required attribute 'ports'");
    }
    auto arrow = it->second.find("->");
    if (arrow == std::string::npos || arrow == 0 || arrow + 2 == it->second.size()) {
      throw ParseError(loc, "ports attribute must look like 'out->in'");
    }
    doc["edges"].push_back({{"from", e.from + "." + it->second.substr(0, arrow)},
                            {"to", e.to + "." + it->second.substr(arrow + 2)}});
  }
  if (auto it = g.graph_attrs.find("metadata"); it != g.graph_attrs.end()) {
    doc["metadata"] = decode_pairs(it->second, "graph metadata");
  }
  return pipeline_from_json(doc, catalog, "dot");
}

std::string serialize_pipeline_dot(const Pipeline& input) {
  Pipeline p = input;
  p.canonicalize();
  std::ostringstream out;
  out << "digraph pipeline {\n  rankdir=LR;\n";
  if (!p.metadata.empty()) out << "  metadata=" << quote(encode_pairs(p.metadata)) << ";\n";
  for (const auto& n : p.nodes) {
    out << "  " << quote(n.id) << " [kind=" << quote(to_string(n.kind));
    if (n.kind == NodeKind::Function) {
      out << ", function=" << quote(n.function_id);
    } else {
      out << ", inputs=" << quote(encode_ports(n.input_ports)) << ", outputs=" << quote(encode_ports(n.output_ports));
    }
    if (!n.params.empty()) out << ", params=" << quote(encode_pairs(n.params));
    if (!n.payload.empty()) out << ", payload=" << quote(n.payload);
    if (n.model_id) out << ", model=" << quote(*n.model_id);
    if (n.unresolved) out << ", unresolved=\"true\"";
    std::string label = n.kind == NodeKind::Function ? n.function_id : std::string(to_string(n.kind));
    out << ", label=" << quote(n.id + "\n" + label) << "];\n";
  }
  for (const auto& e : p.edges) {
    out << "  " << quote(e.from.node) << " -> " << quote(e.to.node)
        << " [ports=" << quote(e.from.port + "->" + e.to.port) << "];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace pipewright
