#include "stg/document.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace stg {

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
  case ParseErrorKind::Syntax:
    return "syntax";
  case ParseErrorKind::UnknownReference:
    return "unknown-reference";
  case ParseErrorKind::DuplicateId:
    return "duplicate-id";
  case ParseErrorKind::SchemaViolation:
    return "schema-violation";
  }
  return "syntax";
}

std::string format_error(const ParseError &error, std::string_view filename) {
  std::ostringstream out;
  out << filename << ':' << error.span.line << ':' << error.span.column << ": " << to_string(error.kind) << ": "
      << error.message;
  return out.str();
}

namespace {

using json::Value;
using Type = json::Value::Type;

class Collector {
public:
  explicit Collector(const ParseOptions &options) : m_options(options) {}

  void error(const SourceSpan &span, ParseErrorKind kind, std::string message) {
    errors.push_back({span, kind, std::move(message)});
  }

  void schema(const SourceSpan &span, std::string message) {
    error(span, ParseErrorKind::SchemaViolation, std::move(message));
  }

  /// Checks the value type; reports and returns false on mismatch.
  bool expect(const Value &v, Type type, std::string_view what) {
    if (v.type == type) {
      return true;
    }
    schema(v.span, std::string(what) + " must be " + std::string(json::type_name(type)) + ", found " +
                       std::string(json::type_name(v.type)));
    return false;
  }

  void allowed_keys(const Value &object, std::initializer_list<std::string_view> keys, std::string_view where) {
    std::set<std::string_view> seen;
    for (const auto &m : object.object) {
      if (!seen.insert(m.key).second) {
        error(m.key_span, ParseErrorKind::DuplicateId, "duplicate key '" + m.key + "' in " + std::string(where));
        continue;
      }
      if (m_options.strict && std::find(keys.begin(), keys.end(), m.key) == keys.end()) {
        schema(m.key_span, "unknown key '" + m.key + "' in " + std::string(where));
      }
    }
  }

  const Value *required(const Value &object, std::string_view key, Type type, std::string_view where) {
    const Value *v = object.get(key);
    if (v == nullptr) {
      schema(object.span, std::string(where) + " is missing required key '" + std::string(key) + "'");
      return nullptr;
    }
    return expect(*v, type, std::string(where) + "." + std::string(key)) ? v : nullptr;
  }

  const Value *optional(const Value &object, std::string_view key, Type type, std::string_view where) {
    const Value *v = object.get(key);
    if (v == nullptr) {
      return nullptr;
    }
    return expect(*v, type, std::string(where) + "." + std::string(key)) ? v : nullptr;
  }

  std::optional<std::int64_t> integer(const Value &v, std::string_view what, std::int64_t min) {
    if (!expect(v, Type::Integer, what)) {
      return std::nullopt;
    }
    if (v.integer < min) {
      schema(v.span, std::string(what) + " must be >= " + std::to_string(min));
      return std::nullopt;
    }
    return v.integer;
  }

  std::vector<int> rates(const Value *array, std::string_view what) {
    std::vector<int> out;
    if (array == nullptr) {
      return out;
    }
    for (const auto &e : array->array) {
      auto r = integer(e, what, 1);
      if (r && *r > 1'000'000) {
        schema(e.span, std::string(what) + " is unreasonably large");
        r.reset();
      }
      out.push_back(r ? static_cast<int>(*r) : 1);
    }
    return out;
  }

  std::vector<ParseError> errors;

private:
  const ParseOptions &m_options;
};

std::optional<std::size_t> parse_index(std::string_view text) {
  if (text.empty() || text.size() > 9) {
    return std::nullopt;
  }
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return value;
}

// "node" or "node.port"
std::pair<std::string, std::optional<std::size_t>> split_endpoint(const std::string &text) {
  auto dot = text.rfind('.');
  if (dot != std::string::npos) {
    if (auto port = parse_index(std::string_view(text).substr(dot + 1))) {
      return {text.substr(0, dot), port};
    }
  }
  return {text, 0};
}

struct NodeDraft {
  const Value *id_value = nullptr;
  const Value *ops_value = nullptr;
};

void parse_ops(Collector &c, const Value &node_value, const Value &ops, const Value *outputs, CompositeNode &node,
               const LatencyProfile &profile) {
  OpGraph graph;
  std::map<std::string, std::size_t> index;
  // First pass: ids, kinds and scalar fields.
  for (const auto &op_value : ops.array) {
    OpNode op;
    if (!c.expect(op_value, Type::Object, "op")) {
      graph.ops.push_back(op);
      continue;
    }
    c.allowed_keys(op_value, {"id", "kind", "args", "latency", "value", "table"}, "op");
    if (const auto *id = c.required(op_value, "id", Type::String, "op")) {
      op.id = id->text;
      if (op.id.starts_with(kStructuralPrefix)) {
        c.schema(id->span, "op id '" + op.id + "' uses the reserved prefix");
      } else if (op.id.empty() || op.id.starts_with("$")) {
        c.schema(id->span, "op id must be non-empty and must not start with '$'");
      } else if (!index.emplace(op.id, graph.ops.size()).second) {
        c.error(id->span, ParseErrorKind::DuplicateId, "duplicate op id '" + op.id + "' in node '" + node.id + "'");
      }
    }
    if (const auto *kind = c.required(op_value, "kind", Type::String, "op")) {
      auto k = parse_op_kind(kind->text);
      if (!k) {
        c.schema(kind->span, "unknown op kind '" + kind->text + "'");
      } else if (is_structural(*k)) {
        c.schema(kind->span, "op kind " + kind->text + " is reserved for synthesized fork/join nodes");
      } else {
        op.kind = *k;
      }
    }
    op.latency = profile[op.kind];
    if (const auto *lat = c.optional(op_value, "latency", Type::Integer, "op")) {
      if (auto l = c.integer(*lat, "op.latency", 1)) {
        op.latency = static_cast<int>(std::min<std::int64_t>(*l, 1'000'000));
      }
    }
    if (const auto *val = c.optional(op_value, "value", Type::Integer, "op")) {
      op.value = val->integer;
    }
    if (const auto *table = c.optional(op_value, "table", Type::Array, "op")) {
      for (const auto &t : table->array) {
        if (c.expect(t, Type::Integer, "op.table entry")) {
          op.table.push_back(t.integer);
        }
      }
    }
    graph.ops.push_back(std::move(op));
  }
  // Second pass: operands, now that every op id is known.
  for (std::size_t i = 0; i < ops.array.size(); ++i) {
    const auto &op_value = ops.array[i];
    if (op_value.type != Type::Object) {
      continue;
    }
    const auto *args = c.optional(op_value, "args", Type::Array, "op");
    if (args == nullptr) {
      continue;
    }
    for (const auto &a : args->array) {
      if (!c.expect(a, Type::String, "op argument")) {
        continue;
      }
      OpArg arg;
      const std::string &t = a.text;
      if (t == "$iter") {
        arg.kind = OpArg::Kind::Iteration;
      } else if (t.starts_with("$")) {
        arg.kind = OpArg::Kind::Port;
        auto body = std::string_view(t).substr(1);
        auto dot = body.find('.');
        auto port = parse_index(body.substr(0, dot));
        auto token = dot == std::string_view::npos ? std::optional<std::size_t>(0) : parse_index(body.substr(dot + 1));
        if (!port || !token) {
          c.schema(a.span, "malformed input reference '" + t + "'");
          continue;
        }
        arg.port = *port;
        arg.token = *token;
        if (arg.port >= node.in_rates.size() || static_cast<int>(arg.token) >= node.in_rates[arg.port]) {
          c.schema(a.span, "input reference '" + t + "' is outside the node's input rates");
        }
      } else {
        auto it = index.find(t);
        if (it == index.end()) {
          c.error(a.span, ParseErrorKind::UnknownReference, "unknown op '" + t + "' in node '" + node.id + "'");
          continue;
        }
        arg.op = it->second;
      }
      graph.ops[i].args.push_back(arg);
    }
  }
  if (outputs == nullptr) {
    c.schema(node_value.span, "node '" + node.id + "' has ops but no 'outputs' list");
  } else {
    for (const auto &o : outputs->array) {
      if (!c.expect(o, Type::String, "output")) {
        continue;
      }
      auto it = index.find(o.text);
      if (it == index.end()) {
        c.error(o.span, ParseErrorKind::UnknownReference, "unknown op '" + o.text + "' in outputs of '" + node.id + "'");
        continue;
      }
      graph.outputs.push_back(it->second);
    }
  }
  node.graph = std::move(graph);
}

json::Value implementation_value(const Implementation &impl) {
  auto v = Value::make_object();
  v.set("version", Value::make_string(impl.version));
  v.set("ii", Value::make_int(impl.ii));
  v.set("area", Value::make_int(impl.area));
  v.set("provenance", Value::make_string(std::string(to_string(impl.provenance))));
  return v;
}

} // namespace

ParseResult<Document> parse_document(std::string_view text, const ParseOptions &options) {
  ParseResult<Document> result;
  Collector c(options);
  Value root;
  try {
    root = json::parse(text);
  } catch (const json::SyntaxError &e) {
    result.errors.push_back({e.span, ParseErrorKind::Syntax, e.what()});
    return result;
  }
  if (!c.expect(root, Type::Object, "document")) {
    result.errors = std::move(c.errors);
    return result;
  }
  c.allowed_keys(root, {"profile", "nodes", "channels", "library"}, "document");

  Document doc;
  if (const auto *profile = c.optional(root, "profile", Type::Object, "document")) {
    for (const auto &m : profile->object) {
      auto kind = parse_op_kind(m.key);
      if (!kind) {
        c.schema(m.key_span, "unknown op kind '" + m.key + "' in profile");
        continue;
      }
      if (auto l = c.integer(m.value, "profile latency", 1)) {
        if (is_structural(*kind) && *l != 1) {
          c.schema(m.value.span, "FORK and JOIN latency is fixed at 1");
          continue;
        }
        doc.profile.set(*kind, static_cast<int>(std::min<std::int64_t>(*l, 1'000'000)));
      }
    }
  }

  std::map<std::string, SourceSpan> node_spans;
  std::vector<const Value *> node_values;
  if (const auto *nodes = c.required(root, "nodes", Type::Array, "document")) {
    if (nodes->array.empty()) {
      c.schema(nodes->span, "document declares no nodes");
    }
    for (const auto &nv : nodes->array) {
      if (!c.expect(nv, Type::Object, "node")) {
        continue;
      }
      c.allowed_keys(nv, {"id", "in_rates", "out_rates", "stateless", "ops", "outputs"}, "node");
      CompositeNode node;
      const auto *id = c.required(nv, "id", Type::String, "node");
      if (id == nullptr) {
        continue;
      }
      node.id = id->text;
      if (node.id.empty()) {
        c.schema(id->span, "node id must not be empty");
      } else if (node.id.starts_with(kStructuralPrefix)) {
        c.schema(id->span, "node id '" + node.id + "' uses the reserved prefix");
      }
      if (node_spans.count(node.id)) {
        c.error(id->span, ParseErrorKind::DuplicateId, "duplicate node id '" + node.id + "'");
        continue;
      }
      node_spans.emplace(node.id, id->span);
      node.in_rates = c.rates(c.optional(nv, "in_rates", Type::Array, "node"), "in_rates entry");
      node.out_rates = c.rates(c.optional(nv, "out_rates", Type::Array, "node"), "out_rates entry");
      if (const auto *st = c.optional(nv, "stateless", Type::Bool, "node")) {
        node.stateless = st->boolean;
      }
      if (const auto *ops = c.optional(nv, "ops", Type::Array, "node")) {
        parse_ops(c, nv, *ops, c.optional(nv, "outputs", Type::Array, "node"), node, doc.profile);
      } else if (const auto *outs = nv.member("outputs")) {
        c.schema(outs->key_span, "'outputs' given without 'ops'");
      }
      doc.app.nodes.push_back(std::move(node));
      node_values.push_back(&nv);
    }
  }

  if (const auto *channels = c.optional(root, "channels", Type::Array, "document")) {
    for (const auto &cv : channels->array) {
      if (!c.expect(cv, Type::Object, "channel")) {
        continue;
      }
      c.allowed_keys(cv, {"from", "to"}, "channel");
      const auto *from = c.required(cv, "from", Type::String, "channel");
      const auto *to = c.required(cv, "to", Type::String, "channel");
      if (from == nullptr || to == nullptr) {
        continue;
      }
      Channel ch;
      bool ok = true;
      auto resolve = [&](const Value &endpoint, bool output, PortRef &ref) {
        auto [id, port] = split_endpoint(endpoint.text);
        auto n = doc.app.find(id);
        if (!n) {
          c.error(endpoint.span, ParseErrorKind::UnknownReference, "channel references undeclared node '" + id + "'");
          ok = false;
          return;
        }
        const auto &node = doc.app.nodes[*n];
        auto ports = output ? node.num_out() : node.num_in();
        if (*port >= ports) {
          c.schema(endpoint.span, std::string(output ? "output" : "input") + " port " + std::to_string(*port) +
                                      " does not exist on node '" + id + "'");
          ok = false;
          return;
        }
        ref = PortRef{*n, *port};
      };
      resolve(*from, true, ch.from);
      resolve(*to, false, ch.to);
      if (ok) {
        doc.app.channels.push_back(ch);
      }
    }
  }

  if (const auto *library = c.optional(root, "library", Type::Object, "document")) {
    for (const auto &m : library->object) {
      if (!doc.app.find(m.key)) {
        c.error(m.key_span, ParseErrorKind::UnknownReference, "library entry for undeclared node '" + m.key + "'");
        continue;
      }
      if (!c.expect(m.value, Type::Array, "library entry list")) {
        continue;
      }
      if (m.value.array.empty()) {
        c.schema(m.value.span, "library for '" + m.key + "' is empty");
        continue;
      }
      std::vector<Implementation> entries;
      std::set<std::string> versions;
      for (const auto &ev : m.value.array) {
        if (!c.expect(ev, Type::Object, "implementation")) {
          continue;
        }
        c.allowed_keys(ev, {"version", "ii", "area", "provenance"}, "implementation");
        Implementation impl;
        impl.owner = m.key;
        const auto *version = c.required(ev, "version", Type::String, "implementation");
        const auto *ii = c.required(ev, "ii", Type::Integer, "implementation");
        const auto *area = c.required(ev, "area", Type::Integer, "implementation");
        if (version == nullptr || ii == nullptr || area == nullptr) {
          continue;
        }
        impl.version = version->text;
        if (!versions.insert(impl.version).second) {
          c.error(version->span, ParseErrorKind::DuplicateId,
                  "duplicate version '" + impl.version + "' for node '" + m.key + "'");
          continue;
        }
        auto ii_v = c.integer(*ii, "implementation.ii", 1);
        auto area_v = c.integer(*area, "implementation.area", 1);
        if (!ii_v || !area_v) {
          continue;
        }
        impl.ii = *ii_v;
        impl.area = *area_v;
        if (const auto *prov = c.optional(ev, "provenance", Type::String, "implementation")) {
          if (auto p = parse_provenance(prov->text)) {
            impl.provenance = *p;
          } else {
            c.schema(prov->span, "unknown provenance '" + prov->text + "'");
          }
        }
        entries.push_back(std::move(impl));
      }
      std::vector<Implementation> sorted = entries;
      std::stable_sort(sorted.begin(), sorted.end(), [](const auto &a, const auto &b) { return a.ii < b.ii; });
      if (!is_pareto_clean(sorted)) {
        c.schema(m.value.span, "library for '" + m.key + "' contains a dominated or duplicate (ii, area) point");
      }
      doc.library.set(m.key, std::move(entries));
    }
  }

  for (std::size_t i = 0; i < doc.app.nodes.size(); ++i) {
    const auto &node = doc.app.nodes[i];
    if (!node.graph && !doc.library.contains(node.id)) {
      c.schema(node_spans[node.id], "node '" + node.id + "' has neither ops nor library entries");
    }
  }

  if (c.errors.empty()) {
    for (const auto &v : validate_application(doc.app)) {
      SourceSpan span = root.span;
      if (auto it = node_spans.find(v.subject); it != node_spans.end()) {
        span = it->second;
      } else if (const auto *channels = root.member("channels")) {
        span = channels->key_span;
      }
      c.schema(span, v.message);
    }
  }

  result.errors = std::move(c.errors);
  if (result.errors.empty()) {
    result.value = std::move(doc);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Assignments

std::string serialize_assignment(const Assignment &a) {
  auto body = Value::make_object();
  body.set("fan_limit", Value::make_int(a.fan_limit));
  auto &nodes = body.set("nodes", Value::make_array());
  for (const auto &choice : a.choices) {
    auto n = Value::make_object();
    n.set("id", Value::make_string(choice.node));
    n.set("version", Value::make_string(choice.impl.version));
    n.set("ii", Value::make_int(choice.impl.ii));
    n.set("area", Value::make_int(choice.impl.area));
    n.set("provenance", Value::make_string(std::string(to_string(choice.impl.provenance))));
    n.set("replicas", Value::make_int(choice.replicas));
    nodes.push(std::move(n));
  }
  auto &structural = body.set("structural", Value::make_array());
  for (const auto &tree : a.trees) {
    for (const auto &tn : tree.nodes) {
      auto s = Value::make_object();
      s.set("id", Value::make_string(tn.id));
      s.set("kind", Value::make_string(tree.kind == TreeKind::Fork ? "FORK" : "JOIN"));
      s.set("node", Value::make_string(tree.node));
      s.set("port", Value::make_int(static_cast<std::int64_t>(tree.port)));
      s.set("layer", Value::make_int(tn.layer));
      auto range = Value::make_array();
      range.push(Value::make_int(tn.lo));
      range.push(Value::make_int(tn.hi));
      s.set("replicas", std::move(range));
      s.set("parent", tn.parent ? Value::make_string(tree.nodes[*tn.parent].id) : Value::make_null());
      structural.push(std::move(s));
    }
  }
  body.set("node_area", Value::make_int(a.node_area));
  body.set("overhead_area", Value::make_int(a.overhead_area));
  body.set("total_area", Value::make_int(a.total_area));
  auto v = Value::make_array();
  v.push(Value::make_int(a.achieved_v.numerator()));
  v.push(Value::make_int(a.achieved_v.denominator()));
  body.set("achieved_v", std::move(v));
  auto root = Value::make_object();
  root.set("assignment", std::move(body));
  return json::dump(root);
}

ParseResult<Assignment> parse_assignment(std::string_view text, const ParseOptions &options) {
  ParseResult<Assignment> result;
  Collector c(options);
  Value root;
  try {
    root = json::parse(text);
  } catch (const json::SyntaxError &e) {
    result.errors.push_back({e.span, ParseErrorKind::Syntax, e.what()});
    return result;
  }
  Assignment a;
  const Value *body = nullptr;
  if (c.expect(root, Type::Object, "document")) {
    c.allowed_keys(root, {"assignment"}, "document");
    body = c.required(root, "assignment", Type::Object, "document");
  }
  if (body == nullptr) {
    result.errors = std::move(c.errors);
    return result;
  }
  c.allowed_keys(*body, {"fan_limit", "nodes", "structural", "node_area", "overhead_area", "total_area", "achieved_v"},
                 "assignment");
  if (const auto *nf = c.required(*body, "fan_limit", Type::Integer, "assignment")) {
    if (auto v = c.integer(*nf, "fan_limit", 2)) {
      a.fan_limit = static_cast<int>(std::min<std::int64_t>(*v, 1 << 20));
    }
  }
  std::set<std::string> node_ids;
  if (const auto *nodes = c.required(*body, "nodes", Type::Array, "assignment")) {
    if (nodes->array.empty()) {
      c.schema(nodes->span, "assignment has no nodes");
    }
    for (const auto &nv : nodes->array) {
      if (!c.expect(nv, Type::Object, "assignment node")) {
        continue;
      }
      c.allowed_keys(nv, {"id", "version", "ii", "area", "provenance", "replicas"}, "assignment node");
      const auto *id = c.required(nv, "id", Type::String, "assignment node");
      const auto *version = c.required(nv, "version", Type::String, "assignment node");
      const auto *ii = c.required(nv, "ii", Type::Integer, "assignment node");
      const auto *area = c.required(nv, "area", Type::Integer, "assignment node");
      const auto *prov = c.required(nv, "provenance", Type::String, "assignment node");
      const auto *reps = c.required(nv, "replicas", Type::Integer, "assignment node");
      if (!id || !version || !ii || !area || !prov || !reps) {
        continue;
      }
      if (!node_ids.insert(id->text).second) {
        c.error(id->span, ParseErrorKind::DuplicateId, "duplicate assignment node '" + id->text + "'");
        continue;
      }
      NodeChoice choice;
      choice.node = id->text;
      choice.impl.owner = id->text;
      choice.impl.version = version->text;
      auto ii_v = c.integer(*ii, "ii", 1);
      auto area_v = c.integer(*area, "area", 1);
      auto reps_v = c.integer(*reps, "replicas", 1);
      auto p = parse_provenance(prov->text);
      if (!p) {
        c.schema(prov->span, "unknown provenance '" + prov->text + "'");
      }
      if (!ii_v || !area_v || !reps_v || !p) {
        continue;
      }
      choice.impl.ii = *ii_v;
      choice.impl.area = *area_v;
      choice.impl.provenance = *p;
      choice.replicas = *reps_v;
      a.choices.push_back(std::move(choice));
    }
  }
  if (const auto *structural = c.required(*body, "structural", Type::Array, "assignment")) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> where;  // id -> (tree, node)
    for (const auto &sv : structural->array) {
      if (!c.expect(sv, Type::Object, "structural node")) {
        continue;
      }
      c.allowed_keys(sv, {"id", "kind", "node", "port", "layer", "replicas", "parent"}, "structural node");
      const auto *id = c.required(sv, "id", Type::String, "structural node");
      const auto *kind = c.required(sv, "kind", Type::String, "structural node");
      const auto *node = c.required(sv, "node", Type::String, "structural node");
      const auto *port = c.required(sv, "port", Type::Integer, "structural node");
      const auto *layer = c.required(sv, "layer", Type::Integer, "structural node");
      const auto *range = c.required(sv, "replicas", Type::Array, "structural node");
      const auto *parent = sv.get("parent");
      if (parent == nullptr) {
        c.schema(sv.span, "structural node is missing required key 'parent'");
      }
      if (!id || !kind || !node || !port || !layer || !range || !parent) {
        continue;
      }
      if (!id->text.starts_with(kStructuralPrefix)) {
        c.schema(id->span, "structural node id '" + id->text + "' lacks the reserved prefix");
        continue;
      }
      if (where.count(id->text)) {
        c.error(id->span, ParseErrorKind::DuplicateId, "duplicate structural node '" + id->text + "'");
        continue;
      }
      if (kind->text != "FORK" && kind->text != "JOIN") {
        c.schema(kind->span, "structural node kind must be FORK or JOIN");
        continue;
      }
      if (!node_ids.count(node->text)) {
        c.error(node->span, ParseErrorKind::UnknownReference,
                "structural node attached to unknown node '" + node->text + "'");
        continue;
      }
      auto port_v = c.integer(*port, "port", 0);
      auto layer_v = c.integer(*layer, "layer", 1);
      if (!port_v || !layer_v) {
        continue;
      }
      if (range->array.size() != 2 || range->array[0].type != Type::Integer ||
          range->array[1].type != Type::Integer || range->array[0].integer < 0 ||
          range->array[1].integer <= range->array[0].integer) {
        c.schema(range->span, "replicas must be a [lo, hi) pair with lo < hi");
        continue;
      }
      TreeKind tk = kind->text == "FORK" ? TreeKind::Fork : TreeKind::Join;
      std::size_t tree_index = a.trees.size();
      for (std::size_t t = 0; t < a.trees.size(); ++t) {
        if (a.trees[t].node == node->text && a.trees[t].kind == tk &&
            a.trees[t].port == static_cast<std::size_t>(*port_v)) {
          tree_index = t;
        }
      }
      if (tree_index == a.trees.size()) {
        ForkJoinTree tree;
        tree.node = node->text;
        tree.kind = tk;
        tree.port = static_cast<std::size_t>(*port_v);
        tree.fan_limit = a.fan_limit;
        a.trees.push_back(std::move(tree));
      }
      auto &tree = a.trees[tree_index];
      TreeNode tn;
      tn.id = id->text;
      tn.layer = static_cast<int>(std::min<std::int64_t>(*layer_v, 64));
      tn.lo = range->array[0].integer;
      tn.hi = range->array[1].integer;
      if (parent->type == Type::String) {
        auto it = where.find(parent->text);
        if (it == where.end() || it->second.first != tree_index) {
          c.error(parent->span, ParseErrorKind::UnknownReference,
                  "parent '" + parent->text + "' is not an earlier node of the same tree");
          continue;
        }
        tn.parent = it->second.second;
      } else if (parent->type != Type::Null) {
        c.schema(parent->span, "parent must be a string or null");
        continue;
      } else if (!tree.nodes.empty()) {
        c.schema(sv.span, "tree for '" + tree.node + "' has more than one root");
        continue;
      }
      if (!tn.parent && tn.lo != 0) {
        c.schema(range->span, "tree root must start at replica 0");
        continue;
      }
      if (tn.parent && tree.nodes.empty()) {
        c.schema(sv.span, "tree must start with its root");
        continue;
      }
      where.emplace(tn.id, std::make_pair(tree_index, tree.nodes.size()));
      if (!tn.parent) {
        tree.replicas = tn.hi;
      }
      tree.nodes.push_back(std::move(tn));
    }
  }
  for (const auto &tree : a.trees) {
    const auto *choice = a.choice(tree.node);
    if (choice && choice->replicas != tree.replicas) {
      c.schema(body->span, "tree for '" + tree.node + "' covers " + std::to_string(tree.replicas) +
                               " replicas but the node has " + std::to_string(choice->replicas));
    }
  }
  const Value *na = c.required(*body, "node_area", Type::Integer, "assignment");
  const Value *oa = c.required(*body, "overhead_area", Type::Integer, "assignment");
  const Value *ta = c.required(*body, "total_area", Type::Integer, "assignment");
  if (const auto *v = c.required(*body, "achieved_v", Type::Array, "assignment")) {
    if (v->array.size() != 2 || v->array[0].type != Type::Integer || v->array[1].type != Type::Integer ||
        v->array[1].integer <= 0 || v->array[0].integer < 0) {
      c.schema(v->span, "achieved_v must be a [numerator, denominator] pair");
    } else {
      a.achieved_v = Rational(v->array[0].integer, v->array[1].integer);
    }
  }
  if (c.errors.empty() && na && oa && ta) {
    Assignment check = a;
    recompute_areas(check);
    if (check.node_area != na->integer) {
      c.schema(na->span, "node_area does not match the listed choices");
    }
    if (check.overhead_area != oa->integer) {
      c.schema(oa->span, "overhead_area does not match the listed structural nodes");
    }
    if (check.total_area != ta->integer) {
      c.schema(ta->span, "total_area is not node_area + overhead_area");
    }
    a.node_area = check.node_area;
    a.overhead_area = check.overhead_area;
    a.total_area = check.total_area;
  }
  result.errors = std::move(c.errors);
  if (result.errors.empty()) {
    result.value = std::move(a);
  }
  return result;
}

std::string serialize_library(const Application &app, const ImplementationLibrary &library) {
  auto lib = Value::make_object();
  for (const auto &node : app.nodes) {
    if (!library.contains(node.id)) {
      continue;
    }
    auto &list = lib.set(node.id, Value::make_array());
    for (const auto &impl : library.entries(node.id)) {
      list.push(implementation_value(impl));
    }
  }
  auto root = Value::make_object();
  root.set("library", std::move(lib));
  return json::dump(root);
}

std::vector<std::string> check_assignment(const Application &app, const ImplementationLibrary &library,
                                          const Assignment &assignment) {
  std::vector<std::string> problems;
  for (const auto &choice : assignment.choices) {
    auto n = app.find(choice.node);
    if (!n) {
      problems.push_back("assignment references missing node '" + choice.node + "'");
      continue;
    }
    const auto *impl = library.find(choice.node, choice.impl.version);
    if (impl == nullptr) {
      problems.push_back("node '" + choice.node + "' has no implementation '" + choice.impl.version + "'");
    } else if (impl->ii != choice.impl.ii || impl->area != choice.impl.area) {
      problems.push_back("implementation '" + choice.impl.version + "' of '" + choice.node +
                         "' does not match the library");
    }
    if (choice.replicas > 1 && !app.nodes[*n].stateless) {
      problems.push_back("stateful node '" + choice.node + "' cannot be replicated");
    }
  }
  for (const auto &node : app.nodes) {
    if (assignment.choice(node.id) == nullptr) {
      problems.push_back("assignment has no choice for node '" + node.id + "'");
    }
  }
  for (const auto &tree : assignment.trees) {
    auto n = app.find(tree.node);
    if (!n) {
      problems.push_back("tree attached to missing node '" + tree.node + "'");
      continue;
    }
    auto ports = tree.kind == TreeKind::Fork ? app.nodes[*n].num_in() : app.nodes[*n].num_out();
    if (tree.port >= ports) {
      problems.push_back("tree attached to missing port " + std::to_string(tree.port) + " of '" + tree.node + "'");
    }
    // Children must partition their parent's range; leaves are layer-deepest ranges.
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const auto &tn = tree.nodes[i];
      if (tn.parent) {
        const auto &p = tree.nodes[*tn.parent];
        if (tn.lo < p.lo || tn.hi > p.hi || tn.layer != p.layer + 1) {
          problems.push_back("tree node '" + tn.id + "' is not nested in its parent");
        }
      }
    }
  }
  return problems;
}

} // namespace stg
