#include "stg/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

namespace stg {

// ---------------------------------------------------------------------------
// Rational helpers

std::int64_t floor(const Rational &value) {
  auto num = value.numerator();
  auto den = value.denominator();
  auto q = num / den;
  if ((num % den != 0) && (num < 0)) {
    --q;
  }
  return q;
}

std::int64_t ceil(const Rational &value) {
  auto f = floor(value);
  return (Rational(f) == value) ? f : f + 1;
}

std::string format_fixed6(const Rational &value) {
  __int128 num = value.numerator();
  __int128 den = value.denominator();
  bool negative = num < 0;
  if (negative) {
    num = -num;
  }
  __int128 scaled = num * 1000000;
  __int128 q = scaled / den;
  if ((scaled % den) * 2 >= den) {
    ++q;
  }
  auto whole = static_cast<long long>(q / 1000000);
  auto frac = static_cast<long long>(q % 1000000);
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%s%lld.%06lld", (negative && q != 0) ? "-" : "", whole, frac);
  return buffer;
}

Rational parse_rational(const std::string &text) {
  auto parse_int = [&](const std::string &s) -> std::int64_t {
    if (s.empty()) {
      throw std::invalid_argument("empty number in '" + text + "'");
    }
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) {
      throw std::invalid_argument("malformed number '" + text + "'");
    }
    return v;
  };
  if (auto slash = text.find('/'); slash != std::string::npos) {
    auto den = parse_int(text.substr(slash + 1));
    if (den == 0) {
      throw std::invalid_argument("zero denominator in '" + text + "'");
    }
    return Rational(parse_int(text.substr(0, slash)), den);
  }
  if (auto dot = text.find('.'); dot != std::string::npos) {
    std::string whole = text.substr(0, dot);
    std::string frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 12 ||
        !std::all_of(frac.begin(), frac.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw std::invalid_argument("malformed decimal '" + text + "'");
    }
    bool negative = !whole.empty() && whole[0] == '-';
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) {
      scale *= 10;
    }
    std::int64_t w = (whole.empty() || whole == "-") ? 0 : parse_int(whole);
    std::int64_t f = parse_int(frac);
    Rational r(std::abs(w) * scale + f, scale);
    return negative ? -r : r;
  }
  return Rational(parse_int(text));
}

// ---------------------------------------------------------------------------
// Operations

namespace {
constexpr std::array<std::string_view, kOpKindCount> kOpNames = {
    "ADD", "SUB", "MUL", "DIV", "SQRT", "CONST", "PASS", "FORK", "JOIN", "TABLE"};

std::int64_t wrap(std::uint64_t v) { return static_cast<std::int64_t>(v); }

std::int64_t isqrt(std::int64_t v) {
  if (v <= 0) {
    return 0;
  }
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<long double>(v)));
  while (r > 0 && static_cast<__int128>(r) * r > v) {
    --r;
  }
  while (static_cast<__int128>(r + 1) * (r + 1) <= v) {
    ++r;
  }
  return r;
}
} // namespace

std::string_view to_string(OpKind kind) { return kOpNames[static_cast<std::size_t>(kind)]; }

std::optional<OpKind> parse_op_kind(std::string_view name) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i) {
    if (kOpNames[i] == name) {
      return static_cast<OpKind>(i);
    }
  }
  return std::nullopt;
}

std::optional<std::size_t> fixed_arity(OpKind kind) {
  switch (kind) {
  case OpKind::Add:
  case OpKind::Sub:
  case OpKind::Mul:
  case OpKind::Div:
    return 2;
  case OpKind::Sqrt:
  case OpKind::Pass:
  case OpKind::Fork:
  case OpKind::Join:
    return 1;
  case OpKind::Const:
    return 0;
  case OpKind::Table:
    return std::nullopt;
  }
  return std::nullopt;
}

std::int64_t apply_op(const OpNode &op, std::span<const std::int64_t> x) {
  auto u = [&](std::size_t i) { return static_cast<std::uint64_t>(x[i]); };
  switch (op.kind) {
  case OpKind::Add:
    return wrap(u(0) + u(1));
  case OpKind::Sub:
    return wrap(u(0) - u(1));
  case OpKind::Mul:
    return wrap(u(0) * u(1));
  case OpKind::Div:
    if (x[1] == 0) {
      return 0;
    }
    if (x[0] == std::numeric_limits<std::int64_t>::min() && x[1] == -1) {
      return x[0];
    }
    return x[0] / x[1];
  case OpKind::Sqrt:
    return isqrt(x[0]);
  case OpKind::Const:
    return op.value;
  case OpKind::Pass:
  case OpKind::Fork:
  case OpKind::Join:
    return x[0];
  case OpKind::Table: {
    if (op.table.empty()) {
      return 0;
    }
    std::uint64_t sum = 0;
    for (auto v : x) {
      sum += static_cast<std::uint64_t>(v);
    }
    return op.table[sum % op.table.size()];
  }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// OpGraph

std::vector<std::string> OpGraph::problems(std::span<const int> in_rates) const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto &op : ops) {
    if (op.id.empty()) {
      out.push_back("op with empty id");
    } else if (!seen.insert(op.id).second) {
      out.push_back("duplicate op id '" + op.id + "'");
    }
    if (is_structural(op.kind)) {
      out.push_back("op '" + op.id + "' uses structural kind " + std::string(to_string(op.kind)));
    }
    if (op.latency < 1) {
      out.push_back("op '" + op.id + "' has latency < 1");
    }
    if (auto arity = fixed_arity(op.kind)) {
      if (op.args.size() != *arity) {
        out.push_back("op '" + op.id + "' expects " + std::to_string(*arity) + " operands, got " +
                      std::to_string(op.args.size()));
      }
    } else if (op.args.empty() || op.table.empty()) {
      out.push_back("TABLE op '" + op.id + "' needs operands and a non-empty table");
    }
    for (const auto &arg : op.args) {
      if (arg.kind == OpArg::Kind::Op && arg.op >= ops.size()) {
        out.push_back("op '" + op.id + "' references a missing op");
      }
      if (arg.kind == OpArg::Kind::Port &&
          (arg.port >= in_rates.size() || static_cast<int>(arg.token) >= in_rates[arg.port])) {
        out.push_back("op '" + op.id + "' references input $" + std::to_string(arg.port) + "." +
                      std::to_string(arg.token) + " outside the node's input rates");
      }
    }
  }
  for (auto o : outputs) {
    if (o >= ops.size()) {
      out.push_back("declared output references a missing op");
    }
  }
  if (ops.empty()) {
    out.push_back("op graph has no ops");
  }
  if (!out.empty()) {
    return out;
  }
  if (canonical_order().size() != ops.size()) {
    out.push_back("op graph contains a cycle");
    return out;
  }
  // Every op must be grounded in an input port, the firing index or a constant.
  std::vector<bool> grounded(ops.size(), false);
  for (auto i : canonical_order()) {
    const auto &op = ops[i];
    bool g = op.kind == OpKind::Const;
    for (const auto &arg : op.args) {
      g = g || arg.kind != OpArg::Kind::Op || grounded[arg.op];
    }
    grounded[i] = g;
    if (!g) {
      out.push_back("op '" + op.id + "' is not reachable from any input or constant");
    }
  }
  return out;
}

std::vector<std::size_t> OpGraph::canonical_order() const {
  std::vector<std::size_t> indegree(ops.size(), 0);
  std::vector<std::vector<std::size_t>> users(ops.size());
  for (std::size_t i = 0; i < ops.size(); ++i) {
    std::set<std::size_t> deps;
    for (const auto &arg : ops[i].args) {
      if (arg.kind == OpArg::Kind::Op && arg.op < ops.size()) {
        deps.insert(arg.op);
      }
    }
    indegree[i] = deps.size();
    for (auto d : deps) {
      users[d].push_back(i);
    }
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (indegree[i] == 0) {
      ready.push(i);
    }
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    auto i = ready.top();
    ready.pop();
    order.push_back(i);
    for (auto u : users[i]) {
      if (--indegree[u] == 0) {
        ready.push(u);
      }
    }
  }
  return order;
}

std::int64_t OpGraph::total_latency() const {
  std::int64_t sum = 0;
  for (const auto &op : ops) {
    sum += op.latency;
  }
  return sum;
}

int OpGraph::max_latency() const {
  int m = 0;
  for (const auto &op : ops) {
    m = std::max(m, op.latency);
  }
  return m;
}

std::int64_t OpGraph::critical_path() const {
  std::vector<std::int64_t> finish(ops.size(), 0);
  std::int64_t best = 0;
  for (auto i : canonical_order()) {
    std::int64_t start = 0;
    for (const auto &arg : ops[i].args) {
      if (arg.kind == OpArg::Kind::Op) {
        start = std::max(start, finish[arg.op]);
      }
    }
    finish[i] = start + ops[i].latency;
    best = std::max(best, finish[i]);
  }
  return best;
}

std::vector<std::int64_t> OpGraph::evaluate(const std::vector<std::vector<std::int64_t>> &inputs,
                                            std::int64_t iteration) const {
  std::vector<std::int64_t> value(ops.size(), 0);
  std::vector<std::int64_t> operands;
  for (auto i : canonical_order()) {
    operands.clear();
    for (const auto &arg : ops[i].args) {
      switch (arg.kind) {
      case OpArg::Kind::Op:
        operands.push_back(value[arg.op]);
        break;
      case OpArg::Kind::Port:
        operands.push_back(inputs.at(arg.port).at(arg.token));
        break;
      case OpArg::Kind::Iteration:
        operands.push_back(iteration);
        break;
      }
    }
    value[i] = apply_op(ops[i], operands);
  }
  std::vector<std::int64_t> out;
  out.reserve(outputs.size());
  for (auto o : outputs) {
    out.push_back(value[o]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Application

std::optional<std::size_t> Application::find(std::string_view id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == id) {
      return i;
    }
  }
  return std::nullopt;
}

std::size_t Application::index_of(std::string_view id) const {
  if (auto i = find(id)) {
    return *i;
  }
  throw StructuralError("unknown node '" + std::string(id) + "'");
}

std::vector<std::size_t> Application::sources() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].num_in() == 0) {
      out.push_back(i);
    }
  }
  return out;
}

bool Application::is_sink(std::size_t node) const {
  return std::none_of(channels.begin(), channels.end(), [&](const Channel &c) { return c.from.node == node; });
}

std::vector<std::size_t> Application::sinks() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (is_sink(i)) {
      out.push_back(i);
    }
  }
  return out;
}

std::size_t Application::primary_source() const {
  auto s = sources();
  return s.empty() ? 0 : s.front();
}

std::optional<std::size_t> Application::input_channel(std::size_t node, std::size_t port) const {
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].to == PortRef{node, port}) {
      return c;
    }
  }
  return std::nullopt;
}

std::vector<std::size_t> Application::output_channels(std::size_t node, std::size_t port) const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].from == PortRef{node, port}) {
      out.push_back(c);
    }
  }
  return out;
}

std::vector<std::size_t> Application::predecessors(std::size_t node) const {
  std::set<std::size_t> out;
  for (const auto &c : channels) {
    if (c.to.node == node) {
      out.insert(c.from.node);
    }
  }
  return {out.begin(), out.end()};
}

std::vector<std::size_t> Application::successors(std::size_t node) const {
  std::set<std::size_t> out;
  for (const auto &c : channels) {
    if (c.from.node == node) {
      out.insert(c.to.node);
    }
  }
  return {out.begin(), out.end()};
}

std::vector<std::size_t> Application::topological_order() const {
  std::vector<std::size_t> indegree(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    indegree[i] = predecessors(i).size();
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (indegree[i] == 0) {
      ready.push(i);
    }
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    auto i = ready.top();
    ready.pop();
    order.push_back(i);
    for (auto s : successors(i)) {
      if (--indegree[s] == 0) {
        ready.push(s);
      }
    }
  }
  if (order.size() != nodes.size()) {
    throw StructuralError("application graph contains a cycle");
  }
  return order;
}

namespace {
// Solves r_from * Out = r_to * In over each connected component. Returns the
// first inconsistency message, if any.
std::optional<std::string> solve_balance(const Application &app, std::vector<Rational> &r) {
  const auto n = app.nodes.size();
  r.assign(n, Rational(0));
  std::vector<bool> known(n, false);
  std::vector<std::size_t> seeds;
  if (n > 0) {
    seeds.push_back(app.primary_source());
  }
  for (std::size_t i = 0; i < n; ++i) {
    seeds.push_back(i);
  }
  for (auto seed : seeds) {
    if (known[seed]) {
      continue;
    }
    known[seed] = true;
    r[seed] = 1;
    std::deque<std::size_t> queue{seed};
    while (!queue.empty()) {
      auto m = queue.front();
      queue.pop_front();
      for (const auto &c : app.channels) {
        const auto &from = app.nodes[c.from.node];
        const auto &to = app.nodes[c.to.node];
        if (c.from.port >= from.out_rates.size() || c.to.port >= to.in_rates.size()) {
          continue;
        }
        Rational out_rate = from.out_rates[c.from.port];
        Rational in_rate = to.in_rates[c.to.port];
        if (out_rate <= 0 || in_rate <= 0) {
          continue;
        }
        std::size_t other;
        Rational expected;
        if (c.from.node == m) {
          other = c.to.node;
          expected = r[m] * out_rate / in_rate;
        } else if (c.to.node == m) {
          other = c.from.node;
          expected = r[m] * in_rate / out_rate;
        } else {
          continue;
        }
        if (!known[other]) {
          known[other] = true;
          r[other] = expected;
          queue.push_back(other);
        } else if (r[other] != expected) {
          std::ostringstream msg;
          msg << "rate inconsistency at '" << app.nodes[other].id << "': cumulative rate factor "
              << r[other] << " vs " << expected;
          return msg.str();
        }
      }
    }
  }
  return std::nullopt;
}
} // namespace

std::vector<Rational> Application::rate_factors() const {
  std::vector<Rational> r;
  if (auto problem = solve_balance(*this, r)) {
    throw StructuralError(*problem);
  }
  return r;
}

std::string Application::channel_name(std::size_t channel) const {
  const auto &c = channels.at(channel);
  return nodes.at(c.from.node).id + "." + std::to_string(c.from.port) + "->" + nodes.at(c.to.node).id + "." +
         std::to_string(c.to.port);
}

ValidationReport validate_application(const Application &app) {
  ValidationReport report;
  auto add = [&](std::string kind, std::string message, std::string subject = {}) {
    report.push_back({std::move(kind), std::move(message), std::move(subject)});
  };

  std::set<std::string> ids;
  for (const auto &node : app.nodes) {
    if (node.id.empty()) {
      add("bad-id", "node with empty id");
    } else if (!ids.insert(node.id).second) {
      add("duplicate-id", "duplicate node id '" + node.id + "'", node.id);
    }
    if (node.id.starts_with(kStructuralPrefix)) {
      add("reserved-id", "node id '" + node.id + "' uses the reserved prefix", node.id);
    }
    for (auto rate : node.in_rates) {
      if (rate < 1) {
        add("bad-rate", "node '" + node.id + "' has a non-positive input rate", node.id);
      }
    }
    for (auto rate : node.out_rates) {
      if (rate < 1) {
        add("bad-rate", "node '" + node.id + "' has a non-positive output rate", node.id);
      }
    }
    if (node.graph) {
      for (const auto &p : node.graph->problems(node.in_rates)) {
        add("op-graph", "node '" + node.id + "': " + p, node.id);
      }
      int produced = 0;
      for (auto rate : node.out_rates) {
        produced += rate;
      }
      if (static_cast<int>(node.graph->outputs.size()) != produced) {
        add("op-graph", "node '" + node.id + "' declares " + std::to_string(node.graph->outputs.size()) +
                            " outputs but its output rates produce " + std::to_string(produced) + " tokens",
            node.id);
      }
    }
  }

  bool ports_ok = true;
  for (std::size_t c = 0; c < app.channels.size(); ++c) {
    const auto &ch = app.channels[c];
    if (ch.from.node >= app.nodes.size() || ch.to.node >= app.nodes.size() ||
        ch.from.port >= app.nodes[ch.from.node].num_out() || ch.to.port >= app.nodes[ch.to.node].num_in()) {
      add("dangling-port", "channel #" + std::to_string(c) + " references a missing node or port");
      ports_ok = false;
    }
  }
  if (!ports_ok) {
    return report;
  }

  for (std::size_t n = 0; n < app.nodes.size(); ++n) {
    const auto &node = app.nodes[n];
    for (std::size_t p = 0; p < node.num_in(); ++p) {
      auto drivers = std::count_if(app.channels.begin(), app.channels.end(),
                                   [&](const Channel &c) { return c.to == PortRef{n, p}; });
      if (drivers == 0) {
        add("dangling-port", "input port " + node.id + "." + std::to_string(p) + " has no incoming channel", node.id);
      } else if (drivers > 1) {
        add("multiple-drivers", "input port " + node.id + "." + std::to_string(p) + " has " +
                                    std::to_string(drivers) + " incoming channels", node.id);
      }
    }
    if (!app.is_sink(n)) {
      for (std::size_t p = 0; p < node.num_out(); ++p) {
        if (app.output_channels(n, p).empty()) {
          add("dangling-port", "output port " + node.id + "." + std::to_string(p) +
                                   " has no outgoing channel and the node is not a sink", node.id);
        }
      }
    }
  }

  // Strongly connected groups via mutual reachability; graphs are small.
  const auto n = app.nodes.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> stack = app.successors(s);
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      if (reach[s][v]) {
        continue;
      }
      reach[s][v] = true;
      for (auto w : app.successors(v)) {
        stack.push_back(w);
      }
    }
  }
  std::vector<bool> reported(n, false);
  bool cyclic = false;
  for (std::size_t s = 0; s < n; ++s) {
    if (reported[s] || !reach[s][s]) {
      continue;
    }
    cyclic = true;
    std::string members;
    for (std::size_t v = 0; v < n; ++v) {
      if (v == s || (reach[s][v] && reach[v][s])) {
        reported[v] = true;
        members += (members.empty() ? "" : ",") + app.nodes[v].id;
      }
    }
    add("cycle", "cycle at {" + members + "}", app.nodes[s].id);
  }

  if (!cyclic) {
    std::vector<Rational> r;
    if (auto problem = solve_balance(app, r)) {
      add("rate-inconsistency", *problem);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Implementations and libraries

std::string_view to_string(Provenance provenance) {
  switch (provenance) {
  case Provenance::Pipelined:
    return "pipelined";
  case Provenance::Expanded:
    return "expanded";
  case Provenance::Clustered:
    return "clustered";
  case Provenance::Library:
    return "library";
  }
  return "library";
}

std::optional<Provenance> parse_provenance(std::string_view name) {
  for (auto p : {Provenance::Pipelined, Provenance::Expanded, Provenance::Clustered, Provenance::Library}) {
    if (to_string(p) == name) {
      return p;
    }
  }
  return std::nullopt;
}

std::vector<Implementation> pareto_clean(std::vector<Implementation> entries) {
  std::stable_sort(entries.begin(), entries.end(), [](const Implementation &a, const Implementation &b) {
    return a.ii != b.ii ? a.ii < b.ii : a.area < b.area;
  });
  std::vector<Implementation> kept;
  for (auto &e : entries) {
    if (kept.empty() || e.area < kept.back().area) {
      if (!kept.empty() && kept.back().ii == e.ii) {
        continue;
      }
      kept.push_back(std::move(e));
    }
  }
  return kept;
}

bool is_pareto_clean(std::span<const Implementation> entries) {
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].ii <= entries[i - 1].ii || entries[i].area >= entries[i - 1].area) {
      return false;
    }
  }
  return true;
}

void ImplementationLibrary::set(const std::string &node, std::vector<Implementation> entries) {
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Implementation &a, const Implementation &b) { return a.ii < b.ii; });
  m_entries[node] = std::move(entries);
}

bool ImplementationLibrary::contains(std::string_view node) const { return m_entries.find(node) != m_entries.end(); }

const std::vector<Implementation> &ImplementationLibrary::entries(std::string_view node) const {
  auto it = m_entries.find(node);
  if (it == m_entries.end()) {
    throw StructuralError("no implementations for node '" + std::string(node) + "'");
  }
  return it->second;
}

const Implementation *ImplementationLibrary::find(std::string_view node, std::string_view version) const {
  auto it = m_entries.find(node);
  if (it == m_entries.end()) {
    return nullptr;
  }
  for (const auto &e : it->second) {
    if (e.version == version) {
      return &e;
    }
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Assignments

const NodeChoice *Assignment::choice(std::string_view node) const {
  for (const auto &c : choices) {
    if (c.node == node) {
      return &c;
    }
  }
  return nullptr;
}

const ForkJoinTree *Assignment::tree(std::string_view node, TreeKind kind, std::size_t port) const {
  for (const auto &t : trees) {
    if (t.node == node && t.kind == kind && t.port == port) {
      return &t;
    }
  }
  return nullptr;
}

void recompute_areas(Assignment &assignment) {
  assignment.node_area = 0;
  for (const auto &c : assignment.choices) {
    assignment.node_area += c.impl.area * c.replicas;
  }
  assignment.overhead_area = 0;
  for (const auto &t : assignment.trees) {
    assignment.overhead_area += t.area();
  }
  assignment.total_area = assignment.node_area + assignment.overhead_area;
}

std::int64_t total_area(const Assignment &assignment, const ImplementationLibrary &library) {
  std::int64_t node_area = 0;
  for (const auto &c : assignment.choices) {
    const auto *impl = library.find(c.node, c.impl.version);
    if (impl == nullptr || impl->area != c.impl.area || impl->ii != c.impl.ii) {
      throw StructuralError("assignment references implementation '" + c.impl.version + "' of node '" + c.node +
                            "' that is not in the library");
    }
    node_area += impl->area * c.replicas;
  }
  std::int64_t overhead = 0;
  for (const auto &t : assignment.trees) {
    overhead += t.area();
  }
  return node_area + overhead;
}

} // namespace stg
