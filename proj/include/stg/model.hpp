#pragma once

#include "stg/rational.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace stg {

// Error categories shared by every module.
struct StructuralError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParameterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LegalityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Reserved prefix for ids of synthesized fork/join nodes.
inline constexpr std::string_view kStructuralPrefix = "__fj_";

enum class OpKind { Add, Sub, Mul, Div, Sqrt, Const, Pass, Fork, Join, Table };
inline constexpr std::size_t kOpKindCount = 10;

std::string_view to_string(OpKind kind);
std::optional<OpKind> parse_op_kind(std::string_view name);

/// FORK and JOIN only ever come out of replication synthesis.
inline bool is_structural(OpKind kind) { return kind == OpKind::Fork || kind == OpKind::Join; }

/// Fixed operand count, or nullopt for TABLE whose arity is declared per op.
std::optional<std::size_t> fixed_arity(OpKind kind);

/// Per-kind cycle counts. DIV = 8 anchors the N-body fixture; the rest are
/// calibrated so that its single-PE load is 33 cycles.
struct LatencyProfile {
  std::array<int, kOpKindCount> cycles{1, 1, 2, 8, 4, 1, 1, 1, 1, 1};

  int operator[](OpKind kind) const { return cycles[static_cast<std::size_t>(kind)]; }
  void set(OpKind kind, int latency) { cycles[static_cast<std::size_t>(kind)] = latency; }
  bool operator==(const LatencyProfile &) const = default;
};

/// One operand of an op: another op's result, a token of the current firing's
/// input port, or the global firing index.
struct OpArg {
  enum class Kind { Op, Port, Iteration };
  Kind kind = Kind::Op;
  std::size_t op = 0;
  std::size_t port = 0;
  std::size_t token = 0;
  bool operator==(const OpArg &) const = default;
};

struct OpNode {
  std::string id;
  OpKind kind = OpKind::Add;
  int latency = 1;
  std::vector<OpArg> args;
  std::int64_t value = 0;            // CONST
  std::vector<std::int64_t> table;   // TABLE
  bool operator==(const OpNode &) const = default;
};

/// Integer semantics shared by the evaluator and the simulator.
std::int64_t apply_op(const OpNode &op, std::span<const std::int64_t> operands);

struct OpGraph {
  std::vector<OpNode> ops;
  std::vector<std::size_t> outputs;  // one per produced token, ordered by port then token

  /// Problems with the graph in isolation; empty when valid.
  std::vector<std::string> problems(std::span<const int> in_rates) const;

  /// Kahn order choosing the lowest document index among ready ops.
  std::vector<std::size_t> canonical_order() const;

  std::int64_t total_latency() const;
  int max_latency() const;
  /// Longest latency-weighted dependency chain.
  std::int64_t critical_path() const;

  /// Evaluate one firing. inputs[port][token]; returns outputs in declared order.
  std::vector<std::int64_t> evaluate(const std::vector<std::vector<std::int64_t>> &inputs,
                                     std::int64_t iteration) const;

  bool operator==(const OpGraph &) const = default;
};

struct CompositeNode {
  std::string id;
  std::optional<OpGraph> graph;
  std::vector<int> in_rates;
  std::vector<int> out_rates;
  bool stateless = true;

  std::size_t num_in() const { return in_rates.size(); }
  std::size_t num_out() const { return out_rates.size(); }
  bool operator==(const CompositeNode &) const = default;
};

struct PortRef {
  std::size_t node = 0;
  std::size_t port = 0;
  bool operator==(const PortRef &) const = default;
};

struct Channel {
  PortRef from;  // producer output port
  PortRef to;    // consumer input port
};

struct Violation {
  std::string kind;     // cycle, rate-inconsistency, dangling-port, ...
  std::string message;
  std::string subject;  // id of the node most directly involved, if any
  bool operator==(const Violation &) const = default;
};
using ValidationReport = std::vector<Violation>;

class Application {
public:
  std::vector<CompositeNode> nodes;
  std::vector<Channel> channels;

  std::optional<std::size_t> find(std::string_view id) const;
  std::size_t index_of(std::string_view id) const;  // throws StructuralError

  /// Nodes without input ports, in declaration order.
  std::vector<std::size_t> sources() const;
  /// Nodes without outgoing channels, in declaration order.
  std::vector<std::size_t> sinks() const;
  bool is_sink(std::size_t node) const;
  std::size_t primary_source() const;

  std::optional<std::size_t> input_channel(std::size_t node, std::size_t port) const;
  std::vector<std::size_t> output_channels(std::size_t node, std::size_t port) const;
  std::vector<std::size_t> predecessors(std::size_t node) const;
  std::vector<std::size_t> successors(std::size_t node) const;

  /// Node topological order (lowest declaration index first). Throws on cycles.
  std::vector<std::size_t> topological_order() const;

  /// Firings of each node per firing of the primary source, from the channel
  /// balance equations. Throws StructuralError when inconsistent.
  std::vector<Rational> rate_factors() const;

  std::string channel_name(std::size_t channel) const;
};

ValidationReport validate_application(const Application &app);

enum class Provenance { Pipelined, Expanded, Clustered, Library };
std::string_view to_string(Provenance provenance);
std::optional<Provenance> parse_provenance(std::string_view name);

struct Implementation {
  std::string owner;
  std::string version;
  std::int64_t area = 1;
  std::int64_t ii = 1;
  Provenance provenance = Provenance::Library;
  bool operator==(const Implementation &) const = default;
};

/// Sorts by ascending ii and drops every dominated or duplicate point.
std::vector<Implementation> pareto_clean(std::vector<Implementation> entries);
bool is_pareto_clean(std::span<const Implementation> entries);

class ImplementationLibrary {
public:
  /// Stores entries sorted by ascending ii.
  void set(const std::string &node, std::vector<Implementation> entries);
  bool contains(std::string_view node) const;
  const std::vector<Implementation> &entries(std::string_view node) const;
  const Implementation *find(std::string_view node, std::string_view version) const;
  const std::map<std::string, std::vector<Implementation>, std::less<>> &all() const { return m_entries; }
  bool empty() const { return m_entries.empty(); }
  bool operator==(const ImplementationLibrary &) const = default;

private:
  std::map<std::string, std::vector<Implementation>, std::less<>> m_entries;
};

enum class TreeKind { Fork, Join };

struct TreeNode {
  std::string id;
  int layer = 1;
  std::int64_t lo = 0;                 // replica range [lo, hi) served by this node
  std::int64_t hi = 0;
  std::optional<std::size_t> parent;   // index into ForkJoinTree::nodes
  bool operator==(const TreeNode &) const = default;
};

/// Layered distribution (FORK) or collection (JOIN) network between one port
/// of a replicated node and the rest of the graph.
struct ForkJoinTree {
  std::string node;
  TreeKind kind = TreeKind::Fork;
  std::size_t port = 0;
  std::int64_t replicas = 1;
  int fan_limit = 4;
  std::vector<TreeNode> nodes;

  std::int64_t area() const { return static_cast<std::int64_t>(nodes.size()); }
  bool operator==(const ForkJoinTree &) const = default;
};

struct NodeChoice {
  std::string node;
  Implementation impl;
  std::int64_t replicas = 1;
  bool operator==(const NodeChoice &) const = default;
};

struct Assignment {
  int fan_limit = 4;
  std::vector<NodeChoice> choices;   // application declaration order
  std::vector<ForkJoinTree> trees;
  std::int64_t node_area = 0;
  std::int64_t overhead_area = 0;
  std::int64_t total_area = 0;
  Rational achieved_v{0};

  const NodeChoice *choice(std::string_view node) const;
  const ForkJoinTree *tree(std::string_view node, TreeKind kind, std::size_t port) const;
  bool operator==(const Assignment &) const = default;
};

/// node_area + overhead_area, after checking every referenced implementation
/// exists in the library with the recorded area and ii.
std::int64_t total_area(const Assignment &assignment, const ImplementationLibrary &library);

/// Recomputes node_area, overhead_area and total_area from choices and trees.
void recompute_areas(Assignment &assignment);

struct MinArea {
  Rational target_v;
};
struct MaxThroughput {
  std::int64_t area_budget = 0;
};

struct OptimizationTarget {
  std::variant<MinArea, MaxThroughput> mode;
  int fan_limit = 4;
  Rational margin{1, 10};
};

} // namespace stg
