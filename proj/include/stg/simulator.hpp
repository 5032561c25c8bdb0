#pragma once

#include "stg/model.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace stg {

struct SimOptions {
  std::int64_t tokens = 10000;  // primary-source firings
  int capacity = 2;             // minimum FIFO depth; bursty ports get two firings' worth
  std::uint64_t seed = 0;       // nonzero: shuffle the process visiting order
  std::int64_t max_cycles = 0;  // 0: derived from the workload
  /// Fault injection: swap the first two replicas feeding output port 0 of
  /// this node (a leaf of its join tree, or the direct wiring).
  std::optional<std::string> swap_join_leaves;
};

struct ChannelStats {
  std::string name;
  std::int64_t produced = 0;
  std::int64_t consumed = 0;
  std::int64_t occupancy = 0;
  std::int64_t measured_tokens = 0;  // tokens inside the measurement window
  double measured_v = 0;             // cycles per token, warm-up excluded
};

struct StreamRecord {
  std::string name;  // "node.port" of an application output
  std::vector<std::int64_t> values;
  double measured_v = 0;
};

struct SimReport {
  std::int64_t cycles = 0;
  bool deadlock = false;
  std::vector<ChannelStats> channels;  // application channel order
  std::vector<StreamRecord> streams;   // application outputs in declaration order
};

/// Untransformed reference: one replica of each node's fastest entry, or of
/// its pipelined op graph when the library has none.
Assignment identity_assignment(const Application &app, const ImplementationLibrary &library);

/// Cycle-stepped run over bounded blocking FIFOs. Tokens written in cycle c are
/// readable from c + 1 and slots freed in c are writable from c + 1, so the
/// result never depends on process visiting order.
SimReport simulate(const Application &app, const Assignment &assignment, const SimOptions &options = {});

struct Equivalence {
  bool equal = true;
  std::string stream;
  std::optional<std::size_t> first_divergence;
};

Equivalence check_equivalence(const SimReport &reference, const SimReport &test);

/// kind,name,produced,consumed,occupancy,measured_v rows plus summary lines.
std::string report_csv(const SimReport &report);

/// Writes <dir>/<stream>.bin as little-endian 64-bit tokens; returns the paths.
std::vector<std::string> write_stream_dumps(const SimReport &report, const std::string &directory);

/// An op-level model of one implementation: every PE becomes a node (ii =
/// its load, replicated for expanded ops), fed by a source and drained by a
/// sink, so the implementation's ii can be measured by simulation.
struct Realization {
  Application app;
  Assignment assignment;
};
Realization realize(const OpGraph &graph, const Implementation &impl, int nf = 4);

/// Measured cycles per firing of the realized implementation.
double measure_implementation(const OpGraph &graph, const Implementation &impl, int nf = 4,
                              std::int64_t firings = 10000);

} // namespace stg
