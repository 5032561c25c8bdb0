#pragma once

#include "stg/model.hpp"

#include <string>

namespace stg {

struct Budget {
  Rational application_v;               // cycles per primary-source firing
  std::vector<Rational> node_period;    // application_v / r_m, cycles per firing
  Rational margin;
  std::int64_t estimated_area = 0;      // cheapest per-node choices, plain trees
  int relaxations = 0;
};

/// MinArea: the budget is the target itself. MaxThroughput: starts from the
/// fastest rate any node can offer and doubles until the estimate fits within
/// (1 + margin) * A_C. Throws InfeasibleError once even the slowest
/// unreplicated choices do not fit, or after 64 relaxations.
Budget budget_throughput(const Application &app, const ImplementationLibrary &library,
                         const OptimizationTarget &target);

/// Cheapest-area estimate at one application-level inverse throughput.
/// Throws InfeasibleError when some node cannot reach it.
std::int64_t estimate_area(const Application &app, const ImplementationLibrary &library, const Rational &v, int nf);

struct TraceEntry {
  std::string node;
  std::string action;  // budget, select, combine, keep-trees, relax
  std::int64_t area_before = 0;
  std::int64_t area_after = 0;
  std::string detail;
};

struct HeuristicResult {
  Assignment assignment;
  Budget budget;
  std::vector<std::size_t> walk;  // node visiting order
  std::vector<TraceEntry> trace;
};

/// Budgeting, bottleneck-first walk, per-node selection and node combining.
HeuristicResult optimize_heuristic(const Application &app, const ImplementationLibrary &library,
                                   const OptimizationTarget &target);

/// Visiting order at an application-level budget: the bottleneck, forward along
/// the critical path, backward into feeding branches, the rest of the critical
/// path upstream, then everything else breadth-first from the sources.
std::vector<std::size_t> walk_order(const Application &app, const ImplementationLibrary &library, const Rational &v,
                                    int nf);

/// CSV of the decision trace: node,action,area_before,area_after,detail.
std::string trace_csv(const std::vector<TraceEntry> &trace);

} // namespace stg
