#pragma once

#include "stg/model.hpp"

#include <string>

namespace stg {

/// One library entry of one node, replicated just enough to meet the target.
struct Candidate {
  std::size_t entry = 0;
  Implementation impl;
  std::int64_t replicas = 1;
  std::int64_t cost = 0;  // area * replicas + tree overhead on every port
  Rational limit;         // node_limit with this many replicas
  bool feasible = false;  // limit <= target
};

/// Candidates of node m for target v_tgt, in library order.
std::vector<Candidate> node_candidates(const Application &app, const ImplementationLibrary &library, std::size_t m,
                                       const Rational &r, const Rational &v_tgt, int nf);

struct SearchStats {
  std::size_t visited = 0;
  std::size_t pruned = 0;
};

/// Minimum total area with achieved_v <= v_tgt, no combining. Ties between
/// equal-area solutions go to the lexicographically smallest entry-index vector.
/// Throws InfeasibleError when some node cannot meet the target at all.
Assignment solve_min_area(const Application &app, const ImplementationLibrary &library, const Rational &v_tgt,
                          int nf = 4, SearchStats *stats = nullptr);

/// Minimum achieved_v with total_area <= area_budget, by binary search over the
/// finite set of achievable inverse throughputs. Throws InfeasibleError.
Assignment solve_max_throughput(const Application &app, const ImplementationLibrary &library,
                                std::int64_t area_budget, int nf = 4);

/// The min-area instance as an LP-format 0/1 program, for external cross-checks.
std::string dump_lp(const Application &app, const ImplementationLibrary &library, const Rational &v_tgt, int nf = 4);

} // namespace stg
