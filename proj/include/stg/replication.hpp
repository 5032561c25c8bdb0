#pragma once

#include "stg/model.hpp"

#include <optional>

namespace stg {

/// Replicas needed so that a node of inverse throughput v_node keeps up with
/// v_target: ceil(v_node / v_target).
std::int64_t replica_count(const Rational &v_node, const Rational &v_target);

/// Smallest H with nf^H >= nr (0 for nr = 1).
int tree_depth(std::int64_t nr, int nf);

/// Structural nodes of one right-pruned tree feeding nr replicas. Zero when the
/// producer can wire the replicas directly (nr <= nf).
std::int64_t tree_overhead(std::int64_t nr, int nf);

/// Fork tree for input port `port` (or join tree for an output port) of a node
/// replicated nr times. Empty node list when nr <= nf.
ForkJoinTree build_tree(const std::string &node, TreeKind kind, std::size_t port, std::int64_t nr, int nf);

/// One fork tree per input port and one join tree per output port. Throws
/// LegalityError for a stateful node with nr > 1.
std::vector<ForkJoinTree> build_fork_join(const CompositeNode &node, std::int64_t nr, int nf);

/// Inverse throughputs at layer h (1 = root) of a fork tree whose root is fed
/// at v_root: v_in = v_root * nf^(h-1), v_out = v_in * nf.
struct LayerRates {
  Rational v_in;
  Rational v_out;
};
std::vector<LayerRates> layer_rates(const Rational &v_root, int depth, int nf);

/// Plan for fusing a producer implementation S' with nf replicas of consumer D.
struct CombinePlan {
  Implementation producer;          // S'
  std::int64_t combined_replicas;   // nr' = ceil(nr / nf)
  Rational v_combined;              // v_C = v_D / nf
  std::int64_t formula_overhead;    // sum_{i=0}^{H-2} nf^i
  std::int64_t new_overhead;        // tree_overhead(nr', nf)
  std::int64_t saved_nodes;         // nf^(H-1)
  std::int64_t original_overhead;   // tree_overhead(nr, nf)
  Rational residual_slack;          // bound - v(S')
};

/// nr replicas of D (inverse throughput v_D) are needed to keep up with the
/// producer rate v_S. Picks the slowest producer entry that can feed one unit
/// of C, i.e. with ii <= v_S * nr' (ties by smaller area). Returns nullopt when
/// nr <= nf or no producer entry is fast enough.
std::optional<CombinePlan> combine_with_fork(const std::vector<Implementation> &producer_library,
                                             const Rational &v_D, std::int64_t nr, int nf, const Rational &v_S);

/// Direct wiring between np producer endpoints emitting blocks of bp tokens
/// and nc consumer endpoints taking blocks of bc tokens, both round-robin.
/// Returns the connected (producer, consumer) endpoint pairs, sorted.
std::vector<std::pair<std::int64_t, std::int64_t>> crossbar_pairs(std::int64_t np, std::int64_t bp, std::int64_t nc,
                                                                  std::int64_t bc);

/// Checks every channel's wiring against the fan limit, and every tree against
/// its node's replica count. Returns human-readable problems.
std::vector<std::string> check_interconnect(const Application &app, const Assignment &assignment);

} // namespace stg
