#pragma once

#include "stg/model.hpp"

namespace stg {

/// Ops grouped into processing elements. Each cluster is a contiguous slice of
/// the graph's canonical topological order.
struct ClusterPartition {
  std::vector<std::vector<std::size_t>> clusters;  // op indices
  std::vector<std::int64_t> loads;                 // summed latency per cluster

  std::int64_t max_load() const;
  std::vector<std::size_t> sizes() const;
};

/// Splits the canonical order into consecutive clusters of the given sizes.
ClusterPartition make_partition(const OpGraph &graph, const std::vector<std::size_t> &sizes);

/// Linear-partition DP over a weight sequence: cluster sizes minimizing the
/// maximum slice sum with exactly k non-empty slices. Ties prefer the
/// lexicographically largest size vector (earlier clusters filled first).
std::vector<std::size_t> linear_partition(const std::vector<std::int64_t> &weights, std::size_t k);

/// Optimal k-cluster partition of the canonical order.
ClusterPartition optimal_partition(const OpGraph &graph, std::size_t k);

Implementation pipeline_impl(const OpGraph &graph);

/// Replicates every op of latency L > target_ii ceil(L / target_ii) times.
/// Ops replicated beyond nf need a fork tree per operand and a join tree.
Implementation expand_impl(const OpGraph &graph, std::int64_t target_ii, int nf = 4);

/// Per-op replica counts used by expand_impl.
std::vector<std::int64_t> expansion_replicas(const OpGraph &graph, std::int64_t target_ii);

Implementation cluster_impl(const OpGraph &graph, std::size_t k);

/// Every pipelined, expanded and clustered point, Pareto-cleaned and sorted by
/// ascending ii, tagged v1, v2, ... in that order.
std::vector<Implementation> enumerate_implementations(const OpGraph &graph, int nf = 4);

} // namespace stg
