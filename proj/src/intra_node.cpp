#include "stg/intra_node.hpp"

#include "stg/replication.hpp"

#include <algorithm>
#include <limits>

namespace stg {

std::int64_t ClusterPartition::max_load() const {
  std::int64_t m = 0;
  for (auto l : loads) {
    m = std::max(m, l);
  }
  return m;
}

std::vector<std::size_t> ClusterPartition::sizes() const {
  std::vector<std::size_t> out;
  for (const auto &c : clusters) {
    out.push_back(c.size());
  }
  return out;
}

namespace {

void require_ops(const OpGraph &graph) {
  if (graph.ops.empty()) {
    throw StructuralError("op graph is empty");
  }
}

std::vector<std::int64_t> ordered_latencies(const OpGraph &graph, const std::vector<std::size_t> &order) {
  std::vector<std::int64_t> w;
  for (auto i : order) {
    w.push_back(graph.ops[i].latency);
  }
  return w;
}

} // namespace

ClusterPartition make_partition(const OpGraph &graph, const std::vector<std::size_t> &sizes) {
  auto order = graph.canonical_order();
  std::size_t total = 0;
  for (auto s : sizes) {
    if (s == 0) {
      throw ParameterError("clusters must be non-empty");
    }
    total += s;
  }
  if (total != order.size()) {
    throw ParameterError("cluster sizes do not cover the op graph");
  }
  ClusterPartition p;
  std::size_t pos = 0;
  for (auto s : sizes) {
    std::vector<std::size_t> members(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                     order.begin() + static_cast<std::ptrdiff_t>(pos + s));
    std::int64_t load = 0;
    for (auto m : members) {
      load += graph.ops[m].latency;
    }
    p.clusters.push_back(std::move(members));
    p.loads.push_back(load);
    pos += s;
  }
  return p;
}

std::vector<std::size_t> linear_partition(const std::vector<std::int64_t> &weights, std::size_t k) {
  const std::size_t n = weights.size();
  if (k < 1 || k > n) {
    throw ParameterError("cluster count must be between 1 and the number of ops");
  }
  std::vector<std::int64_t> prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    prefix[i + 1] = prefix[i] + weights[i];
  }
  auto sum = [&](std::size_t a, std::size_t b) { return prefix[b] - prefix[a]; };
  constexpr auto kInf = std::numeric_limits<std::int64_t>::max();
  // best[j][i]: minimal max-load splitting the suffix starting at i into j slices
  std::vector<std::vector<std::int64_t>> best(k + 1, std::vector<std::int64_t>(n + 1, kInf));
  best[0][n] = 0;
  for (std::size_t j = 1; j <= k; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t e = i + 1; e <= n; ++e) {
        if (best[j - 1][e] == kInf) {
          continue;
        }
        best[j][i] = std::min(best[j][i], std::max(sum(i, e), best[j - 1][e]));
      }
    }
  }
  std::int64_t target = best[k][0];
  std::vector<std::size_t> sizes;
  std::size_t i = 0;
  for (std::size_t j = k; j >= 1; --j) {
    for (std::size_t e = n; e > i; --e) {
      if (best[j - 1][e] != kInf && sum(i, e) <= target && best[j - 1][e] <= target) {
        sizes.push_back(e - i);
        i = e;
        break;
      }
    }
  }
  return sizes;
}

ClusterPartition optimal_partition(const OpGraph &graph, std::size_t k) {
  require_ops(graph);
  auto order = graph.canonical_order();
  return make_partition(graph, linear_partition(ordered_latencies(graph, order), k));
}

Implementation pipeline_impl(const OpGraph &graph) {
  require_ops(graph);
  Implementation impl;
  impl.area = static_cast<std::int64_t>(graph.ops.size());
  impl.ii = graph.max_latency();
  impl.provenance = Provenance::Pipelined;
  return impl;
}

std::vector<std::int64_t> expansion_replicas(const OpGraph &graph, std::int64_t target_ii) {
  if (target_ii < 1) {
    throw ParameterError("target ii must be at least 1");
  }
  std::vector<std::int64_t> reps;
  for (const auto &op : graph.ops) {
    reps.push_back(op.latency > target_ii ? ceil_div(op.latency, target_ii) : 1);
  }
  return reps;
}

Implementation expand_impl(const OpGraph &graph, std::int64_t target_ii, int nf) {
  require_ops(graph);
  auto reps = expansion_replicas(graph, target_ii);
  if (target_ii > graph.max_latency()) {
    throw ParameterError("target ii exceeds the pipelined ii");
  }
  Implementation impl;
  impl.area = 0;
  for (std::size_t i = 0; i < graph.ops.size(); ++i) {
    impl.area += reps[i];
    // one distribution tree per operand, one collection tree for the result
    auto trees = static_cast<std::int64_t>(graph.ops[i].args.size()) + 1;
    impl.area += trees * tree_overhead(reps[i], nf);
  }
  impl.ii = target_ii;
  impl.provenance = Provenance::Expanded;
  return impl;
}

Implementation cluster_impl(const OpGraph &graph, std::size_t k) {
  require_ops(graph);
  if (k < 1 || k > graph.ops.size()) {
    throw ParameterError("cluster count must be between 1 and the number of ops");
  }
  Implementation impl;
  impl.area = static_cast<std::int64_t>(k);
  impl.ii = optimal_partition(graph, k).max_load();
  impl.provenance = Provenance::Clustered;
  return impl;
}

std::vector<Implementation> enumerate_implementations(const OpGraph &graph, int nf) {
  require_ops(graph);
  // Pipelined first so it wins ties against an equal clustered or expanded point.
  std::vector<Implementation> all{pipeline_impl(graph)};
  for (std::int64_t t = graph.max_latency(); t >= 1; --t) {
    all.push_back(expand_impl(graph, t, nf));
  }
  for (std::size_t k = 1; k <= graph.ops.size(); ++k) {
    all.push_back(cluster_impl(graph, k));
  }
  auto clean = pareto_clean(std::move(all));
  for (std::size_t i = 0; i < clean.size(); ++i) {
    clean[i].version = "v" + std::to_string(i + 1);
  }
  return clean;
}

} // namespace stg
