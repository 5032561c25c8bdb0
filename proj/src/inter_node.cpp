#include "stg/inter_node.hpp"

#include <algorithm>
#include <sstream>

namespace stg {

std::vector<std::size_t> rebalance_sizes(const std::vector<std::int64_t> &weights, std::vector<std::size_t> sizes) {
  std::vector<std::size_t> start(sizes.size() + 1, 0);
  auto refresh = [&] {
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      start[i + 1] = start[i] + sizes[i];
    }
  };
  refresh();
  if (start.back() != weights.size()) {
    throw ParameterError("cluster sizes do not cover the weights");
  }
  auto load = [&](std::size_t c) {
    std::int64_t s = 0;
    for (std::size_t i = start[c]; i < start[c + 1]; ++i) {
      s += weights[i];
    }
    return s;
  };
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t b = 0; b + 1 < sizes.size() && !improved; ++b) {
      std::int64_t left = load(b);
      std::int64_t right = load(b + 1);
      std::int64_t before = std::max(left, right);
      if (sizes[b] > 1) {
        std::int64_t w = weights[start[b + 1] - 1];
        if (std::max(left - w, right + w) < before) {
          --sizes[b];
          ++sizes[b + 1];
          improved = true;
          break;
        }
      }
      if (sizes[b + 1] > 1) {
        std::int64_t w = weights[start[b + 1]];
        if (std::max(left + w, right - w) < before) {
          ++sizes[b];
          --sizes[b + 1];
          improved = true;
          break;
        }
      }
    }
    refresh();
  }
  return sizes;
}

ClusterPartition rebalance(const ClusterPartition &partition, const OpGraph &graph) {
  auto order = graph.canonical_order();
  std::vector<std::int64_t> weights;
  for (auto i : order) {
    weights.push_back(graph.ops[i].latency);
  }
  // The partition must be a slicing of the canonical order.
  std::size_t pos = 0;
  for (const auto &c : partition.clusters) {
    for (auto op : c) {
      if (pos >= order.size() || order[pos] != op) {
        throw ParameterError("partition does not follow the canonical op order");
      }
      ++pos;
    }
  }
  return make_partition(graph, rebalance_sizes(weights, partition.sizes()));
}

ImplementationLibrary build_library(const Application &app, const ImplementationLibrary &supplied, int nf) {
  ImplementationLibrary lib;
  for (const auto &node : app.nodes) {
    if (supplied.contains(node.id)) {
      lib.set(node.id, supplied.entries(node.id));
      continue;
    }
    if (!node.graph) {
      throw StructuralError("node '" + node.id + "' has neither an op graph nor library entries");
    }
    const OpGraph &g = *node.graph;
    auto entries = enumerate_implementations(g, nf);
    for (auto &e : entries) {
      if (e.provenance == Provenance::Clustered) {
        auto k = static_cast<std::size_t>(e.area);
        e.ii = rebalance(optimal_partition(g, k), g).max_load();
      }
      e.owner = node.id;
    }
    auto clean = pareto_clean(std::move(entries));
    for (std::size_t i = 0; i < clean.size(); ++i) {
      clean[i].version = "v" + std::to_string(i + 1);
    }
    lib.set(node.id, std::move(clean));
  }
  return lib;
}

std::string library_csv(const Application &app, const ImplementationLibrary &library) {
  std::ostringstream out;
  bool several = app.nodes.size() > 1;
  out << "version_tag,ii,area,provenance\n";
  for (const auto &node : app.nodes) {
    if (!library.contains(node.id)) {
      continue;
    }
    if (several) {
      out << "# " << node.id << '\n';
    }
    for (const auto &e : library.entries(node.id)) {
      out << e.version << ',' << e.ii << ',' << e.area << ',' << to_string(e.provenance) << '\n';
    }
  }
  return out.str();
}

} // namespace stg
