#pragma once

// Independent reference computations. Each one is written from the problem
// definition, not from the library code it checks.

#include "stg/model.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace stg::oracle {

/// Structural nodes of a fork (or join) tree for nr replicas built bottom-up:
/// group the replicas nf at a time, then group those groups, until one root.
inline std::int64_t tree_nodes(std::int64_t nr, int nf) {
  if (nr <= nf) {
    return 0;
  }
  std::int64_t total = 0;
  std::int64_t level = nr;
  while (level > 1) {
    level = (level + nf - 1) / nf;
    total += level;
  }
  return total;
}

/// sum_{i=0}^{H-1} nf^i
inline std::int64_t geometric_sum(int nf, int h) {
  std::int64_t s = 0;
  std::int64_t p = 1;
  for (int i = 0; i < h; ++i) {
    s += p;
    p *= nf;
  }
  return s;
}

/// Every way to cut a sequence into k non-empty contiguous slices.
inline void for_each_composition(std::size_t n, std::size_t k,
                                 const std::function<void(const std::vector<std::size_t> &)> &visit) {
  std::vector<std::size_t> sizes;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t left, std::size_t parts) {
    if (parts == 1) {
      sizes.push_back(left);
      visit(sizes);
      sizes.pop_back();
      return;
    }
    for (std::size_t s = 1; s + parts - 1 <= left; ++s) {
      sizes.push_back(s);
      rec(left - s, parts - 1);
      sizes.pop_back();
    }
  };
  if (k >= 1 && k <= n) {
    rec(n, k);
  }
}

inline std::int64_t max_slice(const std::vector<std::int64_t> &w, const std::vector<std::size_t> &sizes) {
  std::int64_t best = 0;
  std::size_t at = 0;
  for (auto s : sizes) {
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < s; ++i) {
      sum += w[at++];
    }
    best = std::max(best, sum);
  }
  return best;
}

/// Minimum over all contiguous k-partitions of the largest slice sum.
inline std::int64_t min_max_partition(const std::vector<std::int64_t> &w, std::size_t k) {
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for_each_composition(w.size(), k, [&](const auto &sizes) { best = std::min(best, max_slice(w, sizes)); });
  return best;
}

/// (ii, area) Pareto front over every clustering and every expansion of a
/// graph: clusters are contiguous slices of `order` (ii = largest slice load,
/// area = number of slices); expansion to t copies each op ceil(L/t) times.
inline std::set<std::pair<std::int64_t, std::int64_t>> pareto_front(const OpGraph &g,
                                                                    const std::vector<std::size_t> &order, int nf) {
  std::vector<std::int64_t> w;
  for (auto i : order) {
    w.push_back(g.ops[i].latency);
  }
  std::map<std::int64_t, std::int64_t> best;  // ii -> min area
  auto offer = [&](std::int64_t ii, std::int64_t area) {
    auto it = best.find(ii);
    if (it == best.end() || area < it->second) {
      best[ii] = area;
    }
  };
  for (std::size_t k = 1; k <= w.size(); ++k) {
    for_each_composition(w.size(), k, [&](const auto &sizes) { offer(max_slice(w, sizes), (std::int64_t)k); });
  }
  std::int64_t lmax = *std::max_element(w.begin(), w.end());
  for (std::int64_t t = 1; t <= lmax; ++t) {
    std::int64_t area = 0;
    for (const auto &op : g.ops) {
      std::int64_t reps = (op.latency + t - 1) / t;
      area += reps + (static_cast<std::int64_t>(op.args.size()) + 1) * tree_nodes(reps, nf);
    }
    offer(t, area);
  }
  std::set<std::pair<std::int64_t, std::int64_t>> front;
  std::int64_t floor_area = std::numeric_limits<std::int64_t>::max();
  for (auto [ii, area] : best) {
    if (area < floor_area) {
      front.emplace(ii, area);
      floor_area = area;
    }
  }
  return front;
}

struct MinAreaResult {
  std::int64_t area = 0;
  std::vector<std::size_t> entries;
  std::vector<std::int64_t> replicas;
};

/// Exhaustive min-area search: every combination of library entries, each
/// with the fewest replicas that keep its node at or under v. A node needs
/// ii * r / nr <= v; with trees (nr > nf) each tree root also moves only one
/// token per cycle, so r * rate <= v on every port. Stateful nodes stay at 1.
inline std::optional<MinAreaResult> min_area(const Application &app, const ImplementationLibrary &lib,
                                             const Rational &v, int nf) {
  auto r = app.rate_factors();
  const std::size_t n = app.nodes.size();
  std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>> options(n);  // (replicas, cost) or (-1,...)
  for (std::size_t m = 0; m < n; ++m) {
    const auto &node = app.nodes[m];
    int widest = 0;
    for (int x : node.in_rates) {
      widest = std::max(widest, x);
    }
    for (int x : node.out_rates) {
      widest = std::max(widest, x);
    }
    for (const auto &e : lib.entries(node.id)) {
      std::int64_t chosen = -1;
      std::int64_t cap = node.stateless ? 1 + boost::rational_cast<std::int64_t>(Rational(e.ii) * r[m] / v) + 1 : 1;
      for (std::int64_t nr = 1; nr <= cap; ++nr) {
        bool ok = Rational(e.ii) * r[m] / nr <= v;
        if (nr > nf && r[m] * widest > v) {
          ok = false;
        }
        if (ok) {
          chosen = nr;
          break;
        }
      }
      std::int64_t cost = -1;
      if (chosen > 0) {
        auto ports = static_cast<std::int64_t>(node.num_in() + node.num_out());
        cost = e.area * chosen + ports * tree_nodes(chosen, nf);
      }
      options[m].emplace_back(chosen, cost);
    }
  }
  std::optional<MinAreaResult> best;
  std::vector<std::size_t> pick(n, 0);
  std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t m, std::int64_t acc) {
    if (m == n) {
      if (!best || acc < best->area) {
        MinAreaResult res;
        res.area = acc;
        res.entries = pick;
        for (std::size_t i = 0; i < n; ++i) {
          res.replicas.push_back(options[i][pick[i]].first);
        }
        best = res;
      }
      return;
    }
    for (std::size_t e = 0; e < options[m].size(); ++e) {
      if (options[m][e].first < 0) {
        continue;
      }
      pick[m] = e;
      rec(m + 1, acc + options[m][e].second);
    }
  };
  rec(0, 0);
  return best;
}

/// Token streams of every application output, computed by firing each node
/// in dependency order against unbounded queues. Only for applications whose
/// nodes all carry op graphs.
inline std::map<std::string, std::vector<std::int64_t>> reference_streams(const Application &app,
                                                                          std::int64_t source_firings) {
  auto r = app.rate_factors();
  std::vector<std::vector<std::vector<std::int64_t>>> produced(app.nodes.size());  // [node][port] tokens
  std::vector<std::size_t> order;
  std::vector<int> indegree(app.nodes.size(), 0);
  for (const auto &c : app.channels) {
    ++indegree[c.to.node];
  }
  std::vector<bool> done(app.nodes.size(), false);
  while (order.size() < app.nodes.size()) {
    for (std::size_t m = 0; m < app.nodes.size(); ++m) {
      if (done[m]) {
        continue;
      }
      bool ready = true;
      for (const auto &c : app.channels) {
        ready = ready && !(c.to.node == m && !done[c.from.node]);
      }
      if (ready) {
        done[m] = true;
        order.push_back(m);
        break;
      }
    }
  }
  for (auto m : order) {
    const auto &node = app.nodes[m];
    auto firings = boost::rational_cast<std::int64_t>(r[m] * source_firings);
    produced[m].assign(node.num_out(), {});
    std::vector<const std::vector<std::int64_t> *> feeds(node.num_in(), nullptr);
    for (const auto &c : app.channels) {
      if (c.to.node == m) {
        feeds[c.to.port] = &produced[c.from.node][c.from.port];
      }
    }
    for (std::int64_t f = 0; f < firings; ++f) {
      std::vector<std::vector<std::int64_t>> in(node.num_in());
      for (std::size_t j = 0; j < node.num_in(); ++j) {
        for (int t = 0; t < node.in_rates[j]; ++t) {
          in[j].push_back((*feeds[j])[static_cast<std::size_t>(f * node.in_rates[j] + t)]);
        }
      }
      auto out = node.graph->evaluate(in, f);
      std::size_t at = 0;
      for (std::size_t k = 0; k < node.num_out(); ++k) {
        for (int t = 0; t < node.out_rates[k]; ++t) {
          produced[m][k].push_back(out[at++]);
        }
      }
    }
  }
  std::map<std::string, std::vector<std::int64_t>> streams;
  for (std::size_t m = 0; m < app.nodes.size(); ++m) {
    bool feeds_someone = false;
    for (const auto &c : app.channels) {
      feeds_someone = feeds_someone || c.from.node == m;
    }
    if (!feeds_someone) {
      for (std::size_t k = 0; k < app.nodes[m].num_out(); ++k) {
        streams[app.nodes[m].id + "." + std::to_string(k)] = produced[m][k];
      }
    }
  }
  return streams;
}

} // namespace stg::oracle
