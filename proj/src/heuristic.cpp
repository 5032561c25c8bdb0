#include "stg/heuristic.hpp"

#include "stg/exact.hpp"
#include "stg/replication.hpp"
#include "stg/throughput.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

namespace stg {

namespace {

constexpr int kMaxRelaxations = 64;

Candidate cheapest(const Application &app, const ImplementationLibrary &library, std::size_t m, const Rational &r,
                   const Rational &v, int nf) {
  auto cands = node_candidates(app, library, m, r, v, nf);
  const Candidate *best = nullptr;
  for (const auto &c : cands) {
    // entries are ii-sorted, so strict < keeps the faster one on ties
    if (c.feasible && (best == nullptr || c.cost < best->cost)) {
      best = &c;
    }
  }
  if (best == nullptr) {
    throw InfeasibleError("node '" + app.nodes[m].id + "' cannot reach inverse throughput " +
                          format_fixed6(v / r));
  }
  return *best;
}

struct NodeState {
  Implementation impl;
  std::int64_t replicas = 1;
  std::vector<bool> direct_in;   // port wired straight from producer replicas
  std::vector<bool> direct_out;  // port wired straight into consumer replicas
};

class Planner {
public:
  Planner(const Application &app, const ImplementationLibrary &library, int nf)
      : m_app(app), m_library(library), m_nf(nf), m_r(app.rate_factors()) {}

  std::int64_t cost(const NodeState &s) const {
    std::int64_t c = s.impl.area * s.replicas;
    std::int64_t t = tree_overhead(s.replicas, m_nf);
    for (bool d : s.direct_in) {
      c += d ? 0 : t;
    }
    for (bool d : s.direct_out) {
      c += d ? 0 : t;
    }
    return c;
  }

  Assignment build(const std::vector<NodeState> &states) const {
    Assignment a;
    a.fan_limit = m_nf;
    for (std::size_t m = 0; m < m_app.nodes.size(); ++m) {
      const auto &node = m_app.nodes[m];
      const auto &s = states[m];
      a.choices.push_back({node.id, s.impl, s.replicas});
      if (s.replicas <= m_nf) {
        continue;
      }
      for (std::size_t j = 0; j < node.num_in(); ++j) {
        if (!s.direct_in[j]) {
          a.trees.push_back(build_tree(node.id, TreeKind::Fork, j, s.replicas, m_nf));
        }
      }
      for (std::size_t k = 0; k < node.num_out(); ++k) {
        if (!s.direct_out[k]) {
          a.trees.push_back(build_tree(node.id, TreeKind::Join, k, s.replicas, m_nf));
        }
      }
    }
    recompute_areas(a);
    a.achieved_v = propagate_rates(m_app, a).achieved_v;
    return a;
  }

  HeuristicResult run(const Rational &v, const std::vector<std::size_t> &walk) {
    HeuristicResult result;
    result.walk = walk;
    std::vector<NodeState> states(m_app.nodes.size());
    for (auto m : walk) {
      const auto &node = m_app.nodes[m];
      auto c = cheapest(m_app, m_library, m, m_r[m], v, m_nf);
      states[m].impl = c.impl;
      states[m].replicas = c.replicas;
      states[m].direct_in.assign(node.num_in(), false);
      states[m].direct_out.assign(node.num_out(), false);
      result.trace.push_back({node.id, "select", 0, c.cost,
                              c.impl.version + " x" + std::to_string(c.replicas) + " for period " +
                                  format_fixed6(v / m_r[m])});
    }
    // a node is retried only if a fusion changed it since its last attempt
    std::vector<std::optional<std::pair<std::string, std::int64_t>>> attempted(m_app.nodes.size());
    for (auto d : walk) {
      std::size_t cur = d;
      while (true) {
        std::pair<std::string, std::int64_t> key{states[cur].impl.version, states[cur].replicas};
        if (attempted[cur] == key) {
          break;
        }
        attempted[cur] = key;
        auto producer = try_combine(cur, v, states, result.trace);
        if (!producer) {
          break;
        }
        cur = *producer;
      }
    }
    result.assignment = build(states);
    return result;
  }

private:
  // Fuses the producer of `d` with nf-replica groups of d. Returns the producer
  // index when the combination was accepted.
  std::optional<std::size_t> try_combine(std::size_t d, const Rational &v, std::vector<NodeState> &states,
                                         std::vector<TraceEntry> &trace) const {
    const auto &dn = m_app.nodes[d];
    auto &ds = states[d];
    if (ds.replicas <= m_nf || dn.num_in() != 1 || ds.direct_in[0]) {
      return std::nullopt;
    }
    auto ch = m_app.input_channel(d, 0);
    std::size_t s = m_app.channels[*ch].from.node;
    const auto &sn = m_app.nodes[s];
    auto &ss = states[s];
    if (sn.num_out() != 1 || m_app.output_channels(s, 0).size() != 1 || !sn.stateless) {
      trace.push_back({dn.id, "keep-trees", cost(ds), cost(ds), "producer " + sn.id + " cannot be fused"});
      return std::nullopt;
    }
    for (bool b : ss.direct_in) {
      if (b) {
        trace.push_back({dn.id, "keep-trees", cost(ds), cost(ds), "producer " + sn.id + " is already fused"});
        return std::nullopt;
      }
    }
    if (ss.direct_out[0]) {
      return std::nullopt;
    }
    Rational period_s = v / m_r[s];   // producer firing period demanded by the budget
    Rational v_d(ds.impl.ii, dn.in_rates[0]);
    auto plan = combine_with_fork(m_library.entries(sn.id), v_d, ds.replicas, m_nf, period_s);
    std::int64_t before = cost(ss) + cost(ds);
    if (!plan) {
      trace.push_back({dn.id, "keep-trees", before, before, "no entry of " + sn.id + " is fast enough"});
      return std::nullopt;
    }
    NodeState new_s = ss;
    NodeState new_d = ds;
    new_s.impl = plan->producer;
    new_s.replicas = plan->combined_replicas;
    new_s.direct_out[0] = true;
    new_d.direct_in[0] = true;
    std::int64_t after = cost(new_s) + cost(new_d);
    std::ostringstream detail;
    detail << sn.id << ' ' << plan->producer.version << " x" << plan->combined_replicas << " fused with " << m_nf
           << " replicas of " << dn.id << "; v_C " << format_fixed6(plan->v_combined) << ", saved "
           << plan->saved_nodes << " tree nodes (formula overhead " << plan->formula_overhead << "), slack "
           << format_fixed6(plan->residual_slack);
    if (after >= before) {
      trace.push_back({dn.id, "keep-trees", before, after, "no gain: " + detail.str()});
      return std::nullopt;
    }
    auto trial = states;
    trial[s] = new_s;
    trial[d] = new_d;
    auto a = build(trial);
    if (a.achieved_v > v || !check_interconnect(m_app, a).empty()) {
      trace.push_back({dn.id, "keep-trees", before, after, "illegal or too slow: " + detail.str()});
      return std::nullopt;
    }
    states = std::move(trial);
    trace.push_back({dn.id, "combine", before, after, detail.str()});
    return s;
  }

  const Application &m_app;
  const ImplementationLibrary &m_library;
  int m_nf;
  std::vector<Rational> m_r;
};

} // namespace

std::int64_t estimate_area(const Application &app, const ImplementationLibrary &library, const Rational &v, int nf) {
  auto r = app.rate_factors();
  std::int64_t total = 0;
  for (std::size_t m = 0; m < app.nodes.size(); ++m) {
    total += cheapest(app, library, m, r[m], v, nf).cost;
  }
  return total;
}

Budget budget_throughput(const Application &app, const ImplementationLibrary &library,
                         const OptimizationTarget &target) {
  auto r = app.rate_factors();
  Budget b;
  b.margin = target.margin;
  auto finish = [&](const Rational &v) {
    b.application_v = v;
    b.node_period.clear();
    for (const auto &rm : r) {
      b.node_period.push_back(v / rm);
    }
  };
  if (const auto *min_area = std::get_if<MinArea>(&target.mode)) {
    finish(min_area->target_v);
    b.estimated_area = estimate_area(app, library, min_area->target_v, target.fan_limit);
    return b;
  }
  const auto budget = std::get<MaxThroughput>(target.mode).area_budget;
  Rational limit = Rational(budget) * (Rational(1) + target.margin);
  // fastest rate any single node offers unreplicated
  std::optional<Rational> v;
  for (std::size_t m = 0; m < app.nodes.size(); ++m) {
    Rational fastest = Rational(library.entries(app.nodes[m].id).front().ii) * r[m];
    v = v ? std::min(*v, fastest) : fastest;
  }
  // past this every node runs its slowest entry unreplicated; nothing gets cheaper
  Rational loosest = *v;
  for (std::size_t m = 0; m < app.nodes.size(); ++m) {
    for (const auto &impl : library.entries(app.nodes[m].id)) {
      loosest = std::max(loosest, Rational(impl.ii) * r[m]);
    }
  }
  for (int i = 0; i <= kMaxRelaxations; ++i) {
    try {
      auto estimate = estimate_area(app, library, *v, target.fan_limit);
      if (Rational(estimate) <= limit) {
        finish(*v);
        b.estimated_area = estimate;
        b.relaxations = i;
        return b;
      }
    } catch (const InfeasibleError &) {
    }
    if (*v >= loosest) {
      break;
    }
    *v = std::min(*v * 2, loosest);
  }
  throw InfeasibleError("no throughput budget fits in area " + std::to_string(budget));
}

std::vector<std::size_t> walk_order(const Application &app, const ImplementationLibrary &library, const Rational &v,
                                    int nf) {
  auto report = slack_and_weights(propagate_rates(app, fastest_assignment(app, library, nf)), v);
  const std::size_t n = app.nodes.size();
  std::vector<Rational> score(n);
  for (std::size_t m = 0; m < n; ++m) {
    score[m] = report.nodes[m].weight * (v / report.nodes[m].r);
  }
  // Critical path: source-to-sink path with the largest summed score.
  std::vector<Rational> best(n);
  std::vector<std::optional<std::size_t>> via(n);
  for (auto m : app.topological_order()) {
    best[m] = score[m];
    for (auto p : app.predecessors(m)) {
      if (!via[m] || best[p] > best[*via[m]]) {
        via[m] = p;
      }
    }
    if (via[m]) {
      best[m] += best[*via[m]];
    }
  }
  std::optional<std::size_t> end;
  for (auto s : app.sinks()) {
    if (!end || best[s] > best[*end]) {
      end = s;
    }
  }
  std::vector<std::size_t> path;
  for (auto m = end; m; m = via[*m]) {
    path.push_back(*m);
  }
  std::reverse(path.begin(), path.end());
  std::vector<bool> on_path(n, false);
  for (auto m : path) {
    on_path[m] = true;
  }

  std::vector<std::size_t> order;
  std::vector<bool> seen(n, false);
  auto visit = [&](std::size_t m) {
    seen[m] = true;
    order.push_back(m);
  };
  auto by_score = [&](std::vector<std::size_t> xs) {
    std::stable_sort(xs.begin(), xs.end(), [&](auto a, auto b) { return score[a] > score[b]; });
    return xs;
  };
  std::size_t bottleneck = find_bottleneck(report);
  visit(bottleneck);
  std::vector<std::size_t> forward{bottleneck};
  for (std::size_t cur = bottleneck;;) {
    std::optional<std::size_t> next;
    auto it = std::find(path.begin(), path.end(), cur);
    if (it != path.end() && it + 1 != path.end()) {
      next = *(it + 1);
    } else if (auto succ = by_score(app.successors(cur)); !succ.empty()) {
      next = succ.front();
    }
    if (!next || seen[*next]) {
      break;
    }
    visit(*next);
    forward.push_back(*next);
    cur = *next;
  }
  // Branches feeding the forward walk, explored backward.
  std::vector<std::size_t> stack;
  for (auto it = forward.rbegin(); it != forward.rend(); ++it) {
    if (*it == bottleneck) {
      continue;
    }
    for (auto p : by_score(app.predecessors(*it))) {
      if (!seen[p] && !on_path[p]) {
        stack.push_back(p);
      }
    }
  }
  std::reverse(stack.begin(), stack.end());
  while (!stack.empty()) {
    auto m = stack.back();
    stack.pop_back();
    if (seen[m]) {
      continue;
    }
    visit(m);
    auto preds = by_score(app.predecessors(m));
    for (auto it = preds.rbegin(); it != preds.rend(); ++it) {
      if (!seen[*it] && !on_path[*it]) {
        stack.push_back(*it);
      }
    }
  }
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    if (!seen[*it]) {
      visit(*it);
    }
  }
  std::deque<std::size_t> queue;
  std::vector<bool> queued(n, false);
  for (auto s : app.sources()) {
    queue.push_back(s);
    queued[s] = true;
  }
  while (!queue.empty()) {
    auto m = queue.front();
    queue.pop_front();
    if (!seen[m]) {
      visit(m);
    }
    for (auto s : app.successors(m)) {
      if (!queued[s]) {
        queued[s] = true;
        queue.push_back(s);
      }
    }
  }
  return order;
}

HeuristicResult optimize_heuristic(const Application &app, const ImplementationLibrary &library,
                                   const OptimizationTarget &target) {
  const int nf = target.fan_limit;
  if (nf < 2) {
    throw ParameterError("fan limit must be at least 2");
  }
  auto budget = budget_throughput(app, library, target);
  Planner planner(app, library, nf);
  std::vector<TraceEntry> relax_trace;
  for (int attempt = budget.relaxations; attempt <= kMaxRelaxations; ++attempt) {
    const Rational v = budget.application_v;
    relax_trace.push_back({"", "budget", budget.estimated_area, budget.estimated_area,
                           "application inverse throughput " + format_fixed6(v)});
    std::optional<HeuristicResult> result;
    try {
      result = planner.run(v, walk_order(app, library, v, nf));
    } catch (const InfeasibleError &) {
      if (std::holds_alternative<MinArea>(target.mode)) {
        throw;
      }
    }
    bool fits = result.has_value();
    if (result) {
      if (const auto *mt = std::get_if<MaxThroughput>(&target.mode)) {
        fits = result->assignment.total_area <= mt->area_budget;
      } else if (result->assignment.achieved_v > v) {
        throw std::logic_error("heuristic assignment misses its budget");
      }
    }
    if (fits) {
      result->budget = budget;
      relax_trace.insert(relax_trace.end(), result->trace.begin(), result->trace.end());
      result->trace = std::move(relax_trace);
      return std::move(*result);
    }
    relax_trace.push_back({"", "relax", result ? result->assignment.total_area : 0, 0,
                           "overshoot not repaid, doubling the budget"});
    budget.application_v *= 2;
    budget.relaxations = attempt + 1;
    for (auto &p : budget.node_period) {
      p *= 2;
    }
    try {
      budget.estimated_area = estimate_area(app, library, budget.application_v, nf);
    } catch (const InfeasibleError &) {
      budget.estimated_area = 0;
    }
  }
  throw InfeasibleError("no assignment fits in the area budget after " + std::to_string(kMaxRelaxations) +
                        " relaxations");
}

std::string trace_csv(const std::vector<TraceEntry> &trace) {
  std::ostringstream out;
  out << "node,action,area_before,area_after,detail\n";
  for (const auto &t : trace) {
    std::string detail = t.detail;
    std::replace(detail.begin(), detail.end(), ',', ';');
    out << t.node << ',' << t.action << ',' << t.area_before << ',' << t.area_after << ',' << detail << '\n';
  }
  return out.str();
}

} // namespace stg
