#include "stg/exact.hpp"

#include "stg/replication.hpp"
#include "stg/throughput.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace stg {

std::vector<Candidate> node_candidates(const Application &app, const ImplementationLibrary &library, std::size_t m,
                                       const Rational &r, const Rational &v_tgt, int nf) {
  const auto &node = app.nodes[m];
  const auto &entries = library.entries(node.id);
  if (entries.empty()) {
    throw StructuralError("node '" + node.id + "' has an empty library");
  }
  std::vector<Candidate> out;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    Candidate c;
    c.entry = e;
    c.impl = entries[e];
    c.replicas = replica_count(Rational(c.impl.ii) * r, v_tgt);
    if (c.replicas > 1 && !node.stateless) {
      c.limit = node_limit(node, r, c.impl.ii, 1, false);
      c.replicas = 1;
      c.feasible = false;
    } else {
      bool trees = c.replicas > nf;
      c.limit = node_limit(node, r, c.impl.ii, c.replicas, trees);
      c.feasible = c.limit <= v_tgt;
    }
    auto ports = static_cast<std::int64_t>(node.num_in() + node.num_out());
    c.cost = c.impl.area * c.replicas + ports * tree_overhead(c.replicas, nf);
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

struct Search {
  std::vector<std::vector<Candidate>> options;  // feasible, ascending cost then entry
  std::vector<std::int64_t> suffix_min;         // sum of per-node minima from m onward
  std::vector<std::size_t> current;
  std::int64_t current_cost = 0;
  std::vector<std::size_t> best;  // positions into options
  std::int64_t best_cost = std::numeric_limits<std::int64_t>::max();
  SearchStats stats;

  std::vector<std::size_t> entries(const std::vector<std::size_t> &picks) const {
    std::vector<std::size_t> out;
    for (std::size_t m = 0; m < picks.size(); ++m) {
      out.push_back(options[m][picks[m]].entry);
    }
    return out;
  }

  void run(std::size_t m) {
    ++stats.visited;
    if (m == options.size()) {
      if (current_cost < best_cost || (current_cost == best_cost && entries(current) < entries(best))) {
        best_cost = current_cost;
        best = current;
      }
      return;
    }
    for (std::size_t i = 0; i < options[m].size(); ++i) {
      const auto &c = options[m][i];
      std::int64_t bound = current_cost + c.cost + suffix_min[m + 1];
      if (bound > best_cost) {
        ++stats.pruned;
        // ascending cost: every later branch is at least as expensive
        break;
      }
      current.push_back(i);
      current_cost += c.cost;
      run(m + 1);
      current_cost -= c.cost;
      current.pop_back();
    }
  }
};

} // namespace

Assignment solve_min_area(const Application &app, const ImplementationLibrary &library, const Rational &v_tgt, int nf,
                          SearchStats *stats) {
  if (v_tgt <= 0) {
    throw ParameterError("target inverse throughput must be positive");
  }
  if (nf < 2) {
    throw ParameterError("fan limit must be at least 2");
  }
  auto r = app.rate_factors();
  Search s;
  for (std::size_t m = 0; m < app.nodes.size(); ++m) {
    std::vector<Candidate> feasible;
    for (auto &c : node_candidates(app, library, m, r[m], v_tgt, nf)) {
      if (c.feasible) {
        feasible.push_back(std::move(c));
      }
    }
    if (feasible.empty()) {
      throw InfeasibleError("node '" + app.nodes[m].id + "' cannot reach inverse throughput " +
                            format_fixed6(v_tgt));
    }
    std::stable_sort(feasible.begin(), feasible.end(),
                     [](const Candidate &a, const Candidate &b) { return a.cost < b.cost; });
    s.options.push_back(std::move(feasible));
  }
  s.suffix_min.assign(app.nodes.size() + 1, 0);
  for (std::size_t m = app.nodes.size(); m-- > 0;) {
    s.suffix_min[m] = s.suffix_min[m + 1] + s.options[m].front().cost;
  }
  s.run(0);
  if (stats) {
    *stats = s.stats;
  }
  std::vector<NodeChoice> choices;
  for (std::size_t m = 0; m < app.nodes.size(); ++m) {
    const auto &c = s.options[m][s.best[m]];
    choices.push_back({app.nodes[m].id, c.impl, c.replicas});
  }
  auto a = assemble_assignment(app, choices, nf);
  if (a.achieved_v > v_tgt || a.total_area != s.best_cost) {
    throw std::logic_error("exact search produced an inconsistent assignment");
  }
  return a;
}

Assignment solve_max_throughput(const Application &app, const ImplementationLibrary &library,
                                std::int64_t area_budget, int nf) {
  if (area_budget < 1) {
    throw ParameterError("area budget must be positive");
  }
  auto r = app.rate_factors();
  std::set<Rational> values;
  for (std::size_t m = 0; m < app.nodes.size(); ++m) {
    const auto &node = app.nodes[m];
    for (const auto &e : library.entries(node.id)) {
      std::int64_t max_nr = node.stateless ? std::max<std::int64_t>(1, area_budget / e.area) : 1;
      for (std::int64_t nr = 1; nr <= max_nr; ++nr) {
        values.insert(Rational(e.ii, nr) * r[m]);
      }
    }
    for (int in : node.in_rates) {
      values.insert(r[m] * in);
    }
    for (int o : node.out_rates) {
      values.insert(r[m] * o);
    }
  }
  std::vector<Rational> candidates(values.begin(), values.end());
  auto fits = [&](const Rational &v) -> std::optional<Assignment> {
    try {
      auto a = solve_min_area(app, library, v, nf);
      if (a.total_area <= area_budget) {
        return a;
      }
    } catch (const InfeasibleError &) {
    }
    return std::nullopt;
  };
  auto best = fits(candidates.back());
  if (!best) {
    throw InfeasibleError("no assignment fits in area " + std::to_string(area_budget));
  }
  std::size_t lo = 0;
  std::size_t hi = candidates.size() - 1;  // fits(candidates[hi]) holds
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (auto a = fits(candidates[mid])) {
      best = std::move(a);
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return *best;
}

std::string dump_lp(const Application &app, const ImplementationLibrary &library, const Rational &v_tgt, int nf) {
  auto r = app.rate_factors();
  std::ostringstream obj;
  std::ostringstream rows;
  std::ostringstream vars;
  bool first = true;
  for (std::size_t m = 0; m < app.nodes.size(); ++m) {
    rows << " pick_" << m << ":";
    bool any = false;
    for (const auto &c : node_candidates(app, library, m, r[m], v_tgt, nf)) {
      std::string x = "x_" + std::to_string(m) + "_" + std::to_string(c.entry);
      if (!c.feasible) {
        continue;
      }
      obj << (first ? " " : " + ") << c.cost << ' ' << x;
      rows << (any ? " + " : " ") << x;
      vars << ' ' << x;
      first = false;
      any = true;
    }
    rows << (any ? "" : " 0 x_none") << " = 1\n";
  }
  std::ostringstream out;
  out << "\\ min-area selection, target inverse throughput " << format_fixed6(v_tgt) << ", fan limit " << nf << '\n';
  for (std::size_t m = 0; m < app.nodes.size(); ++m) {
    out << "\\ node " << m << " = " << app.nodes[m].id << '\n';
  }
  out << "Minimize\n obj:" << obj.str() << "\nSubject To\n" << rows.str() << "Binary\n" << vars.str() << "\nEnd\n";
  return out.str();
}

} // namespace stg
