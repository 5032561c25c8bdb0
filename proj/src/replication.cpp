#include "stg/replication.hpp"

#include <map>
#include <numeric>
#include <set>

namespace stg {

namespace {

std::int64_t ipow(std::int64_t base, int exp) {
  std::int64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    r *= base;
  }
  return r;
}

void check_fan(int nf) {
  if (nf < 2) {
    throw ParameterError("fan limit must be at least 2");
  }
}

} // namespace

std::int64_t replica_count(const Rational &v_node, const Rational &v_target) {
  if (v_node <= 0 || v_target <= 0) {
    throw ParameterError("inverse throughputs must be positive");
  }
  return std::max<std::int64_t>(1, ceil(v_node / v_target));
}

int tree_depth(std::int64_t nr, int nf) {
  check_fan(nf);
  if (nr < 1) {
    throw ParameterError("replica count must be at least 1");
  }
  int h = 0;
  std::int64_t reach = 1;
  while (reach < nr) {
    reach *= nf;
    ++h;
  }
  return h;
}

std::int64_t tree_overhead(std::int64_t nr, int nf) {
  int depth = tree_depth(nr, nf);
  if (nr <= nf) {
    return 0;
  }
  std::int64_t count = 0;
  for (int h = 1; h <= depth; ++h) {
    count += ceil_div(nr, ipow(nf, depth - h + 1));
  }
  return count;
}

ForkJoinTree build_tree(const std::string &node, TreeKind kind, std::size_t port, std::int64_t nr, int nf) {
  ForkJoinTree tree;
  tree.node = node;
  tree.kind = kind;
  tree.port = port;
  tree.replicas = nr;
  tree.fan_limit = nf;
  int depth = tree_depth(nr, nf);
  if (nr <= nf) {
    return tree;
  }
  const std::string stem = std::string(kStructuralPrefix) + node + "_" + (kind == TreeKind::Fork ? "f" : "j") +
                           std::to_string(port) + "_";
  std::size_t previous_layer_start = 0;
  for (int h = 1; h <= depth; ++h) {
    std::int64_t span = ipow(nf, depth - h + 1);
    std::int64_t count = ceil_div(nr, span);
    std::size_t layer_start = tree.nodes.size();
    for (std::int64_t i = 0; i < count; ++i) {
      TreeNode tn;
      tn.id = stem + std::to_string(h) + "_" + std::to_string(i);
      tn.layer = h;
      tn.lo = i * span;
      tn.hi = std::min(nr, (i + 1) * span);
      if (h > 1) {
        tn.parent = previous_layer_start + static_cast<std::size_t>(i / nf);
      }
      tree.nodes.push_back(std::move(tn));
    }
    previous_layer_start = layer_start;
  }
  return tree;
}

std::vector<ForkJoinTree> build_fork_join(const CompositeNode &node, std::int64_t nr, int nf) {
  check_fan(nf);
  if (nr > 1 && !node.stateless) {
    throw LegalityError("stateful node '" + node.id + "' cannot be replicated");
  }
  std::vector<ForkJoinTree> trees;
  if (nr <= nf) {
    return trees;
  }
  for (std::size_t p = 0; p < node.num_in(); ++p) {
    trees.push_back(build_tree(node.id, TreeKind::Fork, p, nr, nf));
  }
  for (std::size_t p = 0; p < node.num_out(); ++p) {
    trees.push_back(build_tree(node.id, TreeKind::Join, p, nr, nf));
  }
  return trees;
}

std::vector<LayerRates> layer_rates(const Rational &v_root, int depth, int nf) {
  check_fan(nf);
  std::vector<LayerRates> out;
  Rational v = v_root;
  for (int h = 1; h <= depth; ++h) {
    out.push_back({v, v * nf});
    v *= nf;
  }
  return out;
}

std::optional<CombinePlan> combine_with_fork(const std::vector<Implementation> &producer_library, const Rational &v_D,
                                             std::int64_t nr, int nf, const Rational &v_S) {
  check_fan(nf);
  if (nr <= nf || v_S <= 0) {
    return std::nullopt;
  }
  std::int64_t combined = ceil_div(nr, nf);
  Rational bound = v_S * combined;
  const Implementation *best = nullptr;
  for (const auto &impl : producer_library) {
    Rational v(impl.ii);
    if (v > bound) {
      continue;
    }
    if (best == nullptr || v > Rational(best->ii) || (v == Rational(best->ii) && impl.area < best->area)) {
      best = &impl;
    }
  }
  if (best == nullptr) {
    return std::nullopt;
  }
  int depth = tree_depth(nr, nf);
  CombinePlan plan;
  plan.producer = *best;
  plan.combined_replicas = combined;
  plan.v_combined = v_D / nf;
  plan.formula_overhead = 0;
  for (int i = 0; i <= depth - 2; ++i) {
    plan.formula_overhead += ipow(nf, i);
  }
  plan.new_overhead = tree_overhead(combined, nf);
  plan.saved_nodes = ipow(nf, depth - 1);
  plan.original_overhead = tree_overhead(nr, nf);
  plan.residual_slack = bound - Rational(best->ii);
  return plan;
}

std::vector<std::pair<std::int64_t, std::int64_t>> crossbar_pairs(std::int64_t np, std::int64_t bp, std::int64_t nc,
                                                                  std::int64_t bc) {
  if (np < 1 || bp < 1 || nc < 1 || bc < 1) {
    throw ParameterError("endpoint counts and block sizes must be positive");
  }
  std::int64_t period = std::lcm(bp * np, bc * nc);
  std::set<std::pair<std::int64_t, std::int64_t>> pairs;
  for (std::int64_t t = 0; t < period; ++t) {
    std::int64_t a = (t / bp) % np;
    std::int64_t d = (t / bc) % nc;
    pairs.emplace(a, d);
  }
  return {pairs.begin(), pairs.end()};
}

std::vector<std::string> check_interconnect(const Application &app, const Assignment &assignment) {
  std::vector<std::string> problems;
  const int nf = assignment.fan_limit;
  auto replicas = [&](std::size_t node) {
    const auto *c = assignment.choice(app.nodes[node].id);
    return c ? c->replicas : 1;
  };
  for (const auto &tree : assignment.trees) {
    const auto *c = assignment.choice(tree.node);
    if (c == nullptr || c->replicas != tree.replicas) {
      problems.push_back("tree on '" + tree.node + "' does not match its replica count");
      continue;
    }
    std::vector<int> children(tree.nodes.size(), 0);
    for (const auto &tn : tree.nodes) {
      if (tn.parent) {
        ++children[*tn.parent];
      }
    }
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      // leaves drive replicas directly
      std::int64_t fan = children[i] > 0 ? children[i] : tree.nodes[i].hi - tree.nodes[i].lo;
      if (fan > nf) {
        problems.push_back("tree node '" + tree.nodes[i].id + "' exceeds the fan limit");
      }
    }
  }
  for (std::size_t ch = 0; ch < app.channels.size(); ++ch) {
    const auto &c = app.channels[ch];
    const auto &p = app.nodes[c.from.node];
    const auto &d = app.nodes[c.to.node];
    std::int64_t np = assignment.tree(p.id, TreeKind::Join, c.from.port) ? 1 : replicas(c.from.node);
    std::int64_t nc = assignment.tree(d.id, TreeKind::Fork, c.to.port) ? 1 : replicas(c.to.node);
    if (np == 1 && nc == 1) {
      continue;
    }
    auto pairs = crossbar_pairs(np, p.out_rates[c.from.port], nc, d.in_rates[c.to.port]);
    std::map<std::int64_t, int> fan_out;
    std::map<std::int64_t, int> fan_in;
    for (auto [a, b] : pairs) {
      ++fan_out[a];
      ++fan_in[b];
    }
    for (auto [a, n] : fan_out) {
      if (n > nf) {
        problems.push_back("channel " + app.channel_name(ch) + ": producer endpoint " + std::to_string(a) +
                           " drives " + std::to_string(n) + " consumers, above the fan limit");
        break;
      }
    }
    for (auto [b, n] : fan_in) {
      if (n > nf) {
        problems.push_back("channel " + app.channel_name(ch) + ": consumer endpoint " + std::to_string(b) +
                           " merges " + std::to_string(n) + " producers, above the fan limit");
        break;
      }
    }
  }
  return problems;
}

} // namespace stg
