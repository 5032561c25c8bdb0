#include "stg/throughput.hpp"

#include "stg/replication.hpp"

#include <algorithm>
#include <sstream>

namespace stg {

PortRates node_port_rates(const Implementation &impl, const CompositeNode &node) {
  PortRates out;
  for (int in : node.in_rates) {
    if (in <= 0) {
      throw StructuralError("node '" + node.id + "' has a non-positive input rate");
    }
    out.v_in.emplace_back(impl.ii, in);
  }
  for (int o : node.out_rates) {
    if (o <= 0) {
      throw StructuralError("node '" + node.id + "' has a non-positive output rate");
    }
    out.v_out.emplace_back(impl.ii, o);
  }
  return out;
}

Rational node_limit(const CompositeNode &node, const Rational &r, std::int64_t ii, std::int64_t nr, bool trees) {
  Rational limit = Rational(ii, nr) * r;
  if (trees) {
    for (int in : node.in_rates) {
      limit = std::max(limit, r * in);
    }
    for (int o : node.out_rates) {
      limit = std::max(limit, r * o);
    }
  }
  return limit;
}

RateReport propagate_rates(const Application &app, const Assignment &assignment) {
  RateReport report;
  auto r = app.rate_factors();
  report.nodes.resize(app.nodes.size());
  report.channels.resize(app.channels.size());
  for (std::size_t c = 0; c < app.channels.size(); ++c) {
    const auto &ch = app.channels[c];
    report.channels[c].channel = c;
    report.channels[c].name = app.channel_name(c);
    report.channels[c].tokens_per_source = r[ch.from.node] * app.nodes[ch.from.node].out_rates[ch.from.port];
  }
  for (auto m : app.topological_order()) {
    const auto &node = app.nodes[m];
    const auto *choice = assignment.choice(node.id);
    if (choice == nullptr) {
      throw StructuralError("assignment has no choice for node '" + node.id + "'");
    }
    if (choice->replicas < 1 || choice->impl.ii < 1) {
      throw StructuralError("node '" + node.id + "' has a non-positive replica count or ii");
    }
    Rational per_firing(choice->impl.ii, choice->replicas);
    auto &nr = report.nodes[m];
    nr.id = node.id;
    nr.r = r[m];
    nr.limit = per_firing * r[m];
    std::optional<Rational> firing;
    for (std::size_t j = 0; j < node.num_in(); ++j) {
      auto c = app.input_channel(m, j);
      if (!c) {
        throw StructuralError("input " + std::to_string(j) + " of '" + node.id + "' is unconnected");
      }
      const auto &from = app.channels[*c].from;
      Rational v = std::max(report.nodes[from.node].v_out[from.port], per_firing / node.in_rates[j]);
      if (assignment.tree(node.id, TreeKind::Fork, j)) {
        v = std::max(v, Rational(1));
        nr.limit = std::max(nr.limit, r[m] * node.in_rates[j]);
      }
      report.channels[*c].provided_v = v;
      Rational f = v * node.in_rates[j];
      firing = firing ? std::min(*firing, f) : f;
    }
    Rational period = firing ? *firing : per_firing;
    for (std::size_t k = 0; k < node.num_out(); ++k) {
      Rational v = period / node.out_rates[k];
      if (assignment.tree(node.id, TreeKind::Join, k)) {
        v = std::max(v, Rational(1));
        nr.limit = std::max(nr.limit, r[m] * node.out_rates[k]);
      }
      nr.v_out.push_back(v);
    }
    report.achieved_v = std::max(report.achieved_v, nr.limit);
  }
  for (auto &ch : report.channels) {
    ch.steady_v = report.achieved_v / ch.tokens_per_source;
  }
  return report;
}

RateReport slack_and_weights(RateReport report, const Rational &v_tgt) {
  if (v_tgt <= 0) {
    throw ParameterError("target inverse throughput must be positive");
  }
  report.target_v = v_tgt;
  for (auto &n : report.nodes) {
    n.weight = n.limit / v_tgt;
  }
  for (auto &ch : report.channels) {
    ch.required_v = v_tgt / ch.tokens_per_source;
    ch.slack = ch.provided_v - ch.required_v;
  }
  return report;
}

std::size_t find_bottleneck(const RateReport &report) {
  if (report.nodes.empty()) {
    throw StructuralError("empty rate report");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < report.nodes.size(); ++i) {
    if (report.nodes[i].weight > report.nodes[best].weight) {
      best = i;
    }
  }
  return best;
}

std::string rate_csv(const RateReport &report) {
  std::ostringstream out;
  out << "channel,required_v,provided_v,slack\n";
  for (const auto &ch : report.channels) {
    out << ch.name << ',' << format_fixed6(ch.required_v) << ',' << format_fixed6(ch.provided_v) << ','
        << format_fixed6(ch.slack) << '\n';
  }
  out << "\nnode,weight,r_m\n";
  for (const auto &n : report.nodes) {
    out << n.id << ',' << format_fixed6(n.weight) << ',' << format_fixed6(n.r) << '\n';
  }
  return out.str();
}

Assignment assemble_assignment(const Application &app, const std::vector<NodeChoice> &choices, int nf) {
  if (choices.size() != app.nodes.size()) {
    throw StructuralError("one choice per node is required");
  }
  Assignment a;
  a.fan_limit = nf;
  a.choices = choices;
  for (std::size_t m = 0; m < app.nodes.size(); ++m) {
    if (choices[m].node != app.nodes[m].id) {
      throw StructuralError("choices are not in declaration order");
    }
    for (auto &t : build_fork_join(app.nodes[m], choices[m].replicas, nf)) {
      a.trees.push_back(std::move(t));
    }
  }
  recompute_areas(a);
  a.achieved_v = propagate_rates(app, a).achieved_v;
  return a;
}

Assignment fastest_assignment(const Application &app, const ImplementationLibrary &library, int nf) {
  std::vector<NodeChoice> choices;
  for (const auto &node : app.nodes) {
    const auto &entries = library.entries(node.id);
    choices.push_back({node.id, entries.front(), 1});
  }
  return assemble_assignment(app, choices, nf);
}

} // namespace stg
