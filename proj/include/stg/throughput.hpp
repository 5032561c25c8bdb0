#pragma once

#include "stg/model.hpp"

namespace stg {

struct PortRates {
  std::vector<Rational> v_in;   // ii / In^j
  std::vector<Rational> v_out;  // ii / Out^k
};

PortRates node_port_rates(const Implementation &impl, const CompositeNode &node);

/// Cycles per primary-source firing that node m can sustain with nr replicas of
/// an ii-cycle implementation: ii / nr * r_m, and no faster than one token per
/// cycle through a tree root when the ports are served by trees.
Rational node_limit(const CompositeNode &node, const Rational &r, std::int64_t ii, std::int64_t nr, bool trees);

struct ChannelRate {
  std::size_t channel = 0;
  std::string name;
  Rational provided_v;  // max(producer v_out, consumer input capability)
  Rational required_v;  // demanded by the target at the primary source
  Rational slack;       // provided_v - required_v
  Rational steady_v;    // steady-state prediction under backpressure
  Rational tokens_per_source;  // r_producer * Out
};

struct NodeRate {
  std::string id;
  Rational r;       // firings per primary-source firing
  Rational limit;   // node_limit
  Rational weight;  // how many times too slow for the target
  std::vector<Rational> v_out;
};

struct RateReport {
  std::vector<ChannelRate> channels;
  std::vector<NodeRate> nodes;
  Rational achieved_v;   // cycles per primary-source firing
  Rational target_v{0};  // set by slack_and_weights
};

/// Forward pass in topological order. Throws StructuralError when the
/// assignment lacks a node.
RateReport propagate_rates(const Application &app, const Assignment &assignment);

/// Fills required_v, slack and weight for the target inverse throughput.
RateReport slack_and_weights(RateReport report, const Rational &v_tgt);

/// Index of the maximum-weight node, first in declaration order on ties.
std::size_t find_bottleneck(const RateReport &report);

/// "channel,required_v,provided_v,slack" rows, a blank line, then
/// "node,weight,r_m" rows; six decimals.
std::string rate_csv(const RateReport &report);

/// Builds a complete assignment from per-node (implementation, replicas)
/// choices in declaration order: trees, areas and achieved_v.
Assignment assemble_assignment(const Application &app, const std::vector<NodeChoice> &choices, int nf);

/// Fastest library entry for every node, one replica each.
Assignment fastest_assignment(const Application &app, const ImplementationLibrary &library, int nf);

} // namespace stg
