#pragma once

// Randomized small optimization instances: chains of up to four nodes with
// mixed port rates and up to five library entries per node.

#include "stg/model.hpp"

#include <random>

namespace stg::test {

struct Instance {
  Application app;
  ImplementationLibrary library;
  Rational target;
};

inline Instance random_instance(std::mt19937_64 &rng) {
  Instance inst;
  std::size_t n = 1 + rng() % 4;
  for (std::size_t i = 0; i < n; ++i) {
    CompositeNode node;
    node.id = "k" + std::to_string(i);
    if (i > 0) {
      node.in_rates = {1 + static_cast<int>(rng() % 2)};
    }
    node.out_rates = {1 + static_cast<int>(rng() % 2)};
    node.stateless = rng() % 6 != 0;
    inst.app.nodes.push_back(node);
    if (i > 0) {
      inst.app.channels.push_back({{i - 1, 0}, {i, 0}});
    }
    std::vector<Implementation> entries;
    std::size_t count = 1 + rng() % 5;
    for (std::size_t e = 0; e < count; ++e) {
      Implementation impl;
      impl.owner = node.id;
      impl.version = "v" + std::to_string(e + 1);
      impl.ii = 1 + static_cast<std::int64_t>(rng() % 64);
      impl.area = 1 + static_cast<std::int64_t>(rng() % 500);
      entries.push_back(impl);
    }
    entries = pareto_clean(entries);
    for (std::size_t e = 0; e < entries.size(); ++e) {
      entries[e].version = "v" + std::to_string(e + 1);
    }
    inst.library.set(node.id, entries);
  }
  inst.target = Rational(1 + static_cast<std::int64_t>(rng() % 8));
  return inst;
}

} // namespace stg::test
