#include "oracles.hpp"
#include "support.hpp"

#include "stg/fixtures.hpp"
#include "stg/intra_node.hpp"
#include "stg/simulator.hpp"

#include <doctest.h>

#include <random>

using namespace stg;
using test::from_op;
using test::from_port;
using test::op;

namespace {

const OpGraph &nbody_graph() {
  static const Fixture f = load_fixture("nbody");
  return *f.document.app.nodes[f.document.app.index_of("force")].graph;
}

OpGraph random_graph(std::mt19937_64 &rng, std::size_t n) {
  const OpKind kinds[] = {OpKind::Add, OpKind::Sub, OpKind::Mul, OpKind::Div, OpKind::Sqrt, OpKind::Const};
  OpGraph g;
  for (std::size_t i = 0; i < n; ++i) {
    OpKind k = kinds[rng() % 6];
    auto arity = *fixed_arity(k);
    std::vector<OpArg> args;
    for (std::size_t a = 0; a < arity; ++a) {
      args.push_back(i > 0 && rng() % 3 != 0 ? from_op(rng() % i) : from_port(0));
    }
    g.ops.push_back(op("o" + std::to_string(i), k, args));
  }
  g.outputs = {n - 1};
  return g;
}

} // namespace

TEST_SUITE("intra_node") {
  TEST_CASE("N-body pipeline runs at the divider's latency") {
    auto p = pipeline_impl(nbody_graph());
    CHECK(p.ii == 8);
    CHECK(p.area == 16);
    CHECK(p.provenance == Provenance::Pipelined);
  }

  TEST_CASE("N-body op inventory is calibrated to 33 cycles") {
    CHECK(nbody_graph().total_latency() == 33);
    CHECK(nbody_graph().max_latency() == 8);
  }

  TEST_CASE("single ADD") {
    OpGraph g;
    g.ops = {op("a", OpKind::Add, {from_port(0), from_port(0)})};
    g.outputs = {0};
    auto p = pipeline_impl(g);
    CHECK(p.area == 1);
    CHECK(p.ii == 1);
    CHECK(enumerate_implementations(g).size() == 1);
  }

  TEST_CASE("two chained MULs form a two-stage pipeline") {
    OpGraph g;
    g.ops = {op("a", OpKind::Mul, {from_port(0), from_port(0)}), op("b", OpKind::Mul, {from_op(0), from_port(0)})};
    g.outputs = {1};
    auto p = pipeline_impl(g);
    CHECK(p.area == 2);
    CHECK(p.ii == 2);
    CHECK(measure_implementation(g, p) == doctest::Approx(2).epsilon(0.05));
  }

  TEST_CASE("expanding N-body to ii 1 replicates the divider eight times") {
    const auto &g = nbody_graph();
    auto reps = expansion_replicas(g, 1);
    for (std::size_t i = 0; i < g.ops.size(); ++i) {
      CHECK(reps[i] == g.ops[i].latency);
      if (g.ops[i].kind == OpKind::Div) {
        CHECK(reps[i] == 8);
      }
    }
    auto e = expand_impl(g, 1);
    CHECK(e.ii == 1);
    CHECK(measure_implementation(g, e) == doctest::Approx(1).epsilon(0.05));
  }

  TEST_CASE("expanding to the pipeline ii replicates nothing") {
    const auto &g = nbody_graph();
    for (auto r : expansion_replicas(g, 8)) {
      CHECK(r == 1);
    }
    auto e = expand_impl(g, 8);
    auto p = pipeline_impl(g);
    CHECK(e.ii == p.ii);
    CHECK(e.area == p.area);
  }

  TEST_CASE("expanding N-body to ii 2") {
    const auto &g = nbody_graph();
    auto reps = expansion_replicas(g, 2);
    std::int64_t extra = 0;
    for (std::size_t i = 0; i < g.ops.size(); ++i) {
      if (g.ops[i].kind == OpKind::Div) {
        CHECK(reps[i] == 4);
      }
      extra += reps[i] - 1;
    }
    // DIV gains three copies and SQRT (latency 4) one more
    CHECK(extra == 4);
    auto e = expand_impl(g, 2);
    CHECK(e.ii == 2);
    CHECK(e.area == pipeline_impl(g).area + 4);
    CHECK(measure_implementation(g, e) == doctest::Approx(2).epsilon(0.05));
  }

  TEST_CASE("expansion target below 1 or above the largest latency") {
    CHECK_THROWS_AS(expand_impl(nbody_graph(), 0), ParameterError);
    CHECK_THROWS_AS(expand_impl(nbody_graph(), 9), ParameterError);
  }

  TEST_CASE("one cluster runs every op in sequence") {
    auto c = cluster_impl(nbody_graph(), 1);
    CHECK(c.ii == 33);
    CHECK(c.area == 1);
    CHECK(measure_implementation(nbody_graph(), c) == doctest::Approx(33).epsilon(0.05));
  }

  TEST_CASE("one cluster per op equals the pipeline") {
    const auto &g = nbody_graph();
    auto c = cluster_impl(g, g.ops.size());
    auto p = pipeline_impl(g);
    CHECK(c.ii == p.ii);
    CHECK(c.area == p.area);
  }

  TEST_CASE("cluster count out of range") {
    CHECK_THROWS_AS(cluster_impl(nbody_graph(), 0), ParameterError);
    CHECK_THROWS_AS(cluster_impl(nbody_graph(), 17), ParameterError);
  }

  TEST_CASE("k-cluster ii matches exhaustive partition enumeration") {
    const auto &g = nbody_graph();
    std::vector<std::int64_t> w;
    for (auto i : g.canonical_order()) {
      w.push_back(g.ops[i].latency);
    }
    for (std::size_t k = 1; k <= 6; ++k) {
      CAPTURE(k);
      CHECK(cluster_impl(g, k).ii == oracle::min_max_partition(w, k));
    }
  }

  TEST_CASE("linear partition DP is optimal on random weights") {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 200; ++round) {
      std::size_t n = 1 + rng() % 9;
      std::vector<std::int64_t> w(n);
      for (auto &x : w) {
        x = 1 + static_cast<std::int64_t>(rng() % 9);
      }
      std::size_t k = 1 + rng() % n;
      auto sizes = linear_partition(w, k);
      REQUIRE(sizes.size() == k);
      CHECK(oracle::max_slice(w, sizes) == oracle::min_max_partition(w, k));
    }
  }

  TEST_CASE("N-body Pareto set endpoints") {
    auto set = enumerate_implementations(nbody_graph());
    REQUIRE_FALSE(set.empty());
    CHECK(set.front().ii == 1);
    CHECK(set.back().ii == 33);
    CHECK(set.back().area == 1);
    std::int64_t max_area = 0;
    for (const auto &e : set) {
      max_area = std::max(max_area, e.area);
    }
    CHECK(set.front().area == max_area);
    // the pipelined point (8, 16) is dominated by a five-PE clustering at ii 8
    auto at8 = std::find_if(set.begin(), set.end(), [](const Implementation &e) { return e.ii == 8; });
    REQUIRE(at8 != set.end());
    CHECK(at8->area <= 16);
  }

  TEST_CASE("Pareto curves are strictly monotone and match exhaustive enumeration") {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 60; ++round) {
      auto g = random_graph(rng, 1 + rng() % 8);
      auto set = enumerate_implementations(g);
      for (std::size_t i = 1; i < set.size(); ++i) {
        CHECK(set[i].ii > set[i - 1].ii);
        CHECK(set[i].area < set[i - 1].area);
      }
      std::set<std::pair<std::int64_t, std::int64_t>> got;
      for (const auto &e : set) {
        got.emplace(e.ii, e.area);
      }
      CHECK(got == oracle::pareto_front(g, g.canonical_order(), 4));
    }
  }

  TEST_CASE("empty graph is a structural error") {
    OpGraph g;
    CHECK_THROWS_AS(pipeline_impl(g), StructuralError);
  }
}
