#include "oracles.hpp"
#include "support.hpp"

#include "stg/fixtures.hpp"
#include "stg/inter_node.hpp"
#include "stg/intra_node.hpp"

#include <doctest.h>

#include <random>

using namespace stg;
using test::from_op;
using test::from_port;
using test::op;

TEST_SUITE("inter_node") {
  TEST_CASE("moving an op across the boundary lowers the larger load") {
    auto sizes = rebalance_sizes({8, 2, 2}, {2, 1});
    CHECK(sizes == std::vector<std::size_t>{1, 2});
    CHECK(oracle::max_slice({8, 2, 2}, sizes) == 8);
    CHECK(oracle::min_max_partition({8, 2, 2}, 2) == 8);
  }

  TEST_CASE("a balanced partition is a fixpoint") {
    CHECK(rebalance_sizes({3, 3, 3, 3}, {2, 2}) == std::vector<std::size_t>{2, 2});
  }

  TEST_CASE("rebalancing an op-graph partition") {
    OpGraph g;
    g.ops = {op("a", OpKind::Div, {from_port(0), from_port(0)}), op("b", OpKind::Mul, {from_op(0), from_op(0)}),
             op("c", OpKind::Mul, {from_op(1), from_op(1)})};
    g.outputs = {2};
    auto start = make_partition(g, {2, 1});
    CHECK(start.loads == std::vector<std::int64_t>{10, 2});
    auto after = rebalance(start, g);
    CHECK(after.loads == std::vector<std::int64_t>{8, 4});
    CHECK(after.max_load() == 8);
  }

  TEST_CASE("rebalancing never worsens and reaches the three-cluster optimum on N-body") {
    auto f = load_fixture("nbody");
    const auto &g = *f.document.app.nodes[f.document.app.index_of("force")].graph;
    std::vector<std::int64_t> w;
    for (auto i : g.canonical_order()) {
      w.push_back(g.ops[i].latency);
    }
    auto best = oracle::min_max_partition(w, 3);
    oracle::for_each_composition(w.size(), 3, [&](const std::vector<std::size_t> &sizes) {
      auto p = make_partition(g, sizes);
      auto q = rebalance(p, g);
      CHECK(q.max_load() <= p.max_load());
      CHECK(q.max_load() == best);
    });
  }

  TEST_CASE("supplied JPEG library passes through unchanged") {
    auto f = load_fixture("jpeg");
    CHECK(f.library == f.document.library);
    CHECK(f.library.entries("CC").size() == 4);
    CHECK(f.library.entries("DCT").size() == 5);
    CHECK(f.library.entries("Quant").size() == 5);
    CHECK(f.library.entries("Enc").size() == 1);
  }

  TEST_CASE("single-op node gets a one-entry library") {
    auto doc = test::parse_or_fail(R"({"nodes": [{"id": "a", "out_rates": [1],
      "ops": [{"id": "x", "kind": "ADD", "args": ["$iter", "$iter"]}], "outputs": ["x"]}]})");
    auto lib = build_library(doc.app, doc.library);
    CHECK(lib.entries("a").size() == 1);
  }

  TEST_CASE("generated libraries match the exhaustive Pareto front") {
    std::mt19937_64 rng(3);
    const OpKind kinds[] = {OpKind::Add, OpKind::Mul, OpKind::Div, OpKind::Sqrt, OpKind::Sub};
    for (int round = 0; round < 40; ++round) {
      std::size_t n = 1 + rng() % 8;
      Application app;
      CompositeNode node;
      node.id = "k";
      node.in_rates = {1};
      node.out_rates = {1};
      OpGraph g;
      for (std::size_t i = 0; i < n; ++i) {
        auto k = kinds[rng() % 5];
        std::vector<OpArg> args;
        for (std::size_t a = 0; a < *fixed_arity(k); ++a) {
          args.push_back(i > 0 && rng() % 2 ? from_op(rng() % i) : from_port(0));
        }
        g.ops.push_back(op("o" + std::to_string(i), k, args));
      }
      g.outputs = {n - 1};
      node.graph = g;
      CompositeNode src;
      src.id = "s";
      src.out_rates = {1};
      app.nodes = {src, node};
      app.channels = {{{0, 0}, {1, 0}}};
      ImplementationLibrary supplied;
      supplied.set("s", {test::impl("v1", 1, 1, "s")});
      auto lib = build_library(app, supplied);
      std::set<std::pair<std::int64_t, std::int64_t>> got;
      for (const auto &e : lib.entries("k")) {
        got.emplace(e.ii, e.area);
      }
      CHECK(got == oracle::pareto_front(g, g.canonical_order(), 4));
    }
  }

  TEST_CASE("a node with neither ops nor entries is a structural error") {
    auto app = test::unit_chain(2);
    ImplementationLibrary lib;
    lib.set("n0", {test::impl("v1", 1, 1, "n0")});
    CHECK_THROWS_AS(build_library(app, lib), StructuralError);
  }

  TEST_CASE("library CSV layout") {
    auto f = load_fixture("jpeg");
    auto csv = library_csv(f.document.app, f.library);
    CHECK(csv.starts_with("version_tag,ii,area,provenance\n# CC\nv1,1,512,library\n"));
    CHECK(csv.find("# Enc\nv1,512,22,library\n") != std::string::npos);
  }
}
