#include "oracles.hpp"
#include "random_instances.hpp"
#include "support.hpp"

#include "stg/exact.hpp"
#include "stg/fixtures.hpp"
#include "stg/throughput.hpp"

#include <doctest.h>

using namespace stg;
using test::impl;

namespace {

std::vector<std::string> versions(const Assignment &a) {
  std::vector<std::string> out;
  for (const auto &c : a.choices) {
    out.push_back(c.impl.version);
  }
  return out;
}

} // namespace

TEST_SUITE("exact") {
  TEST_CASE("JPEG selections at v 1, 2, 4 and 8") {
    auto f = load_fixture("jpeg");
    struct Row {
      int v;
      const char *version;
      std::int64_t subtotal;
    };
    for (auto row : {Row{1, "v1", 13088}, Row{2, "v2", 6544}, Row{4, "v3", 3296}, Row{8, "v4", 1696}}) {
      CAPTURE(row.v);
      auto a = solve_min_area(f.document.app, f.library, Rational(row.v));
      CHECK(versions(a) == std::vector<std::string>{row.version, row.version, row.version, "v1"});
      CHECK(a.choices[3].replicas == 512 / row.v);
      CHECK(a.node_area == row.subtotal);
      CHECK(a.achieved_v <= row.v);
      CHECK(a.total_area == a.node_area + a.overhead_area);
    }
  }

  TEST_CASE("dominant slow entry on a single node") {
    auto app = test::unit_chain(1);
    ImplementationLibrary lib;
    lib.set("n0", {impl("fast", 4, 10, "n0"), impl("slow", 8, 3, "n0")});
    auto a = solve_min_area(app, lib, Rational(8));
    CHECK(a.choices[0].impl.version == "slow");
    CHECK(a.choices[0].replicas == 1);
    CHECK(a.total_area == 3);
  }

  TEST_CASE("very loose target picks the slowest points without replication") {
    auto f = load_fixture("jpeg");
    auto a = solve_min_area(f.document.app, f.library, Rational(1000000));
    CHECK(versions(a) == std::vector<std::string>{"v4", "v5", "v5", "v1"});
    for (const auto &c : a.choices) {
      CHECK(c.replicas == 1);
    }
    CHECK(a.total_area == 140);
  }

  TEST_CASE("branch and bound equals exhaustive enumeration on random instances") {
    std::mt19937_64 rng(2024);
    for (int round = 0; round < 200; ++round) {
      auto inst = test::random_instance(rng);
      CAPTURE(round);
      auto expected = oracle::min_area(inst.app, inst.library, inst.target, 4);
      if (!expected) {
        CHECK_THROWS_AS(solve_min_area(inst.app, inst.library, inst.target), InfeasibleError);
        continue;
      }
      auto a = solve_min_area(inst.app, inst.library, inst.target);
      CHECK(a.total_area == expected->area);
      CHECK(a.achieved_v <= inst.target);
      CHECK(propagate_rates(inst.app, a).achieved_v == a.achieved_v);
    }
  }

  TEST_CASE("branch and bound equals exhaustive enumeration on small fixtures") {
    for (const auto &id : fixture_ids()) {
      auto f = load_fixture(id);
      bool small = f.document.app.nodes.size() <= 4;
      for (const auto &[node, entries] : f.library.all()) {
        small = small && entries.size() <= 5;
      }
      if (!small) {
        continue;
      }
      for (int v : {1, 2, 4, 8}) {
        CAPTURE(id);
        CAPTURE(v);
        auto expected = oracle::min_area(f.document.app, f.library, Rational(v), 4);
        REQUIRE(expected);
        CHECK(solve_min_area(f.document.app, f.library, Rational(v)).total_area == expected->area);
      }
    }
  }

  TEST_CASE("search statistics are reported") {
    auto f = load_fixture("jpeg");
    SearchStats stats;
    solve_min_area(f.document.app, f.library, Rational(2), 4, &stats);
    CHECK(stats.visited > 0);
  }

  TEST_CASE("max-throughput mode") {
    auto f = load_fixture("jpeg");
    const auto &app = f.document.app;
    CHECK(solve_max_throughput(app, f.library, 1000000).achieved_v == 1);
    for (int v : {1, 2, 4, 8}) {
      auto budget = solve_min_area(app, f.library, Rational(v)).total_area;
      auto a = solve_max_throughput(app, f.library, budget);
      CHECK(a.achieved_v <= v);
      CHECK(a.total_area <= budget);
    }
    CHECK_THROWS_AS(solve_max_throughput(app, f.library, 100), InfeasibleError);
    CHECK(solve_max_throughput(app, f.library, 140).total_area == 140);
  }

  TEST_CASE("LP export declares one binary per entry") {
    auto f = load_fixture("jpeg");
    auto lp = dump_lp(f.document.app, f.library, Rational(2));
    CHECK(lp.starts_with("\\"));
    CHECK(lp.find("Minimize") != std::string::npos);
    CHECK(lp.find("Binary") != std::string::npos);
    CHECK(lp.find("x_3_0") != std::string::npos);
    CHECK(lp.find("End") != std::string::npos);
  }

  TEST_CASE("repeated solves are identical") {
    auto f = load_fixture("jpeg");
    CHECK(solve_min_area(f.document.app, f.library, Rational(3)) ==
          solve_min_area(f.document.app, f.library, Rational(3)));
  }
}
