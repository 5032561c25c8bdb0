#include "oracles.hpp"
#include "support.hpp"

#include "stg/exact.hpp"
#include "stg/fixtures.hpp"
#include "stg/heuristic.hpp"
#include "stg/intra_node.hpp"
#include "stg/simulator.hpp"
#include "stg/throughput.hpp"

#include <doctest.h>

#include <filesystem>

using namespace stg;

namespace {

Assignment replicate(const Application &app, const ImplementationLibrary &lib, const std::string &node,
                     std::int64_t nr, int nf) {
  auto base = identity_assignment(app, lib);
  for (auto &c : base.choices) {
    if (c.node == node) {
      c.replicas = nr;
    }
  }
  return assemble_assignment(app, base.choices, nf);
}

std::vector<Assignment> optimizer_outputs(const Fixture &f, std::vector<int> targets) {
  std::vector<Assignment> out;
  for (int v : targets) {
    out.push_back(solve_min_area(f.document.app, f.library, Rational(v)));
    OptimizationTarget t;
    t.mode = MinArea{Rational(v)};
    out.push_back(optimize_heuristic(f.document.app, f.library, t).assignment);
  }
  return out;
}

} // namespace

TEST_SUITE("simulator") {
  TEST_CASE("unit chain runs at one token per cycle") {
    auto f = load_fixture("chain3");
    auto lib = f.library;
    auto rep = simulate(f.document.app, solve_min_area(f.document.app, lib, Rational(1)));
    REQUIRE_FALSE(rep.deadlock);
    for (const auto &c : rep.channels) {
      CHECK(c.produced == 10000);
      CHECK(c.consumed == 10000);
      CHECK(c.measured_v == doctest::Approx(1).epsilon(0.05));
    }
  }

  TEST_CASE("identity run reproduces the sequential reference streams") {
    for (const char *id : {"chain3", "diamond", "fft", "filterbank", "autocor", "nbody"}) {
      CAPTURE(id);
      auto f = load_fixture(id);
      bool all_graphs = true;
      for (const auto &n : f.document.app.nodes) {
        all_graphs = all_graphs && n.graph.has_value();
      }
      if (!all_graphs) {
        continue;
      }
      SimOptions o;
      o.tokens = 2000;
      auto rep = simulate(f.document.app, identity_assignment(f.document.app, f.library), o);
      auto expected = oracle::reference_streams(f.document.app, 2000);
      REQUIRE(rep.streams.size() == expected.size());
      for (const auto &s : rep.streams) {
        CAPTURE(s.name);
        CHECK(s.values == expected.at(s.name));
      }
    }
  }

  TEST_CASE("N-body pipelined force node sustains v 8") {
    auto f = load_fixture("nbody");
    const auto &app = f.document.app;
    auto p = pipeline_impl(*app.nodes[app.index_of("force")].graph);
    auto asg = assemble_assignment(app, {{"pairs", f.library.entries("pairs").front(), 1}, {"force", p, 1}}, 4);
    auto rep = simulate(app, asg);
    for (const auto &s : rep.streams) {
      CHECK(s.measured_v == doctest::Approx(8).epsilon(0.05));
    }
  }

  TEST_CASE("replicated encoder runs nr times faster and keeps token order") {
    auto f = load_fixture("jpeg");
    const auto &app = f.document.app;
    SimOptions o;
    o.tokens = 4000;
    auto ref = simulate(app, identity_assignment(app, f.library), o);
    for (int nf : {2, 4}) {
      auto asg = replicate(app, f.library, "Enc", 4, nf);
      CHECK((nf == 2) == (asg.tree("Enc", TreeKind::Join, 0) != nullptr));
      auto rep = simulate(app, asg, o);
      CHECK(rep.streams[0].measured_v == doctest::Approx(128).epsilon(0.05));
      CHECK(check_equivalence(ref, rep).equal);
    }
  }

  TEST_CASE("replication law on every fixture") {
    for (const auto &id : fixture_ids()) {
      auto f = load_fixture(id);
      const auto &app = f.document.app;
      auto r = app.rate_factors();
      SimOptions o;
      o.tokens = 3000;
      o.capacity = 64;
      auto ref = simulate(app, identity_assignment(app, f.library), o);
      for (std::size_t m = 0; m < app.nodes.size(); ++m) {
        const auto &node = app.nodes[m];
        if (!node.stateless || node.num_in() == 0) {
          continue;
        }
        // slow the node down so that it alone sets the pace
        auto slowest = f.library.entries(node.id).back();
        for (std::int64_t nr : {2, 4, 8}) {
          CAPTURE(id);
          CAPTURE(node.id);
          CAPTURE(nr);
          auto base = identity_assignment(app, f.library);
          base.choices[m].impl = slowest;
          base.choices[m].replicas = nr;
          auto asg = assemble_assignment(app, base.choices, 4);
          auto rep = simulate(app, asg, o);
          REQUIRE_FALSE(rep.deadlock);
          CHECK(check_equivalence(ref, rep).equal);
          auto predicted = propagate_rates(app, asg);
          auto ch = *app.input_channel(m, 0);
          double want = boost::rational_cast<double>(predicted.channels[ch].steady_v);
          if (Rational(slowest.ii, nr) * r[m] == predicted.achieved_v) {
            // the replicated node is the pace setter: v_node / nr
            CHECK(want == doctest::Approx(boost::rational_cast<double>(Rational(slowest.ii, nr) /
                                                                        node.in_rates[0])));
          }
          CHECK(rep.channels[ch].measured_v == doctest::Approx(want).epsilon(0.05));
        }
      }
    }
  }

  TEST_CASE("equivalence of identical runs and of the JPEG heuristic plan") {
    auto f = load_fixture("jpeg");
    const auto &app = f.document.app;
    auto ref = simulate(app, identity_assignment(app, f.library));
    CHECK(check_equivalence(ref, ref).equal);
    OptimizationTarget t;
    t.mode = MinArea{Rational(2)};
    auto rep = simulate(app, optimize_heuristic(app, f.library, t).assignment);
    auto eq = check_equivalence(ref, rep);
    CHECK(eq.equal);
    CHECK_FALSE(eq.first_divergence);
  }

  TEST_CASE("a mis-ordered join diverges at the first token") {
    auto f = load_fixture("jpeg");
    const auto &app = f.document.app;
    SimOptions o;
    o.tokens = 1000;
    auto ref = simulate(app, identity_assignment(app, f.library), o);
    for (std::int64_t nr : {4, 16}) {
      CAPTURE(nr);
      auto asg = replicate(app, f.library, "Enc", nr, 4);
      auto ok = simulate(app, asg, o);
      CHECK(check_equivalence(ref, ok).equal);
      o.swap_join_leaves = "Enc";
      auto bad = simulate(app, asg, o);
      o.swap_join_leaves.reset();
      REQUIRE_FALSE(bad.deadlock);
      auto eq = check_equivalence(ref, bad);
      CHECK_FALSE(eq.equal);
      CHECK(eq.stream == "Enc.0");
      // replicas 0 and 1 trade places, so the very first token is already replica 1's
      REQUIRE(eq.first_divergence);
      CHECK(*eq.first_divergence == 0);
      CHECK(bad.streams[0].values[0] == ref.streams[0].values[1]);
      CHECK(bad.streams[0].values[1] == ref.streams[0].values[0]);
    }
  }

  TEST_CASE("streams do not depend on FIFO depth or visiting order") {
    for (const auto &id : fixture_ids()) {
      auto f = load_fixture(id);
      for (const auto &asg : optimizer_outputs(f, {1, 4})) {
        CAPTURE(id);
        SimOptions o;
        o.tokens = 1500;
        auto ref = simulate(f.document.app, asg, o);
        REQUIRE_FALSE(ref.deadlock);
        for (int capacity : {1, 2, 64}) {
          for (std::uint64_t seed : {0ULL, 1ULL, 77ULL}) {
            o.capacity = capacity;
            o.seed = seed;
            auto rep = simulate(f.document.app, asg, o);
            CHECK_FALSE(rep.deadlock);
            CHECK(check_equivalence(ref, rep).equal);
          }
        }
      }
    }
  }

  TEST_CASE("cycle budget exhaustion is reported as deadlock") {
    auto f = load_fixture("jpeg");
    SimOptions o;
    o.max_cycles = 100;
    CHECK(simulate(f.document.app, identity_assignment(f.document.app, f.library), o).deadlock);
  }

  TEST_CASE("report CSV and stream dumps") {
    auto f = load_fixture("chain3");
    SimOptions o;
    o.tokens = 100;
    auto rep = simulate(f.document.app, identity_assignment(f.document.app, f.library), o);
    auto csv = report_csv(rep);
    CHECK(csv.starts_with("kind,name,produced,consumed,occupancy,measured_v\nchannel,src.0->scale.0,100,100,0,"));
    CHECK(csv.find("summary,deadlock,0") != std::string::npos);
    auto dir = std::filesystem::temp_directory_path() / "stg_dump_test";
    std::filesystem::remove_all(dir);
    auto files = write_stream_dumps(rep, dir.string());
    REQUIRE(files.size() == 1);
    CHECK(std::filesystem::file_size(files[0]) == 100 * 8);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("invalid options") {
    auto f = load_fixture("chain3");
    SimOptions o;
    o.capacity = 0;
    CHECK_THROWS_AS(simulate(f.document.app, identity_assignment(f.document.app, f.library), o), ParameterError);
  }
}
