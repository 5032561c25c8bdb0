#include "support.hpp"

#include "stg/exact.hpp"
#include "stg/fixtures.hpp"
#include "stg/heuristic.hpp"

#include <doctest.h>

#include <set>

#include <fstream>
#include <random>
#include <sstream>

using namespace stg;

namespace {

std::string read(const std::string &path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const char *kMinimal = R"({
  "nodes": [
    {"id": "a", "out_rates": [1]},
    {"id": "b", "in_rates": [1]}
  ],
  "channels": [{"from": "a", "to": "b"}],
  "library": {
    "a": [{"version": "v1", "ii": 1, "area": 1}],
    "b": [{"version": "v1", "ii": 1, "area": 1}]
  }
})";

std::vector<Assignment> sample_assignments(const Fixture &f) {
  std::vector<Assignment> out;
  for (int v : {1, 2, 8}) {
    out.push_back(solve_min_area(f.document.app, f.library, Rational(v)));
    OptimizationTarget t;
    t.mode = MinArea{Rational(v)};
    out.push_back(optimize_heuristic(f.document.app, f.library, t).assignment);
  }
  return out;
}

} // namespace

TEST_SUITE("document") {
  TEST_CASE("minimal document") {
    auto doc = test::parse_or_fail(kMinimal);
    CHECK(doc.app.nodes.size() == 2);
    CHECK(doc.app.channels.size() == 1);
  }

  TEST_CASE("JPEG document shape and library sizes") {
    auto doc = test::parse_or_fail(read(fixture_directory() + "/jpeg.json"));
    CHECK(doc.app.nodes.size() == 4);
    CHECK(doc.app.channels.size() == 3);
    CHECK(doc.library.entries("CC").size() == 4);
    CHECK(doc.library.entries("DCT").size() == 5);
    CHECK(doc.library.entries("Quant").size() == 5);
    CHECK(doc.library.entries("Enc").size() == 1);
  }

  TEST_CASE("unknown node in a channel is one unknown-reference error at its span") {
    std::string text = R"({
  "nodes": [
    {"id": "cc", "out_rates": [1]},
    {"id": "dct", "in_rates": [1]}
  ],
  "channels": [{"from": "cc", "to": "dctt"}],
  "library": {
    "cc": [{"version": "v1", "ii": 1, "area": 1}],
    "dct": [{"version": "v1", "ii": 1, "area": 1}]
  }
})";
    auto r = parse_document(text);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].kind == ParseErrorKind::UnknownReference);
    CHECK(r.errors[0].span.line == 6);
    CHECK(r.errors[0].span.column == 37);
    CHECK(text.substr(r.errors[0].span.offset, 6) == "\"dctt\"");
    CHECK(format_error(r.errors[0], "g.json").starts_with("g.json:6:37: unknown-reference: "));
  }

  TEST_CASE("duplicate node ids") {
    auto r = parse_document(R"({"nodes": [{"id": "a", "out_rates": [1]}, {"id": "a", "out_rates": [1]}],
      "library": {"a": [{"version": "v1", "ii": 1, "area": 1}]}})");
    REQUIRE_FALSE(r.errors.empty());
    CHECK(r.errors[0].kind == ParseErrorKind::DuplicateId);
  }

  TEST_CASE("independent errors are all reported") {
    auto r = parse_document(R"({"nodes": [{"id": "a", "out_rates": [0], "colour": 1}], "channels": [{"from": "x", "to": "y"}]})");
    CHECK(r.errors.size() >= 3);
  }

  TEST_CASE("reserved prefix is rejected for user nodes") {
    auto r = parse_document(R"({"nodes": [{"id": "__fj_a", "out_rates": [1]}],
      "library": {"__fj_a": [{"version": "v1", "ii": 1, "area": 1}]}})");
    CHECK_FALSE(r.ok());
  }

  TEST_CASE("syntax errors carry a position") {
    auto r = parse_document("{\"nodes\": [\n  {\"id\": }\n]}");
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].kind == ParseErrorKind::Syntax);
    CHECK(r.errors[0].span.line == 2);
  }

  TEST_CASE("parsing is deterministic") {
    auto text = read(fixture_directory() + "/nbody.json");
    auto a = test::parse_or_fail(text);
    auto b = test::parse_or_fail(text);
    CHECK(a.app.nodes == b.app.nodes);
    CHECK(a.library == b.library);
  }

  TEST_CASE("assignments round-trip for every fixture") {
    for (const auto &id : fixture_ids()) {
      CAPTURE(id);
      auto f = load_fixture(id);
      for (const auto &asg : sample_assignments(f)) {
        auto text = serialize_assignment(asg);
        auto back = parse_assignment(text);
        for (const auto &e : back.errors) {
          FAIL_CHECK(format_error(e));
        }
        REQUIRE(back.ok());
        CHECK(*back.value == asg);
        CHECK(serialize_assignment(*back.value) == text);
        CHECK(check_assignment(f.document.app, f.library, asg).empty());
      }
    }
  }

  TEST_CASE("trees serialize as structural FORK and JOIN nodes with reserved ids") {
    auto f = load_fixture("jpeg");
    auto asg = solve_min_area(f.document.app, f.library, Rational(1));
    auto root = json::parse(serialize_assignment(asg));
    const auto *structural = root.get("assignment")->get("structural");
    REQUIRE(structural != nullptr);
    REQUIRE_FALSE(structural->array.empty());
    std::set<std::string> kinds;
    for (const auto &s : structural->array) {
      kinds.insert(s.get("kind")->text);
      CHECK(s.get("id")->text.starts_with(kStructuralPrefix));
    }
    CHECK(kinds == std::set<std::string>{"FORK", "JOIN"});
  }

  TEST_CASE("an assignment without nodes is a schema violation") {
    auto r = parse_assignment(R"({"assignment": {"fan_limit": 4, "nodes": [], "structural": [],
      "node_area": 0, "overhead_area": 0, "total_area": 0, "achieved_v": [0, 1]}})");
    REQUIRE_FALSE(r.errors.empty());
    CHECK(r.errors[0].kind == ParseErrorKind::SchemaViolation);
  }

  TEST_CASE("tampered area totals are rejected") {
    auto f = load_fixture("chain3");
    auto text = serialize_assignment(solve_min_area(f.document.app, f.library, Rational(2)));
    auto at = text.find("\"total_area\": ");
    REQUIRE(at != std::string::npos);
    text.insert(at + 14, "1");
    REQUIRE(text.find("\"total_area\": 1") != std::string::npos);
    CHECK_FALSE(parse_assignment(text).ok());
  }

  TEST_CASE("random byte mutations never crash the parser") {
    std::mt19937_64 rng(7);
    std::vector<std::string> seeds;
    for (const auto &id : fixture_ids()) {
      seeds.push_back(read(fixture_directory() + "/" + id + ".json"));
    }
    auto f = load_fixture("jpeg");
    seeds.push_back(serialize_assignment(solve_min_area(f.document.app, f.library, Rational(4))));
    const std::string alphabet = "{}[]\",:0123456789-.abcxyz_$ \n\t\\e+";
    for (int round = 0; round < 3000; ++round) {
      auto text = seeds[rng() % seeds.size()];
      int edits = 1 + static_cast<int>(rng() % 4);
      for (int e = 0; e < edits && !text.empty(); ++e) {
        auto pos = rng() % text.size();
        switch (rng() % 3) {
        case 0:
          text[pos] = alphabet[rng() % alphabet.size()];
          break;
        case 1:
          text.erase(pos, 1 + rng() % 8);
          break;
        default:
          text.insert(pos, 1, alphabet[rng() % alphabet.size()]);
        }
      }
      CHECK_NOTHROW(parse_document(text));
      CHECK_NOTHROW(parse_assignment(text));
    }
  }
}
