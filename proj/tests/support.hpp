#pragma once

// Small builders shared by the unit tests.

#include "stg/document.hpp"

#include <doctest.h>

#include <string>

namespace stg::test {

inline Document parse_or_fail(const std::string &text) {
  auto r = parse_document(text);
  for (const auto &e : r.errors) {
    FAIL_CHECK(format_error(e));
  }
  REQUIRE(r.ok());
  return *r.value;
}

inline OpNode op(const std::string &id, OpKind kind, std::vector<OpArg> args = {}, int latency = -1) {
  OpNode n;
  n.id = id;
  n.kind = kind;
  n.args = std::move(args);
  n.latency = latency > 0 ? latency : LatencyProfile{}[kind];
  return n;
}

inline OpArg from_op(std::size_t i) {
  OpArg a;
  a.kind = OpArg::Kind::Op;
  a.op = i;
  return a;
}

inline OpArg from_port(std::size_t port, std::size_t token = 0) {
  OpArg a;
  a.kind = OpArg::Kind::Port;
  a.port = port;
  a.token = token;
  return a;
}

inline Implementation impl(const std::string &version, std::int64_t ii, std::int64_t area,
                           const std::string &owner = "") {
  Implementation i;
  i.owner = owner;
  i.version = version;
  i.ii = ii;
  i.area = area;
  i.provenance = Provenance::Library;
  return i;
}

/// Linear chain of library-only nodes n0 -> n1 -> ..., all rates 1.
inline Application unit_chain(std::size_t n) {
  Application app;
  for (std::size_t i = 0; i < n; ++i) {
    CompositeNode node;
    node.id = "n" + std::to_string(i);
    if (i > 0) {
      node.in_rates = {1};
    }
    node.out_rates = {1};
    app.nodes.push_back(node);
    if (i > 0) {
      app.channels.push_back({{i - 1, 0}, {i, 0}});
    }
  }
  return app;
}

} // namespace stg::test
