#pragma once

#include "stg/document.hpp"

#include <string>
#include <vector>

namespace stg {

/// One ground-truth value from fixtures/expectations.json.
struct FixtureExpectation {
  std::string fixture;
  std::string scenario;
  std::string quantity;
  json::Value value;
  std::string provenance;  // published, derived or trivial
};

struct Fixture {
  std::string id;
  Document document;
  ImplementationLibrary library;  // supplied entries completed by the intra/inter-node optimizers
  std::vector<FixtureExpectation> expectations;
};

/// Directory holding the shipped fixture documents.
std::string fixture_directory();

/// Ids of every shipped fixture, sorted.
std::vector<std::string> fixture_ids();

/// Throws std::invalid_argument for an unknown id and std::runtime_error when
/// the document fails to parse.
Fixture load_fixture(const std::string &id, int nf = 4);

std::vector<FixtureExpectation> load_expectations();

/// Nullptr when absent.
const FixtureExpectation *find_expectation(const std::vector<FixtureExpectation> &table, const std::string &fixture,
                                           const std::string &scenario, const std::string &quantity);

} // namespace stg
