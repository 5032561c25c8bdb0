#include "stg/fixtures.hpp"

#include "stg/inter_node.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stg {

namespace {

constexpr const char *kExpectationsFile = "expectations.json";

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string string_field(const json::Value &object, std::string_view key) {
  const auto *v = object.get(key);
  if (v == nullptr || v->type != json::Value::Type::String) {
    throw std::runtime_error("expectation is missing string field '" + std::string(key) + "'");
  }
  return v->text;
}

} // namespace

std::string fixture_directory() { return STG_FIXTURE_DIR; }

std::vector<std::string> fixture_ids() {
  std::vector<std::string> ids;
  for (const auto &entry : std::filesystem::directory_iterator(fixture_directory())) {
    if (entry.path().extension() == ".json" && entry.path().filename() != kExpectationsFile) {
      ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

Fixture load_fixture(const std::string &id, int nf) {
  auto ids = fixture_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
    throw std::invalid_argument("unknown fixture '" + id + "'");
  }
  auto path = std::filesystem::path(fixture_directory()) / (id + ".json");
  auto parsed = parse_document(read_file(path));
  if (!parsed.ok()) {
    std::string message = "fixture '" + id + "' does not parse";
    for (const auto &e : parsed.errors) {
      message += "\n" + format_error(e, path.string());
    }
    throw std::runtime_error(message);
  }
  Fixture f;
  f.id = id;
  f.document = std::move(*parsed.value);
  f.library = build_library(f.document.app, f.document.library, nf);
  for (auto &e : load_expectations()) {
    if (e.fixture == id) {
      f.expectations.push_back(std::move(e));
    }
  }
  return f;
}

std::vector<FixtureExpectation> load_expectations() {
  auto root = json::parse(read_file(std::filesystem::path(fixture_directory()) / kExpectationsFile));
  if (root.type != json::Value::Type::Array) {
    throw std::runtime_error("expectations table must be an array");
  }
  std::vector<FixtureExpectation> out;
  for (const auto &v : root.array) {
    FixtureExpectation e;
    e.fixture = string_field(v, "fixture");
    e.scenario = string_field(v, "scenario");
    e.quantity = string_field(v, "quantity");
    e.provenance = string_field(v, "provenance");
    const auto *value = v.get("value");
    if (value == nullptr) {
      throw std::runtime_error("expectation " + e.fixture + "/" + e.scenario + "/" + e.quantity + " has no value");
    }
    e.value = *value;
    out.push_back(std::move(e));
  }
  return out;
}

const FixtureExpectation *find_expectation(const std::vector<FixtureExpectation> &table, const std::string &fixture,
                                           const std::string &scenario, const std::string &quantity) {
  for (const auto &e : table) {
    if (e.fixture == fixture && e.scenario == scenario && e.quantity == quantity) {
      return &e;
    }
  }
  return nullptr;
}

} // namespace stg
