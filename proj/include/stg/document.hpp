#pragma once

#include "stg/json.hpp"
#include "stg/model.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stg {

using SourceSpan = json::Span;

enum class ParseErrorKind { Syntax, UnknownReference, DuplicateId, SchemaViolation };
std::string_view to_string(ParseErrorKind kind);

struct ParseError {
  SourceSpan span;
  ParseErrorKind kind = ParseErrorKind::Syntax;
  std::string message;
};

/// "file:line:column: kind: message"
std::string format_error(const ParseError &error, std::string_view filename = "<input>");

struct ParseOptions {
  bool strict = true;  // reject unknown keys
};

template <typename T> struct ParseResult {
  std::optional<T> value;
  std::vector<ParseError> errors;
  bool ok() const { return value.has_value() && errors.empty(); }
};

/// A parsed graph description: the application, any user-supplied
/// implementation entries, and the latency profile its ops were resolved with.
struct Document {
  Application app;
  ImplementationLibrary library;
  LatencyProfile profile;
};

/// Parses and validates a graph description. Independent errors are collected
/// rather than stopping at the first one.
ParseResult<Document> parse_document(std::string_view text, const ParseOptions &options = {});

/// Canonical assignment document. parse_assignment(serialize_assignment(a)) == a
/// and re-serializing is byte-identical.
std::string serialize_assignment(const Assignment &assignment);
ParseResult<Assignment> parse_assignment(std::string_view text, const ParseOptions &options = {});

/// Library export in the document's "library" schema, keyed in application order.
std::string serialize_library(const Application &app, const ImplementationLibrary &library);

/// Checks that an assignment fits an application and library: every node has
/// exactly one choice, versions exist, replicated nodes are stateless and trees
/// are attached to real ports. Returns human-readable problems.
std::vector<std::string> check_assignment(const Application &app, const ImplementationLibrary &library,
                                          const Assignment &assignment);

} // namespace stg
