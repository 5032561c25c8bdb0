#include "stg/cli.hpp"

#include "stg/document.hpp"
#include "stg/exact.hpp"
#include "stg/heuristic.hpp"
#include "stg/inter_node.hpp"
#include "stg/simulator.hpp"
#include "stg/throughput.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace stg {

namespace {

struct ParseFailure {};

std::string read_text(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read " + path);
  }
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::string &path, const std::string &text, std::ostream &out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("cannot write " + path);
  }
  f << text;
}

Document load(const std::string &path, std::ostream &err) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const std::runtime_error &e) {
    err << e.what() << "\n";
    throw ParseFailure{};
  }
  auto parsed = parse_document(text);
  if (!parsed.ok()) {
    for (const auto &e : parsed.errors) {
      err << format_error(e, path) << "\n";
    }
    throw ParseFailure{};
  }
  return std::move(*parsed.value);
}

Assignment load_assignment(const std::string &path, const Application &app, const ImplementationLibrary &library,
                           std::ostream &err) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const std::runtime_error &e) {
    err << e.what() << "\n";
    throw ParseFailure{};
  }
  auto parsed = parse_assignment(text);
  if (!parsed.ok()) {
    for (const auto &e : parsed.errors) {
      err << format_error(e, path) << "\n";
    }
    throw ParseFailure{};
  }
  auto problems = check_assignment(app, library, *parsed.value);
  if (!problems.empty()) {
    for (const auto &p : problems) {
      err << path << ": " << p << "\n";
    }
    throw ParseFailure{};
  }
  return std::move(*parsed.value);
}

Rational parse_v(const std::string &text, std::ostream &err) {
  try {
    auto v = parse_rational(text);
    if (v > 0) {
      return v;
    }
  } catch (const std::invalid_argument &) {
  }
  err << "invalid inverse throughput '" << text << "'\n";
  throw ParseFailure{};
}

std::string assignment_report(const Assignment &a) {
  std::ostringstream s;
  s << "node,version,ii,area,replicas\n";
  for (const auto &c : a.choices) {
    s << c.node << "," << c.impl.version << "," << c.impl.ii << "," << c.impl.area << "," << c.replicas << "\n";
  }
  s << "node_area " << a.node_area << "\n";
  s << "overhead_area " << a.overhead_area << "\n";
  s << "total_area " << a.total_area << "\n";
  s << "achieved_v " << format_fixed6(a.achieved_v) << "\n";
  return s.str();
}

} // namespace

namespace {

struct Common {
  std::string file;
  int nf = 4;
  std::string out;
};

int cmd_analyze(const Common &o, const std::string &target, std::ostream &out, std::ostream &err) {
  auto doc = load(o.file, err);
  auto library = build_library(doc.app, doc.library, o.nf);
  auto v = parse_v(target, err);
  auto report = slack_and_weights(propagate_rates(doc.app, fastest_assignment(doc.app, library, o.nf)), v);
  write_text(o.out, rate_csv(report), out);
  const auto &b = report.nodes[find_bottleneck(report)];
  err << "valid: " << doc.app.nodes.size() << " nodes, " << doc.app.channels.size() << " channels\n";
  err << "bottleneck " << b.id << " weight " << format_fixed6(b.weight) << "\n";
  return kExitOk;
}

int cmd_library(const Common &o, const std::string &format, std::ostream &out, std::ostream &err) {
  auto doc = load(o.file, err);
  auto library = build_library(doc.app, doc.library, o.nf);
  write_text(o.out, format == "json" ? serialize_library(doc.app, library) : library_csv(doc.app, library), out);
  return kExitOk;
}

struct OptimizeFlags {
  std::string mode = "min-area";
  std::string target_v;
  std::int64_t area = -1;
  std::string algorithm = "heuristic";
  std::string margin = "0.1";
  std::string trace;
  std::string lp;
};

int cmd_optimize(const Common &o, const OptimizeFlags &f, std::ostream &out, std::ostream &err) {
  auto doc = load(o.file, err);
  auto library = build_library(doc.app, doc.library, o.nf);
  OptimizationTarget target;
  target.fan_limit = o.nf;
  target.margin = parse_rational(f.margin);
  if (f.mode == "min-area") {
    if (f.target_v.empty()) {
      err << "min-area mode needs --target-v\n";
      return kExitParse;
    }
    target.mode = MinArea{parse_v(f.target_v, err)};
  } else {
    if (f.area < 0) {
      err << "max-throughput mode needs --area\n";
      return kExitParse;
    }
    target.mode = MaxThroughput{f.area};
  }
  Assignment result;
  if (f.algorithm == "exact") {
    if (const auto *m = std::get_if<MinArea>(&target.mode)) {
      result = solve_min_area(doc.app, library, m->target_v, o.nf);
      if (!f.lp.empty()) {
        write_text(f.lp, dump_lp(doc.app, library, m->target_v, o.nf), out);
      }
    } else {
      result = solve_max_throughput(doc.app, library, std::get<MaxThroughput>(target.mode).area_budget, o.nf);
    }
  } else {
    auto h = optimize_heuristic(doc.app, library, target);
    if (!f.trace.empty()) {
      write_text(f.trace, trace_csv(h.trace), out);
    }
    result = std::move(h.assignment);
  }
  write_text(o.out, serialize_assignment(result), out);
  (o.out.empty() || o.out == "-" ? err : out) << assignment_report(result);
  return kExitOk;
}

struct SimulateFlags {
  std::string assignment;
  std::int64_t tokens = 10000;
  int capacity = 2;
  std::uint64_t seed = 0;
  std::string dump_dir;
};

int cmd_simulate(const Common &o, const SimulateFlags &f, std::ostream &out, std::ostream &err) {
  auto doc = load(o.file, err);
  auto library = build_library(doc.app, doc.library, o.nf);
  auto assignment = load_assignment(f.assignment, doc.app, library, err);
  SimOptions options;
  options.tokens = f.tokens;
  options.capacity = f.capacity;
  options.seed = f.seed;
  auto report = simulate(doc.app, assignment, options);
  write_text(o.out, report_csv(report), out);
  if (!f.dump_dir.empty()) {
    write_stream_dumps(report, f.dump_dir);
  }
  if (report.deadlock) {
    err << "deadlock after " << report.cycles << " cycles\n";
    return kExitInternal;
  }
  auto predicted = propagate_rates(doc.app, assignment);
  for (std::size_t ch = 0; ch < report.channels.size(); ++ch) {
    double p = boost::rational_cast<double>(predicted.channels[ch].steady_v);
    double m = report.channels[ch].measured_v;
    err << report.channels[ch].name << " predicted " << format_fixed6(predicted.channels[ch].steady_v) << " measured "
        << m << (std::abs(m - p) > 0.05 * p ? " (off by more than 5%)" : "") << "\n";
  }
  auto reference = simulate(doc.app, identity_assignment(doc.app, library), options);
  auto eq = check_equivalence(reference, report);
  if (!eq.equal) {
    err << "stream " << eq.stream << " diverges from the untransformed graph";
    if (eq.first_divergence) {
      err << " at token " << *eq.first_divergence;
    }
    err << "\n";
    return kExitInternal;
  }
  err << "equivalent to the untransformed graph\n";
  return kExitOk;
}

struct ParetoFlags {
  std::vector<std::string> targets;
  std::string sweep;
  std::string algorithms = "both";
};

int cmd_pareto(const Common &o, const ParetoFlags &f, std::ostream &out, std::ostream &err) {
  std::vector<Rational> targets;
  for (const auto &t : f.targets) {
    targets.push_back(parse_v(t, err));
  }
  if (!f.sweep.empty()) {
    auto colon = f.sweep.find(':');
    if (colon == std::string::npos) {
      err << "--sweep expects lo:hi\n";
      return kExitParse;
    }
    auto lo = parse_v(f.sweep.substr(0, colon), err);
    auto hi = parse_v(f.sweep.substr(colon + 1), err);
    for (auto v = lo; v <= hi; v += 1) {
      targets.push_back(v);
    }
  }
  if (targets.empty()) {
    err << "no targets given\n";
    return kExitParse;
  }
  auto doc = load(o.file, err);
  auto library = build_library(doc.app, doc.library, o.nf);
  std::vector<std::string> algorithms;
  if (f.algorithms == "both" || f.algorithms == "exact") {
    algorithms.push_back("exact");
  }
  if (f.algorithms == "both" || f.algorithms == "heuristic") {
    algorithms.push_back("heuristic");
  }
  std::ostringstream csv;
  csv << "target_v,algorithm,node_area,overhead_area,total_area,achieved_v\n";
  std::size_t rows = 0;
  for (const auto &v : targets) {
    for (const auto &algorithm : algorithms) {
      try {
        Assignment a;
        if (algorithm == "exact") {
          a = solve_min_area(doc.app, library, v, o.nf);
        } else {
          OptimizationTarget target;
          target.mode = MinArea{v};
          target.fan_limit = o.nf;
          a = optimize_heuristic(doc.app, library, target).assignment;
        }
        csv << format_fixed6(v) << "," << algorithm << "," << a.node_area << "," << a.overhead_area << ","
            << a.total_area << "," << format_fixed6(a.achieved_v) << "\n";
        ++rows;
      } catch (const InfeasibleError &e) {
        err << algorithm << " at v=" << format_fixed6(v) << ": " << e.what() << "\n";
      }
    }
  }
  write_text(o.out, csv.str(), out);
  return rows == 0 ? kExitInfeasible : kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Area/throughput trade-off finder for streaming task graphs", "stgscale"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App *sub) {
    sub->add_option("file", common.file, "graph description document")->required();
    sub->add_option("--nf", common.nf, "fork/join fan limit")->check(CLI::Range(2, 1 << 20));
    sub->add_option("--out", common.out, "output path, '-' for standard output");
  };

  std::string analyze_target = "1";
  auto *analyze = app.add_subcommand("analyze", "rate report of the fastest implementations");
  add_common(analyze);
  analyze->add_option("--target-v", analyze_target, "inverse throughput the weights refer to");

  std::string library_format = "csv";
  auto *library = app.add_subcommand("library", "implementation library per node");
  add_common(library);
  library->add_option("--format", library_format)->check(CLI::IsMember({"csv", "json"}));

  OptimizeFlags of;
  auto *optimize = app.add_subcommand("optimize", "select implementations and replica counts");
  add_common(optimize);
  optimize->add_option("--mode", of.mode)->check(CLI::IsMember({"min-area", "max-throughput"}));
  optimize->add_option("--target-v", of.target_v, "inverse throughput target (min-area)");
  optimize->add_option("--area", of.area, "area budget (max-throughput)")->check(CLI::NonNegativeNumber);
  optimize->add_option("--algorithm", of.algorithm)->check(CLI::IsMember({"exact", "heuristic"}));
  optimize->add_option("--margin", of.margin, "budget estimate slack for max-throughput");
  optimize->add_option("--trace", of.trace, "heuristic decision trace CSV");
  optimize->add_option("--lp", of.lp, "exact min-area instance in LP format");

  SimulateFlags sf;
  auto *sim = app.add_subcommand("simulate", "cycle-stepped run checked against the untransformed graph");
  add_common(sim);
  sim->add_option("assignment", sf.assignment, "assignment document")->required();
  sim->add_option("--tokens", sf.tokens, "primary-source firings")->check(CLI::PositiveNumber);
  sim->add_option("--capacity", sf.capacity, "FIFO depth")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sf.seed, "process visiting order");
  sim->add_option("--dump-dir", sf.dump_dir, "directory for binary stream dumps");

  ParetoFlags pf;
  auto *pareto = app.add_subcommand("pareto", "area over a sweep of inverse throughput targets");
  add_common(pareto);
  pareto->add_option("--targets", pf.targets, "comma-separated targets")->delimiter(',');
  pareto->add_option("--sweep", pf.sweep, "integer targets lo:hi");
  pareto->add_option("--algorithms", pf.algorithms)->check(CLI::IsMember({"exact", "heuristic", "both"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << e.what() << "\n";
    return kExitParse;
  }

  try {
    if (analyze->parsed()) {
      return cmd_analyze(common, analyze_target, out, err);
    }
    if (library->parsed()) {
      return cmd_library(common, library_format, out, err);
    }
    if (optimize->parsed()) {
      return cmd_optimize(common, of, out, err);
    }
    if (sim->parsed()) {
      return cmd_simulate(common, sf, out, err);
    }
    return cmd_pareto(common, pf, out, err);
  } catch (const ParseFailure &) {
    return kExitParse;
  } catch (const std::invalid_argument &e) {
    err << e.what() << "\n";
    return kExitParse;
  } catch (const InfeasibleError &e) {
    err << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception &e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

int run_cli(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

} // namespace stg
