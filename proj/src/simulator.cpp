#include "stg/simulator.hpp"

#include "stg/intra_node.hpp"
#include "stg/replication.hpp"
#include "stg/throughput.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

namespace stg {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Token {
  std::int64_t value;
  std::int64_t ready;  // first cycle the reader may take it
};

struct Fifo {
  std::deque<Token> queue;
  std::int64_t pop_cycle = -1;
  int pops = 0;  // pops during pop_cycle; their slots free up next cycle
  int channel = -1;
  int capacity = 2;

  bool readable(std::int64_t cycle) const { return !queue.empty() && queue.front().ready <= cycle; }
  bool writable(std::int64_t cycle) const {
    auto held = static_cast<std::int64_t>(queue.size()) + (pop_cycle == cycle ? pops : 0);
    return held < capacity;
  }
  std::int64_t pop(std::int64_t cycle) {
    if (pop_cycle != cycle) {
      pop_cycle = cycle;
      pops = 0;
    }
    ++pops;
    auto v = queue.front().value;
    queue.pop_front();
    return v;
  }
};

// Maps the m-th token through one port of a process to a FIFO.
struct Link {
  enum class Kind { Single, CrossWrite, CrossRead, Tree };
  Kind kind = Kind::Single;
  std::vector<int> fifos;
  std::int64_t np = 1, bp = 1, nc = 1, bc = 1, self = 0;  // crossbar
  std::int64_t lo = 0, hi = 1, span = 1, block = 1;       // tree
  int channel = -1;                                       // measured logical stream

  int fifo(std::int64_t m) const {
    switch (kind) {
    case Kind::Single:
      return fifos[0];
    case Kind::CrossWrite: {
      std::int64_t t = ((m / bp) * np + self) * bp + m % bp;
      return fifos[static_cast<std::size_t>((t / bc) % nc)];
    }
    case Kind::CrossRead: {
      std::int64_t t = ((m / bc) * nc + self) * bc + m % bc;
      return fifos[static_cast<std::size_t>((t / bp) % np)];
    }
    case Kind::Tree: {
      std::int64_t r = lo + (m / block) % (hi - lo);
      return fifos[static_cast<std::size_t>((r - lo) / span)];
    }
    }
    return -1;
  }
};

struct InFlight {
  std::int64_t finish;
  std::vector<std::vector<std::int64_t>> outputs;
};

struct Process {
  enum class Kind { Node, Fork, Join, Collector };
  Kind kind = Kind::Node;
  std::size_t node = 0;
  std::int64_t replica = 0;
  std::int64_t replicas = 1;
  std::int64_t ii = 1;
  std::int64_t latency = 1;
  std::int64_t limit = -1;  // firings, sources only
  std::vector<int> in_rates;
  std::vector<int> out_rates;
  std::vector<Link> inputs;
  std::vector<std::vector<Link>> outputs;
  int stream = -1;

  std::vector<std::int64_t> reads;
  std::vector<std::int64_t> writes;
  std::vector<std::vector<std::int64_t>> staging;
  std::deque<InFlight> in_flight;
  std::vector<std::deque<std::int64_t>> pending;
  std::int64_t next_issue = 0;
  std::int64_t fired = 0;

  void init() {
    reads.assign(in_rates.size(), 0);
    writes.assign(out_rates.size(), 0);
    staging.assign(in_rates.size(), {});
    pending.assign(out_rates.size(), {});
    outputs.resize(out_rates.size());
  }
  bool has_pending() const {
    return std::any_of(pending.begin(), pending.end(), [](const auto &p) { return !p.empty(); });
  }
  bool staged() const {
    for (std::size_t j = 0; j < in_rates.size(); ++j) {
      if (static_cast<int>(staging[j].size()) < in_rates[j]) {
        return false;
      }
    }
    return true;
  }
  bool exhausted() const { return limit >= 0 && fired >= limit; }
};

// Consumer or producer side of a logical stream: (process, port).
struct Endpoint {
  std::size_t process;
  std::size_t port;
};

class Network {
public:
  Network(const Application &app, const Assignment &assignment, const SimOptions &options)
      : m_app(app), m_asg(assignment), m_opt(options), m_r(app.rate_factors()) {
    if (options.capacity < 1) {
      throw ParameterError("FIFO capacity must be at least 1");
    }
    if (options.tokens < 1) {
      throw ParameterError("token count must be at least 1");
    }
    build();
  }

  SimReport run();

private:
  // Deep enough to hold two firings' worth of a burst, so a port moving b
  // tokens per firing is never throttled by the depth alone.
  int new_fifo(int channel, std::int64_t burst) {
    m_fifos.emplace_back();
    m_fifos.back().channel = channel;
    m_fifos.back().capacity = static_cast<int>(std::max<std::int64_t>(m_opt.capacity, 2 * burst));
    return static_cast<int>(m_fifos.size() - 1);
  }

  void build();
  std::vector<Endpoint> producer_endpoints(std::size_t node, std::size_t port);
  std::vector<Endpoint> consumer_endpoints(std::size_t node, std::size_t port);
  void connect(const std::vector<Endpoint> &producers, std::int64_t bp, const std::vector<Endpoint> &consumers,
               std::int64_t bc, int channel);
  std::vector<std::size_t> build_tree_processes(const ForkJoinTree &tree, std::size_t node, std::int64_t block);
  std::vector<std::vector<std::int64_t>> fire(Process &p);
  bool step(Process &p, std::int64_t cycle);

  const Application &m_app;
  const Assignment &m_asg;
  const SimOptions &m_opt;
  std::vector<Rational> m_r;

  std::vector<Process> m_procs;
  std::vector<Fifo> m_fifos;
  std::vector<std::vector<std::size_t>> m_replicas;  // per node
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> m_join_roots;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> m_fork_roots;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> m_join_first_leaf;
  std::vector<std::vector<std::int64_t>> m_channel_times;
  std::vector<std::int64_t> m_channel_reads;
  std::vector<StreamRecord> m_streams;
  std::vector<std::vector<std::int64_t>> m_stream_times;
};

std::vector<Endpoint> Network::producer_endpoints(std::size_t node, std::size_t port) {
  if (auto it = m_join_roots.find({node, port}); it != m_join_roots.end()) {
    return {{it->second, 0}};
  }
  std::vector<Endpoint> out;
  for (auto p : m_replicas[node]) {
    out.push_back({p, port});
  }
  return out;
}

std::vector<Endpoint> Network::consumer_endpoints(std::size_t node, std::size_t port) {
  if (auto it = m_fork_roots.find({node, port}); it != m_fork_roots.end()) {
    return {{it->second, 0}};
  }
  std::vector<Endpoint> out;
  for (auto p : m_replicas[node]) {
    out.push_back({p, port});
  }
  return out;
}

void Network::connect(const std::vector<Endpoint> &producers, std::int64_t bp, const std::vector<Endpoint> &consumers,
                      std::int64_t bc, int channel) {
  auto np = static_cast<std::int64_t>(producers.size());
  auto nc = static_cast<std::int64_t>(consumers.size());
  std::vector<Link> writers(producers.size());
  std::vector<Link> readers(consumers.size());
  for (std::int64_t a = 0; a < np; ++a) {
    auto &w = writers[static_cast<std::size_t>(a)];
    w.kind = Link::Kind::CrossWrite;
    w.np = np, w.bp = bp, w.nc = nc, w.bc = bc, w.self = a;
    w.fifos.assign(static_cast<std::size_t>(nc), -1);
    w.channel = channel;
  }
  for (std::int64_t d = 0; d < nc; ++d) {
    auto &r = readers[static_cast<std::size_t>(d)];
    r.kind = Link::Kind::CrossRead;
    r.np = np, r.bp = bp, r.nc = nc, r.bc = bc, r.self = d;
    r.fifos.assign(static_cast<std::size_t>(np), -1);
  }
  for (auto [a, d] : crossbar_pairs(np, bp, nc, bc)) {
    int f = new_fifo(channel, std::max(bp, bc));
    writers[static_cast<std::size_t>(a)].fifos[static_cast<std::size_t>(d)] = f;
    readers[static_cast<std::size_t>(d)].fifos[static_cast<std::size_t>(a)] = f;
  }
  for (std::size_t a = 0; a < producers.size(); ++a) {
    m_procs[producers[a].process].outputs[producers[a].port].push_back(writers[a]);
  }
  for (std::size_t d = 0; d < consumers.size(); ++d) {
    m_procs[consumers[d].process].inputs[consumers[d].port] = readers[d];
  }
}

// Creates one process per tree node, wires the internal edges and the leaf
// edges to the node's replicas. Returns process indices in tree order.
std::vector<std::size_t> Network::build_tree_processes(const ForkJoinTree &tree, std::size_t node,
                                                       std::int64_t block) {
  std::vector<std::size_t> ids;
  std::vector<std::vector<std::size_t>> children(tree.nodes.size());
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    Process p;
    p.kind = tree.kind == TreeKind::Fork ? Process::Kind::Fork : Process::Kind::Join;
    p.node = node;
    p.in_rates = {1};
    p.out_rates = {1};
    p.init();
    p.inputs.resize(1);
    ids.push_back(m_procs.size());
    m_procs.push_back(std::move(p));
    if (tree.nodes[i].parent) {
      children[*tree.nodes[i].parent].push_back(i);
    }
  }
  const bool fork = tree.kind == TreeKind::Fork;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto &tn = tree.nodes[i];
    Link spread;
    spread.kind = Link::Kind::Tree;
    spread.lo = tn.lo;
    spread.hi = tn.hi;
    spread.block = block;
    auto &proc = m_procs[ids[i]];
    if (!children[i].empty()) {
      const auto &first = tree.nodes[children[i].front()];
      spread.span = first.hi - first.lo;
      for (auto c : children[i]) {
        int f = new_fifo(-1, block);
        spread.fifos.push_back(f);
        Link single;
        single.fifos = {f};
        if (fork) {
          m_procs[ids[c]].inputs[0] = single;
        } else {
          m_procs[ids[c]].outputs[0].push_back(single);
        }
      }
    } else {
      spread.span = 1;
      for (std::int64_t r = tn.lo; r < tn.hi; ++r) {
        int f = new_fifo(-1, block);
        spread.fifos.push_back(f);
        Link single;
        single.fifos = {f};
        auto replica = m_replicas[node][static_cast<std::size_t>(r)];
        if (fork) {
          m_procs[replica].inputs[tree.port] = single;
        } else {
          m_procs[replica].outputs[tree.port].push_back(single);
        }
      }
    }
    if (fork) {
      proc.outputs[0].push_back(spread);
    } else {
      proc.inputs[0] = spread;
    }
  }
  return ids;
}

void Network::build() {
  const auto &nodes = m_app.nodes;
  m_replicas.resize(nodes.size());
  for (std::size_t m = 0; m < nodes.size(); ++m) {
    const auto &node = nodes[m];
    const auto *choice = m_asg.choice(node.id);
    if (choice == nullptr) {
      throw StructuralError("assignment has no choice for node '" + node.id + "'");
    }
    if (choice->replicas > 1 && !node.stateless) {
      throw LegalityError("stateful node '" + node.id + "' cannot be replicated");
    }
    std::int64_t latency = choice->impl.ii;
    if (node.graph) {
      latency = std::max<std::int64_t>(latency, node.graph->critical_path());
    }
    std::int64_t firings = 0;
    if (node.num_in() == 0) {
      Rational total = m_r[m] * m_opt.tokens;
      firings = floor(total);
    }
    for (std::int64_t i = 0; i < choice->replicas; ++i) {
      Process p;
      p.kind = Process::Kind::Node;
      p.node = m;
      p.replica = i;
      p.replicas = choice->replicas;
      p.ii = choice->impl.ii;
      p.latency = latency;
      p.in_rates = node.in_rates;
      p.out_rates = node.out_rates;
      p.init();
      p.inputs.resize(node.num_in());
      if (node.num_in() == 0) {
        p.limit = firings > i ? ceil_div(firings - i, choice->replicas) : 0;
      }
      m_replicas[m].push_back(m_procs.size());
      m_procs.push_back(std::move(p));
    }
  }
  for (const auto &tree : m_asg.trees) {
    auto m = m_app.index_of(tree.node);
    const auto &node = nodes[m];
    bool fork = tree.kind == TreeKind::Fork;
    if (tree.port >= (fork ? node.num_in() : node.num_out())) {
      throw StructuralError("tree attached to a missing port of '" + tree.node + "'");
    }
    if (tree.replicas != static_cast<std::int64_t>(m_replicas[m].size())) {
      throw StructuralError("tree on '" + tree.node + "' does not match its replica count");
    }
    if (tree.nodes.empty()) {
      continue;
    }
    std::int64_t block = fork ? node.in_rates[tree.port] : node.out_rates[tree.port];
    auto ids = build_tree_processes(tree, m, block);
    (fork ? m_fork_roots : m_join_roots)[{m, tree.port}] = ids.front();
    if (!fork) {
      for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (tree.nodes[i].layer == tree.nodes.back().layer) {
          m_join_first_leaf[{m, tree.port}] = ids[i];
          break;
        }
      }
    }
  }
  m_channel_times.resize(m_app.channels.size());
  m_channel_reads.assign(m_app.channels.size(), 0);
  for (std::size_t c = 0; c < m_app.channels.size(); ++c) {
    const auto &ch = m_app.channels[c];
    connect(producer_endpoints(ch.from.node, ch.from.port), nodes[ch.from.node].out_rates[ch.from.port],
            consumer_endpoints(ch.to.node, ch.to.port), nodes[ch.to.node].in_rates[ch.to.port],
            static_cast<int>(c));
  }
  for (auto m : m_app.sinks()) {
    for (std::size_t k = 0; k < nodes[m].num_out(); ++k) {
      Process collector;
      collector.kind = Process::Kind::Collector;
      collector.node = m;
      collector.in_rates = {1};
      collector.init();
      collector.inputs.resize(1);
      collector.stream = static_cast<int>(m_streams.size());
      m_streams.push_back({nodes[m].id + "." + std::to_string(k), {}, 0});
      m_stream_times.emplace_back();
      std::size_t id = m_procs.size();
      m_procs.push_back(std::move(collector));
      connect(producer_endpoints(m, k), nodes[m].out_rates[k], {{id, 0}}, 1, -1);
    }
  }
  if (m_opt.swap_join_leaves) {
    auto m = m_app.index_of(*m_opt.swap_join_leaves);
    Link *target = nullptr;
    if (auto it = m_join_first_leaf.find({m, 0}); it != m_join_first_leaf.end()) {
      target = &m_procs[it->second].inputs[0];
      if (target->fifos.size() >= 2) {
        std::swap(target->fifos[0], target->fifos[1]);
      }
    } else {
      // direct wiring: every reader of the port sees replicas 0 and 1 swapped
      for (auto &p : m_procs) {
        for (auto &in : p.inputs) {
          if (in.kind == Link::Kind::CrossRead && in.np >= 2) {
            bool from_node = false;
            for (auto r : m_replicas[m]) {
              for (const auto &out : m_procs[r].outputs.empty() ? std::vector<Link>{} : m_procs[r].outputs[0]) {
                for (int f : out.fifos) {
                  from_node = from_node || (f >= 0 && (f == in.fifos[0] || f == in.fifos[1]));
                }
              }
            }
            if (from_node) {
              std::swap(in.fifos[0], in.fifos[1]);
            }
          }
        }
      }
    }
  }
  for (auto &p : m_procs) {
    for (std::size_t j = 0; j < p.inputs.size(); ++j) {
      if (p.inputs[j].fifos.empty()) {
        throw StructuralError("simulation input left unconnected");
      }
    }
  }
}

std::vector<std::vector<std::int64_t>> Network::fire(Process &p) {
  if (p.kind != Process::Kind::Node) {
    return {{p.staging[0][0]}};
  }
  const auto &node = m_app.nodes[p.node];
  std::int64_t global = p.fired * p.replicas + p.replica;
  std::vector<std::vector<std::int64_t>> out(node.num_out());
  if (node.graph) {
    auto flat = node.graph->evaluate(p.staging, global);
    std::size_t i = 0;
    for (std::size_t k = 0; k < node.num_out(); ++k) {
      for (int t = 0; t < node.out_rates[k]; ++t) {
        out[k].push_back(i < flat.size() ? flat[i] : 0);
        ++i;
      }
    }
    return out;
  }
  // Placeholder kernel: a hash of the inputs and the firing index.
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(p.node) * 0x100000001b3ULL);
  for (const auto &port : p.staging) {
    for (auto v : port) {
      h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    }
  }
  h = splitmix64(h ^ static_cast<std::uint64_t>(global));
  bool source = node.num_in() == 0;
  for (std::size_t k = 0; k < node.num_out(); ++k) {
    for (int t = 0; t < node.out_rates[k]; ++t) {
      std::uint64_t v = splitmix64(h + (static_cast<std::uint64_t>(k) << 32) + static_cast<std::uint64_t>(t));
      out[k].push_back(source ? static_cast<std::int64_t>(v & 0xFFFF) : static_cast<std::int64_t>(v >> 1));
    }
  }
  return out;
}

bool Network::step(Process &p, std::int64_t cycle) {
  bool active = false;
  if (p.kind == Process::Kind::Collector) {
    auto &stream = m_streams[static_cast<std::size_t>(p.stream)];
    while (true) {
      int f = p.inputs[0].fifo(p.reads[0]);
      if (f < 0 || !m_fifos[static_cast<std::size_t>(f)].readable(cycle)) {
        break;
      }
      stream.values.push_back(m_fifos[static_cast<std::size_t>(f)].pop(cycle));
      m_stream_times[static_cast<std::size_t>(p.stream)].push_back(cycle);
      ++p.reads[0];
      active = true;
    }
    return active;
  }
  if (!p.has_pending() && !p.in_flight.empty() && p.in_flight.front().finish <= cycle) {
    auto &done = p.in_flight.front();
    for (std::size_t k = 0; k < done.outputs.size(); ++k) {
      p.pending[k].insert(p.pending[k].end(), done.outputs[k].begin(), done.outputs[k].end());
    }
    p.in_flight.pop_front();
    active = true;
  }
  for (std::size_t k = 0; k < p.pending.size(); ++k) {
    while (!p.pending[k].empty()) {
      bool ok = true;
      for (const auto &link : p.outputs[k]) {
        int f = link.fifo(p.writes[k]);
        if (f < 0 || !m_fifos[static_cast<std::size_t>(f)].writable(cycle)) {
          ok = false;
          break;
        }
      }
      if (!ok) {
        break;
      }
      for (const auto &link : p.outputs[k]) {
        auto &fifo = m_fifos[static_cast<std::size_t>(link.fifo(p.writes[k]))];
        fifo.queue.push_back({p.pending[k].front(), cycle + 1});
        if (fifo.channel >= 0) {
          m_channel_times[static_cast<std::size_t>(fifo.channel)].push_back(cycle);
        }
      }
      p.pending[k].pop_front();
      ++p.writes[k];
      active = true;
    }
  }
  for (std::size_t j = 0; j < p.inputs.size(); ++j) {
    while (static_cast<int>(p.staging[j].size()) < p.in_rates[j]) {
      int f = p.inputs[j].fifo(p.reads[j]);
      if (f < 0 || !m_fifos[static_cast<std::size_t>(f)].readable(cycle)) {
        break;
      }
      auto &fifo = m_fifos[static_cast<std::size_t>(f)];
      if (fifo.channel >= 0) {
        ++m_channel_reads[static_cast<std::size_t>(fifo.channel)];
      }
      p.staging[j].push_back(fifo.pop(cycle));
      ++p.reads[j];
      active = true;
    }
  }
  auto slots = static_cast<std::size_t>(ceil_div(p.latency, p.ii));
  if (cycle >= p.next_issue && !p.exhausted() && p.staged() && p.in_flight.size() < slots) {
    p.in_flight.push_back({cycle + p.latency, fire(p)});
    for (auto &s : p.staging) {
      s.clear();
    }
    p.next_issue = cycle + p.ii;
    ++p.fired;
    active = true;
  }
  return active;
}

double window_v(const std::vector<std::int64_t> &times, std::int64_t warmup, std::int64_t *count) {
  auto first = std::lower_bound(times.begin(), times.end(), warmup);
  auto n = static_cast<std::int64_t>(times.end() - first);
  *count = n;
  if (n < 2) {
    return 0;
  }
  return static_cast<double>(times.back() - *first) / static_cast<double>(n - 1);
}

SimReport Network::run() {
  std::vector<std::size_t> order(m_procs.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  if (m_opt.seed != 0) {
    std::mt19937_64 rng(m_opt.seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::int64_t max_cycles = m_opt.max_cycles;
  if (max_cycles <= 0) {
    Rational slowest(1);
    for (std::size_t m = 0; m < m_app.nodes.size(); ++m) {
      const auto *c = m_asg.choice(m_app.nodes[m].id);
      int widest = 1;
      for (int x : m_app.nodes[m].in_rates) {
        widest = std::max(widest, x);
      }
      for (int x : m_app.nodes[m].out_rates) {
        widest = std::max(widest, x);
      }
      slowest = std::max(slowest, Rational(c->impl.ii + widest) * m_r[m]);
    }
    max_cycles = 100000 + 4 * (m_opt.tokens + 16) * ceil(slowest);
  }
  SimReport report;
  std::int64_t last_active = -1;
  std::int64_t cycle = 0;
  for (; cycle < max_cycles; ++cycle) {
    bool active = false;
    for (auto i : order) {
      active = step(m_procs[i], cycle) || active;
    }
    if (active) {
      last_active = cycle;
      continue;
    }
    bool waiting = false;
    for (const auto &p : m_procs) {
      if (!p.in_flight.empty() || (p.kind != Process::Kind::Collector && p.staged() && !p.exhausted() &&
                                   p.next_issue > cycle)) {
        waiting = true;
        break;
      }
    }
    if (!waiting) {
      break;
    }
  }
  report.cycles = last_active + 1;
  for (const auto &p : m_procs) {
    report.deadlock = report.deadlock || p.has_pending() || !p.in_flight.empty();
  }
  if (cycle >= max_cycles) {
    report.deadlock = true;
  }
  std::int64_t warmup = report.cycles / 5;
  for (std::size_t c = 0; c < m_app.channels.size(); ++c) {
    ChannelStats s;
    s.name = m_app.channel_name(c);
    s.produced = static_cast<std::int64_t>(m_channel_times[c].size());
    s.consumed = m_channel_reads[c];
    for (const auto &f : m_fifos) {
      if (f.channel == static_cast<int>(c)) {
        s.occupancy += static_cast<std::int64_t>(f.queue.size());
      }
    }
    s.measured_v = window_v(m_channel_times[c], warmup, &s.measured_tokens);
    report.channels.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < m_streams.size(); ++i) {
    std::int64_t n = 0;
    m_streams[i].measured_v = window_v(m_stream_times[i], warmup, &n);
    report.streams.push_back(std::move(m_streams[i]));
  }
  return report;
}

} // namespace

Assignment identity_assignment(const Application &app, const ImplementationLibrary &library) {
  Assignment a;
  for (const auto &node : app.nodes) {
    Implementation impl;
    if (library.contains(node.id)) {
      impl = library.entries(node.id).front();
    } else if (node.graph && !node.graph->ops.empty()) {
      impl = pipeline_impl(*node.graph);
      impl.owner = node.id;
      impl.version = "v1";
    } else {
      impl.owner = node.id;
      impl.version = "v1";
    }
    a.choices.push_back({node.id, impl, 1});
  }
  recompute_areas(a);
  a.achieved_v = propagate_rates(app, a).achieved_v;
  return a;
}

SimReport simulate(const Application &app, const Assignment &assignment, const SimOptions &options) {
  Network net(app, assignment, options);
  return net.run();
}

Equivalence check_equivalence(const SimReport &reference, const SimReport &test) {
  Equivalence eq;
  if (reference.streams.size() != test.streams.size()) {
    eq.equal = false;
    eq.first_divergence = 0;
    return eq;
  }
  for (std::size_t s = 0; s < reference.streams.size(); ++s) {
    const auto &a = reference.streams[s];
    const auto &b = test.streams[s];
    if (a.name != b.name) {
      eq.equal = false;
      eq.stream = a.name;
      eq.first_divergence = 0;
      return eq;
    }
    std::size_t n = std::min(a.values.size(), b.values.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (a.values[i] != b.values[i]) {
        eq.equal = false;
        eq.stream = a.name;
        eq.first_divergence = i;
        return eq;
      }
    }
    if (a.values.size() != b.values.size()) {
      eq.equal = false;
      eq.stream = a.name;
      eq.first_divergence = n;
      return eq;
    }
  }
  return eq;
}

std::string report_csv(const SimReport &report) {
  std::ostringstream out;
  char buf[64];
  out << "kind,name,produced,consumed,occupancy,measured_v\n";
  for (const auto &c : report.channels) {
    std::snprintf(buf, sizeof buf, "%.6f", c.measured_v);
    out << "channel," << c.name << ',' << c.produced << ',' << c.consumed << ',' << c.occupancy << ',' << buf << '\n';
  }
  for (const auto &s : report.streams) {
    std::snprintf(buf, sizeof buf, "%.6f", s.measured_v);
    out << "stream," << s.name << ',' << s.values.size() << ',' << s.values.size() << ",0," << buf << '\n';
  }
  out << "summary,cycles," << report.cycles << ",,,\n";
  out << "summary,deadlock," << (report.deadlock ? 1 : 0) << ",,,\n";
  return out.str();
}

std::vector<std::string> write_stream_dumps(const SimReport &report, const std::string &directory) {
  std::filesystem::create_directories(directory);
  std::vector<std::string> paths;
  for (const auto &s : report.streams) {
    auto path = (std::filesystem::path(directory) / (s.name + ".bin")).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write " + path);
    }
    for (auto v : s.values) {
      auto u = static_cast<std::uint64_t>(v);
      unsigned char bytes[8];
      for (int i = 0; i < 8; ++i) {
        bytes[i] = static_cast<unsigned char>(u >> (8 * i));
      }
      out.write(reinterpret_cast<const char *>(bytes), 8);
    }
    paths.push_back(path);
  }
  return paths;
}

Realization realize(const OpGraph &graph, const Implementation &impl, int nf) {
  if (graph.ops.empty()) {
    throw StructuralError("op graph is empty");
  }
  // Processing elements as op lists, each with its ii and replica count.
  std::vector<std::vector<std::size_t>> pes;
  std::vector<std::int64_t> pe_ii;
  std::vector<std::int64_t> pe_reps;
  auto order = graph.canonical_order();
  switch (impl.provenance) {
  case Provenance::Pipelined:
  case Provenance::Expanded: {
    std::vector<std::int64_t> reps(graph.ops.size(), 1);
    if (impl.provenance == Provenance::Expanded) {
      reps = expansion_replicas(graph, impl.ii);
    }
    for (auto op : order) {
      pes.push_back({op});
      pe_ii.push_back(graph.ops[op].latency);
      pe_reps.push_back(reps[op]);
    }
    break;
  }
  case Provenance::Clustered: {
    std::vector<std::size_t> current;
    std::int64_t load = 0;
    for (auto op : order) {
      std::int64_t l = graph.ops[op].latency;
      if (!current.empty() && load + l > impl.ii) {
        pes.push_back(current);
        pe_ii.push_back(load);
        current.clear();
        load = 0;
      }
      current.push_back(op);
      load += l;
    }
    pes.push_back(current);
    pe_ii.push_back(load);
    pe_reps.assign(pes.size(), 1);
    break;
  }
  case Provenance::Library:
    throw ParameterError("library implementations have no op-level structure");
  }

  std::vector<std::size_t> pe_of(graph.ops.size());
  for (std::size_t i = 0; i < pes.size(); ++i) {
    for (auto op : pes[i]) {
      pe_of[op] = i;
    }
  }
  // Value producers: source slots (port, token or iteration) and ops.
  struct Value {
    bool op = false;
    std::size_t index = 0;
    bool operator<(const Value &o) const { return std::tie(op, index) < std::tie(o.op, o.index); }
  };
  std::map<std::tuple<int, std::size_t, std::size_t>, std::size_t> slot_ids;
  auto slot_of = [&](const OpArg &a) {
    auto key = a.kind == OpArg::Kind::Iteration ? std::make_tuple(1, std::size_t{0}, std::size_t{0})
                                                : std::make_tuple(0, a.port, a.token);
    return slot_ids.emplace(key, slot_ids.size()).first->second;
  };
  std::vector<std::vector<Value>> pe_inputs(pes.size());
  std::vector<std::set<std::size_t>> pe_exports(pes.size());
  for (std::size_t i = 0; i < pes.size(); ++i) {
    std::set<Value> seen;
    for (auto op : pes[i]) {
      for (const auto &a : graph.ops[op].args) {
        Value v;
        if (a.kind == OpArg::Kind::Op) {
          if (pe_of[a.op] == i) {
            continue;
          }
          v = {true, a.op};
          pe_exports[pe_of[a.op]].insert(a.op);
        } else {
          v = {false, slot_of(a)};
        }
        if (seen.insert(v).second) {
          pe_inputs[i].push_back(v);
        }
      }
    }
  }
  for (auto o : graph.outputs) {
    pe_exports[pe_of[o]].insert(o);
  }
  if (slot_ids.empty()) {
    slot_ids.emplace(std::make_tuple(1, std::size_t{0}, std::size_t{0}), 0);
  }
  for (std::size_t i = 0; i < pes.size(); ++i) {
    if (pe_inputs[i].empty()) {
      pe_inputs[i].push_back({false, 0});
    }
  }

  Realization out;
  auto &app = out.app;
  ImplementationLibrary lib;
  auto add_node = [&](const std::string &id, std::size_t ins, std::size_t outs, std::int64_t ii, std::int64_t area) {
    CompositeNode n;
    n.id = id;
    n.in_rates.assign(ins, 1);
    n.out_rates.assign(outs, 1);
    app.nodes.push_back(n);
    lib.set(id, {Implementation{id, "v1", area, ii, Provenance::Library}});
  };
  add_node("src", 0, slot_ids.size(), 1, 1);
  std::vector<std::map<std::size_t, std::size_t>> export_port(pes.size());
  for (std::size_t i = 0; i < pes.size(); ++i) {
    std::size_t k = 0;
    for (auto op : pe_exports[i]) {
      export_port[i][op] = k++;
    }
    add_node("pe" + std::to_string(i), pe_inputs[i].size(), pe_exports[i].size(), pe_ii[i],
             static_cast<std::int64_t>(pes[i].size()));
  }
  add_node("out", graph.outputs.size(), 0, 1, 1);
  auto source_of = [&](const Value &v) {
    if (v.op) {
      return PortRef{1 + pe_of[v.index], export_port[pe_of[v.index]].at(v.index)};
    }
    return PortRef{0, v.index};
  };
  for (std::size_t i = 0; i < pes.size(); ++i) {
    for (std::size_t j = 0; j < pe_inputs[i].size(); ++j) {
      app.channels.push_back({source_of(pe_inputs[i][j]), PortRef{1 + i, j}});
    }
  }
  for (std::size_t j = 0; j < graph.outputs.size(); ++j) {
    app.channels.push_back({source_of({true, graph.outputs[j]}), PortRef{app.nodes.size() - 1, j}});
  }
  // Source slots nobody reads would leave dangling ports; route them to the sink side.
  std::vector<bool> used(slot_ids.size(), false);
  for (const auto &c : app.channels) {
    if (c.from.node == 0) {
      used[c.from.port] = true;
    }
  }
  for (std::size_t k = 0; k < used.size(); ++k) {
    if (!used[k]) {
      auto &sink = app.nodes.back();
      sink.in_rates.push_back(1);
      app.channels.push_back({PortRef{0, k}, PortRef{app.nodes.size() - 1, sink.in_rates.size() - 1}});
    }
  }
  std::vector<NodeChoice> choices;
  for (std::size_t m = 0; m < app.nodes.size(); ++m) {
    std::int64_t reps = (m >= 1 && m <= pes.size()) ? pe_reps[m - 1] : 1;
    choices.push_back({app.nodes[m].id, lib.entries(app.nodes[m].id).front(), reps});
  }
  out.assignment = assemble_assignment(app, choices, nf);
  return out;
}

double measure_implementation(const OpGraph &graph, const Implementation &impl, int nf, std::int64_t firings) {
  auto r = realize(graph, impl, nf);
  SimOptions opt;
  opt.tokens = firings;
  opt.capacity = 64;
  auto report = simulate(r.app, r.assignment, opt);
  if (report.deadlock) {
    throw std::logic_error("realized implementation deadlocked");
  }
  double v = 0;
  auto sink = r.app.nodes.size() - 1;
  for (std::size_t c = 0; c < r.app.channels.size(); ++c) {
    if (r.app.channels[c].to.node == sink) {
      v = std::max(v, report.channels[c].measured_v);
    }
  }
  return v;
}

} // namespace stg
