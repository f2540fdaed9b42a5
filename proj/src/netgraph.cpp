#include "netwatt/netgraph.hpp"

#include <algorithm>
#include <tuple>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "netwatt/num_io.hpp"

namespace netwatt {

double NetworkGraph::total() const {
  double sum = 0;
  for (const SwitchNode& s : switches) sum += s.energy_j;
  for (const CoreNode& c : cores) sum += c.energy_j;
  for (const LinkEdge& l : links) sum += l.energy_j;
  return sum;
}

double NetworkGraph::outbound_link_energy(int node_id) const {
  double sum = 0;
  for (const LinkEdge& l : links) {
    auto it = l.by_source.find(node_id);
    if (it != l.by_source.end()) sum += it->second;
  }
  return sum;
}

NetworkGraph build_graph(const PlatformDesc& platform) {
  platform.validate();
  NetworkGraph g;
  for (const NodeDesc& n : platform.nodes) {
    g.switches.push_back({n.id, 0.0});
    for (int c = 0; c < n.cores; c++) g.cores.push_back({n.id, c, 0.0});
  }
  // reports and visualizations list elements by ascending id, independent of
  // declaration order
  std::sort(g.switches.begin(), g.switches.end(),
            [](const NetworkGraph::SwitchNode& a, const NetworkGraph::SwitchNode& b) { return a.node_id < b.node_id; });
  std::sort(g.cores.begin(), g.cores.end(), [](const NetworkGraph::CoreNode& a, const NetworkGraph::CoreNode& b) {
    return std::tie(a.node_id, a.core) < std::tie(b.node_id, b.core);
  });
  for (size_t i = 0; i < platform.links.size(); i++) {
    const LinkDesc& l = platform.links[i];
    g.links.push_back({static_cast<int>(i), l.node_a, l.node_b, 0.0, {}});
  }
  return g;
}

void apply_ledger(NetworkGraph& g, const EnergyLedger& ledger) {
  for (const auto& [key, j] : ledger.core_j) {
    auto it = std::find_if(g.cores.begin(), g.cores.end(),
                           [&](const NetworkGraph::CoreNode& c) { return c.node_id == key.first && c.core == key.second; });
    if (it == g.cores.end())
      throw ParseError("ledger references unknown core " + num_str(static_cast<std::int64_t>(key.first)) + "." +
                       num_str(static_cast<std::int64_t>(key.second)));
    it->energy_j += j;
  }
  for (const auto& [node, j] : ledger.switch_j) {
    auto it = std::find_if(g.switches.begin(), g.switches.end(),
                           [&](const NetworkGraph::SwitchNode& s) { return s.node_id == node; });
    if (it == g.switches.end())
      throw ParseError("ledger references unknown switch " + num_str(static_cast<std::int64_t>(node)));
    it->energy_j += j;
  }
  for (const auto& [key, j] : ledger.link_dir_j) {
    if (key.first < 0 || key.first >= static_cast<int>(g.links.size()))
      throw ParseError("ledger references unknown link " + num_str(static_cast<std::int64_t>(key.first)));
    NetworkGraph::LinkEdge& e = g.links[key.first];
    e.energy_j += j;
    e.by_source[key.second] += j;
  }
  if (ledger.has_span) {
    if (!g.has_span) {
      g.span_t0_ns = ledger.t0_ns;
      g.span_t1_ns = ledger.t1_ns;
      g.has_span = true;
    } else {
      g.span_t0_ns = std::min(g.span_t0_ns, ledger.t0_ns);
      g.span_t1_ns = std::max(g.span_t1_ns, ledger.t1_ns);
    }
  }
}

namespace {

std::string pct(double part, double total) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%6.2f%%", total > 0 ? 100.0 * part / total : 0.0);
  return buf;
}

} // namespace

std::string text_report(const NetworkGraph& g) {
  std::ostringstream os;
  os << "energy report\n";
  double total = g.total();
  for (const NetworkGraph::CoreNode& c : g.cores)
    os << "core " << c.node_id << '.' << c.core << "  " << eng_joules(c.energy_j) << "  " << pct(c.energy_j, total)
       << '\n';
  for (const NetworkGraph::SwitchNode& s : g.switches)
    os << "switch " << s.node_id << "  " << eng_joules(s.energy_j) << "  " << pct(s.energy_j, total) << '\n';
  for (const NetworkGraph::LinkEdge& l : g.links)
    os << "link " << l.link_id << " (" << l.node_a << "-" << l.node_b << ")  " << eng_joules(l.energy_j) << "  "
       << pct(l.energy_j, total) << '\n';
  os << "total  " << eng_joules(total) << '\n';
  os << "span  " << num_str(g.has_span ? (g.span_t1_ns - g.span_t0_ns) : 0.0) << " ns\n";
  return os.str();
}

namespace {

struct Rgb {
  int r, g, b;
};

std::string lerp_color(Rgb cold, Rgb hot, double energy, std::pair<double, double> range) {
  double u = 0;
  if (range.second > range.first) u = (energy - range.first) / (range.second - range.first);
  u = std::clamp(u, 0.0, 1.0);
  auto mix = [&](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * u)); };
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", mix(cold.r, hot.r), mix(cold.g, hot.g), mix(cold.b, hot.b));
  return buf;
}

template <typename T, typename F>
std::pair<double, double> energy_range(const std::vector<T>& v, F get) {
  if (v.empty()) return {0, 0};
  double lo = get(v.front()), hi = get(v.front());
  for (const T& e : v) {
    lo = std::min(lo, get(e));
    hi = std::max(hi, get(e));
  }
  return {lo, hi};
}

} // namespace

std::string emit_visualization(const NetworkGraph& g, const VizScale& scale) {
  constexpr Rgb kCoreCold{0x00, 0xc0, 0x00}, kCoreHot{0xff, 0x00, 0x00};
  constexpr Rgb kSwitchCold{0x40, 0x40, 0xff}, kSwitchHot{0xff, 0xc0, 0xcb};
  constexpr Rgb kLinkCold{0xc0, 0xc0, 0xc0}, kLinkHot{0xff, 0xa5, 0x00};

  auto cores_range = scale.cores.value_or(
      energy_range(g.cores, [](const NetworkGraph::CoreNode& c) { return c.energy_j; }));
  auto switches_range = scale.switches.value_or(
      energy_range(g.switches, [](const NetworkGraph::SwitchNode& s) { return s.energy_j; }));
  auto links_range =
      scale.links.value_or(energy_range(g.links, [](const NetworkGraph::LinkEdge& l) { return l.energy_j; }));

  std::ostringstream os;
  os << "graph energy {\n";
  os << "  // scale cores " << num_str(cores_range.first) << ' ' << num_str(cores_range.second) << " J\n";
  os << "  // scale switches " << num_str(switches_range.first) << ' ' << num_str(switches_range.second) << " J\n";
  os << "  // scale links " << num_str(links_range.first) << ' ' << num_str(links_range.second) << " J\n";
  os << "  node [fontname=\"sans\" style=filled];\n";
  for (const NetworkGraph::SwitchNode& s : g.switches) {
    os << "  s" << s.node_id << " [shape=box label=\"switch " << s.node_id << "\\n" << eng_joules(s.energy_j)
       << "\\nlinks out " << eng_joules(g.outbound_link_energy(s.node_id)) << "\" fillcolor=\""
       << lerp_color(kSwitchCold, kSwitchHot, s.energy_j, switches_range) << "\"];\n";
  }
  for (const NetworkGraph::CoreNode& c : g.cores) {
    os << "  c" << c.node_id << "_" << c.core << " [shape=ellipse label=\"core " << c.node_id << '.' << c.core
       << "\\n" << eng_joules(c.energy_j) << "\" fillcolor=\"" << lerp_color(kCoreCold, kCoreHot, c.energy_j, cores_range)
       << "\"];\n";
  }
  for (const NetworkGraph::CoreNode& c : g.cores)
    os << "  s" << c.node_id << " -- c" << c.node_id << "_" << c.core << " [style=dashed];\n";
  for (const NetworkGraph::LinkEdge& l : g.links) {
    os << "  s" << l.node_a << " -- s" << l.node_b << " [label=\"" << eng_joules(l.energy_j) << "\" color=\""
       << lerp_color(kLinkCold, kLinkHot, l.energy_j, links_range) << "\" penwidth=2];\n";
  }
  os << "}\n";
  return os.str();
}

} // namespace netwatt
