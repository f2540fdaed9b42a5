#ifndef NETWATT_NETGRAPH_HPP
#define NETWATT_NETGRAPH_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netwatt/energy_model.hpp"
#include "netwatt/platform.hpp"

namespace netwatt {

// Platform topology decorated with energy accumulators: one switch node per
// platform node, one core node per core, attachment edges core-switch, one
// edge per inter-switch link.
struct NetworkGraph {
  struct SwitchNode {
    int node_id = 0;
    double energy_j = 0;
  };
  struct CoreNode {
    int node_id = 0;
    int core = 0;
    double energy_j = 0;
  };
  struct LinkEdge {
    int link_id = 0;
    int node_a = 0, node_b = 0;
    double energy_j = 0;
    std::map<int, double> by_source; // source node -> J (outbound attribution)
  };

  std::vector<SwitchNode> switches;
  std::vector<CoreNode> cores;
  std::vector<LinkEdge> links;
  double span_t0_ns = 0, span_t1_ns = 0;
  bool has_span = false;

  double total() const;
  double outbound_link_energy(int node_id) const;
};

NetworkGraph build_graph(const PlatformDesc& platform);

// Accumulates a ledger's energies into the graph; applying several ledgers
// sums element-wise. Unknown ids throw.
void apply_ledger(NetworkGraph& graph, const EnergyLedger& ledger);

// Deterministic per-element breakdown with percentage shares.
std::string text_report(const NetworkGraph& graph);

// Optional shared color scale for cross-run comparison.
struct VizScale {
  std::optional<std::pair<double, double>> cores;
  std::optional<std::pair<double, double>> switches;
  std::optional<std::pair<double, double>> links;
};

// Graphviz-compatible output: cores green (cold) to red (hot), switches blue
// to pink, links fading toward orange, linear in energy per element class.
// Scale bounds are emitted in legend comments so two graphs can share a scale.
std::string emit_visualization(const NetworkGraph& graph, const VizScale& scale = {});

} // namespace netwatt

#endif
