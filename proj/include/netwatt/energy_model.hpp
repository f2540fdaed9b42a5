#ifndef NETWATT_ENERGY_MODEL_HPP
#define NETWATT_ENERGY_MODEL_HPP

#include <map>
#include <string>
#include <vector>

#include "netwatt/platform.hpp"
#include "netwatt/profile.hpp"
#include "netwatt/regression_tree.hpp"
#include "netwatt/trace.hpp"
#include "netwatt/vfs.hpp"

namespace netwatt {

struct PowerLookup {
  double power_mw = 0;
  Provenance provenance = Provenance::Estimated;
};

// Direct measurement when the profile has one, regression-tree estimate
// otherwise. FNOPs default to the tree with features [1,0,0,0,0,0].
PowerLookup instr_power(std::string_view mnemonic, const EnergyProfile& profile, const RegressionTree& tree,
                        const IsaTable& isa);

// Effective switched capacitance of one instruction, inverted from its
// reference-point power through the supply model; clamped at zero (with a
// warning) when the profiled power sits below the modeled idle baseline.
double instr_capacitance(double power_mw, const EnergyProfile& profile, const VfsParams& params, bool* clamped);

// Energy of one instruction issue at an operating point (covers the four
// pipeline-depth cycles the issue occupies).
double instr_energy_j(std::string_view mnemonic, int n_active, const OperatingPoint& op,
                      const EnergyProfile& profile, const VfsParams& params, const RegressionTree& tree,
                      const IsaTable& isa, std::vector<std::string>* warnings = nullptr);

struct EnergyLedger {
  std::map<std::pair<int, int>, double> core_j; // (node, core)
  std::map<std::pair<int, int>, std::map<std::string, double>> core_mnemonic_j;
  std::map<int, double> switch_j;                  // node id
  std::map<std::pair<int, int>, double> link_dir_j; // (link id, source node)
  double t0_ns = 0, t1_ns = 0;
  bool has_span = false;
  std::vector<std::string> warnings;

  double link_total(int link) const;
  std::map<int, double> link_j() const;
  double total() const;
  double span_s() const { return has_span ? (t1_ns - t0_ns) * 1e-9 : 0.0; }
  void add(const EnergyLedger& other); // element-wise accumulation
};

// Attributes a trace: instruction events to their core, token events to the
// source switch and traversed link; cores with no instruction events accrue
// idle power over the window span.
EnergyLedger analyze_trace(const std::vector<TraceEvent>& events, const PlatformDesc& platform,
                           const EnergyProfile& profile, const VfsParams& params, const RegressionTree& tree,
                           const IsaTable& isa,
                           const std::map<int, OperatingPoint>& op_overrides = {});

EnergyLedger parse_ledger(std::string_view text);
std::string print_ledger(const EnergyLedger& l);

} // namespace netwatt

#endif
