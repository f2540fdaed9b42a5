#ifndef NETWATT_PROFILE_HPP
#define NETWATT_PROFILE_HPP

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "netwatt/isa.hpp"
#include "netwatt/regression_tree.hpp"
#include "netwatt/vfs.hpp"

namespace netwatt {

enum class Provenance { Measured, Estimated };

struct ProfileEntry {
  Provenance tag = Provenance::Estimated;
  std::optional<double> power_mw; // required for measured entries
};

// Per-mnemonic instruction powers at a reference operating point, the
// parallelism scaling table M, the inter-instruction overhead O, and the
// per-token network costs.
struct EnergyProfile {
  std::map<std::string, ProfileEntry> entries;
  OperatingPoint ref;
  std::array<double, 4> m_table{1, 1, 1, 1}; // indexed by pipeline occupancy 1-4
  double overhead = 1.0;
  double e_switch_j = 0;
  double e_link_j = 0;

  const ProfileEntry* find(std::string_view mnemonic) const;
  // Training data for the regression tree: measured entries only.
  std::vector<EnergySample> measured_samples(const IsaTable& isa) const;
  void validate(const IsaTable& isa) const;
};

EnergyProfile parse_profile(std::string_view text);
std::string print_profile(const EnergyProfile& p);

} // namespace netwatt

#endif
