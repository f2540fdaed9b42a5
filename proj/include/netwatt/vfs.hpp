#ifndef NETWATT_VFS_HPP
#define NETWATT_VFS_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace netwatt {

// (voltage, PLL frequency, core divider) configuration. Switches run at the
// PLL frequency, cores at fpll/divider.
struct OperatingPoint {
  double vdd = 1.0;
  std::uint64_t fpll_hz = 500000000;
  int divider = 1;

  double f_pll() const { return static_cast<double>(fpll_hz); }
  double f_core() const { return static_cast<double>(fpll_hz) / divider; }
  double t_clk() const { return static_cast<double>(divider) / static_cast<double>(fpll_hz); }

  bool operator==(const OperatingPoint&) const = default;
};

// How the supply-scaling coefficient enters the power equation. Scale is the
// literal reading (the whole bracket multiplied by V*I_ext); Affine treats it
// as a loss on top of the bracket (multiplied by 1 + V*I_ext).
enum class SupplyModel { Scale, Affine };

// Fitted capacitance/leakage constants. c_hot is carried for validation only
// and never enters the energy model.
struct VfsParams {
  double c_pll = 0;  // F, characteristic capacitance at the PLL frequency
  double c_idle = 0; // F, characteristic core capacitance at idle
  double i_leak = 0; // A, static leakage
  double i_ext = 0;  // dimensionless supply scaling
  double c_hot = -1; // F, optional; < 0 = absent
  SupplyModel supply = SupplyModel::Scale;
};

double idle_power_watts(const OperatingPoint& op, const VfsParams& p);
// Explicit-frequency variant for property checks where f_core is swept
// independently of the divider grid.
double idle_power_watts(double vdd, double f_pll, double f_core, const VfsParams& p);

struct VfsObservation {
  OperatingPoint op;
  double watts = 0;
};

struct VfsFitResult {
  VfsParams params;
  double mse = 0; // mean squared relative error
  int iterations = 0;
  bool converged = false;
};

// Derivative-free simplex fit of idle_power_watts against observations,
// minimising mean squared relative error. Deterministic: fixed initial simplex
// at [1e-9, 1e-9, 0.1, 0.1] with 5% per-axis displacement, at most 10000
// iterations, stopping at 1e-12 relative simplex spread. Requires >= 4
// observations spanning >= 2 voltages and >= 2 core frequencies.
VfsFitResult fit_vfs_params(const std::vector<VfsObservation>& obs, SupplyModel supply = SupplyModel::Scale);

// Params file (one constant per line).
VfsParams parse_vfs_params(std::string_view text);
std::string print_vfs_params(const VfsParams& p);

// Observation file: "obs <vdd> <fpll> <divider> <watts>" records.
std::vector<VfsObservation> parse_vfs_observations(std::string_view text);
std::string print_vfs_observations(const std::vector<VfsObservation>& obs);

} // namespace netwatt

#endif
