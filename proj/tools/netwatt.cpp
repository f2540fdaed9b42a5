#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "netwatt/energy_model.hpp"
#include "netwatt/engine.hpp"
#include "netwatt/netgraph.hpp"
#include "netwatt/num_io.hpp"
#include "netwatt/profile.hpp"
#include "netwatt/program.hpp"
#include "netwatt/regression_tree.hpp"
#include "netwatt/trace.hpp"
#include "netwatt/vfs.hpp"

using namespace netwatt;

namespace {

// exit codes: 0 ok, 1 usage, 2 parse/config, 3 trap, 4 deadlock, 5 analysis,
// 6 cycle limit
constexpr int kExitParse = 2;
constexpr int kExitTrap = 3;
constexpr int kExitDeadlock = 4;
constexpr int kExitAnalysis = 5;
constexpr int kExitCycleLimit = 6;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << text;
}

IsaTable load_isa(const std::string& path) {
  if (path.empty()) return IsaTable::builtin();
  return IsaTable::parse(slurp(path));
}

std::map<int, OperatingPoint> parse_op_overrides(const std::vector<std::string>& specs, const PlatformDesc& platform) {
  std::map<int, OperatingPoint> out;
  for (const std::string& s : specs) {
    size_t eq = s.find('=');
    size_t c1 = s.find(':', eq + 1);
    size_t c2 = s.find(':', c1 + 1);
    std::uint64_t node, fpll, div;
    double vdd;
    if (eq == std::string::npos || c1 == std::string::npos || c2 == std::string::npos ||
        !parse_u64(std::string_view(s).substr(0, eq), node) ||
        !parse_double(std::string_view(s).substr(eq + 1, c1 - eq - 1), vdd) ||
        !parse_u64(std::string_view(s).substr(c1 + 1, c2 - c1 - 1), fpll) ||
        !parse_u64(std::string_view(s).substr(c2 + 1), div) || div < 1)
      throw ParseError("operating-point override must be <node>=<vdd>:<fpll>:<divider>");
    OperatingPoint op{vdd, fpll, static_cast<int>(div)};
    if (vdd < platform.vdd_min || vdd > platform.vdd_max)
      throw ParseError("override voltage outside the platform's safe range");
    out[static_cast<int>(node)] = op;
  }
  return out;
}

struct AnalyzeInputs {
  PlatformDesc platform;
  EnergyProfile profile;
  VfsParams params;
  RegressionTree tree;
  IsaTable isa;
};

EnergyLedger run_analysis(const AnalyzeInputs& in, const std::vector<TraceEvent>& events,
                          const std::map<int, OperatingPoint>& ops) {
  return analyze_trace(events, in.platform, in.profile, in.params, in.tree, in.isa, ops);
}

std::string render_report(const PlatformDesc& platform, const EnergyLedger& ledger) {
  NetworkGraph g = build_graph(platform);
  apply_ledger(g, ledger);
  return text_report(g);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"trace-driven multi-core simulator and energy modeler"};
  app.require_subcommand(1);

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "run a program on a platform and write a trace");
  std::string sim_platform, sim_program, sim_isa, sim_trace_out;
  std::uint64_t sim_cycle_limit = 100000000;
  sim->add_option("-p,--platform", sim_platform, "platform description file")->required();
  sim->add_option("-P,--program", sim_program, "assembly program")->required();
  sim->add_option("--isa", sim_isa, "instruction table override");
  sim->add_option("-o,--trace-out", sim_trace_out, "trace output file");
  sim->add_option("--cycle-limit", sim_cycle_limit, "core cycle budget");

  // ---- analyze ----
  auto* ana = app.add_subcommand("analyze", "attribute energy to a simulation trace");
  std::string ana_platform, ana_trace, ana_profile, ana_params, ana_isa, ana_tree;
  std::string ana_wstart, ana_wend, ana_ledger_out, ana_report_out;
  std::vector<std::string> ana_ops;
  bool ana_affine = false;
  ana->add_option("-p,--platform", ana_platform)->required();
  ana->add_option("-t,--trace", ana_trace, "trace file")->required();
  ana->add_option("-e,--profile", ana_profile, "energy profile")->required();
  ana->add_option("-v,--params", ana_params, "VFS params file")->required();
  ana->add_option("--isa", ana_isa);
  ana->add_option("--tree", ana_tree, "prebuilt regression tree (default: built from the profile)");
  ana->add_option("--window-start", ana_wstart, "trigger mnemonic[:res[:occ]]");
  ana->add_option("--window-end", ana_wend, "trigger mnemonic[:res[:occ]]");
  ana->add_option("--ledger", ana_ledger_out, "write the ledger file");
  ana->add_option("--report", ana_report_out, "write the text report (default stdout)");
  ana->add_option("--op", ana_ops, "per-node operating point <node>=<vdd>:<fpll>:<divider>");
  ana->add_flag("--supply-affine", ana_affine, "use the affine supply-loss reading");

  // ---- visualize ----
  auto* viz = app.add_subcommand("visualize", "emit a color-scaled topology graph");
  std::string viz_platform, viz_ledger, viz_trace, viz_profile, viz_params, viz_isa, viz_out;
  std::vector<double> viz_scale_cores, viz_scale_switches, viz_scale_links;
  viz->add_option("-p,--platform", viz_platform)->required();
  viz->add_option("-l,--ledger", viz_ledger, "ledger file (or use --trace with model inputs)");
  viz->add_option("-t,--trace", viz_trace);
  viz->add_option("-e,--profile", viz_profile);
  viz->add_option("-v,--params", viz_params);
  viz->add_option("--isa", viz_isa);
  viz->add_option("-o,--out", viz_out, "output .dot file")->required();
  viz->add_option("--scale-cores", viz_scale_cores, "shared scale min max (J)")->expected(2);
  viz->add_option("--scale-switches", viz_scale_switches, "shared scale min max (J)")->expected(2);
  viz->add_option("--scale-links", viz_scale_links, "shared scale min max (J)")->expected(2);

  // ---- report ----
  auto* rep = app.add_subcommand("report", "render a saved ledger as a text report");
  std::string rep_platform, rep_ledger;
  rep->add_option("-p,--platform", rep_platform)->required();
  rep->add_option("-l,--ledger", rep_ledger)->required();

  // ---- build-tree ----
  auto* bt = app.add_subcommand("build-tree", "build the regression tree from a profile");
  std::string bt_profile, bt_isa, bt_out;
  bt->add_option("-e,--profile", bt_profile)->required();
  bt->add_option("--isa", bt_isa);
  bt->add_option("-o,--out", bt_out, "tree output file")->required();

  // ---- fit-vfs ----
  auto* fv = app.add_subcommand("fit-vfs", "fit VFS parameters to idle power observations");
  std::string fv_obs, fv_out;
  bool fv_affine = false;
  fv->add_option("-i,--observations", fv_obs)->required();
  fv->add_option("-o,--out", fv_out, "params output file")->required();
  fv->add_flag("--supply-affine", fv_affine);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      IsaTable isa = load_isa(sim_isa);
      PlatformDesc platform = parse_platform(slurp(sim_platform));
      Program program = parse_program(slurp(sim_program), isa);
      Engine engine(platform, program, isa);
      SimResult result = engine.run(sim_cycle_limit);
      if (!sim_trace_out.empty()) spill(sim_trace_out, write_trace(result.events));
      for (const auto& [key, cycles] : result.core_cycles) {
        const NodeDesc* n = platform.find_node(key.first);
        double ns = static_cast<double>(cycles) * 1e9 * n->op.divider / static_cast<double>(n->op.fpll_hz);
        std::cout << "core " << key.first << '.' << key.second << ": " << num_str(cycles) << " cycles ("
                  << num_str(ns) << " ns)\n";
      }
      if (!result.traps.empty()) {
        for (const TrapEvent& t : result.traps)
          std::cerr << "trap: node " << t.node << " core " << t.core << " thread " << t.thread << ": " << t.cause
                    << '\n';
        return kExitTrap;
      }
      if (result.reason == StopReason::Deadlock) {
        std::cerr << "deadlock detected:\n" << result.diagnostic;
        return kExitDeadlock;
      }
      if (result.reason == StopReason::CycleLimit) {
        std::cerr << "cycle limit of " << sim_cycle_limit << " reached\n";
        return kExitCycleLimit;
      }
      return 0;
    }

    if (ana->parsed()) {
      AnalyzeInputs in;
      in.isa = load_isa(ana_isa);
      in.platform = parse_platform(slurp(ana_platform));
      in.profile = parse_profile(slurp(ana_profile));
      in.profile.validate(in.isa);
      in.params = parse_vfs_params(slurp(ana_params));
      if (ana_affine) in.params.supply = SupplyModel::Affine;
      in.tree = ana_tree.empty() ? build_tree(in.profile.measured_samples(in.isa)) : parse_tree(slurp(ana_tree));
      std::vector<TraceEvent> events = read_trace(slurp(ana_trace));
      if (ana_wstart.empty() != ana_wend.empty())
        throw ParseError("windowing needs both --window-start and --window-end");
      if (!ana_wstart.empty())
        events = window_trace(events, parse_trigger(ana_wstart), parse_trigger(ana_wend));
      EnergyLedger ledger;
      try {
        ledger = run_analysis(in, events, parse_op_overrides(ana_ops, in.platform));
      } catch (const ParseError& e) {
        std::cerr << "analysis error: " << e.what() << '\n';
        return kExitAnalysis;
      }
      for (const std::string& w : ledger.warnings) std::cerr << "warning: " << w << '\n';
      if (!ana_ledger_out.empty()) spill(ana_ledger_out, print_ledger(ledger));
      std::string report = render_report(in.platform, ledger);
      if (ana_report_out.empty()) std::cout << report;
      else spill(ana_report_out, report);
      return 0;
    }

    if (viz->parsed()) {
      PlatformDesc platform = parse_platform(slurp(viz_platform));
      EnergyLedger ledger;
      if (!viz_ledger.empty()) {
        ledger = parse_ledger(slurp(viz_ledger));
      } else {
        if (viz_trace.empty() || viz_profile.empty() || viz_params.empty())
          throw ParseError("visualize needs --ledger or --trace with --profile and --params");
        AnalyzeInputs in;
        in.isa = load_isa(viz_isa);
        in.platform = platform;
        in.profile = parse_profile(slurp(viz_profile));
        in.profile.validate(in.isa);
        in.params = parse_vfs_params(slurp(viz_params));
        in.tree = build_tree(in.profile.measured_samples(in.isa));
        ledger = run_analysis(in, read_trace(slurp(viz_trace)), {});
      }
      NetworkGraph g = build_graph(platform);
      apply_ledger(g, ledger);
      VizScale scale;
      if (!viz_scale_cores.empty()) scale.cores = {viz_scale_cores[0], viz_scale_cores[1]};
      if (!viz_scale_switches.empty()) scale.switches = {viz_scale_switches[0], viz_scale_switches[1]};
      if (!viz_scale_links.empty()) scale.links = {viz_scale_links[0], viz_scale_links[1]};
      spill(viz_out, emit_visualization(g, scale));
      return 0;
    }

    if (rep->parsed()) {
      PlatformDesc platform = parse_platform(slurp(rep_platform));
      std::cout << render_report(platform, parse_ledger(slurp(rep_ledger)));
      return 0;
    }

    if (bt->parsed()) {
      IsaTable isa = load_isa(bt_isa);
      EnergyProfile profile = parse_profile(slurp(bt_profile));
      profile.validate(isa);
      std::vector<EnergySample> samples = profile.measured_samples(isa);
      RegressionTree tree = build_tree(samples);
      spill(bt_out, print_tree(tree));
      std::cout << "nodes " << tree.nodes.size() << " leaves " << tree.leaf_count() << " training-mse "
                << num_str(training_mse(tree, samples)) << '\n';
      return 0;
    }

    if (fv->parsed()) {
      std::vector<VfsObservation> obs = parse_vfs_observations(slurp(fv_obs));
      VfsFitResult fit = fit_vfs_params(obs, fv_affine ? SupplyModel::Affine : SupplyModel::Scale);
      spill(fv_out, print_vfs_params(fit.params));
      std::cout << "mse " << num_str(fit.mse) << " iterations " << fit.iterations
                << (fit.converged ? "" : " (not converged)") << '\n';
      return 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const SimError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
