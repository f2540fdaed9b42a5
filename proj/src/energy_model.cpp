#include "netwatt/energy_model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "netwatt/num_io.hpp"

namespace netwatt {

PowerLookup instr_power(std::string_view mnemonic, const EnergyProfile& profile, const RegressionTree& tree,
                        const IsaTable& isa) {
  const InstructionSpec& spec = isa.at(mnemonic);
  const ProfileEntry* e = profile.find(mnemonic);
  if (e && e->tag == Provenance::Measured) return {*e->power_mw, Provenance::Measured};
  return {predict(tree, feature_vector(spec)), Provenance::Estimated};
}

double instr_capacitance(double power_mw, const EnergyProfile& profile, const VfsParams& params, bool* clamped) {
  const OperatingPoint& ref = profile.ref;
  double p_w = power_mw * 1e-3;
  // invert the supply scaling and strip the static terms to reach the
  // dynamic core capacitance the measurement implies
  double supply = ref.vdd * params.i_ext;
  double bracket = params.supply == SupplyModel::Scale ? p_w / supply : p_w / (1.0 + supply);
  double dynamic = bracket - ref.vdd * ref.vdd * params.c_pll * ref.f_pll() - ref.vdd * params.i_leak;
  double c_total = dynamic / (ref.vdd * ref.vdd * ref.f_core());
  double c_instr = c_total - params.c_idle;
  if (clamped) *clamped = c_instr < 0;
  return c_instr < 0 ? 0.0 : c_instr;
}

double instr_energy_j(std::string_view mnemonic, int n_active, const OperatingPoint& op,
                      const EnergyProfile& profile, const VfsParams& params, const RegressionTree& tree,
                      const IsaTable& isa, std::vector<std::string>* warnings) {
  PowerLookup pw = instr_power(mnemonic, profile, tree, isa);
  bool clamped = false;
  double c_instr = instr_capacitance(pw.power_mw, profile, params, &clamped);
  if (clamped && warnings)
    warnings->push_back("instruction " + std::string(mnemonic) +
                        ": profiled power below modeled idle baseline; dynamic capacitance clamped to 0");
  int occupancy = std::min(4, std::max(1, n_active));
  double m = profile.m_table[occupancy - 1];
  double bracket = op.vdd * op.vdd * params.c_pll * op.f_pll() +
                   op.vdd * op.vdd * op.f_core() * (params.c_idle + c_instr) * m * profile.overhead +
                   op.vdd * params.i_leak;
  double supply = op.vdd * params.i_ext;
  double factor = params.supply == SupplyModel::Scale ? supply : 1.0 + supply;
  return bracket * factor * 4.0 * op.t_clk();
}

double EnergyLedger::link_total(int link) const {
  double sum = 0;
  for (const auto& [key, j] : link_dir_j)
    if (key.first == link) sum += j;
  return sum;
}

std::map<int, double> EnergyLedger::link_j() const {
  std::map<int, double> out;
  for (const auto& [key, j] : link_dir_j) out[key.first] += j;
  return out;
}

double EnergyLedger::total() const {
  double sum = 0;
  for (const auto& [k, v] : core_j) sum += v;
  for (const auto& [k, v] : switch_j) sum += v;
  for (const auto& [k, v] : link_dir_j) sum += v;
  return sum;
}

void EnergyLedger::add(const EnergyLedger& other) {
  for (const auto& [k, v] : other.core_j) core_j[k] += v;
  for (const auto& [k, per_mn] : other.core_mnemonic_j)
    for (const auto& [mn, v] : per_mn) core_mnemonic_j[k][mn] += v;
  for (const auto& [k, v] : other.switch_j) switch_j[k] += v;
  for (const auto& [k, v] : other.link_dir_j) link_dir_j[k] += v;
  if (other.has_span) {
    if (!has_span) {
      t0_ns = other.t0_ns;
      t1_ns = other.t1_ns;
      has_span = true;
    } else {
      t0_ns = std::min(t0_ns, other.t0_ns);
      t1_ns = std::max(t1_ns, other.t1_ns);
    }
  }
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
}

EnergyLedger analyze_trace(const std::vector<TraceEvent>& events, const PlatformDesc& platform,
                           const EnergyProfile& profile, const VfsParams& params, const RegressionTree& tree,
                           const IsaTable& isa, const std::map<int, OperatingPoint>& op_overrides) {
  EnergyLedger ledger;
  auto op_of = [&](int node) -> OperatingPoint {
    auto it = op_overrides.find(node);
    if (it != op_overrides.end()) return it->second;
    const NodeDesc* n = platform.find_node(node);
    if (!n) throw ParseError("trace references unknown node " + num_str(static_cast<std::int64_t>(node)));
    return n->op;
  };

  // (mnemonic, occupancy, node) -> J; occupancy saturates at 4 so the cache
  // stays small even for long traces
  std::map<std::tuple<std::string, int, int>, double> cache;
  std::set<std::string> warned;
  std::set<std::pair<int, int>> cores_seen;

  for (const TraceEvent& ev : events) {
    if (!ledger.has_span) {
      ledger.t0_ns = ledger.t1_ns = event_time_ns(ev);
      ledger.has_span = true;
    } else {
      ledger.t0_ns = std::min(ledger.t0_ns, event_time_ns(ev));
      ledger.t1_ns = std::max(ledger.t1_ns, event_time_ns(ev));
    }
    if (const auto* ie = std::get_if<InstructionEvent>(&ev)) {
      const NodeDesc* n = platform.find_node(ie->node);
      if (!n) throw ParseError("trace references unknown node " + num_str(static_cast<std::int64_t>(ie->node)));
      if (ie->core < 0 || ie->core >= n->cores)
        throw ParseError("trace references unknown core on node " + num_str(static_cast<std::int64_t>(ie->node)));
      int occupancy = std::min(4, std::max(1, ie->n_active));
      auto key = std::make_tuple(ie->mnemonic, occupancy, ie->node);
      auto it = cache.find(key);
      double e;
      if (it != cache.end()) {
        e = it->second;
      } else {
        std::vector<std::string> w;
        e = instr_energy_j(ie->mnemonic, occupancy, op_of(ie->node), profile, params, tree, isa, &w);
        for (std::string& msg : w)
          if (warned.insert(msg).second) ledger.warnings.push_back(msg);
        cache.emplace(key, e);
      }
      ledger.core_j[{ie->node, ie->core}] += e;
      ledger.core_mnemonic_j[{ie->node, ie->core}][ie->mnemonic] += e;
      cores_seen.insert({ie->node, ie->core});
    } else if (const auto* te = std::get_if<TokenEvent>(&ev)) {
      if (!platform.find_node(te->src_node))
        throw ParseError("trace references unknown node " + num_str(static_cast<std::int64_t>(te->src_node)));
      if (te->link < 0 || te->link >= static_cast<int>(platform.links.size()))
        throw ParseError("trace references unknown link " + num_str(static_cast<std::int64_t>(te->link)));
      ledger.switch_j[te->src_node] += profile.e_switch_j;
      ledger.link_dir_j[{te->link, te->src_node}] += profile.e_link_j;
    }
  }

  // cores that executed nothing dissipate idle power for the whole window
  double span = ledger.span_s();
  if (span > 0) {
    for (const NodeDesc& n : platform.nodes) {
      for (int c = 0; c < n.cores; c++) {
        if (cores_seen.count({n.id, c})) continue;
        ledger.core_j[{n.id, c}] += idle_power_watts(op_of(n.id), params) * span;
      }
    }
  }
  return ledger;
}

std::string print_ledger(const EnergyLedger& l) {
  std::ostringstream os;
  os << "version 1\n";
  os << "span " << num_str(l.t0_ns) << ' ' << num_str(l.t1_ns) << '\n';
  for (const auto& [k, v] : l.core_j) os << "core " << k.first << ' ' << k.second << ' ' << num_str(v) << '\n';
  for (const auto& [k, per_mn] : l.core_mnemonic_j)
    for (const auto& [mn, v] : per_mn)
      os << "coremn " << k.first << ' ' << k.second << ' ' << mn << ' ' << num_str(v) << '\n';
  for (const auto& [k, v] : l.switch_j) os << "switch " << k << ' ' << num_str(v) << '\n';
  for (const auto& [k, v] : l.link_dir_j)
    os << "linkdir " << k.first << ' ' << k.second << ' ' << num_str(v) << '\n';
  return os.str();
}

EnergyLedger parse_ledger(std::string_view text) {
  EnergyLedger l;
  bool saw_version = false;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    line_no++;
    std::string_view rest = line, tok;
    if (!next_token(rest, tok)) continue;
    auto want_i64 = [&](const char* what) {
      std::string_view t;
      std::int64_t v;
      if (!next_token(rest, t) || !parse_i64(t, v)) throw ParseError(std::string("expected ") + what, line_no);
      return v;
    };
    auto want_double = [&](const char* what) {
      std::string_view t;
      double v;
      if (!next_token(rest, t) || !parse_double(t, v)) throw ParseError(std::string("expected ") + what, line_no);
      return v;
    };
    if (tok == "version") {
      saw_version = true;
    } else if (tok == "span") {
      l.t0_ns = want_double("start time");
      l.t1_ns = want_double("end time");
      l.has_span = true;
    } else if (tok == "core") {
      int node = static_cast<int>(want_i64("node"));
      int core = static_cast<int>(want_i64("core"));
      l.core_j[{node, core}] = want_double("energy");
    } else if (tok == "coremn") {
      int node = static_cast<int>(want_i64("node"));
      int core = static_cast<int>(want_i64("core"));
      std::string_view mn;
      if (!next_token(rest, mn)) throw ParseError("expected mnemonic", line_no);
      l.core_mnemonic_j[{node, core}][std::string(mn)] = want_double("energy");
    } else if (tok == "switch") {
      int node = static_cast<int>(want_i64("node"));
      l.switch_j[node] = want_double("energy");
    } else if (tok == "linkdir") {
      int link = static_cast<int>(want_i64("link"));
      int src = static_cast<int>(want_i64("source node"));
      l.link_dir_j[{link, src}] = want_double("energy");
    } else {
      throw ParseError("unknown record '" + std::string(tok) + "'", line_no);
    }
  }
  if (!saw_version) throw ParseError("ledger file missing version header");
  return l;
}

} // namespace netwatt
