#include "netwatt/profile.hpp"

#include <sstream>

#include "netwatt/num_io.hpp"

namespace netwatt {

const ProfileEntry* EnergyProfile::find(std::string_view mnemonic) const {
  auto it = entries.find(std::string(mnemonic));
  return it == entries.end() ? nullptr : &it->second;
}

std::vector<EnergySample> EnergyProfile::measured_samples(const IsaTable& isa) const {
  std::vector<EnergySample> out;
  for (const auto& [mn, e] : entries) {
    if (e.tag != Provenance::Measured) continue;
    EnergySample s;
    s.mnemonic = mn;
    s.features = feature_vector(isa.at(mn));
    s.power_mw = *e.power_mw;
    out.push_back(std::move(s));
  }
  return out;
}

void EnergyProfile::validate(const IsaTable& isa) const {
  for (const auto& [mn, e] : entries) {
    isa.at(mn); // throws on unknown mnemonics
    if (e.tag == Provenance::Measured && (!e.power_mw || *e.power_mw <= 0))
      throw ParseError("measured entry '" + mn + "' needs a positive power");
    if (e.power_mw && *e.power_mw <= 0) throw ParseError("profile power for '" + mn + "' must be positive");
  }
  for (double m : m_table)
    if (m <= 0) throw ParseError("M table entries must be positive");
  if (overhead <= 0) throw ParseError("overhead O must be positive");
  if (e_switch_j < 0 || e_link_j < 0) throw ParseError("token energies must be non-negative");
  if (ref.divider < 1) throw ParseError("reference divider must be >= 1");
}

EnergyProfile parse_profile(std::string_view text) {
  EnergyProfile p;
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
    auto want_double = [&](const char* what) {
      std::string_view t;
      double v;
      if (!next_token(rest, t) || !parse_double(t, v)) throw ParseError(std::string("expected ") + what, line_no);
      return v;
    };
    if (tok == "version") {
      saw_version = true;
    } else if (tok == "refpoint") {
      while (next_token(rest, tok)) {
        if (tok == "vdd") p.ref.vdd = want_double("voltage");
        else if (tok == "fpll") {
          std::string_view t;
          std::uint64_t v;
          if (!next_token(rest, t) || !parse_u64(t, v)) throw ParseError("expected pll frequency", line_no);
          p.ref.fpll_hz = v;
        } else if (tok == "divider") {
          std::string_view t;
          std::uint64_t v;
          if (!next_token(rest, t) || !parse_u64(t, v)) throw ParseError("expected divider", line_no);
          p.ref.divider = static_cast<int>(v);
        } else {
          throw ParseError("unknown refpoint attribute '" + std::string(tok) + "'", line_no);
        }
      }
    } else if (tok == "mtable") {
      for (int i = 0; i < 4; i++) p.m_table[i] = want_double("M value");
    } else if (tok == "overhead") {
      p.overhead = want_double("overhead");
    } else if (tok == "eswitch") {
      p.e_switch_j = want_double("switch energy per token");
    } else if (tok == "elink") {
      p.e_link_j = want_double("link energy per token");
    } else if (tok == "instr") {
      std::string_view mn, tag;
      if (!next_token(rest, mn) || !next_token(rest, tag))
        throw ParseError("instr record needs mnemonic and measured|estimated", line_no);
      ProfileEntry e;
      if (tag == "measured") e.tag = Provenance::Measured;
      else if (tag == "estimated") e.tag = Provenance::Estimated;
      else throw ParseError("tag must be measured or estimated", line_no);
      std::string_view pw;
      if (next_token(rest, pw)) {
        double v;
        if (!parse_double(pw, v)) throw ParseError("bad power value", line_no);
        e.power_mw = v;
      }
      if (e.tag == Provenance::Measured && !e.power_mw)
        throw ParseError("measured entry needs a power value", line_no);
      if (!p.entries.emplace(std::string(mn), e).second)
        throw ParseError("duplicate profile entry '" + std::string(mn) + "'", line_no);
    } else {
      throw ParseError("unknown record '" + std::string(tok) + "'", line_no);
    }
  }
  if (!saw_version) throw ParseError("profile file missing version header");
  return p;
}

std::string print_profile(const EnergyProfile& p) {
  std::ostringstream os;
  os << "version 1\n";
  os << "refpoint vdd " << num_str(p.ref.vdd) << " fpll " << num_str(p.ref.fpll_hz) << " divider " << p.ref.divider
     << '\n';
  os << "mtable";
  for (double m : p.m_table) os << ' ' << num_str(m);
  os << '\n';
  os << "overhead " << num_str(p.overhead) << '\n';
  os << "eswitch " << num_str(p.e_switch_j) << '\n';
  os << "elink " << num_str(p.e_link_j) << '\n';
  for (const auto& [mn, e] : p.entries) {
    os << "instr " << mn << ' ' << (e.tag == Provenance::Measured ? "measured" : "estimated");
    if (e.power_mw) os << ' ' << num_str(*e.power_mw);
    os << '\n';
  }
  return os.str();
}

} // namespace netwatt
