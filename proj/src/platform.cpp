#include "netwatt/platform.hpp"

#include <set>
#include <sstream>

#include "netwatt/isa.hpp"
#include "netwatt/num_io.hpp"

namespace netwatt {

const NodeDesc* PlatformDesc::find_node(int id) const {
  for (const NodeDesc& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

int PlatformDesc::total_cores() const {
  int c = 0;
  for (const NodeDesc& n : nodes) c += n.cores;
  return c;
}

bool PlatformDesc::global_core(int index, int& node_id, int& local_core) const {
  for (const NodeDesc& n : nodes) {
    if (index < n.cores) {
      node_id = n.id;
      local_core = index;
      return true;
    }
    index -= n.cores;
  }
  return false;
}

void PlatformDesc::validate() const {
  if (id_bits < 1 || id_bits > 16) throw ParseError("idbits must be 1-16");
  if (divide_cycles < 0) throw ParseError("dividecycles must be >= 0");
  std::set<int> ids;
  for (const NodeDesc& n : nodes) {
    if (!ids.insert(n.id).second) throw ParseError("duplicate node id " + num_str(static_cast<std::int64_t>(n.id)));
    if (n.id < 0 || n.id >= (1 << id_bits))
      throw ParseError("node id " + num_str(static_cast<std::int64_t>(n.id)) + " exceeds idbits width");
    if (n.cores < 1) throw ParseError("node must have at least one core");
    if (n.threads_per_core < 1 || n.threads_per_core > 8) throw ParseError("threads per core must be 1-8");
    if (n.op.divider < 1) throw ParseError("core divider must be >= 1");
    if (n.op.vdd < vdd_min || n.op.vdd > vdd_max)
      throw ParseError("node voltage outside configured safe range");
    if (n.op.fpll_hz == 0) throw ParseError("fpll must be positive");
    for (const auto& [bit, dir] : n.dir_bits)
      if (bit < 0 || bit >= id_bits) throw ParseError("direction bit outside idbits width");
  }
  for (const LinkDesc& l : links) {
    const NodeDesc* a = find_node(l.node_a);
    const NodeDesc* b = find_node(l.node_b);
    if (!a || !b) throw ParseError("link references undeclared node");
    if (l.node_a == l.node_b) throw ParseError("link endpoints must differ");
    if (l.buffer < 1) throw ParseError("link buffer capacity must be >= 1");
    if (l.inter_symbol_delay < 0 || l.inter_token_delay < 0) throw ParseError("link delays must be >= 0");
  }
}

PlatformDesc parse_platform(std::string_view text) {
  PlatformDesc p;
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

    auto want_u64 = [&](const char* what) {
      std::string_view t;
      std::uint64_t v;
      if (!next_token(rest, t) || !parse_u64(t, v)) throw ParseError(std::string("expected ") + what, line_no);
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
    } else if (tok == "idbits") {
      p.id_bits = static_cast<int>(want_u64("id bit width"));
    } else if (tok == "routebits") {
      std::string_view v;
      if (!next_token(rest, v)) throw ParseError("routebits needs msb|lsb", line_no);
      if (v == "msb") p.route_policy = RouteBitPolicy::Msb;
      else if (v == "lsb") p.route_policy = RouteBitPolicy::Lsb;
      else throw ParseError("routebits must be msb or lsb", line_no);
    } else if (tok == "dividecycles") {
      p.divide_cycles = static_cast<int>(want_u64("divide cycle count"));
    } else if (tok == "vddrange") {
      p.vdd_min = want_double("vdd min");
      p.vdd_max = want_double("vdd max");
    } else if (tok == "node") {
      NodeDesc n;
      n.id = static_cast<int>(want_u64("node id"));
      while (next_token(rest, tok)) {
        if (tok == "cores") n.cores = static_cast<int>(want_u64("core count"));
        else if (tok == "threads") n.threads_per_core = static_cast<int>(want_u64("thread count"));
        else if (tok == "vdd") n.op.vdd = want_double("voltage");
        else if (tok == "fpll") n.op.fpll_hz = want_u64("pll frequency");
        else if (tok == "divider") n.op.divider = static_cast<int>(want_u64("divider"));
        else throw ParseError("unknown node attribute '" + std::string(tok) + "'", line_no);
      }
      p.nodes.push_back(std::move(n));
    } else if (tok == "dir") {
      int id = static_cast<int>(want_u64("node id"));
      int bit = static_cast<int>(want_u64("bit position"));
      std::string_view name;
      if (!next_token(rest, name)) throw ParseError("dir needs a direction name", line_no);
      bool found = false;
      for (NodeDesc& n : p.nodes) {
        if (n.id != id) continue;
        if (!n.dir_bits.emplace(bit, std::string(name)).second)
          throw ParseError("duplicate direction bit", line_no);
        found = true;
      }
      if (!found) throw ParseError("dir references undeclared node", line_no);
    } else if (tok == "link") {
      LinkDesc l;
      auto parse_end = [&](int& node, std::string& dir) {
        std::string_view t;
        if (!next_token(rest, t)) throw ParseError("link endpoint missing", line_no);
        size_t colon = t.find(':');
        std::uint64_t id;
        if (colon == std::string_view::npos || !parse_u64(t.substr(0, colon), id) || colon + 1 >= t.size())
          throw ParseError("link endpoint must be <node>:<direction>", line_no);
        node = static_cast<int>(id);
        dir = std::string(t.substr(colon + 1));
      };
      parse_end(l.node_a, l.dir_a);
      parse_end(l.node_b, l.dir_b);
      std::string_view mode;
      if (!next_token(rest, mode)) throw ParseError("link needs a wire mode", line_no);
      if (mode == "2w") l.mode = WireMode::TwoWire;
      else if (mode == "5w") l.mode = WireMode::FiveWire;
      else throw ParseError("wire mode must be 2w or 5w", line_no);
      l.inter_symbol_delay = static_cast<int>(want_u64("inter-symbol delay"));
      l.inter_token_delay = static_cast<int>(want_u64("inter-token delay"));
      while (next_token(rest, tok)) {
        if (tok == "buffer") l.buffer = static_cast<int>(want_u64("buffer capacity"));
        else throw ParseError("unknown link attribute '" + std::string(tok) + "'", line_no);
      }
      p.links.push_back(std::move(l));
    } else {
      throw ParseError("unknown record '" + std::string(tok) + "'", line_no);
    }
  }
  if (!saw_version) throw ParseError("platform file missing version header");
  p.validate();
  return p;
}

std::string print_platform(const PlatformDesc& p) {
  std::ostringstream os;
  os << "version 1\n";
  os << "idbits " << p.id_bits << '\n';
  os << "routebits " << (p.route_policy == RouteBitPolicy::Msb ? "msb" : "lsb") << '\n';
  os << "dividecycles " << p.divide_cycles << '\n';
  os << "vddrange " << num_str(p.vdd_min) << ' ' << num_str(p.vdd_max) << '\n';
  for (const NodeDesc& n : p.nodes) {
    os << "node " << n.id << " cores " << n.cores << " threads " << n.threads_per_core << " vdd "
       << num_str(n.op.vdd) << " fpll " << num_str(n.op.fpll_hz) << " divider " << n.op.divider << '\n';
    for (const auto& [bit, dir] : n.dir_bits) os << "dir " << n.id << ' ' << bit << ' ' << dir << '\n';
  }
  for (const LinkDesc& l : p.links) {
    os << "link " << l.node_a << ':' << l.dir_a << ' ' << l.node_b << ':' << l.dir_b << ' '
       << (l.mode == WireMode::TwoWire ? "2w" : "5w") << ' ' << l.inter_symbol_delay << ' ' << l.inter_token_delay
       << " buffer " << l.buffer << '\n';
  }
  return os.str();
}

} // namespace netwatt
