#include "netwatt/trace.hpp"

#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "netwatt/isa.hpp"
#include "netwatt/num_io.hpp"

namespace netwatt {

namespace {
using json = nlohmann::json;

constexpr std::string_view kHeader = R"({"trace":"netwatt","version":1})";

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

} // namespace

const char* token_kind_name(TokenKind k) {
  switch (k) {
    case TokenKind::Data: return "data";
    case TokenKind::Hello: return "HELLO";
    case TokenKind::Credit: return "CREDIT";
    case TokenKind::End: return "END";
    case TokenKind::Header: return "header";
  }
  return "?";
}

bool token_kind_from_name(std::string_view s, TokenKind& out) {
  if (s == "data") out = TokenKind::Data;
  else if (s == "HELLO") out = TokenKind::Hello;
  else if (s == "CREDIT") out = TokenKind::Credit;
  else if (s == "END") out = TokenKind::End;
  else if (s == "header") out = TokenKind::Header;
  else return false;
  return true;
}

double event_time_ns(const TraceEvent& ev) {
  return std::visit([](const auto& e) { return e.time_ns; }, ev);
}

void write_trace(std::ostream& os, const std::vector<TraceEvent>& events) {
  os << kHeader << '\n';
  for (const TraceEvent& ev : events) {
    if (const auto* ie = std::get_if<InstructionEvent>(&ev)) {
      os << "{\"ev\":\"instr\",\"t\":" << num_str(ie->time_ns) << ",\"cyc\":" << num_str(ie->cycle)
         << ",\"node\":" << ie->node << ",\"core\":" << ie->core << ",\"thread\":" << ie->thread << ",\"mn\":\""
         << escape(ie->mnemonic) << "\",\"na\":" << ie->n_active << ",\"fnop\":" << (ie->fnop ? "true" : "false");
      if (ie->res >= 0) os << ",\"res\":" << ie->res;
      os << "}\n";
    } else if (const auto* te = std::get_if<TokenEvent>(&ev)) {
      os << "{\"ev\":\"token\",\"t\":" << num_str(te->time_ns) << ",\"src\":" << te->src_node
         << ",\"link\":" << te->link << ",\"kind\":\"" << token_kind_name(te->kind) << "\",\"dst\":" << te->dest_node
         << "}\n";
    } else {
      const auto& tr = std::get<TrapEvent>(ev);
      os << "{\"ev\":\"trap\",\"t\":" << num_str(tr.time_ns) << ",\"node\":" << tr.node << ",\"core\":" << tr.core
         << ",\"thread\":" << tr.thread << ",\"cause\":\"" << escape(tr.cause) << "\"}\n";
    }
  }
}

std::string write_trace(const std::vector<TraceEvent>& events) {
  std::ostringstream os;
  write_trace(os, events);
  return os.str();
}

std::vector<TraceEvent> read_trace(std::string_view text) {
  std::vector<TraceEvent> events;
  int line_no = 0;
  size_t pos = 0;
  bool saw_header = false;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    line_no++;
    line = trim(line);
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed trace line: ") + e.what(), line_no);
    }
    try {
      if (!saw_header) {
        if (!j.contains("trace") || j["version"].get<int>() != 1)
          throw ParseError("missing or unsupported trace header", line_no);
        saw_header = true;
        continue;
      }
      std::string kind = j.at("ev").get<std::string>();
      if (kind == "instr") {
        InstructionEvent e;
        e.time_ns = j.at("t").get<double>();
        e.cycle = j.at("cyc").get<std::uint64_t>();
        e.node = j.at("node").get<int>();
        e.core = j.at("core").get<int>();
        e.thread = j.at("thread").get<int>();
        e.mnemonic = j.at("mn").get<std::string>();
        e.n_active = j.at("na").get<int>();
        e.fnop = j.at("fnop").get<bool>();
        if (j.contains("res")) e.res = j["res"].get<int>();
        events.emplace_back(std::move(e));
      } else if (kind == "token") {
        TokenEvent e;
        e.time_ns = j.at("t").get<double>();
        e.src_node = j.at("src").get<int>();
        e.link = j.at("link").get<int>();
        if (!token_kind_from_name(j.at("kind").get<std::string>(), e.kind))
          throw ParseError("unknown token kind", line_no);
        e.dest_node = j.at("dst").get<int>();
        events.emplace_back(e);
      } else if (kind == "trap") {
        TrapEvent e;
        e.time_ns = j.at("t").get<double>();
        e.node = j.at("node").get<int>();
        e.core = j.at("core").get<int>();
        e.thread = j.at("thread").get<int>();
        e.cause = j.at("cause").get<std::string>();
        events.emplace_back(std::move(e));
      } else {
        throw ParseError("unknown event kind '" + kind + "'", line_no);
      }
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed trace line: ") + e.what(), line_no);
    }
  }
  if (!saw_header && !events.empty()) throw ParseError("missing trace header");
  return events;
}

TriggerSpec parse_trigger(std::string_view s) {
  std::vector<std::string_view> parts;
  size_t start = 0;
  while (parts.size() < 3) {
    size_t colon = s.find(':', start);
    if (colon == std::string_view::npos) {
      parts.push_back(s.substr(start));
      break;
    }
    parts.push_back(s.substr(start, colon - start));
    start = colon + 1;
  }
  TriggerSpec t;
  t.mnemonic = std::string(parts[0]);
  if (t.mnemonic.empty()) throw ParseError("trigger needs a mnemonic");
  if (parts.size() > 1 && !parts[1].empty() && parts[1] != "-") {
    std::uint64_t v;
    if (!parse_u64(parts[1], v)) throw ParseError("bad trigger resource id");
    t.res = static_cast<int>(v);
  }
  if (parts.size() > 2) {
    std::uint64_t occ;
    if (!parse_u64(parts[2], occ) || occ == 0) throw ParseError("bad trigger occurrence index");
    t.occurrence = static_cast<int>(occ);
  }
  return t;
}

std::string print_trigger(const TriggerSpec& t) {
  std::string s = t.mnemonic;
  s += ':';
  s += t.res < 0 ? "-" : num_str(static_cast<std::int64_t>(t.res));
  s += ':';
  s += num_str(static_cast<std::int64_t>(t.occurrence));
  return s;
}

namespace {

bool trigger_matches(const TriggerSpec& t, const TraceEvent& ev) {
  const auto* ie = std::get_if<InstructionEvent>(&ev);
  if (!ie) return false;
  if (ie->mnemonic != t.mnemonic) return false;
  if (t.res >= 0 && ie->res != t.res) return false;
  return true;
}

} // namespace

std::vector<TraceEvent> window_trace(const std::vector<TraceEvent>& events, const TriggerSpec& start,
                                     const TriggerSpec& end) {
  size_t start_idx = events.size();
  int seen = 0;
  for (size_t i = 0; i < events.size(); i++) {
    if (trigger_matches(start, events[i]) && ++seen == start.occurrence) {
      start_idx = i;
      break;
    }
  }
  if (start_idx == events.size())
    throw ParseError("start trigger " + print_trigger(start) + " not found in trace");
  size_t end_idx = events.size();
  seen = 0;
  for (size_t i = 0; i < events.size(); i++) {
    if (trigger_matches(end, events[i]) && ++seen == end.occurrence) {
      end_idx = i;
      break;
    }
  }
  if (end_idx == events.size())
    throw ParseError("end trigger " + print_trigger(end) + " not found in trace");
  if (end_idx <= start_idx)
    throw ParseError("end trigger " + print_trigger(end) + " does not follow the start trigger");
  return std::vector<TraceEvent>(events.begin() + start_idx, events.begin() + end_idx);
}

} // namespace netwatt
