#ifndef NETWATT_TRACE_HPP
#define NETWATT_TRACE_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace netwatt {

// One instruction issue (including synthetic FNOPs). `res` carries the chanend
// index for resource instructions so traces can be windowed on I/O triggers.
struct InstructionEvent {
  double time_ns = 0;
  std::uint64_t cycle = 0; // core cycles
  int node = 0;
  int core = 0;
  int thread = 0;
  std::string mnemonic;
  int n_active = 1; // threads active on the core at issue
  bool fnop = false;
  int res = -1;
};

enum class TokenKind { Data, Hello, Credit, End, Header };
const char* token_kind_name(TokenKind k);
bool token_kind_from_name(std::string_view s, TokenKind& out);

// One token leaving a switch onto an inter-switch link.
struct TokenEvent {
  double time_ns = 0;
  int src_node = 0;
  int link = 0;
  TokenKind kind = TokenKind::Data;
  int dest_node = 0;
};

struct TrapEvent {
  double time_ns = 0;
  int node = 0;
  int core = 0;
  int thread = 0;
  std::string cause;
};

using TraceEvent = std::variant<InstructionEvent, TokenEvent, TrapEvent>;

double event_time_ns(const TraceEvent& ev);

// Line-delimited JSON, one event per line, version header first.
void write_trace(std::ostream& os, const std::vector<TraceEvent>& events);
std::string write_trace(const std::vector<TraceEvent>& events);
std::vector<TraceEvent> read_trace(std::string_view text);

// Windowing trigger: k-th occurrence (1-based) of a mnemonic, optionally
// restricted to a chanend/resource id.
struct TriggerSpec {
  std::string mnemonic;
  int res = -1;       // -1 = any
  int occurrence = 1; // 1-based
};

// "mnemonic[:res[:occ]]"; res "-" means any.
TriggerSpec parse_trigger(std::string_view s);
std::string print_trigger(const TriggerSpec& t);

// Contiguous subsequence [start trigger, end trigger): inclusive of the start
// event, exclusive of the end event. Throws if a trigger cannot be found.
std::vector<TraceEvent> window_trace(const std::vector<TraceEvent>& events, const TriggerSpec& start,
                                     const TriggerSpec& end);

} // namespace netwatt

#endif
