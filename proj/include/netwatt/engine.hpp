#ifndef NETWATT_ENGINE_HPP
#define NETWATT_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include "netwatt/core_sim.hpp"
#include "netwatt/net_sim.hpp"
#include "netwatt/platform.hpp"
#include "netwatt/program.hpp"
#include "netwatt/trace.hpp"

namespace netwatt {

enum class StopReason { Completed, CycleLimit, Deadlock };

struct SimResult {
  std::vector<TraceEvent> events; // merged, (time, node, core, thread) ordered
  StopReason reason = StopReason::Completed;
  std::vector<TrapEvent> traps;
  std::map<std::pair<int, int>, std::uint64_t> core_cycles; // (node, core) -> cycles elapsed
  double end_time_ns = 0;
  std::string diagnostic;
};

// Synthetic traffic source for network-level tests: pushes `words` words (plus
// header/END framing) through a chanend without any instruction stream.
struct Injection {
  int global_core = 0;
  int ce = 0;
  int words = 0;
  std::uint64_t start_tick = 0;
  bool close_route = true;
  bool header_pushed = false;
  bool end_pushed = false;
  int bytes_left = 0;
  std::uint32_t next_value = 0;
  bool started = false;
};

// Whole-platform simulator: all cores and switches advance under one event
// queue with a deterministic total order on (tick, sequence). One tick is
// 1/lcm(all PLL frequencies) seconds so every clock edge lands on the grid.
class Engine {
 public:
  // Copies the platform and program; the IsaTable must outlive the engine
  // (instruction specs are shared by pointer).
  Engine(const PlatformDesc& platform, const Program& program, const IsaTable& isa = IsaTable::builtin());
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // Enables per-event flow-control invariant checks (throws SimError).
  void set_validate(bool v) { validate_ = v; }

  void connect(int core_a, int ce_a, int core_b, int ce_b); // global core indexes
  void set_auto_drain(int global_core, int ce, bool v);
  void inject(int global_core, int ce, int words, std::uint64_t start_core_cycle, bool close_route = true);

  SimResult run(std::uint64_t cycle_limit = 100000000);

  // introspection for tests
  const CoreState& core_at(int global_core) const { return cores_[global_core]; }
  const ThreadState& thread_at(int global_core, int tid) const;
  const std::vector<LinkDir>& link_dirs() const { return link_dirs_; }
  double ns_per_tick() const { return ns_per_tick_; }
  std::uint64_t core_period_ticks(int global_core) const { return cores_meta_[global_core].period_ticks; }

 private:
  struct Ev {
    std::uint64_t tick;
    std::uint64_t seq;
    int kind; // 0 = core issue, 1 = link arrival, 2 = injection start
    int a = 0;
    std::uint64_t b = 0;
    bool operator>(const Ev& o) const { return tick != o.tick ? tick > o.tick : seq > o.seq; }
  };
  struct CoreMeta {
    int node = 0;
    int local = 0;
    std::uint64_t period_ticks = 1;
    int threads_limit = 8;
  };
  struct TimedEvent {
    std::uint64_t tick;
    int node;
    int core;
    int thread;
    std::uint64_t seq;
    TraceEvent ev;
  };

  PlatformDesc platform_;
  Program program_;
  const IsaTable& isa_;
  bool validate_ = false;

  std::vector<CoreState> cores_;
  std::vector<CoreMeta> cores_meta_;
  std::map<std::pair<int, int>, int> core_index_; // (node, local) -> global
  std::vector<SwitchState> switches_;
  std::map<int, int> switch_index_; // node id -> index
  std::vector<LinkDir> link_dirs_;  // 2 per platform link, [2k] = a->b
  std::vector<Injection> injections_;

  std::uint64_t lcm_hz_ = 0;
  double ns_per_tick_ = 0;
  std::uint64_t seq_ = 0;
  std::priority_queue<Ev, std::vector<Ev>, std::greater<Ev>> queue_;
  std::vector<TimedEvent> trace_;
  std::vector<TrapEvent> traps_;
  std::uint64_t now_tick_ = 0;

  // --- helpers ---
  int global_core_checked(int core, int line_hint) const;
  Chanend& chanend_at(const ChanId& id);
  Chanend& chanend_at(int global_core, int ce);
  int reverse_dir(int ld) const { return ld ^ 1; }
  std::uint64_t tt_ticks(const LinkDir& ld) const;
  std::uint64_t switch_period_ticks(int node) const;

  void push_event(std::uint64_t tick, int kind, int a, std::uint64_t b);
  void schedule_core_check(int gcore, std::uint64_t cycle);
  void record_instr(int gcore, const ThreadState& t, std::uint64_t cycle, const std::string& mn, int n_active,
                    bool fnop, int res);
  void record_token(int node, int link, TokenKind kind, int dest_node, std::uint64_t tick);
  void record_trap(int gcore, int thread, const std::string& cause, std::uint64_t tick);

  void handle_core_issue(int gcore, std::uint64_t cycle);
  void issue_thread(int gcore, ThreadState& t, std::uint64_t cycle, int n_active);
  void exec_resource(int gcore, ThreadState& t, const AsmInstr& ai, std::uint64_t cycle);
  void wake_thread(int gcore, ThreadState& t, std::uint64_t tick);
  void advance_pc(ThreadState& t);
  void finish_blocked_out(int gcore, ThreadState& t, std::uint64_t tick);
  bool try_complete_in(int gcore, ThreadState& t, std::uint64_t tick);

  void pump_node(int node, std::uint64_t tick);
  bool try_dispatch(int node, const NetToken& tok, std::uint64_t tick);
  bool deliver_local(int node, const NetToken& tok, std::uint64_t tick);
  bool transmit(int ld_idx, const NetToken& tok, std::uint64_t tick);
  void try_send_hello(int ld_idx, std::uint64_t tick);
  void try_send_credit(int for_dir, std::uint64_t tick);
  void handle_link_arrival(int ld_idx, std::uint64_t tick);
  void pump_injections_for(int gcore, int ce, std::uint64_t tick);
  void after_tx_drain(int gcore, int ce, std::uint64_t tick);
  void check_invariants() const;

  void push_word_tokens(std::vector<NetToken>& out, const Chanend& ce, std::uint32_t word) const;
};

} // namespace netwatt

#endif
