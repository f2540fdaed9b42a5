#ifndef NETWATT_CORE_SIM_HPP
#define NETWATT_CORE_SIM_HPP

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <vector>

#include "netwatt/net_sim.hpp"
#include "netwatt/program.hpp"

namespace netwatt {

// Per-thread instruction issue period. The four-stage pipeline hides up to
// four threads; beyond that each thread gets every n-th slot.
inline int issue_interval(int n_active) { return n_active > 4 ? n_active : 4; }

enum class ThreadStatus { Active, BlockedIn, BlockedOut, BlockedSync, Idle };

enum class PendingOp { None, InWord, ChkCt, OutTokens, Join };

constexpr int kIBufCapacity = 4; // half-words (one 64-bit buffer per thread)
constexpr int kNumRegs = 12;

struct ThreadState {
  int id = 0;
  const ThreadStream* stream = nullptr;
  int pc = 0;
  std::array<std::uint32_t, kNumRegs> regs{};
  ThreadStatus status = ThreadStatus::Idle;
  int ibuf_halfwords = 2; // a stream entry behaves like an aligned branch arrival
  std::uint64_t next_issue_cycle = 0;
  std::uint64_t last_wake_tick = 0;
  bool trapped = false;

  // context of a blocking resource op, completed at wake time
  PendingOp pending = PendingOp::None;
  int pending_chanend = -1;
  int pending_reg = -1;
  std::int64_t pending_value = 0;
  std::vector<NetToken> pending_tokens;
};

// True when the instruction buffer cannot supply the next instruction and a
// fetch no-op must be issued first.
inline bool fnop_check(const ThreadState& t, const InstructionSpec& next) {
  return t.ibuf_halfwords < next.length_halfwords();
}

struct CoreState {
  int node = 0;
  int core = 0; // local index within the node
  std::vector<ThreadState> threads;
  int rr_cursor = 0;
  std::uint64_t last_processed_cycle = 0;
  bool any_processed = false;
  std::uint64_t pending_check_cycle = std::uint64_t(-1);
  std::uint64_t last_issue_cycle = 0;
  bool issued_any = false;
  std::vector<std::uint32_t> memory; // 64 KiB word-addressed SRAM
  std::vector<Chanend> chanends;
  std::map<int, std::vector<int>> join_waiting; // participant count -> thread ids

  int active_count() const {
    int n = 0;
    for (const ThreadState& t : threads)
      if (t.status == ThreadStatus::Active) n++;
    return n;
  }
};

} // namespace netwatt

#endif
