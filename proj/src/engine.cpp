#include "netwatt/engine.hpp"

#include <algorithm>
#include <numeric>

#include "netwatt/num_io.hpp"

namespace netwatt {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return b == 0 ? 0 : (a + b - 1) / b; }
std::string id_str(int v) { return num_str(static_cast<std::int64_t>(v)); }

} // namespace

Engine::Engine(const PlatformDesc& platform, const Program& program, const IsaTable& isa)
    : platform_(platform), program_(program), isa_(isa) {
  platform_.validate();

  // one common tick grid for every switch and core clock
  lcm_hz_ = 1;
  for (const NodeDesc& n : platform_.nodes) {
    lcm_hz_ = std::lcm(lcm_hz_, n.op.fpll_hz);
    if (lcm_hz_ > (std::uint64_t(1) << 48))
      throw SimError("PLL frequencies too heterogeneous for a common clock grid");
  }
  ns_per_tick_ = 1e9 / static_cast<double>(lcm_hz_);

  for (const NodeDesc& n : platform_.nodes) {
    switch_index_[n.id] = static_cast<int>(switches_.size());
    SwitchState sw;
    sw.node_id = n.id;
    sw.dir_bits = n.dir_bits;
    switches_.push_back(std::move(sw));
    for (int c = 0; c < n.cores; c++) {
      core_index_[{n.id, c}] = static_cast<int>(cores_.size());
      CoreState core;
      core.node = n.id;
      core.core = c;
      core.memory.assign(65536 / 4, 0);
      core.threads.resize(n.threads_per_core);
      for (int t = 0; t < n.threads_per_core; t++) core.threads[t].id = t;
      core.chanends.resize(32);
      for (int ce = 0; ce < 32; ce++) core.chanends[ce].id = {n.id, c, ce};
      cores_.push_back(std::move(core));
      CoreMeta meta;
      meta.node = n.id;
      meta.local = c;
      meta.period_ticks = lcm_hz_ / n.op.fpll_hz * static_cast<std::uint64_t>(n.op.divider);
      meta.threads_limit = n.threads_per_core;
      cores_meta_.push_back(meta);
    }
  }

  for (size_t li = 0; li < platform_.links.size(); li++) {
    const LinkDesc& l = platform_.links[li];
    for (int dir = 0; dir < 2; dir++) {
      LinkDir ld;
      ld.link_id = static_cast<int>(li);
      ld.dir = dir;
      ld.from_node = dir == 0 ? l.node_a : l.node_b;
      ld.to_node = dir == 0 ? l.node_b : l.node_a;
      ld.mode = l.mode;
      ld.isd = l.inter_symbol_delay;
      ld.itd = l.inter_token_delay;
      ld.capacity = l.buffer;
      int idx = static_cast<int>(link_dirs_.size());
      link_dirs_.push_back(std::move(ld));
      const std::string& dname = dir == 0 ? l.dir_a : l.dir_b;
      switches_[switch_index_.at(link_dirs_[idx].from_node)].dir_links[dname].push_back(idx);
    }
  }

  for (const ThreadStream& s : program_.threads) {
    int g = global_core_checked(s.core, 0);
    if (s.thread >= cores_meta_[g].threads_limit)
      throw SimError("thread " + id_str(s.thread) + " exceeds the node's hardware thread count");
    ThreadState& t = cores_[g].threads[s.thread];
    t.stream = &s;
    if (!s.instrs.empty()) {
      t.status = ThreadStatus::Active;
      t.next_issue_cycle = 0;
    }
  }
  for (const ChanConnect& c : program_.connects) connect(c.core_a, c.ce_a, c.core_b, c.ce_b);

  for (size_t g = 0; g < cores_.size(); g++)
    if (cores_[g].active_count() > 0) schedule_core_check(static_cast<int>(g), 0);
}

int Engine::global_core_checked(int core, int) const {
  if (core < 0 || core >= static_cast<int>(cores_.size()))
    throw SimError("core index " + id_str(core) + " not present on the platform");
  return core;
}

Chanend& Engine::chanend_at(const ChanId& id) {
  int g = core_index_.at({id.node, id.core});
  return cores_[g].chanends[id.ce];
}

Chanend& Engine::chanend_at(int global_core, int ce) {
  global_core_checked(global_core, 0);
  if (ce < 0 || ce >= 32) throw SimError("chanend index out of range");
  return cores_[global_core].chanends[ce];
}

void Engine::connect(int core_a, int ce_a, int core_b, int ce_b) {
  Chanend& a = chanend_at(core_a, ce_a);
  Chanend& b = chanend_at(core_b, ce_b);
  if (a.connected || b.connected) throw SimError("chanend already connected");
  a.connected = b.connected = true;
  a.dest = b.id;
  b.dest = a.id;
}

void Engine::set_auto_drain(int global_core, int ce, bool v) { chanend_at(global_core, ce).auto_drain = v; }

void Engine::inject(int global_core, int ce, int words, std::uint64_t start_core_cycle, bool close_route) {
  Chanend& c = chanend_at(global_core, ce);
  if (!c.connected) throw SimError("injection chanend is not connected");
  Injection inj;
  inj.global_core = global_core;
  inj.ce = ce;
  inj.words = words;
  inj.bytes_left = words * 4;
  inj.close_route = close_route;
  inj.start_tick = start_core_cycle * cores_meta_[global_core].period_ticks;
  injections_.push_back(inj);
  push_event(inj.start_tick, 2, static_cast<int>(injections_.size()) - 1, 0);
}

std::uint64_t Engine::tt_ticks(const LinkDir& ld) const {
  return token_transmit_cycles(ld) * switch_period_ticks(ld.from_node);
}

std::uint64_t Engine::switch_period_ticks(int node) const {
  return lcm_hz_ / platform_.find_node(node)->op.fpll_hz;
}

void Engine::push_event(std::uint64_t tick, int kind, int a, std::uint64_t b) {
  queue_.push(Ev{tick, seq_++, kind, a, b});
}

void Engine::schedule_core_check(int gcore, std::uint64_t cycle) {
  CoreState& core = cores_[gcore];
  if (cycle >= core.pending_check_cycle) return;
  core.pending_check_cycle = cycle;
  push_event(cycle * cores_meta_[gcore].period_ticks, 0, gcore, cycle);
}

void Engine::record_instr(int gcore, const ThreadState& t, std::uint64_t cycle, const std::string& mn, int n_active,
                          bool fnop, int res) {
  const CoreMeta& meta = cores_meta_[gcore];
  std::uint64_t tick = cycle * meta.period_ticks;
  InstructionEvent ev;
  ev.time_ns = static_cast<double>(tick) * ns_per_tick_;
  ev.cycle = cycle;
  ev.node = meta.node;
  ev.core = meta.local;
  ev.thread = t.id;
  ev.mnemonic = mn;
  ev.n_active = n_active;
  ev.fnop = fnop;
  ev.res = res;
  trace_.push_back({tick, meta.node, meta.local, t.id, seq_++, TraceEvent(std::move(ev))});
}

void Engine::record_token(int node, int link, TokenKind kind, int dest_node, std::uint64_t tick) {
  TokenEvent ev;
  ev.time_ns = static_cast<double>(tick) * ns_per_tick_;
  ev.src_node = node;
  ev.link = link;
  ev.kind = kind;
  ev.dest_node = dest_node;
  trace_.push_back({tick, node, -1, -1, seq_++, TraceEvent(ev)});
}

void Engine::record_trap(int gcore, int thread, const std::string& cause, std::uint64_t tick) {
  const CoreMeta& meta = cores_meta_[gcore];
  TrapEvent ev;
  ev.time_ns = static_cast<double>(tick) * ns_per_tick_;
  ev.node = meta.node;
  ev.core = meta.local;
  ev.thread = thread;
  ev.cause = cause;
  traps_.push_back(ev);
  trace_.push_back({tick, meta.node, meta.local, thread, seq_++, TraceEvent(ev)});
  ThreadState& t = cores_[gcore].threads[thread];
  t.status = ThreadStatus::Idle;
  t.trapped = true;
  t.pending = PendingOp::None;
}

const ThreadState& Engine::thread_at(int global_core, int tid) const { return cores_[global_core].threads[tid]; }

// ---------------------------------------------------------------------------
// core issue path

void Engine::handle_core_issue(int gcore, std::uint64_t cycle) {
  CoreState& core = cores_[gcore];
  if (core.any_processed && cycle <= core.last_processed_cycle) return;
  core.any_processed = true;
  core.last_processed_cycle = cycle;
  if (core.pending_check_cycle == cycle) core.pending_check_cycle = std::uint64_t(-1);

  int n_active = core.active_count();
  if (n_active > 0) {
    int n_threads = static_cast<int>(core.threads.size());
    for (int k = 0; k < n_threads; k++) {
      int idx = (core.rr_cursor + k) % n_threads;
      ThreadState& t = core.threads[idx];
      if (t.status != ThreadStatus::Active || t.next_issue_cycle > cycle) continue;
      core.rr_cursor = (idx + 1) % n_threads;
      issue_thread(gcore, t, cycle, n_active);
      core.last_issue_cycle = cycle;
      core.issued_any = true;
      break;
    }
  }

  std::uint64_t next = std::uint64_t(-1);
  for (const ThreadState& t : core.threads)
    if (t.status == ThreadStatus::Active) next = std::min(next, std::max(t.next_issue_cycle, cycle + 1));
  if (next != std::uint64_t(-1)) schedule_core_check(gcore, next);
}

void Engine::advance_pc(ThreadState& t) {
  t.pc++;
  if (t.pc >= static_cast<int>(t.stream->instrs.size())) t.status = ThreadStatus::Idle;
}

void Engine::issue_thread(int gcore, ThreadState& t, std::uint64_t cycle, int n_active) {
  const AsmInstr& ai = t.stream->instrs[t.pc];
  const InstructionSpec& spec = *ai.spec;
  int interval = issue_interval(n_active);

  if (fnop_check(t, spec)) {
    // pipeline bubble; the free memory stage fetches one word
    t.ibuf_halfwords = std::min(kIBufCapacity, t.ibuf_halfwords + 2);
    t.next_issue_cycle = cycle + interval;
    record_instr(gcore, t, cycle, "fnop", n_active, true, -1);
    return;
  }

  t.ibuf_halfwords -= spec.length_halfwords();
  if (spec.cls != InstrClass::Memory && spec.cls != InstrClass::Divide)
    t.ibuf_halfwords = std::min(kIBufCapacity, t.ibuf_halfwords + 2);

  record_instr(gcore, t, cycle, spec.mnemonic, n_active, false, spec.res ? ai.chanend : -1);
  t.next_issue_cycle = cycle + interval;

  CoreState& core = cores_[gcore];
  auto& r = t.regs;
  std::uint64_t tick = cycle * cores_meta_[gcore].period_ticks;
  auto mem_word = [&](std::uint32_t addr, bool& ok) -> std::uint32_t {
    if (addr % 4 != 0 || addr >= core.memory.size() * 4) {
      record_trap(gcore, t.id, "memory access at " + num_str(static_cast<std::uint64_t>(addr)) +
                                   " misaligned or out of bounds", tick);
      ok = false;
      return 0;
    }
    ok = true;
    return addr / 4;
  };

  bool taken = false;
  switch (spec.op) {
    case InstrOp::Add3r: r[ai.regs[0]] = r[ai.regs[1]] + r[ai.regs[2]]; break;
    case InstrOp::Sub3r: r[ai.regs[0]] = r[ai.regs[1]] - r[ai.regs[2]]; break;
    case InstrOp::Mul3r: r[ai.regs[0]] = r[ai.regs[1]] * r[ai.regs[2]]; break;
    case InstrOp::Eq3r: r[ai.regs[0]] = r[ai.regs[1]] == r[ai.regs[2]] ? 1 : 0; break;
    case InstrOp::Lsu3r: r[ai.regs[0]] = r[ai.regs[1]] < r[ai.regs[2]] ? 1 : 0; break;
    case InstrOp::Neg2r: r[ai.regs[0]] = 0u - r[ai.regs[1]]; break;
    case InstrOp::Add2rus: r[ai.regs[0]] = r[ai.regs[1]] + static_cast<std::uint32_t>(ai.imm); break;
    case InstrOp::Shl2rus: r[ai.regs[0]] = r[ai.regs[1]] << (ai.imm & 31); break;
    case InstrOp::Shr2rus: r[ai.regs[0]] = r[ai.regs[1]] >> (ai.imm & 31); break;
    case InstrOp::LdcRu6:
    case InstrOp::LdcLru6: r[ai.regs[0]] = static_cast<std::uint32_t>(ai.imm); break;
    case InstrOp::LmulL6r: {
      std::uint64_t prod = static_cast<std::uint64_t>(r[ai.regs[2]]) * r[ai.regs[3]] + r[ai.regs[4]] + r[ai.regs[5]];
      r[ai.regs[0]] = static_cast<std::uint32_t>(prod >> 32);
      r[ai.regs[1]] = static_cast<std::uint32_t>(prod);
      break;
    }
    case InstrOp::Ldw3r:
    case InstrOp::LdwRu6:
    case InstrOp::LdwLru6: {
      std::uint32_t offset = spec.op == InstrOp::Ldw3r ? r[ai.regs[2]] : static_cast<std::uint32_t>(ai.imm);
      bool ok;
      std::uint32_t w = mem_word(r[ai.regs[1]] + offset * 4, ok);
      if (!ok) return;
      r[ai.regs[0]] = core.memory[w];
      break;
    }
    case InstrOp::Stw3r:
    case InstrOp::StwRu6:
    case InstrOp::StwLru6: {
      std::uint32_t offset = spec.op == InstrOp::Stw3r ? r[ai.regs[2]] : static_cast<std::uint32_t>(ai.imm);
      bool ok;
      std::uint32_t w = mem_word(r[ai.regs[1]] + offset * 4, ok);
      if (!ok) return;
      core.memory[w] = r[ai.regs[0]];
      break;
    }
    case InstrOp::DivuL3r:
    case InstrOp::RemuL3r: {
      if (r[ai.regs[2]] == 0) {
        record_trap(gcore, t.id, "division by zero", tick);
        return;
      }
      r[ai.regs[0]] = spec.op == InstrOp::DivuL3r ? r[ai.regs[1]] / r[ai.regs[2]] : r[ai.regs[1]] % r[ai.regs[2]];
      // iterative divider occupies the thread beyond its pipeline slot
      t.next_issue_cycle = cycle + platform_.divide_cycles + interval;
      break;
    }
    case InstrOp::BuU6:
    case InstrOp::BuLu10: taken = true; break;
    case InstrOp::BtRu6:
    case InstrOp::BtLru6: taken = r[ai.regs[0]] != 0; break;
    case InstrOp::BfRu6:
    case InstrOp::BfLru6: taken = r[ai.regs[0]] == 0; break;
    case InstrOp::In2r:
    case InstrOp::Out2r:
    case InstrOp::OutctRus:
    case InstrOp::ChkctRus:
    case InstrOp::Checkend1r:
    case InstrOp::ForkU6:
    case InstrOp::JoinU6:
    case InstrOp::Waiteu0r:
      exec_resource(gcore, t, ai, cycle);
      return;
    case InstrOp::Fnop: break;
  }

  if (taken) {
    t.pc = ai.target;
    if (t.pc >= static_cast<int>(t.stream->instrs.size())) {
      t.status = ThreadStatus::Idle;
      return;
    }
    // branch arrival: the memory stage fetched the target word; an unaligned
    // target only has its upper half available
    std::uint32_t target_addr = t.stream->instrs[t.pc].address;
    t.ibuf_halfwords = target_addr % 4 == 2 ? 1 : 2;
    return;
  }
  advance_pc(t);
}

// ---------------------------------------------------------------------------
// resource instructions (channels, sync, idle)

void Engine::push_word_tokens(std::vector<NetToken>& out, const Chanend& ce, std::uint32_t word) const {
  for (int b = 0; b < 4; b++) {
    NetToken tok;
    tok.kind = TokenKind::Data;
    tok.payload = static_cast<std::uint8_t>(word >> (8 * b));
    tok.src = ce.id;
    tok.dest = ce.dest;
    out.push_back(tok);
  }
}

void Engine::exec_resource(int gcore, ThreadState& t, const AsmInstr& ai, std::uint64_t cycle) {
  CoreState& core = cores_[gcore];
  std::uint64_t tick = cycle * cores_meta_[gcore].period_ticks;

  switch (ai.spec->op) {
    case InstrOp::ForkU6: // spawn marker; declared streams are already running
      advance_pc(t);
      return;
    case InstrOp::Waiteu0r:
      t.pc++;
      t.status = ThreadStatus::Idle;
      return;
    case InstrOp::JoinU6: {
      int n = static_cast<int>(ai.imm);
      if (n <= 1) {
        advance_pc(t);
        return;
      }
      auto& waiting = core.join_waiting[n];
      waiting.push_back(t.id);
      if (static_cast<int>(waiting.size()) < n) {
        t.status = ThreadStatus::BlockedSync;
        t.pending = PendingOp::Join;
        return;
      }
      std::vector<int> released = waiting;
      core.join_waiting.erase(n);
      for (int tid : released) {
        ThreadState& w = core.threads[tid];
        w.pending = PendingOp::None;
        if (tid != t.id) w.status = ThreadStatus::Active;
        advance_pc(w);
        if (tid != t.id && w.status == ThreadStatus::Active) wake_thread(gcore, w, tick);
      }
      return;
    }
    default: break;
  }

  if (ai.chanend < 0 || ai.chanend >= 32) {
    record_trap(gcore, t.id, "bad chanend operand", tick);
    return;
  }
  Chanend& ce = core.chanends[ai.chanend];
  if (!ce.connected) {
    record_trap(gcore, t.id, "chanend c" + id_str(ai.chanend) + " is not connected", tick);
    return;
  }

  if (ai.spec->op == InstrOp::Out2r || ai.spec->op == InstrOp::OutctRus) {
    std::vector<NetToken> toks;
    if (!ce.route_open) {
      NetToken hdr;
      hdr.kind = TokenKind::Header;
      hdr.src = ce.id;
      hdr.dest = ce.dest;
      toks.push_back(hdr);
    }
    if (ai.spec->op == InstrOp::Out2r) {
      push_word_tokens(toks, ce, t.regs[ai.regs[0]]);
    } else {
      NetToken ct;
      ct.kind = TokenKind::End; // control token; closes the route iff payload == kCtEnd
      ct.payload = static_cast<std::uint8_t>(ai.imm);
      ct.src = ce.id;
      ct.dest = ce.dest;
      toks.push_back(ct);
    }
    if (ce.tx_free() >= static_cast<int>(toks.size())) {
      for (NetToken& tok : toks) {
        if (tok.kind == TokenKind::Header) ce.route_open = true;
        if (tok.kind == TokenKind::End && tok.payload == kCtEnd) ce.route_open = false;
        ce.tx.push_back(tok);
      }
      advance_pc(t);
      pump_node(core.node, tick);
    } else {
      t.status = ThreadStatus::BlockedOut;
      t.pending = PendingOp::OutTokens;
      t.pending_chanend = ai.chanend;
      t.pending_tokens = std::move(toks);
    }
    return;
  }

  if (ai.spec->op == InstrOp::In2r) {
    t.pending = PendingOp::InWord;
    t.pending_chanend = ai.chanend;
    t.pending_reg = ai.regs[0];
    if (!try_complete_in(gcore, t, tick)) {
      t.status = ThreadStatus::BlockedIn;
    } else {
      pump_node(core.node, tick); // freed rx space may pull buffered tokens in
    }
    return;
  }

  // chkct / checkend
  t.pending = PendingOp::ChkCt;
  t.pending_chanend = ai.chanend;
  t.pending_value = ai.spec->op == InstrOp::Checkend1r ? kCtEnd : static_cast<std::uint8_t>(ai.imm);
  if (!try_complete_in(gcore, t, tick)) {
    t.status = ThreadStatus::BlockedIn;
  } else {
    pump_node(core.node, tick);
  }
}

// Completes a pending in/chkct when the chanend buffer allows it; traps on
// protocol violations. Returns true when the op finished (or trapped).
bool Engine::try_complete_in(int gcore, ThreadState& t, std::uint64_t tick) {
  CoreState& core = cores_[gcore];
  Chanend& ce = core.chanends[t.pending_chanend];

  auto finish = [&]() {
    bool was_blocked = t.status == ThreadStatus::BlockedIn;
    t.pending = PendingOp::None;
    t.status = ThreadStatus::Active;
    advance_pc(t);
    if (was_blocked && t.status == ThreadStatus::Active) wake_thread(gcore, t, tick);
    if (was_blocked && t.status != ThreadStatus::Active) t.last_wake_tick = tick;
  };

  if (t.pending == PendingOp::InWord) {
    if (ce.rx.empty()) return false;
    int data_run = 0;
    for (size_t i = 0; i < ce.rx.size() && data_run < 4; i++) {
      if (ce.rx[i].kind != TokenKind::Data) {
        record_trap(gcore, t.id, "in: control token in data stream on c" + id_str(t.pending_chanend), tick);
        return true;
      }
      data_run++;
    }
    if (data_run < 4) return false;
    std::uint32_t word = 0;
    for (int b = 0; b < 4; b++) {
      word |= static_cast<std::uint32_t>(ce.rx.front().payload) << (8 * b);
      ce.rx.pop_front();
    }
    t.regs[t.pending_reg] = word;
    finish();
    return true;
  }

  if (t.pending == PendingOp::ChkCt) {
    if (ce.rx.empty()) return false;
    const NetToken& head = ce.rx.front();
    if (head.kind != TokenKind::End) {
      record_trap(gcore, t.id, "chkct: data token on c" + id_str(t.pending_chanend), tick);
      return true;
    }
    if (head.payload != static_cast<std::uint8_t>(t.pending_value)) {
      record_trap(gcore, t.id, "chkct: control token mismatch on c" + id_str(t.pending_chanend), tick);
      return true;
    }
    ce.rx.pop_front();
    finish();
    return true;
  }
  return false;
}

void Engine::wake_thread(int gcore, ThreadState& t, std::uint64_t tick) {
  t.last_wake_tick = tick;
  std::uint64_t cycle = ceil_div(tick, cores_meta_[gcore].period_ticks);
  t.next_issue_cycle = cycle + issue_interval(std::max(1, cores_[gcore].active_count()));
  schedule_core_check(gcore, t.next_issue_cycle);
}

void Engine::finish_blocked_out(int gcore, ThreadState& t, std::uint64_t tick) {
  Chanend& ce = cores_[gcore].chanends[t.pending_chanend];
  for (NetToken& tok : t.pending_tokens) {
    if (tok.kind == TokenKind::Header) ce.route_open = true;
    if (tok.kind == TokenKind::End && tok.payload == kCtEnd) ce.route_open = false;
    ce.tx.push_back(tok);
  }
  t.pending_tokens.clear();
  t.pending = PendingOp::None;
  t.status = ThreadStatus::Active;
  advance_pc(t);
  if (t.status == ThreadStatus::Active) wake_thread(gcore, t, tick);
  else t.last_wake_tick = tick;
}

// ---------------------------------------------------------------------------
// switch / link forwarding

bool Engine::deliver_local(int node, const NetToken& tok, std::uint64_t tick) {
  (void)node;
  (void)tick;
  if (tok.kind == TokenKind::Header) return true; // consumed: routing info only
  Chanend& dst = chanend_at(tok.dest);
  if (dst.auto_drain) {
    dst.drained++;
    return true;
  }
  if (dst.rx_free() < 1) return false;
  dst.rx.push_back(tok);
  return true;
}

void Engine::try_send_hello(int ld_idx, std::uint64_t tick) {
  LinkDir& ld = link_dirs_[ld_idx];
  if (!ld.hello_wanted || ld.wire_busy) return;
  ld.hello_wanted = false;
  ld.status = LinkStatus::HelloSent;
  NetToken hello;
  hello.kind = TokenKind::Hello;
  ld.wire_busy = true;
  ld.wire_token = hello;
  ld.tokens_sent++;
  record_token(ld.from_node, ld.link_id, TokenKind::Hello, ld.to_node, tick);
  push_event(tick + tt_ticks(ld), 1, ld_idx, 0);
}

// Sends the coalesced credit grant for `for_dir` back to its sender; the
// CREDIT token rides the reverse wire.
void Engine::try_send_credit(int for_dir, std::uint64_t tick) {
  LinkDir& ld = link_dirs_[for_dir];
  if (ld.pending_credit <= 0) return;
  int rev_idx = reverse_dir(for_dir);
  LinkDir& rev = link_dirs_[rev_idx];
  if (rev.wire_busy) return;
  NetToken credit;
  credit.kind = TokenKind::Credit;
  credit.credit_value = ld.pending_credit;
  ld.inflight_credit_value += ld.pending_credit;
  ld.pending_credit = 0;
  rev.wire_busy = true;
  rev.wire_token = credit;
  rev.tokens_sent++;
  record_token(rev.from_node, rev.link_id, TokenKind::Credit, rev.to_node, tick);
  push_event(tick + tt_ticks(rev), 1, rev_idx, 0);
}

bool Engine::transmit(int ld_idx, const NetToken& tok, std::uint64_t tick) {
  LinkDir& ld = link_dirs_[ld_idx];
  if (ld.status != LinkStatus::Open) {
    if (ld.status == LinkStatus::Uninit) {
      ld.status = LinkStatus::HelloQueued;
      ld.hello_wanted = true;
    }
    try_send_hello(ld_idx, tick);
    return false;
  }
  if (ld.sender_credit < 1 || ld.wire_busy) return false;
  ld.sender_credit--;
  ld.inflight_data++;
  ld.wire_busy = true;
  ld.wire_token = tok;
  ld.tokens_sent++;
  record_token(ld.from_node, ld.link_id, tok.kind, tok.dest.node, tick);
  push_event(tick + tt_ticks(ld), 1, ld_idx, 0);
  return true;
}

bool Engine::try_dispatch(int node, const NetToken& tok, std::uint64_t tick) {
  if (tok.dest.node == node) return deliver_local(node, tok, tick);

  SwitchState& sw = switches_[switch_index_.at(node)];
  if (tok.kind == TokenKind::Header) {
    std::string dname = route_direction(sw, tok.dest.node, platform_.id_bits, platform_.route_policy);
    auto it = sw.dir_links.find(dname);
    if (it == sw.dir_links.end() || it->second.empty())
      throw SimError("node " + id_str(node) + ": direction '" + dname + "' has no links");
    int chosen = -1;
    for (int cand : it->second) {
      if (link_dirs_[cand].route_owner == tok.src) {
        chosen = cand;
        break;
      }
      if (chosen < 0 && !link_dirs_[cand].route_owner) chosen = cand;
    }
    if (chosen < 0) return false; // all links in the direction are owned
    LinkDir& ld = link_dirs_[chosen];
    ld.route_owner = tok.src;
    if (!transmit(chosen, tok, tick)) return false;
    sw.routes[tok.src] = chosen;
    return true;
  }

  auto rt = sw.routes.find(tok.src);
  if (rt == sw.routes.end()) throw SimError("internal: data token with no route at node " + id_str(node));
  int ld_idx = rt->second;
  if (!transmit(ld_idx, tok, tick)) return false;
  if (tok.kind == TokenKind::End && tok.payload == kCtEnd) {
    link_dirs_[ld_idx].route_owner.reset();
    sw.routes.erase(rt);
  }
  return true;
}

void Engine::pump_injections_for(int gcore, int ce, std::uint64_t tick) {
  (void)tick;
  for (Injection& inj : injections_) {
    if (!inj.started || inj.global_core != gcore || inj.ce != ce) continue;
    Chanend& c = cores_[gcore].chanends[ce];
    while (true) {
      if (!inj.header_pushed) {
        if (c.tx_free() < 1) break;
        NetToken hdr;
        hdr.kind = TokenKind::Header;
        hdr.src = c.id;
        hdr.dest = c.dest;
        c.tx.push_back(hdr);
        inj.header_pushed = true;
        continue;
      }
      if (inj.bytes_left > 0) {
        if (c.tx_free() < 1) break;
        NetToken d;
        d.kind = TokenKind::Data;
        int byte_index = inj.words * 4 - inj.bytes_left;
        d.payload = static_cast<std::uint8_t>((inj.next_value + byte_index) & 0xff);
        d.src = c.id;
        d.dest = c.dest;
        c.tx.push_back(d);
        inj.bytes_left--;
        continue;
      }
      if (inj.close_route && !inj.end_pushed) {
        if (c.tx_free() < 1) break;
        NetToken end;
        end.kind = TokenKind::End;
        end.payload = kCtEnd;
        end.src = c.id;
        end.dest = c.dest;
        c.tx.push_back(end);
        inj.end_pushed = true;
      }
      break;
    }
  }
}

void Engine::pump_node(int node, std::uint64_t tick) {
  bool progress = true;
  while (progress) {
    progress = false;

    // inter-switch arrivals waiting in link receive buffers
    for (size_t i = 0; i < link_dirs_.size(); i++) {
      LinkDir& ld = link_dirs_[i];
      if (ld.to_node != node || ld.rx.empty()) continue;
      if (try_dispatch(node, ld.rx.front(), tick)) {
        ld.rx.pop_front();
        ld.pending_credit++;
        try_send_credit(static_cast<int>(i), tick);
        progress = true;
      }
    }

    // chanend egress queues
    for (auto& [key, gcore] : core_index_) {
      if (key.first != node) continue;
      CoreState& core = cores_[gcore];
      for (int ce = 0; ce < 32; ce++) {
        Chanend& c = core.chanends[ce];
        if (c.tx.empty()) {
          pump_injections_for(gcore, ce, tick);
          if (c.tx.empty()) continue;
        }
        if (try_dispatch(node, c.tx.front(), tick)) {
          c.tx.pop_front();
          progress = true;
          pump_injections_for(gcore, ce, tick);
        }
      }
    }

    // blocked threads whose condition may now hold
    for (auto& [key, gcore] : core_index_) {
      if (key.first != node) continue;
      CoreState& core = cores_[gcore];
      for (ThreadState& t : core.threads) {
        if (t.status == ThreadStatus::BlockedIn) {
          if (try_complete_in(gcore, t, tick)) progress = true;
        } else if (t.status == ThreadStatus::BlockedOut) {
          Chanend& c = core.chanends[t.pending_chanend];
          if (c.tx_free() >= static_cast<int>(t.pending_tokens.size())) {
            finish_blocked_out(gcore, t, tick);
            progress = true;
          }
        }
      }
    }
  }
  if (validate_) check_invariants();
}

void Engine::handle_link_arrival(int ld_idx, std::uint64_t tick) {
  LinkDir& ld = link_dirs_[ld_idx];
  NetToken tok = ld.wire_token;
  ld.wire_busy = false;

  switch (tok.kind) {
    case TokenKind::Hello: {
      ld.tokens_received++;
      // initial grant: every free receive-buffer slot
      ld.handshake_granted = true;
      ld.pending_credit += ld.capacity - static_cast<int>(ld.rx.size());
      try_send_credit(ld_idx, tick);
      break;
    }
    case TokenKind::Credit: {
      ld.tokens_received++;
      LinkDir& fwd = link_dirs_[reverse_dir(ld_idx)]; // credit applies to the opposite direction
      fwd.sender_credit += tok.credit_value;
      fwd.inflight_credit_value -= tok.credit_value;
      if (fwd.status == LinkStatus::HelloSent || fwd.status == LinkStatus::HelloQueued)
        fwd.status = LinkStatus::Open;
      pump_node(fwd.from_node, tick);
      break;
    }
    default: {
      ld.inflight_data--;
      ld.tokens_received++;
      ld.rx.push_back(tok);
      if (static_cast<int>(ld.rx.size()) > ld.capacity)
        throw SimError("link receive buffer overrun (flow control violated)");
      pump_node(ld.to_node, tick);
      break;
    }
  }

  // the wire is idle again: flush link-layer control, then data
  try_send_credit(reverse_dir(ld_idx), tick);
  try_send_hello(ld_idx, tick);
  pump_node(ld.from_node, tick);
}

void Engine::check_invariants() const {
  for (const LinkDir& ld : link_dirs_) {
    if (static_cast<int>(ld.rx.size()) > ld.capacity) throw SimError("invariant: rx buffer over capacity");
    if (ld.sender_credit < 0) throw SimError("invariant: negative credit");
    if (!ld.handshake_granted) continue;
    int total = ld.sender_credit + ld.inflight_data + static_cast<int>(ld.rx.size()) + ld.inflight_credit_value +
                ld.pending_credit;
    if (total != ld.capacity)
      throw SimError("invariant: credit conservation violated (" + num_str(static_cast<std::int64_t>(total)) +
                     " != " + num_str(static_cast<std::int64_t>(ld.capacity)) + ")");
  }
}

// ---------------------------------------------------------------------------

SimResult Engine::run(std::uint64_t cycle_limit) {
  std::uint64_t min_period = std::uint64_t(-1);
  for (const CoreMeta& m : cores_meta_) min_period = std::min(min_period, m.period_ticks);
  if (cores_meta_.empty()) min_period = 1;
  std::uint64_t limit_ticks = cycle_limit * min_period;

  SimResult res;
  std::uint64_t last_tick = 0;
  bool hit_limit = false;
  while (!queue_.empty()) {
    Ev ev = queue_.top();
    if (ev.tick > limit_ticks) {
      hit_limit = true;
      break;
    }
    queue_.pop();
    now_tick_ = ev.tick;
    last_tick = ev.tick;
    switch (ev.kind) {
      case 0: handle_core_issue(ev.a, ev.b); break;
      case 1: handle_link_arrival(ev.a, ev.tick); break;
      case 2: {
        injections_[ev.a].started = true;
        int node = cores_meta_[injections_[ev.a].global_core].node;
        pump_node(node, ev.tick);
        break;
      }
    }
    if (validate_) check_invariants();
  }

  bool blocked = false;
  std::string diag;
  for (size_t g = 0; g < cores_.size(); g++) {
    for (const ThreadState& t : cores_[g].threads) {
      if (t.status == ThreadStatus::BlockedIn || t.status == ThreadStatus::BlockedOut ||
          t.status == ThreadStatus::BlockedSync) {
        blocked = true;
        const char* why = t.status == ThreadStatus::BlockedIn    ? "waiting for input"
                          : t.status == ThreadStatus::BlockedOut ? "waiting for output space"
                                                                 : "waiting at a join barrier";
        diag += "node " + id_str(cores_[g].node) + " core " + id_str(cores_[g].core) + " thread " + id_str(t.id) +
                ": " + why + "\n";
      }
    }
  }
  for (const Injection& inj : injections_)
    if (inj.bytes_left > 0 || (inj.close_route && !inj.end_pushed)) {
      blocked = true;
      diag += "injection on core " + id_str(inj.global_core) + " c" + id_str(inj.ce) + " incomplete\n";
    }

  if (hit_limit) res.reason = StopReason::CycleLimit;
  else if (blocked) res.reason = StopReason::Deadlock;
  else res.reason = StopReason::Completed;
  res.diagnostic = diag;
  res.traps = traps_;
  res.end_time_ns = static_cast<double>(last_tick) * ns_per_tick_;
  for (size_t g = 0; g < cores_.size(); g++) {
    const CoreState& c = cores_[g];
    res.core_cycles[{c.node, c.core}] = c.issued_any ? c.last_issue_cycle + 1 : 0;
  }

  std::stable_sort(trace_.begin(), trace_.end(), [](const TimedEvent& a, const TimedEvent& b) {
    if (a.tick != b.tick) return a.tick < b.tick;
    if (a.node != b.node) return a.node < b.node;
    if (a.core != b.core) return a.core < b.core;
    if (a.thread != b.thread) return a.thread < b.thread;
    return a.seq < b.seq;
  });
  res.events.reserve(trace_.size());
  for (TimedEvent& te : trace_) res.events.push_back(std::move(te.ev));
  trace_.clear();
  return res;
}

} // namespace netwatt
