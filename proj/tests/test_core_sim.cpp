#include <doctest.h>

#include <map>
#include <string>
#include <vector>

#include "netwatt/engine.hpp"
#include "netwatt/trace.hpp"

using namespace netwatt;

namespace {

PlatformDesc one_node_platform() {
  PlatformDesc p;
  p.id_bits = 1;
  NodeDesc n;
  n.id = 0;
  p.nodes = {n};
  return p;
}

std::vector<InstructionEvent> instr_events(const SimResult& r) {
  std::vector<InstructionEvent> out;
  for (const TraceEvent& ev : r.events)
    if (const auto* ie = std::get_if<InstructionEvent>(&ev)) out.push_back(*ie);
  return out;
}

std::string n_thread_alu_loop(int n_threads) {
  std::string prog;
  for (int t = 0; t < n_threads; t++) {
    prog += ".thread 0 " + std::to_string(t) + "\n";
    prog += "loop" + std::to_string(t) + ":\n";
    prog += "    add r0, r0, r1\n";
    prog += "    bu loop" + std::to_string(t) + "\n";
  }
  return prog;
}

} // namespace

TEST_CASE("issue interval is the pipeline depth or the thread count") {
  CHECK(issue_interval(1) == 4);
  CHECK(issue_interval(4) == 4);
  CHECK(issue_interval(6) == 6); // six threads share one issue slot per cycle
  CHECK(issue_interval(8) == 8);
}

TEST_CASE("a single thread issues every four cycles") {
  Program prog = parse_program(
      ".thread 0 0\n"
      "    ldc r0, 1\n"
      "    add r1, r1, r0\n"
      "    add r1, r1, r0\n"
      "    add r1, r1, r0\n");
  Engine engine(one_node_platform(), prog);
  SimResult r = engine.run();
  CHECK(r.reason == StopReason::Completed);
  auto evs = instr_events(r);
  REQUIRE(evs.size() == 4);
  for (size_t i = 0; i < evs.size(); i++) {
    CHECK(evs[i].cycle == 4 * i);
    CHECK(evs[i].n_active == 1);
    CHECK_FALSE(evs[i].fnop);
  }
}

TEST_CASE("per-thread gap and aggregate throughput follow the thread count") {
  for (int n : {1, 2, 3, 4, 5, 6, 7, 8}) {
    Program prog = parse_program(n_thread_alu_loop(n));
    Engine engine(one_node_platform(), prog);
    SimResult r = engine.run(4000);
    CHECK(r.reason == StopReason::CycleLimit);
    std::map<int, std::vector<std::uint64_t>> per_thread;
    std::uint64_t window_lo = 1000, window_hi = 3000;
    int in_window = 0;
    for (const InstructionEvent& e : instr_events(r)) {
      per_thread[e.thread].push_back(e.cycle);
      if (e.cycle >= window_lo && e.cycle < window_hi) {
        in_window++;
        CHECK(e.n_active == n);
      }
    }
    std::uint64_t gap = static_cast<std::uint64_t>(issue_interval(n));
    for (auto& [tid, cycles] : per_thread)
      for (size_t i = 1; i < cycles.size(); i++) CHECK(cycles[i] - cycles[i - 1] == gap);
    // aggregate min(1, n/4) issues per cycle, exact over an aligned window
    std::uint64_t expected = (window_hi - window_lo) * std::min(4, n) / 4;
    CHECK(static_cast<std::uint64_t>(in_window) == expected);
  }
}

TEST_CASE("the core divider stretches instruction timing against the wall clock") {
  PlatformDesc p = one_node_platform();
  p.nodes[0].op.divider = 2; // 250 MHz core on a 500 MHz PLL
  Program prog = parse_program(".thread 0 0\n    add r0, r0, r1\n    add r0, r0, r1\n");
  Engine engine(p, prog);
  SimResult r = engine.run();
  auto evs = instr_events(r);
  REQUIRE(evs.size() == 2);
  CHECK(evs[1].cycle - evs[0].cycle == 4);
  CHECK(evs[1].time_ns - evs[0].time_ns == 16.0); // 4 cycles at 4 ns
}

TEST_CASE("a platform with no runnable threads produces no events") {
  Program empty;
  Engine engine(one_node_platform(), empty);
  SimResult r = engine.run();
  CHECK(r.reason == StopReason::Completed);
  CHECK(r.events.empty());
}

TEST_CASE("memory-dense sequences stall for fetches") {
  // every loop iteration drains the instruction buffer with loads
  Program prog = parse_program(
      ".thread 0 0\n"
      "    ldc r1, 0\n"
      "    ldc r0, 0\n"
      "loop:\n"
      "    ldw r2, r1, 0\n"
      "    ldw r2, r1, 1\n"
      "    ldw r2, r1, 2\n"
      "    ldw r2, r1, 3\n"
      "    add r0, r0, 1\n"
      "    add r3, r0, 0\n"
      "    add r3, r0, 0\n"
      "    add r3, r0, 0\n"
      "    bu loop\n");
  Engine engine(one_node_platform(), prog);
  SimResult r = engine.run(2000);
  int fnops = 0;
  for (const InstructionEvent& e : instr_events(r))
    if (e.fnop) {
      fnops++;
      CHECK(e.mnemonic == "fnop");
    }
  CHECK(fnops > 0);
}

TEST_CASE("interleaving memory work removes the fetch stalls and time") {
  auto run_cycles = [&](const std::string& body) {
    Program prog = parse_program(body);
    Engine engine(one_node_platform(), prog);
    SimResult r = engine.run(100000);
    CHECK(r.reason == StopReason::Completed);
    int fnops = 0;
    for (const InstructionEvent& e : instr_events(r))
      if (e.fnop) fnops++;
    return std::make_pair(r.core_cycles.at({0, 0}), fnops);
  };
  std::string head =
      ".thread 0 0\n"
      "    ldc r1, 0\n"
      "    ldc r0, 64\n"
      "loop:\n";
  std::string tail =
      "    add r0, r0, 2\n"
      "    add r0, r0, 2\n"
      "    sub r0, r0, r5\n"
      "    bt r0, loop\n";
  // bunched loads versus the same work interleaved with ALU instructions
  auto [t_bunched, f_bunched] = run_cycles(head +
                                           "    ldw r2, r1, 0\n    ldw r3, r1, 1\n    ldw r4, r1, 2\n"
                                           "    add r6, r2, r3\n    add r6, r6, r4\n    ldc r5, 5\n" +
                                           tail);
  auto [t_mixed, f_mixed] = run_cycles(head +
                                       "    ldw r2, r1, 0\n    add r6, r2, r3\n    ldw r3, r1, 1\n"
                                       "    add r6, r6, r4\n    ldw r4, r1, 2\n    ldc r5, 5\n" +
                                       tail);
  CHECK(f_bunched > 0);
  CHECK(f_mixed < f_bunched);
  CHECK(t_mixed < t_bunched);
}

TEST_CASE("branching to an unaligned long instruction stalls once per iteration") {
  // layout: the short ldc places the loop target at byte 2 (mod 4 == 2); the
  // target is a long instruction so only half of it is fetched on arrival
  Program prog = parse_program(
      ".thread 0 0\n"
      "    ldc r0, 0\n"
      "loop:\n"
      "    ldc.l r1, 7\n"
      "    add r0, r0, r1\n"
      "    bu loop\n");
  REQUIRE(prog.threads[0].instrs[1].address == 2);
  REQUIRE(prog.threads[0].instrs[1].spec->length == 2);
  Engine engine(one_node_platform(), prog);
  SimResult r = engine.run(1000);
  auto evs = instr_events(r);
  int iterations = 0, fnops = 0;
  for (const InstructionEvent& e : evs) {
    if (e.mnemonic == "bu_u6") iterations++;
    if (e.fnop) fnops++;
  }
  CHECK(iterations > 3);
  // one stall per loop arrival (the first entry is sequential; the cycle
  // limit may cut the trace between a branch and its stall)
  CHECK(fnops >= iterations - 1);
  CHECK(fnops <= iterations);
}

TEST_CASE("short aligned ALU loops never stall") {
  Program prog = parse_program(n_thread_alu_loop(1));
  Engine engine(one_node_platform(), prog);
  SimResult r = engine.run(10000);
  for (const InstructionEvent& e : instr_events(r)) CHECK_FALSE(e.fnop);
}

TEST_CASE("divide occupies the thread beyond its issue slot") {
  Program prog = parse_program(
      ".thread 0 0\n"
      "    ldc r1, 40\n"
      "    ldc r2, 5\n"
      "    divu r3, r1, r2\n"
      "    add r4, r3, 1\n");
  Engine engine(one_node_platform(), prog);
  SimResult r = engine.run();
  auto evs = instr_events(r);
  REQUIRE(evs.size() == 4);
  CHECK(evs[2].mnemonic == "divu_l3r");
  // 32 divider cycles plus the normal interval
  CHECK(evs[3].cycle - evs[2].cycle == 36);
  Program p2 = parse_program(".thread 0 0\n    ldc r1, 40\n    divu r3, r1, r2\n");
  Engine e2(one_node_platform(), p2);
  SimResult r2 = e2.run();
  REQUIRE(r2.traps.size() == 1);
  CHECK(r2.traps[0].cause == "division by zero");
}

TEST_CASE("memory traps halt the thread but not the simulation") {
  Program prog = parse_program(
      ".thread 0 0\n"
      "    ldc.l r1, 1000\n"
      "    shl r1, r1, 7\n" // 128000, past the 64 KiB memory
      "    ldw r2, r1, 0\n"
      "    add r0, r0, r1\n"
      ".thread 0 1\n"
      "    add r5, r5, r5\n"
      "    add r5, r5, r5\n");
  Engine engine(one_node_platform(), prog);
  SimResult r = engine.run();
  REQUIRE(r.traps.size() == 1);
  CHECK(r.traps[0].thread == 0);
  int t1_instrs = 0;
  for (const InstructionEvent& e : instr_events(r))
    if (e.thread == 1) t1_instrs++;
  CHECK(t1_instrs == 2); // the other thread finished its program
}

TEST_CASE("identical runs produce bit-identical traces") {
  Program prog = parse_program(n_thread_alu_loop(5));
  Engine a(one_node_platform(), prog);
  Engine b(one_node_platform(), prog);
  SimResult ra = a.run(5000);
  CHECK(write_trace(ra.events) == write_trace(b.run(5000).events));

  // instruction timestamps within one (node, core) never decrease
  std::map<std::pair<int, int>, double> last;
  for (const TraceEvent& ev : ra.events) {
    const auto* ie = std::get_if<InstructionEvent>(&ev);
    if (!ie) continue;
    auto key = std::make_pair(ie->node, ie->core);
    auto it = last.find(key);
    if (it != last.end()) CHECK(ie->time_ns >= it->second);
    last[key] = ie->time_ns;
  }
}

TEST_CASE("instruction semantics compute the expected register state") {
  Program prog = parse_program(
      ".thread 0 0\n"
      "    ldc r0, 100\n"
      "    ldc r1, 7\n"
      "    add r2, r0, r1\n"   // 107
      "    sub r3, r0, r1\n"   // 93
      "    mul r4, r1, r1\n"   // 49
      "    eq r5, r0, r0\n"    // 1
      "    lsu r6, r1, r0\n"   // 1 (7 < 100)
      "    neg r7, r1\n"       // -7 wrapped
      "    shl r8, r1, 4\n"    // 112
      "    shr r9, r0, 2\n"    // 25
      "    divu r10, r0, r1\n" // 14
      "    remu r11, r0, r1\n" // 2
      "    stw r2, r0, 3\n"    // mem[100 + 12] = 107
      "    ldw r5, r0, 3\n"    // r5 = 107
      "    lmul r6, r7, r0, r1, r2, r3\n"); // 100*7 + 107 + 93 = 900 -> hi 0, lo 900
  Engine engine(one_node_platform(), prog);
  SimResult r = engine.run();
  CHECK(r.reason == StopReason::Completed);
  CHECK(r.traps.empty());
  const ThreadState& t = engine.thread_at(0, 0);
  CHECK(t.regs[2] == 107);
  CHECK(t.regs[3] == 93);
  CHECK(t.regs[4] == 49);
  CHECK(t.regs[8] == 112);
  CHECK(t.regs[9] == 25);
  CHECK(t.regs[10] == 14);
  CHECK(t.regs[11] == 2);
  CHECK(t.regs[5] == 107);
  CHECK(t.regs[6] == 0);
  CHECK(t.regs[7] == 900);
}

TEST_CASE("join releases all participants together") {
  Program prog = parse_program(
      ".thread 0 0\n"
      "    add r0, r0, r0\n"
      "    join 2\n"
      "    add r1, r1, r1\n"
      ".thread 0 1\n"
      "    add r0, r0, r0\n"
      "    add r0, r0, r0\n"
      "    add r0, r0, r0\n"
      "    join 2\n"
      "    add r1, r1, r1\n");
  Engine engine(one_node_platform(), prog);
  SimResult r = engine.run();
  CHECK(r.reason == StopReason::Completed);
  std::map<int, std::uint64_t> post_join;
  std::map<int, std::uint64_t> join_at;
  for (const InstructionEvent& e : instr_events(r)) {
    if (e.mnemonic == "join_u6") join_at[e.thread] = e.cycle;
    if (e.mnemonic == "add_3r" && e.thread >= 0) post_join[e.thread] = e.cycle;
  }
  // the early arriver waits for the late one
  CHECK(post_join[0] > join_at[1]);
}

TEST_CASE("waiteu parks the thread") {
  Program prog = parse_program(
      ".thread 0 0\n"
      "    add r0, r0, r0\n"
      "    waiteu\n"
      "    add r0, r0, r0\n");
  Engine engine(one_node_platform(), prog);
  SimResult r = engine.run();
  CHECK(r.reason == StopReason::Completed);
  CHECK(instr_events(r).size() == 2); // the final add never issues
}
