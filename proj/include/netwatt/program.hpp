#ifndef NETWATT_PROGRAM_HPP
#define NETWATT_PROGRAM_HPP

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "netwatt/isa.hpp"

namespace netwatt {

struct AsmInstr {
  const InstructionSpec* spec = nullptr;
  std::uint32_t address = 0; // byte address within the thread stream
  int line = 0;
  int regs[6] = {-1, -1, -1, -1, -1, -1};
  int nregs = 0;
  std::int64_t imm = 0;
  int chanend = -1;
  int target = -1; // branch target: instruction index in the same stream
  std::string target_label;
};

struct ThreadStream {
  int core = 0;   // global core index (platform numbers cores node-major)
  int thread = 0; // hardware thread id 0-7
  std::vector<AsmInstr> instrs;
  std::map<std::string, int> labels; // label -> instruction index (may be instrs.size() = end)
  std::uint32_t end_address = 0;
};

struct ChanConnect {
  int core_a = 0, ce_a = 0;
  int core_b = 0, ce_b = 0;
};

struct Program {
  std::vector<ThreadStream> threads;
  std::vector<ChanConnect> connects;

  const ThreadStream* find_stream(int core, int thread) const;
};

// Line-oriented assembly: '#' comments, 'label:', '.thread <core> <tid>',
// '.connect <core>.<ce> <core>.<ce>', one instruction per line. Immutable
// after parse; the IsaTable must outlive the Program.
Program parse_program(std::string_view text, const IsaTable& isa = IsaTable::builtin());

// Canonical form; parse_program(print_program(p)) reproduces p.
std::string print_program(const Program& p);

} // namespace netwatt

#endif
