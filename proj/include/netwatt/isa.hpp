#ifndef NETWATT_ISA_HPP
#define NETWATT_ISA_HPP

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace netwatt {

struct ParseError : std::runtime_error {
  int line;
  ParseError(const std::string& msg, int line_no)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
  explicit ParseError(const std::string& msg) : std::runtime_error(msg), line(0) {}
};

enum class InstrClass { Alu, Memory, Resource, Branch, Divide, Fnop };

const char* instr_class_name(InstrClass c);
bool instr_class_from_name(std::string_view s, InstrClass& out);

// Concrete behaviours the simulator knows how to execute. The ISA table maps
// mnemonics onto these; energy modelling only needs the feature metadata.
enum class InstrOp {
  Add3r, Sub3r, Mul3r, Eq3r, Lsu3r, Neg2r, Add2rus, Shl2rus, Shr2rus,
  LdcRu6, LdcLru6, LmulL6r,
  Ldw3r, Stw3r, LdwRu6, StwRu6, LdwLru6, StwLru6,
  DivuL3r, RemuL3r,
  BuU6, BuLu10, BtRu6, BfRu6, BtLru6, BfLru6,
  In2r, Out2r, OutctRus, ChkctRus, Checkend1r,
  ForkU6, JoinU6, Waiteu0r,
  Fnop,
};

// One mini-ISA instruction: behaviour class plus the six-feature vector used
// by the energy model (length, sources, dests, immediate bits, memory flag,
// resource flag).
struct InstructionSpec {
  std::string mnemonic;
  InstrClass cls = InstrClass::Alu;
  InstrOp op = InstrOp::Fnop;
  int length = 1;    // instruction words: 1 = short (16-bit), 2 = long (32-bit)
  int sources = 0;   // 0-4
  int dests = 0;     // 0-2
  int imm_bits = 0;  // 0-16
  bool mem = false;
  bool res = false;

  int size_bytes() const { return length * 2; }
  int length_halfwords() const { return length; }
  void validate() const; // enforces the class/flag and range invariants
};

using FeatureVector = std::array<double, 6>;

// [L, S, D, I, M, R], booleans as 0/1, widened to double for tree splitting.
FeatureVector feature_vector(const InstructionSpec& spec);

class IsaTable {
 public:
  static const IsaTable& builtin();
  static IsaTable parse(std::string_view text);
  std::string print() const;

  const InstructionSpec* find(std::string_view mnemonic) const;
  const InstructionSpec& at(std::string_view mnemonic) const;
  const std::vector<InstructionSpec>& specs() const { return specs_; }

  void add(InstructionSpec spec);

 private:
  std::vector<InstructionSpec> specs_;
  std::map<std::string, size_t, std::less<>> index_;
};

} // namespace netwatt

#endif
