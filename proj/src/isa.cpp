#include "netwatt/isa.hpp"

#include <sstream>

#include "netwatt/num_io.hpp"

namespace netwatt {

const char* instr_class_name(InstrClass c) {
  switch (c) {
    case InstrClass::Alu: return "alu";
    case InstrClass::Memory: return "memory";
    case InstrClass::Resource: return "resource";
    case InstrClass::Branch: return "branch";
    case InstrClass::Divide: return "divide";
    case InstrClass::Fnop: return "fnop";
  }
  return "?";
}

bool instr_class_from_name(std::string_view s, InstrClass& out) {
  if (s == "alu") out = InstrClass::Alu;
  else if (s == "memory") out = InstrClass::Memory;
  else if (s == "resource") out = InstrClass::Resource;
  else if (s == "branch") out = InstrClass::Branch;
  else if (s == "divide") out = InstrClass::Divide;
  else if (s == "fnop") out = InstrClass::Fnop;
  else return false;
  return true;
}

void InstructionSpec::validate() const {
  if (length != 1 && length != 2) throw ParseError(mnemonic + ": instruction length must be 1 or 2");
  if (sources < 0 || sources > 4) throw ParseError(mnemonic + ": source count out of range 0-4");
  if (dests < 0 || dests > 2) throw ParseError(mnemonic + ": dest count out of range 0-2");
  if (imm_bits < 0 || imm_bits > 16) throw ParseError(mnemonic + ": immediate bits out of range 0-16");
  if ((cls == InstrClass::Memory) != mem) throw ParseError(mnemonic + ": memory flag must match class");
  if ((cls == InstrClass::Resource) != res) throw ParseError(mnemonic + ": resource flag must match class");
  if (mem && res) throw ParseError(mnemonic + ": memory and resource flags are mutually exclusive");
  if (cls == InstrClass::Fnop && (sources || dests || imm_bits || mem || res || length != 1))
    throw ParseError("fnop spec must be a short instruction with no operands");
}

FeatureVector feature_vector(const InstructionSpec& s) {
  return {static_cast<double>(s.length), static_cast<double>(s.sources),
          static_cast<double>(s.dests),  static_cast<double>(s.imm_bits),
          s.mem ? 1.0 : 0.0,             s.res ? 1.0 : 0.0};
}

void IsaTable::add(InstructionSpec spec) {
  spec.validate();
  if (index_.count(spec.mnemonic)) throw ParseError("duplicate mnemonic " + spec.mnemonic);
  index_.emplace(spec.mnemonic, specs_.size());
  specs_.push_back(std::move(spec));
}

const InstructionSpec* IsaTable::find(std::string_view mnemonic) const {
  auto it = index_.find(mnemonic);
  return it == index_.end() ? nullptr : &specs_[it->second];
}

const InstructionSpec& IsaTable::at(std::string_view mnemonic) const {
  const InstructionSpec* s = find(mnemonic);
  if (!s) throw ParseError("unknown mnemonic " + std::string(mnemonic));
  return *s;
}

namespace {

IsaTable make_builtin() {
  IsaTable t;
  auto add = [&](const char* mn, InstrClass cls, InstrOp op, int l, int s, int d, int i) {
    InstructionSpec spec;
    spec.mnemonic = mn;
    spec.cls = cls;
    spec.op = op;
    spec.length = l;
    spec.sources = s;
    spec.dests = d;
    spec.imm_bits = i;
    spec.mem = cls == InstrClass::Memory;
    spec.res = cls == InstrClass::Resource;
    t.add(std::move(spec));
  };
  using C = InstrClass;
  using O = InstrOp;
  add("add_3r", C::Alu, O::Add3r, 1, 2, 1, 0);
  add("sub_3r", C::Alu, O::Sub3r, 1, 2, 1, 0);
  add("mul_3r", C::Alu, O::Mul3r, 1, 2, 1, 0);
  add("eq_3r", C::Alu, O::Eq3r, 1, 2, 1, 0);
  add("lsu_3r", C::Alu, O::Lsu3r, 1, 2, 1, 0);
  add("neg_2r", C::Alu, O::Neg2r, 1, 1, 1, 0);
  add("add_2rus", C::Alu, O::Add2rus, 1, 1, 1, 4);
  add("shl_2rus", C::Alu, O::Shl2rus, 1, 1, 1, 5);
  add("shr_2rus", C::Alu, O::Shr2rus, 1, 1, 1, 5);
  add("ldc_ru6", C::Alu, O::LdcRu6, 1, 0, 1, 6);
  add("ldc_lru6", C::Alu, O::LdcLru6, 2, 0, 1, 10);
  add("lmul_l6r", C::Alu, O::LmulL6r, 2, 4, 2, 0);
  add("ldw_3r", C::Memory, O::Ldw3r, 1, 2, 1, 0);
  add("stw_3r", C::Memory, O::Stw3r, 1, 3, 0, 0);
  add("ldw_ru6", C::Memory, O::LdwRu6, 1, 1, 1, 6);
  add("stw_ru6", C::Memory, O::StwRu6, 1, 2, 0, 6);
  add("ldw_lru6", C::Memory, O::LdwLru6, 2, 1, 1, 10);
  add("stw_lru6", C::Memory, O::StwLru6, 2, 2, 0, 10);
  add("divu_l3r", C::Divide, O::DivuL3r, 2, 2, 1, 0);
  add("remu_l3r", C::Divide, O::RemuL3r, 2, 2, 1, 0);
  add("bu_u6", C::Branch, O::BuU6, 1, 0, 0, 6);
  add("bu_lu10", C::Branch, O::BuLu10, 2, 0, 0, 16);
  add("bt_ru6", C::Branch, O::BtRu6, 1, 1, 0, 6);
  add("bf_ru6", C::Branch, O::BfRu6, 1, 1, 0, 6);
  add("bt_lru6", C::Branch, O::BtLru6, 2, 1, 0, 10);
  add("bf_lru6", C::Branch, O::BfLru6, 2, 1, 0, 10);
  add("in_2r", C::Resource, O::In2r, 1, 1, 1, 0);
  add("out_2r", C::Resource, O::Out2r, 1, 2, 0, 0);
  add("outct_rus", C::Resource, O::OutctRus, 1, 1, 0, 4);
  add("chkct_rus", C::Resource, O::ChkctRus, 1, 1, 0, 4);
  add("checkend_1r", C::Resource, O::Checkend1r, 1, 1, 0, 0);
  add("fork_u6", C::Resource, O::ForkU6, 1, 0, 0, 6);
  add("join_u6", C::Resource, O::JoinU6, 1, 0, 0, 6);
  add("waiteu_0r", C::Resource, O::Waiteu0r, 1, 0, 0, 0);
  add("fnop", C::Fnop, O::Fnop, 1, 0, 0, 0);
  return t;
}

} // namespace

const IsaTable& IsaTable::builtin() {
  static const IsaTable table = make_builtin();
  return table;
}

IsaTable IsaTable::parse(std::string_view text) {
  const IsaTable& base = builtin();
  IsaTable t;
  int line_no = 0;
  size_t pos = 0;
  bool saw_version = false;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    line_no++;
    std::string_view rest = line, tok;
    if (!next_token(rest, tok)) continue;
    if (tok == "version") {
      saw_version = true;
      continue;
    }
    if (tok != "instr") throw ParseError("expected 'instr' record", line_no);
    std::string_view mn, cls, l, s, d, i, m, r;
    if (!next_token(rest, mn) || !next_token(rest, cls) || !next_token(rest, l) || !next_token(rest, s) ||
        !next_token(rest, d) || !next_token(rest, i) || !next_token(rest, m) || !next_token(rest, r))
      throw ParseError("instr record needs mnemonic class L S D I M R", line_no);
    InstructionSpec spec;
    spec.mnemonic = std::string(mn);
    if (!instr_class_from_name(cls, spec.cls)) throw ParseError("unknown class " + std::string(cls), line_no);
    std::int64_t v;
    if (!parse_i64(l, v)) throw ParseError("bad L", line_no);
    spec.length = static_cast<int>(v);
    if (!parse_i64(s, v)) throw ParseError("bad S", line_no);
    spec.sources = static_cast<int>(v);
    if (!parse_i64(d, v)) throw ParseError("bad D", line_no);
    spec.dests = static_cast<int>(v);
    if (!parse_i64(i, v)) throw ParseError("bad I", line_no);
    spec.imm_bits = static_cast<int>(v);
    spec.mem = m == "1";
    spec.res = r == "1";
    // Simulation semantics come from the builtin table; a data file can only
    // re-tag features of mnemonics the simulator knows.
    if (const InstructionSpec* b = base.find(spec.mnemonic)) spec.op = b->op;
    else throw ParseError("mnemonic " + spec.mnemonic + " has no simulator semantics", line_no);
    try {
      t.add(std::move(spec));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (!saw_version) throw ParseError("missing version header");
  return t;
}

std::string IsaTable::print() const {
  std::ostringstream os;
  os << "version 1\n";
  for (const InstructionSpec& s : specs_) {
    os << "instr " << s.mnemonic << ' ' << instr_class_name(s.cls) << ' ' << s.length << ' ' << s.sources << ' '
       << s.dests << ' ' << s.imm_bits << ' ' << (s.mem ? 1 : 0) << ' ' << (s.res ? 1 : 0) << '\n';
  }
  return os.str();
}

} // namespace netwatt
