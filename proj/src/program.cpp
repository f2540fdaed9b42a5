#include "netwatt/program.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "netwatt/num_io.hpp"

namespace netwatt {

const ThreadStream* Program::find_stream(int core, int thread) const {
  for (const ThreadStream& s : threads)
    if (s.core == core && s.thread == thread) return &s;
  return nullptr;
}

namespace {

// Assembly form table: base mnemonic + operand pattern selects the encoding.
// pattern chars: r = register, i = immediate, c = chanend, L = label.
struct AsmForm {
  const char* base;
  const char* pattern;
  const char* short_mn; // chosen when the immediate/displacement fits
  const char* long_mn;  // chosen by ".l" or when the short form cannot hold the value
};

const AsmForm kForms[] = {
    {"add", "rrr", "add_3r", nullptr},
    {"add", "rri", "add_2rus", nullptr},
    {"sub", "rrr", "sub_3r", nullptr},
    {"mul", "rrr", "mul_3r", nullptr},
    {"eq", "rrr", "eq_3r", nullptr},
    {"lsu", "rrr", "lsu_3r", nullptr},
    {"neg", "rr", "neg_2r", nullptr},
    {"shl", "rri", "shl_2rus", nullptr},
    {"shr", "rri", "shr_2rus", nullptr},
    {"ldc", "ri", "ldc_ru6", "ldc_lru6"},
    {"lmul", "rrrrrr", nullptr, "lmul_l6r"},
    {"ldw", "rrr", "ldw_3r", nullptr},
    {"ldw", "rri", "ldw_ru6", "ldw_lru6"},
    {"stw", "rrr", "stw_3r", nullptr},
    {"stw", "rri", "stw_ru6", "stw_lru6"},
    {"divu", "rrr", nullptr, "divu_l3r"},
    {"remu", "rrr", nullptr, "remu_l3r"},
    {"bu", "L", "bu_u6", "bu_lu10"},
    {"bt", "rL", "bt_ru6", "bt_lru6"},
    {"bf", "rL", "bf_ru6", "bf_lru6"},
    {"in", "rc", "in_2r", nullptr},
    {"out", "cr", "out_2r", nullptr},
    {"outct", "ci", "outct_rus", nullptr},
    {"chkct", "ci", "chkct_rus", nullptr},
    {"checkend", "c", "checkend_1r", nullptr},
    {"fork", "i", "fork_u6", nullptr},
    {"join", "i", "join_u6", nullptr},
    {"waiteu", "", "waiteu_0r", nullptr},
};

std::string base_of(const std::string& mnemonic) {
  size_t us = mnemonic.rfind('_');
  return us == std::string::npos ? mnemonic : mnemonic.substr(0, us);
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

struct RawOperand {
  char kind; // r/i/c/L
  int reg = -1;
  std::int64_t imm = 0;
  int chanend = -1;
  std::string label;
};

std::vector<std::string> split_operands(std::string_view rest, int line_no) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : rest) {
    if (c == '#') break;
    if (c == ',') {
      std::string t(trim(cur));
      if (t.empty()) throw ParseError("empty operand", line_no);
      out.push_back(t);
      cur.clear();
    } else {
      cur += c;
    }
  }
  std::string t(trim(cur));
  if (!t.empty()) out.push_back(t);
  else if (!out.empty()) throw ParseError("trailing comma", line_no);
  return out;
}

RawOperand classify_operand(const std::string& s, int line_no) {
  RawOperand op;
  std::uint64_t u;
  if (s.size() >= 2 && (s[0] == 'r') && std::isdigit(static_cast<unsigned char>(s[1]))) {
    if (!parse_u64(std::string_view(s).substr(1), u) || u > 11)
      throw ParseError("bad register '" + s + "' (r0-r11)", line_no);
    op.kind = 'r';
    op.reg = static_cast<int>(u);
  } else if (s.size() >= 2 && s[0] == 'c' && std::isdigit(static_cast<unsigned char>(s[1]))) {
    if (!parse_u64(std::string_view(s).substr(1), u) || u > 31)
      throw ParseError("bad chanend '" + s + "' (c0-c31)", line_no);
    op.kind = 'c';
    op.chanend = static_cast<int>(u);
  } else if (std::isdigit(static_cast<unsigned char>(s[0]))) {
    if (!parse_u64(s, u)) throw ParseError("bad immediate '" + s + "'", line_no);
    op.kind = 'i';
    op.imm = static_cast<std::int64_t>(u);
  } else if (is_ident_start(s[0]) && std::all_of(s.begin(), s.end(), is_ident_char)) {
    op.kind = 'L';
    op.label = s;
  } else {
    throw ParseError("unrecognised operand '" + s + "'", line_no);
  }
  return op;
}

bool imm_fits(std::int64_t v, int bits) { return v >= 0 && (bits >= 63 || v < (std::int64_t(1) << bits)); }

} // namespace

Program parse_program(std::string_view text, const IsaTable& isa) {
  Program prog;
  ThreadStream* cur = nullptr;
  std::vector<std::string> pending_labels;
  int line_no = 0;
  size_t pos = 0;

  auto finish_stream = [&](ThreadStream* s) {
    if (!s) return;
    for (const std::string& lbl : pending_labels) {
      if (!s->labels.emplace(lbl, static_cast<int>(s->instrs.size())).second)
        throw ParseError("duplicate label '" + lbl + "'", line_no);
    }
    pending_labels.clear();
  };

  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view raw = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    line_no++;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (line.front() == '.') {
      std::string_view rest = line, tok;
      next_token(rest, tok);
      if (tok == ".thread") {
        std::string_view ctok, ttok;
        std::uint64_t core, tid;
        if (!next_token(rest, ctok) || !next_token(rest, ttok) || !parse_u64(ctok, core) || !parse_u64(ttok, tid))
          throw ParseError(".thread needs <core> <thread>", line_no);
        if (tid > 7) throw ParseError("thread id must be 0-7", line_no);
        finish_stream(cur);
        for (const ThreadStream& s : prog.threads)
          if (s.core == static_cast<int>(core) && s.thread == static_cast<int>(tid))
            throw ParseError("duplicate .thread declaration", line_no);
        prog.threads.push_back({});
        cur = &prog.threads.back();
        cur->core = static_cast<int>(core);
        cur->thread = static_cast<int>(tid);
      } else if (tok == ".connect") {
        auto parse_end = [&](std::string_view t, int& core, int& ce) {
          size_t dot = t.find('.');
          std::uint64_t a, b;
          if (dot == std::string_view::npos || !parse_u64(t.substr(0, dot), a) || !parse_u64(t.substr(dot + 1), b) ||
              b > 31)
            throw ParseError(".connect endpoint must be <core>.<chanend>", line_no);
          core = static_cast<int>(a);
          ce = static_cast<int>(b);
        };
        std::string_view ea, eb;
        if (!next_token(rest, ea) || !next_token(rest, eb)) throw ParseError(".connect needs two endpoints", line_no);
        ChanConnect cc;
        parse_end(ea, cc.core_a, cc.ce_a);
        parse_end(eb, cc.core_b, cc.ce_b);
        for (const ChanConnect& e : prog.connects) {
          auto used = [&](int core, int ce) {
            return (e.core_a == core && e.ce_a == ce) || (e.core_b == core && e.ce_b == ce);
          };
          if (used(cc.core_a, cc.ce_a) || used(cc.core_b, cc.ce_b))
            throw ParseError("chanend already connected", line_no);
        }
        prog.connects.push_back(cc);
      } else {
        throw ParseError("unknown directive " + std::string(tok), line_no);
      }
      continue;
    }

    // label definitions, possibly followed by an instruction on the same line
    while (true) {
      size_t colon = line.find(':');
      if (colon == std::string_view::npos) break;
      std::string_view name = trim(line.substr(0, colon));
      if (name.empty() || !is_ident_start(name.front()) ||
          !std::all_of(name.begin(), name.end(), is_ident_char))
        throw ParseError("bad label '" + std::string(name) + "'", line_no);
      pending_labels.emplace_back(name);
      line = trim(line.substr(colon + 1));
    }
    if (line.empty() || line.front() == '#') continue;

    if (!cur) throw ParseError("instruction outside any .thread stream", line_no);

    std::string_view rest = line, mn_tok;
    next_token(rest, mn_tok);
    std::string mn(mn_tok);
    bool force_long = false;
    if (mn.size() > 2 && mn.compare(mn.size() - 2, 2, ".l") == 0) {
      force_long = true;
      mn.resize(mn.size() - 2);
    }
    if (mn == "fnop") throw ParseError("fnop is synthetic and cannot be written", line_no);

    std::vector<std::string> ops = split_operands(rest, line_no);
    std::vector<RawOperand> rops;
    rops.reserve(ops.size());
    std::string pattern;
    for (const std::string& o : ops) {
      rops.push_back(classify_operand(o, line_no));
      pattern += rops.back().kind;
    }

    const AsmForm* form = nullptr;
    bool base_known = false;
    std::string expected;
    for (const AsmForm& f : kForms) {
      if (mn != f.base) continue;
      base_known = true;
      if (!expected.empty()) expected += " or ";
      expected += f.pattern[0] ? f.pattern : "(none)";
      if (pattern == f.pattern) {
        form = &f;
        break;
      }
    }
    if (!base_known) throw ParseError("unknown mnemonic '" + mn + "'", line_no);
    if (!form)
      throw ParseError("operand count mismatch for '" + mn + "' (expected " + expected + ")", line_no);

    AsmInstr ai;
    ai.line = line_no;
    for (const RawOperand& o : rops) {
      switch (o.kind) {
        case 'r': ai.regs[ai.nregs++] = o.reg; break;
        case 'i': ai.imm = o.imm; break;
        case 'c': ai.chanend = o.chanend; break;
        case 'L': ai.target_label = o.label; break;
      }
    }

    const char* chosen = nullptr;
    bool has_imm = pattern.find('i') != std::string::npos;
    bool has_label = pattern.find('L') != std::string::npos;
    if (force_long) {
      if (!form->long_mn) throw ParseError("'" + mn + "' has no long form", line_no);
      chosen = form->long_mn;
    } else if (!form->short_mn) {
      chosen = form->long_mn;
    } else if (has_imm && !imm_fits(ai.imm, isa.at(form->short_mn).imm_bits)) {
      if (!form->long_mn || !imm_fits(ai.imm, isa.at(form->long_mn).imm_bits))
        throw ParseError("immediate " + num_str(ai.imm) + " out of range for '" + mn + "'", line_no);
      chosen = form->long_mn;
    } else {
      chosen = form->short_mn;
    }
    ai.spec = &isa.at(chosen);
    if (has_imm && !imm_fits(ai.imm, ai.spec->imm_bits))
      throw ParseError("immediate " + num_str(ai.imm) + " out of range for '" + mn + "'", line_no);
    (void)has_label;

    ai.address = cur->end_address;
    cur->end_address += ai.spec->size_bytes();
    for (const std::string& lbl : pending_labels) {
      if (!cur->labels.emplace(lbl, static_cast<int>(cur->instrs.size())).second)
        throw ParseError("duplicate label '" + lbl + "'", line_no);
    }
    pending_labels.clear();
    cur->instrs.push_back(std::move(ai));
  }
  finish_stream(cur);

  // resolve branch targets within each stream
  for (ThreadStream& s : prog.threads) {
    for (AsmInstr& ai : s.instrs) {
      if (ai.target_label.empty()) continue;
      auto it = s.labels.find(ai.target_label);
      if (it == s.labels.end())
        throw ParseError("undefined label '" + ai.target_label + "'", ai.line);
      ai.target = it->second;
      std::uint32_t target_addr =
          ai.target < static_cast<int>(s.instrs.size()) ? s.instrs[ai.target].address : s.end_address;
      std::int64_t disp_half = (static_cast<std::int64_t>(target_addr) - ai.address) / 2;
      int bits = ai.spec->imm_bits;
      std::int64_t lo = -(std::int64_t(1) << (bits - 1)), hi = (std::int64_t(1) << (bits - 1)) - 1;
      if (disp_half < lo || disp_half > hi)
        throw ParseError("branch to '" + ai.target_label + "' out of range; use the .l form", ai.line);
    }
  }
  return prog;
}

namespace {

// The form auto-selection would pick for this instruction's operands; used to
// decide whether the canonical print needs a ".l" suffix.
const char* auto_choice(const AsmInstr& ai, const AsmForm& f, const IsaTable& isa) {
  if (!f.short_mn) return f.long_mn;
  if (std::string_view(f.pattern).find('i') != std::string_view::npos &&
      !imm_fits(ai.imm, isa.at(f.short_mn).imm_bits))
    return f.long_mn;
  return f.short_mn;
}

} // namespace

std::string print_program(const Program& p) {
  const IsaTable& isa = IsaTable::builtin();
  std::ostringstream os;
  for (const ChanConnect& c : p.connects)
    os << ".connect " << c.core_a << '.' << c.ce_a << ' ' << c.core_b << '.' << c.ce_b << '\n';
  for (const ThreadStream& s : p.threads) {
    os << ".thread " << s.core << ' ' << s.thread << '\n';
    std::vector<std::vector<std::string>> labels_at(s.instrs.size() + 1);
    for (const auto& [name, idx] : s.labels) labels_at[idx].push_back(name);
    for (auto& v : labels_at) std::sort(v.begin(), v.end());
    for (size_t i = 0; i <= s.instrs.size(); i++) {
      for (const std::string& lbl : labels_at[i]) os << lbl << ":\n";
      if (i == s.instrs.size()) break;
      const AsmInstr& ai = s.instrs[i];
      std::string base = base_of(ai.spec->mnemonic);
      const AsmForm* form = nullptr;
      for (const AsmForm& f : kForms) {
        if (base == f.base &&
            ((f.short_mn && ai.spec->mnemonic == f.short_mn) || (f.long_mn && ai.spec->mnemonic == f.long_mn))) {
          form = &f;
          break;
        }
      }
      os << "    " << base;
      if (form && ai.spec->mnemonic != auto_choice(ai, *form, isa)) os << ".l";
      const char* pat = form ? form->pattern : "";
      int reg_i = 0;
      bool first = true;
      for (const char* pc = pat; *pc; pc++) {
        os << (first ? " " : ", ");
        first = false;
        switch (*pc) {
          case 'r': os << 'r' << ai.regs[reg_i++]; break;
          case 'i': os << ai.imm; break;
          case 'c': os << 'c' << ai.chanend; break;
          case 'L': os << ai.target_label; break;
        }
      }
      os << '\n';
    }
  }
  return os.str();
}

} // namespace netwatt
