#include "egpu/assembler.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "egpu/error.hpp"

namespace egpu {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$';
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !is_ident_start(s.front())) return false;
  return std::all_of(s.begin(), s.end(), is_ident_char);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t k = 0; k <= s.size(); ++k) {
    if (k == s.size() || s[k] == sep) {
      out.push_back(s.substr(start, k - start));
      start = k + 1;
    }
  }
  return out;
}

// Parses decimal, 0x hex or 0b binary with an optional leading sign.
std::optional<std::int64_t> parse_integer(std::string_view s) {
  s = trim(s);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  } else if (s.size() > 2 && s[0] == '0' && (s[1] == 'b' || s[1] == 'B')) {
    base = 2;
    s.remove_prefix(2);
  }
  if (s.empty()) return std::nullopt;
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value, base);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  if (value > (1ull << 40)) return std::int64_t{1} << 41;  // out of any field's range
  const auto v = static_cast<std::int64_t>(value);
  return negative ? -v : v;
}

struct SourceLine {
  std::uint32_t line;
  std::string_view guard;  // "@p0" etc. or empty
  std::string_view mnemonic;
  std::vector<std::string_view> operands;
};

class Assembler {
 public:
  Assembler(std::string_view source, const AsmOptions& opts) : source_(source), opts_(opts) {}

  ProgramImage run() {
    collect();
    ProgramImage img;
    img.words.reserve(lines_.size());
    for (const auto& sl : lines_) img.words.push_back(encode_line(sl));
    if (threads_) img.declared_threads = *threads_;
    if (entry_label_) img.entry = resolve_target(entry_label_->second, entry_label_->first);
    return img;
  }

 private:
  [[noreturn]] void fail(ErrorCode code, std::uint32_t line, const std::string& why) const {
    throw Error(code, why, line);
  }

  // Pass 1: labels, directives, instruction text.
  void collect() {
    std::uint32_t line_no = 0;
    for (std::string_view raw : split(source_, '\n')) {
      ++line_no;
      if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
      std::string_view rest = trim(raw);

      while (true) {
        auto colon = rest.find(':');
        if (colon == std::string_view::npos) break;
        std::string_view name = trim(rest.substr(0, colon));
        if (!is_identifier(name)) break;
        if (!labels_.emplace(std::string(name), static_cast<std::uint32_t>(lines_.size())).second)
          fail(ErrorCode::DuplicateLabel, line_no, "label '" + std::string(name) + "'");
        rest = trim(rest.substr(colon + 1));
      }
      if (rest.empty()) continue;

      if (rest.front() == '.') {
        directive(rest, line_no);
        continue;
      }

      SourceLine sl{line_no, {}, {}, {}};
      if (rest.front() == '@') {
        auto ws = rest.find_first_of(" \t");
        if (ws == std::string_view::npos) fail(ErrorCode::ParseError, line_no, "guard without instruction");
        sl.guard = rest.substr(0, ws);
        rest = trim(rest.substr(ws));
      }
      auto ws = rest.find_first_of(" \t");
      sl.mnemonic = rest.substr(0, ws);
      if (ws != std::string_view::npos) {
        std::string_view ops = trim(rest.substr(ws));
        if (!ops.empty())
          for (auto op : split(ops, ',')) sl.operands.push_back(trim(op));
      }
      lines_.push_back(std::move(sl));
    }
  }

  void directive(std::string_view text, std::uint32_t line) {
    auto ws = text.find_first_of(" \t");
    const std::string name = upper(text.substr(0, ws));
    const std::string_view arg = ws == std::string_view::npos ? std::string_view{} : trim(text.substr(ws));
    if (name == ".THREADS") {
      auto n = parse_integer(arg);
      if (!n) fail(ErrorCode::ParseError, line, "expected thread count after .threads");
      if (*n < 1 || *n > static_cast<std::int64_t>(kMaxThreads))
        fail(ErrorCode::OperandRange, line, ".threads must be in 1..4096");
      threads_ = static_cast<std::uint32_t>(*n);
    } else if (name == ".ENTRY") {
      if (arg.empty()) fail(ErrorCode::ParseError, line, "expected label after .entry");
      entry_label_ = {line, arg};
    } else {
      fail(ErrorCode::ParseError, line, "unknown directive '" + std::string(text.substr(0, ws)) + "'");
    }
  }

  std::uint32_t resolve_target(std::string_view text, std::uint32_t line) const {
    if (!text.empty() && (std::isdigit(static_cast<unsigned char>(text.front())) || text.front() == '-' ||
                          text.front() == '+')) {
      auto n = parse_integer(text);
      if (!n) fail(ErrorCode::ParseError, line, "bad target '" + std::string(text) + "'");
      if (*n < 0 || *n > kImmMax) fail(ErrorCode::OperandRange, line, "target out of range");
      return static_cast<std::uint32_t>(*n);
    }
    if (!is_identifier(text)) fail(ErrorCode::ParseError, line, "bad label '" + std::string(text) + "'");
    auto it = labels_.find(std::string(text));
    if (it == labels_.end()) fail(ErrorCode::UndefinedLabel, line, "'" + std::string(text) + "'");
    return it->second;
  }

  std::uint8_t reg(std::string_view text, std::uint32_t line) const {
    if (text.size() < 2 || (text[0] != 'r' && text[0] != 'R'))
      fail(ErrorCode::ParseError, line, "expected register, got '" + std::string(text) + "'");
    auto n = parse_integer(text.substr(1));
    if (!n || !std::isdigit(static_cast<unsigned char>(text[1])))
      fail(ErrorCode::ParseError, line, "bad register '" + std::string(text) + "'");
    if (*n > 255) fail(ErrorCode::OperandRange, line, "register " + std::string(text) + " exceeds r255");
    return static_cast<std::uint8_t>(*n);
  }

  std::uint8_t pred(std::string_view text, std::uint32_t line) const {
    if (text.size() < 2 || (text[0] != 'p' && text[0] != 'P'))
      fail(ErrorCode::ParseError, line, "expected predicate, got '" + std::string(text) + "'");
    auto n = parse_integer(text.substr(1));
    if (!n || !std::isdigit(static_cast<unsigned char>(text[1])))
      fail(ErrorCode::ParseError, line, "bad predicate '" + std::string(text) + "'");
    if (*n >= static_cast<std::int64_t>(kNumPredicates))
      fail(ErrorCode::OperandRange, line, "predicate " + std::string(text) + " exceeds p7");
    return static_cast<std::uint8_t>(*n);
  }

  std::uint8_t mem_operand(std::string_view text, std::uint32_t line) const {
    if (text.size() < 3 || text.front() != '[' || text.back() != ']')
      fail(ErrorCode::ParseError, line, "expected [rN], got '" + std::string(text) + "'");
    return reg(trim(text.substr(1, text.size() - 2)), line);
  }

  std::int32_t imm(std::string_view text, std::uint32_t line) const {
    auto n = parse_integer(text);
    if (!n) fail(ErrorCode::ParseError, line, "bad immediate '" + std::string(text) + "'");
    if (*n < kImmMin || *n > kImmMax)
      fail(ErrorCode::OperandRange, line, "immediate " + std::string(text) + " exceeds 24 bits");
    return static_cast<std::int32_t>(*n);
  }

  Opcode mnemonic(const SourceLine& sl, Instr& i) const {
    auto parts = split(sl.mnemonic, '.');
    std::string base = upper(parts[0]);
    std::size_t next = 1;
    if ((base == "MOV" || base == "SETP") && parts.size() > 1) {
      const std::string sub = upper(parts[1]);
      if ((base == "MOV" && (sub == "TID" || sub == "NTID")) || base == "SETP") {
        base += "." + sub;
        next = 2;
      }
    }
    const OpcodeInfo* found = nullptr;
    for (const auto& oi : all_opcodes())
      if (oi.mnemonic == base) found = &oi;
    if (!found) fail(ErrorCode::UnknownMnemonic, sl.line, "'" + std::string(sl.mnemonic) + "'");

    bool saw_half = false;
    for (; next < parts.size(); ++next) {
      const std::string mod = upper(parts[next]);
      if (mod == "S32" || mod == "U32") {
        if (!found->allows_signed)
          fail(ErrorCode::ParseError, sl.line, "." + std::string(parts[next]) + " not valid on " + base);
        i.is_signed = mod == "S32";
      } else if (mod == "HI" || mod == "LO") {
        if (found->op != Opcode::MUL)
          fail(ErrorCode::ParseError, sl.line, "." + std::string(parts[next]) + " only valid on MUL");
        if (saw_half) fail(ErrorCode::ParseError, sl.line, "duplicate .hi/.lo");
        saw_half = true;
        i.hi = mod == "HI";
      } else if (mod.size() > 1 && mod[0] == 'N' && std::isdigit(static_cast<unsigned char>(mod[1]))) {
        if (!found->allows_scale)
          fail(ErrorCode::ParseError, sl.line, "thread scale not valid on " + base);
        auto n = parse_integer(std::string_view(mod).substr(1));
        if (!n) fail(ErrorCode::ParseError, sl.line, "bad thread scale ." + std::string(parts[next]));
        if (*n < 1 || *n > static_cast<std::int64_t>(kMaxThreads))
          fail(ErrorCode::OperandRange, sl.line, "thread scale must be in 1..4096");
        i.scale = static_cast<std::uint16_t>(*n);
      } else {
        fail(ErrorCode::ParseError, sl.line, "unknown modifier ." + std::string(parts[next]));
      }
    }
    return found->op;
  }

  std::uint64_t encode_line(const SourceLine& sl) const {
    Instr i;
    i.op = mnemonic(sl, i);
    const OpcodeInfo& oi = info(i.op);
    const std::uint32_t line = sl.line;

    if (!sl.guard.empty()) {
      if (!opts_.predicates_enabled)
        fail(ErrorCode::GuardWithoutPredicates, line, "'" + std::string(sl.guard) + "'");
      if (!oi.allows_guard) fail(ErrorCode::ParseError, line, "guard not valid on " + std::string(oi.mnemonic));
      std::string_view g = sl.guard.substr(1);
      Guard guard;
      if (!g.empty() && g.front() == '!') {
        guard.negated = true;
        g.remove_prefix(1);
      }
      guard.index = pred(g, line);
      i.guard = guard;
    }
    if ((oi.form == OperandForm::SetPred || oi.form == OperandForm::Select) && !opts_.predicates_enabled)
      fail(ErrorCode::PredicatesDisabled, line, std::string(oi.mnemonic) + " needs predicates enabled");

    const auto& ops = sl.operands;
    auto expect = [&](std::size_t n) {
      if (ops.size() != n)
        fail(ErrorCode::ParseError, line,
             std::string(oi.mnemonic) + " takes " + std::to_string(n) + " operand(s), got " +
                 std::to_string(ops.size()));
    };

    switch (oi.form) {
      case OperandForm::None:
        expect(0);
        break;
      case OperandForm::DstSrcSrc:
        expect(3);
        i.dst = reg(ops[0], line);
        i.src1 = reg(ops[1], line);
        i.src2 = reg(ops[2], line);
        break;
      case OperandForm::DstSrc:
        expect(2);
        i.dst = reg(ops[0], line);
        i.src1 = reg(ops[1], line);
        break;
      case OperandForm::DstImm:
        expect(2);
        i.dst = reg(ops[0], line);
        i.imm = imm(ops[1], line);
        break;
      case OperandForm::Dst:
        expect(1);
        i.dst = reg(ops[0], line);
        break;
      case OperandForm::Load:
        expect(2);
        i.dst = reg(ops[0], line);
        i.src1 = mem_operand(ops[1], line);
        break;
      case OperandForm::Store:
        expect(2);
        i.src1 = mem_operand(ops[0], line);
        i.src2 = reg(ops[1], line);
        break;
      case OperandForm::SetPred:
        expect(3);
        i.dst = pred(ops[0], line);
        i.src1 = reg(ops[1], line);
        i.src2 = reg(ops[2], line);
        break;
      case OperandForm::Select:
        expect(4);
        i.dst = reg(ops[0], line);
        i.src1 = reg(ops[1], line);
        i.src2 = reg(ops[2], line);
        i.imm = pred(ops[3], line);
        break;
      case OperandForm::Target:
        expect(1);
        i.imm = static_cast<std::int32_t>(resolve_target(ops[0], line));
        break;
      case OperandForm::Loop: {
        expect(2);
        auto n = parse_integer(ops[0]);
        if (!n) fail(ErrorCode::ParseError, line, "bad loop count '" + std::string(ops[0]) + "'");
        if (*n < 1 || *n > 0xFFFF) fail(ErrorCode::OperandRange, line, "loop count must be in 1..65535");
        set_loop_count(i, static_cast<std::uint16_t>(*n));
        i.imm = static_cast<std::int32_t>(resolve_target(ops[1], line));
        break;
      }
    }

    try {
      return encode_instruction(i);
    } catch (const Error& e) {
      fail(ErrorCode::OperandRange, line, e.detail());
    }
  }

  std::string_view source_;
  AsmOptions opts_;
  std::vector<SourceLine> lines_;
  std::unordered_map<std::string, std::uint32_t> labels_;
  std::optional<std::uint32_t> threads_;
  std::optional<std::pair<std::uint32_t, std::string_view>> entry_label_;
};

std::string label_name(std::uint32_t index) { return "L" + std::to_string(index); }

}  // namespace

ProgramImage assemble(std::string_view source, const AsmOptions& opts) {
  return Assembler(source, opts).run();
}

std::string format_mnemonic(const Instr& i) {
  std::string out(info(i.op).mnemonic);
  if (i.op == Opcode::MUL) out += i.hi ? ".hi" : ".lo";
  if (i.is_signed) out += ".s32";
  if (i.scale) out += ".n" + std::to_string(*i.scale);
  return out;
}

std::string format_instruction(const Instr& i, std::string_view target_label) {
  const OpcodeInfo& oi = info(i.op);
  std::ostringstream os;
  if (i.guard) os << '@' << (i.guard->negated ? "!" : "") << 'p' << int(i.guard->index) << ' ';
  os << format_mnemonic(i);

  auto r = [](std::uint8_t n) { return "r" + std::to_string(n); };
  auto p = [](int n) { return "p" + std::to_string(n); };
  auto target = [&]() {
    return target_label.empty() ? std::to_string(i.imm) : std::string(target_label);
  };

  switch (oi.form) {
    case OperandForm::None: break;
    case OperandForm::DstSrcSrc: os << ' ' << r(i.dst) << ", " << r(i.src1) << ", " << r(i.src2); break;
    case OperandForm::DstSrc: os << ' ' << r(i.dst) << ", " << r(i.src1); break;
    case OperandForm::DstImm: os << ' ' << r(i.dst) << ", " << i.imm; break;
    case OperandForm::Dst: os << ' ' << r(i.dst); break;
    case OperandForm::Load: os << ' ' << r(i.dst) << ", [" << r(i.src1) << ']'; break;
    case OperandForm::Store: os << " [" << r(i.src1) << "], " << r(i.src2); break;
    case OperandForm::SetPred: os << ' ' << p(i.dst) << ", " << r(i.src1) << ", " << r(i.src2); break;
    case OperandForm::Select:
      os << ' ' << r(i.dst) << ", " << r(i.src1) << ", " << r(i.src2) << ", " << p(i.imm);
      break;
    case OperandForm::Target: os << ' ' << target(); break;
    case OperandForm::Loop: os << ' ' << loop_count(i) << ", " << target(); break;
  }
  return os.str();
}

std::string disassemble(const ProgramImage& img) {
  const auto instrs = decode_all(img);
  const auto size = static_cast<std::uint32_t>(instrs.size());

  std::set<std::uint32_t> labelled;
  for (const auto& i : instrs) {
    const auto form = info(i.op).form;
    if ((form == OperandForm::Target || form == OperandForm::Loop) &&
        static_cast<std::uint32_t>(i.imm) <= size)
      labelled.insert(static_cast<std::uint32_t>(i.imm));
  }
  if (img.entry != 0 && img.entry <= size) labelled.insert(img.entry);

  std::ostringstream os;
  os << ".threads " << img.declared_threads << '\n';
  if (img.entry != 0) {
    if (img.entry <= size)
      os << ".entry " << label_name(img.entry) << '\n';
    else
      os << ".entry " << img.entry << '\n';
  }
  for (std::uint32_t k = 0; k < size; ++k) {
    if (labelled.count(k)) os << label_name(k) << ":\n";
    const Instr& i = instrs[k];
    const auto form = info(i.op).form;
    std::string label;
    if ((form == OperandForm::Target || form == OperandForm::Loop) && labelled.count(static_cast<std::uint32_t>(i.imm)))
      label = label_name(static_cast<std::uint32_t>(i.imm));
    os << "    " << format_instruction(i, label) << '\n';
  }
  if (labelled.count(size)) os << label_name(size) << ":\n";
  return os.str();
}

}  // namespace egpu
