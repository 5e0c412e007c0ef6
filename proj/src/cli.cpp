#include "egpu/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "egpu/assembler.hpp"
#include "egpu/error.hpp"
#include "egpu/image.hpp"
#include "egpu/machine.hpp"

namespace egpu::cli {

namespace {

struct RunOptions {
  std::string input;
  unsigned threads = 0;  // 0: keep the image's declared count
  MachineConfig cfg;
  std::string backend = "reference";
  std::uint64_t max_cycles = 100'000'000;
  bool permissive = false;
  bool stats = false;
  std::string init_shared;
  std::uint32_t init_offset = 0;
  std::string dump_shared;
  std::uint32_t dump_offset = 0;
  std::uint32_t dump_length = 0;  // 0: to the end
  std::string output;
};

void add_machine_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("input", o.input, "Program image or assembly source")->required();
  cmd->add_option("--threads", o.threads, "Override the declared thread count");
  cmd->add_option("--max-threads", o.cfg.max_threads, "Thread ceiling (<= 4096)");
  cmd->add_option("--regs-per-thread", o.cfg.regs_per_thread, "Registers per thread");
  cmd->add_option("--shared-words", o.cfg.shared_mem_words, "Shared memory size in 32-bit words");
  cmd->add_flag("--predicates", o.cfg.predicates_enabled, "Enable the predicate file");
  cmd->add_option("--fetch-stages", o.cfg.fetch_decode_stages, "Fetch/decode pipeline depth");
  cmd->add_option("--backend", o.backend, "reference | bittrue")
      ->check(CLI::IsMember({"reference", "bittrue"}));
  cmd->add_option("--max-cycles", o.max_cycles, "Stop after this many clocks");
  cmd->add_flag("--permissive", o.permissive, "Wrap out-of-range shared addresses");
  cmd->add_option("--init-shared", o.init_shared, "Raw little-endian words loaded into shared memory");
  cmd->add_option("--init-offset", o.init_offset, "Word offset for --init-shared");
}

std::vector<std::uint32_t> words_from_bytes(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 4 != 0) throw std::runtime_error("memory image size is not a multiple of 4 bytes");
  std::vector<std::uint32_t> words(bytes.size() / 4);
  for (std::size_t k = 0; k < words.size(); ++k)
    words[k] = bytes[4 * k] | bytes[4 * k + 1] << 8 | bytes[4 * k + 2] << 16 |
               static_cast<std::uint32_t>(bytes[4 * k + 3]) << 24;
  return words;
}

std::vector<std::uint8_t> bytes_from_words(std::span<const std::uint32_t> words) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(words.size() * 4);
  for (std::uint32_t w : words)
    for (int k = 0; k < 4; ++k) bytes.push_back(static_cast<std::uint8_t>(w >> (8 * k)));
  return bytes;
}

std::string read_text(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

ProgramImage load_program(const std::string& path, bool predicates) {
  const auto bytes = read_file_bytes(path);
  if (looks_like_image(bytes)) return deserialize(bytes);
  return assemble(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                  AsmOptions{predicates});
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

int do_asm(const std::string& input, const std::string& output, bool predicates, std::ostream& err) {
  const ProgramImage img = assemble(read_text(input), AsmOptions{predicates});
  write_image_file(output, img);
  err << "assembled " << img.words.size() << " instructions -> " << output << '\n';
  return kOk;
}

int do_disasm(const std::string& input, const std::string& output, std::ostream& out) {
  const std::string text = disassemble(read_image_file(input));
  if (output.empty()) {
    out << text;
  } else {
    std::ofstream f(output, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + output);
    f << text;
  }
  return kOk;
}

int do_run(RunOptions& o, bool trace_mode, std::ostream& out, std::ostream& err) {
  o.cfg.strict_memory = !o.permissive;
  ProgramImage img = load_program(o.input, o.cfg.predicates_enabled);
  if (o.threads != 0) img.declared_threads = o.threads;

  Machine machine(img, o.cfg, o.backend == "bittrue" ? Backend::BitTrue : Backend::Reference);
  if (!o.init_shared.empty()) machine.load_shared(o.init_offset, words_from_bytes(read_file_bytes(o.init_shared)));

  const RunResult r = machine.run(o.max_cycles, trace_mode);

  if (trace_mode) {
    std::ofstream file;
    std::ostream* sink = &out;
    if (!o.output.empty()) {
      file.open(o.output, std::ios::trunc);
      if (!file) throw std::runtime_error("cannot write " + o.output);
      sink = &file;
    }
    *sink << "pc,mnemonic,threads,depth,width,cycles,cumulative,flush_bubbles\n";
    for (const auto& t : r.trace)
      *sink << t.pc << ',' << t.mnemonic << ',' << t.shape.active_threads << ',' << t.shape.depth << ','
            << t.shape.width << ',' << t.cycles << ',' << t.cumulative << ',' << t.flush_bubbles << '\n';
  } else {
    out << "stop=" << to_string(r.stop) << '\n';
    if (r.trap) out << "trap=" << to_string(r.trap->code) << '\n';
    out << "total_cycles=" << r.total_cycles << '\n';
    out << "instructions=" << r.instructions_retired << '\n';
    if (o.stats) {
      for (std::size_t c = 0; c < kNumClasses; ++c)
        out << "cycles_by_class." << to_string(static_cast<OpClass>(c)) << '=' << r.cycles_by_class[c] << '\n';
      out << "flush_bubbles=" << r.flush_bubbles << '\n';
      out << "truncated_cycles=" << r.truncated_cycles << '\n';
    }
    out << "shared_digest=" << hex64(shared_digest(r.final.shared)) << '\n';
  }

  if (!o.dump_shared.empty()) {
    const auto& shared = r.final.shared;
    if (o.dump_offset > shared.size()) throw std::runtime_error("--dump-offset beyond shared memory");
    std::size_t len = o.dump_length ? o.dump_length : shared.size() - o.dump_offset;
    if (o.dump_offset + len > shared.size()) throw std::runtime_error("--dump-length beyond shared memory");
    write_file_bytes(o.dump_shared,
                     bytes_from_words(std::span<const std::uint32_t>(shared).subspan(o.dump_offset, len)));
  }

  if (r.stop == StopReason::Trap) {
    err << "trap: " << to_string(r.trap->code) << " at pc " << r.trap->pc << ": " << r.trap->detail << '\n';
    return kTrap;
  }
  return kOk;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Assembler, disassembler and cycle-accurate simulator for a 16-lane SIMT soft GPU"};
  app.name("egpu");
  app.require_subcommand(1);

  std::string asm_in, asm_out;
  bool asm_predicates = false;
  auto* asm_cmd = app.add_subcommand("asm", "Assemble source into a program image");
  asm_cmd->add_option("input", asm_in, "Assembly source")->required();
  asm_cmd->add_option("-o,--output", asm_out, "Output image")->required();
  asm_cmd->add_flag("--predicates", asm_predicates, "Allow predicate guards and SETP/SELP");

  std::string dis_in, dis_out;
  auto* dis_cmd = app.add_subcommand("disasm", "Render a program image as assembly");
  dis_cmd->add_option("input", dis_in, "Program image")->required();
  dis_cmd->add_option("-o,--output", dis_out, "Output file (default stdout)");

  RunOptions run_opts;
  auto* run_cmd = app.add_subcommand("run", "Run a kernel and report cycle statistics");
  add_machine_options(run_cmd, run_opts);
  run_cmd->add_flag("--stats", run_opts.stats, "Print per-class cycle breakdown");
  run_cmd->add_option("--dump-shared", run_opts.dump_shared, "Write final shared memory to a file");
  run_cmd->add_option("--dump-offset", run_opts.dump_offset, "First word for --dump-shared");
  run_cmd->add_option("--dump-length", run_opts.dump_length, "Word count for --dump-shared");

  RunOptions trace_opts;
  auto* trace_cmd = app.add_subcommand("trace", "Run a kernel and print one CSV row per retired instruction");
  add_machine_options(trace_cmd, trace_opts);
  trace_cmd->add_option("-o,--output", trace_opts.output, "CSV file (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*asm_cmd) return do_asm(asm_in, asm_out, asm_predicates, err);
    if (*dis_cmd) return do_disasm(dis_in, dis_out, out);
    if (*run_cmd) return do_run(run_opts, false, out, err);
    if (*trace_cmd) return do_run(trace_opts, true, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    if (is_trap(e.code())) return kTrap;
    if (e.code() == ErrorCode::InvalidConfig) return kUsage;
    return kAssembly;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace egpu::cli
