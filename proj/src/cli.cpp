#include "fitolab/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fitolab/detect.hpp"
#include "fitolab/oracle.hpp"
#include "fitolab/report.hpp"

namespace fitolab {

namespace {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw IoError("cannot write " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Strategy strategy_or_throw(const std::string& name) {
  auto s = parse_strategy(name);
  if (!s) throw std::invalid_argument("unknown strategy: " + name);
  return *s;
}

std::string finding_counts(const std::vector<Finding>& findings) {
  std::map<std::string_view, int> counts;
  for (const auto& f : findings) ++counts[to_string(f.pathology)];
  if (counts.empty()) return "-";
  std::string out;
  for (const auto& [name, n] : counts) {
    if (!out.empty()) out += ',';
    out += std::string(name) + ":" + std::to_string(n);
  }
  return out;
}

std::string file_stem(const std::string& key, const Strategy& s, SignalMode mode) {
  std::string name = key + "-" + to_string(s) + "-" + std::string(to_string(mode));
  std::ranges::replace(name, '(', '-');
  std::erase(name, ')');
  return name;
}

const char* yes_no(bool b) { return b ? "yes" : "no"; }

struct RunResult {
  Trace trace;
  std::vector<Finding> findings;
  FitoVerdict verdict;
};

RunResult execute(const Scenario& scenario, const RunConfig& config) {
  Simulator sim(scenario, config);
  RunResult r{sim.run_until_quiescent(), {}, {}};
  r.findings = detect_all(r.trace);
  r.verdict = classify_fito(r.trace, r.findings);
  return r;
}

int cmd_run(const std::string& scenario_ref, const std::string& strategy_name, const std::string& mode_name,
            bool causal, std::uint64_t seed, const std::string& trace_out, const std::string& report_out,
            bool expect_clean, std::ostream& out) {
  const auto scenario = resolve_scenario(scenario_ref);
  const auto strategy = strategy_or_throw(strategy_name);
  const auto mode = parse_signal_mode(mode_name);
  if (!mode) throw std::invalid_argument("unknown mode: " + mode_name);

  const auto result = execute(scenario, RunConfig{strategy, *mode, causal, seed});
  const auto report = emit_report(result.trace, result.findings, result.verdict);
  if (!trace_out.empty()) write_file(trace_out, format_trace(result.trace));
  if (report_out.empty()) {
    out << report;
  } else {
    write_file(report_out, report);
    out << scenario.name << ": " << result.findings.size() << " finding(s), pattern "
        << (result.verdict.pattern_present() ? "present" : "absent") << "\n";
  }
  return expect_clean && !result.findings.empty() ? kExitFindings : kExitOk;
}

int cmd_list(std::ostream& out) {
  out << "scenarios\n";
  for (const auto& [key, s] : builtin_scenarios()) {
    out << "  " << std::left << std::setw(4) << key << std::setw(20) << s.name << s.replicas.size() << " replicas, "
        << s.script.size() << " script lines\n";
  }
  out << "strategies\n";
  for (const auto& s : all_strategies()) out << "  " << to_string(s) << "\n";
  out << "modes\n  CompletionOnly\n  ReflectedCommitment\n";
  return kExitOk;
}

int cmd_verify(const std::string& strategy_name, std::size_t max_ops, std::ostream& out) {
  const auto strategy = strategy_or_throw(strategy_name);
  const bool causal = native_causal_delivery(strategy);
  bool ok = true;
  for (const auto& [key, scenario] : builtin_scenarios()) {
    const auto result = execute(scenario, RunConfig{strategy, SignalMode::ReflectedCommitment, causal, 0});
    const auto ops = causal_prefix(result.trace.graph, max_ops);
    const bool complete = ops.size() == result.trace.graph.size();
    const auto oracle = brute_force_converge(scenario, ops, strategy, causal, max_ops);
    std::string agreement = "n/a";
    if (complete) {
      const bool among = std::ranges::all_of(result.trace.finals, [&](const auto& kv) {
        return oracle.outcomes.contains(kv.second.canonical);
      });
      agreement = yes_no(among);
      ok = ok && among;
    }
    ok = ok && oracle.converged;
    out << std::left << std::setw(4) << key << std::setw(20) << scenario.name << "ops=" << ops.size() << "/"
        << result.trace.graph.size() << " orders=" << oracle.orders << " outcomes=" << oracle.outcomes.size()
        << " converged=" << yes_no(oracle.converged) << " simulator_among=" << agreement;
    if (!oracle.converged) {
      out << " counterexample=[";
      for (std::size_t i = 0; i < oracle.counterexample.size(); ++i) {
        out << (i ? "," : "") << to_string(oracle.counterexample[i]);
      }
      out << "]";
    }
    out << "\n";
  }
  return ok ? kExitOk : kExitFindings;
}

}  // namespace

bool native_causal_delivery(const Strategy& s) { return !is_lww(s); }

Scenario resolve_scenario(const std::string& ref) {
  const auto& builtins = builtin_scenarios();
  if (auto it = builtins.find(ref); it != builtins.end()) return it->second;
  for (const auto& [key, s] : builtins) {
    if (s.name == ref) return s;
  }
  if (std::filesystem::is_regular_file(ref)) return parse_scenario(read_file(ref));
  throw std::invalid_argument("unknown scenario: " + ref);
}

std::string run_matrix(std::uint64_t seed, const std::filesystem::path* dir) {
  std::ostringstream table;
  table << std::left << std::setw(4) << "key" << std::setw(10) << "domain" << std::setw(38) << "strategy"
        << std::setw(21) << "mode" << std::setw(7) << "causal" << std::setw(8) << "forward" << std::setw(7)
        << "absent" << std::setw(11) << "masquerade" << std::setw(10) << "invisible" << std::setw(8) << "pattern"
        << "findings\n";
  for (const auto& [key, scenario] : builtin_scenarios()) {
    for (const auto& strategy : all_strategies()) {
      for (auto mode : {SignalMode::CompletionOnly, SignalMode::ReflectedCommitment}) {
        const RunConfig config{strategy, mode, native_causal_delivery(strategy), seed};
        const auto r = execute(scenario, config);
        const auto& v = r.verdict;
        table << std::setw(4) << key << std::setw(10) << domain_of(r.trace) << std::setw(38) << to_string(strategy)
              << std::setw(21) << to_string(mode) << std::setw(7) << (config.causal_delivery ? "on" : "off")
              << std::setw(8) << yes_no(v.forward_commitment) << std::setw(7) << yes_no(v.absent_reflection)
              << std::setw(11) << yes_no(v.completion_masquerade) << std::setw(10) << yes_no(v.invisible_corruption)
              << std::setw(8) << (v.pattern_present() ? "present" : "absent") << finding_counts(r.findings) << "\n";
        if (dir) {
          const auto stem = file_stem(key, strategy, mode);
          write_file(*dir / (stem + ".trace"), format_trace(r.trace));
          write_file(*dir / (stem + ".report"), emit_report(r.trace, r.findings, r.verdict));
        }
      }
    }
  }
  if (dir) write_file(*dir / "matrix.txt", table.str());
  return table.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Replica sync simulator and pathology detector"};
  app.name("fitolab");
  app.require_subcommand(1);

  std::string scenario_ref;
  std::string strategy_name;
  std::string mode_name = "CompletionOnly";
  bool causal = false;
  std::uint64_t seed = 0;
  std::string trace_out;
  std::string report_out;
  bool expect_clean = false;
  auto* run = app.add_subcommand("run", "Run one scenario and print its report");
  run->add_option("--scenario", scenario_ref, "Built-in key, built-in name, or scenario file")->required();
  run->add_option("--strategy", strategy_name, "Conflict resolution strategy")->required();
  run->add_option("--mode", mode_name, "CompletionOnly or ReflectedCommitment");
  run->add_flag("--causal-delivery", causal, "Buffer remote ops until their dependencies are applied");
  run->add_option("--seed", seed, "Jitter seed");
  run->add_option("--trace", trace_out, "Write the trace here");
  run->add_option("--report", report_out, "Write the report here instead of stdout");
  run->add_flag("--expect-clean", expect_clean, "Exit 1 when any finding is reported");

  auto* list = app.add_subcommand("list", "List built-in scenarios, strategies and modes");

  std::string show_ref;
  auto* show = app.add_subcommand("show", "Print a scenario in canonical form");
  show->add_option("--scenario", show_ref, "Built-in key, built-in name, or scenario file")->required();

  std::string verify_strategy;
  std::size_t max_ops = kOracleBound;
  auto* verify = app.add_subcommand("verify", "Check every built-in against the delivery-order oracle");
  verify->add_option("--strategy", verify_strategy, "Strategy to check")->required();
  verify->add_option("--max-ops", max_ops, "Ops per enumeration (causal prefix)")->check(CLI::Range(0, 9));

  std::uint64_t matrix_seed = 0;
  std::string matrix_dir;
  auto* matrix = app.add_subcommand("matrix", "All built-ins x all strategies x both modes");
  matrix->add_option("--seed", matrix_seed, "Jitter seed");
  matrix->add_option("--out", matrix_dir, "Directory for traces, reports and matrix.txt");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) {
      return cmd_run(scenario_ref, strategy_name, mode_name, causal, seed, trace_out, report_out, expect_clean, out);
    }
    if (*list) return cmd_list(out);
    if (*show) {
      scenario_ref = show_ref;
      out << print_scenario(resolve_scenario(show_ref));
      return kExitOk;
    }
    if (*verify) return cmd_verify(verify_strategy, max_ops, out);
    if (*matrix) {
      if (matrix_dir.empty()) {
        out << run_matrix(matrix_seed, nullptr);
      } else {
        const std::filesystem::path dir(matrix_dir);
        std::filesystem::create_directories(dir);
        out << run_matrix(matrix_seed, &dir);
      }
      return kExitOk;
    }
  } catch (const ParseError& e) {
    err << "error: " << scenario_ref << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace fitolab
