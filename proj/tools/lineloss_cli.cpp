#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lineloss/acpf.hpp"
#include "lineloss/case_io.hpp"
#include "lineloss/dispatch.hpp"
#include "lineloss/harness.hpp"
#include "lineloss/sced.hpp"

namespace fs = std::filesystem;
using namespace lineloss;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitInput = 4;

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int exit_code(lp::Status status) {
  switch (status) {
    case lp::Status::kOptimal:
      return kExitOk;
    case lp::Status::kInfeasible:
      return kExitInfeasible;
    default:
      return kExitNumeric;
  }
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

// Writes to `path`, or stdout when empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

struct CommonArgs {
  std::string case_file;
  std::string method = "lloa";
  double epsilon = 1e-3;
  bool cold_start = false;
  std::string variant = "angle";
  int segments = 10;
  std::string output;
};

DispatchOptions dispatch_options(const CommonArgs& a) {
  DispatchOptions opt;
  opt.epsilon = a.epsilon;
  opt.warm_start = !a.cold_start;
  opt.cost_segments = a.segments;
  if (a.variant == "ptdf") {
    opt.variant = Variant::kPtdf;
  } else if (a.variant != "angle") {
    throw InputError("unknown variant '" + a.variant + "'");
  }
  return opt;
}

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--case", a.case_file, "MATPOWER case file")->required();
  cmd->add_option("--method", a.method, "dc, lllf, llqcp or lloa");
  cmd->add_option("--epsilon", a.epsilon, "LLOA relative stopping tolerance");
  cmd->add_flag("--cold-start", a.cold_start, "start LLOA without lossless seed cuts");
  cmd->add_flag("--warm-start", [&a](std::int64_t) { a.cold_start = false; },
                "seed LLOA with lossless DC flows (default)");
  cmd->add_option("--variant", a.variant, "vanilla DC model: angle or ptdf");
  cmd->add_option("--segments", a.segments, "cost curve segments");
  cmd->add_option("-o,--output", a.output, "output file (default stdout)");
}

int run_solve(const CommonArgs& a) {
  const PowerNetwork net = load_case(a.case_file);
  const DispatchSolution sol = solve_dispatch(net, parse_method(a.method), dispatch_options(a));
  emit(a.output, solution_to_json(sol, net).dump(2) + "\n");
  if (!sol.optimal()) std::cerr << "solve: " << lp::to_string(sol.status) << ' ' << sol.message << '\n';
  return exit_code(sol.status);
}

int run_sced(const CommonArgs& a, const std::string& config) {
  const PowerNetwork net = load_case(a.case_file);
  const ScedConfig cfg = config.empty() ? ScedConfig{} : sced_config_from_json(read_json(config));
  cfg.validate(net);
  const ScedSolution sol = solve_sced(net, parse_method(a.method), cfg, dispatch_options(a));
  emit(a.output, sced_solution_to_json(sol, net).dump(2) + "\n");
  return exit_code(sol.dispatch.status);
}

std::vector<DispatchSolution> read_solutions(const std::vector<std::string>& files,
                                             const PowerNetwork& net) {
  std::vector<DispatchSolution> sols;
  for (const std::string& f : files) {
    nlohmann::json j = read_json(f);
    // SCED output nests the dispatch.
    if (j.contains("dispatch")) j = j["dispatch"];
    sols.push_back(solution_from_json(j, net));
  }
  return sols;
}

int run_restore(const std::string& case_file, const std::vector<std::string>& files,
                const std::string& format, const std::string& output) {
  const PowerNetwork net = load_case(case_file);
  const auto rows = restore_and_compare(net, read_solutions(files, net));
  std::ostringstream text;
  if (format == "csv") {
    write_violation_csv(text, rows);
  } else if (format == "table") {
    write_violation_table(text, rows);
  } else if (format == "json") {
    nlohmann::json j = nlohmann::json::array();
    for (const RestorationRow& r : rows) {
      nlohmann::json sections;
      const ViolationReport& v = r.report;
      const std::pair<const char*, const ViolationSection*> parts[] = {
          {"active", &v.active}, {"reactive", &v.reactive},
          {"voltage", &v.voltage}, {"thermal", &v.thermal}};
      for (const auto& [name, s] : parts) sections[name] = {{"count", s->count}, {"max", s->max}};
      j.push_back({{"method", r.method},
                   {"converged", r.state.converged},
                   {"newton_iterations", r.state.iterations},
                   {"mismatch", r.state.mismatch},
                   {"violations", sections},
                   {"slack_pickup", r.slack_pickup},
                   {"ac_losses", r.ac_losses}});
    }
    text << j.dump(2) << '\n';
  } else {
    throw InputError("unknown format '" + format + "'");
  }
  emit(output, text.str());
  for (const RestorationRow& r : rows) {
    if (!r.state.converged) return kExitNumeric;
  }
  return kExitOk;
}

int run_sweep_cmd(const std::string& config, const std::string& out_dir, bool serial) {
  const fs::path cfg_path(config);
  SweepConfig cfg = sweep_config_from_json(read_json(cfg_path), cfg_path.parent_path());
  if (serial) cfg.parallel = false;
  for (const fs::path& c : cfg.cases) {
    if (!fs::exists(c)) throw InputError("case file not found: " + c.string());
  }
  const SweepResult res = run_sweep(cfg);

  fs::create_directories(out_dir);
  auto write = [&](const char* name, auto writer) {
    std::ofstream out(fs::path(out_dir) / name);
    if (!out) throw InputError(std::string("cannot write ") + name);
    writer(out);
  };
  write("metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, res.rows); });
  write("timing.csv", [&](std::ostream& o) { write_timing_csv(o, res.rows); });
  write("exclusions.csv", [&](std::ostream& o) { write_exclusions_csv(o, res.exclusions); });
  write("series.csv", [&](std::ostream& o) { write_series_csv(o, res.series); });
  write("sweep.json", [&](std::ostream& o) { o << sweep_to_json(res).dump(2) << '\n'; });

  std::cout << res.rows.size() << " rows, " << res.exclusions.size() << " excluded of "
            << res.total_instances << " instances; output in " << out_dir << '\n';
  for (const std::string& f : res.trend_flags) std::cout << "trend: " << f << '\n';
  return kExitOk;
}

struct ReportArgs {
  std::string format = "table";
  std::string input;
  std::string case_file;
  std::vector<std::string> solutions;
  std::string reference;
  std::string profile;
  std::string output;
};

std::string render_rows(const std::vector<MetricRow>& rows, const std::string& format) {
  std::ostringstream text;
  if (format == "csv") {
    write_metrics_csv(text, rows);
  } else if (format == "table") {
    write_metrics_table(text, rows);
  } else if (format == "json") {
    nlohmann::json j = nlohmann::json::array();
    for (const MetricRow& r : rows) j.push_back(metric_row_to_json(r));
    text << j.dump(2) << '\n';
  } else {
    throw InputError("unknown format '" + format + "'");
  }
  return text.str();
}

// Reference from a file: either a solution JSON or {"objective": .., "pg": [..]}.
void read_reference(const std::string& file, const PowerNetwork& net, double& objective,
                    std::vector<double>& pg) {
  const nlohmann::json j = read_json(file);
  if (j.contains("generators")) {
    const DispatchSolution ref = solution_from_json(j, net);
    objective = ref.objective;
    pg = ref.pg;
  } else {
    objective = j.at("objective").get<double>();
    pg = j.at("pg").get<std::vector<double>>();
  }
  if (pg.size() != net.num_generators()) {
    throw InputError("reference dispatch does not match the case generators");
  }
}

int run_report(const ReportArgs& a) {
  if (!a.input.empty()) {
    const SweepResult res = sweep_from_json(read_json(a.input));
    emit(a.output, render_rows(res.rows, a.format));
    return kExitOk;
  }
  if (a.case_file.empty() || a.solutions.empty()) {
    throw InputError("report needs --input, or --case with --solutions");
  }
  const PowerNetwork net = load_case(a.case_file);
  const auto sys = factorize(net);
  double ref_obj = 0.0;
  std::vector<double> ref_pg;
  if (a.reference.empty()) {
    const DispatchSolution ref = solve_dispatch(net, Method::kLlqcp);
    if (!ref.optimal()) return exit_code(ref.status);
    ref_obj = ref.objective;
    ref_pg = ref.pg;
  } else {
    read_reference(a.reference, net, ref_obj, ref_pg);
  }
  const auto sols = read_solutions(a.solutions, net);
  std::vector<MetricRow> rows;
  for (const DispatchSolution& s : sols) {
    if (!s.optimal()) continue;
    rows.push_back(compute_metrics(net, *sys, s, ref_obj, ref_pg));
  }
  emit(a.output, render_rows(rows, a.format));
  if (!a.profile.empty() && !sols.empty() && sols.front().optimal()) {
    const DiffProfile p = generator_diff_profile(net, sols.front().pg, ref_pg);
    std::ostringstream text;
    write_diff_profile_csv(text, p);
    emit(a.profile, text.str());
    std::cerr << "near-identical units: " << p.identical_share << "%\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-aware DC optimal power flow"};
  app.require_subcommand(1);

  CommonArgs solve_args;
  CLI::App* solve = app.add_subcommand("solve", "solve a dispatch");
  add_common(solve, solve_args);

  CommonArgs sced_args;
  std::string sced_config;
  CLI::App* sced = app.add_subcommand("sced", "solve a security-constrained dispatch");
  add_common(sced, sced_args);
  sced->add_option("--config", sced_config, "SCED JSON config");

  std::string restore_case, restore_format = "table", restore_output;
  std::vector<std::string> restore_solutions;
  CLI::App* restore = app.add_subcommand("restore", "AC power flow on solved dispatches");
  restore->add_option("--case", restore_case, "MATPOWER case file")->required();
  restore->add_option("--solutions", restore_solutions, "solution JSON files")->required();
  restore->add_option("--format", restore_format, "csv, json or table")
      ->check(CLI::IsMember({"csv", "json", "table"}));
  restore->add_option("-o,--output", restore_output, "output file (default stdout)");

  std::string sweep_config, sweep_out = "sweep_out";
  bool sweep_serial = false;
  CLI::App* sweep = app.add_subcommand("sweep", "load-scaling sensitivity sweep");
  sweep->add_option("--config", sweep_config, "sweep JSON config")->required();
  sweep->add_option("--out-dir", sweep_out, "directory for CSV and JSON output");
  sweep->add_flag("--serial", sweep_serial, "run instances one at a time");

  ReportArgs report_args;
  CLI::App* report = app.add_subcommand("report", "metric tables");
  report->add_option("--format", report_args.format, "csv, json or table")
      ->check(CLI::IsMember({"csv", "json", "table"}));
  report->add_option("--input", report_args.input, "sweep.json from the sweep command");
  report->add_option("--case", report_args.case_file, "MATPOWER case file");
  report->add_option("--solutions", report_args.solutions, "solution JSON files");
  report->add_option("--reference", report_args.reference,
                     "reference dispatch (default: LLQCP solve)");
  report->add_option("--profile", report_args.profile,
                     "write the first solution's generator difference profile here");
  report->add_option("-o,--output", report_args.output, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*solve) return run_solve(solve_args);
    if (*sced) return run_sced(sced_args, sced_config);
    if (*restore) return run_restore(restore_case, restore_solutions, restore_format, restore_output);
    if (*sweep) return run_sweep_cmd(sweep_config, sweep_out, sweep_serial);
    if (*report) return run_report(report_args);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NetworkError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitInput;
}
