// rollball: command-line front end for the scenario library.
//
// Exit codes: 0 success, 1 other failure, 2 parse or validation error,
// 3 divergence, stiffness, implicit-step or singularity failure, 4 step budget
// exhausted. Errors go to stderr as one JSON object per line.
#include <cstdio>
#include <future>
#include <thread>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rollball/errors.hpp"
#include "rollball/scenario.hpp"

namespace {

using nlohmann::json;
using namespace rollball;

struct Failure {
  int code;
  json record;
};

Failure classify(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const ParseError& e) {
    return {2, {{"error", "parse"}, {"message", e.what()}, {"line", e.line()}}};
  } catch (const ValidationError& e) {
    return {2, {{"error", "validation"}, {"message", e.what()}}};
  } catch (const BudgetError& e) {
    return {4, {{"error", "budget"}, {"message", e.what()}, {"t", e.time()}}};
  } catch (const StiffnessError& e) {
    return {3, {{"error", "stiffness"}, {"message", e.what()}, {"t", e.time()}}};
  } catch (const DivergenceError& e) {
    return {3, {{"error", "divergence"}, {"message", e.what()}, {"t", e.time()}}};
  } catch (const ImplicitStepError& e) {
    return {3, {{"error", "implicit_step"}, {"message", e.what()}, {"t", e.time()}}};
  } catch (const IntegrationError& e) {
    return {3, {{"error", "integration"}, {"message", e.what()}, {"t", e.time()}}};
  } catch (const SingularityError& e) {
    return {3, {{"error", "singularity"}, {"message", e.what()}}};
  } catch (const std::exception& e) {
    return {1, {{"error", "internal"}, {"message", e.what()}}};
  }
}

int report(const Failure& f, const std::string& scenario = {}) {
  json rec = f.record;
  if (!scenario.empty()) rec["scenario"] = scenario;
  rec["exit_code"] = f.code;
  std::cerr << rec.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  return f.code;
}

struct Overrides {
  std::string method;
  double atol = 0.0;
  double rtol = 0.0;
  double step = 0.0;
  std::size_t samples = 0;
};

void apply(const Overrides& o, Scenario& s) {
  IntegratorConfig& c = s.integrator;
  if (!o.method.empty()) c.method = parse_method(o.method);
  if (o.atol > 0.0) c.abs_tol = o.atol;
  if (o.rtol > 0.0) c.rel_tol = o.rtol;
  if (o.step > 0.0) c.h_init = o.step;
  if (o.samples > 0) c.samples = o.samples;
  s.validate();
}

json summary(const Scenario& s, const RunRecord& r) {
  json j = {{"scenario", s.name},
            {"hash", r.scenario_hash},
            {"steps", r.stats.steps},
            {"rejected", r.stats.rejected},
            {"rhs_evals", r.stats.rhs_evals},
            {"wall_seconds", r.wall_seconds},
            {"csv", r.csv.string()},
            {"diag", r.diag.string()},
            {"meta", r.meta.string()}};
  if (r.max_versor_norm_error) j["max_versor_norm_error"] = *r.max_versor_norm_error;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rolling ball and disk simulator driven by internal masses on rails"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  Overrides ov;
  std::string scenario_arg, out_dir;
  auto add_overrides = [&](CLI::App* cmd) {
    cmd->add_option("--method", ov.method, "rk4 | rk45 | implicit_trap")
        ->check(CLI::IsMember({"rk4", "rk45", "implicit_trap"}));
    cmd->add_option("--atol", ov.atol, "absolute tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--rtol", ov.rtol, "relative tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--step", ov.step, "fixed step for rk4 and implicit_trap (h_init)")->check(CLI::PositiveNumber);
    cmd->add_option("--samples", ov.samples, "number of output samples")->check(CLI::Range(2, 100000000));
    cmd->add_option("--out", out_dir, "output root (default $ROLLBALL_OUTPUT_DIR, else ./runs)");
  };

  auto* run_cmd = app.add_subcommand("run", "integrate a scenario and write CSV, diagnostics and metadata");
  run_cmd->add_option("scenario", scenario_arg, "scenario file or bundled name")->required();
  add_overrides(run_cmd);

  auto* list_cmd = app.add_subcommand("list-scenarios", "print the bundled scenario names");

  auto* check_cmd = app.add_subcommand("check", "parse and validate a scenario without running it");
  check_cmd->add_option("scenario", scenario_arg, "scenario file or bundled name")->required();

  std::string oracle_out;
  auto* oracle_cmd = app.add_subcommand("oracle-disk", "variational vs Newtonian phi_ddot along a single-mass disk run");
  oracle_cmd->add_option("scenario", scenario_arg, "scenario file or bundled name")->required();
  oracle_cmd->add_option("--out", oracle_out, "CSV path (default stdout)");

  std::string export_dir = "scenarios";
  std::vector<std::string> export_names;
  auto* export_cmd = app.add_subcommand("export", "write bundled scenarios as JSON files");
  export_cmd->add_option("names", export_names, "bundled names (default all)");
  export_cmd->add_option("--dir", export_dir, "destination directory");

  std::vector<std::string> sweep_args;
  unsigned jobs = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "run several scenarios concurrently");
  sweep_cmd->add_option("scenarios", sweep_args, "scenario files or bundled names (default all bundled)");
  sweep_cmd->add_option("--jobs", jobs, "concurrent runs (default hardware concurrency)");
  add_overrides(sweep_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << json{{"error", "usage"}, {"message", e.what()}, {"exit_code", 2}}.dump() << '\n';
    return 2;
  }

  try {
    if (*list_cmd) {
      for (const auto& n : bundled_scenario_names())
        std::cout << n << '\t' << bundled_scenario(n).description << '\n';
      return 0;
    }
    if (*check_cmd) {
      const Scenario s = resolve_scenario(scenario_arg);
      std::cout << json{{"scenario", s.name}, {"system", s.system_name()}, {"hash", scenario_hash(s)}, {"valid", true}}
                       .dump()
                << '\n';
      return 0;
    }
    if (*export_cmd) {
      if (export_names.empty()) export_names = bundled_scenario_names();
      for (const auto& n : export_names) {
        const auto path = std::filesystem::path(export_dir) / (n + ".json");
        save_scenario(bundled_scenario(n), path);
        std::cout << path.string() << '\n';
      }
      return 0;
    }
    if (*oracle_cmd) {
      const Table tab = disk_oracle_table(resolve_scenario(scenario_arg));
      double worst = 0.0;
      for (const auto& row : tab.rows) worst = std::max(worst, row.back());
      if (oracle_out.empty())
        write_csv(tab, std::cout);
      else
        write_csv(tab, oracle_out);
      std::cerr << json{{"max_abs_diff", worst}, {"samples", tab.rows.size()}}.dump() << '\n';
      return 0;
    }
    if (*run_cmd) {
      Scenario s = resolve_scenario(scenario_arg);
      apply(ov, s);
      const RunRecord r = run(s, output_root(out_dir));
      std::cout << summary(s, r).dump() << '\n';
      return 0;
    }
    if (*sweep_cmd) {
      if (sweep_args.empty()) sweep_args = bundled_scenario_names();
      if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
      const auto root = output_root(out_dir);
      std::vector<std::future<std::pair<int, json>>> running;
      int worst = 0;
      auto drain = [&](std::size_t keep) {
        while (running.size() > keep) {
          const auto [code, rec] = running.front().get();
          if (code == 0)
            std::cout << rec.dump() << '\n';
          else
            std::cerr << rec.dump() << '\n';
          worst = std::max(worst, code);
          running.erase(running.begin());
        }
      };
      for (const auto& arg : sweep_args) {
        drain(jobs - 1);
        running.push_back(std::async(std::launch::async, [arg, &ov, root]() -> std::pair<int, json> {
          try {
            Scenario s = resolve_scenario(arg);
            apply(ov, s);
            return {0, summary(s, run(s, root))};
          } catch (...) {
            Failure f = classify(std::current_exception());
            f.record["scenario"] = arg;
            f.record["exit_code"] = f.code;
            return {f.code, f.record};
          }
        }));
      }
      drain(0);
      return worst;
    }
  } catch (...) {
    return report(classify(std::current_exception()), scenario_arg);
  }
  return 1;
}
