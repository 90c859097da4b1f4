#include <chrono>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "conicert/model.hpp"
#include "conicert/oa.hpp"
#include "json.hpp"

namespace {

using conicert::SolveStatus;
using json = nlohmann::json;

double finite_or(double v, double fallback) {
  return std::isfinite(v) ? v : fallback;
}

json status_json(SolveStatus s) { return conicert::to_string(s); }

int exit_code(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
    case SolveStatus::Infeasible:
    case SolveStatus::Unbounded:
      return 0;
    case SolveStatus::IterationLimit:
    case SolveStatus::TimeLimit:
      return 2;
    default:
      return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conicert: mixed-integer conic solver by LP outer approximation"};
  app.require_subcommand(1);
  auto* cmd = app.add_subcommand("solve", "solve a CBF instance");

  std::string input, out_path, method = "bb";
  long big_m = 10000;
  int log_level = 1;
  long seed = 0;
  conicert::OaOptions opts;
  bool no_disagg = false, no_initial = false, no_separation = false;
  bool no_scaling = false, no_certificate = false, no_soc_ef = false;

  cmd->add_option("input", input, "CBF file")->required();
  cmd->add_option("--method", method, "bb | iter")
      ->check(CLI::IsMember({"bb", "iter"}));
  cmd->add_option("--rel-gap", opts.rel_gap, "relative optimality gap");
  cmd->add_option("--theta", opts.theta, "gap denominator constant");
  cmd->add_option("--delta", opts.delta, "LP feasibility tolerance");
  cmd->add_flag("--no-disaggregate", no_disagg, "disable disaggregation");
  cmd->add_flag("--no-initial-cuts", no_initial, "disable initial fixed cuts");
  cmd->add_flag("--no-separation", no_separation, "disable separation cuts");
  cmd->add_flag("--no-scaling", no_scaling, "disable certificate scaling");
  cmd->add_flag("--no-certificate-cuts", no_certificate,
                "separation-only mode, no conic subsolver");
  cmd->add_flag("--no-soc-ef", no_soc_ef, "disable the SOC extended formulation");
  cmd->add_flag("--solve-fractional", opts.solve_fractional,
                "solve conic subproblems at fractional LP optima too");
  cmd->add_option("--diamond-limit", opts.soc_full_diamond_limit,
                  "max SOC vector dim for full diamond initial cuts");
  cmd->add_option("--time-limit", opts.time_limit, "seconds");
  cmd->add_option("--node-limit", opts.node_limit, "branch-and-bound nodes");
  cmd->add_option("--iter-limit", opts.iter_limit, "outer iterations (iter)");
  cmd->add_option("--big-m", big_m, "fallback bound for unbounded integers");
  cmd->add_option("--out", out_path, "write the JSON result here");
  cmd->add_option("--log-level", log_level, "0..3")->check(CLI::Range(0, 3));
  cmd->add_option("--seed", seed, "echoed for reproducibility bookkeeping");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 4;
  }

  opts.method = (method == "bb") ? conicert::OaMethod::BranchAndBound
                                 : conicert::OaMethod::Iterative;
  opts.use_disaggregation = !no_disagg;
  opts.use_initial_cuts = !no_initial;
  opts.use_separation = !no_separation;
  opts.use_scaling = !no_scaling;
  opts.use_certificate_cuts = !no_certificate;
  opts.use_soc_ef = !no_soc_ef;

  conicert::MiConicProblem p;
  try {
    p = conicert::parse_cbf_file(input);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }

  conicert::SolveResult result;
  conicert::MiConicProblem solved;
  auto t0 = std::chrono::steady_clock::now();
  try {
    auto pre = conicert::preprocess(p, big_m);
    solved = pre.problem;
    if (pre.infeasible) {
      result.status = SolveStatus::Infeasible;
    } else {
      result = conicert::solve(solved, opts);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  // Bounds mapped back to the input objective sense.
  double obj_in = result.upper_bound;
  double bound_in = result.lower_bound;
  double gap = std::isfinite(obj_in) && std::isfinite(bound_in)
                   ? (obj_in - bound_in) /
                         (std::abs(bound_in) + opts.theta)
                   : std::numeric_limits<double>::infinity();

  json doc;
  doc["status"] = status_json(result.status);
  doc["objective"] = std::isfinite(obj_in)
                         ? json(solved.original_objective(obj_in))
                         : json();
  doc["bound"] = std::isfinite(bound_in)
                     ? json(solved.original_objective(bound_in))
                     : json();
  doc["rel_gap"] = finite_or(gap, -1.0);
  doc["nodes"] = result.node_count;
  doc["subproblems"] = result.subproblem_count;
  doc["iterations"] = result.iteration_count;
  doc["time_seconds"] = seconds;
  if (result.incumbent.has_value()) {
    std::vector<double> sol(solved.num_vars(), 0.0);
    for (int j = 0; j < solved.num_vars(); ++j)
      sol[solved.orig_index[j]] = (*result.incumbent)(j);
    doc["solution"] = sol;
  } else {
    doc["solution"] = json::array();
  }
  doc["options_echo"] = {
      {"method", method},
      {"rel_gap", opts.rel_gap},
      {"theta", opts.theta},
      {"delta", opts.delta},
      {"disaggregate", opts.use_disaggregation},
      {"initial_cuts", opts.use_initial_cuts},
      {"separation", opts.use_separation},
      {"scaling", opts.use_scaling},
      {"certificate_cuts", opts.use_certificate_cuts},
      {"soc_ef", opts.use_soc_ef},
      {"solve_fractional", opts.solve_fractional},
      {"diamond_limit", opts.soc_full_diamond_limit},
      {"big_m", big_m},
      {"seed", seed},
  };

  if (log_level >= 1) {
    std::cerr << "status=" << conicert::to_string(result.status)
              << " objective="
              << (std::isfinite(obj_in) ? solved.original_objective(obj_in)
                                        : obj_in)
              << " bound="
              << (std::isfinite(bound_in)
                      ? solved.original_objective(bound_in)
                      : bound_in)
              << " gap=" << gap << " nodes=" << result.node_count
              << " subproblems=" << result.subproblem_count
              << " time=" << seconds << "s\n";
  }
  if (log_level >= 2 && !result.error_stage.empty())
    std::cerr << "error stage: " << result.error_stage << "\n";

  std::string text = doc.dump(2);
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    f << text << "\n";
  } else {
    std::cout << text << "\n";
  }
  return exit_code(result.status);
}
