#pragma once

#include <map>
#include <optional>
#include <vector>

#include "conicert/lp.hpp"
#include "conicert/model.hpp"
#include "conicert/subsolver.hpp"

namespace conicert {

enum class OaMethod { BranchAndBound, Iterative };

enum class CutProvenance { Initial, Certificate, Separation };

struct OaOptions {
  OaMethod method = OaMethod::BranchAndBound;
  double rel_gap = 1e-5;  // epsilon in (U - L)/(|L| + theta) <= epsilon
  double theta = 1e-5;
  double delta = 1e-8;  // LP row/bound feasibility tolerance
  bool use_disaggregation = true;
  bool use_initial_cuts = true;
  bool use_separation = true;
  bool use_scaling = true;
  bool use_certificate_cuts = true;  // off: separation-only, no subsolver
  bool use_soc_ef = true;
  bool solve_fractional = false;  // conic solve even at fractional LP optima
  int soc_full_diamond_limit = 10;
  double time_limit = 300.0;
  long node_limit = 200000;
  long iter_limit = 2000;  // iterative driver outer iterations
  double int_tol = 1e-9;
  // Conic feasibility tolerances by cone family.
  double tol_linear = 1e-6;
  double tol_soc = 1e-5;
  double tol_exp = 1e-5;
  double tol_psd = 1e-4;
  SubOptions sub;
};

struct PoolEntry {
  KStarRay ray;
  CutProvenance provenance;
};

/// Shared cut pool: cuts are valid for every node, so one LP accumulates
/// them and nodes only swap integer bounds. memo caches certificate rays by
/// integer sub-solution so repeated sub-solutions skip the conic solve.
struct CutPool {
  std::vector<PoolEntry> entries;
  std::map<std::vector<long>, std::vector<KStarRay>> memo;
};

/// Scaling gamma-bar for an infeasibility certificate: 2 delta / margin.
/// Returns the 0 sentinel (cut goes in unscaled) when delta = 0 or when the
/// margin is at or below cert_tol; the latter sets *weak_warning.
double scale_infeasibility_ray(const DualImprovingRay& cert, double delta,
                               double cert_tol, bool* weak_warning = nullptr);

/// Scaling gamma-hat for an optimality certificate at node bound L:
/// max(1, delta / (eps (|L| + theta))); 1 when delta = 0.
double scale_optimality_point(double delta, double eps, double theta,
                              double L);

/// Adds the K* cuts induced by a certificate's conic multiplier z: applies
/// the tolerance scaling, splits z across nonpolyhedral blocks,
/// disaggregates into extreme rays (each rescaled by the total ray count J
/// when scaling is also active), and materializes the rows. Returns the rays
/// that were added, which are also appended to the pool.
std::vector<KStarRay> add_certificate_cuts(CutPool& pool, OaLp& oa,
                                           const ConicCertificate& cert,
                                           const MiConicProblem& p,
                                           const OaOptions& opts, double L);

SolveResult solve_bb(const MiConicProblem& p, const OaOptions& opts = {});

SolveResult solve_iterative(const MiConicProblem& p,
                            const OaOptions& opts = {});

inline SolveResult solve(const MiConicProblem& p, const OaOptions& opts = {}) {
  return opts.method == OaMethod::BranchAndBound ? solve_bb(p, opts)
                                                 : solve_iterative(p, opts);
}

/// Ground-truth oracle: enumerates every integer assignment in the box and
/// solves the continuous subproblem at each. Throws when the assignment
/// count exceeds max_assignments.
SolveResult brute_force_solve(const MiConicProblem& p, long max_assignments,
                              const SubOptions& sub = {});

}  // namespace conicert
