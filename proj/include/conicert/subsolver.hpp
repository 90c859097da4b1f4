#pragma once

#include <optional>
#include <string>
#include <variant>

#include "conicert/model.hpp"

namespace conicert {

/// Optimal primal/dual pair for the continuous relaxation at integer bounds
/// (l, u): x is feasible, (z, mu, nu) is dual feasible, and the objectives
/// agree, so c'x = -b'z - l'mu - u'nu certifies optimality.
struct ComplementaryPair {
  Vec x;
  Vec z;   // multipliers on the conic rows, z in K*
  Vec mu;  // multipliers on x_i >= l_i, mu <= 0 (length int_count)
  Vec nu;  // multipliers on x_i <= u_i, nu >= 0 (length int_count)
  double objective = 0.0;
};

/// Certificate of infeasibility: z in K*, mu <= 0, nu >= 0, A'z + mu + nu = 0
/// and margin = -b'z - l'mu - u'nu > 0.
struct DualImprovingRay {
  Vec z;
  Vec mu;
  Vec nu;
  double margin = 0.0;
};

/// Certificate of unboundedness: c'ray < 0, -A ray in K, ray zero on the
/// integer columns, plus a feasible point witnessing nonemptiness.
struct PrimalImprovingRay {
  Vec ray;
  Vec feasible_point;
  double ray_objective = 0.0;
};

/// The subsolver could not produce a verifiable certificate.
struct SubFailure {
  std::string reason;
};

using ConicCertificate =
    std::variant<ComplementaryPair, DualImprovingRay, PrimalImprovingRay,
                 SubFailure>;

struct SubOptions {
  int max_iters = 20000;
  double cert_tol = 1e-7;
};

/// Solves the continuous conic subproblem
///   min c'x  s.t.  b - Ax in K,  l <= x_I <= u
/// by ADMM on the homogeneous self-dual embedding and classifies the result
/// into a verified certificate. Infinite entries of (l, u) impose no bound.
/// Every non-Failure return passes verify_certificate at cert_tol.
ConicCertificate conic_solve(const MiConicProblem& p, const Vec& l,
                             const Vec& u, const SubOptions& opts = {});

/// Solver-independent certificate check at tolerance tol. SubFailure never
/// verifies.
bool verify_certificate(const MiConicProblem& p, const Vec& l, const Vec& u,
                        const ConicCertificate& cert, double tol);

}  // namespace conicert
