#pragma once

// Shared test helpers: a compact problem assembler, a random mixed-integer
// conic instance generator sized for exhaustive enumeration, and the
// cut-guarantee checks used by both the unit suites and the acceptance gate.

#include <cmath>
#include <random>
#include <stdexcept>
#include <variant>
#include <vector>

#include "conicert/cones.hpp"
#include "conicert/model.hpp"
#include "conicert/oa.hpp"
#include "conicert/subsolver.hpp"

namespace support {

using namespace conicert;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Incremental builder for MI-conic instances: rows are appended block by
/// block as (cone, A rows, b entries) so b - Ax lands in the block's cone.
struct ProblemBuilder {
  int nvars;
  int nint;
  Vec c;
  Vec lo, hi;  // integer bounds
  std::vector<PrimitiveCone> cones;
  std::vector<Vec> rows;
  std::vector<double> rhs;

  ProblemBuilder(int n, int ni) : nvars(n), nint(ni) {
    c = Vec::Zero(n);
    lo = Vec::Constant(ni, -kInf);
    hi = Vec::Constant(ni, kInf);
  }

  void add_block(const PrimitiveCone& cone, const Mat& A, const Vec& b) {
    if (A.rows() != cone.dim || b.size() != cone.dim || A.cols() != nvars)
      throw std::invalid_argument("add_block: dimension mismatch");
    cones.push_back(cone);
    for (int i = 0; i < cone.dim; ++i) {
      rows.push_back(A.row(i));
      rhs.push_back(b(i));
    }
  }

  /// Scalar row b0 - a'x in a one-dimensional cone.
  void add_scalar(ConeKind kind, const Vec& a, double b0) {
    Mat A(1, nvars);
    A.row(0) = a;
    Vec b(1);
    b << b0;
    PrimitiveCone cone = kind == ConeKind::NonNeg ? PrimitiveCone::nonneg(1)
                         : kind == ConeKind::NonPos
                             ? PrimitiveCone::nonpos(1)
                             : PrimitiveCone::zero(1);
    add_block(cone, A, b);
  }

  MiConicProblem build() const {
    MiConicProblem p;
    p.c = c;
    int m = static_cast<int>(rows.size());
    p.A = Mat::Zero(m, nvars);
    p.b = Vec::Zero(m);
    for (int i = 0; i < m; ++i) {
      p.A.row(i) = rows[i];
      p.b(i) = rhs[i];
    }
    for (const auto& cone : cones) p.cones.cones.push_back(cone);
    p.int_count = nint;
    p.int_lower = lo;
    p.int_upper = hi;
    p.orig_index.resize(nvars);
    for (int j = 0; j < nvars; ++j) p.orig_index[j] = j;
    return p;
  }
};

inline double unif(std::mt19937& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

inline long randint(std::mt19937& rng, long a, long b) {
  return std::uniform_int_distribution<long>(a, b)(rng);
}

/// Random row block with moderate, somewhat sparse coefficients.
inline Mat random_block_matrix(std::mt19937& rng, int rows, int cols) {
  Mat A = Mat::Zero(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (unif(rng, 0.0, 1.0) > 0.35) A(i, j) = unif(rng, -1.5, 1.5);
  return A;
}

/// A strictly interior point of a nonpolyhedral cone block.
inline Vec interior_point(std::mt19937& rng, const PrimitiveCone& cone) {
  switch (cone.kind) {
    case ConeKind::SecondOrder: {
      Vec s(cone.dim);
      for (int i = 1; i < cone.dim; ++i) s(i) = unif(rng, -1.0, 1.0);
      s(0) = s.tail(cone.dim - 1).norm() + unif(rng, 0.3, 1.2);
      return s;
    }
    case ConeKind::Exponential: {
      // (r, s, t) with r >= s exp(t / s).
      double sv = unif(rng, 0.5, 1.5);
      double tv = unif(rng, -1.0, 1.0);
      Vec s(3);
      s << sv * std::exp(tv / sv) + unif(rng, 0.3, 1.0), sv, tv;
      return s;
    }
    case ConeKind::PsdSvec: {
      Mat B(cone.side, cone.side);
      for (int i = 0; i < cone.side; ++i)
        for (int j = 0; j < cone.side; ++j) B(i, j) = unif(rng, -0.8, 0.8);
      Mat M = B * B.transpose() + 0.3 * Mat::Identity(cone.side, cone.side);
      return cones::svec(M);
    }
    default:
      throw std::invalid_argument("interior_point: polyhedral cone");
  }
}

enum class Family { Soc, Exp, Psd, Mixed };

/// A block that contradicts the integer box (family-matched), making the
/// instance infeasible through its conic constraint.
inline void add_conflict_block(ProblemBuilder& pb, std::mt19937& rng,
                               ConeKind kind, int j) {
  double p_off = pb.hi(j) + 2.0;  // strictly beyond the box
  Vec ej = Vec::Zero(pb.nvars);
  ej(j) = 1.0;
  if (kind == ConeKind::SecondOrder) {
    // (0.3, x_j - p) in Q2 forces |x_j - p| <= 0.3.
    Mat A = Mat::Zero(2, pb.nvars);
    A.row(1) = -ej;
    Vec b(2);
    b << 0.3, -p_off;
    pb.add_block(PrimitiveCone::second_order(2), A, b);
  } else if (kind == ConeKind::Exponential) {
    // (x_j - p, 1, 0) in EXP forces x_j - p >= 1.
    Mat A = Mat::Zero(3, pb.nvars);
    A.row(0) = -ej;
    Vec b(3);
    b << -p_off, 1.0, 0.0;
    pb.add_block(PrimitiveCone::exponential(), A, b);
  } else {
    // svec([[x_j - p, 0], [0, 1]]) PSD forces x_j >= p.
    Mat A = Mat::Zero(3, pb.nvars);
    A.row(0) = -ej;
    Vec b(3);
    b << -p_off, 0.0, 1.0;
    pb.add_block(PrimitiveCone::psd_svec(2), A, b);
  }
}

/// Random bounded MI-conic instance: every continuous variable is boxed by
/// linear rows, integers carry explicit small boxes, and each nonpolyhedral
/// block is feasible by construction at a reference point. When
/// force_infeasible is set a family-matched conflict block is appended.
inline MiConicProblem random_instance(Family fam, std::mt19937& rng,
                                      bool force_infeasible = false) {
  int ni = static_cast<int>(randint(rng, 1, 3));
  int ncont = static_cast<int>(randint(rng, 0, 2));
  int n = ni + ncont;
  ProblemBuilder pb(n, ni);

  Vec x0(n);
  for (int i = 0; i < ni; ++i) {
    long lo = randint(rng, -2, 1);
    long w = randint(rng, 1, 2);
    pb.lo(i) = static_cast<double>(lo);
    pb.hi(i) = static_cast<double>(lo + w);
    x0(i) = static_cast<double>(randint(rng, lo, lo + w));
  }
  for (int j = ni; j < n; ++j) x0(j) = unif(rng, -1.5, 1.5);

  for (int j = 0; j < n; ++j) {
    double mag = std::abs(unif(rng, 0.5, 2.0)) + (unif(rng, 0, 1) < 0.5);
    pb.c(j) = std::round(2.0 * mag * (unif(rng, 0, 1) < 0.5 ? -1 : 1)) / 2.0;
  }
  if (pb.c.cwiseAbs().maxCoeff() == 0.0) pb.c(0) = 1.0;

  // Box rows for the continuous variables keep every relaxation bounded.
  for (int j = ni; j < n; ++j) {
    Vec ej = Vec::Zero(n);
    ej(j) = 1.0;
    pb.add_scalar(ConeKind::NonNeg, -ej, 3.0);  // x_j >= -3
    pb.add_scalar(ConeKind::NonNeg, ej, 3.0);   // x_j <= 3
  }

  std::vector<PrimitiveCone> blocks;
  auto soc = [&] {
    return PrimitiveCone::second_order(static_cast<int>(randint(rng, 3, 4)));
  };
  switch (fam) {
    case Family::Soc:
      blocks.push_back(soc());
      if (randint(rng, 0, 1)) blocks.push_back(soc());
      break;
    case Family::Exp:
      blocks.push_back(PrimitiveCone::exponential());
      if (randint(rng, 0, 1)) blocks.push_back(PrimitiveCone::exponential());
      break;
    case Family::Psd:
      blocks.push_back(PrimitiveCone::psd_svec(2));
      break;
    case Family::Mixed:
      blocks.push_back(soc());
      blocks.push_back(randint(rng, 0, 1) ? PrimitiveCone::exponential()
                                          : PrimitiveCone::psd_svec(2));
      break;
  }
  for (const auto& cone : blocks) {
    Mat A = random_block_matrix(rng, cone.dim, n);
    Vec s0 = interior_point(rng, cone);
    pb.add_block(cone, A, Vec(A * x0 + s0));
  }

  if (force_infeasible) {
    ConeKind kind = fam == Family::Exp   ? ConeKind::Exponential
                    : fam == Family::Psd ? ConeKind::PsdSvec
                                         : ConeKind::SecondOrder;
    add_conflict_block(pb, rng, kind, static_cast<int>(randint(rng, 0, ni - 1)));
  }
  return pb.build();
}

/// Number of integer assignments in the instance's box.
inline long box_size(const MiConicProblem& p) {
  double n = 1.0;
  for (int i = 0; i < p.int_count; ++i)
    n *= p.int_upper(i) - p.int_lower(i) + 1.0;
  return static_cast<long>(n);
}

/// Per-family conic feasibility of a candidate point (mirrors the solver's
/// acceptance tolerances).
inline bool conic_feasible_point(const MiConicProblem& p, const Vec& x,
                                 const OaOptions& opts) {
  Vec s = p.b - p.A * x;
  int off = 0;
  for (const auto& cone : p.cones.cones) {
    Vec seg = s.segment(off, cone.dim);
    double tol = opts.tol_linear;
    if (cone.kind == ConeKind::SecondOrder ||
        cone.kind == ConeKind::RotatedSecondOrder)
      tol = opts.tol_soc;
    else if (cone.kind == ConeKind::Exponential)
      tol = opts.tol_exp;
    else if (cone.kind == ConeKind::PsdSvec)
      tol = opts.tol_psd;
    if ((cones::project(cone, seg) - seg).norm() > tol) return false;
    off += cone.dim;
  }
  return true;
}

inline bool is_integral_point(const Vec& x, int count, double tol = 1e-9) {
  for (int i = 0; i < count; ++i)
    if (std::abs(x(i) - std::round(x(i))) > tol) return false;
  return true;
}

/// All (or up to max_boxes sampled) child boxes l <= lt <= ut <= u.
inline std::vector<std::pair<Vec, Vec>> child_boxes(const MiConicProblem& p,
                                                    std::mt19937& rng,
                                                    int max_boxes = 40) {
  std::vector<std::pair<Vec, Vec>> out;
  out.emplace_back(p.int_lower, p.int_upper);
  long total = 1;
  for (int i = 0; i < p.int_count && total <= max_boxes; ++i) {
    long w = static_cast<long>(p.int_upper(i) - p.int_lower(i));
    total *= (w + 1) * (w + 2) / 2;
  }
  if (total <= max_boxes) {
    // Exhaustive: odometer over per-variable (lt_i, ut_i) intervals.
    std::vector<std::vector<std::pair<long, long>>> per(p.int_count);
    for (int i = 0; i < p.int_count; ++i) {
      long lo = static_cast<long>(p.int_lower(i));
      long hi = static_cast<long>(p.int_upper(i));
      for (long a = lo; a <= hi; ++a)
        for (long b = a; b <= hi; ++b) per[i].emplace_back(a, b);
    }
    std::vector<size_t> idx(p.int_count, 0);
    while (true) {
      Vec lt(p.int_count), ut(p.int_count);
      for (int i = 0; i < p.int_count; ++i) {
        lt(i) = static_cast<double>(per[i][idx[i]].first);
        ut(i) = static_cast<double>(per[i][idx[i]].second);
      }
      out.emplace_back(lt, ut);
      int i = 0;
      for (; i < p.int_count; ++i) {
        if (++idx[i] < per[i].size()) break;
        idx[i] = 0;
      }
      if (i == p.int_count) break;
    }
  } else {
    for (int k = 0; k < max_boxes; ++k) {
      Vec lt(p.int_count), ut(p.int_count);
      for (int i = 0; i < p.int_count; ++i) {
        long lo = static_cast<long>(p.int_lower(i));
        long hi = static_cast<long>(p.int_upper(i));
        long a = randint(rng, lo, hi), b = randint(rng, lo, hi);
        lt(i) = static_cast<double>(std::min(a, b));
        ut(i) = static_cast<double>(std::max(a, b));
      }
      out.emplace_back(lt, ut);
    }
  }
  return out;
}

/// Instance whose conic subproblem over the whole integer box is infeasible
/// while its linear relaxation stays feasible (all variables integer).
inline MiConicProblem infeasible_node_instance(std::mt19937& rng,
                                               ConeKind kind) {
  int ni = static_cast<int>(randint(rng, 1, 2));
  ProblemBuilder pb(ni, ni);
  for (int i = 0; i < ni; ++i) {
    long lo = randint(rng, -1, 1);
    pb.lo(i) = static_cast<double>(lo);
    pb.hi(i) = static_cast<double>(lo + randint(rng, 1, 2));
    pb.c(i) = unif(rng, -1.0, 1.0);
  }
  add_conflict_block(pb, rng, kind, static_cast<int>(randint(rng, 0, ni - 1)));
  // A benign feasible block for variety.
  if (randint(rng, 0, 1)) {
    auto cone = PrimitiveCone::second_order(3);
    Mat A = random_block_matrix(rng, 3, ni);
    Vec x0(ni);
    for (int i = 0; i < ni; ++i)
      x0(i) = static_cast<double>(
          randint(rng, static_cast<long>(pb.lo(i)), static_cast<long>(pb.hi(i))));
    pb.add_block(cone, A, Vec(A * x0 + interior_point(rng, cone)));
  }
  return pb.build();
}

/// Disaggregation is strength-preserving relative to a relaxation that
/// already carries the initial fixed cuts (the dropped residual lies in
/// their conic hull), so the guarantee checks seed them first.
inline void seed_initial_cuts(CutPool& pool, OaLp& oa,
                              const MiConicProblem& p, const OaOptions& opts) {
  for (size_t k = 0; k < p.cones.cones.size(); ++k) {
    auto rays = cones::initial_fixed_rays(p.cones.cones[k],
                                          opts.soc_full_diamond_limit);
    for (auto& r : rays) {
      r.block_index = static_cast<int>(k);
      lp_add_cut(oa, r, p);
      pool.entries.push_back({r, CutProvenance::Initial});
    }
  }
}

/// After adding the certificate cuts from an infeasible subproblem, the LP
/// must be infeasible over every child box.
inline bool check_infeasibility_guarantee(const MiConicProblem& p,
                                          const OaOptions& opts,
                                          std::mt19937& rng) {
  ConicCertificate cert =
      conic_solve(p, p.int_lower, p.int_upper, opts.sub);
  if (!std::holds_alternative<DualImprovingRay>(cert)) return false;
  OaLp oa = lp_build(p, opts.use_soc_ef, opts.delta);
  CutPool pool;
  if (opts.use_initial_cuts) seed_initial_cuts(pool, oa, p, opts);
  add_certificate_cuts(pool, oa, cert, p, opts, -kInf);
  for (const auto& [lt, ut] : child_boxes(p, rng)) {
    lp_set_int_bounds(oa.model, lt, ut);
    if (oa.model.solve().status != LpStatus::Infeasible) return false;
  }
  return true;
}

/// After adding the certificate cuts from an optimal subproblem at bound L,
/// the LP optimum over every child box must stay above
/// L - eps (|L| + theta) (up to the delta slack on the bound multipliers).
inline bool check_objective_guarantee(const MiConicProblem& p,
                                      const OaOptions& opts,
                                      std::mt19937& rng) {
  ConicCertificate cert =
      conic_solve(p, p.int_lower, p.int_upper, opts.sub);
  const auto* pair = std::get_if<ComplementaryPair>(&cert);
  if (!pair) return false;
  double L = pair->objective;
  OaLp oa = lp_build(p, opts.use_soc_ef, opts.delta);
  CutPool pool;
  if (opts.use_initial_cuts) seed_initial_cuts(pool, oa, p, opts);
  add_certificate_cuts(pool, oa, cert, p, opts, L);
  // Bound multipliers and the certificate weights on the delta-relaxed
  // polyhedral rows each contribute up to delta of objective slack.
  double slack = opts.rel_gap * (std::abs(L) + opts.theta) +
                 opts.delta * (pair->mu.lpNorm<1>() + pair->nu.lpNorm<1>() +
                               pair->z.lpNorm<1>()) +
                 1e-6;
  for (const auto& [lt, ut] : child_boxes(p, rng)) {
    lp_set_int_bounds(oa.model, lt, ut);
    LpOutcome lp = oa.model.solve();
    if (lp.status == LpStatus::Infeasible) continue;
    if (lp.status != LpStatus::Optimal) return false;
    if (lp.objective < L - slack) return false;
  }
  return true;
}

}  // namespace support
