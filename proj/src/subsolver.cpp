#include "conicert/subsolver.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "conicert/cones.hpp"

namespace conicert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// The subproblem data with integer bounds appended as NonNeg rows:
/// x_i >= l_i becomes b - Ax row (-l_i) - (-x_i), x_i <= u_i becomes
/// u_i - x_i. lower_row / upper_row record the row of each finite bound.
struct Embedded {
  Mat A;
  Vec b;
  ConeProduct cones;
  std::vector<int> lower_row;  // -1 where the bound is infinite
  std::vector<int> upper_row;
};

Embedded embed(const MiConicProblem& p, const Vec& l, const Vec& u) {
  Embedded e;
  int extra = 0;
  e.lower_row.assign(p.int_count, -1);
  e.upper_row.assign(p.int_count, -1);
  for (int i = 0; i < p.int_count; ++i) {
    if (std::isfinite(l(i))) ++extra;
    if (std::isfinite(u(i))) ++extra;
  }
  long m = p.num_rows();
  e.A = Mat::Zero(m + extra, p.num_vars());
  e.A.topRows(m) = p.A;
  e.b = Vec::Zero(m + extra);
  e.b.head(m) = p.b;
  e.cones = p.cones;
  long r = m;
  for (int i = 0; i < p.int_count; ++i) {
    if (std::isfinite(l(i))) {
      e.A(r, i) = -1.0;
      e.b(r) = -l(i);
      e.lower_row[i] = static_cast<int>(r);
      ++r;
    }
    if (std::isfinite(u(i))) {
      e.A(r, i) = 1.0;
      e.b(r) = u(i);
      e.upper_row[i] = static_cast<int>(r);
      ++r;
    }
  }
  if (extra > 0) e.cones.cones.push_back(PrimitiveCone::nonneg(extra));
  return e;
}

Vec project_dual_product(const ConeProduct& K, const Vec& y) {
  Vec out(y.size());
  long off = 0;
  for (const auto& cone : K.cones) {
    out.segment(off, cone.dim) =
        cones::project_dual(cone, y.segment(off, cone.dim));
    off += cone.dim;
  }
  return out;
}

double primal_violation(const ConeProduct& K, const Vec& s) {
  double v = 0.0;
  long off = 0;
  for (const auto& cone : K.cones) {
    Vec seg = s.segment(off, cone.dim);
    v = std::max(v, (cones::project(cone, seg) - seg).norm());
    off += cone.dim;
  }
  return v;
}

double dual_violation(const ConeProduct& K, const Vec& z) {
  double v = 0.0;
  long off = 0;
  for (const auto& cone : K.cones) {
    Vec seg = z.segment(off, cone.dim);
    v = std::max(v, (cones::project_dual(cone, seg) - seg).norm());
    off += cone.dim;
  }
  return v;
}

/// Splits an embedded dual vector into (z, mu, nu) on the original rows and
/// bound multipliers.
void split_dual(const Embedded& e, const MiConicProblem& p, const Vec& y,
                Vec* z, Vec* mu, Vec* nu) {
  *z = y.head(p.num_rows());
  *mu = Vec::Zero(p.int_count);
  *nu = Vec::Zero(p.int_count);
  for (int i = 0; i < p.int_count; ++i) {
    if (e.lower_row[i] >= 0) (*mu)(i) = -std::max(0.0, y(e.lower_row[i]));
    if (e.upper_row[i] >= 0) (*nu)(i) = std::max(0.0, y(e.upper_row[i]));
  }
}

double bound_sum(const Vec& bounds, const Vec& mult) {
  double s = 0.0;
  for (int i = 0; i < mult.size(); ++i)
    if (mult(i) != 0.0) s += bounds(i) * mult(i);
  return s;
}

}  // namespace

bool verify_certificate(const MiConicProblem& p, const Vec& l, const Vec& u,
                        const ConicCertificate& cert, double tol) {
  const long m = p.num_rows();
  if (const auto* pair = std::get_if<ComplementaryPair>(&cert)) {
    if (pair->x.size() != p.num_vars() || pair->z.size() != m) return false;
    Vec s = p.b - p.A * pair->x;
    if (primal_violation(p.cones, s) > tol * (1.0 + s.norm())) return false;
    for (int i = 0; i < p.int_count; ++i) {
      if (pair->x(i) < l(i) - tol * (1.0 + std::abs(l(i)))) return false;
      if (pair->x(i) > u(i) + tol * (1.0 + std::abs(u(i)))) return false;
      if (pair->mu(i) > tol || pair->nu(i) < -tol) return false;
    }
    if (dual_violation(p.cones, pair->z) > tol * (1.0 + pair->z.norm()))
      return false;
    Vec grad = p.A.transpose() * pair->z + p.c;
    for (int i = 0; i < p.int_count; ++i) grad(i) += pair->mu(i) + pair->nu(i);
    if (grad.lpNorm<Eigen::Infinity>() > tol * (1.0 + pair->z.norm()))
      return false;
    double pobj = p.c.dot(pair->x);
    double dobj =
        -p.b.dot(pair->z) - bound_sum(l, pair->mu) - bound_sum(u, pair->nu);
    return std::abs(pobj - dobj) <= tol * (1.0 + std::abs(pobj));
  }
  if (const auto* ray = std::get_if<DualImprovingRay>(&cert)) {
    if (ray->z.size() != m) return false;
    double scale = 1.0 + ray->z.norm() + ray->mu.norm() + ray->nu.norm();
    if (dual_violation(p.cones, ray->z) > tol * scale) return false;
    for (int i = 0; i < p.int_count; ++i) {
      if (ray->mu(i) > tol || ray->nu(i) < -tol) return false;
      if (!std::isfinite(l(i)) && ray->mu(i) != 0.0) return false;
      if (!std::isfinite(u(i)) && ray->nu(i) != 0.0) return false;
    }
    Vec grad = p.A.transpose() * ray->z;
    for (int i = 0; i < p.int_count; ++i) grad(i) += ray->mu(i) + ray->nu(i);
    if (grad.lpNorm<Eigen::Infinity>() > tol * scale) return false;
    double margin =
        -p.b.dot(ray->z) - bound_sum(l, ray->mu) - bound_sum(u, ray->nu);
    return margin > 0.0;
  }
  if (const auto* pray = std::get_if<PrimalImprovingRay>(&cert)) {
    if (pray->ray.size() != p.num_vars()) return false;
    double scale = 1.0 + pray->ray.norm();
    for (int i = 0; i < p.int_count; ++i)
      if (pray->ray(i) != 0.0) return false;
    Vec s = -p.A * pray->ray;
    if (primal_violation(p.cones, s) > tol * scale) return false;
    if (p.c.dot(pray->ray) >= 0.0) return false;
    Vec sf = p.b - p.A * pray->feasible_point;
    if (primal_violation(p.cones, sf) > tol * (1.0 + sf.norm())) return false;
    for (int i = 0; i < p.int_count; ++i) {
      double xi = pray->feasible_point(i);
      if (xi < l(i) - tol * (1.0 + std::abs(l(i)))) return false;
      if (xi > u(i) + tol * (1.0 + std::abs(u(i)))) return false;
    }
    return true;
  }
  return false;
}

ConicCertificate conic_solve(const MiConicProblem& p, const Vec& l,
                             const Vec& u, const SubOptions& opts) {
  if (l.size() != p.int_count || u.size() != p.int_count)
    return SubFailure{"bound vector length mismatch"};
  for (int i = 0; i < p.int_count; ++i)
    if (l(i) > u(i)) return SubFailure{"crossed bounds"};

  Embedded e = embed(p, l, u);
  const long n = p.num_vars();
  const long m = e.b.size();
  const long N = n + m + 1;

  // Homogeneous self-dual embedding: find Qw = v with w in C, v in C*,
  // C = R^n x K* x R+, and Q the skew matrix below. I + Q is nonsingular.
  Mat Q = Mat::Zero(N, N);
  Q.block(0, n, n, m) = e.A.transpose();
  Q.block(0, n + m, n, 1) = p.c;
  Q.block(n, 0, m, n) = -e.A;
  Q.block(n, n + m, m, 1) = e.b;
  Q.block(n + m, 0, 1, n) = -p.c.transpose();
  Q.block(n + m, n, 1, m) = -e.b.transpose();
  Eigen::PartialPivLU<Mat> lu(Mat::Identity(N, N) + Q);

  Vec w = Vec::Zero(N), v = Vec::Zero(N);
  w(N - 1) = 1.0;
  v(N - 1) = 1.0;

  auto proj_C = [&](const Vec& y) {
    Vec out = y;
    out.segment(n, m) = project_dual_product(e.cones, y.segment(n, m));
    out(N - 1) = std::max(0.0, y(N - 1));
    return out;
  };

  const double tol = opts.cert_tol;

  auto try_classify = [&]() -> std::optional<ConicCertificate> {
    double tau = w(N - 1);
    double kappa = v(N - 1);
    if (tau > 10.0 * kappa && tau > 1e-6) {
      Vec x = w.head(n) / tau;
      Vec y = w.segment(n, m) / tau;
      Vec z, mu, nu;
      split_dual(e, p, y, &z, &mu, &nu);
      ComplementaryPair pair{x, z, mu, nu, p.c.dot(x)};
      ConicCertificate c = pair;
      if (verify_certificate(p, l, u, c, tol)) return c;
      return std::nullopt;
    }
    if (kappa > 10.0 * tau) {
      Vec x = w.head(n);
      Vec y = w.segment(n, m);
      double pscore = -p.c.dot(x);
      double dscore = -e.b.dot(y);
      if (dscore > 0.0) {
        Vec yn = y / dscore;  // normalize the margin before verifying
        Vec z, mu, nu;
        split_dual(e, p, yn, &z, &mu, &nu);
        double margin =
            -p.b.dot(z) - bound_sum(l, mu) - bound_sum(u, nu);
        ConicCertificate c = DualImprovingRay{z, mu, nu, margin};
        if (margin > 0.0 && verify_certificate(p, l, u, c, tol)) return c;
      }
      if (pscore > 0.0) {
        Vec ray = x / pscore;
        for (int i = 0; i < p.int_count; ++i) {
          if (std::abs(ray(i)) > tol * (1.0 + ray.norm()))
            return std::nullopt;
          ray(i) = 0.0;
        }
        // The ray certifies unboundedness only together with a feasible
        // point, obtained by re-solving with a zero objective.
        MiConicProblem feas = p;
        feas.c.setZero();
        SubOptions fo = opts;
        ConicCertificate fc = conic_solve(feas, l, u, fo);
        if (const auto* fp = std::get_if<ComplementaryPair>(&fc)) {
          ConicCertificate c =
              PrimalImprovingRay{ray, fp->x, p.c.dot(ray)};
          if (verify_certificate(p, l, u, c, tol)) return c;
        }
      }
      return std::nullopt;
    }
    return std::nullopt;
  };

  for (int k = 0; k < opts.max_iters; ++k) {
    Vec wt = lu.solve(w + v);
    Vec wn = proj_C(wt - v);
    v += wn - wt;
    double step = (wn - w).norm();
    w = wn;
    if ((k + 1) % 50 == 0 || step < 1e-12 * (1.0 + w.norm())) {
      if (auto c = try_classify()) return *c;
      if (step < 1e-14 * (1.0 + w.norm())) break;
    }
  }
  if (auto c = try_classify()) return *c;
  return SubFailure{"no verifiable certificate within the iteration limit"};
}

}  // namespace conicert
