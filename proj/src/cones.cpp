#include "conicert/cones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace conicert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_dim(const PrimitiveCone& cone, const Vec& y, const char* op) {
  if (y.size() != cone.dim)
    throw std::invalid_argument(std::string(op) + ": vector length " +
                                std::to_string(y.size()) +
                                " does not match cone dim " +
                                std::to_string(cone.dim));
}

double safe_exp(double x) { return x > 700.0 ? kInf : std::exp(x); }

// Worst violation of the defining inequalities of the exponential cone,
// taking the minimum over the two branches of the union form.
double exp_primal_violation(double r, double s, double t) {
  double v1 = std::max({std::abs(s), -r, t});
  double v2 = kInf;
  if (s > 0.0) v2 = std::max(-s, s * safe_exp(t / s) - r);
  return std::min(v1, v2);
}

double exp_dual_violation(double u, double v, double w) {
  double v1 = std::max({std::abs(w), -u, -v});
  double v2 = kInf;
  if (u > 0.0 && w < 0.0) v2 = w - w * std::log(-w / u) - v;
  return std::min(v1, v2);
}

// Orthogonal involution mapping the rotated SOC onto the SOC:
// (r, s, t) -> ((r+s)/sqrt2, (r-s)/sqrt2, t).
Vec rsoc_to_soc(const Vec& y) {
  Vec x = y;
  const double isqrt2 = 1.0 / std::sqrt(2.0);
  x(0) = (y(0) + y(1)) * isqrt2;
  x(1) = (y(0) - y(1)) * isqrt2;
  return x;
}

Vec soc_project(const Vec& y) {
  double r = y(0);
  double tn = y.tail(y.size() - 1).norm();
  if (tn <= r) return y;
  if (tn <= -r) return Vec::Zero(y.size());
  double alpha = 0.5 * (r + tn);
  Vec p(y.size());
  p(0) = alpha;
  p.tail(y.size() - 1) = (alpha / tn) * y.tail(y.size() - 1);
  return p;
}

// Smooth-boundary candidates for the exponential cone projection. The
// boundary point is parameterized by a = t/s with s e^a = r; stationarity
// reduces to a scalar root-find in a.
void exp_boundary_candidates(double r0, double s0, double t0,
                             std::vector<Vec>* out) {
  auto s_of = [&](double a) {
    double den = a + safe_exp(2.0 * a);
    if (den == kInf || std::abs(den) < 1e-14) return -1.0;
    return (t0 + r0 * safe_exp(a)) / den;
  };
  auto resid = [&](double a) {
    double s = s_of(a);
    if (!(s > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    double ea = safe_exp(a);
    return s - s0 + (s * ea - r0) * ea * (1.0 - a);
  };
  auto push = [&](double a) {
    double s = s_of(a);
    if (!(s > 0.0)) return;
    Vec p(3);
    p(0) = s * safe_exp(a);
    p(1) = s;
    p(2) = s * a;
    out->push_back(p);
  };
  // s(a) flips sign at the pole of den(a) = a + e^{2a} and at the zero of
  // num(a) = t0 + r0 e^a; sampling each smooth subinterval separately (with
  // extra points crowded toward its ends) avoids losing roots there.
  double astar;  // unique root of a + e^{2a} = 0
  {
    double lo = -1.0, hi = 0.0;
    for (int i = 0; i < 100; ++i) {
      double m = 0.5 * (lo + hi);
      (m + std::exp(2.0 * m) < 0.0 ? lo : hi) = m;
    }
    astar = 0.5 * (lo + hi);
  }
  std::vector<double> edges = {-700.0, astar, 60.0};
  if (r0 != 0.0 && t0 != 0.0 && -t0 / r0 > 0.0) {
    double abar = std::log(-t0 / r0);
    if (abar > -700.0 && abar < 60.0) edges.push_back(abar);
  }
  std::sort(edges.begin(), edges.end());
  for (size_t e = 0; e + 1 < edges.size(); ++e) {
    double lo = edges[e], hi = edges[e + 1];
    double span = hi - lo;
    if (span <= 1e-12) continue;
    std::vector<double> samples;
    const int grid = 800;
    for (int i = 1; i < grid; ++i) samples.push_back(lo + span * i / grid);
    for (int k = 1; k <= 40; ++k) {
      double f = std::pow(10.0, -0.35 * k);
      samples.push_back(lo + span * f);
      samples.push_back(hi - span * f);
    }
    std::sort(samples.begin(), samples.end());
    double prev_a = samples[0], prev_g = resid(samples[0]);
    for (size_t i = 1; i < samples.size(); ++i) {
      double a = samples[i], g = resid(a);
      if (std::isfinite(prev_g) && std::isfinite(g) &&
          ((prev_g <= 0.0 && g >= 0.0) || (prev_g >= 0.0 && g <= 0.0))) {
        double la = prev_a, ra = a, lg = prev_g;
        for (int it = 0; it < 100; ++it) {
          double mid = 0.5 * (la + ra);
          double mg = resid(mid);
          if (!std::isfinite(mg)) break;
          if ((mg <= 0.0) == (lg <= 0.0)) {
            la = mid;
            lg = mg;
          } else {
            ra = mid;
          }
        }
        push(0.5 * (la + ra));
      }
      prev_a = a;
      prev_g = g;
    }
  }
}

Vec exp_project(const Vec& y) {
  double r0 = y(0), s0 = y(1), t0 = y(2);
  if (exp_primal_violation(r0, s0, t0) <= 0.0) return y;
  // Projection is 0 iff y lies in the polar cone, i.e. -y in the dual.
  if (exp_dual_violation(-r0, -s0, -t0) <= 0.0) return Vec::Zero(3);

  std::vector<Vec> cands;
  Vec face(3);
  face << std::max(r0, 0.0), 0.0, std::min(t0, 0.0);
  cands.push_back(face);
  // Deep-tail face: when t/s is below the exp underflow threshold the
  // boundary s e^{t/s} = r degenerates to r = 0 with s free.
  Vec tail(3);
  tail << std::max(r0, 0.0), std::max(s0, 0.0), std::min(t0, 0.0);
  cands.push_back(tail);
  cands.push_back(Vec::Zero(3));
  exp_boundary_candidates(r0, s0, t0, &cands);

  double best = kInf;
  Vec bestp = face;
  for (const auto& p : cands) {
    double tol = 1e-9 * (1.0 + p.lpNorm<Eigen::Infinity>());
    if (exp_primal_violation(p(0), p(1), p(2)) > tol) continue;
    double d = (p - y).squaredNorm();
    if (d < best) {
      best = d;
      bestp = p;
    }
  }
  return bestp;
}

Eigen::SelfAdjointEigenSolver<Mat> sym_eig(const Mat& W) {
  Eigen::SelfAdjointEigenSolver<Mat> es(W);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  return es;
}

}  // namespace

PrimitiveCone PrimitiveCone::make(ConeKind k, int d) {
  if (d < 1) throw std::invalid_argument("cone dim must be >= 1");
  if (k == ConeKind::SecondOrder && d < 2)
    throw std::invalid_argument("second-order cone needs dim >= 2");
  if (k == ConeKind::RotatedSecondOrder && d < 3)
    throw std::invalid_argument("rotated second-order cone needs dim >= 3");
  if (k == ConeKind::Exponential && d != 3)
    throw std::invalid_argument("exponential cone has dim 3");
  return PrimitiveCone{k, d, 0};
}

PrimitiveCone PrimitiveCone::psd_svec(int side) {
  if (side < 2) throw std::invalid_argument("psd cone needs side >= 2");
  return PrimitiveCone{ConeKind::PsdSvec, side * (side + 1) / 2, side};
}

namespace cones {

int svec_dim(int side) { return side * (side + 1) / 2; }

int smat_side(int len) {
  int n = static_cast<int>(std::floor(std::sqrt(2.0 * len)));
  for (int s = std::max(1, n - 1); s <= n + 1; ++s)
    if (s * (s + 1) / 2 == len) return s;
  throw std::invalid_argument("svec length " + std::to_string(len) +
                              " is not a triangular number");
}

Vec svec(const Mat& T) {
  if (T.rows() != T.cols()) throw std::invalid_argument("svec: not square");
  int n = static_cast<int>(T.rows());
  double scale = std::max(1.0, T.cwiseAbs().maxCoeff());
  const double sqrt2 = std::sqrt(2.0);
  Vec t(svec_dim(n));
  int idx = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      if (std::abs(T(i, j) - T(j, i)) > 1e-12 * scale)
        throw std::invalid_argument("svec: matrix not symmetric");
      t(idx++) = (i == j) ? T(i, j) : sqrt2 * T(i, j);
    }
  return t;
}

Mat smat(const Vec& t) {
  int n = smat_side(static_cast<int>(t.size()));
  const double isqrt2 = 1.0 / std::sqrt(2.0);
  Mat T(n, n);
  int idx = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      double v = (i == j) ? t(idx) : t(idx) * isqrt2;
      T(i, j) = v;
      T(j, i) = v;
      ++idx;
    }
  return T;
}

bool member(const PrimitiveCone& cone, const Vec& y, double tol) {
  check_dim(cone, y, "member");
  switch (cone.kind) {
    case ConeKind::Zero:
      return y.lpNorm<Eigen::Infinity>() <= tol;
    case ConeKind::Free:
      return true;
    case ConeKind::NonNeg:
      return y.minCoeff() >= -tol;
    case ConeKind::NonPos:
      return y.maxCoeff() <= tol;
    case ConeKind::SecondOrder:
      return y.tail(cone.dim - 1).norm() - y(0) <= tol;
    case ConeKind::RotatedSecondOrder: {
      double r = y(0), s = y(1);
      double t2 = y.tail(cone.dim - 2).squaredNorm();
      return std::max({-r, -s, t2 - 2.0 * r * s}) <= tol;
    }
    case ConeKind::Exponential:
      return exp_primal_violation(y(0), y(1), y(2)) <= tol;
    case ConeKind::PsdSvec: {
      auto es = sym_eig(smat(y));
      return es.eigenvalues().minCoeff() >= -tol;
    }
  }
  return false;
}

bool dual_member(const PrimitiveCone& cone, const Vec& z, double tol) {
  check_dim(cone, z, "dual_member");
  switch (cone.kind) {
    case ConeKind::Zero:
      return true;  // dual of the zero cone is the free cone
    case ConeKind::Free:
      return z.lpNorm<Eigen::Infinity>() <= tol;
    case ConeKind::NonNeg:
    case ConeKind::NonPos:
    case ConeKind::SecondOrder:
    case ConeKind::RotatedSecondOrder:
    case ConeKind::PsdSvec:
      return member(cone, z, tol);  // self-dual
    case ConeKind::Exponential:
      return exp_dual_violation(z(0), z(1), z(2)) <= tol;
  }
  return false;
}

Vec project(const PrimitiveCone& cone, const Vec& y) {
  check_dim(cone, y, "project");
  switch (cone.kind) {
    case ConeKind::Zero:
      return Vec::Zero(cone.dim);
    case ConeKind::Free:
      return y;
    case ConeKind::NonNeg:
      return y.cwiseMax(0.0);
    case ConeKind::NonPos:
      return y.cwiseMin(0.0);
    case ConeKind::SecondOrder:
      return soc_project(y);
    case ConeKind::RotatedSecondOrder:
      return rsoc_to_soc(soc_project(rsoc_to_soc(y)));
    case ConeKind::Exponential:
      return exp_project(y);
    case ConeKind::PsdSvec: {
      auto es = sym_eig(smat(y));
      Vec lam = es.eigenvalues().cwiseMax(0.0);
      Mat P = es.eigenvectors() * lam.asDiagonal() *
              es.eigenvectors().transpose();
      return svec(P);
    }
  }
  return y;
}

Vec project_dual(const PrimitiveCone& cone, const Vec& z) {
  // Moreau: proj_{K*}(z) = z + proj_K(-z).
  return z + project(cone, -z);
}

std::vector<KStarRay> initial_fixed_rays(const PrimitiveCone& cone,
                                         int soc_full_diamond_limit) {
  std::vector<KStarRay> rays;
  auto add = [&](const Vec& v) { rays.push_back(KStarRay{0, v, 1.0}); };
  switch (cone.kind) {
    case ConeKind::Exponential: {
      Vec e1(3), e2(3);
      e1 << 1, 0, 0;
      e2 << 0, 1, 0;
      add(e1);
      add(e2);
      for (double w : {-4.0, -2.0, -1.0, -0.5, -0.25}) {
        Vec v(3);
        v << 1.0, w - w * std::log(-w), w;
        add(v);
      }
      break;
    }
    case ConeKind::SecondOrder: {
      int n = cone.dim - 1;
      for (int i = 0; i < n; ++i)
        for (double sgn : {1.0, -1.0}) {
          Vec v = Vec::Zero(cone.dim);
          v(0) = 1.0;
          v(1 + i) = sgn;
          add(v);
        }
      if (n <= soc_full_diamond_limit) {
        double inv = 1.0 / std::sqrt(static_cast<double>(n));
        for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << n); ++mask) {
          Vec v(cone.dim);
          v(0) = 1.0;
          for (int i = 0; i < n; ++i)
            v(1 + i) = (mask >> i & 1) ? inv : -inv;
          add(v);
        }
      }
      break;
    }
    case ConeKind::PsdSvec: {
      int n = cone.side;
      for (int i = 0; i < n; ++i) {
        Vec om = Vec::Zero(n);
        om(i) = 1.0;
        add(svec(om * om.transpose()));
      }
      for (int i = 1; i < n; ++i)
        for (int j = 0; j < i; ++j)
          for (double sgn : {1.0, -1.0}) {
            Vec om = Vec::Zero(n);
            om(i) = 1.0;
            om(j) = sgn;
            add(svec(om * om.transpose()));
          }
      break;
    }
    default:
      break;  // polyhedral cones are imposed exactly as LP rows
  }
  return rays;
}

std::vector<KStarRay> disaggregate(const PrimitiveCone& cone, const Vec& z,
                                   double repair_tol) {
  check_dim(cone, z, "disaggregate");
  Vec zr = z;
  if (!dual_member(cone, zr, 1e-9)) {
    Vec proj = project_dual(cone, zr);
    double dist = (proj - zr).norm();
    if (dist > repair_tol * (1.0 + zr.norm()))
      throw std::runtime_error(
          "disaggregate: point not repairable to the dual cone (distance " +
          std::to_string(dist) + ")");
    zr = proj;
  }
  double zscale = std::max(1.0, zr.lpNorm<Eigen::Infinity>());
  std::vector<KStarRay> rays;
  auto add = [&](const Vec& v) { rays.push_back(KStarRay{0, v, 1.0}); };
  switch (cone.kind) {
    case ConeKind::NonNeg:
    case ConeKind::NonPos: {
      for (int i = 0; i < cone.dim; ++i)
        if (std::abs(zr(i)) > 1e-12 * zscale) {
          Vec v = Vec::Zero(cone.dim);
          v(i) = zr(i);
          add(v);
        }
      break;
    }
    case ConeKind::Zero: {
      // Dual is the free cone; no extreme-ray structure to exploit.
      if (zr.lpNorm<Eigen::Infinity>() > 1e-12 * zscale) add(zr);
      break;
    }
    case ConeKind::Free:
      break;  // dual is the zero cone
    case ConeKind::SecondOrder: {
      Vec w = zr.tail(cone.dim - 1);
      double wn = w.norm();
      if (wn <= 1e-12 * zscale) break;  // multiple of (1, 0); discard
      Vec v(cone.dim);
      v(0) = wn;
      v.tail(cone.dim - 1) = w;
      add(v);
      break;
    }
    case ConeKind::Exponential: {
      double u = zr(0), v = zr(1), w = zr(2);
      if (w >= -1e-12 * zscale) {
        // On the w = 0 face z = u (1,0,0) + v (0,1,0); keep the first
        // extreme ray, the (0,1,0) residual is discarded.
        if (u > 1e-12 * zscale) {
          Vec r(3);
          r << u, 0.0, 0.0;
          add(r);
        }
        break;
      }
      // The minimal-v ray at (u, w) is (u, w - w log(-w/u), w). Near u = 0
      // that bound is extremely sensitive to u, so lift u to the smallest
      // value consistent with z's own v before building the ray.
      double u_crit = -w * safe_exp(v / w - 1.0);
      double ur = std::max(u, u_crit);
      if (!(ur > 0.0) || ur > u + repair_tol * (1.0 + zr.norm()))
        throw std::runtime_error("disaggregate: invalid dual EXP point");
      Vec r(3);
      r << ur, w - w * std::log(-w / ur), w;
      add(r);
      break;
    }
    case ConeKind::PsdSvec: {
      auto es = sym_eig(smat(zr));
      for (int i = 0; i < cone.side; ++i) {
        double lam = es.eigenvalues()(i);
        if (lam <= 1e-12 * zscale) continue;
        Vec q = es.eigenvectors().col(i);
        add(svec(lam * q * q.transpose()));
      }
      break;
    }
    case ConeKind::RotatedSecondOrder:
      throw std::runtime_error(
          "disaggregate: rotated SOC blocks must be preprocessed to SOC");
  }
  return rays;
}

std::vector<KStarRay> separate(const PrimitiveCone& cone, const Vec& y,
                               double tol) {
  check_dim(cone, y, "separate");
  std::vector<KStarRay> rays;
  if (member(cone, y, tol)) return rays;
  auto add = [&](const Vec& v) { rays.push_back(KStarRay{0, v, 1.0}); };
  switch (cone.kind) {
    case ConeKind::NonNeg: {
      for (int i = 0; i < cone.dim; ++i)
        if (y(i) < -tol) {
          Vec v = Vec::Zero(cone.dim);
          v(i) = 1.0;
          add(v);
        }
      break;
    }
    case ConeKind::NonPos: {
      for (int i = 0; i < cone.dim; ++i)
        if (y(i) > tol) {
          Vec v = Vec::Zero(cone.dim);
          v(i) = -1.0;
          add(v);
        }
      break;
    }
    case ConeKind::Zero: {
      for (int i = 0; i < cone.dim; ++i)
        if (std::abs(y(i)) > tol) {
          Vec v = Vec::Zero(cone.dim);
          v(i) = y(i) > 0 ? -1.0 : 1.0;
          add(v);
        }
      break;
    }
    case ConeKind::Free:
      break;
    case ConeKind::SecondOrder: {
      Vec t = y.tail(cone.dim - 1);
      double tn = t.norm();
      Vec v = Vec::Zero(cone.dim);
      v(0) = 1.0;
      if (tn > 0.0) v.tail(cone.dim - 1) = -t / tn;
      add(v);
      break;
    }
    case ConeKind::Exponential: {
      double r = y(0), s = y(1), t = y(2);
      // The middle entry of each candidate is built from the same
      // expression dual_member evaluates, so the rays sit exactly on the
      // dual boundary regardless of magnitude.
      auto boundary_ray = [](double u, double w) {
        Vec v(3);
        v << u, w - w * std::log(-w / u), w;
        return v;
      };
      std::vector<Vec> cands;
      if (s > tol && std::isfinite(safe_exp(t / s)))
        cands.push_back(boundary_ray(1.0, -safe_exp(t / s)));
      if (s < -tol) cands.push_back(Vec{{0.0, 1.0, 0.0}});
      if (r < -tol) cands.push_back(Vec{{1.0, 0.0, 0.0}});
      if (r > tol && t > tol) cands.push_back(boundary_ray(t / r, -2.0));
      cands.push_back(boundary_ray(1.0, -1.0));
      bool added = false;
      for (const auto& v : cands)
        if (v.dot(y) < -tol && dual_member(cone, v, 1e-9)) {
          add(v);
          added = true;
          break;
        }
      if (!added) {
        // Last resort: proj_K(y) - y is always a separating dual point.
        Vec d = project(cone, y) - y;
        if (d.norm() > 0.0) add(project_dual(cone, d / d.norm()));
      }
      break;
    }
    case ConeKind::PsdSvec: {
      auto es = sym_eig(smat(y));
      for (int i = 0; i < cone.side; ++i) {
        if (es.eigenvalues()(i) >= -tol) continue;
        Vec q = es.eigenvectors().col(i);
        add(svec(q * q.transpose()));
      }
      break;
    }
    case ConeKind::RotatedSecondOrder: {
      // Separate via the orthogonal map to SOC; dual rays map back the same way.
      PrimitiveCone soc = PrimitiveCone::second_order(cone.dim);
      for (auto& ray : separate(soc, rsoc_to_soc(y), tol))
        add(rsoc_to_soc(ray.values));
      break;
    }
  }
  return rays;
}

std::vector<Eigen::Vector3d> lift_soc_cut(double u, const Vec& w) {
  if (u <= 0.0) throw std::invalid_argument("lift_soc_cut: u must be > 0");
  double wn = w.norm();
  if (wn == 0.0) throw std::invalid_argument("lift_soc_cut: w must be nonzero");
  if (std::abs(u - wn) > 1e-8 * (1.0 + wn))
    throw std::invalid_argument("lift_soc_cut: (u, w) is not extreme");
  std::vector<Eigen::Vector3d> rays;
  rays.reserve(w.size());
  for (int i = 0; i < w.size(); ++i) {
    if (w(i) == 0.0)
      rays.emplace_back(0.0, 1.0, 0.0);
    else
      rays.emplace_back(w(i) * w(i) / (2.0 * u), u, w(i));
  }
  return rays;
}

StrengthenedRsocConstraint strengthen_psd_cut(const Vec& omega, int i) {
  int n = static_cast<int>(omega.size());
  if (omega.norm() == 0.0)
    throw std::invalid_argument("strengthen_psd_cut: omega must be nonzero");
  if (i < 0 || i >= n)
    throw std::invalid_argument("strengthen_psd_cut: index out of range");
  Vec om_rest = omega;
  om_rest(i) = 0.0;
  Mat W1 = Mat::Zero(n, n);
  W1(i, i) = 1.0;
  Mat W2 = om_rest * om_rest.transpose();
  W2.row(i).setZero();
  W2.col(i).setZero();
  Mat W3 = Mat::Zero(n, n);
  const double isqrt2 = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < n; ++j)
    if (j != i) {
      W3(i, j) = isqrt2 * om_rest(j);
      W3(j, i) = isqrt2 * om_rest(j);
    }
  StrengthenedRsocConstraint c;
  c.i = i;
  c.omega = omega;
  c.coeff_t = svec(W1);
  c.coeff_quad = svec(W2);
  c.coeff_cross = svec(W3);
  return c;
}

}  // namespace cones
}  // namespace conicert
