#include "conicert/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace conicert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivTol = 1e-9;

}  // namespace

LpModel::LpModel(int num_x, int num_aux, Vec objective, double delta)
    : num_x_(num_x), objective_(std::move(objective)), delta_(delta) {
  if (objective_.size() != num_x + num_aux)
    throw std::invalid_argument("LpModel: objective length mismatch");
  lo_ = Vec::Constant(num_cols(), -kInf);
  hi_ = Vec::Constant(num_cols(), kInf);
}

void LpModel::set_col_bounds(int j, double lo, double hi) {
  lo_(j) = lo;
  hi_(j) = hi;
}

int LpModel::add_row(const Vec& coeffs, double rhs) {
  if (coeffs.size() != num_cols())
    throw std::invalid_argument("LpModel: row length mismatch");
  rows_.push_back(coeffs);
  rhs_.push_back(rhs);
  return num_rows() - 1;
}

int LpModel::add_cut_row(const Vec& coeffs, double rhs) {
  Vec full(num_cols() + 1);
  full.head(num_cols()) = coeffs;
  full(num_cols()) = rhs;
  double nrm = full.norm();
  if (nrm == 0.0) throw std::invalid_argument("LpModel: zero cut row");
  Vec dir = full / nrm;
  for (size_t k = 0; k < cut_ids_.size(); ++k) {
    if (cut_normals_[k].dot(dir) > 1.0 - 1e-12) {
      int id = cut_ids_[k];
      // Keep the larger scaling: relative to delta it is the tighter cut.
      double old_nrm =
          std::sqrt(rows_[id].squaredNorm() + rhs_[id] * rhs_[id]);
      if (nrm > old_nrm) {
        rows_[id] = coeffs;
        rhs_[id] = rhs;
      }
      return id;
    }
  }
  int id = add_row(coeffs, rhs);
  cut_ids_.push_back(id);
  cut_normals_.push_back(dir);
  return id;
}

LpOutcome LpModel::solve() const {
  const int nc = num_cols();
  const double d = delta_;

  // Column substitutions to nonnegative variables.
  struct ColMap {
    int kind;  // 0: x = base + y, 1: x = base - y, 2: free pair
    double base;
    int y0, y1;
  };
  std::vector<ColMap> cmap(nc);
  int ny = 0;
  std::vector<std::pair<int, double>> ub_rows;  // (y index, upper value)
  for (int j = 0; j < nc; ++j) {
    double lo = lo_(j), hi = hi_(j);
    if (std::isfinite(lo)) {
      cmap[j] = {0, lo - d, ny, -1};
      if (std::isfinite(hi)) ub_rows.emplace_back(ny, (hi + d) - (lo - d));
      ny += 1;
    } else if (std::isfinite(hi)) {
      cmap[j] = {1, hi + d, ny, -1};
      ny += 1;
    } else {
      cmap[j] = {2, 0.0, ny, ny + 1};
      ny += 2;
    }
  }

  const int nr = num_rows() + static_cast<int>(ub_rows.size());
  Mat E = Mat::Zero(nr, ny);
  Vec f(nr);
  for (int i = 0; i < num_rows(); ++i) {
    double r = rhs_[i] + d;
    for (int j = 0; j < nc; ++j) {
      double a = rows_[i](j);
      if (a == 0.0) continue;
      const ColMap& m = cmap[j];
      r -= a * m.base;
      if (m.kind == 0)
        E(i, m.y0) += a;
      else if (m.kind == 1)
        E(i, m.y0) -= a;
      else {
        E(i, m.y0) += a;
        E(i, m.y1) -= a;
      }
    }
    f(i) = r;
  }
  for (size_t k = 0; k < ub_rows.size(); ++k) {
    int i = num_rows() + static_cast<int>(k);
    E(i, ub_rows[k].first) = 1.0;
    f(i) = ub_rows[k].second;
  }

  // Objective in y space (constant part recomputed from x at the end).
  Vec cy = Vec::Zero(ny);
  for (int j = 0; j < nc; ++j) {
    double c = objective_(j);
    if (c == 0.0) continue;
    const ColMap& m = cmap[j];
    if (m.kind == 0)
      cy(m.y0) += c;
    else if (m.kind == 1)
      cy(m.y0) -= c;
    else {
      cy(m.y0) += c;
      cy(m.y1) -= c;
    }
  }

  // Tableau: structural | slack | artificial | rhs.
  const int n_slack = nr, n_art = nr;
  const int ncol = ny + n_slack + n_art;
  Mat T(nr, ncol + 1);
  T.setZero();
  for (int i = 0; i < nr; ++i) {
    double sgn = f(i) >= 0.0 ? 1.0 : -1.0;
    T.row(i).head(ny) = sgn * E.row(i);
    T(i, ny + i) = sgn;           // slack
    T(i, ny + n_slack + i) = 1.0;  // artificial
    T(i, ncol) = sgn * f(i);
  }
  std::vector<int> basis(nr);
  for (int i = 0; i < nr; ++i) basis[i] = ny + n_slack + i;

  const long iter_cap = 50L * (nr + ncol) + 100;
  long iters = 0;

  Vec obj_row(ncol);
  double obj_val = 0.0;
  auto price = [&](const Vec& cost) {
    obj_row = cost;
    obj_val = 0.0;
    for (int i = 0; i < nr; ++i) {
      double cb = cost(basis[i]);
      if (cb == 0.0) continue;
      obj_row -= cb * T.row(i).head(ncol).transpose();
      obj_val += cb * T(i, ncol);
    }
  };
  auto do_pivot = [&](int r, int j) {
    double piv = T(r, j);
    T.row(r) /= piv;
    for (int i = 0; i < nr; ++i) {
      if (i == r) continue;
      double a = T(i, j);
      if (a != 0.0) T.row(i) -= a * T.row(r);
    }
    double a = obj_row(j);
    if (a != 0.0) {
      obj_row -= a * T.row(r).head(ncol).transpose();
      obj_val += a * T(r, ncol);
    }
    basis[r] = j;
  };
  // Bland's rule: smallest eligible entering index, smallest basis index
  // among tied leaving rows. Returns 0 optimal, 1 unbounded, 2 cap hit.
  auto run = [&](int max_col) -> int {
    while (true) {
      if (++iters > iter_cap) return 2;
      int enter = -1;
      for (int j = 0; j < max_col; ++j)
        if (obj_row(j) < -kPivTol) {
          enter = j;
          break;
        }
      if (enter < 0) return 0;
      int leave = -1;
      double best = kInf;
      for (int i = 0; i < nr; ++i) {
        double a = T(i, enter);
        if (a <= kPivTol) continue;
        double ratio = T(i, ncol) / a;
        if (ratio < best - 1e-12 ||
            (ratio < best + 1e-12 && (leave < 0 || basis[i] < basis[leave]))) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return 1;
      do_pivot(leave, enter);
    }
  };

  // Phase 1: minimize the artificial sum.
  Vec cost1 = Vec::Zero(ncol);
  cost1.tail(n_art).setOnes();
  price(cost1);
  int rc = run(ny + n_slack);
  if (rc == 2) return {LpStatus::Error, Vec(), 0.0};
  double infeas = obj_val;  // phase-1 objective: total residual violation
  // The delta relaxation already lives in the rhs and bounds, so phase one
  // only has to distinguish true infeasibility from rounding noise.
  double fscale = nr > 0 ? f.cwiseAbs().maxCoeff() : 0.0;
  if (infeas > 1e-9 * (1.0 + fscale))
    return {LpStatus::Infeasible, Vec(), 0.0};

  // Drive remaining artificials out of the basis.
  for (int i = 0; i < nr; ++i) {
    if (basis[i] < ny + n_slack) continue;
    int piv = -1;
    for (int j = 0; j < ny + n_slack; ++j)
      if (std::abs(T(i, j)) > kPivTol) {
        piv = j;
        break;
      }
    if (piv >= 0) do_pivot(i, piv);
    // else: redundant row; the artificial stays basic at zero.
  }

  // Phase 2.
  Vec cost2 = Vec::Zero(ncol);
  cost2.head(ny) = cy;
  price(cost2);
  rc = run(ny + n_slack);
  if (rc == 2) return {LpStatus::Error, Vec(), 0.0};
  if (rc == 1) return {LpStatus::Unbounded, Vec(), 0.0};

  Vec y = Vec::Zero(ncol);
  for (int i = 0; i < nr; ++i) y(basis[i]) = T(i, ncol);
  Vec x(nc);
  for (int j = 0; j < nc; ++j) {
    const ColMap& m = cmap[j];
    if (m.kind == 0)
      x(j) = m.base + y(m.y0);
    else if (m.kind == 1)
      x(j) = m.base - y(m.y0);
    else
      x(j) = y(m.y0) - y(m.y1);
  }
  return {LpStatus::Optimal, x, objective_.dot(x)};
}

OaLp lp_build(const MiConicProblem& p, bool use_soc_ef, double delta) {
  int num_aux = 0;
  std::vector<EfBlock> efs;
  long row = 0;
  for (size_t k = 0; k < p.cones.cones.size(); ++k) {
    const auto& cone = p.cones.cones[k];
    if (use_soc_ef && cone.kind == ConeKind::SecondOrder) {
      efs.push_back(EfBlock{static_cast<int>(k), row, cone.dim - 1,
                            p.num_vars() + num_aux});
      num_aux += cone.dim - 1;
    }
    row += cone.dim;
  }
  Vec obj = Vec::Zero(p.num_vars() + num_aux);
  obj.head(p.num_vars()) = p.c;
  OaLp oa{LpModel(p.num_vars(), num_aux, obj, delta), efs};
  LpModel& m = oa.model;

  // Polyhedral cone blocks are imposed exactly.
  row = 0;
  for (const auto& cone : p.cones.cones) {
    for (int dd = 0; dd < cone.dim; ++dd) {
      long r = row + dd;
      Vec coeffs = Vec::Zero(m.num_cols());
      coeffs.head(p.num_vars()) = p.A.row(r);
      switch (cone.kind) {
        case ConeKind::NonNeg:
          m.add_row(coeffs, p.b(r));
          break;
        case ConeKind::NonPos:
          m.add_row(-coeffs, -p.b(r));
          break;
        case ConeKind::Zero:
          m.add_row(coeffs, p.b(r));
          m.add_row(-coeffs, -p.b(r));
          break;
        default:
          break;
      }
    }
    row += cone.dim;
  }

  // EF linear rows: 2 sum(pi) <= r(x).
  for (const auto& ef : efs) {
    Vec coeffs = Vec::Zero(m.num_cols());
    coeffs.head(p.num_vars()) = p.A.row(ef.row0);
    for (int i = 0; i < ef.n; ++i) coeffs(ef.pi0 + i) = 2.0;
    m.add_row(coeffs, p.b(ef.row0));
  }
  return oa;
}

int lp_add_cut(OaLp& oa, const KStarRay& ray, const MiConicProblem& p) {
  const auto& cone = p.cones.cones.at(ray.block_index);
  Vec z = ray.values;
  if (!cones::dual_member(cone, z, 1e-9)) {
    Vec zp = cones::project_dual(cone, z);
    if ((zp - z).norm() > 1e-7 * (1.0 + z.norm()))
      throw std::runtime_error("lp_add_cut: ray is not dual-feasible");
    z = zp;
  }
  if (ray.scale <= 0.0)
    throw std::invalid_argument("lp_add_cut: scale must be positive");
  long row0 = p.cones.offset(ray.block_index);
  LpModel& m = oa.model;

  const EfBlock* ef = nullptr;
  for (const auto& e : oa.ef_blocks)
    if (e.block_index == ray.block_index) ef = &e;

  if (ef != nullptr && cone.kind == ConeKind::SecondOrder) {
    double u = z(0);
    Vec w = z.tail(cone.dim - 1);
    double wn = w.norm();
    if (wn > 0.0 && std::abs(u - wn) <= 1e-7 * (1.0 + wn)) {
      // Lift to RSOC* rows against the EF triples (r, pi_i, t_i); each row
      // is scaled by n so the aggregation survives the delta relaxation.
      double factor = ray.scale * ef->n;
      int first = -1;
      auto lifted = cones::lift_soc_cut(wn, w);
      for (int i = 0; i < ef->n; ++i) {
        double alpha = lifted[i](0), beta = lifted[i](1), g = lifted[i](2);
        Vec coeffs = Vec::Zero(m.num_cols());
        coeffs.head(p.num_vars()) =
            factor * (alpha * p.A.row(row0) + g * p.A.row(row0 + 1 + i));
        coeffs(ef->pi0 + i) = -factor * beta;
        double rhs = factor * (alpha * p.b(row0) + g * p.b(row0 + 1 + i));
        int id = m.add_cut_row(coeffs, rhs);
        if (first < 0) first = id;
      }
      return first;
    }
  }

  // Dense row: scale * z' (b - Ax) >= 0.
  Vec coeffs = Vec::Zero(m.num_cols());
  Vec zt = ray.scale * z;
  coeffs.head(p.num_vars()) =
      zt.transpose() * p.A.middleRows(row0, cone.dim);
  double rhs = zt.dot(p.b.segment(row0, cone.dim));
  return m.add_cut_row(coeffs, rhs);
}

void lp_set_int_bounds(LpModel& m, const Vec& l, const Vec& u) {
  if (l.size() != u.size())
    throw std::invalid_argument("lp_set_int_bounds: length mismatch");
  for (int i = 0; i < l.size(); ++i) {
    if (l(i) > u(i))
      throw std::invalid_argument("lp_set_int_bounds: crossed bounds");
    m.set_col_bounds(i, l(i), u(i));
  }
}

}  // namespace conicert
