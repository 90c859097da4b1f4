#include "conicert/oa.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>

#include "conicert/cones.hpp"

namespace conicert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double cone_tol(const PrimitiveCone& cone, const OaOptions& opts) {
  switch (cone.kind) {
    case ConeKind::SecondOrder:
    case ConeKind::RotatedSecondOrder:
      return opts.tol_soc;
    case ConeKind::Exponential:
      return opts.tol_exp;
    case ConeKind::PsdSvec:
      return opts.tol_psd;
    default:
      return opts.tol_linear;
  }
}

bool conic_feasible(const MiConicProblem& p, const Vec& x,
                    const OaOptions& opts) {
  Vec s = p.b - p.A * x;
  long off = 0;
  for (const auto& cone : p.cones.cones) {
    if (!cones::member(cone, s.segment(off, cone.dim), cone_tol(cone, opts)))
      return false;
    off += cone.dim;
  }
  return true;
}

/// Rows added by separating x from each violated nonpolyhedral block.
int add_separation_cuts(CutPool& pool, OaLp& oa, const MiConicProblem& p,
                        const Vec& x, const OaOptions& opts) {
  Vec s = p.b - p.A * x;
  int before = oa.model.num_rows();
  for (size_t k = 0; k < p.cones.cones.size(); ++k) {
    const auto& cone = p.cones.cones[k];
    if (is_polyhedral(cone.kind)) continue;
    long off = p.cones.offset(static_cast<int>(k));
    auto rays = cones::separate(cone, s.segment(off, cone.dim),
                                cone_tol(cone, opts));
    for (auto& r : rays) {
      r.block_index = static_cast<int>(k);
      lp_add_cut(oa, r, p);
      pool.entries.push_back({r, CutProvenance::Separation});
    }
  }
  return oa.model.num_rows() - before;
}

void seed_initial_cuts(CutPool& pool, OaLp& oa, const MiConicProblem& p,
                       const OaOptions& opts) {
  for (size_t k = 0; k < p.cones.cones.size(); ++k) {
    const auto& cone = p.cones.cones[k];
    auto rays =
        cones::initial_fixed_rays(cone, opts.soc_full_diamond_limit);
    for (auto& r : rays) {
      r.block_index = static_cast<int>(k);
      lp_add_cut(oa, r, p);
      pool.entries.push_back({r, CutProvenance::Initial});
    }
  }
}

/// Solver outputs can sit up to the LP or certificate tolerance outside the
/// node box; clamping the integer components first keeps branching sound
/// (children never get crossed bounds) and integrality checks meaningful.
Vec clamp_ints(Vec x, const Vec& l, const Vec& u) {
  for (int i = 0; i < l.size(); ++i)
    x(i) = std::min(std::max(x(i), l(i)), u(i));
  return x;
}

bool is_integral(const Vec& x, int int_count, double tol) {
  for (int i = 0; i < int_count; ++i)
    if (std::abs(x(i) - std::nearbyint(x(i))) > tol) return false;
  return true;
}

/// Most-fractional integer variable, ties to the lowest index; -1 when
/// integral.
int branch_variable(const Vec& x, int int_count, double tol) {
  int best = -1;
  double best_score = tol;
  for (int i = 0; i < int_count; ++i) {
    double f = x(i) - std::floor(x(i));
    double score = std::min(f, 1.0 - f);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

std::vector<long> round_key(const Vec& x, int int_count) {
  std::vector<long> key(int_count);
  for (int i = 0; i < int_count; ++i)
    key[i] = static_cast<long>(std::llround(x(i)));
  return key;
}

bool gap_closed(double L, double U, double eps, double theta) {
  if (U == kInf) return L == kInf;
  return L >= U - eps * (std::abs(L) + theta);
}

struct Node {
  Vec l, u;
  double L;
  long seq;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.L != b.L) return a.L > b.L;  // smallest lower bound first
    return a.seq > b.seq;              // FIFO among ties
  }
};

struct MilpOut {
  LpStatus status = LpStatus::Error;
  Vec x;
  double objective = 0.0;
  long nodes = 0;
};

/// Pure MILP branch and bound over the current OA LP rows; solves to a
/// near-exact gap so the outer drivers can treat the bound as the OA
/// optimum.
MilpOut milp_solve(OaLp& oa, const Vec& l0, const Vec& u0, double int_tol,
                   long node_limit, Clock::time_point deadline) {
  const int I = static_cast<int>(l0.size());
  MilpOut out;
  double U = kInf;
  Vec best;
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long seq = 0;
  open.push({l0, u0, -kInf, seq++});
  while (!open.empty()) {
    if (out.nodes >= node_limit || Clock::now() > deadline) {
      out.status = LpStatus::Error;
      return out;
    }
    Node node = open.top();
    open.pop();
    ++out.nodes;
    if (node.L >= U - 1e-9 * (1.0 + std::abs(node.L))) continue;
    lp_set_int_bounds(oa.model, node.l, node.u);
    LpOutcome lp = oa.model.solve();
    if (lp.status == LpStatus::Infeasible) continue;
    if (lp.status == LpStatus::Unbounded || lp.status == LpStatus::Error) {
      out.status = lp.status;
      return out;
    }
    double L = lp.objective;
    if (L >= U - 1e-9 * (1.0 + std::abs(L))) continue;
    Vec x = lp.x;
    x.head(I) = clamp_ints(x.head(I), node.l, node.u);
    int bv = branch_variable(x, I, int_tol);
    if (bv < 0) {
      if (L < U) {
        U = L;
        best = x;
      }
      continue;
    }
    Node down{node.l, node.u, L, seq++};
    down.u(bv) = std::floor(x(bv));
    Node up{node.l, node.u, L, seq++};
    up.l(bv) = std::ceil(x(bv));
    open.push(down);
    open.push(up);
  }
  if (U == kInf) {
    out.status = LpStatus::Infeasible;
    return out;
  }
  out.status = LpStatus::Optimal;
  out.x = best;
  out.objective = U;
  return out;
}

}  // namespace

double scale_infeasibility_ray(const DualImprovingRay& cert, double delta,
                               double cert_tol, bool* weak_warning) {
  if (weak_warning != nullptr) *weak_warning = false;
  if (delta == 0.0) return 0.0;
  if (cert.margin <= cert_tol) {
    if (weak_warning != nullptr) *weak_warning = true;
    return 0.0;
  }
  return 2.0 * delta / cert.margin;
}

double scale_optimality_point(double delta, double eps, double theta,
                              double L) {
  if (delta == 0.0) return 1.0;
  return std::max(1.0, delta / (eps * (std::abs(L) + theta)));
}

std::vector<KStarRay> add_certificate_cuts(CutPool& pool, OaLp& oa,
                                           const ConicCertificate& cert,
                                           const MiConicProblem& p,
                                           const OaOptions& opts, double L) {
  const Vec* z = nullptr;
  double gamma = 1.0;
  if (const auto* ray = std::get_if<DualImprovingRay>(&cert)) {
    z = &ray->z;
    if (opts.use_scaling) {
      double g = scale_infeasibility_ray(*ray, opts.delta,
                                         opts.sub.cert_tol);
      if (g > 0.0) gamma = g;
    }
  } else if (const auto* pair = std::get_if<ComplementaryPair>(&cert)) {
    z = &pair->z;
    if (opts.use_scaling)
      gamma = scale_optimality_point(opts.delta, opts.rel_gap, opts.theta, L);
  } else {
    return {};
  }

  std::vector<KStarRay> rays;
  for (size_t k = 0; k < p.cones.cones.size(); ++k) {
    const auto& cone = p.cones.cones[k];
    if (is_polyhedral(cone.kind)) continue;
    Vec seg = z->segment(p.cones.offset(static_cast<int>(k)), cone.dim);
    if (seg.norm() <= 1e-12 * (1.0 + z->norm())) continue;
    if (opts.use_disaggregation) {
      for (auto& r : cones::disaggregate(cone, seg)) {
        r.block_index = static_cast<int>(k);
        rays.push_back(std::move(r));
      }
    } else {
      rays.push_back(KStarRay{static_cast<int>(k), seg, 1.0});
    }
  }
  // Summing the J disaggregated relaxed cuts loses a factor J against the
  // LP tolerance; rescaling each ray by J restores the aggregate guarantee.
  double factor = gamma;
  if (opts.use_scaling && opts.use_disaggregation && rays.size() > 1)
    factor *= static_cast<double>(rays.size());
  for (auto& r : rays) {
    r.scale *= factor;
    lp_add_cut(oa, r, p);
    pool.entries.push_back({r, CutProvenance::Certificate});
  }
  return rays;
}

SolveResult solve_bb(const MiConicProblem& p, const OaOptions& opts) {
  SolveResult res;
  auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(
                         std::chrono::duration<double>(opts.time_limit));
  OaLp oa = lp_build(p, opts.use_soc_ef, opts.delta);
  CutPool pool;
  if (opts.use_initial_cuts) seed_initial_cuts(pool, oa, p, opts);

  double U = kInf;
  std::optional<Vec> incumbent;
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long seq = 0;
  open.push({p.int_lower, p.int_upper, -kInf, seq++});
  bool unbounded = false;

  auto finish_limits = [&](SolveStatus s) {
    res.status = s;
    res.upper_bound = U;
    res.incumbent = incumbent;
    return res;
  };

  while (!open.empty() && !unbounded) {
    if (res.node_count >= opts.node_limit)
      return finish_limits(SolveStatus::IterationLimit);
    if (Clock::now() > deadline) return finish_limits(SolveStatus::TimeLimit);

    Node node = open.top();
    open.pop();
    ++res.node_count;
    // Best-bound order makes the popped L the global lower bound.
    res.lower_bound = std::min(U, std::max(res.lower_bound, node.L));
    if (gap_closed(node.L, U, opts.rel_gap, opts.theta)) continue;

    lp_set_int_bounds(oa.model, node.l, node.u);
    double L = node.L;
    int sep_rounds = 0;
    bool done_node = false;
    while (!done_node) {
      LpOutcome lp = oa.model.solve();
      if (lp.status == LpStatus::Infeasible) break;  // fathomed
      if (lp.status == LpStatus::Error) {
        res.status = SolveStatus::Error;
        res.error_stage = "lp";
        return res;
      }

      Vec xhat;
      int bv = -1;
      bool lp_unbounded = (lp.status == LpStatus::Unbounded);
      if (!lp_unbounded) {
        xhat = lp.x.head(p.num_vars());
        xhat.head(p.int_count) =
            clamp_ints(xhat.head(p.int_count), node.l, node.u);
        L = std::max(L, lp.objective);
        if (gap_closed(L, U, opts.rel_gap, opts.theta)) break;
        bv = branch_variable(xhat, p.int_count, opts.int_tol);
        if (bv >= 0 && !opts.solve_fractional) {
          // Separation hook before branching on a fractional LP optimum.
          if (opts.use_separation && !conic_feasible(p, xhat, opts))
            add_separation_cuts(pool, oa, p, xhat, opts);
          Node down{node.l, node.u, L, seq++};
          down.u(bv) = std::floor(xhat(bv));
          Node up{node.l, node.u, L, seq++};
          up.l(bv) = std::ceil(xhat(bv));
          open.push(down);
          open.push(up);
          break;
        }
      }

      if (!opts.use_certificate_cuts) {
        // Separation-only mode: accept or cut off the integral LP optimum.
        if (lp_unbounded) {
          res.status = SolveStatus::Error;
          res.error_stage = "oa-unbounded";
          return res;
        }
        if (conic_feasible(p, xhat, opts)) {
          if (lp.objective < U) {
            U = lp.objective;
            incumbent = xhat;
          }
          break;
        }
        if (add_separation_cuts(pool, oa, p, xhat, opts) > 0 &&
            ++sep_rounds < 1000)
          continue;
        res.status = SolveStatus::Error;
        res.error_stage = "separation";
        return res;
      }

      ConicCertificate cert = conic_solve(p, node.l, node.u, opts.sub);
      ++res.subproblem_count;
      if (const auto* ray = std::get_if<DualImprovingRay>(&cert)) {
        add_certificate_cuts(pool, oa, cert, p, opts, L);
        (void)ray;
        break;  // fathomed by infeasibility
      }
      if (const auto* pray = std::get_if<PrimalImprovingRay>(&cert)) {
        Vec fx = pray->feasible_point;
        fx.head(p.int_count) =
            clamp_ints(fx.head(p.int_count), node.l, node.u);
        if (is_integral(fx, p.int_count, opts.int_tol)) {
          U = -kInf;
          incumbent.reset();
          unbounded = true;
          break;
        }
        int fb = branch_variable(fx, p.int_count, opts.int_tol);
        Node down{node.l, node.u, L, seq++};
        down.u(fb) = std::floor(fx(fb));
        Node up{node.l, node.u, L, seq++};
        up.l(fb) = std::ceil(fx(fb));
        open.push(down);
        open.push(up);
        break;
      }
      if (const auto* pair = std::get_if<ComplementaryPair>(&cert)) {
        L = std::max(L, pair->objective);
        add_certificate_cuts(pool, oa, cert, p, opts, pair->objective);
        if (gap_closed(L, U, opts.rel_gap, opts.theta)) break;
        Vec px = pair->x;
        px.head(p.int_count) =
            clamp_ints(px.head(p.int_count), node.l, node.u);
        if (is_integral(px, p.int_count, opts.int_tol)) {
          if (pair->objective < U) {
            U = pair->objective;
            incumbent = px;
          }
          break;  // fathomed by integrality
        }
        int fb = branch_variable(px, p.int_count, opts.int_tol);
        Node down{node.l, node.u, L, seq++};
        down.u(fb) = std::floor(px(fb));
        Node up{node.l, node.u, L, seq++};
        up.l(fb) = std::ceil(px(fb));
        open.push(down);
        open.push(up);
        break;
      }
      // Subsolver failure: fall back to separation at the LP optimum.
      if (lp_unbounded) {
        res.status = SolveStatus::Error;
        res.error_stage = "oa-unbounded";
        return res;
      }
      if (conic_feasible(p, xhat, opts)) {
        if (lp.objective < U) {
          U = lp.objective;
          incumbent = xhat;
        }
        break;
      }
      if (opts.use_separation &&
          add_separation_cuts(pool, oa, p, xhat, opts) > 0 &&
          ++sep_rounds < 1000)
        continue;
      res.status = SolveStatus::Error;
      res.error_stage = "subsolver";
      return res;
    }
  }

  if (unbounded) {
    res.status = SolveStatus::Unbounded;
    res.upper_bound = -kInf;
    res.lower_bound = -kInf;
    return res;
  }
  res.upper_bound = U;
  res.lower_bound = U;
  res.incumbent = incumbent;
  res.status = (U == kInf) ? SolveStatus::Infeasible : SolveStatus::Optimal;
  return res;
}

SolveResult solve_iterative(const MiConicProblem& p, const OaOptions& opts) {
  SolveResult res;
  auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(
                         std::chrono::duration<double>(opts.time_limit));
  OaLp oa = lp_build(p, opts.use_soc_ef, opts.delta);
  CutPool pool;
  if (opts.use_initial_cuts) seed_initial_cuts(pool, oa, p, opts);

  double L = -kInf, U = kInf;
  std::optional<Vec> incumbent;

  auto finish = [&](SolveStatus s) {
    res.status = s;
    res.lower_bound = std::min(L, U);
    res.upper_bound = U;
    res.incumbent = incumbent;
    return res;
  };

  while (true) {
    if (res.iteration_count >= opts.iter_limit)
      return finish(SolveStatus::IterationLimit);
    if (Clock::now() > deadline) return finish(SolveStatus::TimeLimit);
    ++res.iteration_count;

    MilpOut milp = milp_solve(oa, p.int_lower, p.int_upper, opts.int_tol,
                              opts.node_limit, deadline);
    res.node_count += milp.nodes;
    if (milp.status == LpStatus::Infeasible) {
      L = kInf;
      return finish(SolveStatus::Infeasible);
    }
    if (milp.status == LpStatus::Unbounded) {
      res.error_stage = "oa-unbounded";
      return finish(SolveStatus::Error);
    }
    if (milp.status == LpStatus::Error) {
      res.error_stage = "milp";
      return finish(SolveStatus::Error);
    }
    L = std::max(L, milp.objective);  // cuts only tighten the OA model
    if (gap_closed(L, U, opts.rel_gap, opts.theta))
      return finish(SolveStatus::Optimal);

    Vec xhat = milp.x.head(p.num_vars());
    xhat.head(p.int_count) =
        clamp_ints(xhat.head(p.int_count), p.int_lower, p.int_upper);
    auto key = round_key(xhat, p.int_count);
    bool repeated = pool.memo.count(key) > 0;

    if (!repeated && opts.use_certificate_cuts) {
      pool.memo[key] = {};
      // Fixed-bound subproblem at the integer sub-solution.
      Vec fixed(p.int_count);
      for (int i = 0; i < p.int_count; ++i)
        fixed(i) = static_cast<double>(key[i]);
      ConicCertificate cert = conic_solve(p, fixed, fixed, opts.sub);
      ++res.subproblem_count;
      if (std::holds_alternative<DualImprovingRay>(cert) ||
          std::holds_alternative<ComplementaryPair>(cert)) {
        double subL = milp.objective;
        if (const auto* pair = std::get_if<ComplementaryPair>(&cert)) {
          subL = pair->objective;
          if (pair->objective < U) {
            U = pair->objective;
            incumbent = pair->x;
          }
        }
        pool.memo[key] = add_certificate_cuts(pool, oa, cert, p, opts, subL);
        continue;
      }
      if (std::holds_alternative<PrimalImprovingRay>(cert)) {
        U = -kInf;
        incumbent.reset();
        L = -kInf;
        return finish(SolveStatus::Unbounded);
      }
      // Failure: fall through to the separation path below.
    } else if (!repeated) {
      pool.memo[key] = {};
    }

    if (conic_feasible(p, xhat, opts)) {
      if (milp.objective < U) {
        U = milp.objective;
        incumbent = xhat;
      }
      return finish(SolveStatus::Optimal);
    }
    if (add_separation_cuts(pool, oa, p, xhat, opts) == 0) {
      res.error_stage = "separation";
      return finish(SolveStatus::Error);
    }
  }
}

SolveResult brute_force_solve(const MiConicProblem& p, long max_assignments,
                              const SubOptions& sub) {
  double count = 1.0;
  for (int i = 0; i < p.int_count; ++i) {
    if (!std::isfinite(p.int_lower(i)) || !std::isfinite(p.int_upper(i)))
      throw std::invalid_argument("brute_force_solve: unbounded integer");
    count *= p.int_upper(i) - p.int_lower(i) + 1.0;
  }
  if (count > static_cast<double>(max_assignments))
    throw std::invalid_argument("brute_force_solve: budget exceeded");

  SolveResult res;
  double best = kInf;
  std::optional<Vec> bestx;
  Vec a = p.int_lower;
  while (true) {
    ConicCertificate cert = conic_solve(p, a, a, sub);
    ++res.subproblem_count;
    if (const auto* pair = std::get_if<ComplementaryPair>(&cert)) {
      if (pair->objective < best) {
        best = pair->objective;
        bestx = pair->x;
      }
    } else if (std::holds_alternative<PrimalImprovingRay>(cert)) {
      res.status = SolveStatus::Unbounded;
      res.upper_bound = -kInf;
      res.lower_bound = -kInf;
      return res;
    } else if (std::holds_alternative<SubFailure>(cert)) {
      res.status = SolveStatus::Error;
      res.error_stage = "subsolver";
      return res;
    }
    int i = 0;
    for (; i < p.int_count; ++i) {
      if (a(i) < p.int_upper(i)) {
        a(i) += 1.0;
        break;
      }
      a(i) = p.int_lower(i);
    }
    if (i == p.int_count) break;
  }
  if (best < kInf) {
    res.status = SolveStatus::Optimal;
    res.upper_bound = best;
    res.lower_bound = best;
    res.incumbent = bestx;
  } else {
    res.status = SolveStatus::Infeasible;
  }
  return res;
}

}  // namespace conicert
