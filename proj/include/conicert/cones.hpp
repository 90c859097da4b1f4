#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace conicert {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ConeKind {
  Zero,
  Free,
  NonNeg,
  NonPos,
  SecondOrder,
  RotatedSecondOrder,
  Exponential,
  PsdSvec,
};

inline bool is_polyhedral(ConeKind k) {
  return k == ConeKind::Zero || k == ConeKind::Free || k == ConeKind::NonNeg ||
         k == ConeKind::NonPos;
}

/// One primitive cone block. For PsdSvec, `side` is the matrix side n and
/// dim = n(n+1)/2. For all other kinds `side` is 0.
struct PrimitiveCone {
  ConeKind kind;
  int dim;
  int side = 0;

  static PrimitiveCone zero(int d) { return make(ConeKind::Zero, d); }
  static PrimitiveCone free_cone(int d) { return make(ConeKind::Free, d); }
  static PrimitiveCone nonneg(int d) { return make(ConeKind::NonNeg, d); }
  static PrimitiveCone nonpos(int d) { return make(ConeKind::NonPos, d); }
  static PrimitiveCone second_order(int d) {
    return make(ConeKind::SecondOrder, d);
  }
  static PrimitiveCone rotated_second_order(int d) {
    return make(ConeKind::RotatedSecondOrder, d);
  }
  static PrimitiveCone exponential() { return make(ConeKind::Exponential, 3); }
  static PrimitiveCone psd_svec(int side);

 private:
  static PrimitiveCone make(ConeKind k, int d);
};

/// Ordered product of primitive cones; order fixes the row blocks of (A, b).
struct ConeProduct {
  std::vector<PrimitiveCone> cones;

  int total_dim() const {
    int m = 0;
    for (const auto& c : cones) m += c.dim;
    return m;
  }
  /// Row offset of block k.
  int offset(int k) const {
    int m = 0;
    for (int i = 0; i < k; ++i) m += cones[i].dim;
    return m;
  }
};

/// A dual-cone point restricted to one primitive block, with the scaling
/// gamma applied when the cut is materialized.
struct KStarRay {
  int block_index = 0;
  Vec values;
  double scale = 1.0;
};

/// The rotated-second-order constraint (t_ii, omega'.T'.omega', sqrt2 omega'.t')
/// expressed as three linear functionals of svec(T).
struct StrengthenedRsocConstraint {
  int i;
  Vec omega;
  Vec coeff_t;      // <coeff_t, svec(T)> = T_{i,i}
  Vec coeff_quad;   // <coeff_quad, svec(T)> = reduced quadratic form
  Vec coeff_cross;  // <coeff_cross, svec(T)> = sqrt(2) * cross term

  Eigen::Vector3d evaluate(const Vec& svec_t) const {
    return {coeff_t.dot(svec_t), coeff_quad.dot(svec_t),
            coeff_cross.dot(svec_t)};
  }
};

namespace cones {

bool member(const PrimitiveCone& cone, const Vec& y, double tol);
bool dual_member(const PrimitiveCone& cone, const Vec& z, double tol);

/// Euclidean projection onto the cone. Total: valid for any input.
Vec project(const PrimitiveCone& cone, const Vec& y);
/// Euclidean projection onto the dual cone (via the Moreau identity).
Vec project_dual(const PrimitiveCone& cone, const Vec& z);

/// Fixed dual extreme rays used to seed the polyhedral relaxation of a
/// nonpolyhedral cone. Polyhedral cones return an empty list (they are
/// imposed exactly as explicit LP rows).
std::vector<KStarRay> initial_fixed_rays(const PrimitiveCone& cone,
                                         int soc_full_diamond_limit);

/// Splits a dual-cone point into extreme rays of the dual cone. The sum of
/// the returned rays reconstructs z up to a nonnegative multiple of one
/// fixed-cut direction ((1,0,...) for SOC, (0,1,0) for EXP, zero for PSD).
/// Points slightly outside the dual cone are repaired by projection when
/// within `repair_tol` distance; otherwise throws.
std::vector<KStarRay> disaggregate(const PrimitiveCone& cone, const Vec& z,
                                   double repair_tol = 1e-7);

/// Dual extreme rays strictly separating y from the cone. Empty iff
/// member(cone, y, tol).
std::vector<KStarRay> separate(const PrimitiveCone& cone, const Vec& y,
                               double tol);

Vec svec(const Mat& T);
Mat smat(const Vec& t);
int svec_dim(int side);
/// Matrix side n for a vector of length n(n+1)/2; throws if not triangular.
int smat_side(int len);

/// Lifts the SOC* extreme ray (u, w) into one RSOC(3)* extreme ray per
/// extended-formulation triple (r, pi_i, t_i). Requires u = ||w|| > 0.
std::vector<Eigen::Vector3d> lift_soc_cut(double u, const Vec& w);

StrengthenedRsocConstraint strengthen_psd_cut(const Vec& omega, int i);

}  // namespace cones
}  // namespace conicert
