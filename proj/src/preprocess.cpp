#include <cmath>
#include <limits>

#include "conicert/model.hpp"

namespace conicert {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

PreprocessResult preprocess(const MiConicProblem& p,
                            std::optional<long> default_bigM) {
  PreprocessResult res;
  res.problem = p;
  MiConicProblem& q = res.problem;

  // Rotated SOC blocks become SOC blocks via the linear row map
  // (r, s, t) -> (r+s, r-s, sqrt(2) t).
  const double sqrt2 = std::sqrt(2.0);
  long row = 0;
  for (auto& cone : q.cones.cones) {
    if (cone.kind == ConeKind::RotatedSecondOrder) {
      Vec a0 = q.A.row(row), a1 = q.A.row(row + 1);
      double b0 = q.b(row), b1 = q.b(row + 1);
      q.A.row(row) = a0 + a1;
      q.A.row(row + 1) = a0 - a1;
      q.b(row) = b0 + b1;
      q.b(row + 1) = b0 - b1;
      for (int d = 2; d < cone.dim; ++d) {
        q.A.row(row + d) *= sqrt2;
        q.b(row + d) *= sqrt2;
      }
      cone = PrimitiveCone::second_order(cone.dim);
    }
    row += cone.dim;
  }

  // Integer bound detection from singleton linear rows.
  Vec lo = q.int_lower, hi = q.int_upper;
  row = 0;
  for (const auto& cone : q.cones.cones) {
    bool linear = cone.kind == ConeKind::NonNeg ||
                  cone.kind == ConeKind::NonPos || cone.kind == ConeKind::Zero;
    if (linear) {
      for (int d = 0; d < cone.dim; ++d) {
        long r = row + d;
        int nz = -1;
        int count = 0;
        for (int j = 0; j < q.num_vars(); ++j)
          if (q.A(r, j) != 0.0) {
            nz = j;
            ++count;
          }
        if (count != 1 || nz >= q.int_count) continue;
        double a = q.A(r, nz), bv = q.b(r);
        double val = bv / a;
        // row means b - a x in cone coordinate
        bool upper_if_pos = cone.kind == ConeKind::NonNeg;
        bool is_upper = (a > 0.0) == upper_if_pos;
        if (cone.kind == ConeKind::Zero) {
          lo(nz) = std::max(lo(nz), val);
          hi(nz) = std::min(hi(nz), val);
        } else if (is_upper) {
          hi(nz) = std::min(hi(nz), val);
        } else {
          lo(nz) = std::max(lo(nz), val);
        }
      }
    }
    row += cone.dim;
  }

  for (int i = 0; i < q.int_count; ++i) {
    if (std::isfinite(lo(i))) lo(i) = std::ceil(lo(i) - 1e-9);
    if (std::isfinite(hi(i))) hi(i) = std::floor(hi(i) + 1e-9);
    if (!std::isfinite(lo(i)) || !std::isfinite(hi(i))) {
      if (!default_bigM)
        throw PreprocessError(
            "integer variable " + std::to_string(i) +
            " has no finite bound and no default big-M was given");
      double m = static_cast<double>(*default_bigM);
      if (!std::isfinite(lo(i))) lo(i) = -m;
      if (!std::isfinite(hi(i))) hi(i) = m;
    }
    if (lo(i) > hi(i)) res.infeasible = true;
  }
  q.int_lower = lo;
  q.int_upper = hi;
  return res;
}

}  // namespace conicert
