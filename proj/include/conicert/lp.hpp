#pragma once

#include <vector>

#include "conicert/model.hpp"

namespace conicert {

enum class LpStatus { Optimal, Infeasible, Unbounded, Error };

struct LpOutcome {
  LpStatus status = LpStatus::Error;
  Vec x;  // full column vector (problem variables then EF auxiliaries)
  double objective = 0.0;
};

/// Extended-formulation bookkeeping for one SOC block: row0 is the block's
/// first row in (A, b), n the vector part dimension, pi0 the first auxiliary
/// column.
struct EfBlock {
  int block_index;
  long row0;
  int n;
  int pi0;
};

/// Outer-approximation LP over POLY(Z, l, u): bounded columns, rows in
/// a'x <= rhs form. Rows and bounds are enforced up to the feasibility
/// tolerance delta. Cut rows only grow within one OA solve.
class LpModel {
 public:
  LpModel(int num_x, int num_aux, Vec objective, double delta);

  int num_cols() const { return static_cast<int>(objective_.size()); }
  int num_x() const { return num_x_; }
  int num_rows() const { return static_cast<int>(rhs_.size()); }
  double delta() const { return delta_; }

  void set_col_bounds(int j, double lo, double hi);
  /// Plain linear row a'x <= rhs (exact polyhedral-cone rows, EF rows).
  int add_row(const Vec& coeffs, double rhs);
  /// Cut row with direction-based deduplication; returns the row id, which
  /// is an existing one when a parallel row is already present.
  int add_cut_row(const Vec& coeffs, double rhs);

  LpOutcome solve() const;

  const Vec& row(int id) const { return rows_[id]; }
  double rhs(int id) const { return rhs_[id]; }
  const Vec& col_lower() const { return lo_; }
  const Vec& col_upper() const { return hi_; }

 private:
  int num_x_;
  Vec objective_;
  Vec lo_, hi_;
  std::vector<Vec> rows_;
  std::vector<double> rhs_;
  std::vector<int> cut_ids_;      // rows subject to dedup
  std::vector<Vec> cut_normals_;  // matching normalized (coeffs, rhs)
  double delta_;
};

/// Builds the OA LP for a preprocessed problem: polyhedral cone blocks are
/// imposed exactly; SOC blocks get EF auxiliary columns and the EF linear
/// row when use_soc_ef is set. Nonpolyhedral relaxation rows are added later
/// through lp_add_cut.
struct OaLp {
  LpModel model;
  std::vector<EfBlock> ef_blocks;  // indexed lookup by cone block
};

OaLp lp_build(const MiConicProblem& p, bool use_soc_ef, double delta);

/// Materializes a K* ray on one primitive block as cut row(s):
/// (scale * z)'(b - Ax) >= 0. SOC rays on EF-registered blocks are lifted to
/// the n RSOC* rows of the extended formulation when extreme. Throws if the
/// ray is not dual-feasible after repair. Returns the id of the (first) row.
int lp_add_cut(OaLp& oa, const KStarRay& ray, const MiConicProblem& p);

void lp_set_int_bounds(LpModel& m, const Vec& l, const Vec& u);

}  // namespace conicert
