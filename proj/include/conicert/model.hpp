#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "conicert/cones.hpp"

namespace conicert {

/// MI-conic instance: minimize c'x subject to b - Ax in K with the first
/// int_count variables integer.
struct MiConicProblem {
  Vec c;
  Mat A;
  Vec b;
  ConeProduct cones;
  int int_count = 0;
  Vec int_lower;  // length int_count, -inf when unknown
  Vec int_upper;  // length int_count, +inf when unknown

  bool maximize = false;  // original objective sense (c already negated)
  double obj_offset = 0.0;
  std::vector<int> orig_index;  // orig_index[internal col] = input column

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_rows() const { return static_cast<int>(b.size()); }

  /// Objective value in the original input sense.
  double original_objective(double internal_obj) const {
    return (maximize ? -internal_obj : internal_obj) + obj_offset;
  }
};

enum class SolveStatus {
  Optimal,
  Infeasible,
  Unbounded,
  IterationLimit,
  TimeLimit,
  Error,
};

std::string to_string(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::Error;
  std::optional<Vec> incumbent;
  double upper_bound = std::numeric_limits<double>::infinity();
  double lower_bound = -std::numeric_limits<double>::infinity();
  long node_count = 0;
  long subproblem_count = 0;
  long iteration_count = 0;
  std::string error_stage;
};

struct CbfError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

MiConicProblem parse_cbf(std::istream& in);
MiConicProblem parse_cbf_string(const std::string& text);
MiConicProblem parse_cbf_file(const std::string& path);

/// Writes the problem back out in the supported CBF subset (all cones as
/// constraint blocks, variables free). Used for round-trip testing.
void emit_cbf(const MiConicProblem& p, std::ostream& out);

struct PreprocessResult {
  MiConicProblem problem;
  bool infeasible = false;  // some integer bound pair crossed after rounding
};

struct PreprocessError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rewrites rotated-SOC blocks as SOC blocks, extracts integer bounds from
/// singleton linear rows and rounds them inward. Integer variables still
/// unbounded afterwards take +-default_bigM, or raise if it is absent.
PreprocessResult preprocess(const MiConicProblem& p,
                            std::optional<long> default_bigM = std::nullopt);

}  // namespace conicert
