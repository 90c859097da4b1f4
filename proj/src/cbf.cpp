#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "conicert/model.hpp"

namespace conicert {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::Unbounded:
      return "unbounded";
    case SolveStatus::IterationLimit:
      return "iteration_limit";
    case SolveStatus::TimeLimit:
      return "time_limit";
    case SolveStatus::Error:
      return "error";
  }
  return "error";
}

namespace {

// Whitespace tokenizer over the CBF text with '#' comments stripped.
class Tokens {
 public:
  explicit Tokens(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) toks_.push_back(tok);
    }
  }
  bool done() const { return pos_ >= toks_.size(); }
  const std::string& peek() const {
    if (done()) throw CbfError("unexpected end of CBF input");
    return toks_[pos_];
  }
  std::string next() {
    if (done()) throw CbfError("unexpected end of CBF input");
    return toks_[pos_++];
  }
  long next_int() {
    std::string t = next();
    try {
      size_t used = 0;
      long v = std::stol(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw CbfError("expected integer, got '" + t + "'");
    }
  }
  double next_real() {
    std::string t = next();
    try {
      size_t used = 0;
      double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw CbfError("expected real number, got '" + t + "'");
    }
  }

 private:
  std::vector<std::string> toks_;
  size_t pos_ = 0;
};

PrimitiveCone cone_from_tag(const std::string& tag, long dim) {
  if (dim < 1) throw CbfError("cone dimension must be positive");
  int d = static_cast<int>(dim);
  if (tag == "F") return PrimitiveCone::free_cone(d);
  if (tag == "L+") return PrimitiveCone::nonneg(d);
  if (tag == "L-") return PrimitiveCone::nonpos(d);
  if (tag == "L=") return PrimitiveCone::zero(d);
  if (tag == "Q") {
    if (d < 2) throw CbfError("Q cone needs dimension >= 2");
    return PrimitiveCone::second_order(d);
  }
  if (tag == "QR") {
    if (d < 3) throw CbfError("QR cone needs dimension >= 3");
    return PrimitiveCone::rotated_second_order(d);
  }
  if (tag == "EXP") {
    if (d != 3) throw CbfError("EXP cone must have dimension 3");
    return PrimitiveCone::exponential();
  }
  throw CbfError("unknown cone tag '" + tag + "'");
}

const char* tag_for_cone(const PrimitiveCone& c) {
  switch (c.kind) {
    case ConeKind::Free:
      return "F";
    case ConeKind::NonNeg:
      return "L+";
    case ConeKind::NonPos:
      return "L-";
    case ConeKind::Zero:
      return "L=";
    case ConeKind::SecondOrder:
      return "Q";
    case ConeKind::RotatedSecondOrder:
      return "QR";
    case ConeKind::Exponential:
      return "EXP";
    case ConeKind::PsdSvec:
      return nullptr;
  }
  return nullptr;
}

struct Coord {
  long i, j;
  double v;
};

}  // namespace

MiConicProblem parse_cbf(std::istream& in) {
  Tokens tk(in);

  bool saw_ver = false;
  bool obj_max = false;
  long nvars = -1;
  std::vector<PrimitiveCone> var_cones;
  std::vector<long> int_indices;
  long ncon_rows = 0;
  std::vector<PrimitiveCone> con_cones;
  std::vector<std::pair<long, double>> obj_coords;
  double obj_b = 0.0;
  std::vector<Coord> a_coords;  // scalar constraint matrix, CBF orientation
  std::vector<std::pair<long, double>> b_coords;
  std::vector<long> psd_sides;
  struct HEntry {
    long c, j, k, l;
    double v;
  };
  std::vector<HEntry> h_coords;
  struct DEntry {
    long c, k, l;
    double v;
  };
  std::vector<DEntry> d_coords;

  while (!tk.done()) {
    std::string kw = tk.next();
    if (kw == "VER") {
      long v = tk.next_int();
      if (v < 1 || v > 3) throw CbfError("unsupported CBF version");
      saw_ver = true;
    } else if (kw == "OBJSENSE") {
      std::string s = tk.next();
      if (s == "MIN")
        obj_max = false;
      else if (s == "MAX")
        obj_max = true;
      else
        throw CbfError("OBJSENSE must be MIN or MAX");
    } else if (kw == "VAR") {
      nvars = tk.next_int();
      long nblocks = tk.next_int();
      long total = 0;
      for (long k = 0; k < nblocks; ++k) {
        std::string tag = tk.next();
        long d = tk.next_int();
        var_cones.push_back(cone_from_tag(tag, d));
        total += d;
      }
      if (total != nvars)
        throw CbfError("VAR cone dimensions do not sum to variable count");
    } else if (kw == "INT") {
      long n = tk.next_int();
      for (long k = 0; k < n; ++k) int_indices.push_back(tk.next_int());
    } else if (kw == "CON") {
      ncon_rows = tk.next_int();
      long nblocks = tk.next_int();
      long total = 0;
      for (long k = 0; k < nblocks; ++k) {
        std::string tag = tk.next();
        long d = tk.next_int();
        con_cones.push_back(cone_from_tag(tag, d));
        total += d;
      }
      if (total != ncon_rows)
        throw CbfError("CON cone dimensions do not sum to row count");
    } else if (kw == "OBJACOORD") {
      long n = tk.next_int();
      for (long k = 0; k < n; ++k) {
        long j = tk.next_int();
        obj_coords.emplace_back(j, tk.next_real());
      }
    } else if (kw == "OBJBCOORD") {
      obj_b = tk.next_real();
    } else if (kw == "ACOORD") {
      long n = tk.next_int();
      for (long k = 0; k < n; ++k) {
        Coord c;
        c.i = tk.next_int();
        c.j = tk.next_int();
        c.v = tk.next_real();
        a_coords.push_back(c);
      }
    } else if (kw == "BCOORD") {
      long n = tk.next_int();
      for (long k = 0; k < n; ++k) {
        long i = tk.next_int();
        b_coords.emplace_back(i, tk.next_real());
      }
    } else if (kw == "PSDCON") {
      long n = tk.next_int();
      for (long k = 0; k < n; ++k) {
        long side = tk.next_int();
        if (side < 2) throw CbfError("PSDCON side must be >= 2");
        psd_sides.push_back(side);
      }
    } else if (kw == "HCOORD") {
      long n = tk.next_int();
      for (long k = 0; k < n; ++k) {
        HEntry e;
        e.c = tk.next_int();
        e.j = tk.next_int();
        e.k = tk.next_int();
        e.l = tk.next_int();
        e.v = tk.next_real();
        h_coords.push_back(e);
      }
    } else if (kw == "DCOORD") {
      long n = tk.next_int();
      for (long k = 0; k < n; ++k) {
        DEntry e;
        e.c = tk.next_int();
        e.k = tk.next_int();
        e.l = tk.next_int();
        e.v = tk.next_real();
        d_coords.push_back(e);
      }
    } else {
      throw CbfError("unsupported CBF keyword '" + kw + "'");
    }
  }

  if (!saw_ver) throw CbfError("missing VER section");
  if (nvars < 0) throw CbfError("missing VAR section");

  for (long j : int_indices)
    if (j < 0 || j >= nvars)
      throw CbfError("integer variable index out of range");
  std::sort(int_indices.begin(), int_indices.end());
  if (std::adjacent_find(int_indices.begin(), int_indices.end()) !=
      int_indices.end())
    throw CbfError("duplicate integer variable index");

  // Internal column order: integer variables first.
  std::vector<int> col_of(nvars, -1);
  std::vector<int> orig_index;
  for (long j : int_indices) {
    col_of[j] = static_cast<int>(orig_index.size());
    orig_index.push_back(static_cast<int>(j));
  }
  for (long j = 0; j < nvars; ++j)
    if (col_of[j] < 0) {
      col_of[j] = static_cast<int>(orig_index.size());
      orig_index.push_back(static_cast<int>(j));
    }

  // Row layout: variable cone blocks (non-free), then scalar constraint
  // blocks, then svec rows of PSD constraint blocks.
  MiConicProblem p;
  p.maximize = obj_max;
  p.obj_offset = obj_b;
  p.int_count = static_cast<int>(int_indices.size());
  p.orig_index = orig_index;

  long nrows = 0;
  for (const auto& c : var_cones)
    if (c.kind != ConeKind::Free) nrows += c.dim;
  nrows += ncon_rows;
  for (long side : psd_sides) nrows += side * (side + 1) / 2;

  p.c = Vec::Zero(nvars);
  for (auto [j, v] : obj_coords) {
    if (j < 0 || j >= nvars) throw CbfError("OBJACOORD index out of range");
    p.c(col_of[j]) += v;
  }
  if (obj_max) p.c = -p.c;

  p.A = Mat::Zero(nrows, nvars);
  p.b = Vec::Zero(nrows);

  long row = 0;
  long var_base = 0;
  for (const auto& c : var_cones) {
    if (c.kind != ConeKind::Free) {
      for (int d = 0; d < c.dim; ++d)
        p.A(row + d, col_of[var_base + d]) = -1.0;  // b - Ax = x
      p.cones.cones.push_back(c);
      row += c.dim;
    }
    var_base += c.dim;
  }

  long con_base = row;
  for (const auto& c : con_cones) {
    p.cones.cones.push_back(c);
    row += c.dim;
  }
  for (const auto& e : a_coords) {
    if (e.i < 0 || e.i >= ncon_rows || e.j < 0 || e.j >= nvars)
      throw CbfError("ACOORD index out of range");
    p.A(con_base + e.i, col_of[e.j]) -= e.v;  // b - Ax = a'x + b
  }
  for (auto [i, v] : b_coords) {
    if (i < 0 || i >= ncon_rows) throw CbfError("BCOORD index out of range");
    p.b(con_base + i) += v;
  }

  std::vector<long> psd_base(psd_sides.size());
  for (size_t k = 0; k < psd_sides.size(); ++k) {
    psd_base[k] = row;
    p.cones.cones.push_back(PrimitiveCone::psd_svec(static_cast<int>(psd_sides[k])));
    row += psd_sides[k] * (psd_sides[k] + 1) / 2;
  }
  auto svec_row = [&](long c, long k, long l) -> long {
    long side = psd_sides[c];
    if (k < l) std::swap(k, l);
    if (l < 0 || k >= side) throw CbfError("PSD entry index out of range");
    // offset of column l, then k within it
    long off = l * side - l * (l - 1) / 2;
    return psd_base[c] + off + (k - l);
  };
  const double sqrt2 = std::sqrt(2.0);
  for (const auto& e : h_coords) {
    if (e.c < 0 || e.c >= static_cast<long>(psd_sides.size()))
      throw CbfError("HCOORD constraint index out of range");
    if (e.j < 0 || e.j >= nvars) throw CbfError("HCOORD variable out of range");
    double f = (e.k == e.l) ? 1.0 : sqrt2;
    p.A(svec_row(e.c, e.k, e.l), col_of[e.j]) -= f * e.v;
  }
  for (const auto& e : d_coords) {
    if (e.c < 0 || e.c >= static_cast<long>(psd_sides.size()))
      throw CbfError("DCOORD constraint index out of range");
    double f = (e.k == e.l) ? 1.0 : sqrt2;
    p.b(svec_row(e.c, e.k, e.l)) += f * e.v;
  }

  p.int_lower = Vec::Constant(p.int_count, -std::numeric_limits<double>::infinity());
  p.int_upper = Vec::Constant(p.int_count, std::numeric_limits<double>::infinity());
  return p;
}

MiConicProblem parse_cbf_string(const std::string& text) {
  std::istringstream in(text);
  return parse_cbf(in);
}

MiConicProblem parse_cbf_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CbfError("cannot open file '" + path + "'");
  return parse_cbf(in);
}

void emit_cbf(const MiConicProblem& p, std::ostream& out) {
  out.precision(17);
  out << "VER 3\n";
  out << "OBJSENSE " << (p.maximize ? "MAX" : "MIN") << "\n";
  out << "VAR " << p.num_vars() << " 1\nF " << p.num_vars() << "\n";
  if (p.int_count > 0) {
    out << "INT " << p.int_count << "\n";
    for (int i = 0; i < p.int_count; ++i) out << i << "\n";
  }
  long scalar_rows = 0;
  std::vector<const PrimitiveCone*> psd_blocks;
  std::vector<long> block_row(p.cones.cones.size());
  {
    long row = 0;
    for (size_t k = 0; k < p.cones.cones.size(); ++k) {
      block_row[k] = row;
      row += p.cones.cones[k].dim;
    }
  }
  std::ostringstream con, acoord, bcoord, hcoord, dcoord;
  long acnt = 0, bcnt = 0, hcnt = 0, dcnt = 0, nblocks = 0, psdcnt = 0;
  const double isqrt2 = 1.0 / std::sqrt(2.0);
  acoord.precision(17);
  bcoord.precision(17);
  hcoord.precision(17);
  dcoord.precision(17);
  for (size_t k = 0; k < p.cones.cones.size(); ++k) {
    const auto& c = p.cones.cones[k];
    if (c.kind == ConeKind::PsdSvec) {
      long idx = 0;
      for (int col = 0; col < c.side; ++col)
        for (int rr = col; rr < c.side; ++rr, ++idx) {
          long row = block_row[k] + idx;
          double f = (rr == col) ? 1.0 : isqrt2;
          for (int j = 0; j < p.num_vars(); ++j)
            if (p.A(row, j) != 0.0) {
              hcoord << psdcnt << " " << j << " " << rr << " " << col << " "
                     << -p.A(row, j) * f << "\n";
              ++hcnt;
            }
          if (p.b(row) != 0.0) {
            dcoord << psdcnt << " " << rr << " " << col << " " << p.b(row) * f
                   << "\n";
            ++dcnt;
          }
        }
      ++psdcnt;
      psd_blocks.push_back(&c);
      continue;
    }
    con << tag_for_cone(c) << " " << c.dim << "\n";
    ++nblocks;
    for (int d = 0; d < c.dim; ++d) {
      long row = block_row[k] + d;
      for (int j = 0; j < p.num_vars(); ++j)
        if (p.A(row, j) != 0.0) {
          acoord << scalar_rows << " " << j << " " << -p.A(row, j) << "\n";
          ++acnt;
        }
      if (p.b(row) != 0.0) {
        bcoord << scalar_rows << " " << p.b(row) << "\n";
        ++bcnt;
      }
      ++scalar_rows;
    }
  }
  out << "CON " << scalar_rows << " " << nblocks << "\n" << con.str();
  Vec c_out = p.maximize ? Vec(-p.c) : p.c;
  long ocnt = 0;
  std::ostringstream obj;
  obj.precision(17);
  for (int j = 0; j < p.num_vars(); ++j)
    if (c_out(j) != 0.0) {
      obj << j << " " << c_out(j) << "\n";
      ++ocnt;
    }
  out << "OBJACOORD " << ocnt << "\n" << obj.str();
  if (p.obj_offset != 0.0) out << "OBJBCOORD " << p.obj_offset << "\n";
  out << "ACOORD " << acnt << "\n" << acoord.str();
  out << "BCOORD " << bcnt << "\n" << bcoord.str();
  if (!psd_blocks.empty()) {
    out << "PSDCON " << psd_blocks.size() << "\n";
    for (const auto* c : psd_blocks) out << c->side << "\n";
    out << "HCOORD " << hcnt << "\n" << hcoord.str();
    out << "DCOORD " << dcnt << "\n" << dcoord.str();
  }
}

}  // namespace conicert
