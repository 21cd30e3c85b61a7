#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "distreg/dataset.hpp"
#include "distreg/families.hpp"

namespace distreg {

/// Design matrix whose rows each carry a contiguous span of nonzeros
/// (B-spline rows, incidence rows, single-column terms).
class RowSparse {
public:
  RowSparse() = default;
  RowSparse(Index rows, Index cols, int span)
      : rows_(rows), cols_(cols), span_(span), first_(static_cast<size_t>(rows), 0),
        vals_(rows, span) {
    vals_.setZero();
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  int span() const { return span_; }

  void set_row(Index i, int first, const double* values) {
    first_[static_cast<size_t>(i)] = first;
    for (int p = 0; p < span_; ++p) vals_(i, p) = values[p];
  }

  int row_first(Index i) const { return first_[static_cast<size_t>(i)]; }
  double row_value(Index i, int p) const { return vals_(i, p); }

  void scale_rows(const Vector& z) {
    for (Index i = 0; i < rows_; ++i) vals_.row(i) *= z[i];
  }

  Vector multiply(const Vector& x) const {
    Vector out = Vector::Zero(rows_);
    for (Index i = 0; i < rows_; ++i) {
      const int f = first_[static_cast<size_t>(i)];
      double s = 0.0;
      for (int p = 0; p < span_; ++p) s += vals_(i, p) * x[f + p];
      out[i] = s;
    }
    return out;
  }

  Vector multiply_t(const Vector& r) const {
    Vector out = Vector::Zero(cols_);
    for (Index i = 0; i < rows_; ++i) {
      const int f = first_[static_cast<size_t>(i)];
      for (int p = 0; p < span_; ++p) out[f + p] += vals_(i, p) * r[i];
    }
    return out;
  }

  /// Z' diag(w) Z as a dense matrix.
  Matrix gram(const Array& w) const {
    Matrix g = Matrix::Zero(cols_, cols_);
    for (Index i = 0; i < rows_; ++i) {
      const int f = first_[static_cast<size_t>(i)];
      for (int p = 0; p < span_; ++p) {
        const double wp = w[i] * vals_(i, p);
        for (int q = p; q < span_; ++q) g(f + p, f + q) += wp * vals_(i, q);
      }
    }
    return g.selfadjointView<Eigen::Upper>();
  }

  Vector column_sums() const {
    Vector out = Vector::Zero(cols_);
    for (Index i = 0; i < rows_; ++i) {
      const int f = first_[static_cast<size_t>(i)];
      for (int p = 0; p < span_; ++p) out[f + p] += vals_(i, p);
    }
    return out;
  }

  Matrix dense() const {
    Matrix out = Matrix::Zero(rows_, cols_);
    for (Index i = 0; i < rows_; ++i) {
      const int f = first_[static_cast<size_t>(i)];
      for (int p = 0; p < span_; ++p) out(i, f + p) = vals_(i, p);
    }
    return out;
  }

private:
  Index rows_ = 0, cols_ = 0;
  int span_ = 1;
  std::vector<int> first_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> vals_;
};

/// Cubic-or-lower B-spline basis on an equidistant knot grid. The grid
/// places `inner_knots` knots across [xmin, xmax] (boundary knots
/// included) and `degree` further knots at the same spacing on each
/// side, giving inner_knots + degree - 1 basis functions.
class BsplineBasis {
public:
  BsplineBasis(double xmin, double xmax, int inner_knots, int degree)
      : xmin_(xmin), xmax_(xmax), inner_(inner_knots), degree_(degree) {
    if (!(xmax > xmin) || !std::isfinite(xmin) || !std::isfinite(xmax)) {
      throw DataError("degenerate covariate");
    }
    if (inner_knots < 2) throw DataError("B-spline basis needs at least two inner knots");
    if (degree < 0) throw DataError("B-spline degree must be nonnegative");
    h_ = (xmax - xmin) / (inner_knots - 1);
    const int total = inner_knots + 2 * degree;
    knots_.resize(static_cast<size_t>(total));
    for (int j = 0; j < total; ++j) knots_[static_cast<size_t>(j)] = xmin + (j - degree) * h_;
  }

  int dim() const { return inner_ + degree_ - 1; }
  int span() const { return degree_ + 1; }
  double xmin() const { return xmin_; }
  double xmax() const { return xmax_; }

  /// Writes the degree+1 nonzero basis values at x into `out` and returns
  /// the index of the first nonzero basis function.
  int evaluate(double x, double* out, bool clamp = false) const {
    if (!std::isfinite(x)) throw DataError("non-finite covariate value");
    if (x < xmin_ || x > xmax_) {
      if (!clamp) {
        throw ExtrapolationError("covariate value " + std::to_string(x) +
                                 " outside the training range [" + std::to_string(xmin_) + ", " +
                                 std::to_string(xmax_) + "]");
      }
      x = std::clamp(x, xmin_, xmax_);
    }
    int cell = static_cast<int>((x - xmin_) / h_);
    cell = std::clamp(cell, 0, inner_ - 2);
    const int m = cell + degree_;  // knot interval [t_m, t_{m+1}) contains x
    out[0] = 1.0;
    std::array<double, 16> left{}, right{};
    for (int j = 1; j <= degree_; ++j) {
      left[static_cast<size_t>(j)] = x - knots_[static_cast<size_t>(m + 1 - j)];
      right[static_cast<size_t>(j)] = knots_[static_cast<size_t>(m + j)] - x;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        const double tmp =
            out[r] / (right[static_cast<size_t>(r + 1)] + left[static_cast<size_t>(j - r)]);
        out[r] = saved + right[static_cast<size_t>(r + 1)] * tmp;
        saved = left[static_cast<size_t>(j - r)] * tmp;
      }
      out[j] = saved;
    }
    return cell;
  }

private:
  double xmin_, xmax_, h_;
  int inner_, degree_;
  std::vector<double> knots_;
};

/// D'D for the difference matrix of the given order; rank deficiency
/// equals the order, with polynomial nullspace.
inline Matrix build_difference_penalty(int d_cols, int order) {
  if (order < 1 || order >= d_cols) {
    throw DataError("difference penalty order must satisfy 1 <= order < columns");
  }
  Matrix d = Matrix::Identity(d_cols, d_cols);
  for (int step = 0; step < order; ++step) {
    const Index r = d.rows() - 1;
    Matrix next(r, d.cols());
    for (Index i = 0; i < r; ++i) next.row(i) = d.row(i + 1) - d.row(i);
    d = std::move(next);
  }
  return d.transpose() * d;
}

enum class TermKind { intercept, linear, regional, pspline, varying, random_effect, mrf };

inline const char* to_string(TermKind k) {
  switch (k) {
    case TermKind::intercept: return "intercept";
    case TermKind::linear: return "linear";
    case TermKind::regional: return "regional";
    case TermKind::pspline: return "pspline";
    case TermKind::varying: return "vc";
    case TermKind::random_effect: return "random";
    case TermKind::mrf: return "mrf";
  }
  return "?";
}

/// One additive term: basis design, penalty, constraint transform and
/// smoothing-variance hyperparameters, plus what is needed to evaluate
/// the term at new covariate values.
struct DesignBlock {
  std::string label;
  TermKind kind = TermKind::linear;
  RowSparse Z0;      // raw basis rows
  Matrix Q;          // optional D0 x D constraint transform (empty = identity)
  Matrix K;          // effective penalty, D x D (zero for flat-prior terms)
  int rank_K = 0;
  bool flat = false;  // flat prior: no penalty, no smoothing variance
  double hyper_a = 0.001, hyper_b = 0.001;
  std::vector<int> islands;  // isolated regions (mrf only)

  std::shared_ptr<const BsplineBasis> basis;  // pspline / varying
  std::string col, by_col;
  std::vector<std::string> levels;  // random-effect levels or region order
  std::map<std::string, int> level_index;

  Index n() const { return Z0.rows(); }
  Index dim() const { return Q.size() > 0 ? Q.cols() : Z0.cols(); }

  Vector contribution(const Vector& beta) const {
    if (Q.size() > 0) return Z0.multiply(Q * beta);
    return Z0.multiply(beta);
  }

  Matrix gram(const Array& w) const {
    Matrix m0 = Z0.gram(w);
    if (Q.size() > 0) return Q.transpose() * m0 * Q;
    return m0;
  }

  Vector design_t(const Vector& r) const {
    Vector t = Z0.multiply_t(r);
    if (Q.size() > 0) return Q.transpose() * t;
    return t;
  }

  double penalty_quadform(const Vector& beta) const {
    if (flat) return 0.0;
    return beta.dot(K * beta);
  }

  Matrix effective_dense() const {
    if (Q.size() > 0) return Z0.dense() * Q;
    return Z0.dense();
  }

  /// Raw basis row for one observation of a dataset (before Q).
  Vector raw_row(const Dataset& data, Index i, bool clamp) const {
    Vector row = Vector::Zero(Z0.cols());
    switch (kind) {
      case TermKind::intercept:
        row[0] = 1.0;
        break;
      case TermKind::linear:
      case TermKind::regional:
        row[0] = data.real(col)[i];
        break;
      case TermKind::pspline: {
        std::array<double, 16> vals{};
        const int f = basis->evaluate(data.real(col)[i], vals.data(), clamp);
        for (int p = 0; p < basis->span(); ++p) row[f + p] = vals[static_cast<size_t>(p)];
        break;
      }
      case TermKind::varying: {
        std::array<double, 16> vals{};
        const int f = basis->evaluate(data.real(col)[i], vals.data(), clamp);
        const double z = data.real(by_col)[i];
        for (int p = 0; p < basis->span(); ++p) row[f + p] = z * vals[static_cast<size_t>(p)];
        break;
      }
      case TermKind::random_effect:
      case TermKind::mrf: {
        const std::string& lbl = data.labels(col)[static_cast<size_t>(i)];
        auto it = level_index.find(lbl);
        if (it == level_index.end()) {
          if (!clamp) {
            throw ExtrapolationError("level '" + lbl + "' of column '" + col +
                                     "' was not seen in training");
          }
          break;  // prior-mean contribution of zero
        }
        row[it->second] = 1.0;
        break;
      }
    }
    return row;
  }

  /// Effective design row (after the constraint transform).
  Vector effective_row(const Dataset& data, Index i, bool clamp) const {
    Vector row = raw_row(data, i, clamp);
    if (Q.size() > 0) return Q.transpose() * row;
    return row;
  }

  /// Whether this term is keyed by a label column absent from a profile
  /// dataset, in which case its contribution is the prior mean of zero.
  bool silent_for(const Dataset& profile) const {
    if (kind == TermKind::random_effect || kind == TermKind::mrf) {
      return !profile.has_labels(col);
    }
    return false;
  }
};

/// Orthonormal basis of the nullspace of the column-sum functional,
/// used to centre penalised terms that share a nullspace with the
/// intercept. A block whose columns already sum to zero is left alone.
inline void apply_sum_to_zero(DesignBlock& block) {
  const Vector w = block.Q.size() > 0 ? Vector(block.Q.transpose() * block.Z0.column_sums())
                                      : block.Z0.column_sums();
  const double scale = static_cast<double>(block.n());
  if (w.lpNorm<Eigen::Infinity>() < 1e-12 * std::max(1.0, scale)) return;  // already centred
  const Index d0 = w.size();
  if (d0 < 2) throw DataError("centering constraint would leave block '" + block.label + "' empty");
  Eigen::HouseholderQR<Matrix> qr(w);
  const Matrix q_full = qr.householderQ();
  const Matrix q = q_full.rightCols(d0 - 1);
  block.Q = block.Q.size() > 0 ? Matrix(block.Q * q) : q;
  if (!block.flat) {
    block.K = q.transpose() * block.K * q;
    // the dropped direction lies in the penalty nullspace for rank
    // deficient penalties; otherwise the rank shrinks with the dimension
    if (block.rank_K >= d0) block.rank_K = static_cast<int>(d0) - 1;
  }
}

inline DesignBlock build_intercept_block(Index n) {
  DesignBlock b;
  b.kind = TermKind::intercept;
  b.label = "intercept";
  b.flat = true;
  b.Z0 = RowSparse(n, 1, 1);
  const double one = 1.0;
  for (Index i = 0; i < n; ++i) b.Z0.set_row(i, 0, &one);
  b.K = Matrix::Zero(1, 1);
  return b;
}

inline DesignBlock build_linear_block(const Vector& x, const std::string& col,
                                      TermKind kind = TermKind::linear) {
  if (!x.allFinite()) throw DataError("non-finite values in column '" + col + "'");
  DesignBlock b;
  b.kind = kind;
  b.col = col;
  b.label = std::string(to_string(kind)) + "(" + col + ")";
  b.flat = true;
  b.Z0 = RowSparse(x.size(), 1, 1);
  for (Index i = 0; i < x.size(); ++i) {
    const double v = x[i];
    b.Z0.set_row(i, 0, &v);
  }
  b.K = Matrix::Zero(1, 1);
  return b;
}

inline DesignBlock build_bspline_block(const Vector& x, int degree, int inner_knots,
                                       int penalty_order, const std::string& col = "x",
                                       double hyper_a = 0.001, double hyper_b = 0.001) {
  if (degree < 0) throw DataError("B-spline degree must be nonnegative");
  if (inner_knots < penalty_order + 1) {
    throw DataError("B-spline needs inner_knots >= penalty_order + 1");
  }
  if (!x.allFinite()) throw DataError("non-finite values in column '" + col + "'");
  const double xmin = x.minCoeff();
  const double xmax = x.maxCoeff();
  if (!(xmax > xmin)) throw DataError("degenerate covariate");

  DesignBlock b;
  b.kind = TermKind::pspline;
  b.col = col;
  b.label = "pspline(" + col + ")";
  b.basis = std::make_shared<BsplineBasis>(xmin, xmax, inner_knots, degree);
  const int d = b.basis->dim();
  b.Z0 = RowSparse(x.size(), d, b.basis->span());
  std::array<double, 16> vals{};
  for (Index i = 0; i < x.size(); ++i) {
    const int f = b.basis->evaluate(x[i], vals.data());
    b.Z0.set_row(i, f, vals.data());
  }
  b.K = build_difference_penalty(d, penalty_order);
  b.rank_K = d - penalty_order;
  b.hyper_a = hyper_a;
  b.hyper_b = hyper_b;
  return b;
}

inline DesignBlock build_random_effect_block(const std::vector<std::string>& g,
                                             const std::string& col = "g",
                                             double hyper_a = 0.001, double hyper_b = 0.001,
                                             TermKind kind = TermKind::random_effect) {
  std::set<std::string> uniq(g.begin(), g.end());
  if (uniq.size() < 2) throw DataError("random effect column '" + col + "' has a single level");
  DesignBlock b;
  b.kind = kind;
  b.col = col;
  b.label = std::string(kind == TermKind::random_effect ? "random" : "iid") + "(" + col + ")";
  b.levels.assign(uniq.begin(), uniq.end());
  for (size_t i = 0; i < b.levels.size(); ++i) b.level_index[b.levels[i]] = static_cast<int>(i);
  const int d = static_cast<int>(b.levels.size());
  b.Z0 = RowSparse(static_cast<Index>(g.size()), d, 1);
  const double one = 1.0;
  for (size_t i = 0; i < g.size(); ++i) {
    b.Z0.set_row(static_cast<Index>(i), b.level_index.at(g[i]), &one);
  }
  b.K = Matrix::Identity(d, d);
  b.rank_K = d;
  b.hyper_a = hyper_a;
  b.hyper_b = hyper_b;
  return b;
}

inline DesignBlock build_mrf_block(const std::vector<std::string>& s, const AdjacencyMap& adj,
                                   const std::string& col = "s", double hyper_a = 0.001,
                                   double hyper_b = 0.001) {
  DesignBlock b;
  b.kind = TermKind::mrf;
  b.col = col;
  b.label = "mrf(" + col + ")";
  b.levels = adj.regions();
  for (size_t i = 0; i < b.levels.size(); ++i) b.level_index[b.levels[i]] = static_cast<int>(i);
  const int d = adj.size();
  b.Z0 = RowSparse(static_cast<Index>(s.size()), d, 1);
  const double one = 1.0;
  for (size_t i = 0; i < s.size(); ++i) {
    b.Z0.set_row(static_cast<Index>(i), adj.index_of(s[i]), &one);
  }
  // graph Laplacian: degrees on the diagonal, -1 between neighbours
  b.K = Matrix::Zero(d, d);
  for (int r = 0; r < d; ++r) {
    b.K(r, r) = adj.degree(r);
    for (int nb : adj.neighbors(r)) b.K(r, nb) = -1.0;
    if (adj.is_island(r)) b.islands.push_back(r);
  }
  b.rank_K = d - adj.component_count();
  b.hyper_a = hyper_a;
  b.hyper_b = hyper_b;
  return b;
}

/// Multiply each design row of an already-built block by an interaction
/// value; the penalty is unchanged.
inline DesignBlock build_varying_coefficient(DesignBlock base, const Vector& z,
                                             const std::string& by_col = "z") {
  if (z.size() != base.n()) {
    throw DataError("interaction column length does not match the base design");
  }
  if (!z.allFinite()) throw DataError("non-finite values in column '" + by_col + "'");
  base.kind = TermKind::varying;
  base.by_col = by_col;
  base.label = "vc(" + base.col + "|" + by_col + ")";
  base.Z0.scale_rows(z);
  return base;
}

enum class TermType { linear, pspline, varying, random_effect, mrf, spatial };

struct TermDef {
  TermType type = TermType::linear;
  std::string col;
  std::string by;                       // varying coefficient interaction column
  std::vector<std::string> covariates;  // spatial: region-level covariates
  bool structured = true;
  bool unstructured = true;
  int knots = 20;
  int degree = 3;
  int order = 2;
  double hyper_a = 0.001;
  double hyper_b = 0.001;
};

struct PredictorSpec {
  bool intercept = true;
  std::vector<TermDef> terms;
};

struct ModelSpec {
  FamilyId family = FamilyId::lognormal;
  std::vector<PredictorSpec> predictors;  // one per distribution parameter
};

struct AssembledModel {
  FamilyId family = FamilyId::lognormal;
  Index n = 0;
  std::vector<std::vector<DesignBlock>> params;  // [parameter][block]

  const Family& fam() const { return distreg::family(family); }
};

namespace detail {

inline void check_region_constant(const Dataset& data, const std::string& value_col,
                                  const std::string& region_col) {
  const auto& regions = data.labels(region_col);
  const auto& values = data.real(value_col);
  std::map<std::string, double> seen;
  for (Index i = 0; i < data.n(); ++i) {
    auto [it, inserted] = seen.emplace(regions[static_cast<size_t>(i)], values[i]);
    if (!inserted && it->second != values[i]) {
      throw DataError("covariate '" + value_col + "' is not constant within region '" +
                      regions[static_cast<size_t>(i)] + "'");
    }
  }
}

inline std::vector<DesignBlock> expand_term(const TermDef& t, const Dataset& data,
                                            const AdjacencyMap* adj) {
  std::vector<DesignBlock> out;
  switch (t.type) {
    case TermType::linear:
      out.push_back(build_linear_block(data.real(t.col), t.col));
      break;
    case TermType::pspline: {
      DesignBlock b =
          build_bspline_block(data.real(t.col), t.degree, t.knots, t.order, t.col, t.hyper_a,
                              t.hyper_b);
      apply_sum_to_zero(b);
      out.push_back(std::move(b));
      break;
    }
    case TermType::varying: {
      DesignBlock base =
          build_bspline_block(data.real(t.col), t.degree, t.knots, t.order, t.col, t.hyper_a,
                              t.hyper_b);
      apply_sum_to_zero(base);  // constrain the base smooth only
      out.push_back(build_varying_coefficient(std::move(base), data.real(t.by), t.by));
      break;
    }
    case TermType::random_effect:
      out.push_back(build_random_effect_block(data.labels(t.col), t.col, t.hyper_a, t.hyper_b));
      break;
    case TermType::mrf: {
      if (adj == nullptr) throw DataError("mrf term '" + t.col + "' requires an adjacency map");
      DesignBlock b = build_mrf_block(data.labels(t.col), *adj, t.col, t.hyper_a, t.hyper_b);
      apply_sum_to_zero(b);
      out.push_back(std::move(b));
      break;
    }
    case TermType::spatial: {
      // hierarchical region-level predictor in reduced form: region-level
      // covariates enter as linear effects, plus structured (MRF) and
      // unstructured (iid) region effects
      for (const auto& cov : t.covariates) {
        check_region_constant(data, cov, t.col);
        out.push_back(build_linear_block(data.real(cov), cov, TermKind::regional));
      }
      if (t.structured) {
        if (adj == nullptr) {
          throw DataError("spatial term '" + t.col + "' requires an adjacency map");
        }
        DesignBlock b = build_mrf_block(data.labels(t.col), *adj, t.col, t.hyper_a, t.hyper_b);
        apply_sum_to_zero(b);
        out.push_back(std::move(b));
      }
      if (t.unstructured) {
        out.push_back(build_random_effect_block(data.labels(t.col), t.col, t.hyper_a, t.hyper_b,
                                                TermKind::random_effect));
        out.back().label = "iid(" + t.col + ")";
      }
      break;
    }
  }
  return out;
}

/// Flat-prior (improper) blocks need jointly full-rank design columns.
inline void audit_flat_rank(const std::vector<DesignBlock>& blocks, int param_index) {
  Index cols = 0;
  for (const auto& b : blocks) {
    if (b.flat) cols += b.dim();
  }
  if (cols == 0) return;
  const Index n = blocks.front().n();
  Matrix x(n, cols);
  Index at = 0;
  for (const auto& b : blocks) {
    if (!b.flat) continue;
    x.middleCols(at, b.dim()) = b.effective_dense();
    at += b.dim();
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < cols) {
    throw DataError("flat-prior design columns for parameter " + std::to_string(param_index) +
                    " are rank deficient; the posterior would be improper");
  }
}

}  // namespace detail

/// Expand every term of every parameter predictor into design blocks,
/// applying centering constraints and auditing flat-prior ranks.
inline AssembledModel assemble_predictors(const ModelSpec& spec, const Dataset& data,
                                          const AdjacencyMap* adj = nullptr) {
  const Family& fam = family(spec.family);
  if (static_cast<int>(spec.predictors.size()) != fam.param_count()) {
    throw ConfigError("family " + std::string(fam.name()) + " needs " +
                      std::to_string(fam.param_count()) + " predictors, got " +
                      std::to_string(spec.predictors.size()));
  }
  AssembledModel model;
  model.family = spec.family;
  model.n = data.n();
  model.params.resize(spec.predictors.size());
  for (size_t k = 0; k < spec.predictors.size(); ++k) {
    const PredictorSpec& pred = spec.predictors[k];
    auto& blocks = model.params[k];
    if (pred.intercept) blocks.push_back(build_intercept_block(data.n()));
    for (const auto& term : pred.terms) {
      for (auto& b : detail::expand_term(term, data, adj)) blocks.push_back(std::move(b));
    }
    std::set<std::string> labels;
    for (const auto& b : blocks) {
      if (!labels.insert(b.label).second) {
        throw DataError("duplicate term label '" + b.label + "' in parameter " +
                        std::string(fam.param_name(static_cast<int>(k))));
      }
      if (b.dim() == 0) throw DataError("term '" + b.label + "' has an empty design");
    }
    detail::audit_flat_rank(blocks, static_cast<int>(k));
  }
  return model;
}

/// Predictor value for one row of (possibly new) data.
inline double predict_eta(const std::vector<DesignBlock>& blocks,
                          const std::vector<Vector>& betas, const Dataset& data, Index i,
                          bool clamp = false) {
  double eta = 0.0;
  for (size_t j = 0; j < blocks.size(); ++j) {
    if (blocks[j].silent_for(data)) continue;
    eta += blocks[j].effective_row(data, i, clamp).dot(betas[j]);
  }
  return eta;
}

}  // namespace distreg
