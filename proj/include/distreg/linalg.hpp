#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "distreg/common.hpp"
#include "distreg/rng.hpp"
#include "distreg/special.hpp"

namespace distreg {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Dense-to-sparse conversion keeping every entry structural, so the
/// sparsity pattern is stable across repeated factorisations.
inline SparseMatrix to_sparse_full(const Matrix& m) {
  SparseMatrix s(m.rows(), m.cols());
  s.reserve(Eigen::VectorXi::Constant(m.cols(), static_cast<int>(m.rows())));
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) s.insert(i, j) = m(i, j);
  }
  s.makeCompressed();
  return s;
}

namespace detail {

/// Plain dense Cholesky in the original ordering, used to locate the
/// failing pivot for error reporting. Returns the first pivot index
/// below tol (or -1) and the factor when it succeeds.
inline int dense_cholesky(const Matrix& p, Matrix& l, double tol) {
  const Index d = p.rows();
  l = Matrix::Zero(d, d);
  for (Index j = 0; j < d; ++j) {
    double diag = p(j, j) - l.row(j).head(j).squaredNorm();
    if (!(diag > tol)) return static_cast<int>(j);
    diag = std::sqrt(diag);
    l(j, j) = diag;
    for (Index i = j + 1; i < d; ++i) {
      l(i, j) = (p(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / diag;
    }
  }
  return -1;
}

}  // namespace detail

/// Sparse symmetric positive-definite factorisation P = Pi' L L' Pi with
/// a fill-reducing ordering; the symbolic analysis is cached across
/// factorisations of matrices with the same pattern.
template <typename Ordering = Eigen::AMDOrdering<int>>
class PrecisionSolverT {
public:
  /// Factorise or throw NumericError naming the failing pivot.
  void factorize(const SparseMatrix& p) {
    if (!try_factorize(p)) {
      Matrix l;
      const int pivot = detail::dense_cholesky(Matrix(p), l, pivot_tolerance(p));
      throw NumericError("precision matrix not positive definite (pivot " +
                         std::to_string(pivot) + ")");
    }
  }

  /// No-throw variant used inside proposal loops.
  bool try_factorize(const SparseMatrix& p) {
    if (!analyzed_ || dim_ != p.rows()) {
      llt_.analyzePattern(p);
      analyzed_ = true;
      dim_ = p.rows();
    }
    llt_.factorize(p);
    if (llt_.info() != Eigen::Success) return false;
    const SparseMatrix l = llt_.matrixL();
    l_diag_ = l.diagonal();
    const double tol = pivot_tolerance(p);
    if ((l_diag_.array().square() <= tol).any()) return false;
    precision_ = p;
    return true;
  }

  /// Factorise with a single ridge retry (1e-8 of the max diagonal);
  /// returns false when the jittered matrix still fails.
  bool try_factorize_jittered(const Matrix& p_dense, bool* jittered = nullptr) {
    if (jittered) *jittered = false;
    if (try_factorize(to_sparse_full(p_dense))) return true;
    const double ridge = 1e-8 * p_dense.diagonal().maxCoeff();
    Matrix bumped = p_dense;
    bumped.diagonal().array() += ridge;
    if (jittered) *jittered = true;
    return try_factorize(to_sparse_full(bumped));
  }

  Index dim() const { return dim_; }

  Vector solve(const Vector& b) const { return llt_.solve(b); }

  /// mu + Pi^{-1} L^{-T} z: a N(mu, P^{-1}) draw when z is standard
  /// normal; returns mu exactly for z = 0.
  Vector sample(const Vector& mu, const Vector& z) const {
    const Vector w = llt_.matrixU().solve(z);
    return mu + llt_.permutationPinv() * w;
  }

  double log_det() const { return 2.0 * l_diag_.array().log().sum(); }

  double quadform(const Vector& d) const { return d.dot(precision_ * d); }

  Eigen::VectorXi permutation_indices() const { return llt_.permutationP().indices(); }

private:
  static double pivot_tolerance(const SparseMatrix& p) {
    double mx = 0.0;
    for (Index i = 0; i < p.rows(); ++i) mx = std::max(mx, p.coeff(i, i));
    return 1e-12 * mx;
  }

  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Ordering> llt_;
  SparseMatrix precision_;
  Vector l_diag_;
  bool analyzed_ = false;
  Index dim_ = 0;
};

using PrecisionSolver = PrecisionSolverT<>;

/// Draw from N(mu, P^{-1}) given a factorised precision.
template <typename Ordering>
Vector sample_mvn_precision(const Vector& mu, const PrecisionSolverT<Ordering>& solver,
                            Rng& rng) {
  Vector z(mu.size());
  for (Index i = 0; i < z.size(); ++i) z[i] = draw_normal(rng);
  return solver.sample(mu, z);
}

/// log N(x | mu, P^{-1}) via the cached factor.
template <typename Ordering>
double mvn_logdensity(const Vector& x, const Vector& mu, const PrecisionSolverT<Ordering>& solver) {
  const Vector d = x - mu;
  return 0.5 * solver.log_det() - 0.5 * static_cast<double>(x.size()) * kLogTwoPi -
         0.5 * solver.quadform(d);
}

}  // namespace distreg
