#pragma once

#include <functional>
#include <optional>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include "stmrf/model.hpp"
#include "stmrf/operators.hpp"
#include "stmrf/random.hpp"

namespace stmrf {

/// Gaussian N(mean, precision^{-1}) specified in information form:
/// precision * mean = mean_rhs. The mean is solved for on first use.
class GaussianConditional {
 public:
  GaussianConditional(SparseMatrix precision, Eigen::VectorXd mean_rhs);

  const SparseMatrix& precision() const { return precision_; }
  const Eigen::VectorXd& mean_rhs() const { return mean_rhs_; }
  const Eigen::VectorXd& mean() const;
  Eigen::Index dim() const { return mean_rhs_.size(); }

 private:
  SparseMatrix precision_;
  Eigen::VectorXd mean_rhs_;
  mutable std::optional<Eigen::VectorXd> mean_;
};

/// The pieces of the x-conditional of the linear-Gaussian model with a
/// conditionally Gaussian difference prior:
///   precision = A^T A / sigma2_obs + L^T W L
///   mean_rhs  = A^T y / sigma2_obs + L^T W (mu 1)
/// The referenced operator, data and difference operator must outlive it.
struct ConditionalTerms {
  const ForwardOperator& A;
  const Eigen::VectorXd& y;
  const DifferenceOperator& L;
  double sigma2_obs;
  Eigen::VectorXd weights;  // diagonal of W, length k
  double mu = 0.0;

  Eigen::VectorXd mean_rhs() const;
  Eigen::VectorXd apply_precision(const Eigen::VectorXd& v) const;
  /// diag of the precision given diag(A^T A).
  Eigen::VectorXd precision_diagonal(const Eigen::VectorXd& gram_diag) const;
  /// Explicit sparse precision given a sparse A^T A.
  GaussianConditional assemble(const SparseMatrix& gram) const;
};

/// Exact draws by sparse Cholesky with an AMD fill-reducing ordering. The
/// symbolic analysis is reused while the sparsity pattern is unchanged.
class CholeskySampler {
 public:
  /// mean + P^T R^{-1} u with P Lambda P^T = R^T R and u ~ N(0, I).
  Eigen::VectorXd sample(const GaussianConditional& gc, Rng& rng);
  /// Same map with the standard-normal vector supplied by the caller.
  Eigen::VectorXd sample_with(const GaussianConditional& gc, const Eigen::VectorXd& u);
  Eigen::VectorXd solve(const GaussianConditional& gc);

 private:
  void factorize(const SparseMatrix& precision);

  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
  Eigen::Index pattern_nnz_ = -1;
  Eigen::Index pattern_dim_ = -1;
};

Eigen::VectorXd sample_x_cholesky(const GaussianConditional& gc, Rng& rng);

struct CgOptions {
  double tol = 1e-8;
  int max_iter = 5000;
};

struct CgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients for an SPD operator. Throws
/// NumericalError carrying the final residual if max_iter is exhausted.
CgResult solve_pcg(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                   const Eigen::VectorXd& rhs, const Eigen::VectorXd& diagonal,
                   const CgOptions& options, const Eigen::VectorXd* x0 = nullptr);

/// Perturbation-optimization draw: with e1 ~ N(0, sigma2_obs I_m) and
/// e2 ~ N(0, I_k), solves
///   precision x = A^T (y + e1) / sigma2_obs + L^T W (mu 1) + L^T W^{1/2} e2.
CgResult sample_x_perturb_cg(const ConditionalTerms& terms, const Eigen::VectorXd& gram_diag,
                             Rng& rng, const CgOptions& options,
                             const Eigen::VectorXd* x0 = nullptr);

/// Same solve with caller-supplied perturbations.
CgResult sample_x_perturb_cg(const ConditionalTerms& terms, const Eigen::VectorXd& gram_diag,
                             const Eigen::VectorXd& e1, const Eigen::VectorXd& e2,
                             const CgOptions& options, const Eigen::VectorXd* x0 = nullptr);

}  // namespace stmrf
