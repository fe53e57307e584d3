#include "stmrf/gaussian_conditional.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "stmrf/errors.hpp"

namespace stmrf {

namespace {

// Smallest eigenvalue for the error report; the diagonal minimum stands in
// when the matrix is too large for a dense decomposition.
double min_eigenvalue_estimate(const SparseMatrix& a) {
  if (a.rows() <= 2000) {
    const Eigen::MatrixXd dense(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  return Eigen::VectorXd(a.diagonal()).minCoeff();
}

}  // namespace

GaussianConditional::GaussianConditional(SparseMatrix precision, Eigen::VectorXd mean_rhs)
    : precision_(std::move(precision)), mean_rhs_(std::move(mean_rhs)) {
  if (precision_.rows() != precision_.cols() || precision_.rows() != mean_rhs_.size()) {
    throw ConfigError("GaussianConditional: precision and rhs dimensions differ");
  }
}

const Eigen::VectorXd& GaussianConditional::mean() const {
  if (!mean_) {
    CholeskySampler solver;
    mean_ = solver.solve(*this);
  }
  return *mean_;
}

Eigen::VectorXd ConditionalTerms::mean_rhs() const {
  Eigen::VectorXd rhs = A.apply_transpose(y) / sigma2_obs;
  if (mu != 0.0) rhs += L.L.transpose() * (weights * mu);
  return rhs;
}

Eigen::VectorXd ConditionalTerms::apply_precision(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out = A.apply_transpose(A.apply(v)) / sigma2_obs;
  out += L.L.transpose() * (weights.cwiseProduct(L.L * v));
  return out;
}

Eigen::VectorXd ConditionalTerms::precision_diagonal(const Eigen::VectorXd& gram_diag) const {
  Eigen::VectorXd diag = gram_diag / sigma2_obs;
  for (Eigen::Index r = 0; r < L.k(); ++r) {
    for (SparseRowMatrix::InnerIterator it(L.L, r); it; ++it) {
      diag[it.col()] += weights[r] * it.value() * it.value();
    }
  }
  return diag;
}

GaussianConditional ConditionalTerms::assemble(const SparseMatrix& gram) const {
  SparseMatrix precision = gram / sigma2_obs;
  precision += weighted_normal_matrix(L, weights);
  precision.makeCompressed();
  return GaussianConditional(std::move(precision), mean_rhs());
}

void CholeskySampler::factorize(const SparseMatrix& precision) {
  if (precision.nonZeros() != pattern_nnz_ || precision.rows() != pattern_dim_) {
    llt_.analyzePattern(precision);
    pattern_nnz_ = precision.nonZeros();
    pattern_dim_ = precision.rows();
  }
  llt_.factorize(precision);
  if (llt_.info() != Eigen::Success) {
    std::ostringstream os;
    os << "Cholesky factorization failed (matrix not positive definite); minimum eigenvalue "
          "estimate "
       << min_eigenvalue_estimate(precision);
    pattern_nnz_ = -1;
    throw NumericalError(os.str());
  }
}

Eigen::VectorXd CholeskySampler::solve(const GaussianConditional& gc) {
  factorize(gc.precision());
  return llt_.solve(gc.mean_rhs());
}

Eigen::VectorXd CholeskySampler::sample_with(const GaussianConditional& gc,
                                             const Eigen::VectorXd& u) {
  if (u.size() != gc.dim()) throw ConfigError("noise vector has wrong length");
  factorize(gc.precision());
  // P Lambda P^T = R^T R with R = L^T; mean + P^T R^{-1} u in one sweep.
  Eigen::VectorXd z = llt_.permutationP() * gc.mean_rhs();
  llt_.matrixL().solveInPlace(z);
  z += u;
  llt_.matrixU().solveInPlace(z);
  return llt_.permutationPinv() * z;
}

Eigen::VectorXd CholeskySampler::sample(const GaussianConditional& gc, Rng& rng) {
  const Eigen::VectorXd u = rng.normal_vector(gc.dim());
  return sample_with(gc, u);
}

Eigen::VectorXd sample_x_cholesky(const GaussianConditional& gc, Rng& rng) {
  CholeskySampler sampler;
  return sampler.sample(gc, rng);
}

CgResult solve_pcg(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                   const Eigen::VectorXd& rhs, const Eigen::VectorXd& diagonal,
                   const CgOptions& options, const Eigen::VectorXd* x0) {
  if (!(options.tol > 0.0) || options.max_iter <= 0) {
    throw ConfigError("CG tolerance and iteration cap must be positive");
  }
  const Eigen::VectorXd inv_diag = diagonal.cwiseInverse();
  CgResult result;
  result.x = x0 ? *x0 : Eigen::VectorXd::Zero(rhs.size());
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) {
    result.x.setZero();
    return result;
  }
  Eigen::VectorXd r = rhs - apply(result.x);
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  result.relative_residual = r.norm() / rhs_norm;
  while (result.relative_residual > options.tol) {
    if (result.iterations >= options.max_iter) {
      std::ostringstream os;
      os << "conjugate gradients did not converge in " << options.max_iter
         << " iterations; relative residual " << result.relative_residual;
      throw NumericalError(os.str());
    }
    const Eigen::VectorXd ap = apply(p);
    const double alpha = rz / p.dot(ap);
    result.x += alpha * p;
    r -= alpha * ap;
    z = inv_diag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
    ++result.iterations;
    result.relative_residual = r.norm() / rhs_norm;
  }
  return result;
}

CgResult sample_x_perturb_cg(const ConditionalTerms& terms, const Eigen::VectorXd& gram_diag,
                             const Eigen::VectorXd& e1, const Eigen::VectorXd& e2,
                             const CgOptions& options, const Eigen::VectorXd* x0) {
  if (e1.size() != terms.A.rows() || e2.size() != terms.L.k()) {
    throw ConfigError("perturbation vectors have wrong length");
  }
  Eigen::VectorXd rhs = terms.A.apply_transpose(terms.y + e1) / terms.sigma2_obs;
  if (terms.mu != 0.0) rhs += terms.L.L.transpose() * (terms.weights * terms.mu);
  rhs += terms.L.L.transpose() * terms.weights.cwiseSqrt().cwiseProduct(e2);
  return solve_pcg([&terms](const Eigen::VectorXd& v) { return terms.apply_precision(v); }, rhs,
                   terms.precision_diagonal(gram_diag), options, x0);
}

CgResult sample_x_perturb_cg(const ConditionalTerms& terms, const Eigen::VectorXd& gram_diag,
                             Rng& rng, const CgOptions& options, const Eigen::VectorXd* x0) {
  const Eigen::VectorXd e1 = std::sqrt(terms.sigma2_obs) * rng.normal_vector(terms.A.rows());
  const Eigen::VectorXd e2 = rng.normal_vector(terms.L.k());
  return sample_x_perturb_cg(terms, gram_diag, e1, e2, options, x0);
}

}  // namespace stmrf
