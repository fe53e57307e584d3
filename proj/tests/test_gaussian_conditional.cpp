#include <cmath>

#include <Eigen/Dense>
#include <doctest.h>

#include "stmrf/errors.hpp"
#include "stmrf/gaussian_conditional.hpp"
#include "test_util.hpp"

using namespace stmrf;

namespace {

struct Fixture {
  LinearInverseProblem problem = testutil::random_problem(10, 8, 31);
  DifferenceOperator L = build_difference_operator(Geometry::line(8));
  double sigma2 = 0.2;
  Eigen::VectorXd weights;
  Eigen::MatrixXd dense_precision;

  Fixture() {
    Rng rng(32);
    weights.resize(L.k());
    for (Eigen::Index i = 0; i < weights.size(); ++i) weights[i] = 0.2 + 3.0 * rng.uniform();
    const Eigen::MatrixXd a = problem.A.to_dense();
    const Eigen::MatrixXd l(L.L);
    dense_precision = a.transpose() * a / sigma2 + l.transpose() * weights.asDiagonal() * l;
  }
  ConditionalTerms terms(double mu = 0.0) const {
    return ConditionalTerms{problem.A, problem.y, L, sigma2, weights, mu};
  }
  SparseMatrix gram() const { return problem.A.gram().sparseView(); }
};

}  // namespace

TEST_CASE("conditional terms assemble the dense precision and right-hand side") {
  Fixture f;
  for (double mu : {0.0, 0.4}) {
    const auto t = f.terms(mu);
    const GaussianConditional gc = t.assemble(f.gram());
    CHECK((Eigen::MatrixXd(gc.precision()) - f.dense_precision).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::MatrixXd l(f.L.L);
    const Eigen::VectorXd rhs = f.problem.A.to_dense().transpose() * f.problem.y / f.sigma2 +
                                l.transpose() * (f.weights * mu);
    CHECK((gc.mean_rhs() - rhs).norm() < 1e-12);
    const Eigen::VectorXd mean = f.dense_precision.ldlt().solve(rhs);
    CHECK((gc.mean() - mean).norm() < 1e-10 * mean.norm());
    Rng rng(1);
    const Eigen::VectorXd v = rng.normal_vector(8);
    CHECK((t.apply_precision(v) - f.dense_precision * v).norm() < 1e-10);
    CHECK((t.precision_diagonal(f.problem.A.gram_diagonal()) - f.dense_precision.diagonal())
              .norm() < 1e-12);
  }
}

TEST_CASE("Cholesky draw is an exact square-root map of the covariance") {
  Fixture f;
  const GaussianConditional gc = f.terms().assemble(f.gram());
  CholeskySampler sampler;
  const Eigen::Index d = gc.dim();
  Eigen::MatrixXd M(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    M.col(i) = sampler.sample_with(gc, Eigen::VectorXd::Unit(d, i)) - gc.mean();
  }
  const Eigen::MatrixXd cov = f.dense_precision.inverse();
  CHECK((M * M.transpose() - cov).cwiseAbs().maxCoeff() < 1e-10 * cov.cwiseAbs().maxCoeff());
  CHECK((sampler.sample_with(gc, Eigen::VectorXd::Zero(d)) - gc.mean()).norm() < 1e-12);
}

TEST_CASE("Cholesky draw in one dimension") {
  SparseMatrix p(1, 1);
  p.insert(0, 0) = 4.0;
  const GaussianConditional gc(p, Eigen::VectorXd::Constant(1, 2.0));
  CholeskySampler sampler;
  CHECK(gc.mean()[0] == doctest::Approx(0.5));
  CHECK(sampler.sample_with(gc, Eigen::VectorXd::Constant(1, 1.0))[0] == doctest::Approx(1.0));
  CHECK(sampler.sample_with(gc, Eigen::VectorXd::Constant(1, -2.0))[0] == doctest::Approx(-0.5));
}

TEST_CASE("Cholesky reports an indefinite precision") {
  SparseMatrix p(2, 2);
  p.insert(0, 0) = 1.0;
  p.insert(1, 1) = -1.0;
  const GaussianConditional gc(p, Eigen::VectorXd::Ones(2));
  CholeskySampler sampler;
  CHECK_THROWS_AS(sampler.solve(gc), NumericalError);
  CHECK_THROWS_AS(GaussianConditional(p, Eigen::VectorXd::Ones(3)), ConfigError);
}

TEST_CASE("perturbation draw solves the perturbed normal equations") {
  Fixture f;
  const auto t = f.terms(0.3);
  Rng rng(5);
  const Eigen::VectorXd e1 = rng.normal_vector(10), e2 = rng.normal_vector(f.L.k());
  const CgResult r =
      sample_x_perturb_cg(t, f.problem.A.gram_diagonal(), e1, e2, {1e-13, 1000});
  const Eigen::MatrixXd a = f.problem.A.to_dense();
  const Eigen::MatrixXd l(f.L.L);
  const Eigen::VectorXd rhs = a.transpose() * (f.problem.y + e1) / f.sigma2 +
                              l.transpose() * (f.weights * 0.3) +
                              l.transpose() * f.weights.cwiseSqrt().cwiseProduct(e2);
  CHECK((f.dense_precision * r.x - rhs).norm() < 1e-10 * rhs.norm());
  CHECK(r.relative_residual <= 1e-13);
}

TEST_CASE("perturbation draw has covariance equal to the inverse precision") {
  // The draw is affine in (e1, e2); summing the outer products of the
  // images of scaled unit vectors gives its exact covariance.
  Fixture f;
  const auto t = f.terms();
  const Eigen::VectorXd gd = f.problem.A.gram_diagonal();
  const CgOptions opts{1e-14, 1000};
  const Eigen::VectorXd base =
      sample_x_perturb_cg(t, gd, Eigen::VectorXd::Zero(10), Eigen::VectorXd::Zero(f.L.k()), opts)
          .x;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(8, 8);
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd e1 = std::sqrt(f.sigma2) * Eigen::VectorXd::Unit(10, i);
    const Eigen::VectorXd v =
        sample_x_perturb_cg(t, gd, e1, Eigen::VectorXd::Zero(f.L.k()), opts).x - base;
    cov += v * v.transpose();
  }
  for (Eigen::Index i = 0; i < f.L.k(); ++i) {
    const Eigen::VectorXd v =
        sample_x_perturb_cg(t, gd, Eigen::VectorXd::Zero(10), Eigen::VectorXd::Unit(f.L.k(), i),
                            opts)
            .x -
        base;
    cov += v * v.transpose();
  }
  const Eigen::MatrixXd expected = f.dense_precision.inverse();
  CHECK((cov - expected).cwiseAbs().maxCoeff() < 1e-8 * expected.cwiseAbs().maxCoeff());
  CHECK((base - f.dense_precision.ldlt().solve(t.mean_rhs())).norm() < 1e-9);
}

TEST_CASE("preconditioned CG: solution, warm start and failure report") {
  Rng rng(8);
  Eigen::MatrixXd b(30, 30);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 30; ++j) b(i, j) = rng.normal();
  const Eigen::MatrixXd spd = b * b.transpose() + 30.0 * Eigen::MatrixXd::Identity(30, 30);
  const Eigen::VectorXd rhs = rng.normal_vector(30);
  auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return spd * v; };
  const CgResult r = solve_pcg(apply, rhs, spd.diagonal(), {1e-12, 500});
  CHECK((spd * r.x - rhs).norm() <= 1e-11 * rhs.norm());
  const CgResult warm = solve_pcg(apply, rhs, spd.diagonal(), {1e-12, 500}, &r.x);
  CHECK(warm.iterations <= 1);
  CHECK_THROWS_AS(solve_pcg(apply, rhs, spd.diagonal(), {1e-14, 2}), NumericalError);
  CHECK_THROWS_AS(solve_pcg(apply, rhs, spd.diagonal(), {0.0, 10}), ConfigError);
  const CgResult zero = solve_pcg(apply, Eigen::VectorXd::Zero(30), spd.diagonal(), {1e-10, 10});
  CHECK(zero.x.norm() == 0.0);
}
