#include "stmrf/operators.hpp"

#include <vector>

#include "stmrf/errors.hpp"

namespace stmrf {

namespace {

using Triplet = Eigen::Triplet<double>;

void push_difference(std::vector<Triplet>& t, Eigen::Index row, Eigen::Index here,
                     Eigen::Index prev, bool has_prev) {
  t.emplace_back(row, here, 1.0);
  if (has_prev) t.emplace_back(row, prev, -1.0);
}

}  // namespace

DifferenceOperator build_difference_operator(const Geometry& geometry) {
  if (geometry.n < 1) throw ConfigError("geometry size must be positive");
  const Eigen::Index n = geometry.n;
  const Eigen::Index d = geometry.dim();
  std::vector<Triplet> t;
  DifferenceOperator op{geometry, {}};
  if (geometry.kind == Geometry::Kind::Line) {
    t.reserve(2 * d);
    for (Eigen::Index i = 0; i < n; ++i) push_difference(t, i, i, i - 1, i > 0);
    op.L.resize(d, d);
  } else {
    t.reserve(4 * d);
    // I (x) D: differences down each column of the image.
    for (Eigen::Index col = 0; col < n; ++col) {
      for (Eigen::Index row = 0; row < n; ++row) {
        const Eigen::Index idx = row + n * col;
        push_difference(t, idx, idx, idx - 1, row > 0);
      }
    }
    // D (x) I: differences along each row of the image.
    for (Eigen::Index col = 0; col < n; ++col) {
      for (Eigen::Index row = 0; row < n; ++row) {
        const Eigen::Index idx = row + n * col;
        push_difference(t, d + idx, idx, idx - n, col > 0);
      }
    }
    op.L.resize(2 * d, d);
  }
  op.L.setFromTriplets(t.begin(), t.end());
  op.L.makeCompressed();
  return op;
}

SparseMatrix weighted_normal_matrix(const DifferenceOperator& L,
                                    const Eigen::VectorXd& weights) {
  if (weights.size() != L.k()) throw ConfigError("weight vector length must equal k");
  // Each row of L touches at most two columns, so accumulate the 2x2 outer
  // products row by row.
  std::vector<Triplet> t;
  t.reserve(4 * static_cast<std::size_t>(L.k()));
  for (Eigen::Index r = 0; r < L.k(); ++r) {
    for (SparseRowMatrix::InnerIterator a(L.L, r); a; ++a) {
      for (SparseRowMatrix::InnerIterator b(L.L, r); b; ++b) {
        t.emplace_back(a.col(), b.col(), weights[r] * a.value() * b.value());
      }
    }
  }
  SparseMatrix out(L.d(), L.d());
  out.setFromTriplets(t.begin(), t.end());
  out.makeCompressed();
  return out;
}

PrecisionMatrix assemble_precision(const DifferenceOperator& L, double tau2,
                                   const Eigen::VectorXd& w2) {
  if (!(tau2 > 0.0)) throw ConfigError("tau2 must be positive");
  if (w2.size() != L.k()) throw ConfigError("w2 length must equal k");
  if ((w2.array() <= 0.0).any()) throw ConfigError("every w2 component must be positive");
  const Eigen::VectorXd weights = (tau2 * w2.array()).inverse().matrix();
  return {weighted_normal_matrix(L, weights), tau2, w2};
}

}  // namespace stmrf
