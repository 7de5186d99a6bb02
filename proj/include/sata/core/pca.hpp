#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "sata/core/error.hpp"
#include "sata/core/tensor.hpp"

namespace sata {

struct PcaResult {
  Tensor projection;                 // n x k
  Tensor components;                 // k x d, unit rows
  std::vector<double> eigenvalues;   // all d, descending
  std::vector<double> mean;          // d
};

// Principal components of the population covariance (1/n normalisation).
// Each component's largest-magnitude entry is made positive so output is
// reproducible across runs.
inline PcaResult pca(const Tensor& points, std::size_t k = 2) {
  if (points.rank() != 2) throw DimensionError("pca expects an n x d matrix");
  const std::size_t n = points.rows(), d = points.cols();
  if (n < 2) throw DimensionError("pca needs at least two points");
  if (k == 0 || k > d) throw DimensionError("pca: k must be in [1, d]");

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = points.at(i, j);
  const Eigen::RowVectorXd mu = x.colwise().mean();
  x.rowwise() -= mu;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::VectorXd& values = solver.eigenvalues();
  const Eigen::MatrixXd& vectors = solver.eigenvectors();

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values(static_cast<Eigen::Index>(a)) > values(static_cast<Eigen::Index>(b));
  });

  PcaResult result;
  result.mean.assign(mu.data(), mu.data() + d);
  for (std::size_t idx : order) result.eigenvalues.push_back(std::max(0.0, values(static_cast<Eigen::Index>(idx))));
  result.components = Tensor({k, d});
  for (std::size_t c = 0; c < k; ++c) {
    const Eigen::Index col = static_cast<Eigen::Index>(order[c]);
    Eigen::Index pivot = 0;
    vectors.col(col).cwiseAbs().maxCoeff(&pivot);
    const double sign = vectors(pivot, col) < 0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) result.components.at(c, j) = sign * vectors(static_cast<Eigen::Index>(j), col);
  }
  result.projection = Tensor({n, k});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * result.components.at(c, j);
      result.projection.at(i, c) = s;
    }
  return result;
}

inline Tensor pca_project(const Tensor& points, std::size_t k = 2) { return pca(points, k).projection; }

}  // namespace sata
