#include <Eigen/Dense>
#include <cmath>

#include "clustop/dimred.hpp"
#include "clustop/error.hpp"

namespace clustop {

EmbeddingMatrix pca(const EmbeddingMatrix& x, int k) {
  const auto n = static_cast<Eigen::Index>(x.rows());
  const auto d = static_cast<Eigen::Index>(x.cols());
  if (k < 1 || k > std::min(n, d)) throw InvalidArgument("pca: k out of range");
  if (!x.all_finite()) throw InvalidArgument("pca: input has non-finite values");

  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMatrix> data(x.values().data(), n, d);
  const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();

  EmbeddingMatrix out(x.rows(), static_cast<std::size_t>(k), x.stage());
  if (centered.cwiseAbs().maxCoeff() == 0.0) return out;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  Eigen::MatrixXd components = svd.matrixV().leftCols(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    components.col(c).cwiseAbs().maxCoeff(&arg);
    if (components(arg, c) < 0.0) components.col(c) *= -1.0;
  }
  const Eigen::MatrixXd projected = centered * components;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < k; ++c) out(i, c) = projected(i, c);
  }
  return out;
}

}  // namespace clustop
