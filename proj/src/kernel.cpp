#include "rfmkrr/kernel.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace rfmkrr {

std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::Rbf: return "rbf";
    case KernelFamily::Laplace: return "laplace";
    case KernelFamily::AngularSimilarity: return "angular";
  }
  return "?";
}

KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "rbf") return KernelFamily::Rbf;
  if (s == "laplace") return KernelFamily::Laplace;
  if (s == "angular") return KernelFamily::AngularSimilarity;
  throw std::invalid_argument("unknown kernel family: " + s);
}

void KernelSpec::validate() const {
  if (family != KernelFamily::AngularSimilarity && !(sigma > 0.0))
    throw std::invalid_argument("kernel bandwidth must be positive");
}

namespace {

double angular_from_cos(double c) {
  c = std::min(1.0, std::max(-1.0, c));
  return 2.0 / M_PI * std::asin(c);
}

void check_rows_nonzero(const Eigen::MatrixXd& X, const char* who) {
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    if (X.row(i).norm() == 0.0)
      throw std::invalid_argument(std::string(who) + ": zero vector at row " +
                                  std::to_string(i) +
                                  " has no direction under the angular kernel");
}

}  // namespace

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& x2) {
  spec.validate();
  if (x.size() != x2.size())
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  switch (spec.family) {
    case KernelFamily::Rbf:
      return std::exp(-(x - x2).squaredNorm() / (2.0 * spec.sigma * spec.sigma));
    case KernelFamily::Laplace:
      return std::exp(-(x - x2).lpNorm<1>() / spec.sigma);
    case KernelFamily::AngularSimilarity: {
      const double nx = x.norm(), n2 = x2.norm();
      if (nx == 0.0 || n2 == 0.0)
        throw std::invalid_argument(
            "kernel_eval: zero vector has no direction under the angular kernel");
      return angular_from_cos(x.dot(x2) / (nx * n2));
    }
  }
  throw std::logic_error("unreachable");
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X) {
  spec.validate();
  const Eigen::Index n = X.rows();
  if (n < 1) throw std::invalid_argument("kernel_matrix: empty input");
  Eigen::MatrixXd K(n, n);

  switch (spec.family) {
    case KernelFamily::Rbf: {
      // ||a-b||^2 = ||a||^2 + ||b||^2 - 2 a.b via one syrk; exact symmetry
      // comes from mirroring the lower triangle.
      Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
      G.selfadjointView<Eigen::Lower>().rankUpdate(X);
      const Eigen::VectorXd sq = G.diagonal();
      const double inv = 1.0 / (2.0 * spec.sigma * spec.sigma);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
          const double d2 = std::max(0.0, sq(i) + sq(j) - 2.0 * G(i, j));
          K(i, j) = std::exp(-d2 * inv);
          K(j, i) = K(i, j);
        }
      break;
    }
    case KernelFamily::Laplace: {
      const double inv = 1.0 / spec.sigma;
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
          K(i, j) = std::exp(-(X.row(i) - X.row(j)).lpNorm<1>() * inv);
          K(j, i) = K(i, j);
        }
      break;
    }
    case KernelFamily::AngularSimilarity: {
      check_rows_nonzero(X, "kernel_matrix");
      const Eigen::MatrixXd U = X.rowwise().normalized();
      Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
      G.selfadjointView<Eigen::Lower>().rankUpdate(U);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
          K(i, j) = angular_from_cos(G(i, j));
          K(j, i) = K(i, j);
        }
      break;
    }
  }
  K.diagonal().setOnes();
  return K;
}

Eigen::MatrixXd kernel_cross(const KernelSpec& spec, const Eigen::MatrixXd& A,
                             const Eigen::MatrixXd& B) {
  spec.validate();
  if (A.cols() != B.cols())
    throw std::invalid_argument("kernel_cross: dimension mismatch");
  Eigen::MatrixXd K(A.rows(), B.rows());
  switch (spec.family) {
    case KernelFamily::Rbf: {
      const Eigen::VectorXd sa = A.rowwise().squaredNorm();
      const Eigen::VectorXd sb = B.rowwise().squaredNorm();
      const Eigen::MatrixXd G = A * B.transpose();
      const double inv = 1.0 / (2.0 * spec.sigma * spec.sigma);
      for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < B.rows(); ++j)
          K(i, j) = std::exp(-std::max(0.0, sa(i) + sb(j) - 2.0 * G(i, j)) * inv);
      break;
    }
    case KernelFamily::Laplace: {
      const double inv = 1.0 / spec.sigma;
      for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < B.rows(); ++j)
          K(i, j) = std::exp(-(A.row(i) - B.row(j)).lpNorm<1>() * inv);
      break;
    }
    case KernelFamily::AngularSimilarity: {
      check_rows_nonzero(A, "kernel_cross");
      check_rows_nonzero(B, "kernel_cross");
      const Eigen::MatrixXd G =
          A.rowwise().normalized() * B.rowwise().normalized().transpose();
      K = G.unaryExpr([](double c) { return angular_from_cos(c); });
      break;
    }
  }
  return K;
}

Eigen::VectorXd kernel_vector(const KernelSpec& spec, const Eigen::MatrixXd& X_train,
                              const Eigen::VectorXd& x_test) {
  return kernel_cross(spec, X_train, x_test.transpose()).col(0);
}

double bandwidth_heuristic(KernelFamily family, const Eigen::MatrixXd& X) {
  if (family == KernelFamily::AngularSimilarity)
    throw std::invalid_argument("angular similarity kernel has no bandwidth");
  const Eigen::Index n = X.rows();
  if (n < 2) throw std::invalid_argument("bandwidth_heuristic: need at least 2 rows");
  // Mean over all n^2 ordered pairs, i = j included.
  double acc = 0.0;
  if (family == KernelFamily::Rbf) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < i; ++j) acc += (X.row(i) - X.row(j)).squaredNorm();
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < i; ++j) acc += (X.row(i) - X.row(j)).lpNorm<1>();
  }
  const double mean = 2.0 * acc / (static_cast<double>(n) * static_cast<double>(n));
  const double sigma = family == KernelFamily::Rbf ? std::sqrt(mean) : mean;
  if (sigma == 0.0)
    throw std::runtime_error("degenerate bandwidth: all rows identical");
  return sigma;
}

void write_matrix_f64(const Eigen::MatrixXd& M, std::ostream& out) {
  const std::uint64_t rows = static_cast<std::uint64_t>(M.rows());
  const std::uint64_t cols = static_cast<std::uint64_t>(M.cols());
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      const double v = M(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

}  // namespace rfmkrr
