#include "rfmkrr/bounds.hpp"

#include <lapacke.h>

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace rfmkrr {

KernelSpectrum kernel_spectrum(const Eigen::MatrixXd& K) {
  if (K.rows() != K.cols() || K.rows() < 1)
    throw std::invalid_argument("kernel_spectrum: square matrix required");
  KernelSpectrum spec;
  spec.eigenvectors = K;
  spec.eigenvalues.resize(K.rows());
  const auto n = static_cast<lapack_int>(K.rows());
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, spec.eigenvectors.data(), n,
                     spec.eigenvalues.data());
  if (info != 0)
    throw std::runtime_error("kernel_spectrum: dsyevd failed with info " +
                             std::to_string(info));
  spec.eigenvalues = spec.eigenvalues.cwiseMax(0.0);
  return spec;
}

namespace {

void check_lambda(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
}

void check_s(int s) {
  if (s < 1) throw std::invalid_argument("s must be >= 1");
}

}  // namespace

double core_norm(const KernelSpectrum& spec, const Eigen::VectorXd& y, double lambda) {
  check_lambda(lambda);
  if (y.size() != spec.eigenvalues.size())
    throw std::invalid_argument("core_norm: y size mismatch");
  const double n_lambda = static_cast<double>(y.size()) * lambda;
  const Eigen::VectorXd uty = spec.eigenvectors.transpose() * y;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < uty.size(); ++i) {
    const double denom = spec.eigenvalues(i) + n_lambda;
    acc += spec.eigenvalues(i) * uty(i) * uty(i) / (denom * denom);
  }
  return acc;
}

double core_norm(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double lambda) {
  return core_norm(kernel_spectrum(K), y, lambda);
}

double plot_bound(const KernelSpectrum& spec, const Eigen::VectorXd& y, double lambda,
                  int s) {
  check_s(s);
  return core_norm(spec, y, lambda) / static_cast<double>(s);
}

double plot_bound(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double lambda,
                  int s) {
  return plot_bound(kernel_spectrum(K), y, lambda, s);
}

double theorem1_bound(const KernelSpectrum& spec, const Eigen::VectorXd& y,
                      double lambda, int s, double b) {
  if (!(b > 0.0)) throw std::invalid_argument("theorem1_bound: b must be positive");
  return 4.0 * b * plot_bound(spec, y, lambda, s);
}

double theorem1_bound(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                      double lambda, int s, double b) {
  return theorem1_bound(kernel_spectrum(K), y, lambda, s, b);
}

double lower_quantity(const KernelSpectrum& spec, const Eigen::VectorXd& y,
                      double lambda, int s) {
  check_lambda(lambda);
  check_s(s);
  if (y.size() != spec.eigenvalues.size())
    throw std::invalid_argument("lower_quantity: y size mismatch");
  const double n = static_cast<double>(y.size());
  const double n_lambda = n * lambda;
  const Eigen::VectorXd uty = spec.eigenvectors.transpose() * y;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < uty.size(); ++i) {
    const double sig = spec.eigenvalues(i);
    const double w = std::max(0.0, sig - sig * sig / n);
    const double denom = sig + n_lambda;
    acc += w * uty(i) * uty(i) / (denom * denom);
  }
  return acc / static_cast<double>(s);
}

double lower_quantity(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                      double lambda, int s) {
  return lower_quantity(kernel_spectrum(K), y, lambda, s);
}

double lambda_threshold(int n, int s, double b, double delta) {
  if (n < 1) throw std::invalid_argument("lambda_threshold: n must be >= 1");
  check_s(s);
  if (!(b > 0.0)) throw std::invalid_argument("lambda_threshold: b must be positive");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("lambda_threshold: delta must be in (0,1)");
  return 2.0 * b / std::sqrt(static_cast<double>(n)) *
         std::sqrt(std::log(static_cast<double>(s) / delta));
}

long long sample_threshold(double epsilon, int s, double b, double delta) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("sample_threshold: epsilon must be positive");
  check_s(s);
  if (!(b > 0.0)) throw std::invalid_argument("sample_threshold: b must be positive");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("sample_threshold: delta must be in (0,1)");
  const double raw =
      8.0 * b * b / (3.0 * epsilon * epsilon) * std::log(static_cast<double>(s) / delta);
  return std::max(1LL, static_cast<long long>(std::ceil(raw)));
}

BoundReport make_bound_report(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                              double lambda, int s, double b, double delta,
                              double epsilon) {
  const KernelSpectrum spec = kernel_spectrum(K);
  BoundReport r;
  r.n = static_cast<int>(K.rows());
  r.s = s;
  r.lambda = lambda;
  r.b = b;
  r.delta = delta;
  r.epsilon = epsilon;
  r.plot_bound = plot_bound(spec, y, lambda, s);
  r.theorem1_bound = 4.0 * b * r.plot_bound;
  r.cap = y.squaredNorm() / (4.0 * static_cast<double>(r.n) * lambda);
  r.lower_quantity = lower_quantity(spec, y, lambda, s);
  const double sl = static_cast<double>(s) * lambda;
  r.lower_constant = (sl / (1.0 + sl)) * (sl / (1.0 + sl)) / static_cast<double>(s);
  r.lambda_threshold = lambda_threshold(r.n, s, b, delta);
  r.n_threshold = sample_threshold(epsilon, s, b, delta);
  return r;
}

nlohmann::json to_json(const BoundReport& r) {
  return nlohmann::json{{"n", r.n},
                        {"s", r.s},
                        {"lambda", r.lambda},
                        {"b", r.b},
                        {"delta", r.delta},
                        {"epsilon", r.epsilon},
                        {"theorem1_bound", r.theorem1_bound},
                        {"plot_bound", r.plot_bound},
                        {"cap", r.cap},
                        {"lower_quantity", r.lower_quantity},
                        {"lower_constant", r.lower_constant},
                        {"lambda_threshold", r.lambda_threshold},
                        {"n_threshold", r.n_threshold}};
}

}  // namespace rfmkrr
