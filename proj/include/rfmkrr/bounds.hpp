#pragma once

#include <Eigen/Dense>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace rfmkrr {

// Symmetric eigendecomposition of a kernel matrix with the spectrum clamped
// at zero (minimal projection back onto the PSD cone). One O(n^3)
// factorization serves every bound quantity for a given K.
struct KernelSpectrum {
  Eigen::VectorXd eigenvalues;   // ascending, >= 0 after clamping
  Eigen::MatrixXd eigenvectors;  // columns
};

KernelSpectrum kernel_spectrum(const Eigen::MatrixXd& K);

// ||K^{1/2} (K + n lambda I)^{-1} y||_2^2, the data-dependent factor shared
// by all the bound quantities.
double core_norm(const KernelSpectrum& spec, const Eigen::VectorXd& y, double lambda);
double core_norm(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double lambda);

// (4b/s) * core_norm. Always exactly 4b times plot_bound.
double theorem1_bound(const KernelSpectrum& spec, const Eigen::VectorXd& y,
                      double lambda, int s, double b);
double theorem1_bound(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                      double lambda, int s, double b);

// (1/s) * core_norm, the constant-free form used for bound/MSE plots.
double plot_bound(const KernelSpectrum& spec, const Eigen::VectorXd& y, double lambda,
                  int s);
double plot_bound(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double lambda,
                  int s);

// (1/s) * ||(K - K^2/n)^{1/2} (K + n lambda I)^{-1} y||_2^2, the matching
// lower-bound quantity; negative spectral terms are clamped at zero.
double lower_quantity(const KernelSpectrum& spec, const Eigen::VectorXd& y,
                      double lambda, int s);
double lower_quantity(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                      double lambda, int s);

// Smallest regularization the upper bound asks for: (2b/sqrt(n)) sqrt(log(s/delta)).
double lambda_threshold(int n, int s, double b, double delta);

// Training-set size that makes the empirical feature second moment
// concentrate: ceil(8 b^2 / (3 eps^2) * log(s/delta)), at least 1.
long long sample_threshold(double epsilon, int s, double b, double delta);

// Every closed-form quantity for one (K, y, lambda, s, b, delta, epsilon)
// tuple, with the inputs echoed for audit.
struct BoundReport {
  int n = 0;
  int s = 0;
  double lambda = 0.0;
  double b = 0.0;
  double delta = 0.0;
  double epsilon = 0.0;
  double theorem1_bound = 0.0;
  double plot_bound = 0.0;
  double cap = 0.0;             // ||y||^2 / (4 n lambda)
  double lower_quantity = 0.0;
  double lower_constant = 0.0;  // (1/s) (s lambda / (1 + s lambda))^2, informational
  double lambda_threshold = 0.0;
  long long n_threshold = 0;
};

BoundReport make_bound_report(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                              double lambda, int s, double b, double delta,
                              double epsilon);

nlohmann::json to_json(const BoundReport& r);

}  // namespace rfmkrr
