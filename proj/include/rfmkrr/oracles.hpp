#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "rfmkrr/feature_map.hpp"
#include "rfmkrr/kernel.hpp"

namespace rfmkrr {

// Entrywise Monte-Carlo estimate of a random symmetric matrix.
struct MomentEstimate {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd std_err;
  long long num_draws = 0;
  std::uint64_t seed = 0;
};

struct LemmaReport {
  std::string lemma;
  bool pass = false;
  double margin = 0.0;  // allowance minus worst observed violation
  long long draws = 0;
  std::uint64_t seed = 0;
  double worst_eigenvalue = 0.0;
};

nlohmann::json to_json(const LemmaReport& r);

// Second moment of the feature vector under the uniform distribution on the
// support rows, by exact enumeration: Xi = (1/m) sum_r psi(x_r) psi(x_r)^T.
Eigen::MatrixXd exact_xi_discrete(const FeatureMap& fm, const Eigen::MatrixXd& support);

struct Lemma1Result {
  double observed_failure_rate = 0.0;
  long long threshold_n = 0;
  double rate_allowance = 0.0;
  bool pass = false;
};

// Draws `trials` training sets of n i.i.d. samples from the support and
// counts how often ||Xi - Psi^T Psi / n||_2 exceeds epsilon. Requires
// n >= sample_threshold(epsilon, s, b, delta); passes when the observed
// failure rate is within binomial noise of delta.
Lemma1Result verify_lemma1(const FeatureMap& fm, const Eigen::MatrixXd& support,
                           int n, double epsilon, double delta, int trials,
                           std::uint64_t seed);

// Monte-Carlo mean of Psi Psi^T Psi Psi^T over feature-map draws.
MomentEstimate mc_fourth_moment(const KernelSpec& kernel, const Eigen::MatrixXd& X,
                                int s, long long draws, std::uint64_t seed,
                                FeatureMode mode = FeatureMode::Unbiased);

// Monte-Carlo mean of (k~' - k')(k~' - k')^T over feature-map draws.
MomentEstimate mc_kernel_vector_cov(const KernelSpec& kernel, const Eigen::MatrixXd& X,
                                    const Eigen::VectorXd& x_test, int s,
                                    long long draws, std::uint64_t seed,
                                    FeatureMode mode = FeatureMode::Unbiased);

// E[Psi Psi^T Psi Psi^T] <= ((s-1)/s) K^2 + (nb/s) K in the PSD order,
// checked against Monte-Carlo noise.
LemmaReport verify_lemma2(const KernelSpec& kernel, const Eigen::MatrixXd& X, int s,
                          long long draws, std::uint64_t seed,
                          FeatureMode mode = FeatureMode::Unbiased);

// E[(k~'-k')(k~'-k')^T] <= (b/s) K - (1/s) k' k'^T in the PSD order, plus
// the unbiasedness sub-check E[k~'] = k'.
LemmaReport verify_lemma3(const KernelSpec& kernel, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& x_test, int s, long long draws,
                          std::uint64_t seed, FeatureMode mode = FeatureMode::Unbiased);

// Sign-feature identity E[(K~ - K)^2] = (nK - K^2)/s on unit-norm rows.
// d = 2 uses deterministic circle quadrature with `nodes` arcs (tolerance
// 1e-6); other dimensions fall back to Monte Carlo within 4 sigma.
LemmaReport verify_sign_identity(const Eigen::MatrixXd& X, int s, int nodes,
                                 long long draws, std::uint64_t seed);

// Mean of f over the circle. Arcs are split at the given breakpoint angles,
// so integrands that are piecewise constant between breakpoints integrate
// exactly; otherwise accuracy is the midpoint rate in `nodes`.
double circle_quadrature(const std::function<double(double)>& f, int nodes,
                         std::span<const double> breakpoints);

// E_v[sgn(x1.v) sgn(x2.v)] for 2-d vectors, by exact arc integration.
double sign_pair_moment_d2(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                           int nodes);

struct MeanStdErr {
  double mean = 0.0;
  double std_err = 0.0;
};

// Mean of the single-feature product psi(x;v) psi(x2;v) over `draws`
// independent v, through the production draw/apply path.
MeanStdErr feature_product_moment(FeatureFamily family, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& x2, double sigma,
                                  long long draws, std::uint64_t seed,
                                  FeatureMode mode = FeatureMode::Unbiased);

}  // namespace rfmkrr
