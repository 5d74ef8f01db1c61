#include "rfmkrr/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "rfmkrr/bounds.hpp"
#include "rfmkrr/rng.hpp"

namespace rfmkrr {

nlohmann::json to_json(const LemmaReport& r) {
  return nlohmann::json{{"lemma", r.lemma},
                        {"pass", r.pass},
                        {"margin", r.margin},
                        {"draws", r.draws},
                        {"seed", r.seed},
                        {"worst_eigenvalue", r.worst_eigenvalue}};
}

namespace {

// Entrywise running mean/variance (Welford).
class MatrixWelford {
 public:
  MatrixWelford(Eigen::Index rows, Eigen::Index cols)
      : mean_(Eigen::MatrixXd::Zero(rows, cols)),
        m2_(Eigen::MatrixXd::Zero(rows, cols)) {}

  void add(const Eigen::MatrixXd& x) {
    ++count_;
    const Eigen::MatrixXd delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta.cwiseProduct(x - mean_);
  }

  MomentEstimate finish(std::uint64_t seed) const {
    if (count_ < 2) throw std::logic_error("MatrixWelford: need at least 2 draws");
    MomentEstimate est;
    est.mean = mean_;
    est.std_err =
        (m2_ / static_cast<double>(count_ - 1) / static_cast<double>(count_))
            .cwiseSqrt();
    est.num_draws = count_;
    est.seed = seed;
    return est;
  }

 private:
  Eigen::MatrixXd mean_, m2_;
  long long count_ = 0;
};

double max_eigenvalue(const Eigen::MatrixXd& S) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

double spectral_norm_sym(const Eigen::MatrixXd& S) {
  const auto ev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly)
          .eigenvalues();
  return std::max(std::abs(ev.minCoeff()), std::abs(ev.maxCoeff()));
}

}  // namespace

Eigen::MatrixXd exact_xi_discrete(const FeatureMap& fm, const Eigen::MatrixXd& support) {
  if (support.rows() < 1) throw std::invalid_argument("exact_xi_discrete: empty support");
  const Eigen::MatrixXd Psi = apply_map(fm, support);
  Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(fm.s, fm.s);
  xi.selfadjointView<Eigen::Lower>().rankUpdate(Psi.transpose(),
                                                1.0 / static_cast<double>(support.rows()));
  xi.triangularView<Eigen::StrictlyUpper>() = xi.transpose();
  return xi;
}

Lemma1Result verify_lemma1(const FeatureMap& fm, const Eigen::MatrixXd& support,
                           int n, double epsilon, double delta, int trials,
                           std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("verify_lemma1: trials must be >= 1");
  Lemma1Result res;
  res.threshold_n = sample_threshold(epsilon, fm.s, fm.b, delta);
  if (n < res.threshold_n)
    throw std::invalid_argument("verify_lemma1: n = " + std::to_string(n) +
                                " is below the sample threshold " +
                                std::to_string(res.threshold_n));
  const Eigen::MatrixXd xi = exact_xi_discrete(fm, support);
  const auto m = static_cast<std::uint64_t>(support.rows());

  int failures = 0;
  Eigen::MatrixXd sample(n, support.cols());
  for (int t = 0; t < trials; ++t) {
    Rng rng(seed_combine(seed, static_cast<std::uint64_t>(t)));
    for (int i = 0; i < n; ++i)
      sample.row(i) = support.row(static_cast<Eigen::Index>(rng.below(m)));
    const Eigen::MatrixXd Psi = apply_map(fm, sample);
    Eigen::MatrixXd emp = Eigen::MatrixXd::Zero(fm.s, fm.s);
    emp.selfadjointView<Eigen::Lower>().rankUpdate(Psi.transpose(),
                                                   1.0 / static_cast<double>(n));
    emp.triangularView<Eigen::StrictlyUpper>() = emp.transpose();
    if (spectral_norm_sym(xi - emp) > epsilon) ++failures;
  }
  res.observed_failure_rate = static_cast<double>(failures) / trials;
  res.rate_allowance =
      delta + 3.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(trials));
  res.pass = res.observed_failure_rate <= res.rate_allowance;
  return res;
}

MomentEstimate mc_fourth_moment(const KernelSpec& kernel, const Eigen::MatrixXd& X,
                                int s, long long draws, std::uint64_t seed,
                                FeatureMode mode) {
  const FeatureFamily family = feature_family_for(kernel.family);
  MatrixWelford acc(X.rows(), X.rows());
  for (long long t = 0; t < draws; ++t) {
    const FeatureMap fm = draw_map(family, static_cast<int>(X.cols()), s, kernel.sigma,
                                   seed_combine(seed, static_cast<std::uint64_t>(t)),
                                   mode);
    const Eigen::MatrixXd B = approx_kernel_matrix(apply_map(fm, X));
    acc.add(B * B);
  }
  return acc.finish(seed);
}

MomentEstimate mc_kernel_vector_cov(const KernelSpec& kernel, const Eigen::MatrixXd& X,
                                    const Eigen::VectorXd& x_test, int s,
                                    long long draws, std::uint64_t seed,
                                    FeatureMode mode) {
  const FeatureFamily family = feature_family_for(kernel.family);
  const Eigen::VectorXd k = kernel_vector(kernel, X, x_test);
  MatrixWelford acc(X.rows(), X.rows());
  for (long long t = 0; t < draws; ++t) {
    const FeatureMap fm = draw_map(family, static_cast<int>(X.cols()), s, kernel.sigma,
                                   seed_combine(seed, static_cast<std::uint64_t>(t)),
                                   mode);
    const Eigen::MatrixXd Psi = apply_map(fm, X);
    const Eigen::VectorXd diff = Psi * apply_map_row(fm, x_test) - k;
    acc.add(diff * diff.transpose());
  }
  return acc.finish(seed);
}

namespace {

// Spectral slack for an entrywise-noisy symmetric n x n estimate: the noise
// matrix has spectral norm at most n times its largest entry.
double noise_allowance(const MomentEstimate& est) {
  return 5.0 * est.std_err.maxCoeff() * static_cast<double>(est.mean.rows());
}

}  // namespace

LemmaReport verify_lemma2(const KernelSpec& kernel, const Eigen::MatrixXd& X, int s,
                          long long draws, std::uint64_t seed, FeatureMode mode) {
  const Eigen::MatrixXd K = kernel_matrix(kernel, X);
  const MomentEstimate est = mc_fourth_moment(kernel, X, s, draws, seed, mode);
  const double b = feature_bound_constant(feature_family_for(kernel.family), mode);
  const double n = static_cast<double>(X.rows());
  const double sd = static_cast<double>(s);
  const Eigen::MatrixXd bound = ((sd - 1.0) / sd) * (K * K) + (n * b / sd) * K;

  LemmaReport rep;
  rep.lemma = "lemma2";
  rep.draws = est.num_draws;
  rep.seed = seed;
  rep.worst_eigenvalue = max_eigenvalue(est.mean - bound);
  rep.margin = noise_allowance(est) - rep.worst_eigenvalue;
  rep.pass = rep.margin >= 0.0;
  return rep;
}

LemmaReport verify_lemma3(const KernelSpec& kernel, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& x_test, int s, long long draws,
                          std::uint64_t seed, FeatureMode mode) {
  const Eigen::MatrixXd K = kernel_matrix(kernel, X);
  const Eigen::VectorXd k = kernel_vector(kernel, X, x_test);
  const double b = feature_bound_constant(feature_family_for(kernel.family), mode);
  const double sd = static_cast<double>(s);
  const Eigen::MatrixXd bound = (b / sd) * K - (1.0 / sd) * (k * k.transpose());

  const MomentEstimate est = mc_kernel_vector_cov(kernel, X, x_test, s, draws, seed, mode);

  // Unbiasedness sub-check: the covariance accumulator already centered at
  // the exact k', so re-estimate the mean of k~' directly.
  const FeatureFamily family = feature_family_for(kernel.family);
  MatrixWelford kacc(X.rows(), 1);
  for (long long t = 0; t < draws; ++t) {
    const FeatureMap fm = draw_map(family, static_cast<int>(X.cols()), s, kernel.sigma,
                                   seed_combine(seed, static_cast<std::uint64_t>(t)),
                                   mode);
    kacc.add(apply_map(fm, X) * apply_map_row(fm, x_test));
  }
  const MomentEstimate kest = kacc.finish(seed);
  const bool unbiased_ok =
      ((kest.mean.col(0) - k).cwiseAbs().array() <= 3.0 * kest.std_err.col(0).array())
          .all();

  LemmaReport rep;
  rep.lemma = "lemma3";
  rep.draws = est.num_draws;
  rep.seed = seed;
  rep.worst_eigenvalue = max_eigenvalue(est.mean - bound);
  rep.margin = noise_allowance(est) - rep.worst_eigenvalue;
  rep.pass = rep.margin >= 0.0 && unbiased_ok;
  return rep;
}

double circle_quadrature(const std::function<double(double)>& f, int nodes,
                         std::span<const double> breakpoints) {
  if (nodes < 1) throw std::invalid_argument("circle_quadrature: nodes must be >= 1");
  constexpr double kTwoPi = 2.0 * M_PI;
  std::vector<double> cuts;
  cuts.reserve(static_cast<std::size_t>(nodes) + breakpoints.size() + 1);
  for (int k = 0; k < nodes; ++k) cuts.push_back(kTwoPi * k / nodes);
  for (double bp : breakpoints) {
    double t = std::fmod(bp, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    cuts.push_back(t);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(kTwoPi);

  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double width = cuts[i + 1] - cuts[i];
    if (width <= 0.0) continue;
    acc += f(cuts[i] + 0.5 * width) * width;
  }
  return acc / kTwoPi;
}

double sign_pair_moment_d2(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                           int nodes) {
  if (x1.size() != 2 || x2.size() != 2)
    throw std::invalid_argument("sign_pair_moment_d2: vectors must be 2-d");
  const double a1 = std::atan2(x1(1), x1(0));
  const double a2 = std::atan2(x2(1), x2(0));
  const double breaks[] = {a1 + M_PI_2, a1 - M_PI_2, a2 + M_PI_2, a2 - M_PI_2};
  auto f = [&](double t) {
    const Eigen::Vector2d v(std::cos(t), std::sin(t));
    const double s1 = x1.dot(v) < 0.0 ? -1.0 : 1.0;
    const double s2 = x2.dot(v) < 0.0 ? -1.0 : 1.0;
    return s1 * s2;
  };
  return circle_quadrature(f, nodes, breaks);
}

LemmaReport verify_sign_identity(const Eigen::MatrixXd& X, int s, int nodes,
                                 long long draws, std::uint64_t seed) {
  const Eigen::Index n = X.rows();
  if (n < 1) throw std::invalid_argument("verify_sign_identity: empty input");
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(X.row(i).norm() - 1.0) > 1e-12)
      throw std::invalid_argument("verify_sign_identity: row " + std::to_string(i) +
                                  " is not unit-norm");
  const KernelSpec angular{KernelFamily::AngularSimilarity, 1.0};
  const Eigen::MatrixXd K = kernel_matrix(angular, X);
  const double nd = static_cast<double>(n);
  const double sd = static_cast<double>(s);
  const Eigen::MatrixXd target = (nd * K - K * K) / sd;

  LemmaReport rep;
  rep.lemma = "sign-identity";
  rep.seed = seed;

  if (X.cols() == 2) {
    // Single-v pair moments by quadrature, then the s-feature expansion:
    // E[K~^2] = ((s-1)/s) Q^2 + (n/s) Q with Q_ij = E[sgn(x_i.v) sgn(x_j.v)],
    // using sgn^2 = 1 to collapse the repeated-feature terms.
    Eigen::MatrixXd Q(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        Q(i, j) = sign_pair_moment_d2(X.row(i).transpose(), X.row(j).transpose(), nodes);
        Q(j, i) = Q(i, j);
      }
    const Eigen::MatrixXd second = ((sd - 1.0) / sd) * (Q * Q) + (nd / sd) * Q;
    const Eigen::MatrixXd observed = second - Q * K - K * Q + K * K;
    rep.draws = nodes;
    rep.worst_eigenvalue = (observed - target).cwiseAbs().maxCoeff();
    rep.margin = 1e-6 - rep.worst_eigenvalue;
    rep.pass = rep.margin >= 0.0;
    return rep;
  }

  MatrixWelford acc(n, n);
  for (long long t = 0; t < draws; ++t) {
    const FeatureMap fm =
        draw_map(FeatureFamily::RandomSign, static_cast<int>(X.cols()), s, 1.0,
                 seed_combine(seed, static_cast<std::uint64_t>(t)));
    const Eigen::MatrixXd diff = approx_kernel_matrix(apply_map(fm, X)) - K;
    acc.add(diff * diff);
  }
  const MomentEstimate est = acc.finish(seed);
  const Eigen::MatrixXd dev = (est.mean - target).cwiseAbs();
  rep.draws = est.num_draws;
  rep.worst_eigenvalue = dev.maxCoeff();
  rep.margin = (4.0 * est.std_err - dev).minCoeff();
  rep.pass = rep.margin >= 0.0;
  return rep;
}

MeanStdErr feature_product_moment(FeatureFamily family, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& x2, double sigma,
                                  long long draws, std::uint64_t seed,
                                  FeatureMode mode) {
  if (draws < 2) throw std::invalid_argument("feature_product_moment: need draws >= 2");
  // One map with `draws` columns is `draws` i.i.d. feature directions; the
  // 1/sqrt(s) normalization cancels after multiplying the product by s.
  const FeatureMap fm =
      draw_map(family, static_cast<int>(x.size()), static_cast<int>(draws), sigma,
               seed, mode);
  Eigen::MatrixXd pair(2, x.size());
  pair.row(0) = x.transpose();
  pair.row(1) = x2.transpose();
  const Eigen::MatrixXd Psi = apply_map(fm, pair);
  const Eigen::ArrayXd prod =
      static_cast<double>(draws) *
      (Psi.row(0).array() * Psi.row(1).array()).transpose();
  MeanStdErr out;
  out.mean = prod.mean();
  const double var =
      (prod - out.mean).square().sum() / static_cast<double>(draws - 1);
  out.std_err = std::sqrt(var / static_cast<double>(draws));
  return out;
}

}  // namespace rfmkrr
