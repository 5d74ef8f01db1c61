#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "rfmkrr/kernel.hpp"

namespace rfmkrr {

enum class FeatureFamily { FourierRbf, FourierLaplace, RandomSign };

// Fourier feature scaling convention. Unbiased multiplies the cosine by
// sqrt(2) so products of single features estimate the kernel itself
// (bound constant b = 2). PaperExact keeps the bare cosine, whose products
// estimate kappa/2; useful for replicating experiments that used it.
enum class FeatureMode { Unbiased, PaperExact };

std::string to_string(FeatureFamily f);
std::string to_string(FeatureMode m);
FeatureMode feature_mode_from_string(const std::string& s);

// Matching feature family for each kernel family.
FeatureFamily feature_family_for(KernelFamily k);

// Almost-sure bound on psi^2 for a family/mode pair: 2 for unbiased Fourier,
// 1 for bare-cosine Fourier and for signs.
double feature_bound_constant(FeatureFamily family, FeatureMode mode);

// Frozen random parameters of one draw of s feature directions. Column p of
// `directions` is derived from an RNG substream seeded by (seed, p), so
// enlarging s extends a draw without disturbing earlier columns.
struct FeatureMap {
  FeatureFamily family = FeatureFamily::FourierRbf;
  FeatureMode mode = FeatureMode::Unbiased;
  int d = 0;
  int s = 0;
  double sigma = 1.0;           // Fourier only
  std::uint64_t seed = 0;
  double b = 2.0;               // almost-sure bound on psi^2
  Eigen::MatrixXd directions;   // d x s; unit columns for RandomSign
  Eigen::VectorXd phase;        // s, in [0, 2pi); Fourier only
};

FeatureMap draw_map(FeatureFamily family, int d, int s, double sigma,
                    std::uint64_t seed, FeatureMode mode = FeatureMode::Unbiased);

// n x s matrix of feature vectors, one row per input row, including the
// 1/sqrt(s) normalization. Rows have squared norm <= b.
Eigen::MatrixXd apply_map(const FeatureMap& fm, const Eigen::MatrixXd& X);

Eigen::VectorXd apply_map_row(const FeatureMap& fm, const Eigen::VectorXd& x);

// One unnormalized feature psi(x; v_p) (no 1/sqrt(s)).
double single_feature(const FeatureMap& fm, const Eigen::VectorXd& x, int p);

// Approximate kernel matrix Psi Psi^T; an exactly symmetric PSD Gram matrix.
Eigen::MatrixXd approx_kernel_matrix(const Eigen::MatrixXd& Psi);

void save_feature_map(const FeatureMap& fm, std::ostream& out);
FeatureMap load_feature_map(std::istream& in);

}  // namespace rfmkrr
