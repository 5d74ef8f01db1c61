#include "rfmkrr/feature_map.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "rfmkrr/rng.hpp"

namespace rfmkrr {

std::string to_string(FeatureFamily f) {
  switch (f) {
    case FeatureFamily::FourierRbf: return "fourier-rbf";
    case FeatureFamily::FourierLaplace: return "fourier-laplace";
    case FeatureFamily::RandomSign: return "random-sign";
  }
  return "?";
}

std::string to_string(FeatureMode m) {
  return m == FeatureMode::Unbiased ? "unbiased" : "paper-exact";
}

FeatureMode feature_mode_from_string(const std::string& s) {
  if (s == "unbiased") return FeatureMode::Unbiased;
  if (s == "paper-exact") return FeatureMode::PaperExact;
  throw std::invalid_argument("unknown feature mode: " + s);
}

FeatureFamily feature_family_for(KernelFamily k) {
  switch (k) {
    case KernelFamily::Rbf: return FeatureFamily::FourierRbf;
    case KernelFamily::Laplace: return FeatureFamily::FourierLaplace;
    case KernelFamily::AngularSimilarity: return FeatureFamily::RandomSign;
  }
  throw std::logic_error("unreachable");
}

double feature_bound_constant(FeatureFamily family, FeatureMode mode) {
  if (family == FeatureFamily::RandomSign) return 1.0;  // sgn^2 == 1
  return mode == FeatureMode::Unbiased ? 2.0 : 1.0;     // (sqrt(2) cos)^2 vs cos^2
}

namespace {

bool is_fourier(FeatureFamily f) { return f != FeatureFamily::RandomSign; }

double sgn(double v) { return v < 0.0 ? -1.0 : 1.0; }  // sgn(0) := +1

}  // namespace

FeatureMap draw_map(FeatureFamily family, int d, int s, double sigma,
                    std::uint64_t seed, FeatureMode mode) {
  if (d < 1 || s < 1) throw std::invalid_argument("draw_map: d and s must be >= 1");
  if (is_fourier(family) && !(sigma > 0.0))
    throw std::invalid_argument("draw_map: Fourier features need sigma > 0");

  FeatureMap fm;
  fm.family = family;
  fm.mode = mode;
  fm.d = d;
  fm.s = s;
  fm.sigma = sigma;
  fm.seed = seed;
  fm.b = feature_bound_constant(family, mode);
  fm.directions.resize(d, s);
  if (is_fourier(family)) fm.phase.resize(s);

  for (int p = 0; p < s; ++p) {
    Rng rng(seed_combine(seed, static_cast<std::uint64_t>(p)));
    switch (family) {
      case FeatureFamily::FourierRbf:
        for (int k = 0; k < d; ++k) fm.directions(k, p) = rng.gaussian();
        fm.phase(p) = rng.uniform(0.0, 2.0 * M_PI);
        break;
      case FeatureFamily::FourierLaplace:
        for (int k = 0; k < d; ++k) fm.directions(k, p) = rng.cauchy();
        fm.phase(p) = rng.uniform(0.0, 2.0 * M_PI);
        break;
      case FeatureFamily::RandomSign: {
        for (int k = 0; k < d; ++k) fm.directions(k, p) = rng.gaussian();
        const double norm = fm.directions.col(p).norm();
        if (norm == 0.0) throw std::runtime_error("draw_map: zero sphere draw");
        fm.directions.col(p) /= norm;
        break;
      }
    }
  }
  return fm;
}

Eigen::MatrixXd apply_map(const FeatureMap& fm, const Eigen::MatrixXd& X) {
  if (X.cols() != fm.d)
    throw std::invalid_argument("apply_map: input has " + std::to_string(X.cols()) +
                                " columns, map expects " + std::to_string(fm.d));
  Eigen::MatrixXd Z = X * fm.directions;  // n x s
  const double inv_sqrt_s = 1.0 / std::sqrt(static_cast<double>(fm.s));
  if (is_fourier(fm.family)) {
    Z /= fm.sigma;
    Z.rowwise() += fm.phase.transpose();
    const double scale =
        (fm.mode == FeatureMode::Unbiased ? std::sqrt(2.0) : 1.0) * inv_sqrt_s;
    return scale * Z.array().cos().matrix();
  }
  return inv_sqrt_s * Z.unaryExpr([](double v) { return sgn(v); });
}

Eigen::VectorXd apply_map_row(const FeatureMap& fm, const Eigen::VectorXd& x) {
  return apply_map(fm, x.transpose()).row(0).transpose();
}

double single_feature(const FeatureMap& fm, const Eigen::VectorXd& x, int p) {
  if (p < 0 || p >= fm.s) throw std::out_of_range("single_feature: bad column");
  if (x.size() != fm.d) throw std::invalid_argument("single_feature: bad dimension");
  const double z = fm.directions.col(p).dot(x);
  if (is_fourier(fm.family)) {
    const double c = std::cos(z / fm.sigma + fm.phase(p));
    return fm.mode == FeatureMode::Unbiased ? std::sqrt(2.0) * c : c;
  }
  return sgn(z);
}

Eigen::MatrixXd approx_kernel_matrix(const Eigen::MatrixXd& Psi) {
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(Psi.rows(), Psi.rows());
  K.selfadjointView<Eigen::Lower>().rankUpdate(Psi);
  K.triangularView<Eigen::StrictlyUpper>() = K.transpose();
  return K;
}

namespace {

constexpr char kMagic[4] = {'R', 'F', 'M', 'F'};

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

double get_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

void save_feature_map(const FeatureMap& fm, std::ostream& out) {
  out.write(kMagic, 4);
  put_u64(out, 1);  // version
  put_u64(out, static_cast<std::uint64_t>(fm.family));
  put_u64(out, static_cast<std::uint64_t>(fm.mode));
  put_u64(out, static_cast<std::uint64_t>(fm.d));
  put_u64(out, static_cast<std::uint64_t>(fm.s));
  put_u64(out, fm.seed);
  put_f64(out, fm.sigma);
  put_f64(out, fm.b);
  for (int p = 0; p < fm.s; ++p)
    for (int k = 0; k < fm.d; ++k) put_f64(out, fm.directions(k, p));
  if (is_fourier(fm.family))
    for (int p = 0; p < fm.s; ++p) put_f64(out, fm.phase(p));
}

FeatureMap load_feature_map(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("load_feature_map: bad magic");
  if (get_u64(in) != 1) throw std::runtime_error("load_feature_map: bad version");
  FeatureMap fm;
  fm.family = static_cast<FeatureFamily>(get_u64(in));
  fm.mode = static_cast<FeatureMode>(get_u64(in));
  fm.d = static_cast<int>(get_u64(in));
  fm.s = static_cast<int>(get_u64(in));
  fm.seed = get_u64(in);
  fm.sigma = get_f64(in);
  fm.b = get_f64(in);
  if (fm.d < 1 || fm.s < 1) throw std::runtime_error("load_feature_map: bad dims");
  fm.directions.resize(fm.d, fm.s);
  for (int p = 0; p < fm.s; ++p)
    for (int k = 0; k < fm.d; ++k) fm.directions(k, p) = get_f64(in);
  if (is_fourier(fm.family)) {
    fm.phase.resize(fm.s);
    for (int p = 0; p < fm.s; ++p) fm.phase(p) = get_f64(in);
  }
  if (!in) throw std::runtime_error("load_feature_map: truncated stream");
  return fm;
}

}  // namespace rfmkrr
