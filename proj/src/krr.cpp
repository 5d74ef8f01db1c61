#include "rfmkrr/krr.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace rfmkrr {

namespace {

// SPD solve of (S + n lambda I) x = rhs, where S is symmetric PSD up to
// rounding; lambda > 0 keeps the system away from singularity.
Eigen::VectorXd ridge_solve(Eigen::MatrixXd S, double n_lambda,
                            const Eigen::VectorXd& rhs, const char* who) {
  S.diagonal().array() += n_lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    S.diagonal().array() -= n_lambda;
    const double min_eig =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly)
            .eigenvalues()
            .minCoeff();
    throw std::runtime_error(std::string(who) +
                             ": Cholesky factorization failed; smallest eigenvalue " +
                             std::to_string(min_eig));
  }
  return llt.solve(rhs);
}

}  // namespace

KrrModel krr_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const KernelSpec& kernel, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("krr_fit: lambda must be positive");
  if (X.rows() != y.size()) throw std::invalid_argument("krr_fit: X/y size mismatch");
  if (X.rows() < 1) throw std::invalid_argument("krr_fit: empty training set");
  KrrModel model;
  model.kernel = kernel;
  model.lambda = lambda;
  model.X_train = X;
  const double n_lambda = static_cast<double>(X.rows()) * lambda;
  model.alpha = ridge_solve(kernel_matrix(kernel, X), n_lambda, y, "krr_fit");
  return model;
}

Eigen::VectorXd krr_predict(const KrrModel& model, const Eigen::MatrixXd& X_test) {
  if (X_test.rows() == 0) return Eigen::VectorXd(0);
  if (X_test.cols() != model.X_train.cols())
    throw std::invalid_argument("krr_predict: dimension mismatch");
  // Blocked so the cross-kernel never materializes at full test size.
  constexpr Eigen::Index kBlock = 512;
  Eigen::VectorXd pred(X_test.rows());
  for (Eigen::Index at = 0; at < X_test.rows(); at += kBlock) {
    const Eigen::Index len = std::min(kBlock, X_test.rows() - at);
    pred.segment(at, len) =
        kernel_cross(model.kernel, X_test.middleRows(at, len), model.X_train) *
        model.alpha;
  }
  return pred;
}

RfmModel rfm_fit(const Eigen::MatrixXd& Psi, const Eigen::VectorXd& y, double lambda,
                 FeatureMap fm) {
  if (!(lambda > 0.0)) throw std::invalid_argument("rfm_fit: lambda must be positive");
  if (Psi.rows() != y.size()) throw std::invalid_argument("rfm_fit: Psi/y size mismatch");
  if (Psi.cols() != fm.s) throw std::invalid_argument("rfm_fit: Psi/map mismatch");
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(Psi.cols(), Psi.cols());
  G.selfadjointView<Eigen::Lower>().rankUpdate(Psi.transpose());
  G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
  const double n_lambda = static_cast<double>(Psi.rows()) * lambda;
  RfmModel model;
  model.lambda = lambda;
  model.w = ridge_solve(std::move(G), n_lambda, Psi.transpose() * y, "rfm_fit");
  model.fm = std::move(fm);
  return model;
}

RfmModel rfm_fit_x(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                   const FeatureMap& fm) {
  return rfm_fit(apply_map(fm, X), y, lambda, fm);
}

Eigen::VectorXd rfm_predict(const RfmModel& model, const Eigen::MatrixXd& X_test) {
  if (X_test.rows() == 0) return Eigen::VectorXd(0);
  return apply_map(model.fm, X_test) * model.w;
}

Eigen::VectorXd rfm_predict_dual(const FeatureMap& fm, const Eigen::MatrixXd& X_train,
                                 const Eigen::VectorXd& y, double lambda,
                                 const Eigen::MatrixXd& X_test) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("rfm_predict_dual: lambda must be positive");
  const Eigen::MatrixXd Psi = apply_map(fm, X_train);
  const double n_lambda = static_cast<double>(X_train.rows()) * lambda;
  const Eigen::VectorXd alpha =
      ridge_solve(approx_kernel_matrix(Psi), n_lambda, y, "rfm_predict_dual");
  if (X_test.rows() == 0) return Eigen::VectorXd(0);
  // k~' for each test row is Psi psi(x'), stacked: Psi_test Psi^T.
  return apply_map(fm, X_test) * (Psi.transpose() * alpha);
}

namespace {

constexpr char kMagic[4] = {'R', 'F', 'M', 'K'};
constexpr std::uint64_t kKindKrr = 1;
constexpr std::uint64_t kKindRfm = 2;

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_vec(std::ostream& out, const Eigen::VectorXd& v) {
  put_u64(out, static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v(i));
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

Eigen::VectorXd get_vec(std::istream& in) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(get_u64(in)));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = get_f64(in);
  return v;
}

}  // namespace

void save_model(const KrrModel& model, std::ostream& out) {
  out.write(kMagic, 4);
  put_u64(out, kKindKrr);
  put_u64(out, static_cast<std::uint64_t>(model.kernel.family));
  put_f64(out, model.kernel.sigma);
  put_f64(out, model.lambda);
  put_u64(out, static_cast<std::uint64_t>(model.X_train.rows()));
  put_u64(out, static_cast<std::uint64_t>(model.X_train.cols()));
  for (Eigen::Index i = 0; i < model.X_train.rows(); ++i)
    for (Eigen::Index j = 0; j < model.X_train.cols(); ++j)
      put_f64(out, model.X_train(i, j));
  put_vec(out, model.alpha);
}

void save_model(const RfmModel& model, std::ostream& out) {
  out.write(kMagic, 4);
  put_u64(out, kKindRfm);
  put_f64(out, model.lambda);
  save_feature_map(model.fm, out);
  put_vec(out, model.w);
}

std::variant<KrrModel, RfmModel> load_model(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("load_model: bad magic");
  const std::uint64_t kind = get_u64(in);
  if (kind == kKindKrr) {
    KrrModel model;
    model.kernel.family = static_cast<KernelFamily>(get_u64(in));
    model.kernel.sigma = get_f64(in);
    model.lambda = get_f64(in);
    const auto rows = static_cast<Eigen::Index>(get_u64(in));
    const auto cols = static_cast<Eigen::Index>(get_u64(in));
    model.X_train.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) model.X_train(i, j) = get_f64(in);
    model.alpha = get_vec(in);
    if (!in || model.alpha.size() != rows)
      throw std::runtime_error("load_model: truncated or inconsistent KRR blob");
    return model;
  }
  if (kind == kKindRfm) {
    RfmModel model;
    model.lambda = get_f64(in);
    model.fm = load_feature_map(in);
    model.w = get_vec(in);
    if (!in || model.w.size() != model.fm.s)
      throw std::runtime_error("load_model: truncated or inconsistent RFM blob");
    return model;
  }
  throw std::runtime_error("load_model: unknown model kind");
}

}  // namespace rfmkrr
