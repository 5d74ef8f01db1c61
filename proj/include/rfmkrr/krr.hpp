#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <variant>

#include "rfmkrr/feature_map.hpp"
#include "rfmkrr/kernel.hpp"

namespace rfmkrr {

// Exact kernel ridge regression. Self-contained: keeps the training inputs
// so prediction can form kernel vectors.
struct KrrModel {
  KernelSpec kernel;
  double lambda = 0.0;
  Eigen::MatrixXd X_train;
  Eigen::VectorXd alpha;  // (K + n lambda I)^{-1} y
};

// Ridge regression on s random features; primal weights only.
struct RfmModel {
  FeatureMap fm;
  double lambda = 0.0;
  Eigen::VectorXd w;  // (Psi^T Psi + n lambda I_s)^{-1} Psi^T y
};

KrrModel krr_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const KernelSpec& kernel, double lambda);

Eigen::VectorXd krr_predict(const KrrModel& model, const Eigen::MatrixXd& X_test);

// Solves the s x s primal system; O(n s^2 + s^3), never forms an n x n matrix.
RfmModel rfm_fit(const Eigen::MatrixXd& Psi, const Eigen::VectorXd& y, double lambda,
                 FeatureMap fm);

RfmModel rfm_fit_x(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                   const FeatureMap& fm);

Eigen::VectorXd rfm_predict(const RfmModel& model, const Eigen::MatrixXd& X_test);

// n x n dual route through the approximate kernel matrix. Cubic in n; kept
// as a verification path for rfm_predict, not for production prediction.
Eigen::VectorXd rfm_predict_dual(const FeatureMap& fm, const Eigen::MatrixXd& X_train,
                                 const Eigen::VectorXd& y, double lambda,
                                 const Eigen::MatrixXd& X_test);

void save_model(const KrrModel& model, std::ostream& out);
void save_model(const RfmModel& model, std::ostream& out);
std::variant<KrrModel, RfmModel> load_model(std::istream& in);

}  // namespace rfmkrr
