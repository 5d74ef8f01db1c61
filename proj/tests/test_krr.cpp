#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rfmkrr/krr.hpp"
#include "test_support.hpp"

using namespace rfmkrr;

TEST_SUITE("krr") {

TEST_CASE("single training point has a closed form") {
  Eigen::MatrixXd X(1, 2);
  X << 0.3, -0.1;
  Eigen::VectorXd y(1);
  y << 2.0;
  const double lambda = 0.5;
  const auto model = krr_fit(X, y, {KernelFamily::Rbf, 1.0}, lambda);
  // K = [1], n = 1: alpha = y / (1 + lambda).
  CHECK(model.alpha(0) == doctest::Approx(2.0 / 1.5).epsilon(1e-14));
  const Eigen::VectorXd pred = krr_predict(model, X);
  CHECK(pred(0) == doctest::Approx(2.0 / 1.5).epsilon(1e-14));
}

TEST_CASE("zero targets give zero everywhere") {
  rfmkrr::Rng rng(1);
  const Eigen::MatrixXd X = test_support::random_matrix(6, 3, rng);
  const auto model = krr_fit(X, Eigen::VectorXd::Zero(6), {KernelFamily::Laplace, 1.0},
                             0.1);
  CHECK(model.alpha.cwiseAbs().maxCoeff() == 0.0);
  CHECK(krr_predict(model, X).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("huge regularization flattens predictions") {
  rfmkrr::Rng rng(2);
  const Eigen::MatrixXd X = test_support::random_matrix(8, 2, rng);
  const Eigen::VectorXd y = test_support::random_vector(8, rng);
  const double lambda = 1e9;
  const auto model = krr_fit(X, y, {KernelFamily::Rbf, 1.0}, lambda);
  const Eigen::VectorXd pred = krr_predict(model, X);
  // |k'^T alpha| <= ||k'|| ||y|| / (n lambda)
  const double cap = std::sqrt(8.0) * y.norm() / (8.0 * lambda);
  CHECK(pred.cwiseAbs().maxCoeff() <= cap);
}

TEST_CASE("fit residual invariant") {
  rfmkrr::Rng rng(3);
  const Eigen::MatrixXd X = test_support::random_matrix(20, 3, rng);
  const Eigen::VectorXd y = test_support::random_vector(20, rng);
  const double lambda = 0.05;
  const auto model = krr_fit(X, y, {KernelFamily::Rbf, 1.2}, lambda);
  const Eigen::MatrixXd K = kernel_matrix(model.kernel, X);
  const Eigen::VectorXd resid =
      (K + 20.0 * lambda * Eigen::MatrixXd::Identity(20, 20)) * model.alpha - y;
  CHECK(resid.norm() / y.norm() <= 1e-8);
}

TEST_CASE("matches the naive-inverse solve") {
  rfmkrr::Rng rng(4);
  const Eigen::MatrixXd X = test_support::random_matrix(5, 3, rng);
  const Eigen::VectorXd y = test_support::random_vector(5, rng);
  const Eigen::MatrixXd T = test_support::random_matrix(4, 3, rng);
  const double lambda = 0.2;
  const KernelSpec spec{KernelFamily::Rbf, 0.9};
  const auto model = krr_fit(X, y, spec, lambda);
  const Eigen::MatrixXd K = kernel_matrix(spec, X);
  const Eigen::VectorXd alpha_naive =
      (K + 5.0 * lambda * Eigen::MatrixXd::Identity(5, 5)).inverse() * y;
  CHECK((model.alpha - alpha_naive).cwiseAbs().maxCoeff() <= 1e-8);
  const Eigen::VectorXd pred = krr_predict(model, T);
  const Eigen::VectorXd pred_naive = kernel_cross(spec, T, X) * alpha_naive;
  CHECK((pred - pred_naive).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("empty test set gives an empty vector") {
  rfmkrr::Rng rng(5);
  const Eigen::MatrixXd X = test_support::random_matrix(3, 2, rng);
  const auto model =
      krr_fit(X, test_support::random_vector(3, rng), {KernelFamily::Rbf, 1.0}, 0.1);
  CHECK(krr_predict(model, Eigen::MatrixXd(0, 2)).size() == 0);
}

TEST_CASE("rfm closed forms") {
  const auto fm = draw_map(FeatureFamily::FourierRbf, 2, 1, 1.0, 7);
  rfmkrr::Rng rng(6);
  const Eigen::MatrixXd X = test_support::random_matrix(4, 2, rng);
  const Eigen::MatrixXd Psi = apply_map(fm, X);
  const double lambda = 0.3;

  SUBCASE("zero targets") {
    const auto model = rfm_fit(Psi, Eigen::VectorXd::Zero(4), lambda, fm);
    CHECK(model.w.cwiseAbs().maxCoeff() == 0.0);
    CHECK(rfm_predict(model, X).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("s = 1 scalar solution") {
    const Eigen::VectorXd y = test_support::random_vector(4, rng);
    const auto model = rfm_fit(Psi, y, lambda, fm);
    const double expected =
        Psi.col(0).dot(y) / (Psi.col(0).squaredNorm() + 4.0 * lambda);
    CHECK(model.w(0) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("rfm matches the naive-inverse solve") {
  const auto fm = draw_map(FeatureFamily::FourierLaplace, 2, 3, 1.5, 8);
  rfmkrr::Rng rng(7);
  const Eigen::MatrixXd X = test_support::random_matrix(6, 2, rng);
  const Eigen::VectorXd y = test_support::random_vector(6, rng);
  const Eigen::MatrixXd Psi = apply_map(fm, X);
  const double lambda = 0.15;
  const auto model = rfm_fit(Psi, y, lambda, fm);
  const Eigen::VectorXd w_naive =
      (Psi.transpose() * Psi + 6.0 * lambda * Eigen::MatrixXd::Identity(3, 3))
          .inverse() *
      (Psi.transpose() * y);
  CHECK((model.w - w_naive).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("rfm fit residual invariant") {
  const auto fm = draw_map(FeatureFamily::FourierRbf, 3, 10, 1.0, 9);
  rfmkrr::Rng rng(8);
  const Eigen::MatrixXd X = test_support::random_matrix(25, 3, rng);
  const Eigen::VectorXd y = test_support::random_vector(25, rng);
  const double lambda = 0.02;
  const auto model = rfm_fit_x(X, y, lambda, fm);
  const Eigen::MatrixXd Psi = apply_map(fm, X);
  const Eigen::VectorXd rhs = Psi.transpose() * y;
  const Eigen::VectorXd resid =
      (Psi.transpose() * Psi + 25.0 * lambda * Eigen::MatrixXd::Identity(10, 10)) *
          model.w -
      rhs;
  CHECK(resid.norm() / rhs.norm() <= 1e-8);
}

TEST_CASE("primal and dual predictions coincide") {
  rfmkrr::Rng rng(9);
  const Eigen::MatrixXd X = test_support::random_matrix(8, 4, rng);
  const Eigen::VectorXd y = test_support::random_vector(8, rng);
  const Eigen::MatrixXd T = test_support::random_matrix(3, 4, rng);
  const double lambda = 0.1;
  const auto fm = draw_map(FeatureFamily::FourierRbf, 4, 5, 1.0, 10);
  const auto model = rfm_fit_x(X, y, lambda, fm);
  const Eigen::VectorXd primal = rfm_predict(model, T);
  const Eigen::VectorXd dual = rfm_predict_dual(fm, X, y, lambda, T);
  CHECK((primal - dual).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("primal-dual equivalence across kernels and sizes") {
  rfmkrr::Rng rng(10);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(rng.below(49));
    const int s = 1 + static_cast<int>(rng.below(20));
    const int d = 2 + static_cast<int>(rng.below(4));
    const FeatureFamily family =
        t % 3 == 0 ? FeatureFamily::FourierRbf
                   : (t % 3 == 1 ? FeatureFamily::FourierLaplace
                                 : FeatureFamily::RandomSign);
    const Eigen::MatrixXd X = test_support::random_matrix(n, d, rng);
    const Eigen::VectorXd y = test_support::random_vector(n, rng);
    const Eigen::MatrixXd T = test_support::random_matrix(4, d, rng);
    const double lambda = 0.01 + rng.uniform();
    const auto fm = draw_map(family, d, s, 1.0 + rng.uniform(), seed_combine(77, t));
    const auto model = rfm_fit_x(X, y, lambda, fm);
    const Eigen::VectorXd primal = rfm_predict(model, T);
    const Eigen::VectorXd dual = rfm_predict_dual(fm, X, y, lambda, T);
    REQUIRE((primal - dual).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("explicit-feature ridge agrees with the kernel route") {
  // The identity chain behind both prediction formulas, checked on a dense
  // random feature matrix with transparent inverses on both sides.
  rfmkrr::Rng rng(11);
  const int n = 12, m = 5;
  const Eigen::MatrixXd Phi = test_support::random_matrix(n, m, rng);
  const Eigen::VectorXd y = test_support::random_vector(n, rng);
  const Eigen::VectorXd phi_test = test_support::random_vector(m, rng);
  const double n_lambda = n * 0.07;
  const Eigen::VectorXd w =
      (Phi.transpose() * Phi + n_lambda * Eigen::MatrixXd::Identity(m, m)).inverse() *
      Phi.transpose() * y;
  const double primal = phi_test.dot(w);
  const Eigen::VectorXd k = Phi * phi_test;
  const Eigen::VectorXd alpha =
      (Phi * Phi.transpose() + n_lambda * Eigen::MatrixXd::Identity(n, n)).inverse() *
      y;
  CHECK(primal == doctest::Approx(k.dot(alpha)).epsilon(1e-10));
}

TEST_CASE("prediction magnitude bound") {
  rfmkrr::Rng rng(12);
  const Eigen::MatrixXd X = test_support::random_matrix(10, 3, rng);
  const Eigen::VectorXd y = test_support::random_vector(10, rng);
  const Eigen::MatrixXd T = test_support::random_matrix(50, 3, rng);
  const auto fm = draw_map(FeatureFamily::FourierRbf, 3, 6, 1.0, 13);
  const auto model = rfm_fit_x(X, y, 0.05, fm);
  const double cap = std::sqrt(fm.b) * model.w.norm() * (1.0 + 1e-12);
  const Eigen::VectorXd pred = rfm_predict(model, T);
  CHECK(pred.cwiseAbs().maxCoeff() <= cap);
}

TEST_CASE("squared gap shrinks like 1/s") {
  // Mean over seeds of the squared prediction gap at s and 4s; the ratio
  // should sit near 1/4 (the 1/s rate), within +-50%.
  rfmkrr::Rng rng(13);
  const int n = 64, d = 3;
  const Eigen::MatrixXd X = test_support::random_matrix(n, d, rng);
  const Eigen::VectorXd y = test_support::random_vector(n, rng);
  Eigen::MatrixXd T(1, d);
  T.row(0) = test_support::random_vector(d, rng).transpose();
  const double lambda = 0.1;
  const KernelSpec spec{KernelFamily::Rbf, 1.5};
  const auto exact = krr_fit(X, y, spec, lambda);
  const double f = krr_predict(exact, T)(0);

  auto mean_gap = [&](int s) {
    double acc = 0.0;
    for (int t = 0; t < 50; ++t) {
      const auto fm = draw_map(FeatureFamily::FourierRbf, d, s, spec.sigma,
                               seed_combine(500, s, t));
      const auto model = rfm_fit_x(X, y, lambda, fm);
      const double g = rfm_predict(model, T)(0) - f;
      acc += g * g;
    }
    return acc / 50.0;
  };
  const double ratio = mean_gap(128) / mean_gap(32);
  CHECK(ratio >= 0.125);
  CHECK(ratio <= 0.375);
}

TEST_CASE("model serialization round-trips") {
  rfmkrr::Rng rng(14);
  const Eigen::MatrixXd X = test_support::random_matrix(5, 2, rng);
  const Eigen::VectorXd y = test_support::random_vector(5, rng);
  const Eigen::MatrixXd T = test_support::random_matrix(3, 2, rng);

  const auto krr = krr_fit(X, y, {KernelFamily::Laplace, 1.1}, 0.2);
  std::stringstream buf;
  save_model(krr, buf);
  const auto loaded = load_model(buf);
  REQUIRE(std::holds_alternative<KrrModel>(loaded));
  CHECK((krr_predict(std::get<KrrModel>(loaded), T) - krr_predict(krr, T))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  const auto fm = draw_map(FeatureFamily::RandomSign, 2, 4, 1.0, 15);
  const auto rfm = rfm_fit_x(X, y, 0.2, fm);
  std::stringstream buf2;
  save_model(rfm, buf2);
  const auto loaded2 = load_model(buf2);
  REQUIRE(std::holds_alternative<RfmModel>(loaded2));
  CHECK((rfm_predict(std::get<RfmModel>(loaded2), T) - rfm_predict(rfm, T))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("parameter validation") {
  rfmkrr::Rng rng(15);
  const Eigen::MatrixXd X = test_support::random_matrix(3, 2, rng);
  const Eigen::VectorXd y = test_support::random_vector(3, rng);
  CHECK_THROWS_AS(krr_fit(X, y, {KernelFamily::Rbf, 1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(krr_fit(X, y.head(2), {KernelFamily::Rbf, 1.0}, 0.1),
                  std::invalid_argument);
  const auto model = krr_fit(X, y, {KernelFamily::Rbf, 1.0}, 0.1);
  CHECK_THROWS_AS(krr_predict(model, Eigen::MatrixXd::Ones(2, 5)),
                  std::invalid_argument);
}

}  // TEST_SUITE
