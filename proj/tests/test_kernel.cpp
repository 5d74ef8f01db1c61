#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstring>
#include <sstream>

#include "rfmkrr/kernel.hpp"
#include "test_support.hpp"

using namespace rfmkrr;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_SUITE("kernel") {

TEST_CASE("unit self-similarity") {
  rfmkrr::Rng rng(1);
  const Eigen::VectorXd x = test_support::random_vector(4, rng);
  CHECK(kernel_eval({KernelFamily::Rbf, 0.7}, x, x) == doctest::Approx(1.0));
  CHECK(kernel_eval({KernelFamily::Laplace, 0.7}, x, x) == doctest::Approx(1.0));
  CHECK(kernel_eval({KernelFamily::AngularSimilarity, 1.0}, x, x) ==
        doctest::Approx(1.0));
}

TEST_CASE("angular antipodal pair gives -1") {
  const auto x = vec2(0.3, -0.4);
  CHECK(kernel_eval({KernelFamily::AngularSimilarity, 1.0}, x, Eigen::VectorXd(-x)) ==
        doctest::Approx(-1.0));
}

TEST_CASE("scalar evaluations against hand-computed values") {
  // Both distances are 2 under their respective norms, so both kernels
  // evaluate to exp(-1).
  CHECK(kernel_eval({KernelFamily::Rbf, 1.0}, vec2(1, 0), vec2(0, 1)) ==
        doctest::Approx(0.36787944117144233).epsilon(1e-12));
  CHECK(kernel_eval({KernelFamily::Laplace, 2.0}, vec2(1, 0), vec2(0, 1)) ==
        doctest::Approx(0.36787944117144233).epsilon(1e-12));
}

TEST_CASE("angular kernel at 60 degrees is 1/3") {
  const auto x = vec2(1.0, 0.0);
  const auto x2 = vec2(std::cos(M_PI / 3), std::sin(M_PI / 3));
  CHECK(kernel_eval({KernelFamily::AngularSimilarity, 1.0}, x, x2) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("zero vector under the angular kernel is an error") {
  CHECK_THROWS_AS(
      kernel_eval({KernelFamily::AngularSimilarity, 1.0}, vec2(0, 0), vec2(1, 0)),
      std::invalid_argument);
}

TEST_CASE("symmetry is exact") {
  rfmkrr::Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd x = test_support::random_vector(3, rng);
    const Eigen::VectorXd x2 = test_support::random_vector(3, rng);
    for (KernelFamily family : {KernelFamily::Rbf, KernelFamily::Laplace,
                                KernelFamily::AngularSimilarity}) {
      const KernelSpec spec{family, 1.3};
      CHECK(kernel_eval(spec, x, x2) == kernel_eval(spec, x2, x));
    }
  }
}

TEST_CASE("kernel_matrix trivial cases") {
  Eigen::MatrixXd one(1, 2);
  one << 0.5, -0.5;
  const auto K1 = kernel_matrix({KernelFamily::Rbf, 1.0}, one);
  CHECK(K1.rows() == 1);
  CHECK(K1(0, 0) == 1.0);

  Eigen::MatrixXd dup(2, 2);
  dup << 0.5, -0.5, 0.5, -0.5;
  const auto K2 = kernel_matrix({KernelFamily::Laplace, 1.0}, dup);
  CHECK((K2 - Eigen::MatrixXd::Ones(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("kernel_matrix matches the entrywise brute-force loop") {
  rfmkrr::Rng rng(3);
  const Eigen::MatrixXd X = test_support::random_matrix(3, 4, rng);
  for (KernelFamily family : {KernelFamily::Rbf, KernelFamily::Laplace,
                              KernelFamily::AngularSimilarity}) {
    const KernelSpec spec{family, 0.9};
    const auto K = kernel_matrix(spec, X);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double expected =
            i == j ? 1.0
                   : kernel_eval(spec, X.row(i).transpose(), X.row(j).transpose());
        CHECK(K(i, j) == doctest::Approx(expected).epsilon(1e-12));
      }
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("kernel_matrix reports the offending row for angular zero vectors") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 2);
  X.row(2).setZero();
  const auto msg = test_support::thrown_message(
      [&] { kernel_matrix({KernelFamily::AngularSimilarity, 1.0}, X); });
  CHECK(msg.find("row 2") != std::string::npos);
}

TEST_CASE("kernel_vector agrees with the matrix on an appended row") {
  rfmkrr::Rng rng(4);
  const Eigen::MatrixXd X = test_support::random_matrix(5, 3, rng);
  const Eigen::VectorXd x = test_support::random_vector(3, rng);
  Eigen::MatrixXd ext(6, 3);
  ext << X, x.transpose();
  for (KernelFamily family : {KernelFamily::Rbf, KernelFamily::Laplace,
                              KernelFamily::AngularSimilarity}) {
    const KernelSpec spec{family, 1.1};
    const Eigen::VectorXd k = kernel_vector(spec, X, x);
    const auto K = kernel_matrix(spec, ext);
    CHECK((k - K.topRightCorner(5, 1)).cwiseAbs().maxCoeff() < 1e-12);
  }
  // One training row: a single kernel_eval.
  const Eigen::VectorXd k1 =
      kernel_vector({KernelFamily::Rbf, 1.0}, X.topRows(1), x);
  CHECK(k1.size() == 1);
  CHECK(k1(0) == doctest::Approx(kernel_eval({KernelFamily::Rbf, 1.0},
                                             X.row(0).transpose(), x)));
  // A test point equal to training row 2 produces a unit entry.
  const Eigen::VectorXd kdup =
      kernel_vector({KernelFamily::Rbf, 1.0}, X, X.row(2).transpose());
  CHECK(kdup(2) == doctest::Approx(1.0));
}

TEST_CASE("kernel matrices are PSD with bounded spectral norm") {
  rfmkrr::Rng rng(5);
  const Eigen::MatrixXd X = test_support::random_matrix(30, 4, rng);
  for (KernelFamily family : {KernelFamily::Rbf, KernelFamily::Laplace,
                              KernelFamily::AngularSimilarity}) {
    const auto K = kernel_matrix({family, 1.2}, X);
    const Eigen::VectorXd ev =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K, Eigen::EigenvaluesOnly)
            .eigenvalues();
    const double norm = std::max(std::abs(ev.minCoeff()), std::abs(ev.maxCoeff()));
    CHECK(ev.minCoeff() >= -1e-8 * norm);
    CHECK(norm <= static_cast<double>(X.rows()) + 1e-9);
  }
}

TEST_CASE("bandwidth heuristics by hand enumeration") {
  Eigen::MatrixXd X(2, 1);
  X << 0.0, 2.0;
  // Ordered pairs (0,0),(0,2),(2,0),(2,2): squared distances 0,4,4,0.
  CHECK(bandwidth_heuristic(KernelFamily::Rbf, X) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(bandwidth_heuristic(KernelFamily::Laplace, X) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("degenerate bandwidth is an error") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(4, 2);
  const auto msg = test_support::thrown_message(
      [&] { bandwidth_heuristic(KernelFamily::Rbf, X); });
  CHECK(msg.find("degenerate bandwidth") != std::string::npos);
}

TEST_CASE("dimension mismatch is an error") {
  CHECK_THROWS_AS(kernel_eval({KernelFamily::Rbf, 1.0}, vec2(1, 0),
                              Eigen::VectorXd::Ones(3)),
                  std::invalid_argument);
}

TEST_CASE("binary dump is row-major f64 with a shape header") {
  Eigen::MatrixXd M(2, 3);
  M << 1, 2, 3, 4, 5, 6;
  std::ostringstream out;
  write_matrix_f64(M, out);
  const std::string blob = out.str();
  REQUIRE(blob.size() == 2 * sizeof(std::uint64_t) + 6 * sizeof(double));
  std::uint64_t rows = 0, cols = 0;
  std::memcpy(&rows, blob.data(), 8);
  std::memcpy(&cols, blob.data() + 8, 8);
  CHECK(rows == 2);
  CHECK(cols == 3);
  double v = 0;
  std::memcpy(&v, blob.data() + 16 + 3 * 8, 8);  // row 1, col 0
  CHECK(v == 4.0);
}

}  // TEST_SUITE
