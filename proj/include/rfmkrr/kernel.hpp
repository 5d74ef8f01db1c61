#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

namespace rfmkrr {

enum class KernelFamily { Rbf, Laplace, AngularSimilarity };

std::string to_string(KernelFamily f);
KernelFamily kernel_family_from_string(const std::string& s);

// Bandwidth sigma is ignored by the angular similarity kernel.
struct KernelSpec {
  KernelFamily family = KernelFamily::Rbf;
  double sigma = 1.0;

  void validate() const;
};

// rbf:     exp(-||x-x'||_2^2 / (2 sigma^2))
// laplace: exp(-||x-x'||_1 / sigma)
// angular: (2/pi) asin(x.x' / (||x|| ||x'||)),  both vectors nonzero
double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& x2);

// Symmetric unit-diagonal n x n Gram matrix of the rows of X.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X);

// Pairwise kernels between rows of A (na) and rows of B (nb), na x nb.
Eigen::MatrixXd kernel_cross(const KernelSpec& spec, const Eigen::MatrixXd& A,
                             const Eigen::MatrixXd& B);

Eigen::VectorXd kernel_vector(const KernelSpec& spec, const Eigen::MatrixXd& X_train,
                              const Eigen::VectorXd& x_test);

// Average interpoint distance over all n^2 ordered pairs: root mean squared
// L2 distance for the RBF family, mean L1 distance for Laplace.
double bandwidth_heuristic(KernelFamily family, const Eigen::MatrixXd& X);

// Little-endian f64 row-major dump for debugging.
void write_matrix_f64(const Eigen::MatrixXd& M, std::ostream& out);

}  // namespace rfmkrr
