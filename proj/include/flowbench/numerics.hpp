#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace flowbench {

using Matrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using cdouble = std::complex<double>;

// Dense decomposition kernels shared by every estimator in this library.
// Contracts are residual-based and the output ordering is fixed so results
// reproduce across platforms:
//   - singular values / Hermitian eigenvalues: descending,
//   - general eigenvalues: descending |lambda|, ties by descending real part
//     then descending imaginary part,
//   - eigenvector / singular-vector phase: the largest-magnitude component of
//     each column is made real and positive.

template <typename Scalar>
struct SvdResultT {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> U;
  Vector singular_values;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> V;
};
using SvdResult = SvdResultT<double>;
using ComplexSvdResult = SvdResultT<cdouble>;

struct SymmetricEigResult {
  Vector eigenvalues;    // descending
  Matrix eigenvectors;   // orthonormal columns
};

struct HermitianEigResult {
  Vector eigenvalues;
  ComplexMatrix eigenvectors;
};

struct GeneralEigResult {
  ComplexVector eigenvalues;   // descending magnitude
  ComplexMatrix eigenvectors;  // unit-norm columns
};

// N dominant singular triplets of A; 1 <= n <= min(rows, cols).
SvdResult truncated_svd(const Matrix& A, Eigen::Index n);
ComplexSvdResult truncated_svd(const ComplexMatrix& A, Eigen::Index n);

// Eigendecomposition of a symmetric / Hermitian matrix. Rejects inputs whose
// asymmetry exceeds 1e-10 relative in max-abs norm.
SymmetricEigResult hermitian_eig(const Matrix& C);
HermitianEigResult hermitian_eig(const ComplexMatrix& C);

// Eigendecomposition of a general square matrix. Residual ||K d - lambda d||
// above 1e-9 * ||K||_F raises a convergence error.
GeneralEigResult general_eig(const Matrix& K);
GeneralEigResult general_eig(const ComplexMatrix& K);

// Moore-Penrose pseudoinverse; singular directions below tol * sigma_1 are
// nulled.
Matrix pseudoinverse(const Matrix& A, double tol = 1e-12);
ComplexMatrix pseudoinverse(const ComplexMatrix& A, double tol = 1e-12);

enum class DftDirection { forward, inverse };

// Unitary-pair DFT: forward kernel e^{-i 2 pi j k / n}, inverse carries the
// 1/n factor, so inverse(forward(x)) == x. Any length >= 1.
std::vector<cdouble> dft(const std::vector<cdouble>& signal, DftDirection direction);

// Phase convention helpers (used by decompositions above and by POD).
void normalize_column_signs(Eigen::Ref<Matrix> columns);
void normalize_column_phases(Eigen::Ref<ComplexMatrix> columns);

}  // namespace flowbench
