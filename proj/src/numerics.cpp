#include "flowbench/numerics.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowbench/errors.hpp"

namespace flowbench {

namespace {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& A, const char* op) {
  if (!A.allFinite()) fail(errk::input, std::string(op) + ": input has non-finite entries");
}

template <typename MatT>
Eigen::Index argmax_abs(const MatT& col) {
  Eigen::Index idx = 0;
  col.cwiseAbs().maxCoeff(&idx);
  return idx;
}

template <typename Scalar>
SvdResultT<Scalar> truncated_svd_impl(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A, Eigen::Index n) {
  require_finite(A, "truncated_svd");
  const Eigen::Index kmax = std::min(A.rows(), A.cols());
  if (n < 1 || n > kmax)
    fail(errk::rank, "truncated_svd: rank " + std::to_string(n) + " outside [1, " +
                         std::to_string(kmax) + "]");

  Eigen::BDCSVD<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> svd(
      A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResultT<Scalar> out;
  out.U = svd.matrixU().leftCols(n);
  out.V = svd.matrixV().leftCols(n);
  out.singular_values = svd.singularValues().head(n);

  // Deterministic sign/phase: rotate each (u, v) pair so the largest-magnitude
  // entry of u is real positive. A = U S V^H is invariant under the pairing.
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index i = argmax_abs(out.U.col(k));
    const Scalar pivot = out.U(i, k);
    const double mag = std::abs(pivot);
    if (mag == 0.0) continue;
    const Scalar phase = pivot / Scalar(mag);
    out.U.col(k) /= phase;
    out.V.col(k) /= phase;
  }
  return out;
}

template <typename MatT>
void check_hermitian(const MatT& C, const char* op) {
  if (C.rows() != C.cols()) fail(errk::shape, std::string(op) + ": matrix not square");
  const double scale = C.cwiseAbs().maxCoeff();
  const double asym = (C - C.adjoint()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(scale, 1e-300))
    fail(errk::symmetry, std::string(op) + ": input not Hermitian (relative asymmetry " +
                             std::to_string(asym / std::max(scale, 1e-300)) + ")");
}

struct EigOrder {
  bool operator()(const cdouble& a, const cdouble& b) const {
    const double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb) return ma > mb;
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  }
};

GeneralEigResult general_eig_impl(const ComplexMatrix& K) {
  require_finite(K, "general_eig");
  if (K.rows() != K.cols()) fail(errk::shape, "general_eig: matrix not square");

  Eigen::ComplexEigenSolver<ComplexMatrix> solver(K, /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success)
    fail(errk::convergence, "general_eig: eigensolver did not converge");

  const Eigen::Index n = K.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const ComplexVector& raw = solver.eigenvalues();
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return EigOrder{}(raw(a), raw(b));
  });

  GeneralEigResult out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = raw(order[static_cast<std::size_t>(k)]);
    out.eigenvectors.col(k) = solver.eigenvectors().col(order[static_cast<std::size_t>(k)]);
    out.eigenvectors.col(k).normalize();
  }
  normalize_column_phases(out.eigenvectors);

  const double scale = K.norm();
  const double residual =
      (K * out.eigenvectors - out.eigenvectors * out.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff();
  if (residual > 1e-9 * std::max(scale, 1e-300))
    fail(errk::convergence,
         "general_eig: residual " + std::to_string(residual) + " exceeds 1e-9 * ||K||");
  return out;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> pseudoinverse_impl(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A, double tol) {
  require_finite(A, "pseudoinverse");
  if (tol <= 0.0 || tol >= 1.0) fail(errk::input, "pseudoinverse: tol must lie in (0,1)");
  Eigen::BDCSVD<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> svd(
      A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  const double cutoff = sigma.size() > 0 ? tol * sigma(0) : 0.0;
  Vector inv = Vector::Zero(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > cutoff) inv(i) = 1.0 / sigma(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

}  // namespace

SvdResult truncated_svd(const Matrix& A, Eigen::Index n) { return truncated_svd_impl(A, n); }

ComplexSvdResult truncated_svd(const ComplexMatrix& A, Eigen::Index n) {
  return truncated_svd_impl(A, n);
}

SymmetricEigResult hermitian_eig(const Matrix& C) {
  require_finite(C, "hermitian_eig");
  check_hermitian(C, "hermitian_eig");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(C);
  if (solver.info() != Eigen::Success)
    fail(errk::convergence, "hermitian_eig: eigensolver did not converge");
  SymmetricEigResult out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  normalize_column_signs(out.eigenvectors);
  return out;
}

HermitianEigResult hermitian_eig(const ComplexMatrix& C) {
  require_finite(C, "hermitian_eig");
  check_hermitian(C, "hermitian_eig");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(C);
  if (solver.info() != Eigen::Success)
    fail(errk::convergence, "hermitian_eig: eigensolver did not converge");
  HermitianEigResult out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  normalize_column_phases(out.eigenvectors);
  return out;
}

GeneralEigResult general_eig(const Matrix& K) {
  return general_eig_impl(K.cast<cdouble>());
}

GeneralEigResult general_eig(const ComplexMatrix& K) { return general_eig_impl(K); }

Matrix pseudoinverse(const Matrix& A, double tol) { return pseudoinverse_impl(A, tol); }

ComplexMatrix pseudoinverse(const ComplexMatrix& A, double tol) {
  return pseudoinverse_impl(A, tol);
}

std::vector<cdouble> dft(const std::vector<cdouble>& signal, DftDirection direction) {
  if (signal.empty()) fail(errk::input, "dft: empty signal");
  if (signal.size() == 1) return signal;
  std::vector<cdouble> out(signal.size());
  Eigen::FFT<double> fft;
  if (direction == DftDirection::forward) {
    fft.fwd(out, signal);
  } else {
    fft.inv(out, signal);
  }
  return out;
}

void normalize_column_signs(Eigen::Ref<Matrix> columns) {
  for (Eigen::Index k = 0; k < columns.cols(); ++k) {
    const Eigen::Index i = argmax_abs(columns.col(k));
    if (columns(i, k) < 0.0) columns.col(k) = -columns.col(k);
  }
}

void normalize_column_phases(Eigen::Ref<ComplexMatrix> columns) {
  for (Eigen::Index k = 0; k < columns.cols(); ++k) {
    const Eigen::Index i = argmax_abs(columns.col(k));
    const cdouble pivot = columns(i, k);
    const double mag = std::abs(pivot);
    if (mag == 0.0) continue;
    columns.col(k) /= pivot / mag;
  }
}

}  // namespace flowbench
