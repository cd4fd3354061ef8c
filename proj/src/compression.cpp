#include "flowbench/compression.hpp"

#include <cmath>

#include "flowbench/errors.hpp"

namespace flowbench {

namespace {

// Deterministic orthonormal completion for rank-deficient trailing modes:
// Gram-Schmidt canonical basis vectors against the accepted columns.
void complete_basis(Matrix& modes, Eigen::Index filled) {
  const Eigen::Index dim = modes.rows();
  Eigen::Index next_axis = 0;
  for (Eigen::Index k = filled; k < modes.cols(); ++k) {
    bool accepted = false;
    while (!accepted) {
      if (next_axis >= dim)
        fail(errk::rank, "pod_fit: could not complete orthonormal basis");
      Vector v = Vector::Zero(dim);
      v(next_axis++) = 1.0;
      for (Eigen::Index j = 0; j < k; ++j) v -= modes.col(j).dot(v) * modes.col(j);
      const double norm = v.norm();
      if (norm > 1e-6) {
        modes.col(k) = v / norm;
        accepted = true;
      }
    }
  }
}

}  // namespace

PodBasis pod_fit(const SnapshotMatrix& train, Eigen::Index n_modes, bool subtract_mean,
                 PodMethod method) {
  train.validate();
  const Eigen::Index dim = train.flat_dim();
  const Eigen::Index T = train.n_snapshots();
  if (n_modes < 1 || n_modes > std::min(dim, T))
    fail(errk::rank, "pod_fit: mode count " + std::to_string(n_modes) +
                         " outside [1, min(space, snapshots)] = [1, " +
                         std::to_string(std::min(dim, T)) + "] (mode count is bounded by the "
                         "number of training snapshots)");

  PodBasis basis;
  Matrix fluct = train.data;
  if (subtract_mean) {
    Vector mean = train.data.rowwise().mean();
    fluct.colwise() -= mean;
    basis.mean = std::move(mean);
  }

  const bool use_snapshots =
      method == PodMethod::snapshots || (method == PodMethod::automatic && T < dim);

  basis.modes.resize(dim, n_modes);
  basis.energies.resize(n_modes);
  if (use_snapshots) {
    Matrix gram = (fluct.transpose() * fluct) / static_cast<double>(T);
    gram = 0.5 * (gram + gram.transpose());
    auto eig = hermitian_eig(gram);
    const double lead = std::max(eig.eigenvalues(0), 0.0);
    Eigen::Index filled = 0;
    for (Eigen::Index k = 0; k < n_modes; ++k) {
      const double lambda = eig.eigenvalues(k);
      if (lambda <= 1e-14 * std::max(lead, 1e-300)) break;
      basis.energies(k) = lambda;
      basis.modes.col(k) =
          fluct * eig.eigenvectors.col(k) / std::sqrt(lambda * static_cast<double>(T));
      ++filled;
    }
    for (Eigen::Index k = filled; k < n_modes; ++k) basis.energies(k) = 0.0;
    complete_basis(basis.modes, filled);
    normalize_column_signs(basis.modes);
  } else {
    Matrix corr = (fluct * fluct.transpose()) / static_cast<double>(T);
    corr = 0.5 * (corr + corr.transpose());
    auto eig = hermitian_eig(corr);
    basis.modes = eig.eigenvectors.leftCols(n_modes);
    basis.energies = eig.eigenvalues.head(n_modes).cwiseMax(0.0);
  }
  return basis;
}

LatentBlock pod_encode(const PodBasis& basis, const SnapshotMatrix& snaps) {
  snaps.validate();
  if (snaps.flat_dim() != basis.modes.rows())
    fail(errk::shape, "pod_encode: snapshot size " + std::to_string(snaps.flat_dim()) +
                          " does not match basis rows " + std::to_string(basis.modes.rows()));
  LatentBlock latent;
  if (basis.mean) {
    latent.coefficients = basis.modes.transpose() * (snaps.data.colwise() - *basis.mean);
  } else {
    latent.coefficients = basis.modes.transpose() * snaps.data;
  }
  return latent;
}

SnapshotMatrix pod_decode(const PodBasis& basis, const LatentBlock& latent,
                          const SnapshotMatrix& reference) {
  if (latent.coefficients.rows() != basis.mode_count())
    fail(errk::shape, "pod_decode: latent rows " + std::to_string(latent.coefficients.rows()) +
                          " do not match mode count " + std::to_string(basis.mode_count()));
  SnapshotMatrix out;
  out.space_dims = reference.space_dims;
  out.n_channels = reference.n_channels;
  out.dt = reference.dt;
  out.data = basis.modes * latent.coefficients;
  if (basis.mean) out.data.colwise() += *basis.mean;
  return out;
}

double root_nmse(const SnapshotMatrix& truth, const SnapshotMatrix& approx) {
  if (truth.data.rows() != approx.data.rows() || truth.data.cols() != approx.data.cols())
    fail(errk::shape, "root_nmse: shapes differ");
  const double denom = truth.data.squaredNorm();
  if (denom <= 0.0)
    fail(errk::undefined_metric, "root_nmse: truth has zero energy");
  return std::sqrt((approx.data - truth.data).squaredNorm() / denom);
}

double compression_ratio(const SnapshotMatrix& original, const LatentBlock& latent) {
  const auto per_snapshot = static_cast<double>(original.flat_dim());
  const auto latent_per_snapshot = static_cast<double>(latent.coefficients.rows());
  return per_snapshot / latent_per_snapshot;
}

double timing_ratio(double measured_seconds, double baseline_seconds) {
  if (!(baseline_seconds > 0.0))
    fail(errk::input, "timing_ratio: baseline must be positive");
  return measured_seconds / baseline_seconds;
}

}  // namespace flowbench
