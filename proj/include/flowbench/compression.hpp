#pragma once

#include <Eigen/Dense>
#include <optional>

#include "flowbench/dataio.hpp"
#include "flowbench/numerics.hpp"

namespace flowbench {

// Orthonormal spatial modes plus modal energies; the compression codec state.
struct PodBasis {
  Matrix modes;                 // flat_dim x N, orthonormal columns
  Vector energies;              // descending, >= 0
  std::optional<Vector> mean;   // present when fitted with mean subtraction
  Eigen::Index mode_count() const { return modes.cols(); }
};

struct LatentBlock {
  Matrix coefficients;  // N x n_snapshots
};

enum class PodMethod {
  automatic,  // snapshots path when T < flat_dim, else direct
  snapshots,  // eigendecomposition of the T x T Gram matrix
  direct      // eigendecomposition of the flat_dim x flat_dim correlation
};

// Modes are the N dominant eigenvectors of the sample spatial correlation
// (1/T) sum_t q_t q_t^T of the (optionally mean-subtracted) training data.
// Eigenvalues beyond the numerical rank are clamped to zero and their modes
// completed to an orthonormal set, so the full-span basis stays usable.
PodBasis pod_fit(const SnapshotMatrix& train, Eigen::Index n_modes,
                 bool subtract_mean = true, PodMethod method = PodMethod::automatic);

// a = Phi^T (q - mean), column-wise.
LatentBlock pod_encode(const PodBasis& basis, const SnapshotMatrix& snaps);

// q_tilde = Phi a + mean. Grid metadata is copied from `reference`.
SnapshotMatrix pod_decode(const PodBasis& basis, const LatentBlock& latent,
                          const SnapshotMatrix& reference);

// sqrt( sum_t ||approx_t - truth_t||^2 / sum_t ||truth_t||^2 ), unweighted
// spatial sum of squares over all grid points and channels. The denominator
// uses the fields exactly as given; callers wanting fluctuation energy
// subtract the mean from both inputs first.
double root_nmse(const SnapshotMatrix& truth, const SnapshotMatrix& approx);

// Scalars per original snapshot over scalars per latent snapshot; codec
// overhead (basis, mean) is excluded.
double compression_ratio(const SnapshotMatrix& original, const LatentBlock& latent);

// measured / baseline.
double timing_ratio(double measured_seconds, double baseline_seconds);

}  // namespace flowbench
