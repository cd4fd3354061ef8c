#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "flowbench/dataio.hpp"
#include "flowbench/numerics.hpp"

namespace flowbench {

// Seeded desk-scale generators. Each returns ground truth sufficient to
// verify the estimator that consumes it without re-deriving anything.
// A fixed config reproduces identical output bytes on one platform.

struct LowRankFieldConfig {
  std::uint64_t seed = 1;
  std::int64_t space = 200;   // grid points per channel
  std::int64_t n_channels = 1;
  std::int64_t n_snapshots = 50;
  std::vector<double> energies = {9.0, 4.0, 1.0};  // descending, one per mode
  double dt = 1.0;
};

struct LowRankField {
  SnapshotMatrix snapshots;
  Matrix true_basis;      // flat_dim x rank, orthonormal
  Vector true_energies;   // sample spatial-correlation eigenvalues, exact
};

// data = Phi0 * diag(sqrt(T * energies)) * R^T with orthonormal Phi0 and R,
// so the sample correlation (1/T) Q Q^T has eigenvalues exactly `energies`.
LowRankField gen_low_rank_field(const LowRankFieldConfig& config);

struct LinearModalConfig {
  std::uint64_t seed = 1;
  std::int64_t space = 100;
  std::int64_t n_pairs = 40;              // snapshot pairs per sequence
  std::vector<cdouble> eigenvalues = {};  // conjugate-closed for real output
  std::int64_t n_sequences = 1;
  double dt = 1.0;
};

struct LinearModalData {
  std::vector<SnapshotMatrix> sequences;  // each space x (n_pairs + 1)
  ComplexMatrix true_modes;               // space x K, unit columns
  ComplexVector true_eigenvalues;
  ComplexMatrix true_amplitudes;          // K x n_sequences
};

// Trajectories q_k = sum_i phi_i lambda_i^k b_i with conjugate-paired modes
// and amplitudes, hence real snapshots.
LinearModalData gen_linear_modal(const LinearModalConfig& config);

enum class InputKind { white, single_sinusoid };

struct ForcedLinearConfig {
  std::uint64_t seed = 1;
  int state_dim = 4;    // r
  int input_dim = 2;    // m
  std::int64_t space = 60;
  std::int64_t n_steps = 200;
  double spectral_radius = 0.9;
  bool zero_input_matrix = false;
  InputKind input_kind = InputKind::white;
  double sinusoid_freq = 0.35;  // radians per step, single_sinusoid only
  double dt = 1.0;
  std::int64_t n_sequences = 1;
};

struct ForcedLinearData {
  std::vector<SnapshotMatrix> state_sequences;  // space x (n_steps + 1)
  std::vector<Matrix> input_sequences;          // m x (n_steps + 1), one per snapshot time
  Matrix true_A;                                // r x r
  Matrix true_B;                                // r x m
  Matrix embedding;                             // space x r, orthonormal
};

// x_{k+1} = A x_k + B u_k, lifted to the full space by a random orthonormal
// embedding. Sinusoidal inputs are recorded after a transient burn-in so the
// state lives exactly on the forced limit cycle.
ForcedLinearData gen_forced_linear(const ForcedLinearConfig& config);

struct ArProcessConfig {
  std::uint64_t seed = 1;
  double a = 0.8;      // |a| < 1
  double sigma = 1.0;  // innovation std
  std::int64_t n_samples = 20000;
  double dt = 1.0;
  std::int64_t n_bins = 1024;  // analytic-spectrum grid
};

struct ArProcessData {
  Matrix y;                       // 1 x n_samples
  Vector analytic_frequencies;    // angular, DFT-ordered
  Vector analytic_psd;            // sigma^2 dt / |1 - a e^{-i w dt}|^2
  double dt = 1.0;
};

ArProcessData gen_ar_process(const ArProcessConfig& config);

struct CausalFirConfig {
  std::uint64_t seed = 1;
  std::vector<double> taps = {1.0};             // lags 0..L0
  std::vector<double> anticausal_taps = {};     // lags -1, -2, ...
  std::int64_t n_samples = 20000;
  double measurement_noise_level = 0.0;  // std of noise on y, relative to rms(y)
  double ar_a = 0.0;                     // 0 -> white y, else AR(1) source
  double sigma = 1.0;
  double dt = 1.0;
  std::int64_t n_bins = 1024;
};

struct CausalFirData {
  Matrix y;  // 1 x T, measured (noise included when configured)
  Matrix z;  // 1 x T, target
  Vector analytic_frequencies;
  // Spectra of the measured y (noise included) and of the target.
  Vector analytic_S_yy;
  ComplexVector analytic_S_zy;
  Vector analytic_S_zz;
  double dt = 1.0;
};

// z is a fixed FIR of the clean y; optional taps at negative lags inject an
// anticausal component into the truth, and optional white noise corrupts the
// returned measurements.
CausalFirData gen_causal_fir_pair(const CausalFirConfig& config);

}  // namespace flowbench
