#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "flowbench/numerics.hpp"

namespace flowbench {

// Two-sided cross-spectral densities on the DFT grid of the block length.
// Convention: S_ab(w) has units [a][b] * time; for unit-variance white noise
// sampled at dt the density is flat at dt. Angular frequencies, DFT-ordered
// (0, positive, negative).
struct CsdSet {
  Vector frequencies;
  std::vector<ComplexMatrix> S_yy;  // n_f entries, n_y x n_y
  std::vector<ComplexMatrix> S_zy;  // n_f entries, n_z x n_y
  double dt = 1.0;
  int block_length = 0;
  double overlap_fraction = 0.0;
  std::string window_tag;
  int n_blocks = 0;  // how many averaged blocks produced the estimate

  Eigen::Index n_freq() const { return frequencies.size(); }
  Eigen::Index n_y() const { return S_yy.empty() ? 0 : S_yy.front().rows(); }
  Eigen::Index n_z() const { return S_zy.empty() ? n_y() : S_zy.front().rows(); }
};

// w_j = sin(pi (j + 0.5) / n)^p, scaled so sum w^2 = n (power preserving).
Vector sine_window(int n, int p);

// Windowed, overlapping block periodograms averaged into S_yy and S_zy.
// Each block's per-channel mean is removed before windowing. Fewer than two
// blocks raises an estimation error.
CsdSet welch_csd(const Matrix& Y, const Matrix& Z, int block, double overlap,
                 const Vector& window, double dt, const std::string& window_tag = "custom");

// Frequency-sampled estimator matrices T(w) plus their time-domain kernels.
// Kernel convention: z(t) = sum_tau kernel[tau] y(t - tau) dt, so
// T(w_k) = sum_j kernel_j e^{-i w_k lag_j dt} dt.
struct TransferFunctionSet {
  Vector frequencies;
  double dt = 1.0;
  std::vector<ComplexMatrix> T_hat;  // per frequency, n_z x n_y
  std::vector<Matrix> kernel;        // per lag, n_z x n_y
  std::vector<int> lags;             // ascending; spans -(n/2-1)..n/2 for even n
  bool causal = false;
  // Raw negative-lag mass ratio of the construction, measured before causal
  // filters project it out; stored causal kernels have exactly zero entries
  // on negative lags. Analytic spectra give ~1e-12 here, Welch-estimated
  // spectra give small circular-aliasing leakage.
  double negative_lag_ratio = 0.0;
  double kernel_imag_ratio = 0.0;    // imaginary residue discarded from the kernel

  Eigen::Index n_freq() const { return frequencies.size(); }
};

// Rebuilds T_hat on an n_freq-point grid from an explicit lag kernel.
TransferFunctionSet transfer_function_from_kernel(const std::vector<Matrix>& kernel,
                                                  const std::vector<int>& lags,
                                                  Eigen::Index n_freq, double dt,
                                                  bool causal);

// T(w) = S_zy (S_yy + N)^{-1} per frequency. The scalar overload builds a
// flat diagonal noise density N_ii = level^2 * mean_k S_yy,ii(w_k), i.e.
// noise variance level^2 times the per-channel signal power.
TransferFunctionSet noncausal_wiener(const CsdSet& csd, double noise_level);
TransferFunctionSet noncausal_wiener(const CsdSet& csd,
                                     const std::vector<ComplexMatrix>& noise_psd);

struct SpectralFactor {
  std::vector<ComplexMatrix> factor;  // S_plus, minimum phase
  double ridge = 0.0;                 // diagonal loading added (0 when none)
  int iterations = 0;                 // matrix path only
  double residual = 0.0;              // max_k ||S+ S+^H - S|| / ||S||
};

// Minimum-phase factorization S(w) = S_plus(w) S_plus(w)^H. Scalar spectra
// use the cepstral (log-spectrum halving) route; matrix spectra use the
// quadratically convergent plus-operator fixed point (max 500 iterations,
// step tolerance 1e-10). Spectra closer to singular than 1e-8 of the mean
// trace are ridged by that amount first.
SpectralFactor spectral_factorize(const std::vector<ComplexMatrix>& S);

// Additive decomposition [G]_+: zero all strictly negative lags, keep lag 0
// entirely on the causal side.
std::vector<ComplexMatrix> causal_part(const std::vector<ComplexMatrix>& G);

// Optimal causal filter T = [S_zy (S_plus^H)^{-1}]_+ (S_plus)^{-1} with
// S_yy + N = S_plus S_plus^H.
TransferFunctionSet causal_wiener(const CsdSet& csd, double noise_level);
TransferFunctionSet causal_wiener(const CsdSet& csd,
                                  const std::vector<ComplexMatrix>& noise_psd);

struct FilteredSeries {
  Matrix values;              // n_z x T; columns outside the valid window are zero
  Eigen::Index warmup = 0;    // first valid column
  Eigen::Index valid_end = 0; // one past the last valid column
};

// Discrete convolution z(t) = sum_{tau=0..L} K(tau) y(t-tau) dt for causal
// kernels, symmetric lags -L..L otherwise (which also trims the tail of the
// valid window). Raises a warmup error when no output column is valid.
FilteredSeries apply_filter(const TransferFunctionSet& tf, const Matrix& y, int history);

}  // namespace flowbench

#include "flowbench/container.hpp"

namespace flowbench {

// Container serialization. Array names: "frequencies" f64 [n_f],
// "S_yy" c128 [n_f, n_y, n_y], "S_zy" c128 [n_f, n_z, n_y] for CSD sets;
// "frequencies", "T_hat" c128 [n_f, n_z, n_y], "T_lag" f64 [n_lags, n_z, n_y]
// plus "lags" i64 [n_lags] for transfer functions. Scalars (dt, flags,
// estimation settings) ride along as meta strings via the returned pair.
std::pair<ArrayMap, MetaMap> csd_to_arrays(const CsdSet& csd);
CsdSet csd_from_arrays(const ArrayMap& arrays, const MetaMap& meta);

std::pair<ArrayMap, MetaMap> transfer_function_to_arrays(const TransferFunctionSet& tf);
TransferFunctionSet transfer_function_from_arrays(const ArrayMap& arrays, const MetaMap& meta);

}  // namespace flowbench
