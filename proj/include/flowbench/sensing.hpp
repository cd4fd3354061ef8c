#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "flowbench/dataio.hpp"
#include "flowbench/numerics.hpp"
#include "flowbench/spectral.hpp"

namespace flowbench {

// Reference NMSE values reported for the wall-stress sensing benchmark on
// the full DNS dataset (linear estimator vs convolutional network). Recorded
// for context only; desk-scale synthetic runs are not expected to reproduce
// them.
inline constexpr double kReferenceWallStressLseNmse = 0.912;
inline constexpr double kReferenceWallStressCnnNmse = 0.239;

// Instantaneous minimum-MSE linear map from measurements to targets, built
// from sample correlations of the training pairs.
struct LseModel {
  Matrix transfer;      // n_z x n_y
  double noise_level = 0.0;
  Vector mean_y;
  Vector mean_z;
};

// Gaussian-weighted spatial averages standing in for finite-size sensors.
// Coordinates and sigma are in grid units; each probe reads one channel.
struct ProbeSpec {
  std::vector<std::vector<double>> centers;  // one coordinate list per probe
  double sigma = 1.0;
  std::vector<std::int64_t> channels;        // optional, defaults to channel 0
};

// probe value = sum_x w(x) field(x) with w a normalized Gaussian evaluated on
// the grid (weights sum to 1). Returns n_probes x n_snapshots.
Matrix gaussian_probe(const SnapshotMatrix& field, const ProbeSpec& spec);

// T = C_zy (C_yy + N)^{-1} with sample correlations of the mean-removed
// training pairs and N = noise_level^2 * diag(per-channel power of y).
LseModel lse_fit(const Matrix& Y, const Matrix& Z, double noise_level);

// z = T (y - mean_y) + mean_z.
Vector lse_apply(const LseModel& model, const Vector& y);
Matrix lse_apply(const LseModel& model, const Matrix& y_columns);

struct SensingNmse {
  double total = 0.0;       // sum over targets, then normalized
  Vector per_target;        // one ratio per target channel
};

// e = sum_t ||estimate - truth||^2 / sum_t ||truth||^2 over the given window,
// plus per-channel curves. A zero-energy target channel raises an
// undefined-metric error naming the channel.
SensingNmse sensing_nmse(const Matrix& truth, const Matrix& estimate);

enum class SensingMethod { lse, wiener_causal, wiener_noncausal };

SensingMethod sensing_method_from_name(const std::string& name);
const char* sensing_method_name(SensingMethod method);

struct SensingConfig {
  int history = 200;          // warm-up / kernel length L
  double noise_level = 1e-3;  // relative noise amplitude
  int welch_block = 400;
  double welch_overlap = 0.9;
  int window_order = 6;       // sine window power
  double dt = 1.0;
};

struct SensingRun {
  Matrix estimates;           // n_z x T_test, zero inside the warm-up window
  Eigen::Index warmup = 0;
  Eigen::Index valid_end = 0;
  std::optional<SensingNmse> nmse;  // filled when test targets were supplied
  std::optional<TransferFunctionSet> transfer;  // Wiener methods only
};

// Trains the chosen estimator on the training pairs, applies it to the test
// measurements, and (when test targets are given) scores the estimate outside
// the warm-up window. All methods share the same warm-up exclusion so their
// metrics are comparable.
SensingRun run_sensing_pipeline(const Matrix& train_y, const Matrix& train_z,
                                const Matrix& test_y, SensingMethod method,
                                const SensingConfig& config,
                                const Matrix* test_z = nullptr);

}  // namespace flowbench
