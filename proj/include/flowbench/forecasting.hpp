#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "flowbench/compression.hpp"
#include "flowbench/numerics.hpp"

namespace flowbench {

// Best-fit linear one-step propagator in modal form. Modes are the exact
// variant (built from the shifted data matrix), so eigenvectors of the full
// propagator are recovered, not just projected ones.
struct DmdModel {
  ComplexMatrix modes;        // space x N
  ComplexVector eigenvalues;  // discrete-time, descending magnitude
  ComplexVector frequencies;  // log(lambda)/dt; -inf real part for lambda = 0
  double dt = 1.0;
  Matrix projection;          // space x N, left singular vectors of Q1
  Matrix reduced_operator;    // N x N operator in the projection basis

  Eigen::Index rank() const { return eigenvalues.size(); }
};

// Q2 columns must be the dt-advances of Q1 columns (pairs may be
// non-sequential). A retained singular value below 1e-13 * sigma_1 raises a
// conditioning error.
DmdModel dmd_fit(const Matrix& Q1, const Matrix& Q2, Eigen::Index rank, double dt = 1.0);

// Least-squares initial amplitudes b = pinv(Phi) q0.
ComplexVector dmd_amplitudes(const DmdModel& model, const Vector& q0);

struct DmdForecast {
  Matrix states;  // space x n_steps (or n_steps+1 with the initial column)
  int first_step = 1;
  // max_k ||Im q_k|| / max_k ||q_k||; above 1e-8 signals a spectrum that is
  // not conjugate-paired, and conjugate_clean is cleared.
  double imag_residue_ratio = 0.0;
  bool conjugate_clean = true;
};

// q(k dt) = sum_i phi_i lambda_i^k b_i for k = 1..steps (k = 0 included when
// include_initial is set). Real part returned; the discarded imaginary
// residue is reported in the result.
DmdForecast dmd_forecast(const DmdModel& model, const ComplexVector& amplitudes, int steps,
                         bool include_initial = false);

// Linear propagator with exogenous inputs, identified in an r-dimensional
// POD subspace of the training snapshots.
struct DmdcModel {
  Matrix reduced_operator;  // r x r
  Matrix input_matrix;      // r x m
  PodBasis basis;           // r modes, fitted without mean subtraction
  double dt = 1.0;

  Eigen::Index state_rank() const { return reduced_operator.rows(); }
  Eigen::Index input_dim() const { return input_matrix.cols(); }
};

// Solves min ||X2 - K X1 - B U||_F in POD coordinates via the pseudoinverse
// of the stacked [X1; U] matrix (relative cutoff 1e-10). Raises an
// identifiability error when the stacked rows are linearly dependent, i.e.
// rank([X1; U]) < rank(X1) + rank(U), in which case K and B cannot be
// separated. operator_rank > 0 additionally truncates the stacked
// pseudoinverse to that rank.
DmdcModel dmdc_fit(const Matrix& Q1, const Matrix& Q2, const Matrix& inputs, Eigen::Index r,
                   double dt = 1.0, Eigen::Index operator_rank = -1);

// x_0 = Phi^T q0; x_{k+1} = K x_k + B u_k; columns are Phi x_k for
// k = 1..steps (k = 0 included when include_initial is set).
Matrix dmdc_forecast(const DmdcModel& model, const Vector& q0, const Matrix& inputs,
                     bool include_initial = false);

// One test sequence of a forecasting task: the provided history, the number
// of withheld steps, and (for input-driven models) the exogenous signals
// covering both.
struct ForecastRequest {
  SnapshotMatrix history;                 // M_in snapshots
  int horizon = 1;
  std::optional<Matrix> inputs;           // m x (M_in + horizon) when present

  void validate() const;
};

struct ForecastErrorCurves {
  Vector ensemble;      // ratio of sums across sequences, per lead time
  Matrix per_sequence;  // S x K
  Vector mean;          // mean of per-sequence curves
  Vector stddev;        // sample std across sequences (0 when S == 1)
};

// e_k = sum_s ||forecast_sk - truth_sk||^2 / sum_s ||truth_sk||^2.
ForecastErrorCurves forecast_nmse(const std::vector<Matrix>& truth_ensemble,
                                  const std::vector<Matrix>& forecast_ensemble);

}  // namespace flowbench
