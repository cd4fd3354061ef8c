#include "flowbench/forecasting.hpp"

#include <cmath>

#include "flowbench/errors.hpp"

namespace flowbench {

namespace {

Eigen::Index rank_at_cutoff(const Vector& singular_values, double rel_cutoff) {
  if (singular_values.size() == 0) return 0;
  const double cutoff = rel_cutoff * singular_values(0);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < singular_values.size(); ++i)
    if (singular_values(i) > cutoff) ++r;
  return r;
}

Vector singular_values_of(const Matrix& A) {
  if (A.size() == 0 || A.cwiseAbs().maxCoeff() == 0.0) return Vector::Zero(1);
  Eigen::BDCSVD<Matrix> svd(A);
  return svd.singularValues();
}

}  // namespace

DmdModel dmd_fit(const Matrix& Q1, const Matrix& Q2, Eigen::Index rank, double dt) {
  if (Q1.rows() != Q2.rows() || Q1.cols() != Q2.cols())
    fail(errk::shape, "dmd_fit: Q1 and Q2 must have identical shape");
  if (!(dt > 0.0)) fail(errk::input, "dmd_fit: dt must be positive");

  auto svd = truncated_svd(Q1, rank);
  if (svd.singular_values(rank - 1) < 1e-13 * svd.singular_values(0))
    fail(errk::conditioning,
         "dmd_fit: retained singular value " + std::to_string(svd.singular_values(rank - 1)) +
             " below 1e-13 * sigma_1; reduce the rank");

  Vector inv_sigma = svd.singular_values.cwiseInverse();
  Matrix reduced = svd.U.transpose() * Q2 * svd.V * inv_sigma.asDiagonal();
  auto eig = general_eig(reduced);

  DmdModel model;
  model.dt = dt;
  model.projection = svd.U;
  model.reduced_operator = reduced;
  model.eigenvalues = eig.eigenvalues;
  model.modes = (Q2 * svd.V * inv_sigma.asDiagonal()).cast<cdouble>() * eig.eigenvectors;
  model.frequencies.resize(rank);
  for (Eigen::Index i = 0; i < rank; ++i)
    model.frequencies(i) = std::log(model.eigenvalues(i)) / dt;
  return model;
}

ComplexVector dmd_amplitudes(const DmdModel& model, const Vector& q0) {
  if (q0.size() != model.modes.rows())
    fail(errk::shape, "dmd_amplitudes: q0 length " + std::to_string(q0.size()) +
                          " does not match mode space " + std::to_string(model.modes.rows()));
  return pseudoinverse(model.modes) * q0.cast<cdouble>();
}

DmdForecast dmd_forecast(const DmdModel& model, const ComplexVector& amplitudes, int steps,
                         bool include_initial) {
  if (amplitudes.size() != model.rank())
    fail(errk::shape, "dmd_forecast: amplitude count does not match model rank");
  if (steps < 0) fail(errk::input, "dmd_forecast: steps must be >= 0");

  DmdForecast out;
  out.first_step = include_initial ? 0 : 1;
  const int n_cols = steps + (include_initial ? 1 : 0);
  out.states.resize(model.modes.rows(), n_cols);

  // Propagate lambda^k iteratively; equals e^{omega k dt} by definition and
  // stays finite for zero eigenvalues.
  ComplexVector coeff = amplitudes;
  double max_imag = 0.0;
  double max_norm = 0.0;
  int col = 0;
  for (int k = 0; k <= steps; ++k) {
    if (k >= out.first_step) {
      ComplexVector q = model.modes * coeff;
      out.states.col(col++) = q.real();
      max_imag = std::max(max_imag, q.imag().norm());
      max_norm = std::max(max_norm, q.norm());
    }
    if (k < steps) coeff = coeff.cwiseProduct(model.eigenvalues);
  }
  out.imag_residue_ratio = max_norm > 0.0 ? max_imag / max_norm : 0.0;
  out.conjugate_clean = out.imag_residue_ratio <= 1e-8;
  return out;
}

DmdcModel dmdc_fit(const Matrix& Q1, const Matrix& Q2, const Matrix& inputs, Eigen::Index r,
                   double dt, Eigen::Index operator_rank) {
  if (Q1.rows() != Q2.rows() || Q1.cols() != Q2.cols())
    fail(errk::shape, "dmdc_fit: Q1 and Q2 must have identical shape");
  if (inputs.cols() != Q1.cols())
    fail(errk::shape, "dmdc_fit: input columns must match snapshot pair count");
  const Eigen::Index M = Q1.cols();
  const Eigen::Index m = inputs.rows();

  // POD subspace of all available snapshots, no mean subtraction: the model
  // x_{k+1} = K x_k + B u_k is linear in the raw state.
  SnapshotMatrix all;
  all.space_dims = {Q1.rows()};
  all.n_channels = 1;
  all.dt = dt;
  all.data.resize(Q1.rows(), 2 * M);
  all.data << Q1, Q2;
  PodBasis basis = pod_fit(all, r, /*subtract_mean=*/false);

  Matrix X1 = basis.modes.transpose() * Q1;
  Matrix X2 = basis.modes.transpose() * Q2;
  Matrix stacked(r + m, M);
  stacked << X1, inputs;

  constexpr double kCutoff = 1e-10;
  const Eigen::Index rank_stacked = rank_at_cutoff(singular_values_of(stacked), kCutoff);
  const Eigen::Index rank_states = rank_at_cutoff(singular_values_of(X1), kCutoff);
  const Eigen::Index rank_inputs = rank_at_cutoff(singular_values_of(inputs), kCutoff);
  if (rank_stacked < rank_states + rank_inputs)
    fail(errk::identifiability,
         "dmdc_fit: stacked [states; inputs] matrix is rank-deficient (rank " +
             std::to_string(rank_stacked) + " < " + std::to_string(rank_states) + " + " +
             std::to_string(rank_inputs) +
             "); the input signal is linearly dependent on the states");

  Matrix pinv;
  if (operator_rank > 0 && operator_rank < std::min(stacked.rows(), stacked.cols())) {
    auto svd = truncated_svd(stacked, operator_rank);
    Vector inv = Vector::Zero(operator_rank);
    const double cutoff = kCutoff * svd.singular_values(0);
    for (Eigen::Index i = 0; i < operator_rank; ++i)
      if (svd.singular_values(i) > cutoff) inv(i) = 1.0 / svd.singular_values(i);
    pinv = svd.V * inv.asDiagonal() * svd.U.transpose();
  } else {
    pinv = pseudoinverse(stacked, kCutoff);
  }

  Matrix solution = X2 * pinv;  // r x (r + m)
  DmdcModel model;
  model.reduced_operator = solution.leftCols(r);
  model.input_matrix = solution.rightCols(m);
  model.basis = std::move(basis);
  model.dt = dt;
  return model;
}

Matrix dmdc_forecast(const DmdcModel& model, const Vector& q0, const Matrix& inputs,
                     bool include_initial) {
  if (q0.size() != model.basis.modes.rows())
    fail(errk::shape, "dmdc_forecast: q0 length does not match basis space");
  if (inputs.rows() != model.input_dim())
    fail(errk::shape, "dmdc_forecast: input rows do not match model input dimension");
  const Eigen::Index steps = inputs.cols();

  Vector x = model.basis.modes.transpose() * q0;
  Matrix out(model.basis.modes.rows(), steps + (include_initial ? 1 : 0));
  Eigen::Index col = 0;
  if (include_initial) out.col(col++) = model.basis.modes * x;
  for (Eigen::Index k = 0; k < steps; ++k) {
    x = model.reduced_operator * x + model.input_matrix * inputs.col(k);
    out.col(col++) = model.basis.modes * x;
  }
  return out;
}

void ForecastRequest::validate() const {
  history.validate();
  if (horizon < 1) fail(errk::input, "forecast request: horizon must be >= 1");
  if (inputs) {
    if (inputs->cols() != history.n_snapshots() + horizon)
      fail(errk::shape, "forecast request: inputs must cover history + horizon (" +
                            std::to_string(history.n_snapshots() + horizon) + " columns), got " +
                            std::to_string(inputs->cols()));
    if (!inputs->allFinite()) fail(errk::input, "forecast request: non-finite inputs");
  }
}

ForecastErrorCurves forecast_nmse(const std::vector<Matrix>& truth_ensemble,
                                  const std::vector<Matrix>& forecast_ensemble) {
  if (truth_ensemble.size() != forecast_ensemble.size() || truth_ensemble.empty())
    fail(errk::shape, "forecast_nmse: ensembles must be non-empty and equal in size");
  const auto S = static_cast<Eigen::Index>(truth_ensemble.size());
  const Eigen::Index K = truth_ensemble.front().cols();
  for (Eigen::Index s = 0; s < S; ++s) {
    const auto& t = truth_ensemble[static_cast<std::size_t>(s)];
    const auto& f = forecast_ensemble[static_cast<std::size_t>(s)];
    if (t.cols() != K || f.cols() != K || t.rows() != f.rows())
      fail(errk::shape, "forecast_nmse: sequence shapes differ");
  }

  ForecastErrorCurves out;
  out.ensemble.resize(K);
  out.per_sequence.resize(S, K);
  out.mean.resize(K);
  out.stddev.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    double num_sum = 0.0, den_sum = 0.0;
    for (Eigen::Index s = 0; s < S; ++s) {
      const auto& t = truth_ensemble[static_cast<std::size_t>(s)];
      const auto& f = forecast_ensemble[static_cast<std::size_t>(s)];
      const double num = (f.col(k) - t.col(k)).squaredNorm();
      const double den = t.col(k).squaredNorm();
      if (den <= 0.0)
        fail(errk::undefined_metric, "forecast_nmse: zero-energy truth at lead time " +
                                         std::to_string(k) + ", sequence " + std::to_string(s));
      out.per_sequence(s, k) = num / den;
      num_sum += num;
      den_sum += den;
    }
    out.ensemble(k) = num_sum / den_sum;
    out.mean(k) = out.per_sequence.col(k).mean();
    if (S > 1) {
      const double var =
          (out.per_sequence.col(k).array() - out.mean(k)).square().sum() /
          static_cast<double>(S - 1);
      out.stddev(k) = std::sqrt(var);
    } else {
      out.stddev(k) = 0.0;
    }
  }
  return out;
}

}  // namespace flowbench
