#include "flowbench/sensing.hpp"

#include <cmath>

#include "flowbench/errors.hpp"

namespace flowbench {

Matrix gaussian_probe(const SnapshotMatrix& field, const ProbeSpec& spec) {
  field.validate();
  if (!(spec.sigma > 0.0)) fail(errk::input, "gaussian_probe: sigma must be positive");
  const auto n_probes = static_cast<Eigen::Index>(spec.centers.size());
  if (n_probes == 0) fail(errk::input, "gaussian_probe: no probe centers");
  if (!spec.channels.empty() &&
      spec.channels.size() != spec.centers.size())
    fail(errk::shape, "gaussian_probe: channel list length must match center count");

  const auto n_axes = field.space_dims.size();
  const std::int64_t space = field.space_size();

  Matrix weights(space, n_probes);
  for (Eigen::Index p = 0; p < n_probes; ++p) {
    const auto& center = spec.centers[static_cast<std::size_t>(p)];
    if (center.size() != n_axes)
      fail(errk::shape, "gaussian_probe: center rank does not match grid rank");
    for (std::size_t a = 0; a < n_axes; ++a)
      if (center[a] < 0.0 || center[a] > static_cast<double>(field.space_dims[a] - 1))
        fail(errk::input, "gaussian_probe: center outside grid on axis " + std::to_string(a));

    // Row-major walk over the grid, accumulating exp(-||x - c||^2 / 2 sigma^2).
    std::vector<std::int64_t> idx(n_axes, 0);
    for (std::int64_t flat = 0; flat < space; ++flat) {
      double d2 = 0.0;
      for (std::size_t a = 0; a < n_axes; ++a) {
        const double d = static_cast<double>(idx[a]) - center[a];
        d2 += d * d;
      }
      weights(flat, p) = std::exp(-d2 / (2.0 * spec.sigma * spec.sigma));
      for (std::size_t a = n_axes; a-- > 0;) {
        if (++idx[a] < field.space_dims[a]) break;
        idx[a] = 0;
      }
    }
    weights.col(p) /= weights.col(p).sum();
  }

  Matrix out(n_probes, field.n_snapshots());
  for (Eigen::Index p = 0; p < n_probes; ++p) {
    const std::int64_t channel =
        spec.channels.empty() ? 0 : spec.channels[static_cast<std::size_t>(p)];
    if (channel < 0 || channel >= field.n_channels)
      fail(errk::input, "gaussian_probe: channel index outside field channels");
    out.row(p) =
        weights.col(p).transpose() * field.data.middleRows(channel * space, space);
  }
  return out;
}

LseModel lse_fit(const Matrix& Y, const Matrix& Z, double noise_level) {
  const Eigen::Index T = Y.cols();
  if (Z.cols() != T) fail(errk::shape, "lse_fit: Y and Z must share the time axis");
  if (T < 2) fail(errk::input, "lse_fit: need at least two samples");
  if (noise_level < 0.0) fail(errk::input, "lse_fit: negative noise level");

  LseModel model;
  model.noise_level = noise_level;
  model.mean_y = Y.rowwise().mean();
  model.mean_z = Z.rowwise().mean();
  Matrix Yf = Y.colwise() - model.mean_y;
  Matrix Zf = Z.colwise() - model.mean_z;

  Matrix C_yy = (Yf * Yf.transpose()) / static_cast<double>(T);
  Matrix C_zy = (Zf * Yf.transpose()) / static_cast<double>(T);
  Matrix A = C_yy;
  A.diagonal() += noise_level * noise_level * C_yy.diagonal();
  A = 0.5 * (A + A.transpose()).eval();

  // The normal equations stay consistent even for singular correlations, so
  // singularity is detected directly rather than through a residual.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
  const double max_eig = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (eig.eigenvalues().minCoeff() <= 1e-12 * std::max(max_eig, 1e-300))
    fail(errk::conditioning,
         "lse_fit: regularized measurement correlation is numerically singular; "
         "raise the noise level or drop dependent measurement channels");

  Eigen::LDLT<Matrix> ldlt(A);
  model.transfer = ldlt.solve(C_zy.transpose()).transpose();
  return model;
}

Vector lse_apply(const LseModel& model, const Vector& y) {
  if (y.size() != model.transfer.cols())
    fail(errk::shape, "lse_apply: measurement length does not match model");
  return model.transfer * (y - model.mean_y) + model.mean_z;
}

Matrix lse_apply(const LseModel& model, const Matrix& y_columns) {
  if (y_columns.rows() != model.transfer.cols())
    fail(errk::shape, "lse_apply: measurement rows do not match model");
  Matrix out = model.transfer * (y_columns.colwise() - model.mean_y);
  out.colwise() += model.mean_z;
  return out;
}

SensingNmse sensing_nmse(const Matrix& truth, const Matrix& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
    fail(errk::shape, "sensing_nmse: shapes differ");
  SensingNmse out;
  out.per_target.resize(truth.rows());
  double num_sum = 0.0, den_sum = 0.0;
  for (Eigen::Index i = 0; i < truth.rows(); ++i) {
    const double num = (estimate.row(i) - truth.row(i)).squaredNorm();
    const double den = truth.row(i).squaredNorm();
    if (den <= 0.0)
      fail(errk::undefined_metric,
           "sensing_nmse: target channel " + std::to_string(i) + " has zero energy");
    out.per_target(i) = num / den;
    num_sum += num;
    den_sum += den;
  }
  out.total = num_sum / den_sum;
  return out;
}

SensingMethod sensing_method_from_name(const std::string& name) {
  if (name == "lse") return SensingMethod::lse;
  if (name == "wiener_causal") return SensingMethod::wiener_causal;
  if (name == "wiener_noncausal") return SensingMethod::wiener_noncausal;
  fail(errk::config, "unknown sensing method '" + name +
                         "' (expected lse, wiener_causal, wiener_noncausal)");
}

const char* sensing_method_name(SensingMethod method) {
  switch (method) {
    case SensingMethod::lse: return "lse";
    case SensingMethod::wiener_causal: return "wiener_causal";
    case SensingMethod::wiener_noncausal: return "wiener_noncausal";
  }
  return "?";
}

SensingRun run_sensing_pipeline(const Matrix& train_y, const Matrix& train_z,
                                const Matrix& test_y, SensingMethod method,
                                const SensingConfig& config, const Matrix* test_z) {
  if (train_y.cols() != train_z.cols())
    fail(errk::shape, "run_sensing_pipeline: training pairs must share the time axis");
  if (test_y.rows() != train_y.rows())
    fail(errk::shape, "run_sensing_pipeline: test measurements have wrong channel count");
  const Eigen::Index T_test = test_y.cols();
  if (T_test < config.history + 1)
    fail(errk::insufficient_history,
         "run_sensing_pipeline: test series length " + std::to_string(T_test) +
             " shorter than history + 1 = " + std::to_string(config.history + 1));

  SensingRun run;
  if (method == SensingMethod::lse) {
    LseModel model = lse_fit(train_y, train_z, config.noise_level);
    run.estimates = lse_apply(model, test_y);
    run.warmup = config.history;
    run.valid_end = T_test;
    // The warm-up window is excluded from the metric for every method, so
    // zero it in the emitted estimates as well.
    run.estimates.leftCols(run.warmup).setZero();
  } else {
    const Vector mean_y = train_y.rowwise().mean();
    const Vector mean_z = train_z.rowwise().mean();
    const Vector window = sine_window(config.welch_block, config.window_order);
    CsdSet csd = welch_csd(train_y.colwise() - mean_y, train_z.colwise() - mean_z,
                           config.welch_block, config.welch_overlap, window, config.dt,
                           "sine-" + std::to_string(config.window_order));
    TransferFunctionSet tf = method == SensingMethod::wiener_causal
                                 ? causal_wiener(csd, config.noise_level)
                                 : noncausal_wiener(csd, config.noise_level);
    FilteredSeries filtered = apply_filter(tf, test_y.colwise() - mean_y, config.history);
    run.estimates = filtered.values;
    run.warmup = filtered.warmup;
    run.valid_end = filtered.valid_end;
    for (Eigen::Index t = run.warmup; t < run.valid_end; ++t)
      run.estimates.col(t) += mean_z;
    run.transfer = std::move(tf);
  }

  if (test_z != nullptr) {
    if (test_z->rows() != train_z.rows() || test_z->cols() != T_test)
      fail(errk::shape, "run_sensing_pipeline: test targets have wrong shape");
    const Eigen::Index width = run.valid_end - run.warmup;
    run.nmse = sensing_nmse(test_z->middleCols(run.warmup, width),
                            run.estimates.middleCols(run.warmup, width));
  }
  return run;
}

}  // namespace flowbench
