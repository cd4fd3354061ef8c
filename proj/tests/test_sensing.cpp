#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <flowbench/errors.hpp>
#include <flowbench/rng.hpp>
#include <flowbench/sensing.hpp>
#include <flowbench/synthetic.hpp>

#include <cmath>

#include "test_helpers.hpp"

using namespace flowbench;
using testutil::random_matrix;

namespace {

Matrix gaussian_signal(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed, 0);
  Matrix out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = rng.next_gaussian();
  return out;
}

SnapshotMatrix grid_field(std::int64_t nx, std::int64_t T, std::uint32_t seed) {
  SnapshotMatrix field;
  field.space_dims = {nx};
  field.n_channels = 1;
  field.data = random_matrix(nx, T, seed);
  return field;
}

}  // namespace

TEST_CASE("gaussian_probe: constant field reads back the constant") {
  SnapshotMatrix field = grid_field(101, 3, 1);
  field.data.setConstant(2.75);
  ProbeSpec spec;
  spec.centers = {{20.0}, {50.0}, {80.0}};
  for (double sigma : {0.5, 2.0, 10.0}) {
    spec.sigma = sigma;
    Matrix probes = gaussian_probe(field, spec);
    for (Eigen::Index p = 0; p < 3; ++p)
      for (Eigen::Index t = 0; t < 3; ++t)
        CHECK(probes(p, t) == doctest::Approx(2.75).epsilon(1e-12));
  }
}

TEST_CASE("gaussian_probe: indicator at the center approaches 1 as sigma shrinks") {
  SnapshotMatrix field = grid_field(61, 1, 2);
  field.data.setZero();
  field.data(30, 0) = 1.0;
  ProbeSpec spec;
  spec.centers = {{30.0}};
  double prev = 0.0;
  for (double sigma : {1.0, 0.5, 0.25}) {
    spec.sigma = sigma;
    const double value = gaussian_probe(field, spec)(0, 0);
    CHECK(value > prev);
    prev = value;
  }
  CHECK(prev > 0.9);
}

TEST_CASE("gaussian_probe: linear field reads the center coordinate") {
  SnapshotMatrix field = grid_field(101, 1, 3);
  for (Eigen::Index i = 0; i < 101; ++i) field.data(i, 0) = static_cast<double>(i);
  ProbeSpec spec;
  spec.sigma = 2.0;
  spec.centers = {{30.0}, {64.0}};
  Matrix probes = gaussian_probe(field, spec);
  CHECK(probes(0, 0) == doctest::Approx(30.0).epsilon(1e-10));
  CHECK(probes(1, 0) == doctest::Approx(64.0).epsilon(1e-10));
}

TEST_CASE("gaussian_probe: 2-D grid with channel selection") {
  SnapshotMatrix field;
  field.space_dims = {21, 17};
  field.n_channels = 2;
  field.data = Matrix::Zero(21 * 17 * 2, 1);
  // Channel 1 holds x-coordinate values, channel 0 stays zero.
  for (std::int64_t ix = 0; ix < 21; ++ix)
    for (std::int64_t iy = 0; iy < 17; ++iy)
      field.data(21 * 17 + ix * 17 + iy, 0) = static_cast<double>(ix);
  ProbeSpec spec;
  spec.sigma = 1.5;
  spec.centers = {{10.0, 8.0}, {10.0, 8.0}};
  spec.channels = {0, 1};
  Matrix probes = gaussian_probe(field, spec);
  CHECK(probes(0, 0) == doctest::Approx(0.0));
  CHECK(probes(1, 0) == doctest::Approx(10.0).epsilon(1e-10));
}

TEST_CASE("gaussian_probe: center outside the grid is an input error") {
  SnapshotMatrix field = grid_field(50, 1, 4);
  ProbeSpec spec;
  spec.centers = {{75.0}};
  CHECK_THROWS_AS(gaussian_probe(field, spec), Error);
}

TEST_CASE("lse_fit: identity and scalar scaling") {
  Matrix Y = gaussian_signal(4, 3000, 5);
  LseModel ident = lse_fit(Y, Y, 0.0);
  CHECK((ident.transfer - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);

  Matrix Z = 2.0 * Y.topRows(1);
  LseModel doubled = lse_fit(Y.topRows(1), Z, 0.0);
  CHECK(doubled.transfer(0, 0) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("lse_fit: scalar shrinkage matches the closed form") {
  Matrix Y = gaussian_signal(1, 5000, 6);
  Matrix Z = 1.5 * Y;
  const double level = 0.3;
  LseModel model = lse_fit(Y, Z, level);
  // Closed form: T = c_zy / (c_yy (1 + level^2)) for N = level^2 c_yy.
  Vector mean_y = Y.rowwise().mean();
  const double c_yy = (Y.colwise() - mean_y).squaredNorm() / 5000.0;
  const double c_zy = 1.5 * c_yy;
  CHECK(model.transfer(0, 0) ==
        doctest::Approx(c_zy / (c_yy * (1.0 + level * level))).epsilon(1e-12));
}

TEST_CASE("lse_fit: equals the ridge-regularized normal equations") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    Matrix Y = gaussian_signal(8, 500, seed);
    Matrix H = random_matrix(12, 8, static_cast<std::uint32_t>(seed));
    Matrix Z = H * Y + 0.1 * gaussian_signal(12, 500, seed + 100);
    const double level = 1e-3;
    LseModel model = lse_fit(Y, Z, level);

    // Brute-force oracle: stacked ridge least squares solved by QR, one
    // target row at a time. min ||Yf^T t - Zf^T||^2 + T ||N^(1/2) t||^2.
    Vector mean_y = Y.rowwise().mean();
    Vector mean_z = Z.rowwise().mean();
    Matrix Yf = Y.colwise() - mean_y;
    Matrix Zf = Z.colwise() - mean_z;
    Matrix C_yy = Yf * Yf.transpose() / 500.0;
    Matrix ridge = Matrix::Zero(8, 8);
    ridge.diagonal() = (500.0 * level * level * C_yy.diagonal()).cwiseSqrt();
    Matrix stacked(500 + 8, 8);
    stacked.topRows(500) = Yf.transpose();
    stacked.bottomRows(8) = ridge;
    Matrix rhs = Matrix::Zero(500 + 8, 12);
    rhs.topRows(500) = Zf.transpose();
    Matrix T_oracle =
        stacked.colPivHouseholderQr().solve(rhs).transpose();
    CHECK((model.transfer - T_oracle).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("lse_fit: singular measurement correlation without noise is a conditioning error") {
  Matrix Y = gaussian_signal(3, 400, 30);
  Y.row(2) = Y.row(0) + Y.row(1);  // exactly dependent channels
  Matrix Z = gaussian_signal(2, 400, 31);
  try {
    lse_fit(Y, Z, 0.0);
    FAIL("expected conditioning error");
  } catch (const Error& e) {
    CHECK(e.kind() == std::string(errk::conditioning));
  }
  // The regularized fit succeeds.
  CHECK_NOTHROW(lse_fit(Y, Z, 1e-3));
}

TEST_CASE("lse optimality: fitted map beats random perturbations on training data") {
  Matrix Y = gaussian_signal(6, 2000, 9);
  Matrix H = random_matrix(4, 6, 10);
  Matrix Z = H * Y + 0.05 * gaussian_signal(4, 2000, 11);
  LseModel model = lse_fit(Y, Z, 0.0);
  const double base_mse = (lse_apply(model, Y) - Z).squaredNorm();
  const double scale = 1e-3 * model.transfer.norm();
  for (std::uint32_t seed = 0; seed < 20; ++seed) {
    Matrix R = random_matrix(4, 6, 500 + seed);
    LseModel perturbed = model;
    perturbed.transfer += scale * R / R.norm();
    const double mse = (lse_apply(perturbed, Y) - Z).squaredNorm();
    CHECK(base_mse <= mse);
  }
}

TEST_CASE("lse shrinkage: transfer norm is non-increasing in the noise level") {
  Matrix Y = gaussian_signal(1, 4000, 12);
  Matrix Z = 0.8 * Y;
  double prev = 1e300;
  for (double level : {0.0, 0.01, 0.1, 0.5, 1.0, 2.0}) {
    LseModel model = lse_fit(Y, Z, level);
    const double norm = std::abs(model.transfer(0, 0));
    CHECK(norm <= prev + 1e-14);
    prev = norm;
  }
}

TEST_CASE("lse_apply: mean maps to mean, identity maps through") {
  Matrix Y = gaussian_signal(3, 300, 13).colwise() + Vector::Constant(3, 2.0);
  Matrix Z = gaussian_signal(2, 300, 14).colwise() + Vector::Constant(2, -1.0);
  LseModel model = lse_fit(Y, Z, 0.0);
  Vector at_mean = lse_apply(model, Vector(model.mean_y));
  CHECK((at_mean - model.mean_z).cwiseAbs().maxCoeff() < 1e-12);

  LseModel ident;
  ident.transfer = Matrix::Identity(3, 3);
  ident.mean_y = Vector::Zero(3);
  ident.mean_z = Vector::Zero(3);
  Vector y = Y.col(0);
  CHECK((lse_apply(ident, y) - y).cwiseAbs().maxCoeff() == 0.0);

  // Random model matches the explicit product.
  Vector via_matrix = model.transfer * (y - model.mean_y) + model.mean_z;
  CHECK((lse_apply(model, y) - via_matrix).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("reference wall-stress benchmark values stay pinned") {
  CHECK(kReferenceWallStressLseNmse == 0.912);
  CHECK(kReferenceWallStressCnnNmse == 0.239);
}

TEST_CASE("pipeline: empirical NMSE tracks the analytic MSE of the fitted filter") {
  // 0.1% measurement noise on y; the analytic quadratic-form MSE of the
  // estimated filter must agree with the measured test NMSE within 2x.
  CausalFirConfig config;
  config.seed = 41;
  config.taps = {0.6, 0.3, -0.2, 0.1};
  config.measurement_noise_level = 0.001;
  config.n_samples = 60000;
  config.n_bins = 400;  // match the Welch grid so spectra align bin by bin
  CausalFirData train = gen_causal_fir_pair(config);
  config.seed = 42;
  CausalFirData test = gen_causal_fir_pair(config);

  SensingConfig sc;
  sc.history = 150;
  SensingRun run = run_sensing_pipeline(train.y, train.z, test.y,
                                        SensingMethod::wiener_causal, sc, &test.z);
  REQUIRE(run.nmse.has_value());

  // Rebuild the same filter to evaluate its analytic risk.
  Vector window = sine_window(sc.welch_block, sc.window_order);
  Vector mean_y = train.y.rowwise().mean();
  Vector mean_z = train.z.rowwise().mean();
  CsdSet csd = welch_csd(train.y.colwise() - mean_y, train.z.colwise() - mean_z,
                         sc.welch_block, sc.welch_overlap, window, sc.dt, "sine-6");
  TransferFunctionSet tf = causal_wiener(csd, sc.noise_level);
  const int n = 400;
  std::vector<ComplexMatrix> S_zz(n), S_zy(n), S_yy(n);
  double var_z = 0.0;
  for (int k = 0; k < n; ++k) {
    S_zz[static_cast<std::size_t>(k)] =
        ComplexMatrix::Constant(1, 1, cdouble(train.analytic_S_zz(k), 0.0));
    S_zy[static_cast<std::size_t>(k)] = ComplexMatrix::Constant(1, 1, train.analytic_S_zy(k));
    S_yy[static_cast<std::size_t>(k)] =
        ComplexMatrix::Constant(1, 1, cdouble(train.analytic_S_yy(k), 0.0));
    var_z += train.analytic_S_zz(k);
  }
  var_z /= static_cast<double>(n);  // dt = 1
  const double analytic_nmse =
      testutil::analytic_filter_mse(S_zz, S_zy, S_yy, tf.T_hat, 1.0) / var_z;
  CHECK(run.nmse->total <= 2.0 * analytic_nmse);
  CHECK(analytic_nmse <= 2.0 * run.nmse->total);
}

TEST_CASE("sensing_nmse: identities and per-target curves") {
  Matrix truth = gaussian_signal(3, 400, 15);
  SensingNmse zero = sensing_nmse(truth, truth);
  CHECK(zero.total == 0.0);
  CHECK(zero.per_target.cwiseAbs().maxCoeff() == 0.0);

  SensingNmse one = sensing_nmse(truth, Matrix::Zero(3, 400));
  CHECK(one.total == doctest::Approx(1.0).epsilon(1e-14));
  for (int i = 0; i < 3; ++i) CHECK(one.per_target(i) == doctest::Approx(1.0).epsilon(1e-14));

  Matrix bad = truth;
  bad.row(1).setZero();
  CHECK_THROWS_AS(sensing_nmse(bad, truth), Error);
}

TEST_CASE("pipeline: lse on z = y achieves machine-zero error") {
  Matrix train_y = gaussian_signal(3, 2000, 16);
  Matrix test_y = gaussian_signal(3, 600, 17);
  SensingConfig config;
  config.history = 50;
  config.noise_level = 0.0;
  SensingRun run = run_sensing_pipeline(train_y, train_y, test_y, SensingMethod::lse, config,
                                        &test_y);
  REQUIRE(run.nmse.has_value());
  CHECK(run.nmse->total <= 1e-10);
}

TEST_CASE("pipeline: causal Wiener recovers a causal FIR truth to the noise floor") {
  CausalFirConfig config;
  config.seed = 18;
  config.taps = {0.6, 0.3, -0.2, 0.1, 0.05};
  config.n_samples = 60000;
  CausalFirData train = gen_causal_fir_pair(config);
  config.seed = 19;
  CausalFirData test = gen_causal_fir_pair(config);

  SensingConfig sc;
  sc.history = 200;
  sc.noise_level = 1e-3;
  SensingRun run = run_sensing_pipeline(train.y, train.z, test.y,
                                        SensingMethod::wiener_causal, sc, &test.z);
  REQUIRE(run.nmse.has_value());
  CHECK(run.nmse->total <= 1e-3);
}

TEST_CASE("pipeline: causal estimates ignore future measurements") {
  CausalFirConfig config;
  config.seed = 21;
  config.taps = {0.5, 0.25};
  config.n_samples = 20000;
  CausalFirData train = gen_causal_fir_pair(config);
  config.seed = 22;
  CausalFirData test = gen_causal_fir_pair(config);

  SensingConfig sc;
  sc.history = 150;
  SensingRun base = run_sensing_pipeline(train.y, train.z, test.y,
                                         SensingMethod::wiener_causal, sc);
  // Mutate the strict future of t0 and re-run; columns <= t0 must not move.
  const Eigen::Index t0 = 400;
  Matrix mutated = test.y;
  mutated.rightCols(mutated.cols() - (t0 + 1)).array() += 5.0;
  mutated.rightCols(mutated.cols() - (t0 + 1)).array() *= -1.3;
  SensingRun moved = run_sensing_pipeline(train.y, train.z, mutated,
                                          SensingMethod::wiener_causal, sc);
  CHECK((base.estimates.leftCols(t0 + 1) - moved.estimates.leftCols(t0 + 1))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("pipeline: noncausal beats causal on anticausal truth") {
  CausalFirConfig config;
  config.seed = 23;
  config.taps = {0.6, 0.3};
  config.anticausal_taps = {0.8};
  config.n_samples = 60000;
  CausalFirData train = gen_causal_fir_pair(config);
  config.seed = 24;
  CausalFirData test = gen_causal_fir_pair(config);

  SensingConfig sc;
  sc.history = 150;
  SensingRun causal = run_sensing_pipeline(train.y, train.z, test.y,
                                           SensingMethod::wiener_causal, sc, &test.z);
  SensingRun noncausal = run_sensing_pipeline(train.y, train.z, test.y,
                                              SensingMethod::wiener_noncausal, sc, &test.z);
  REQUIRE(causal.nmse.has_value());
  REQUIRE(noncausal.nmse.has_value());
  CHECK(noncausal.nmse->total <= causal.nmse->total * 1.05);
  // The designed anticausal energy keeps the gap wide.
  CHECK(causal.nmse->total > 2.0 * noncausal.nmse->total);
}

TEST_CASE("pipeline: short test series is an insufficient-history error") {
  Matrix train_y = gaussian_signal(1, 2000, 25);
  Matrix test_y = gaussian_signal(1, 100, 26);
  SensingConfig config;
  config.history = 200;
  try {
    run_sensing_pipeline(train_y, train_y, test_y, SensingMethod::lse, config);
    FAIL("expected insufficient-history error");
  } catch (const Error& e) {
    CHECK(e.kind() == std::string(errk::insufficient_history));
  }
}
