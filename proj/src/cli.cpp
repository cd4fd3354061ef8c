#include "flowbench/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "flowbench/compression.hpp"
#include "flowbench/errors.hpp"
#include "flowbench/forecasting.hpp"
#include "flowbench/sensing.hpp"
#include "flowbench/synthetic.hpp"
#include "flowbench/threading.hpp"

namespace flowbench {

namespace {

using json = nlohmann::json;

template <typename T>
T get_or(const json& config, const std::string& key, const T& fallback) {
  if (!config.contains(key)) return fallback;
  try {
    return config.at(key).get<T>();
  } catch (const json::exception&) {
    fail(errk::config, "parameter '" + key + "' has the wrong type");
  }
}

std::string require_string(const json& config, const std::string& key) {
  if (!config.contains(key) || !config.at(key).is_string() ||
      config.at(key).get<std::string>().empty())
    fail(errk::config, "missing required parameter '" + key + "'");
  return config.at(key).get<std::string>();
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::vector<cdouble> parse_eigenvalues(const json& config) {
  // Eigenvalues are given as [[re, im], ...]; default is a stable
  // conjugate-closed triple.
  if (!config.contains("eigenvalues"))
    return {cdouble(0.95) * std::exp(cdouble(0.0, 0.4)),
            cdouble(0.95) * std::exp(cdouble(0.0, -0.4)), cdouble(0.7, 0.0)};
  std::vector<cdouble> out;
  for (const auto& pair : config.at("eigenvalues")) {
    if (!pair.is_array() || pair.size() != 2)
      fail(errk::config, "eigenvalues must be [[re, im], ...]");
    out.emplace_back(pair[0].get<double>(), pair[1].get<double>());
  }
  return out;
}

TypedArray scalar_array(double v) { return TypedArray({1}, std::vector<double>{v}); }
TypedArray scalar_i64(std::int64_t v) { return TypedArray({1}, std::vector<std::int64_t>{v}); }

TypedArray cvector_to_array(const ComplexVector& v) {
  return TypedArray({v.size()},
                    std::vector<cdouble>(v.data(), v.data() + v.size()));
}

Matrix signal_from_arrays(const ArrayMap& arrays, const std::string& name) {
  auto it = arrays.find(name);
  if (it == arrays.end())
    fail(errk::evaluation, "container has no '" + name + "' array");
  return matrix_from_array(it->second);
}

struct MethodTag {
  ChallengeTag tag;
};

MethodTag classify_method(const std::string& method) {
  if (method == "pod") return {ChallengeTag::compression};
  if (method == "dmd" || method == "dmdc") return {ChallengeTag::forecasting};
  if (method == "lse" || method == "wiener_causal" || method == "wiener_noncausal")
    return {ChallengeTag::sensing};
  fail(errk::config, "unknown method '" + method +
                         "' (expected pod, dmd, dmdc, lse, wiener_causal, wiener_noncausal)");
}

// ---- generate ----------------------------------------------------------

void generate_low_rank_field(const json& config, ArrayMap& arrays, MetaMap& meta) {
  LowRankFieldConfig c;
  c.seed = get_or<std::uint64_t>(config, "seed", 1);
  c.space = get_or<std::int64_t>(config, "space", 200);
  c.n_channels = get_or<std::int64_t>(config, "channels", 1);
  c.n_snapshots = get_or<std::int64_t>(config, "snapshots", 50);
  c.energies = get_or<std::vector<double>>(config, "energies", {9.0, 4.0, 1.0});
  c.dt = get_or<double>(config, "dt", 1.0);
  LowRankField data = gen_low_rank_field(c);
  arrays = snapshot_to_arrays(data.snapshots);
  arrays.emplace("truth_modes", matrix_to_array(data.true_basis));
  arrays.emplace("truth_energies", vector_to_array(data.true_energies));
  meta["generator"] = "low_rank_field";
}

void generate_linear_modal(const json& config, ArrayMap& arrays, MetaMap& meta) {
  LinearModalConfig c;
  c.seed = get_or<std::uint64_t>(config, "seed", 1);
  c.space = get_or<std::int64_t>(config, "space", 100);
  c.n_pairs = get_or<std::int64_t>(config, "pairs", 99);
  c.n_sequences = get_or<std::int64_t>(config, "sequences", 4);
  c.dt = get_or<double>(config, "dt", 1.0);
  c.eigenvalues = parse_eigenvalues(config);
  LinearModalData data = gen_linear_modal(c);
  arrays.emplace("data", ensemble_to_array(data.sequences));
  arrays.emplace("dt", scalar_array(c.dt));
  arrays.emplace("truth_eigenvalues", cvector_to_array(data.true_eigenvalues));
  arrays.emplace("truth_modes", cmatrix_to_array(data.true_modes));
  arrays.emplace("truth_amplitudes", cmatrix_to_array(data.true_amplitudes));
  meta["generator"] = "linear_modal";
}

void generate_forced_linear(const json& config, ArrayMap& arrays, MetaMap& meta) {
  ForcedLinearConfig c;
  c.seed = get_or<std::uint64_t>(config, "seed", 1);
  c.state_dim = get_or<int>(config, "state_dim", 4);
  c.input_dim = get_or<int>(config, "input_dim", 2);
  c.space = get_or<std::int64_t>(config, "space", 60);
  c.n_steps = get_or<std::int64_t>(config, "steps", 200);
  c.spectral_radius = get_or<double>(config, "spectral_radius", 0.9);
  c.zero_input_matrix = get_or<bool>(config, "zero_input_matrix", false);
  c.sinusoid_freq = get_or<double>(config, "sinusoid_freq", 0.35);
  c.n_sequences = get_or<std::int64_t>(config, "sequences", 1);
  c.dt = get_or<double>(config, "dt", 1.0);
  const std::string input_kind = get_or<std::string>(config, "input_kind", "white");
  if (input_kind == "white")
    c.input_kind = InputKind::white;
  else if (input_kind == "single_sinusoid")
    c.input_kind = InputKind::single_sinusoid;
  else
    fail(errk::config, "input_kind must be white or single_sinusoid");

  ForcedLinearData data = gen_forced_linear(c);
  arrays.emplace("data", ensemble_to_array(data.state_sequences));
  arrays.emplace("dt", scalar_array(c.dt));
  const auto S = static_cast<std::int64_t>(data.input_sequences.size());
  const std::int64_t m = data.input_sequences.front().rows();
  const std::int64_t T = data.input_sequences.front().cols();
  std::vector<double> inputs(static_cast<std::size_t>(S * m * T));
  for (std::int64_t s = 0; s < S; ++s)
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t t = 0; t < T; ++t)
        inputs[static_cast<std::size_t>((s * m + i) * T + t)] =
            data.input_sequences[static_cast<std::size_t>(s)](i, t);
  arrays.emplace("inputs", TypedArray({S, m, T}, std::move(inputs)));
  arrays.emplace("truth_A", matrix_to_array(data.true_A));
  arrays.emplace("truth_B", matrix_to_array(data.true_B));
  arrays.emplace("truth_embedding", matrix_to_array(data.embedding));
  meta["generator"] = "forced_linear";
}

void generate_ar_process(const json& config, ArrayMap& arrays, MetaMap& meta) {
  ArProcessConfig c;
  c.seed = get_or<std::uint64_t>(config, "seed", 1);
  c.a = get_or<double>(config, "a", 0.8);
  c.sigma = get_or<double>(config, "sigma", 1.0);
  c.n_samples = get_or<std::int64_t>(config, "samples", 20000);
  c.dt = get_or<double>(config, "dt", 1.0);
  c.n_bins = get_or<std::int64_t>(config, "bins", 1024);
  ArProcessData data = gen_ar_process(c);
  arrays.emplace("y", matrix_to_array(data.y));
  arrays.emplace("dt", scalar_array(c.dt));
  arrays.emplace("analytic_frequencies", vector_to_array(data.analytic_frequencies));
  arrays.emplace("analytic_psd", vector_to_array(data.analytic_psd));
  meta["generator"] = "ar_process";
}

void generate_causal_fir_pair(const json& config, ArrayMap& arrays, MetaMap& meta) {
  CausalFirConfig c;
  c.seed = get_or<std::uint64_t>(config, "seed", 1);
  c.taps = get_or<std::vector<double>>(config, "taps", {0.6, 0.3, -0.2, 0.1, 0.05});
  c.anticausal_taps = get_or<std::vector<double>>(config, "anticausal_taps", {});
  c.n_samples = get_or<std::int64_t>(config, "samples", 20000);
  c.measurement_noise_level = get_or<double>(config, "noise_level", 0.0);
  c.ar_a = get_or<double>(config, "ar_a", 0.0);
  c.sigma = get_or<double>(config, "sigma", 1.0);
  c.dt = get_or<double>(config, "dt", 1.0);
  c.n_bins = get_or<std::int64_t>(config, "bins", 1024);
  CausalFirData data = gen_causal_fir_pair(c);
  arrays.emplace("y", matrix_to_array(data.y));
  arrays.emplace("z", matrix_to_array(data.z));
  arrays.emplace("dt", scalar_array(c.dt));
  arrays.emplace("truth_taps",
                 TypedArray({static_cast<std::int64_t>(c.taps.size())}, c.taps));
  arrays.emplace("truth_anticausal_taps",
                 TypedArray({static_cast<std::int64_t>(c.anticausal_taps.size())},
                            c.anticausal_taps));
  arrays.emplace("analytic_frequencies", vector_to_array(data.analytic_frequencies));
  arrays.emplace("analytic_S_yy", vector_to_array(data.analytic_S_yy));
  arrays.emplace("analytic_S_zy", cvector_to_array(data.analytic_S_zy));
  arrays.emplace("analytic_S_zz", vector_to_array(data.analytic_S_zz));
  meta["generator"] = "causal_fir_pair";
}

// ---- fit-apply ---------------------------------------------------------

ResultsFile fit_apply_pod(const json& config) {
  Container train = read_container(require_string(config, "train"));
  Container test = read_container(require_string(config, "test_input"));
  SnapshotMatrix train_snaps = snapshot_from_arrays(train.arrays);
  SnapshotMatrix test_snaps = snapshot_from_arrays(test.arrays);

  const auto n_modes = get_or<Eigen::Index>(config, "modes", 8);
  const bool subtract_mean = get_or<bool>(config, "subtract_mean", true);
  PodBasis basis = pod_fit(train_snaps, n_modes, subtract_mean);

  const double t0 = now_seconds();
  LatentBlock latent = pod_encode(basis, test_snaps);
  const double t1 = now_seconds();
  SnapshotMatrix decoded = pod_decode(basis, latent, test_snaps);
  const double t2 = now_seconds();
  (void)decoded;

  ResultsFile results;
  results.tag = ChallengeTag::compression;
  results.method_name = "pod";
  results.arrays.emplace("modes", matrix_to_array(basis.modes));
  results.arrays.emplace("energies", vector_to_array(basis.energies));
  if (basis.mean) results.arrays.emplace("mean", vector_to_array(*basis.mean));
  results.arrays.emplace("latent", matrix_to_array(latent.coefficients));
  results.arrays.emplace("encode_seconds", scalar_array(t1 - t0));
  results.arrays.emplace("decode_seconds", scalar_array(t2 - t1));
  return results;
}

ResultsFile fit_apply_dmd(const json& config) {
  Container test = read_container(require_string(config, "test_input"));
  auto data_it = test.arrays.find("data");
  if (data_it == test.arrays.end())
    fail(errk::evaluation, "test input container has no 'data' ensemble");
  double dt = 1.0;
  if (auto it = test.arrays.find("dt"); it != test.arrays.end()) dt = it->second.f64()[0];
  std::vector<SnapshotMatrix> sequences = ensemble_from_array(data_it->second, dt);

  const auto m_in = get_or<Eigen::Index>(config, "m_in", 70);
  const auto horizon = get_or<int>(config, "horizon", 30);
  const auto rank = get_or<Eigen::Index>(config, "rank", 25);
  if (rank > m_in - 1)
    fail(errk::rank, "dmd: rank must be at most m_in - 1");

  const auto S = static_cast<std::int64_t>(sequences.size());
  std::vector<ForecastRequest> requests(static_cast<std::size_t>(S));
  for (std::int64_t s = 0; s < S; ++s) {
    const SnapshotMatrix& seq = sequences[static_cast<std::size_t>(s)];
    if (seq.n_snapshots() < m_in)
      fail(errk::input, "dmd: sequence shorter than m_in = " + std::to_string(m_in));
    ForecastRequest& request = requests[static_cast<std::size_t>(s)];
    request.history = seq;
    request.history.data = seq.data.leftCols(m_in);
    request.horizon = horizon;
    request.validate();
  }

  const std::int64_t D = sequences.front().flat_dim();
  std::vector<double> forecasts(static_cast<std::size_t>(S * horizon * D));
  std::vector<double> residues(static_cast<std::size_t>(S), 0.0);
  parallel_for(S, [&](std::int64_t s) {
    const Matrix& window = requests[static_cast<std::size_t>(s)].history.data;
    Matrix Q1 = window.leftCols(m_in - 1);
    Matrix Q2 = window.middleCols(1, m_in - 1);
    DmdModel model = dmd_fit(Q1, Q2, rank, dt);
    // Amplitudes from the last provided snapshot, so step k predicts column
    // m_in - 1 + k of the full sequence.
    ComplexVector b = dmd_amplitudes(model, window.col(m_in - 1));
    DmdForecast fc = dmd_forecast(model, b, horizon);
    residues[static_cast<std::size_t>(s)] = fc.imag_residue_ratio;
    for (int k = 0; k < horizon; ++k)
      for (std::int64_t i = 0; i < D; ++i)
        forecasts[static_cast<std::size_t>((s * horizon + k) * D + i)] = fc.states(i, k);
  });
  for (std::int64_t s = 0; s < S; ++s)
    if (residues[static_cast<std::size_t>(s)] > 1e-8)
      std::cerr << "warning[conjugacy]: sequence " << s << " imaginary residue ratio "
                << residues[static_cast<std::size_t>(s)] << "\n";

  ResultsFile results;
  results.tag = ChallengeTag::forecasting;
  results.method_name = "dmd";
  results.arrays.emplace("forecasts", TypedArray({S, horizon, D}, std::move(forecasts)));
  return results;
}

ResultsFile fit_apply_dmdc(const json& config) {
  Container train = read_container(require_string(config, "train"));
  Container test = read_container(require_string(config, "test_input"));
  auto get_ensemble = [](Container& c, const char* what) {
    auto it = c.arrays.find("data");
    if (it == c.arrays.end())
      fail(errk::evaluation, std::string(what) + " container has no 'data' ensemble");
    double dt = 1.0;
    if (auto d = c.arrays.find("dt"); d != c.arrays.end()) dt = d->second.f64()[0];
    return ensemble_from_array(it->second, dt);
  };
  auto get_inputs = [](Container& c, const char* what) {
    auto it = c.arrays.find("inputs");
    if (it == c.arrays.end())
      fail(errk::evaluation, std::string(what) + " container has no 'inputs' array");
    const auto& a = it->second;
    if (a.shape().size() != 3) fail(errk::schema, "'inputs' must be [sequences, m, T]");
    std::vector<Matrix> out;
    const std::int64_t S = a.shape()[0], m = a.shape()[1], T = a.shape()[2];
    const auto& v = a.f64();
    for (std::int64_t s = 0; s < S; ++s) {
      Matrix u(m, T);
      for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t t = 0; t < T; ++t)
          u(i, t) = v[static_cast<std::size_t>((s * m + i) * T + t)];
      out.push_back(std::move(u));
    }
    return out;
  };

  auto train_seqs = get_ensemble(train, "train");
  auto train_inputs = get_inputs(train, "train");
  auto test_seqs = get_ensemble(test, "test input");
  auto test_inputs = get_inputs(test, "test input");
  if (train_seqs.size() != train_inputs.size() || test_seqs.size() != test_inputs.size())
    fail(errk::shape, "dmdc: ensemble and input sequence counts differ");

  const double dt = train_seqs.front().dt;
  const auto r = get_or<Eigen::Index>(config, "pod_rank", 20);
  const auto operator_rank = get_or<Eigen::Index>(config, "operator_rank", -1);
  const auto m_in = get_or<Eigen::Index>(config, "m_in", 70);
  const auto horizon = get_or<Eigen::Index>(config, "horizon", 130);

  // One global model across all training sequences (snapshot pairs pooled).
  const std::int64_t D = train_seqs.front().flat_dim();
  std::int64_t total_pairs = 0;
  for (const auto& seq : train_seqs) total_pairs += seq.n_snapshots() - 1;
  Matrix Q1(D, total_pairs), Q2(D, total_pairs);
  Matrix U(train_inputs.front().rows(), total_pairs);
  std::int64_t col = 0;
  for (std::size_t s = 0; s < train_seqs.size(); ++s) {
    const Matrix& data = train_seqs[s].data;
    const Matrix& u = train_inputs[s];
    const std::int64_t pairs = data.cols() - 1;
    if (u.cols() < pairs)
      fail(errk::shape, "dmdc: training inputs shorter than snapshot pairs");
    Q1.middleCols(col, pairs) = data.leftCols(pairs);
    Q2.middleCols(col, pairs) = data.middleCols(1, pairs);
    U.middleCols(col, pairs) = u.leftCols(pairs);
    col += pairs;
  }
  DmdcModel model = dmdc_fit(Q1, Q2, U, r, dt, operator_rank);

  const auto S = static_cast<std::int64_t>(test_seqs.size());
  std::vector<ForecastRequest> requests(static_cast<std::size_t>(S));
  for (std::int64_t s = 0; s < S; ++s) {
    const SnapshotMatrix& seq = test_seqs[static_cast<std::size_t>(s)];
    const Matrix& u = test_inputs[static_cast<std::size_t>(s)];
    if (seq.n_snapshots() < m_in)
      fail(errk::input, "dmdc: test sequence shorter than m_in");
    if (u.cols() < m_in + horizon)
      fail(errk::input, "dmdc: test inputs do not cover the forecast horizon");
    ForecastRequest& request = requests[static_cast<std::size_t>(s)];
    request.history = seq;
    request.history.data = seq.data.leftCols(m_in);
    request.horizon = static_cast<int>(horizon);
    request.inputs = u.leftCols(m_in + horizon);
    request.validate();
  }

  std::vector<double> forecasts(static_cast<std::size_t>(S * horizon * D));
  parallel_for(S, [&](std::int64_t s) {
    const ForecastRequest& request = requests[static_cast<std::size_t>(s)];
    const Matrix& window = request.history.data;
    // u at the time of the last provided snapshot drives the first step.
    Matrix u_fut = request.inputs->middleCols(m_in - 1, horizon);
    Matrix fc = dmdc_forecast(model, window.col(m_in - 1), u_fut);
    for (Eigen::Index k = 0; k < horizon; ++k)
      for (std::int64_t i = 0; i < D; ++i)
        forecasts[static_cast<std::size_t>((s * horizon + k) * D + i)] = fc(i, k);
  });

  ResultsFile results;
  results.tag = ChallengeTag::forecasting;
  results.method_name = "dmdc";
  results.arrays.emplace("forecasts", TypedArray({S, horizon, D}, std::move(forecasts)));
  return results;
}

ResultsFile fit_apply_sensing(const json& config, const std::string& method) {
  Container train = read_container(require_string(config, "train"));
  Container test = read_container(require_string(config, "test_input"));
  Matrix train_y = signal_from_arrays(train.arrays, "y");
  Matrix train_z = signal_from_arrays(train.arrays, "z");
  Matrix test_y = signal_from_arrays(test.arrays, "y");

  SensingConfig sc;
  sc.history = get_or<int>(config, "history", 200);
  sc.noise_level = get_or<double>(config, "noise_level", 1e-3);
  sc.welch_block = get_or<int>(config, "welch_block", 400);
  sc.welch_overlap = get_or<double>(config, "welch_overlap", 0.9);
  sc.window_order = get_or<int>(config, "window_order", 6);
  if (auto it = train.arrays.find("dt"); it != train.arrays.end())
    sc.dt = it->second.f64()[0];

  SensingRun run = run_sensing_pipeline(train_y, train_z, test_y,
                                        sensing_method_from_name(method), sc);

  ResultsFile results;
  results.tag = ChallengeTag::sensing;
  results.method_name = method;
  results.arrays.emplace("estimates", matrix_to_array(run.estimates));
  results.arrays.emplace("warmup", scalar_i64(run.warmup));
  results.arrays.emplace("valid_end", scalar_i64(run.valid_end));

  // Optionally attach the fitted transfer function so the estimator itself
  // can be inspected downstream.
  if (get_or<bool>(config, "emit_transfer", false) && run.transfer) {
    auto [tf_arrays, tf_meta] = transfer_function_to_arrays(*run.transfer);
    for (auto& [name, array] : tf_arrays) results.arrays.emplace(name, std::move(array));
    (void)tf_meta;
  }
  return results;
}

// ---- evaluate ----------------------------------------------------------

void append_csv_rows(std::ostringstream& csv, const std::string& metric, const Vector& mean,
                     const Vector& stddev) {
  for (Eigen::Index k = 0; k < mean.size(); ++k)
    csv << k << "," << metric << "," << mean(k) << ","
        << (stddev.size() == mean.size() ? stddev(k) : 0.0) << "\n";
}

MetricsFile evaluate_compression(const ResultsFile& results, const Container& truth,
                                 const json& config) {
  SnapshotMatrix truth_snaps = snapshot_from_arrays(truth.arrays);
  SchemaExpectations expect;
  expect.space = truth_snaps.flat_dim();
  expect.n_times = truth_snaps.n_snapshots();
  auto violations = validate_results(results, ChallengeTag::compression, &expect);
  if (!violations.empty())
    fail(errk::schema, "results file fails the compression schema: " + violations.front());

  PodBasis basis;
  basis.modes = matrix_from_array(results.arrays.at("modes"));
  basis.energies = vector_from_array(results.arrays.at("energies"));
  if (auto it = results.arrays.find("mean"); it != results.arrays.end())
    basis.mean = vector_from_array(it->second);
  LatentBlock latent{matrix_from_array(results.arrays.at("latent"))};
  SnapshotMatrix decoded = pod_decode(basis, latent, truth_snaps);

  MetricsFile metrics;
  metrics.tag = ChallengeTag::compression;
  metrics.values.emplace("root_nmse", scalar_array(root_nmse(truth_snaps, decoded)));
  metrics.values.emplace("compression_ratio",
                         scalar_array(compression_ratio(truth_snaps, latent)));

  double encode_s = 0.0, decode_s = 0.0;
  if (auto it = results.arrays.find("encode_seconds"); it != results.arrays.end())
    encode_s = it->second.f64()[0];
  if (auto it = results.arrays.find("decode_seconds"); it != results.arrays.end())
    decode_s = it->second.f64()[0];
  double base_encode = encode_s, base_decode = decode_s;
  if (config.contains("baseline_results")) {
    ResultsFile base = read_results(config.at("baseline_results").get<std::string>());
    if (auto it = base.arrays.find("encode_seconds"); it != base.arrays.end())
      base_encode = it->second.f64()[0];
    if (auto it = base.arrays.find("decode_seconds"); it != base.arrays.end())
      base_decode = it->second.f64()[0];
  }
  metrics.values.emplace("encode_time_ratio",
                         scalar_array(base_encode > 0.0 ? encode_s / base_encode : 1.0));
  metrics.values.emplace("decode_time_ratio",
                         scalar_array(base_decode > 0.0 ? decode_s / base_decode : 1.0));
  return metrics;
}

MetricsFile evaluate_forecasting(const ResultsFile& results, const Container& truth,
                                 const json& config) {
  auto data_it = truth.arrays.find("data");
  if (data_it == truth.arrays.end())
    fail(errk::evaluation, "truth container has no 'data' ensemble");
  double dt = 1.0;
  if (auto it = truth.arrays.find("dt"); it != truth.arrays.end()) dt = it->second.f64()[0];
  auto sequences = ensemble_from_array(data_it->second, dt);

  // m_in comes from the echoed configuration of the fit-apply run.
  json prov;
  try {
    prov = json::parse(results.provenance);
  } catch (const json::exception&) {
    prov = json::object();
  }
  const auto m_in =
      config.contains("m_in") ? config.at("m_in").get<Eigen::Index>()
                              : get_or<Eigen::Index>(prov, "m_in", 70);

  const auto& f = results.arrays.at("forecasts");
  SchemaExpectations expect;
  expect.sequences = static_cast<std::int64_t>(sequences.size());
  expect.space = sequences.front().flat_dim();
  auto violations = validate_results(results, ChallengeTag::forecasting, &expect);
  if (!violations.empty())
    fail(errk::schema, "results file fails the forecasting schema: " + violations.front());
  const std::int64_t S = f.shape()[0];
  const std::int64_t horizon = f.shape()[1];
  const std::int64_t D = f.shape()[2];
  for (const auto& seq : sequences)
    if (seq.n_snapshots() < m_in + horizon)
      fail(errk::evaluation, "truth sequences shorter than m_in + horizon");

  std::vector<Matrix> truth_ens, forecast_ens;
  const auto& values = f.f64();
  for (std::int64_t s = 0; s < S; ++s) {
    truth_ens.push_back(sequences[static_cast<std::size_t>(s)].data.middleCols(m_in, horizon));
    Matrix fc(D, horizon);
    for (std::int64_t k = 0; k < horizon; ++k)
      for (std::int64_t i = 0; i < D; ++i)
        fc(i, k) = values[static_cast<std::size_t>((s * horizon + k) * D + i)];
    forecast_ens.push_back(std::move(fc));
  }
  ForecastErrorCurves curves = forecast_nmse(truth_ens, forecast_ens);

  MetricsFile metrics;
  metrics.tag = ChallengeTag::forecasting;
  metrics.values.emplace("nmse_mean", vector_to_array(curves.mean));
  metrics.values.emplace("nmse_std", vector_to_array(curves.stddev));
  metrics.values.emplace("nmse_ensemble", vector_to_array(curves.ensemble));
  metrics.values.emplace("nmse_per_sequence", matrix_to_array(curves.per_sequence));
  return metrics;
}

MetricsFile evaluate_sensing(const ResultsFile& results, const Container& truth) {
  Matrix truth_z = signal_from_arrays(truth.arrays, "z");
  SchemaExpectations expect;
  expect.n_targets = truth_z.rows();
  expect.n_times = truth_z.cols();
  auto violations = validate_results(results, ChallengeTag::sensing, &expect);
  if (!violations.empty())
    fail(errk::schema, "results file fails the sensing schema: " + violations.front());

  Matrix estimates = matrix_from_array(results.arrays.at("estimates"));
  const std::int64_t warmup = results.arrays.at("warmup").i64()[0];
  std::int64_t valid_end = estimates.cols();
  if (auto it = results.arrays.find("valid_end"); it != results.arrays.end())
    valid_end = it->second.i64()[0];
  const std::int64_t width = valid_end - warmup;
  if (width <= 0) fail(errk::evaluation, "sensing results have an empty valid window");

  SensingNmse nmse = sensing_nmse(truth_z.middleCols(warmup, width),
                                  estimates.middleCols(warmup, width));
  MetricsFile metrics;
  metrics.tag = ChallengeTag::sensing;
  metrics.values.emplace("nmse_total", scalar_array(nmse.total));
  metrics.values.emplace("nmse_per_target", vector_to_array(nmse.per_target));
  return metrics;
}

}  // namespace

json expand_preset(const std::string& name) {
  if (name == "cavity-70-30")
    return json{{"method", "dmd"}, {"m_in", 70}, {"horizon", 30}, {"rank", 25}};
  if (name == "airfoil-70-130")
    return json{{"method", "dmdc"}, {"m_in", 70}, {"horizon", 130}, {"pod_rank", 20}};
  if (name == "jet-sensing-200")
    return json{{"method", "wiener_causal"}, {"history", 200},   {"noise_level", 1e-3},
                {"welch_block", 400},        {"welch_overlap", 0.9}, {"window_order", 6}};
  fail(errk::config, "unknown preset '" + name +
                         "' (expected cavity-70-30, airfoil-70-130, jet-sensing-200)");
}

json merge_config(json base, const json& overrides) {
  for (const auto& [key, value] : overrides.items()) base[key] = value;
  return base;
}

void cmd_generate(const json& config) {
  set_thread_count(get_or<int>(config, "threads", thread_count()));
  const std::string kind = require_string(config, "kind");
  const std::string out = require_string(config, "out");

  ArrayMap arrays;
  MetaMap meta;
  meta["kind"] = "dataset";
  meta["provenance"] = config.dump();
  if (kind == "low_rank_field")
    generate_low_rank_field(config, arrays, meta);
  else if (kind == "linear_modal")
    generate_linear_modal(config, arrays, meta);
  else if (kind == "forced_linear")
    generate_forced_linear(config, arrays, meta);
  else if (kind == "ar_process")
    generate_ar_process(config, arrays, meta);
  else if (kind == "causal_fir_pair")
    generate_causal_fir_pair(config, arrays, meta);
  else
    fail(errk::config, "unknown generator kind '" + kind +
                           "' (expected low_rank_field, linear_modal, forced_linear, "
                           "ar_process, causal_fir_pair)");
  write_container(out, arrays, meta);
}

ResultsFile cmd_fit_apply(const json& config) {
  set_thread_count(get_or<int>(config, "threads", thread_count()));
  const std::string method = require_string(config, "method");
  const std::string out = require_string(config, "out");
  classify_method(method);

  ResultsFile results;
  if (method == "pod")
    results = fit_apply_pod(config);
  else if (method == "dmd")
    results = fit_apply_dmd(config);
  else if (method == "dmdc")
    results = fit_apply_dmdc(config);
  else
    results = fit_apply_sensing(config, method);

  results.provenance = config.dump();
  auto violations = validate_results(results, results.tag);
  if (!violations.empty())
    fail(errk::schema, "produced results violate the schema: " + violations.front());
  write_results(out, results);
  return results;
}

MetricsFile cmd_evaluate(const json& config) {
  set_thread_count(get_or<int>(config, "threads", thread_count()));
  ResultsFile results = read_results(require_string(config, "results"));
  Container truth = read_container(require_string(config, "truth"));
  const std::string out = require_string(config, "out");

  MetricsFile metrics;
  switch (results.tag) {
    case ChallengeTag::compression:
      metrics = evaluate_compression(results, truth, config);
      break;
    case ChallengeTag::forecasting:
      metrics = evaluate_forecasting(results, truth, config);
      break;
    case ChallengeTag::sensing:
      metrics = evaluate_sensing(results, truth);
      break;
  }
  write_metrics(out, metrics);

  if (config.contains("csv")) {
    const std::string path = config.at("csv").get<std::string>();
    std::ofstream f(path);
    if (!f) fail(errk::io, "cannot write CSV '" + path + "'");
    std::ostringstream rows;
    rows << "index,metric,mean,std\n";
    if (metrics.values.count("nmse_mean") && metrics.values.count("nmse_std")) {
      // One row per lead time, std column from the sequence spread.
      append_csv_rows(rows, "nmse", vector_from_array(metrics.values.at("nmse_mean")),
                      vector_from_array(metrics.values.at("nmse_std")));
    } else {
      // One row per target / per scalar metric. Rank-2 tables stay in the
      // metrics container only.
      for (const auto& [name, a] : metrics.values)
        if (a.shape().size() == 1 && a.dtype() == Dtype::f64)
          append_csv_rows(rows, name, vector_from_array(a), Vector());
    }
    f << rows.str();
  }
  return metrics;
}

std::string cmd_inspect(const std::string& path) {
  Container c = read_container(path);
  std::ostringstream os;
  os << path << "\n";
  os << "meta:\n";
  for (const auto& [k, v] : c.meta) os << "  " << k << " = " << v << "\n";
  os << "arrays:\n";
  for (const auto& [name, a] : c.arrays) {
    os << "  " << name << "  " << dtype_name(a.dtype()) << "  [";
    for (std::size_t i = 0; i < a.shape().size(); ++i)
      os << (i ? ", " : "") << a.shape()[i];
    os << "]  " << a.byte_size() << " bytes\n";
  }
  return os.str();
}

}  // namespace flowbench
