#include "flowbench/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "flowbench/errors.hpp"
#include "flowbench/rng.hpp"

namespace flowbench {

namespace {

Matrix random_gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = rng.next_gaussian();
  return out;
}

Matrix random_orthonormal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix G = random_gaussian_matrix(rng, rows, cols);
  Eigen::HouseholderQR<Matrix> qr(G);
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

cdouble random_amplitude(Rng& rng) {
  cdouble b(rng.next_gaussian(), rng.next_gaussian());
  if (std::abs(b) < 0.3) b += cdouble(0.5, 0.0);
  return b;
}

Vector dft_frequencies(std::int64_t n, double dt) {
  Vector w(n);
  for (std::int64_t k = 0; k < n; ++k) {
    const std::int64_t signed_k = k <= n / 2 ? k : k - n;
    w(k) = 2.0 * M_PI * static_cast<double>(signed_k) / (static_cast<double>(n) * dt);
  }
  return w;
}

}  // namespace

LowRankField gen_low_rank_field(const LowRankFieldConfig& config) {
  const auto rank = static_cast<std::int64_t>(config.energies.size());
  const std::int64_t flat = config.space * config.n_channels;
  if (rank < 1 || rank > std::min(flat, config.n_snapshots))
    fail(errk::rank, "gen_low_rank_field: rank " + std::to_string(rank) +
                         " infeasible for space " + std::to_string(flat) + ", snapshots " +
                         std::to_string(config.n_snapshots));
  for (std::size_t i = 0; i < config.energies.size(); ++i) {
    if (config.energies[i] < 0.0) fail(errk::config, "gen_low_rank_field: negative energy");
    if (i > 0 && config.energies[i] > config.energies[i - 1])
      fail(errk::config, "gen_low_rank_field: energies must be descending");
  }

  Rng rng(config.seed, 0);
  LowRankField out;
  out.true_basis = random_orthonormal(rng, flat, rank);
  Matrix R = random_orthonormal(rng, config.n_snapshots, rank);
  out.true_energies =
      Eigen::Map<const Vector>(config.energies.data(), static_cast<Eigen::Index>(rank));

  Vector scale(rank);
  for (Eigen::Index i = 0; i < rank; ++i)
    scale(i) = std::sqrt(out.true_energies(i) * static_cast<double>(config.n_snapshots));
  out.snapshots.space_dims = {config.space};
  out.snapshots.n_channels = config.n_channels;
  out.snapshots.dt = config.dt;
  out.snapshots.data = out.true_basis * scale.asDiagonal() * R.transpose();
  return out;
}

LinearModalData gen_linear_modal(const LinearModalConfig& config) {
  const auto K = static_cast<std::int64_t>(config.eigenvalues.size());
  if (K < 1) fail(errk::config, "gen_linear_modal: need at least one eigenvalue");
  if (config.n_pairs < 1) fail(errk::config, "gen_linear_modal: need at least one pair");

  // Real output requires a conjugate-closed eigenvalue multiset.
  std::vector<int> partner(config.eigenvalues.size(), -1);
  std::vector<bool> used(config.eigenvalues.size(), false);
  for (std::size_t i = 0; i < config.eigenvalues.size(); ++i) {
    if (used[i]) continue;
    const cdouble lam = config.eigenvalues[i];
    if (std::abs(lam.imag()) <= 1e-14) {
      partner[i] = static_cast<int>(i);
      used[i] = true;
      continue;
    }
    bool found = false;
    for (std::size_t j = i + 1; j < config.eigenvalues.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(config.eigenvalues[j] - std::conj(lam)) <= 1e-12) {
        partner[i] = static_cast<int>(j);
        partner[j] = static_cast<int>(i);
        used[i] = used[j] = true;
        found = true;
        break;
      }
    }
    if (!found)
      fail(errk::config, "gen_linear_modal: eigenvalue set not conjugate-closed");
  }

  Rng rng(config.seed, 0);
  LinearModalData out;
  out.true_eigenvalues.resize(K);
  for (Eigen::Index i = 0; i < K; ++i) out.true_eigenvalues(i) = config.eigenvalues[i];

  out.true_modes.resize(config.space, K);
  for (std::size_t i = 0; i < config.eigenvalues.size(); ++i) {
    if (partner[i] == static_cast<int>(i)) {
      Vector v = random_gaussian_matrix(rng, config.space, 1);
      v.normalize();
      out.true_modes.col(static_cast<Eigen::Index>(i)) = v.cast<cdouble>();
    } else if (partner[i] > static_cast<int>(i)) {
      Matrix gh = random_gaussian_matrix(rng, config.space, 2);
      ComplexVector v = gh.col(0).cast<cdouble>() + cdouble(0, 1) * gh.col(1).cast<cdouble>();
      v.normalize();
      out.true_modes.col(static_cast<Eigen::Index>(i)) = v;
      out.true_modes.col(partner[i]) = v.conjugate();
    }
  }

  out.true_amplitudes.resize(K, config.n_sequences);
  out.sequences.reserve(static_cast<std::size_t>(config.n_sequences));
  for (std::int64_t s = 0; s < config.n_sequences; ++s) {
    for (std::size_t i = 0; i < config.eigenvalues.size(); ++i) {
      if (partner[i] == static_cast<int>(i)) {
        out.true_amplitudes(static_cast<Eigen::Index>(i), s) =
            cdouble(random_amplitude(rng).real(), 0.0);
      } else if (partner[i] > static_cast<int>(i)) {
        const cdouble b = random_amplitude(rng);
        out.true_amplitudes(static_cast<Eigen::Index>(i), s) = b;
        out.true_amplitudes(partner[i], s) = std::conj(b);
      }
    }
    SnapshotMatrix seq;
    seq.space_dims = {config.space};
    seq.n_channels = 1;
    seq.dt = config.dt;
    seq.data.resize(config.space, config.n_pairs + 1);
    ComplexVector lam_pow = ComplexVector::Ones(K);
    for (std::int64_t k = 0; k <= config.n_pairs; ++k) {
      ComplexVector coeff = lam_pow.cwiseProduct(out.true_amplitudes.col(s));
      seq.data.col(k) = (out.true_modes * coeff).real();
      lam_pow = lam_pow.cwiseProduct(out.true_eigenvalues);
    }
    out.sequences.push_back(std::move(seq));
  }
  return out;
}

ForcedLinearData gen_forced_linear(const ForcedLinearConfig& config) {
  const int r = config.state_dim;
  const int m = config.input_dim;
  if (r < 1 || m < 1) fail(errk::config, "gen_forced_linear: dims must be positive");
  if (config.space < r) fail(errk::config, "gen_forced_linear: space smaller than state_dim");

  Rng rng(config.seed, 0);
  ForcedLinearData out;
  Matrix A = random_gaussian_matrix(rng, r, r);
  const double rho = A.eigenvalues().cwiseAbs().maxCoeff();
  A *= config.spectral_radius / rho;
  out.true_A = A;
  out.true_B = config.zero_input_matrix ? Matrix::Zero(r, m)
                                        : Matrix(random_gaussian_matrix(rng, r, m));
  out.embedding = random_orthonormal(rng, config.space, r);

  // One input column per snapshot time; the final column is not consumed by
  // the recurrence but keeps exogenous signals defined over whole sequences.
  const std::int64_t burnin = config.input_kind == InputKind::single_sinusoid ? 600 : 0;
  for (std::int64_t s = 0; s < config.n_sequences; ++s) {
    Matrix inputs(m, config.n_steps + 1);
    Vector x = Vector::Zero(r);
    if (config.input_kind == InputKind::white) {
      x = random_gaussian_matrix(rng, r, 1);
      inputs = random_gaussian_matrix(rng, m, config.n_steps + 1);
    } else {
      for (std::int64_t k = 0; k <= config.n_steps; ++k)
        for (int j = 0; j < m; ++j)
          inputs(j, k) = std::sin(config.sinusoid_freq * static_cast<double>(k) +
                                  0.5 * M_PI * static_cast<double>(j));
      // Burn in on the same sinusoid so recorded states carry no transient.
      for (std::int64_t k = -burnin; k < 0; ++k) {
        Vector u(m);
        for (int j = 0; j < m; ++j)
          u(j) = std::sin(config.sinusoid_freq * static_cast<double>(k) +
                          0.5 * M_PI * static_cast<double>(j));
        x = A * x + out.true_B * u;
      }
    }

    Matrix states(r, config.n_steps + 1);
    states.col(0) = x;
    for (std::int64_t k = 0; k < config.n_steps; ++k)
      states.col(k + 1) = A * states.col(k) + out.true_B * inputs.col(k);

    SnapshotMatrix lifted;
    lifted.space_dims = {config.space};
    lifted.n_channels = 1;
    lifted.dt = config.dt;
    lifted.data = out.embedding * states;
    out.state_sequences.push_back(std::move(lifted));
    out.input_sequences.push_back(std::move(inputs));
  }
  return out;
}

ArProcessData gen_ar_process(const ArProcessConfig& config) {
  if (!(std::abs(config.a) < 1.0))
    fail(errk::config, "gen_ar_process: |a| must be < 1 for stationarity");
  if (config.n_samples < 2) fail(errk::config, "gen_ar_process: need at least 2 samples");

  Rng rng(config.seed, 0);
  ArProcessData out;
  out.dt = config.dt;
  out.y.resize(1, config.n_samples);
  const double stationary_std = config.sigma / std::sqrt(1.0 - config.a * config.a);
  out.y(0, 0) = stationary_std * rng.next_gaussian();
  for (std::int64_t k = 1; k < config.n_samples; ++k)
    out.y(0, k) = config.a * out.y(0, k - 1) + config.sigma * rng.next_gaussian();

  out.analytic_frequencies = dft_frequencies(config.n_bins, config.dt);
  out.analytic_psd.resize(config.n_bins);
  for (std::int64_t k = 0; k < config.n_bins; ++k) {
    const double theta = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(config.n_bins);
    const cdouble denom = cdouble(1.0, 0.0) - config.a * std::exp(cdouble(0.0, -theta));
    out.analytic_psd(k) = config.sigma * config.sigma * config.dt / std::norm(denom);
  }
  return out;
}

CausalFirData gen_causal_fir_pair(const CausalFirConfig& config) {
  if (config.taps.empty()) fail(errk::config, "gen_causal_fir_pair: empty tap list");
  if (!(std::abs(config.ar_a) < 1.0))
    fail(errk::config, "gen_causal_fir_pair: |ar_a| must be < 1");
  const auto L0 = static_cast<std::int64_t>(config.taps.size()) - 1;
  const auto La = static_cast<std::int64_t>(config.anticausal_taps.size());
  const std::int64_t T = config.n_samples;
  if (T < L0 + La + 2) fail(errk::config, "gen_causal_fir_pair: n_samples too small");

  Rng rng(config.seed, 0);
  // Extended clean source so every z_k sees the full kernel support.
  Vector y_ext(T + L0 + La);
  const double stationary_std =
      config.ar_a == 0.0 ? config.sigma
                         : config.sigma / std::sqrt(1.0 - config.ar_a * config.ar_a);
  y_ext(0) = stationary_std * rng.next_gaussian();
  for (std::int64_t k = 1; k < y_ext.size(); ++k)
    y_ext(k) = config.ar_a * y_ext(k - 1) + config.sigma * rng.next_gaussian();

  CausalFirData out;
  out.dt = config.dt;
  out.y.resize(1, T);
  out.z.resize(1, T);
  for (std::int64_t k = 0; k < T; ++k) {
    out.y(0, k) = y_ext(k + L0);
    double acc = 0.0;
    for (std::int64_t mm = 0; mm <= L0; ++mm)
      acc += config.taps[static_cast<std::size_t>(mm)] * y_ext(k + L0 - mm);
    for (std::int64_t j = 1; j <= La; ++j)
      acc += config.anticausal_taps[static_cast<std::size_t>(j - 1)] * y_ext(k + L0 + j);
    out.z(0, k) = acc;
  }

  const double noise_std = config.measurement_noise_level * stationary_std;
  if (noise_std > 0.0)
    for (std::int64_t k = 0; k < T; ++k) out.y(0, k) += noise_std * rng.next_gaussian();

  out.analytic_frequencies = dft_frequencies(config.n_bins, config.dt);
  out.analytic_S_yy.resize(config.n_bins);
  out.analytic_S_zy.resize(config.n_bins);
  out.analytic_S_zz.resize(config.n_bins);
  for (std::int64_t k = 0; k < config.n_bins; ++k) {
    const double theta = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(config.n_bins);
    const cdouble denom = cdouble(1.0, 0.0) - config.ar_a * std::exp(cdouble(0.0, -theta));
    const double S_clean = config.sigma * config.sigma * config.dt / std::norm(denom);
    cdouble H(0.0, 0.0);
    for (std::int64_t mm = 0; mm <= L0; ++mm)
      H += config.taps[static_cast<std::size_t>(mm)] *
           std::exp(cdouble(0.0, -theta * static_cast<double>(mm)));
    for (std::int64_t j = 1; j <= La; ++j)
      H += config.anticausal_taps[static_cast<std::size_t>(j - 1)] *
           std::exp(cdouble(0.0, theta * static_cast<double>(j)));
    out.analytic_S_yy(k) = S_clean + noise_std * noise_std * config.dt;
    out.analytic_S_zy(k) = H * S_clean;
    out.analytic_S_zz(k) = std::norm(H) * S_clean;
  }
  return out;
}

}  // namespace flowbench
