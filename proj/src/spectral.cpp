#include "flowbench/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowbench/errors.hpp"
#include "flowbench/threading.hpp"

namespace flowbench {

namespace {

Vector dft_grid(Eigen::Index n, double dt) {
  Vector w(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index signed_k = k <= n / 2 ? k : k - n;
    w(k) = 2.0 * M_PI * static_cast<double>(signed_k) / (static_cast<double>(n) * dt);
  }
  return w;
}

// lag of DFT index j: j for j <= n/2, j - n beyond (Nyquist counted positive).
int lag_of_index(Eigen::Index j, Eigen::Index n) {
  return static_cast<int>(j <= n / 2 ? j : j - n);
}

std::vector<ComplexMatrix> flat_noise(const CsdSet& csd, double level) {
  const Eigen::Index ny = csd.n_y();
  const Eigen::Index nf = csd.n_freq();
  Vector channel_power = Vector::Zero(ny);
  for (const auto& S : csd.S_yy) channel_power += S.diagonal().real();
  channel_power /= static_cast<double>(nf);
  ComplexMatrix N = ComplexMatrix::Zero(ny, ny);
  for (Eigen::Index i = 0; i < ny; ++i)
    N(i, i) = level * level * channel_power(i);
  return std::vector<ComplexMatrix>(static_cast<std::size_t>(nf), N);
}

void check_csd_shapes(const CsdSet& csd, const std::vector<ComplexMatrix>& noise) {
  if (csd.S_yy.empty() || csd.frequencies.size() != static_cast<Eigen::Index>(csd.S_yy.size()))
    fail(errk::shape, "wiener: CSD set has inconsistent frequency count");
  if (csd.S_zy.size() != csd.S_yy.size())
    fail(errk::shape, "wiener: S_zy and S_yy stacks differ in length");
  if (noise.size() != csd.S_yy.size())
    fail(errk::shape, "wiener: noise stack length does not match CSD set");
}

// Inverse DFT along the frequency axis of a matrix stack, one entry at a
// time. Returns stack indexed by DFT lag index.
std::vector<ComplexMatrix> idft_stack(const std::vector<ComplexMatrix>& spectra) {
  const auto n = static_cast<Eigen::Index>(spectra.size());
  const Eigen::Index rows = spectra.front().rows();
  const Eigen::Index cols = spectra.front().cols();
  std::vector<ComplexMatrix> lagged(static_cast<std::size_t>(n),
                                    ComplexMatrix::Zero(rows, cols));
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      std::vector<cdouble> line(static_cast<std::size_t>(n));
      for (Eigen::Index k = 0; k < n; ++k) line[static_cast<std::size_t>(k)] = spectra[k](i, j);
      auto back = dft(line, DftDirection::inverse);
      for (Eigen::Index k = 0; k < n; ++k) lagged[k](i, j) = back[static_cast<std::size_t>(k)];
    }
  }
  return lagged;
}

std::vector<ComplexMatrix> dft_stack(const std::vector<ComplexMatrix>& lagged) {
  const auto n = static_cast<Eigen::Index>(lagged.size());
  const Eigen::Index rows = lagged.front().rows();
  const Eigen::Index cols = lagged.front().cols();
  std::vector<ComplexMatrix> spectra(static_cast<std::size_t>(n),
                                     ComplexMatrix::Zero(rows, cols));
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      std::vector<cdouble> line(static_cast<std::size_t>(n));
      for (Eigen::Index k = 0; k < n; ++k) line[static_cast<std::size_t>(k)] = lagged[k](i, j);
      auto spec = dft(line, DftDirection::forward);
      for (Eigen::Index k = 0; k < n; ++k) spectra[k](i, j) = spec[static_cast<std::size_t>(k)];
    }
  }
  return spectra;
}

// Builds the lag-domain kernel of a frequency-domain estimator stack. For
// causal filters the strictly negative lags hold only circular-aliasing
// debris (the wrapped tail of the causal response); their mass is recorded
// in negative_lag_ratio and then projected out so the stored kernel has
// exactly causal support and T_hat stays its DFT pair.
void fill_kernel(TransferFunctionSet& tf, bool enforce_causal_support) {
  const auto n = static_cast<Eigen::Index>(tf.T_hat.size());
  auto lagged = idft_stack(tf.T_hat);

  double max_abs = 0.0, max_imag = 0.0, max_neg = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double entry_abs = lagged[static_cast<std::size_t>(j)].real().cwiseAbs().maxCoeff();
    max_abs = std::max(max_abs, entry_abs);
    max_imag = std::max(max_imag,
                        lagged[static_cast<std::size_t>(j)].imag().cwiseAbs().maxCoeff());
    if (lag_of_index(j, n) < 0) max_neg = std::max(max_neg, entry_abs);
  }
  tf.negative_lag_ratio = max_abs > 0.0 ? max_neg / max_abs : 0.0;
  tf.kernel_imag_ratio = max_abs > 0.0 ? max_imag / max_abs : 0.0;

  if (enforce_causal_support && max_neg > 0.0) {
    for (Eigen::Index j = 0; j < n; ++j)
      if (lag_of_index(j, n) < 0) lagged[static_cast<std::size_t>(j)].setZero();
    tf.T_hat = dft_stack(lagged);
  }

  // Unwrap DFT order to ascending lags -(n - n/2 - 1) .. n/2.
  const int max_lag = static_cast<int>(n / 2);
  const int min_lag = static_cast<int>(n / 2 - n + 1);
  tf.lags.clear();
  tf.kernel.clear();
  for (int lag = min_lag; lag <= max_lag; ++lag) {
    const Eigen::Index j = lag >= 0 ? lag : lag + static_cast<int>(n);
    tf.lags.push_back(lag);
    tf.kernel.push_back(lagged[static_cast<std::size_t>(j)].real() / tf.dt);
  }
}

TransferFunctionSet wiener_common(const CsdSet& csd, const std::vector<ComplexMatrix>& noise,
                                  bool causal_route) {
  check_csd_shapes(csd, noise);
  const auto nf = static_cast<Eigen::Index>(csd.S_yy.size());
  const Eigen::Index ny = csd.n_y();

  TransferFunctionSet tf;
  tf.frequencies = csd.frequencies;
  tf.dt = csd.dt;
  tf.T_hat.assign(static_cast<std::size_t>(nf), ComplexMatrix());

  if (!causal_route) {
    std::vector<std::string> singular;
    std::vector<ComplexMatrix> regularized(static_cast<std::size_t>(nf));
    for (Eigen::Index k = 0; k < nf; ++k) {
      ComplexMatrix A = csd.S_yy[static_cast<std::size_t>(k)] + noise[static_cast<std::size_t>(k)];
      A = 0.5 * (A + A.adjoint()).eval();
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(A);
      const double max_eig = eig.eigenvalues().cwiseAbs().maxCoeff();
      if (eig.eigenvalues().minCoeff() <= 1e-14 * std::max(max_eig, 1e-300))
        singular.push_back(std::to_string(csd.frequencies(k)));
      regularized[static_cast<std::size_t>(k)] = A;
    }
    if (!singular.empty())
      fail(errk::regularization,
           "noncausal_wiener: S_yy + N singular at frequency " + singular.front() +
               (singular.size() > 1
                    ? " (and " + std::to_string(singular.size() - 1) + " more)"
                    : ""));
    parallel_for(nf, [&](std::int64_t k) {
      const auto i = static_cast<std::size_t>(k);
      Eigen::LDLT<ComplexMatrix> ldlt(regularized[i]);
      tf.T_hat[i] = ldlt.solve(csd.S_zy[i].adjoint()).adjoint();
    });
    tf.causal = false;
  } else {
    std::vector<ComplexMatrix> A(static_cast<std::size_t>(nf));
    for (Eigen::Index k = 0; k < nf; ++k) {
      const auto i = static_cast<std::size_t>(k);
      A[i] = csd.S_yy[i] + noise[i];
      A[i] = 0.5 * (A[i] + A[i].adjoint()).eval();
    }
    SpectralFactor fact = spectral_factorize(A);

    // G = S_zy (S_plus^H)^{-1}, then T = [G]_+ (S_plus)^{-1}. The factors are
    // tiny and well conditioned (PSD plus ridge), so explicit inverses are fine.
    std::vector<ComplexMatrix> G(static_cast<std::size_t>(nf));
    std::vector<ComplexMatrix> inv(static_cast<std::size_t>(nf));
    parallel_for(nf, [&](std::int64_t k) {
      const auto i = static_cast<std::size_t>(k);
      inv[i] = fact.factor[i].partialPivLu().inverse();
      G[i] = csd.S_zy[i] * inv[i].adjoint();
    });
    auto Gc = causal_part(G);
    parallel_for(nf, [&](std::int64_t k) {
      const auto i = static_cast<std::size_t>(k);
      tf.T_hat[i] = Gc[i] * inv[i];
    });
    tf.causal = true;
  }
  (void)ny;
  fill_kernel(tf, /*enforce_causal_support=*/tf.causal);
  return tf;
}

}  // namespace

Vector sine_window(int n, int p) {
  if (n < 2) fail(errk::input, "sine_window: length must be >= 2");
  if (p < 1) fail(errk::input, "sine_window: order must be >= 1");
  Vector w(n);
  for (int j = 0; j < n; ++j)
    w(j) = std::pow(std::sin(M_PI * (static_cast<double>(j) + 0.5) / static_cast<double>(n)),
                    p);
  w *= std::sqrt(static_cast<double>(n) / w.squaredNorm());
  return w;
}

CsdSet welch_csd(const Matrix& Y, const Matrix& Z, int block, double overlap,
                 const Vector& window, double dt, const std::string& window_tag) {
  const Eigen::Index T = Y.cols();
  if (Z.cols() != T) fail(errk::shape, "welch_csd: Y and Z must cover the same time range");
  if (block < 2 || block > T) fail(errk::input, "welch_csd: block length outside [2, T]");
  if (!(overlap >= 0.0 && overlap < 1.0))
    fail(errk::input, "welch_csd: overlap must lie in [0, 1)");
  if (window.size() != block) fail(errk::shape, "welch_csd: window length != block length");
  if (!(dt > 0.0)) fail(errk::input, "welch_csd: dt must be positive");

  const auto hop = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::lround((1.0 - overlap) * block)));
  const Eigen::Index n_blocks = (T - block) / hop + 1;
  if (n_blocks < 2)
    fail(errk::estimation, "welch_csd: only " + std::to_string(n_blocks) +
                               " block(s); need at least 2 for an average");

  const Eigen::Index ny = Y.rows();
  const Eigen::Index nz = Z.rows();
  const Eigen::Index nf = block;

  // DFT of one windowed, mean-removed block of a multichannel signal.
  auto block_dft = [&](const Matrix& X, Eigen::Index start) {
    ComplexMatrix out(X.rows(), nf);
    std::vector<cdouble> line(static_cast<std::size_t>(block));
    for (Eigen::Index c = 0; c < X.rows(); ++c) {
      const double mean = X.row(c).segment(start, block).mean();
      for (Eigen::Index j = 0; j < block; ++j)
        line[static_cast<std::size_t>(j)] = cdouble((X(c, start + j) - mean) * window(j), 0.0);
      auto spec = dft(line, DftDirection::forward);
      for (Eigen::Index k = 0; k < nf; ++k) out(c, k) = spec[static_cast<std::size_t>(k)];
    }
    return out;
  };

  // Fixed 64-block chunks keep the summation order independent of the thread
  // count; chunk sums are reduced sequentially afterwards.
  constexpr Eigen::Index kChunk = 64;
  const Eigen::Index n_chunks = (n_blocks + kChunk - 1) / kChunk;
  struct Partial {
    std::vector<ComplexMatrix> yy, zy;
  };
  std::vector<Partial> partials(static_cast<std::size_t>(n_chunks));
  parallel_for(n_chunks, [&](std::int64_t ci) {
    Partial& p = partials[static_cast<std::size_t>(ci)];
    p.yy.assign(static_cast<std::size_t>(nf), ComplexMatrix::Zero(ny, ny));
    p.zy.assign(static_cast<std::size_t>(nf), ComplexMatrix::Zero(nz, ny));
    const Eigen::Index begin = ci * kChunk;
    const Eigen::Index end = std::min(begin + kChunk, n_blocks);
    for (Eigen::Index b = begin; b < end; ++b) {
      const Eigen::Index start = b * hop;
      ComplexMatrix yhat = block_dft(Y, start);
      ComplexMatrix zhat = block_dft(Z, start);
      for (Eigen::Index k = 0; k < nf; ++k) {
        p.yy[static_cast<std::size_t>(k)] += yhat.col(k) * yhat.col(k).adjoint();
        p.zy[static_cast<std::size_t>(k)] += zhat.col(k) * yhat.col(k).adjoint();
      }
    }
  });

  CsdSet csd;
  csd.frequencies = dft_grid(nf, dt);
  csd.dt = dt;
  csd.block_length = block;
  csd.overlap_fraction = overlap;
  csd.window_tag = window_tag;
  csd.n_blocks = static_cast<int>(n_blocks);
  csd.S_yy.assign(static_cast<std::size_t>(nf), ComplexMatrix::Zero(ny, ny));
  csd.S_zy.assign(static_cast<std::size_t>(nf), ComplexMatrix::Zero(nz, ny));
  const double scale = dt / (static_cast<double>(block) * static_cast<double>(n_blocks));
  for (const Partial& p : partials) {
    for (Eigen::Index k = 0; k < nf; ++k) {
      csd.S_yy[static_cast<std::size_t>(k)] += p.yy[static_cast<std::size_t>(k)];
      csd.S_zy[static_cast<std::size_t>(k)] += p.zy[static_cast<std::size_t>(k)];
    }
  }
  for (Eigen::Index k = 0; k < nf; ++k) {
    csd.S_yy[static_cast<std::size_t>(k)] *= scale;
    csd.S_zy[static_cast<std::size_t>(k)] *= scale;
  }
  return csd;
}

TransferFunctionSet transfer_function_from_kernel(const std::vector<Matrix>& kernel,
                                                  const std::vector<int>& lags,
                                                  Eigen::Index n_freq, double dt,
                                                  bool causal) {
  if (kernel.size() != lags.size() || kernel.empty())
    fail(errk::shape, "transfer_function_from_kernel: kernel/lag mismatch");
  TransferFunctionSet tf;
  tf.frequencies = dft_grid(n_freq, dt);
  tf.dt = dt;
  tf.causal = causal;
  tf.T_hat.assign(static_cast<std::size_t>(n_freq),
                  ComplexMatrix::Zero(kernel.front().rows(), kernel.front().cols()));
  for (Eigen::Index k = 0; k < n_freq; ++k) {
    const double theta = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n_freq);
    for (std::size_t j = 0; j < kernel.size(); ++j)
      tf.T_hat[static_cast<std::size_t>(k)] +=
          std::exp(cdouble(0.0, -theta * lags[j])) * kernel[j].cast<cdouble>() * dt;
  }
  fill_kernel(tf, /*enforce_causal_support=*/tf.causal);
  return tf;
}

TransferFunctionSet noncausal_wiener(const CsdSet& csd, double noise_level) {
  return wiener_common(csd, flat_noise(csd, noise_level), /*causal_route=*/false);
}

TransferFunctionSet noncausal_wiener(const CsdSet& csd,
                                     const std::vector<ComplexMatrix>& noise_psd) {
  return wiener_common(csd, noise_psd, /*causal_route=*/false);
}

SpectralFactor spectral_factorize(const std::vector<ComplexMatrix>& S_in) {
  if (S_in.empty()) fail(errk::shape, "spectral_factorize: empty spectrum stack");
  const auto nf = static_cast<Eigen::Index>(S_in.size());
  const Eigen::Index n = S_in.front().rows();
  if (S_in.front().cols() != n) fail(errk::shape, "spectral_factorize: matrices must be square");

  SpectralFactor out;

  // Ridge when any frequency is closer to singular than 1e-8 of the mean
  // channel power.
  double mean_trace = 0.0;
  for (const auto& S : S_in) mean_trace += S.real().trace();
  mean_trace /= static_cast<double>(nf) * static_cast<double>(n);
  const double floor_eig = 1e-8 * std::max(mean_trace, 1e-300);
  double min_eig = std::numeric_limits<double>::infinity();
  std::vector<ComplexMatrix> S(S_in.size());
  for (Eigen::Index k = 0; k < nf; ++k) {
    S[static_cast<std::size_t>(k)] =
        0.5 * (S_in[static_cast<std::size_t>(k)] + S_in[static_cast<std::size_t>(k)].adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(S[static_cast<std::size_t>(k)],
                                                     Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
  }
  if (min_eig < floor_eig) {
    out.ridge = floor_eig;
    for (auto& Sk : S) Sk += out.ridge * ComplexMatrix::Identity(n, n);
  }

  if (n == 1) {
    // Cepstral route: S_plus = exp(DFT of the causal half of IDFT(log S)).
    std::vector<cdouble> log_s(static_cast<std::size_t>(nf));
    for (Eigen::Index k = 0; k < nf; ++k) {
      const double v = S[static_cast<std::size_t>(k)](0, 0).real();
      if (!(v > 0.0))
        fail(errk::factorization, "spectral_factorize: nonpositive scalar spectrum value");
      log_s[static_cast<std::size_t>(k)] = cdouble(std::log(v), 0.0);
    }
    auto cepstrum = dft(log_s, DftDirection::inverse);
    std::vector<cdouble> half(static_cast<std::size_t>(nf), cdouble(0.0, 0.0));
    half[0] = 0.5 * cepstrum[0];
    for (Eigen::Index j = 1; j < nf; ++j) {
      const int lag = lag_of_index(j, nf);
      if (lag > 0) {
        // Nyquist (even nf) is shared between both sides.
        const bool nyquist = (nf % 2 == 0) && (j == nf / 2);
        half[static_cast<std::size_t>(j)] =
            nyquist ? 0.5 * cepstrum[static_cast<std::size_t>(j)]
                    : cepstrum[static_cast<std::size_t>(j)];
      }
    }
    auto log_factor = dft(half, DftDirection::forward);
    out.factor.assign(static_cast<std::size_t>(nf), ComplexMatrix::Zero(1, 1));
    for (Eigen::Index k = 0; k < nf; ++k)
      out.factor[static_cast<std::size_t>(k)](0, 0) =
          std::exp(log_factor[static_cast<std::size_t>(k)]);
    out.iterations = 0;
  } else {
    // Plus-operator fixed point. psi <- psi [psi^{-1} S psi^{-H} + I]_+ with
    // lag 0 (and Nyquist) halved inside the plus operator.
    ComplexMatrix mean_S = ComplexMatrix::Zero(n, n);
    for (const auto& Sk : S) mean_S += Sk;
    mean_S /= static_cast<double>(nf);
    Eigen::LLT<ComplexMatrix> llt(mean_S);
    if (llt.info() != Eigen::Success)
      fail(errk::factorization, "spectral_factorize: mean spectrum not positive definite");
    std::vector<ComplexMatrix> psi(static_cast<std::size_t>(nf),
                                   ComplexMatrix(llt.matrixL()));

    constexpr int kMaxIterations = 500;
    constexpr double kStepTol = 1e-10;
    bool converged = false;
    for (int it = 0; it < kMaxIterations; ++it) {
      std::vector<ComplexMatrix> g(static_cast<std::size_t>(nf));
      parallel_for(nf, [&](std::int64_t k) {
        const auto i = static_cast<std::size_t>(k);
        Eigen::PartialPivLU<ComplexMatrix> lu(psi[i]);
        ComplexMatrix X = lu.solve(S[i]);                  // psi^{-1} S
        ComplexMatrix G = lu.solve(X.adjoint()).adjoint(); // psi^{-1} S psi^{-H}
        G += ComplexMatrix::Identity(n, n);
        g[i] = 0.5 * (G + G.adjoint());
      });

      // Plus operator with halved lag-0 / Nyquist terms.
      auto lagged = idft_stack(g);
      for (Eigen::Index j = 0; j < nf; ++j) {
        const int lag = lag_of_index(j, nf);
        const bool nyquist = (nf % 2 == 0) && (j == nf / 2);
        if (lag < 0)
          lagged[static_cast<std::size_t>(j)].setZero();
        else if (lag == 0 || nyquist)
          lagged[static_cast<std::size_t>(j)] *= 0.5;
      }
      auto gplus = dft_stack(lagged);

      double step = 0.0, scale = 0.0;
      std::vector<double> step_k(static_cast<std::size_t>(nf));
      parallel_for(nf, [&](std::int64_t k) {
        const auto i = static_cast<std::size_t>(k);
        ComplexMatrix updated = psi[i] * gplus[i];
        step_k[i] = (updated - psi[i]).norm();
        psi[i] = std::move(updated);
      });
      for (Eigen::Index k = 0; k < nf; ++k) {
        step = std::max(step, step_k[static_cast<std::size_t>(k)]);
        scale = std::max(scale, psi[static_cast<std::size_t>(k)].norm());
      }
      out.iterations = it + 1;
      if (step <= kStepTol * std::max(scale, 1e-300)) {
        converged = true;
        break;
      }
    }
    out.factor = std::move(psi);
    if (!converged) {
      double residual = 0.0;
      for (Eigen::Index k = 0; k < nf; ++k) {
        const auto i = static_cast<std::size_t>(k);
        residual = std::max(residual, (out.factor[i] * out.factor[i].adjoint() - S[i]).norm() /
                                          std::max(S[i].norm(), 1e-300));
      }
      fail(errk::factorization,
           "spectral_factorize: no convergence in 500 iterations (relative residual " +
               std::to_string(residual) + ")");
    }
  }

  out.residual = 0.0;
  for (Eigen::Index k = 0; k < nf; ++k) {
    const auto i = static_cast<std::size_t>(k);
    out.residual = std::max(out.residual, (out.factor[i] * out.factor[i].adjoint() - S[i]).norm() /
                                              std::max(S[i].norm(), 1e-300));
  }
  return out;
}

std::vector<ComplexMatrix> causal_part(const std::vector<ComplexMatrix>& G) {
  if (G.empty()) fail(errk::shape, "causal_part: empty spectrum stack");
  const auto nf = static_cast<Eigen::Index>(G.size());
  auto lagged = idft_stack(G);
  for (Eigen::Index j = 0; j < nf; ++j)
    if (lag_of_index(j, nf) < 0) lagged[static_cast<std::size_t>(j)].setZero();
  return dft_stack(lagged);
}

TransferFunctionSet causal_wiener(const CsdSet& csd, double noise_level) {
  return wiener_common(csd, flat_noise(csd, noise_level), /*causal_route=*/true);
}

TransferFunctionSet causal_wiener(const CsdSet& csd,
                                  const std::vector<ComplexMatrix>& noise_psd) {
  return wiener_common(csd, noise_psd, /*causal_route=*/true);
}

namespace {

TypedArray stack_to_array(const std::vector<ComplexMatrix>& stack) {
  const auto n = static_cast<std::int64_t>(stack.size());
  const std::int64_t rows = stack.front().rows();
  const std::int64_t cols = stack.front().cols();
  std::vector<cdouble> values(static_cast<std::size_t>(n * rows * cols));
  for (std::int64_t k = 0; k < n; ++k)
    for (std::int64_t i = 0; i < rows; ++i)
      for (std::int64_t j = 0; j < cols; ++j)
        values[static_cast<std::size_t>((k * rows + i) * cols + j)] =
            stack[static_cast<std::size_t>(k)](i, j);
  return TypedArray({n, rows, cols}, std::move(values));
}

std::vector<ComplexMatrix> stack_from_array(const TypedArray& a, const char* name) {
  if (a.dtype() != Dtype::c128 || a.shape().size() != 3)
    fail(errk::schema, std::string(name) + " must be c128 [n, rows, cols]");
  const std::int64_t n = a.shape()[0], rows = a.shape()[1], cols = a.shape()[2];
  std::vector<ComplexMatrix> stack(static_cast<std::size_t>(n),
                                   ComplexMatrix::Zero(rows, cols));
  const auto& values = a.c128();
  for (std::int64_t k = 0; k < n; ++k)
    for (std::int64_t i = 0; i < rows; ++i)
      for (std::int64_t j = 0; j < cols; ++j)
        stack[static_cast<std::size_t>(k)](i, j) =
            values[static_cast<std::size_t>((k * rows + i) * cols + j)];
  return stack;
}

TypedArray freq_array(const Vector& w) {
  return TypedArray({w.size()}, std::vector<double>(w.data(), w.data() + w.size()));
}

Vector freq_from_array(const ArrayMap& arrays) {
  auto it = arrays.find("frequencies");
  if (it == arrays.end()) fail(errk::schema, "container has no 'frequencies' array");
  const auto& values = it->second.f64();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::pair<ArrayMap, MetaMap> csd_to_arrays(const CsdSet& csd) {
  ArrayMap arrays;
  arrays.emplace("frequencies", freq_array(csd.frequencies));
  arrays.emplace("S_yy", stack_to_array(csd.S_yy));
  if (!csd.S_zy.empty()) arrays.emplace("S_zy", stack_to_array(csd.S_zy));
  MetaMap meta;
  meta["dt"] = std::to_string(csd.dt);
  meta["block_length"] = std::to_string(csd.block_length);
  meta["overlap_fraction"] = std::to_string(csd.overlap_fraction);
  meta["window_tag"] = csd.window_tag;
  meta["n_blocks"] = std::to_string(csd.n_blocks);
  return {std::move(arrays), std::move(meta)};
}

CsdSet csd_from_arrays(const ArrayMap& arrays, const MetaMap& meta) {
  CsdSet csd;
  csd.frequencies = freq_from_array(arrays);
  auto yy = arrays.find("S_yy");
  if (yy == arrays.end()) fail(errk::schema, "container has no 'S_yy' array");
  csd.S_yy = stack_from_array(yy->second, "S_yy");
  if (auto zy = arrays.find("S_zy"); zy != arrays.end())
    csd.S_zy = stack_from_array(zy->second, "S_zy");
  if (auto it = meta.find("dt"); it != meta.end()) csd.dt = std::stod(it->second);
  if (auto it = meta.find("block_length"); it != meta.end())
    csd.block_length = std::stoi(it->second);
  if (auto it = meta.find("overlap_fraction"); it != meta.end())
    csd.overlap_fraction = std::stod(it->second);
  if (auto it = meta.find("window_tag"); it != meta.end()) csd.window_tag = it->second;
  if (auto it = meta.find("n_blocks"); it != meta.end()) csd.n_blocks = std::stoi(it->second);
  return csd;
}

std::pair<ArrayMap, MetaMap> transfer_function_to_arrays(const TransferFunctionSet& tf) {
  ArrayMap arrays;
  arrays.emplace("frequencies", freq_array(tf.frequencies));
  arrays.emplace("T_hat", stack_to_array(tf.T_hat));
  const auto n_lags = static_cast<std::int64_t>(tf.kernel.size());
  const std::int64_t rows = tf.kernel.front().rows();
  const std::int64_t cols = tf.kernel.front().cols();
  std::vector<double> lag_values(static_cast<std::size_t>(n_lags * rows * cols));
  for (std::int64_t k = 0; k < n_lags; ++k)
    for (std::int64_t i = 0; i < rows; ++i)
      for (std::int64_t j = 0; j < cols; ++j)
        lag_values[static_cast<std::size_t>((k * rows + i) * cols + j)] =
            tf.kernel[static_cast<std::size_t>(k)](i, j);
  arrays.emplace("T_lag", TypedArray({n_lags, rows, cols}, std::move(lag_values)));
  arrays.emplace("lags", TypedArray({n_lags}, std::vector<std::int64_t>(tf.lags.begin(),
                                                                        tf.lags.end())));
  MetaMap meta;
  meta["dt"] = std::to_string(tf.dt);
  meta["causal"] = tf.causal ? "1" : "0";
  return {std::move(arrays), std::move(meta)};
}

TransferFunctionSet transfer_function_from_arrays(const ArrayMap& arrays, const MetaMap& meta) {
  TransferFunctionSet tf;
  tf.frequencies = freq_from_array(arrays);
  auto that = arrays.find("T_hat");
  if (that == arrays.end()) fail(errk::schema, "container has no 'T_hat' array");
  tf.T_hat = stack_from_array(that->second, "T_hat");
  if (auto it = meta.find("dt"); it != meta.end()) tf.dt = std::stod(it->second);
  if (auto it = meta.find("causal"); it != meta.end()) tf.causal = it->second == "1";
  fill_kernel(tf, /*enforce_causal_support=*/tf.causal);
  return tf;
}

FilteredSeries apply_filter(const TransferFunctionSet& tf, const Matrix& y, int history) {
  if (tf.kernel.empty()) fail(errk::shape, "apply_filter: transfer function has no kernel");
  const Eigen::Index ny = tf.kernel.front().cols();
  const Eigen::Index nz = tf.kernel.front().rows();
  if (y.rows() != ny)
    fail(errk::shape, "apply_filter: measurement rows " + std::to_string(y.rows()) +
                          " do not match kernel input dimension " + std::to_string(ny));
  if (history < 0) fail(errk::input, "apply_filter: history must be >= 0");
  const int max_lag = tf.lags.back();
  const int min_lag = tf.lags.front();
  if (history > max_lag || (!tf.causal && -history < min_lag))
    fail(errk::input, "apply_filter: history " + std::to_string(history) +
                          " exceeds available kernel lags [" + std::to_string(min_lag) + ", " +
                          std::to_string(max_lag) + "]");

  const Eigen::Index T = y.cols();
  FilteredSeries out;
  out.warmup = history;
  out.valid_end = tf.causal ? T : T - history;
  if (out.valid_end <= out.warmup)
    fail(errk::warmup, "apply_filter: no output column outside the warm-up window (T = " +
                           std::to_string(T) + ", history = " + std::to_string(history) + ")");
  out.values = Matrix::Zero(nz, T);

  // kernel index of lag 0
  const std::size_t zero_at = static_cast<std::size_t>(-min_lag);
  const int lo = tf.causal ? 0 : -history;
  parallel_for(out.valid_end - out.warmup, [&](std::int64_t offset) {
    const Eigen::Index t = out.warmup + offset;
    Vector acc = Vector::Zero(nz);
    for (int tau = lo; tau <= history; ++tau)
      acc += tf.kernel[zero_at + static_cast<std::size_t>(tau)] * y.col(t - tau);
    out.values.col(t) = acc * tf.dt;
  });
  return out;
}

}  // namespace flowbench
