#pragma once

#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "polsa/linalg.hpp"

namespace polsa {

using linalg::Mat;
using linalg::Vec;

/// One draw (A_{n+1}, b_{n+1}); every algorithm consumes these.
/// The noisy observation is f(theta) = a * theta - b.
struct LinearSample {
  Mat a;
  Vec b;

  Vec f(const Vec& theta) const { return a * theta - b; }
};

/// Step sizes alpha_n = g / (n + n0). The default (g = 1, n0 = 0) gives the
/// 1/n schedule required by the exact SNR representation identities.
struct GainSchedule {
  double g = 1.0;
  double n0 = 0.0;

  double alpha(std::int64_t n) const { return g / (static_cast<double>(n) + n0); }
};

enum class Algorithm { kSa, kSnr, kPolsa, kPolsaD, kNesa };

enum class PolsaMode { kEstimatedA, kFixedA, kDiagonalScaled };

/// Evolving quantities of one algorithm instance.
///
/// a_hat is the running mean of all consumed A_k (exact, by zero
/// initialization with 1/(n+1) averaging). dtheta starts at zero, matching
/// the convention theta_0 = theta_{-1}. d_counts holds per-coordinate visit
/// counts for the diagonal gain (Q-learning only; empty otherwise).
struct IterateState {
  std::int64_t n = 0;
  Vec theta;
  Vec dtheta;
  Mat a_hat;
  Vec d_counts;

  static IterateState init(const Vec& theta0, bool with_diagonal_gain = false) {
    IterateState s;
    s.theta = theta0;
    s.dtheta = Vec::Zero(theta0.size());
    s.a_hat = Mat::Zero(theta0.size(), theta0.size());
    if (with_diagonal_gain) s.d_counts = Vec::Zero(theta0.size());
    return s;
  }
};

struct DivergenceError : std::runtime_error {
  std::int64_t step;
  explicit DivergenceError(std::int64_t n)
      : std::runtime_error("iterate diverged at step " + std::to_string(n)),
        step(n) {}
};

inline constexpr double kDivergenceBound = 1e12;

inline void check_finite(IterateState& state) {
  if (!state.theta.allFinite() || state.theta.cwiseAbs().maxCoeff() > kDivergenceBound) {
    throw DivergenceError(state.n);
  }
}

/// A_hat update (running mean). Call before the theta update of the same step;
/// that ordering makes the telescoping SNR representation exact.
inline void update_matrix_estimate(IterateState& state, const Mat& a_sample) {
  const double w = 1.0 / static_cast<double>(state.n + 1);
  state.a_hat += w * (a_sample - state.a_hat);
}

/// Classical SA with a fixed matrix gain: dtheta_{n+1} = alpha G f_{n+1}(theta_n).
inline void step_sa(IterateState& state, const LinearSample& sample, const Mat& gain,
                    const GainSchedule& schedule) {
  const double alpha = schedule.alpha(state.n + 1);
  state.dtheta = alpha * (gain * sample.f(state.theta));
  state.theta += state.dtheta;
  ++state.n;
  check_finite(state);
}

/// SNR: dtheta_{n+1} = -alpha A_hat_{n+1}^+ f_{n+1}(theta_n).
/// Precondition: update_matrix_estimate already ran with this step's sample.
inline void step_snr(IterateState& state, const LinearSample& sample,
                     const GainSchedule& schedule, double pinv_tol = -1.0) {
  const double alpha = schedule.alpha(state.n + 1);
  state.dtheta = -alpha * linalg::pinv_apply(state.a_hat, sample.f(state.theta), pinv_tol);
  state.theta += state.dtheta;
  ++state.n;
  check_finite(state);
}

/// Idealized SNR with the exact mean inverse supplied externally:
/// dtheta_{n+1} = -alpha A^{-1} f_{n+1}(theta_n).
inline void step_snr_idealized(IterateState& state, const LinearSample& sample,
                               const Mat& a_inv, const GainSchedule& schedule) {
  const double alpha = schedule.alpha(state.n + 1);
  state.dtheta = -alpha * (a_inv * sample.f(state.theta));
  state.theta += state.dtheta;
  ++state.n;
  check_finite(state);
}

/// Matrix-momentum step.
///   estimated-A mode:   dtheta' = (I + zeta A_hat) dtheta + alpha zeta f
///   fixed-A mode:       dtheta' = (I + zeta A) dtheta + alpha zeta f
///   diagonal mode:      dtheta' = (I + D A_hat) dtheta + alpha D f
/// For estimated-A, A_hat (and for diagonal mode D) must be updated first.
inline void step_polsa(IterateState& state, const LinearSample& sample,
                       const GainSchedule& schedule, PolsaMode mode, double zeta = 1.0,
                       const Mat* fixed_a = nullptr, const Vec* d_gain = nullptr) {
  const double alpha = schedule.alpha(state.n + 1);
  const Vec f = sample.f(state.theta);
  switch (mode) {
    case PolsaMode::kEstimatedA:
      state.dtheta += zeta * (state.a_hat * state.dtheta) + alpha * zeta * f;
      break;
    case PolsaMode::kFixedA:
      if (fixed_a == nullptr) {
        throw std::invalid_argument("step_polsa: fixed-A mode needs the mean matrix");
      }
      state.dtheta += zeta * (*fixed_a * state.dtheta) + alpha * zeta * f;
      break;
    case PolsaMode::kDiagonalScaled:
      if (d_gain == nullptr) {
        throw std::invalid_argument("step_polsa: diagonal mode needs the gain diagonal");
      }
      state.dtheta += d_gain->asDiagonal() * (state.a_hat * state.dtheta) +
                      alpha * (d_gain->asDiagonal() * f);
      break;
  }
  state.theta += state.dtheta;
  ++state.n;
  check_finite(state);
}

/// NeSA: dtheta' = dtheta + zeta [f(theta_n) - f(theta_{n-1})] + zeta alpha f(theta_n),
/// both evaluations with this step's (a, b). For the linear sample this equals
/// (I + zeta a) dtheta + zeta alpha f identically; the matrix form is used.
inline void step_nesa(IterateState& state, const LinearSample& sample,
                      const GainSchedule& schedule, double zeta = 1.0) {
  const double alpha = schedule.alpha(state.n + 1);
  state.dtheta += zeta * (sample.a * state.dtheta) +
                  alpha * zeta * sample.f(state.theta);
  state.theta += state.dtheta;
  ++state.n;
  check_finite(state);
}

/// Snapshot of a run at step n.
struct Snapshot {
  std::int64_t n = 0;
  Vec theta;
  Vec dtheta;
};

using SampleOracle = std::function<LinearSample(const IterateState&)>;

struct RunOptions {
  Algorithm kind = Algorithm::kSa;
  GainSchedule schedule;
  double zeta = 1.0;
  double pinv_tol = -1.0;
  Mat sa_gain;    // identity if empty (kSa only)
};

/// Drives one algorithm over a sample stream, recording snapshots at the
/// requested step indices (ascending; index 0 means the initial state).
inline std::vector<Snapshot> run(const RunOptions& opts, const SampleOracle& oracle,
                                 IterateState state, std::int64_t n_steps,
                                 const std::vector<std::int64_t>& snapshot_indices) {
  std::vector<Snapshot> out;
  auto maybe_snapshot = [&](std::size_t& cursor) {
    while (cursor < snapshot_indices.size() && snapshot_indices[cursor] == state.n) {
      out.push_back({state.n, state.theta, state.dtheta});
      ++cursor;
    }
  };
  const Mat identity = Mat::Identity(state.theta.size(), state.theta.size());
  std::size_t cursor = 0;
  maybe_snapshot(cursor);
  for (std::int64_t k = 0; k < n_steps; ++k) {
    const LinearSample sample = oracle(state);
    switch (opts.kind) {
      case Algorithm::kSa:
        step_sa(state, sample, opts.sa_gain.size() > 0 ? opts.sa_gain : identity,
                opts.schedule);
        break;
      case Algorithm::kSnr:
        update_matrix_estimate(state, sample.a);
        step_snr(state, sample, opts.schedule, opts.pinv_tol);
        break;
      case Algorithm::kPolsa:
        update_matrix_estimate(state, sample.a);
        step_polsa(state, sample, opts.schedule, PolsaMode::kEstimatedA, opts.zeta);
        break;
      case Algorithm::kPolsaD:
        throw std::invalid_argument("run: PolSA-D needs the Q-learning event loop");
      case Algorithm::kNesa:
        step_nesa(state, sample, opts.schedule, opts.zeta);
        break;
    }
    maybe_snapshot(cursor);
  }
  return out;
}

}  // namespace polsa
