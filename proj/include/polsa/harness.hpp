#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "polsa/linear_model.hpp"
#include "polsa/rl_algos.hpp"
#include "polsa/rng.hpp"
#include "polsa/sa_core.hpp"

namespace polsa {

// ---------------------------------------------------------------------------
// Trial parallelism. Trials are the unit of parallelism; aggregation is a
// deterministic fold over trial index order regardless of completion order.

inline int default_thread_count() {
  if (const char* env = std::getenv("POLSA_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

template <class F>
inline void parallel_trials(int trials, F&& body, int n_threads = 0) {
  if (n_threads <= 0) n_threads = default_thread_count();
  n_threads = std::min(n_threads, std::max(trials, 1));
  if (n_threads <= 1) {
    for (int t = 0; t < trials; ++t) body(t);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(n_threads);
  for (int w = 0; w < n_threads; ++w) {
    workers.emplace_back([&, w] {
      for (int t = w; t < trials; t += n_threads) body(t);
    });
  }
  for (auto& worker : workers) worker.join();
}

/// Geometric snapshot grid covering [n_min, n_max] with `per_decade` points
/// per decade, always including both endpoints. Values are distinct and
/// ascending.
inline std::vector<std::int64_t> geometric_snapshots(std::int64_t n_min,
                                                     std::int64_t n_max,
                                                     int per_decade = 4) {
  std::vector<std::int64_t> out;
  const double lo = std::log10(static_cast<double>(std::max<std::int64_t>(n_min, 1)));
  const double hi = std::log10(static_cast<double>(std::max(n_max, n_min)));
  const int steps = std::max(1, static_cast<int>(std::ceil((hi - lo) * per_decade)));
  for (int k = 0; k <= steps; ++k) {
    const double expo = lo + (hi - lo) * k / steps;
    auto n = static_cast<std::int64_t>(std::llround(std::pow(10.0, expo)));
    n = std::clamp(n, n_min, n_max);
    if (out.empty() || n > out.back()) out.push_back(n);
  }
  return out;
}

inline std::uint64_t checksum_mix(std::uint64_t h, double v) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(bits));
  h ^= bits + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

// ---------------------------------------------------------------------------
// Linear-model experiments.

enum class LinearAlgorithm {
  kSa,
  kSnr,
  kSnrIdealized,
  kPolsaEstimated,
  kPolsaFixedA,
  kNesa,
};

inline LinearAlgorithm linear_algorithm_from_name(const std::string& name) {
  if (name == "sa") return LinearAlgorithm::kSa;
  if (name == "snr") return LinearAlgorithm::kSnr;
  if (name == "snr-ideal") return LinearAlgorithm::kSnrIdealized;
  if (name == "polsa") return LinearAlgorithm::kPolsaEstimated;
  if (name == "polsa-fixed") return LinearAlgorithm::kPolsaFixedA;
  if (name == "nesa") return LinearAlgorithm::kNesa;
  throw std::invalid_argument("unknown linear algorithm: " + name);
}

inline std::string linear_algorithm_name(LinearAlgorithm kind) {
  switch (kind) {
    case LinearAlgorithm::kSa: return "sa";
    case LinearAlgorithm::kSnr: return "snr";
    case LinearAlgorithm::kSnrIdealized: return "snr-ideal";
    case LinearAlgorithm::kPolsaEstimated: return "polsa";
    case LinearAlgorithm::kPolsaFixedA: return "polsa-fixed";
    case LinearAlgorithm::kNesa: return "nesa";
  }
  return "?";
}

struct LinearTrialPlan {
  LinearModelSpec model;
  std::vector<LinearAlgorithm> algorithms;
  bool shared_stream = true;  // paired runs consume the identical sample stream
  std::int64_t n_steps = 0;
  std::vector<std::int64_t> snapshots;  // ascending
  int trials = 1;
  std::uint64_t base_seed = 0;
  GainSchedule schedule;
  double zeta = 1.0;
  Vec theta0;  // empty: start at theta*
};

struct AlgorithmTrace {
  std::vector<Snapshot> snapshots;
  bool diverged = false;
  std::int64_t diverged_at = -1;
  std::uint64_t stream_checksum = 0;
};

struct TrialResult {
  std::vector<AlgorithmTrace> per_algorithm;
};

struct LinearRunResult {
  std::vector<std::int64_t> snapshots;
  std::vector<TrialResult> trials;
  Vec theta_star;
};

/// T independent trials; trial t is seeded mix(base_seed, t). Inside one
/// trial all algorithms consume the same sample stream when shared_stream is
/// set (independent streams otherwise). Divergence is recorded per algorithm,
/// not fatal.
inline LinearRunResult run_linear_trials(const LinearTrialPlan& plan,
                                         int n_threads = 0) {
  if (plan.trials < 1) throw std::invalid_argument("run_linear_trials: trials >= 1");
  LinearRunResult result;
  result.snapshots = plan.snapshots;
  result.theta_star = plan.model.theta_star;
  result.trials.resize(plan.trials);

  const Eigen::Index d = plan.model.dim();
  const Vec theta0 = plan.theta0.size() > 0 ? plan.theta0 : plan.model.theta_star;
  const Mat a_inv = plan.model.a_mean.fullPivLu().inverse();
  const std::size_t n_alg = plan.algorithms.size();

  parallel_trials(plan.trials, [&](int t) {
    TrialResult& trial = result.trials[t];
    trial.per_algorithm.resize(n_alg);
    std::vector<IterateState> states;
    states.reserve(n_alg);
    for (std::size_t a = 0; a < n_alg; ++a) {
      states.push_back(IterateState::init(theta0));
    }
    Rng shared_rng = make_rng(plan.base_seed, static_cast<std::uint64_t>(t));
    std::vector<Rng> own_rngs;
    if (!plan.shared_stream) {
      for (std::size_t a = 0; a < n_alg; ++a) {
        own_rngs.push_back(make_rng(plan.base_seed,
                                    (static_cast<std::uint64_t>(t) << 16) + 1 + a));
      }
    }
    std::vector<std::size_t> cursor(n_alg, 0);
    auto take_snapshots = [&](std::int64_t n) {
      for (std::size_t a = 0; a < n_alg; ++a) {
        AlgorithmTrace& trace = trial.per_algorithm[a];
        while (cursor[a] < plan.snapshots.size() && plan.snapshots[cursor[a]] == n) {
          trace.snapshots.push_back({n, states[a].theta, states[a].dtheta});
          ++cursor[a];
        }
      }
    };
    take_snapshots(0);
    for (std::int64_t k = 0; k < plan.n_steps; ++k) {
      LinearSample shared;
      if (plan.shared_stream) shared = sample(plan.model, shared_rng);
      for (std::size_t a = 0; a < n_alg; ++a) {
        AlgorithmTrace& trace = trial.per_algorithm[a];
        if (trace.diverged) continue;
        const LinearSample& s =
            plan.shared_stream ? shared
                               : (shared = sample(plan.model, own_rngs[a]), shared);
        trace.stream_checksum = checksum_mix(trace.stream_checksum, s.b(0));
        trace.stream_checksum = checksum_mix(trace.stream_checksum, s.a(0, 0));
        try {
          switch (plan.algorithms[a]) {
            case LinearAlgorithm::kSa:
              step_sa(states[a], s, Mat::Identity(d, d), plan.schedule);
              break;
            case LinearAlgorithm::kSnr:
              update_matrix_estimate(states[a], s.a);
              step_snr(states[a], s, plan.schedule);
              break;
            case LinearAlgorithm::kSnrIdealized:
              step_snr_idealized(states[a], s, a_inv, plan.schedule);
              break;
            case LinearAlgorithm::kPolsaEstimated:
              update_matrix_estimate(states[a], s.a);
              step_polsa(states[a], s, plan.schedule, PolsaMode::kEstimatedA, plan.zeta);
              break;
            case LinearAlgorithm::kPolsaFixedA:
              step_polsa(states[a], s, plan.schedule, PolsaMode::kFixedA, plan.zeta,
                         &plan.model.a_mean);
              break;
            case LinearAlgorithm::kNesa:
              step_nesa(states[a], s, plan.schedule, plan.zeta);
              break;
          }
        } catch (const DivergenceError& err) {
          trace.diverged = true;
          trace.diverged_at = err.step;
        }
      }
      take_snapshots(k + 1);
    }
  }, n_threads);
  return result;
}

// ---------------------------------------------------------------------------
// Scaled-covariance estimation.

struct CovarianceEstimate {
  std::int64_t n = 0;
  Mat sigma11;        // n * mean(theta~ theta~^T), symmetrized
  Mat sigma22;        // n^2 * mean(dtheta dtheta^T), symmetrized
  Mat sigma21;        // n^{3/2} * mean(dtheta theta~^T)
  Mat sigma11_stderr;  // entrywise standard error of sigma11
  Mat sigma22_stderr;
  int trials_used = 0;
  int trials_diverged = 0;
};

struct CovarianceReport {
  std::string algorithm;
  std::vector<CovarianceEstimate> estimates;
  Mat sigma11_target;  // optional; empty when no prediction applies
  Mat sigma22_target;
};

/// Monte-Carlo block estimates for one algorithm of a linear run. Divergent
/// trials are excluded from the means but counted in the report.
inline CovarianceReport estimate_covariance(const LinearRunResult& result,
                                            std::size_t algorithm_index,
                                            const Vec& theta_star) {
  CovarianceReport report;
  const std::size_t n_snap = result.snapshots.size();
  const Eigen::Index d = theta_star.size();
  for (std::size_t si = 0; si < n_snap; ++si) {
    CovarianceEstimate est;
    est.n = result.snapshots[si];
    est.sigma11 = Mat::Zero(d, d);
    est.sigma22 = Mat::Zero(d, d);
    est.sigma21 = Mat::Zero(d, d);
    Mat m2_11 = Mat::Zero(d, d);
    Mat m2_22 = Mat::Zero(d, d);
    const double n = static_cast<double>(est.n);
    for (const TrialResult& trial : result.trials) {
      const AlgorithmTrace& trace = trial.per_algorithm[algorithm_index];
      if (trace.diverged) {
        ++est.trials_diverged;
        continue;
      }
      const Snapshot& snap = trace.snapshots[si];
      const Vec err = snap.theta - theta_star;
      const Mat o11 = n * (err * err.transpose());
      const Mat o22 = n * n * (snap.dtheta * snap.dtheta.transpose());
      est.sigma11 += o11;
      est.sigma22 += o22;
      est.sigma21 += std::pow(n, 1.5) * (snap.dtheta * err.transpose());
      m2_11 += o11.cwiseProduct(o11);
      m2_22 += o22.cwiseProduct(o22);
      ++est.trials_used;
    }
    const double cnt = std::max(1, est.trials_used);
    est.sigma11 /= cnt;
    est.sigma22 /= cnt;
    est.sigma21 /= cnt;
    est.sigma11 = 0.5 * (est.sigma11 + est.sigma11.transpose()).eval();
    est.sigma22 = 0.5 * (est.sigma22 + est.sigma22.transpose()).eval();
    if (est.trials_used > 1) {
      const double tc = est.trials_used;
      est.sigma11_stderr =
          ((m2_11 / tc - est.sigma11.cwiseProduct(est.sigma11)).cwiseMax(0.0) /
           (tc - 1.0)).cwiseSqrt();
      est.sigma22_stderr =
          ((m2_22 / tc - est.sigma22.cwiseProduct(est.sigma22)).cwiseMax(0.0) /
           (tc - 1.0)).cwiseSqrt();
    } else {
      est.sigma11_stderr =
          Mat::Constant(d, d, std::numeric_limits<double>::infinity());
      est.sigma22_stderr = est.sigma11_stderr;
    }
    report.estimates.push_back(std::move(est));
  }
  return report;
}

inline double frobenius_relative_error(const Mat& estimate, const Mat& target) {
  const double denom = target.norm();
  return (estimate - target).norm() / (denom > 0 ? denom : 1.0);
}

// ---------------------------------------------------------------------------
// Coupling between a paired pair of algorithms.

struct CouplingStat {
  std::int64_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  int diverged = 0;
};

/// n^2 ||theta_n - theta*_n||^2 statistics across trials for two algorithms
/// of the same (paired) run.
inline std::vector<CouplingStat> coupling_stats(const LinearRunResult& result,
                                                std::size_t idx_a,
                                                std::size_t idx_b) {
  std::vector<CouplingStat> out;
  for (std::size_t si = 0; si < result.snapshots.size(); ++si) {
    CouplingStat stat;
    stat.n = result.snapshots[si];
    std::vector<double> values;
    for (const TrialResult& trial : result.trials) {
      const AlgorithmTrace& ta = trial.per_algorithm[idx_a];
      const AlgorithmTrace& tb = trial.per_algorithm[idx_b];
      if (ta.diverged || tb.diverged) {
        ++stat.diverged;
        continue;
      }
      const double n = static_cast<double>(stat.n);
      values.push_back(n * n *
                       (ta.snapshots[si].theta - tb.snapshots[si].theta).squaredNorm());
    }
    if (!values.empty()) {
      stat.mean = 0.0;
      for (double v : values) stat.mean += v;
      stat.mean /= values.size();
      std::sort(values.begin(), values.end());
      const std::size_t mid = values.size() / 2;
      stat.median = values.size() % 2 == 1
                        ? values[mid]
                        : 0.5 * (values[mid - 1] + values[mid]);
    }
    out.push_back(stat);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Histograms and the Kolmogorov-Smirnov distance.

struct Histogram {
  std::vector<double> raw;  // the values themselves; bins are presentation only
  std::vector<double> bin_edges;
  std::vector<int> counts;
};

inline Histogram histogram(std::vector<double> values, int n_bins = 30) {
  Histogram h;
  h.raw = values;
  if (values.empty()) return h;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi <= lo) hi = lo + 1.0;
  h.counts.assign(n_bins, 0);
  for (int b = 0; b <= n_bins; ++b) {
    h.bin_edges.push_back(lo + (hi - lo) * b / n_bins);
  }
  for (double v : values) {
    int b = static_cast<int>((v - lo) / (hi - lo) * n_bins);
    b = std::clamp(b, 0, n_bins - 1);
    ++h.counts[b];
  }
  return h;
}

/// Two-sample Kolmogorov-Smirnov distance.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("ks_distance: empty sample");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia] < b[ib]) {
      ++ia;
    } else if (b[ib] < a[ia]) {
      ++ib;
    } else {
      // Tie: both empirical CDFs jump at this value; advance past it in both.
      const double v = a[ia];
      while (ia < a.size() && a[ia] == v) ++ia;
      while (ib < b.size() && b[ib] == v) ++ib;
    }
    d = std::max(d, std::abs(static_cast<double>(ia) / a.size() -
                             static_cast<double>(ib) / b.size()));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Q-learning trials.

struct QTrialPlan {
  Mdp mdp;
  std::vector<QAlgorithm> algorithms;
  std::vector<GainSchedule> schedules;  // parallel to algorithms; empty: all 1/n
  bool clock_mode = false;
  std::int64_t n_steps = 0;
  std::vector<std::int64_t> snapshots;
  int trials = 1;
  std::uint64_t base_seed = 0;
  double zeta = 1.0;
};

struct QRunResult {
  std::vector<std::int64_t> snapshots;
  std::vector<TrialResult> trials;
};

/// Runs all algorithms over a shared (x, u, x') event stream per trial. Each
/// algorithm resolves the greedy action against its own parameters, so the
/// environment randomness is identical across algorithms by construction.
inline QRunResult run_q_trials(const QTrialPlan& plan, int n_threads = 0) {
  if (plan.trials < 1) throw std::invalid_argument("run_q_trials: trials >= 1");
  if (!plan.schedules.empty() && plan.schedules.size() != plan.algorithms.size()) {
    throw std::invalid_argument("run_q_trials: schedules must match algorithms");
  }
  QRunResult result;
  result.snapshots = plan.snapshots;
  result.trials.resize(plan.trials);
  const std::size_t n_alg = plan.algorithms.size();

  parallel_trials(plan.trials, [&](int t) {
    TrialResult& trial = result.trials[t];
    trial.per_algorithm.resize(n_alg);
    std::vector<QLearner> learners;
    learners.reserve(n_alg);
    for (std::size_t a = 0; a < n_alg; ++a) {
      const GainSchedule sched =
          plan.schedules.empty() ? GainSchedule{} : plan.schedules[a];
      learners.emplace_back(plan.algorithms[a], plan.mdp, plan.clock_mode, sched,
                            plan.zeta);
    }
    Rng rng = make_rng(plan.base_seed, static_cast<std::uint64_t>(t));
    ExplorationStream stream = plan.clock_mode
                                   ? ExplorationStream::clock()
                                   : ExplorationStream::async(0);
    std::vector<std::size_t> cursor(n_alg, 0);
    auto take_snapshots = [&](std::int64_t n) {
      for (std::size_t a = 0; a < n_alg; ++a) {
        AlgorithmTrace& trace = trial.per_algorithm[a];
        while (cursor[a] < plan.snapshots.size() && plan.snapshots[cursor[a]] == n) {
          trace.snapshots.push_back(
              {n, learners[a].state.theta, learners[a].state.dtheta});
          ++cursor[a];
        }
      }
    };
    take_snapshots(0);
    for (std::int64_t k = 0; k < plan.n_steps; ++k) {
      const Event event = next_event(stream, plan.mdp, rng);
      for (std::size_t a = 0; a < n_alg; ++a) {
        AlgorithmTrace& trace = trial.per_algorithm[a];
        if (trace.diverged) continue;
        trace.stream_checksum = checksum_mix(
            trace.stream_checksum,
            static_cast<double>((event.x * plan.mdp.n_states + event.x_next) *
                                    plan.mdp.d() + event.u));
        try {
          q_step(learners[a], plan.mdp, event);
        } catch (const DivergenceError& err) {
          trace.diverged = true;
          trace.diverged_at = err.step;
        }
      }
      take_snapshots(k + 1);
    }
  }, n_threads);
  return result;
}

struct BellmanPoint {
  std::int64_t n = 0;
  double error = 0.0;  // mean over non-divergent trials
  int trials_used = 0;
};

inline std::vector<BellmanPoint> bellman_trajectory(const QRunResult& result,
                                                    const Mdp& mdp,
                                                    std::size_t algorithm_index) {
  std::vector<BellmanPoint> out;
  for (std::size_t si = 0; si < result.snapshots.size(); ++si) {
    BellmanPoint point;
    point.n = result.snapshots[si];
    for (const TrialResult& trial : result.trials) {
      const AlgorithmTrace& trace = trial.per_algorithm[algorithm_index];
      if (trace.diverged) continue;
      point.error += bellman_error(mdp, trace.snapshots[si].theta);
      ++point.trials_used;
    }
    if (point.trials_used > 0) point.error /= point.trials_used;
    out.push_back(point);
  }
  return out;
}

/// sqrt(n) * (theta_n(i) - theta*(i)) across trials at one snapshot.
inline std::vector<double> scaled_error_values(const QRunResult& result,
                                               std::size_t algorithm_index,
                                               std::size_t snapshot_index,
                                               const Vec& theta_star,
                                               int coordinate) {
  std::vector<double> out;
  const double n = static_cast<double>(result.snapshots[snapshot_index]);
  for (const TrialResult& trial : result.trials) {
    const AlgorithmTrace& trace = trial.per_algorithm[algorithm_index];
    if (trace.diverged) continue;
    out.push_back(std::sqrt(n) *
                  (trace.snapshots[snapshot_index].theta(coordinate) -
                   theta_star(coordinate)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// TD(0) trials on a finite chain.

struct TdTrialPlan {
  TdModel model;
  std::vector<TdAlgorithm> algorithms;
  std::vector<GainSchedule> schedules;  // parallel to algorithms; empty: all 1/n
  std::int64_t n_steps = 0;
  std::vector<std::int64_t> snapshots;
  int trials = 1;
  std::uint64_t base_seed = 0;
  double zeta = 1.0;
};

struct TdRunResult {
  std::vector<std::int64_t> snapshots;
  std::vector<TrialResult> trials;
  Vec theta_star;
};

inline TdRunResult run_td_trials(const TdTrialPlan& plan, int n_threads = 0) {
  if (plan.trials < 1) throw std::invalid_argument("run_td_trials: trials >= 1");
  if (!plan.schedules.empty() && plan.schedules.size() != plan.algorithms.size()) {
    throw std::invalid_argument("run_td_trials: schedules must match algorithms");
  }
  TdRunResult result;
  result.snapshots = plan.snapshots;
  result.theta_star = plan.model.theta_star();
  result.trials.resize(plan.trials);
  const std::size_t n_alg = plan.algorithms.size();
  const Eigen::Index d = plan.model.dim();

  parallel_trials(plan.trials, [&](int t) {
    TrialResult& trial = result.trials[t];
    trial.per_algorithm.resize(n_alg);
    std::vector<IterateState> states(n_alg, IterateState::init(Vec::Zero(d)));
    Rng rng = make_rng(plan.base_seed, static_cast<std::uint64_t>(t));
    std::uniform_int_distribution<int> start(0, static_cast<int>(plan.model.n_states()) - 1);
    int x_prev = start(rng);
    std::vector<std::size_t> cursor(n_alg, 0);
    auto take_snapshots = [&](std::int64_t n) {
      for (std::size_t a = 0; a < n_alg; ++a) {
        AlgorithmTrace& trace = trial.per_algorithm[a];
        while (cursor[a] < plan.snapshots.size() && plan.snapshots[cursor[a]] == n) {
          trace.snapshots.push_back({n, states[a].theta, states[a].dtheta});
          ++cursor[a];
        }
      }
    };
    take_snapshots(0);
    for (std::int64_t k = 0; k < plan.n_steps; ++k) {
      const int x = sample_row(plan.model.transition.row(x_prev).transpose(), rng);
      const LinearSample s = td_sample(plan.model, x_prev, x);
      x_prev = x;
      for (std::size_t a = 0; a < n_alg; ++a) {
        AlgorithmTrace& trace = trial.per_algorithm[a];
        if (trace.diverged) continue;
        trace.stream_checksum = checksum_mix(trace.stream_checksum,
                                             static_cast<double>(x));
        try {
          const GainSchedule sched =
              plan.schedules.empty() ? GainSchedule{} : plan.schedules[a];
          td_step(plan.algorithms[a], states[a], s, sched, plan.zeta);
        } catch (const DivergenceError& err) {
          trace.diverged = true;
          trace.diverged_at = err.step;
        }
      }
      take_snapshots(k + 1);
    }
  }, n_threads);
  return result;
}

}  // namespace polsa
