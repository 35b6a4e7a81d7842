#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "polsa/mdp.hpp"
#include "polsa/sa_core.hpp"

namespace polsa {

/// State-action-state triple with the greedy action at the landing state
/// resolved against the current parameter vector.
struct QEvent {
  int x;
  int u;        // action index within actions[x]
  int x_next;
  int pi_next;  // argmin_u' Q(x_next, u'), lowest index on ties
};

inline QEvent resolve_event(const Mdp& mdp, const Event& event, const QTable& theta) {
  return {event.x, event.u, event.x_next, greedy_action(mdp, theta, event.x_next)};
}

/// Per-event Watkins sample under the indicator basis:
///   A = phi(x,u) (beta phi(x', pi(x')) - phi(x,u))^T,  b = -c(x,u) phi(x,u),
/// so that f(theta) = A theta - b = phi * (c + beta minQ(x') - Q(x,u)) is the
/// temporal-difference term and the Bellman solution is its root. A has at
/// most two nonzero entries (one when the pairs coincide).
inline void q_sample(const Mdp& mdp, const QEvent& event, LinearSample& out) {
  const int d = mdp.d();
  if (out.a.rows() != d || out.a.cols() != d) {
    out.a = Mat::Zero(d, d);
    out.b = Vec::Zero(d);
  } else {
    out.a.setZero();
    out.b.setZero();
  }
  const int row = mdp.pair_index(event.x, event.u);
  const int col = mdp.pair_index(event.x_next, event.pi_next);
  out.a(row, row) += -1.0;
  out.a(row, col) += mdp.beta;
  out.b(row) = -mdp.cost[event.x][event.u];
}

inline LinearSample q_sample(const Mdp& mdp, const QEvent& event) {
  LinearSample sample;
  q_sample(mdp, event, sample);
  return sample;
}

/// Visit counts backing the diagonal gain D(i,i) = n / count_i (0 when the
/// pair is unvisited). Counts include the current event: update first.
struct DiagonalGain {
  Vec counts;
  std::int64_t n = 0;

  explicit DiagonalGain(int d) : counts(Vec::Zero(d)) {}

  void update(int pair_index) {
    counts(pair_index) += 1.0;
    ++n;
  }

  Vec diagonal() const {
    Vec d_hat = Vec::Zero(counts.size());
    for (Eigen::Index i = 0; i < counts.size(); ++i) {
      if (counts(i) > 0.0) d_hat(i) = static_cast<double>(n) / counts(i);
    }
    return d_hat;
  }
};

enum class QAlgorithm { kWatkins, kSnr, kPolsa, kPolsaD, kNesa };

inline QAlgorithm q_algorithm_from_name(const std::string& name) {
  if (name == "watkins") return QAlgorithm::kWatkins;
  if (name == "snr") return QAlgorithm::kSnr;
  if (name == "polsa") return QAlgorithm::kPolsa;
  if (name == "polsad") return QAlgorithm::kPolsaD;
  if (name == "nesa") return QAlgorithm::kNesa;
  throw std::invalid_argument("unknown Q-learning algorithm: " + name);
}

inline std::string q_algorithm_name(QAlgorithm kind) {
  switch (kind) {
    case QAlgorithm::kWatkins: return "watkins";
    case QAlgorithm::kSnr: return "snr";
    case QAlgorithm::kPolsa: return "polsa";
    case QAlgorithm::kPolsaD: return "polsad";
    case QAlgorithm::kNesa: return "nesa";
  }
  return "?";
}

/// One Q-learning run: iterate state plus the gain statistics the particular
/// algorithm maintains. Clock mode replaces the empirical diagonal gain by
/// d^{-1} I.
struct QLearner {
  QAlgorithm kind;
  bool clock_mode;
  IterateState state;
  DiagonalGain gain;
  GainSchedule schedule;
  double zeta = 1.0;
  double pinv_tol_scale = 1e-8;  // relative to max |A_hat| entry
  LinearSample scratch;

  QLearner(QAlgorithm kind_, const Mdp& mdp, bool clock_mode_,
           GainSchedule schedule_ = {}, double zeta_ = 1.0)
      : kind(kind_),
        clock_mode(clock_mode_),
        state(IterateState::init(Vec::Zero(mdp.d()), /*with_diagonal_gain=*/true)),
        gain(mdp.d()),
        schedule(schedule_),
        zeta(zeta_) {}
};

/// Advances one learner by one environment event. The greedy action is
/// resolved against this learner's own parameters, so paired learners can
/// share the raw (x, u, x') stream.
inline void q_step(QLearner& learner, const Mdp& mdp, const Event& event) {
  const QEvent resolved = resolve_event(mdp, event, learner.state.theta);
  q_sample(mdp, resolved, learner.scratch);
  const int pair = mdp.pair_index(event.x, event.u);
  learner.gain.update(pair);
  learner.state.d_counts = learner.gain.counts;
  const double inv_d = 1.0 / static_cast<double>(mdp.d());
  switch (learner.kind) {
    case QAlgorithm::kWatkins: {
      // Diagonal gain: avoid the dense matrix product.
      const double alpha = learner.schedule.alpha(learner.state.n + 1);
      const double g = learner.clock_mode
                           ? inv_d
                           : static_cast<double>(learner.gain.n) / learner.gain.counts(pair);
      const Vec f = learner.scratch.f(learner.state.theta);
      learner.state.dtheta.setZero();
      learner.state.dtheta(pair) = alpha * g * f(pair);
      learner.state.theta(pair) += learner.state.dtheta(pair);
      ++learner.state.n;
      check_finite(learner.state);
      break;
    }
    case QAlgorithm::kSnr: {
      update_matrix_estimate(learner.state, learner.scratch.a);
      const double scale = learner.state.a_hat.cwiseAbs().maxCoeff();
      step_snr(learner.state, learner.scratch, learner.schedule,
               learner.pinv_tol_scale * (scale > 0 ? scale : 1.0));
      break;
    }
    case QAlgorithm::kPolsa: {
      update_matrix_estimate(learner.state, learner.scratch.a);
      step_polsa(learner.state, learner.scratch, learner.schedule,
                 PolsaMode::kEstimatedA, learner.zeta);
      break;
    }
    case QAlgorithm::kPolsaD: {
      update_matrix_estimate(learner.state, learner.scratch.a);
      const Vec d_hat = learner.clock_mode
                            ? Vec::Constant(mdp.d(), inv_d)
                            : learner.gain.diagonal();
      step_polsa(learner.state, learner.scratch, learner.schedule,
                 PolsaMode::kDiagonalScaled, learner.zeta, nullptr, &d_hat);
      break;
    }
    case QAlgorithm::kNesa: {
      step_nesa(learner.state, learner.scratch, learner.schedule, learner.zeta);
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// TD(0) family on a finite uniformly ergodic Markov chain.

/// Linear value-function approximation model: feature map as a d x l matrix
/// of per-state feature columns, per-state cost, discount, and the chain.
struct TdModel {
  Mat features;  // column x is psi(x), d rows
  Vec cost;      // c(x)
  double beta = 0.0;
  Mat transition;  // row-stochastic l x l

  Eigen::Index n_states() const { return transition.rows(); }
  Eigen::Index dim() const { return features.rows(); }

  Vec psi(int x) const { return features.col(x); }

  /// Closed-form value function h = (I - beta P)^{-1} c.
  Vec value_function() const {
    const Mat system = Mat::Identity(n_states(), n_states()) - beta * transition;
    return system.partialPivLu().solve(cost);
  }

  /// Galerkin target under the stationary distribution (exact root of the
  /// mean TD dynamics). Equals value_function() for one-hot features.
  Vec theta_star() const {
    const Vec pi = stationary();
    Mat a = Mat::Zero(dim(), dim());
    Vec b = Vec::Zero(dim());
    for (Eigen::Index x = 0; x < n_states(); ++x) {
      Vec avg_next = Vec::Zero(dim());
      for (Eigen::Index y = 0; y < n_states(); ++y) {
        avg_next += transition(x, y) * psi(static_cast<int>(y));
      }
      a += pi(x) * psi(static_cast<int>(x)) *
           (beta * avg_next - psi(static_cast<int>(x))).transpose();
      b += -pi(x) * psi(static_cast<int>(x)) * cost(x);
    }
    return a.fullPivLu().solve(b);
  }

  Vec stationary() const {
    // Power iteration is plenty for the small chains used here.
    Vec pi = Vec::Constant(n_states(), 1.0 / static_cast<double>(n_states()));
    for (int k = 0; k < 100000; ++k) {
      Vec next = transition.transpose() * pi;
      const double delta = (next - pi).cwiseAbs().maxCoeff();
      pi = next;
      if (delta < 1e-14) break;
    }
    return pi;
  }
};

/// Per-transition TD sample:
///   A = psi(x_prev) (beta psi(x) - psi(x_prev))^T,  b = -psi(x_prev) c(x_prev),
/// so f(theta) = A theta - b = psi(x_prev) d with the usual temporal
/// difference d = c(x_prev) + [beta psi(x) - psi(x_prev)]^T theta.
inline LinearSample td_sample(const TdModel& model, int x_prev, int x) {
  const Vec psi_prev = model.psi(x_prev);
  LinearSample out;
  out.a = psi_prev * (model.beta * model.psi(x) - psi_prev).transpose();
  out.b = -psi_prev * model.cost(x_prev);
  return out;
}

enum class TdAlgorithm { kTd0, kLstd0, kPolsaTd0, kNesaTd0 };

inline TdAlgorithm td_algorithm_from_name(const std::string& name) {
  if (name == "td0") return TdAlgorithm::kTd0;
  if (name == "lstd0") return TdAlgorithm::kLstd0;
  if (name == "polsa-td0") return TdAlgorithm::kPolsaTd0;
  if (name == "nesa-td0") return TdAlgorithm::kNesaTd0;
  throw std::invalid_argument("unknown TD algorithm: " + name);
}

inline std::string td_algorithm_name(TdAlgorithm kind) {
  switch (kind) {
    case TdAlgorithm::kTd0: return "td0";
    case TdAlgorithm::kLstd0: return "lstd0";
    case TdAlgorithm::kPolsaTd0: return "polsa-td0";
    case TdAlgorithm::kNesaTd0: return "nesa-td0";
  }
  return "?";
}

/// TD0 = identity-gain SA; LSTD0 = SNR with the single 1/n gain sequence;
/// PolSA/NeSA TD(0) use the matrix-momentum steppers.
inline void td_step(TdAlgorithm kind, IterateState& state, const LinearSample& sample,
                    const GainSchedule& schedule, double zeta = 1.0) {
  static const GainSchedule kUnitOverN{};  // LSTD0 requires alpha_n = 1/n
  switch (kind) {
    case TdAlgorithm::kTd0:
      step_sa(state, sample, Mat::Identity(state.theta.size(), state.theta.size()),
              schedule);
      break;
    case TdAlgorithm::kLstd0:
      update_matrix_estimate(state, sample.a);
      step_snr(state, sample, kUnitOverN);
      break;
    case TdAlgorithm::kPolsaTd0:
      update_matrix_estimate(state, sample.a);
      step_polsa(state, sample, schedule, PolsaMode::kEstimatedA, zeta);
      break;
    case TdAlgorithm::kNesaTd0:
      step_nesa(state, sample, schedule, zeta);
      break;
  }
}

/// Uniform random walk on a cycle of `n_states` nodes with one-hot features;
/// the default preset for the TD experiments.
inline TdModel cycle_chain_model(int n_states = 6, double beta = 0.5) {
  TdModel model;
  model.beta = beta;
  model.transition = Mat::Zero(n_states, n_states);
  for (int x = 0; x < n_states; ++x) {
    model.transition(x, (x + 1) % n_states) = 0.5;
    model.transition(x, (x + n_states - 1) % n_states) = 0.5;
  }
  model.features = Mat::Identity(n_states, n_states);
  model.cost = Vec::Constant(n_states, 0.05);
  model.cost(0) = 0.25;
  return model;
}

}  // namespace polsa
