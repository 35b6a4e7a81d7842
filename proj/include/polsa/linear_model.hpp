#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polsa/linalg.hpp"
#include "polsa/rng.hpp"
#include "polsa/sa_core.hpp"

namespace polsa {

/// Distribution of (A_n, b_n) with known root and noise covariance.
///
/// A_{n+1} = a_mean + Atilde, with Atilde drawn from the finite zero-mean
/// mixture `a_perturbations` (empty list: deterministic A_n). The additive
/// noise Delta*_{n+1} = f_{n+1}(theta*) has covariance noise_cov; b_{n+1} is
/// arranged as A_{n+1} theta* - Delta*_{n+1}.
struct LinearModelSpec {
  enum class NoiseKind { kGaussian, kBoundedMixture };

  Mat a_mean;
  Vec b_mean;
  Mat noise_cov;
  std::vector<std::pair<Mat, double>> a_perturbations;
  NoiseKind noise_kind = NoiseKind::kGaussian;

  // Derived at finalize(): square root of noise_cov and the root theta*.
  Mat noise_sqrt;
  Vec theta_star;

  Eigen::Index dim() const { return a_mean.rows(); }

  void finalize() {
    linalg::require_square(a_mean, "LinearModelSpec");
    if (b_mean.size() != a_mean.rows() || noise_cov.rows() != a_mean.rows() ||
        noise_cov.cols() != a_mean.cols()) {
      throw std::invalid_argument("LinearModelSpec: inconsistent dimensions");
    }
    double prob_sum = 0.0;
    Mat pert_mean = Mat::Zero(dim(), dim());
    for (const auto& [mat, prob] : a_perturbations) {
      if (prob < 0.0) throw std::invalid_argument("LinearModelSpec: negative probability");
      prob_sum += prob;
      pert_mean += prob * mat;
    }
    if (!a_perturbations.empty()) {
      if (std::abs(prob_sum - 1.0) > 1e-12) {
        throw std::invalid_argument("LinearModelSpec: mixture probabilities must sum to 1");
      }
      if (pert_mean.cwiseAbs().maxCoeff() > 1e-12) {
        throw std::invalid_argument("LinearModelSpec: perturbation mixture must be zero-mean");
      }
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(noise_cov);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < -1e-10) {
      throw std::invalid_argument("LinearModelSpec: noise_cov must be symmetric PSD");
    }
    noise_sqrt = es.eigenvectors() *
                 es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                 es.eigenvectors().transpose();
    Eigen::FullPivLU<Mat> lu(a_mean);
    if (!lu.isInvertible()) {
      throw std::invalid_argument("LinearModelSpec: mean matrix A must be nonsingular");
    }
    theta_star = lu.solve(b_mean);
  }
};

/// Exactly computable quantities of a model: root, optimal covariance, and the
/// vectorized operator L(Q) = E[(I+A_n) Q (I+A_n)^T] as a d^2 x d^2 matrix.
struct ModelFacts {
  Vec theta_star;
  Mat sigma_star;
  Mat l_operator;
};

inline ModelFacts facts(const LinearModelSpec& spec) {
  ModelFacts out;
  out.theta_star = spec.theta_star;
  const Mat a_inv = spec.a_mean.fullPivLu().inverse();
  out.sigma_star = a_inv * spec.noise_cov * a_inv.transpose();
  const Eigen::Index d = spec.dim();
  const Mat eye = Mat::Identity(d, d);
  if (spec.a_perturbations.empty()) {
    const Mat m = eye + spec.a_mean;
    out.l_operator = linalg::kron(m, m);
  } else {
    out.l_operator = Mat::Zero(d * d, d * d);
    for (const auto& [pert, prob] : spec.a_perturbations) {
      const Mat m = eye + spec.a_mean + pert;
      out.l_operator += prob * linalg::kron(m, m);
    }
  }
  return out;
}

/// One i.i.d. draw. f(theta*) = Delta* with covariance noise_cov; the mixture
/// draw and the noise draw are independent, so the martingale-difference
/// property holds by construction.
inline LinearSample sample(const LinearModelSpec& spec, Rng& rng) {
  const Eigen::Index d = spec.dim();
  LinearSample out;
  out.a = spec.a_mean;
  if (!spec.a_perturbations.empty()) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    for (const auto& [pert, prob] : spec.a_perturbations) {
      u -= prob;
      if (u <= 0.0) {
        out.a += pert;
        break;
      }
    }
    // Round-off on the last component: fall through with the mean, which the
    // zero-mean check makes a measure-zero event in practice.
  }
  Vec z(d);
  if (spec.noise_kind == LinearModelSpec::NoiseKind::kGaussian) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index i = 0; i < d; ++i) z(i) = gauss(rng);
  } else {
    // Rademacher entries: bounded, zero mean, identity covariance.
    std::uniform_int_distribution<int> coin(0, 1);
    for (Eigen::Index i = 0; i < d; ++i) z(i) = coin(rng) == 0 ? -1.0 : 1.0;
  }
  const Vec delta_star = spec.noise_sqrt * z;
  out.b = out.a * spec.theta_star - delta_star;
  return out;
}

/// Random symmetric -A > 0 rescaled so lambda_max(-A) = 1, theta* = ones,
/// i.i.d. Gaussian noise with identity covariance. The published experiment
/// uses noise several orders larger; the covariance checks are
/// scale-covariant, so unit scale loses nothing at desk scale.
inline LinearModelSpec figure2_model(int d, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("figure2_model: d must be >= 1");
  Rng rng(splitmix64(seed));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat r(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) r(i, j) = gauss(rng);
  // R R^T + (d/4) I keeps the spectrum bounded away from zero, so the
  // rescaled -A has eigenvalues in roughly [1/4, 1].
  Mat s = r * r.transpose() + 0.25 * d * Mat::Identity(d, d);
  s /= linalg::spectral_radius(s);
  LinearModelSpec spec;
  spec.a_mean = -s;
  spec.b_mean = spec.a_mean * Vec::Ones(d);
  spec.noise_cov = Mat::Identity(d, d);
  spec.noise_kind = LinearModelSpec::NoiseKind::kGaussian;
  spec.finalize();
  return spec;
}

/// Scalar preset a = -0.5, sigma^2 = 1, theta* = 1: closed forms
/// Sigma* = 4 and Sigma^22 = 4/3.
inline LinearModelSpec scalar_model() {
  LinearModelSpec spec;
  spec.a_mean = Mat::Constant(1, 1, -0.5);
  spec.b_mean = Vec::Constant(1, -0.5);
  spec.noise_cov = Mat::Identity(1, 1);
  spec.noise_kind = LinearModelSpec::NoiseKind::kGaussian;
  spec.finalize();
  return spec;
}

/// Fixed d-dimensional model with a nontrivial two-point perturbation mixture
/// A_n = A +/- E, bounded noise. A and E are symmetric, so the NeSA
/// fixed-point formulas are unambiguous. Supports d in {3, 4}.
inline LinearModelSpec mixture_model(int d) {
  if (d < 2 || d > 8) throw std::invalid_argument("mixture_model: d must be in [2, 8]");
  Mat a = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    a(i, i) = -0.5 - 0.3 * static_cast<double>(i) / d;
    if (i + 1 < d) a(i, i + 1) = a(i + 1, i) = 0.05;
  }
  Mat pert = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    pert(i, i) = (i % 2 == 0 ? 0.2 : -0.15);
    if (i + 1 < d) pert(i, i + 1) = pert(i + 1, i) = 0.1;
  }
  LinearModelSpec spec;
  spec.a_mean = a;
  spec.b_mean = a * Vec::Ones(d);
  spec.noise_cov = 0.5 * Mat::Identity(d, d) + 0.1 * Mat::Ones(d, d);
  spec.a_perturbations = {{pert, 0.5}, {-pert, 0.5}};
  spec.noise_kind = LinearModelSpec::NoiseKind::kBoundedMixture;
  spec.finalize();
  return spec;
}

/// Named presets addressable from CLI configs.
inline LinearModelSpec model_preset(const std::string& name) {
  if (name == "fig2") return figure2_model(10, 2024);
  if (name == "fig2-d4") return figure2_model(4, 2024);
  if (name == "scalar") return scalar_model();
  if (name == "mixture-d3") return mixture_model(3);
  if (name == "mixture-d4") return mixture_model(4);
  throw std::invalid_argument("unknown model preset: " + name);
}

}  // namespace polsa
