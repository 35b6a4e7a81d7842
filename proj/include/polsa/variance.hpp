#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "polsa/linalg.hpp"

namespace polsa {

using linalg::Mat;
using linalg::Vec;

/// Per-eigenvalue stability certificate: Re(lambda) < 0 and |1 + zeta lambda| < 1,
/// plus the spectral radius of the operator L when supplied.
struct StabilityReport {
  std::vector<std::complex<double>> eigenvalues;
  std::vector<bool> re_negative;
  std::vector<bool> momentum_contractive;
  std::optional<double> l_spectral_radius;
  bool overall = false;
};

inline StabilityReport check_stability(const Mat& a, double zeta,
                                       const Mat* l_operator = nullptr) {
  StabilityReport report;
  const linalg::CVec eigs = linalg::eigenvalues(a);
  report.overall = true;
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    const std::complex<double> lambda = eigs(i);
    const bool re_ok = lambda.real() < 0.0;
    const bool mom_ok = std::abs(1.0 + zeta * lambda) < 1.0;
    report.eigenvalues.push_back(lambda);
    report.re_negative.push_back(re_ok);
    report.momentum_contractive.push_back(mom_ok);
    report.overall = report.overall && re_ok && mom_ok;
  }
  if (l_operator != nullptr) {
    report.l_spectral_radius = linalg::spectral_radius(*l_operator);
    report.overall = report.overall && *report.l_spectral_radius < 1.0;
  }
  return report;
}

enum class PredictedAlgorithm { kPolsa, kNesa };

/// Analytic asymptotic-covariance blocks. sigma11 for NeSA follows the
/// fixed-point formula verbatim; because the display mixes A^{-1} on both
/// sides, a symmetrized copy and a PSD flag are reported alongside.
struct CovariancePrediction {
  PredictedAlgorithm algorithm;
  Mat sigma_star;
  Mat sigma22;
  Mat sigma11;
  Mat sigma11_symmetrized;
  bool sigma11_psd = false;
};

namespace detail {
inline bool is_psd(const Mat& m, double tol = 1e-9) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
  return es.info() == Eigen::Success &&
         es.eigenvalues().minCoeff() > -tol * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff());
}
}  // namespace detail

/// PolSA (zeta = 1) limits: Sigma^11 = Sigma* and Sigma^22 solving
/// X = (I+A) X (I+A)^T + Sigma^Delta.
inline CovariancePrediction predict_polsa(const Mat& a, const Mat& sigma_delta) {
  const StabilityReport stab = check_stability(a, 1.0);
  if (!stab.overall) {
    throw std::runtime_error("predict_polsa: stability condition fails for zeta = 1");
  }
  CovariancePrediction out;
  out.algorithm = PredictedAlgorithm::kPolsa;
  const Mat a_inv = a.fullPivLu().inverse();
  out.sigma_star = a_inv * sigma_delta * a_inv.transpose();
  const Mat m = Mat::Identity(a.rows(), a.cols()) + a;
  out.sigma22 = linalg::solve_discrete_lyapunov(m, sigma_delta);
  out.sigma11 = out.sigma_star;
  out.sigma11_symmetrized = out.sigma_star;
  out.sigma11_psd = detail::is_psd(out.sigma11);
  return out;
}

/// Dense d^2 solves are capped here; larger models fall back to Neumann
/// iteration on the operator. Memory: the dense system is d^2 x d^2.
inline constexpr Eigen::Index kNesaDenseCap = 64;

/// NeSA limits: Sigma^22 solving (I - L) vec(X) = vec(Sigma^Delta) and
/// Sigma^11 = -Sigma^22 - A^{-1} Sigma^22 - Sigma^22 A^{-1}.
inline CovariancePrediction predict_nesa(const Mat& l_operator, const Mat& a,
                                         const Mat& sigma_delta,
                                         double neumann_tol = 1e-10) {
  const Eigen::Index d = a.rows();
  if (l_operator.rows() != d * d || l_operator.cols() != d * d) {
    throw std::invalid_argument("predict_nesa: l_operator must be d^2 x d^2");
  }
  const double rho = linalg::spectral_radius(l_operator);
  if (rho >= 1.0) {
    throw std::runtime_error("predict_nesa: spectral radius of L is " +
                             std::to_string(rho) + " >= 1");
  }
  CovariancePrediction out;
  out.algorithm = PredictedAlgorithm::kNesa;
  const Mat a_inv = a.fullPivLu().inverse();
  out.sigma_star = a_inv * sigma_delta * a_inv.transpose();
  const Vec q = linalg::vectorize(sigma_delta);
  Vec x;
  if (d <= kNesaDenseCap) {
    const Mat system = Mat::Identity(d * d, d * d) - l_operator;
    x = system.partialPivLu().solve(q);
  } else {
    // Neumann series sum_k L^k vec(Sigma^Delta).
    x = q;
    Vec term = q;
    const double qn = q.norm();
    for (int k = 0; k < 100000; ++k) {
      term = l_operator * term;
      x += term;
      if (term.norm() <= neumann_tol * (qn > 0 ? qn : 1.0)) break;
    }
  }
  Mat s22 = linalg::unvectorize(x, d, d);
  out.sigma22 = 0.5 * (s22 + s22.transpose());
  out.sigma11 = -out.sigma22 - a_inv * out.sigma22 - out.sigma22 * a_inv;
  out.sigma11_symmetrized = 0.5 * (out.sigma11 + out.sigma11.transpose());
  out.sigma11_psd = detail::is_psd(out.sigma11);
  return out;
}

}  // namespace polsa
