#pragma once

#include <Eigen/Dense>
#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>

namespace polsa::linalg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

/// Dense routines below are sized for tabular RL problems; d beyond this is
/// rejected rather than silently taking forever.
inline constexpr Eigen::Index kMaxDim = 512;

inline void require_square(const Mat& m, const char* who) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << who << ": matrix must be square, got " << m.rows() << "x" << m.cols();
    throw std::invalid_argument(os.str());
  }
  if (m.rows() > kMaxDim) {
    std::ostringstream os;
    os << who << ": dimension " << m.rows() << " exceeds cap " << kMaxDim;
    throw std::invalid_argument(os.str());
  }
}

/// All eigenvalues of a square real matrix, with multiplicity.
inline CVec eigenvalues(const Mat& m) {
  require_square(m, "eigenvalues");
  if (m.rows() == 0) return CVec(0);
  Eigen::EigenSolver<Mat> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigenvalues: QR iteration failed to converge");
  }
  return solver.eigenvalues();
}

inline double spectral_radius(const Mat& m) {
  return eigenvalues(m).cwiseAbs().maxCoeff();
}

/// Moore-Penrose pseudo-inverse. Singular values below `tol` are treated as
/// zero; tol < 0 selects the default 1e-10 * sigma_max.
inline Mat pseudo_inverse(const Mat& m, double tol = -1.0) {
  if (m.size() == 0) return m.transpose();
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  if (tol < 0.0) tol = 1e-10 * smax;
  Vec inv = Vec::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Minimum-norm least-squares solution m^+ * v without forming the
/// pseudo-inverse. Hot path for SNR steppers; agrees with pseudo_inverse up to
/// the rank decision at the threshold.
inline Vec pinv_apply(const Mat& m, const Vec& v, double tol = -1.0) {
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(m);
  if (tol >= 0.0 && m.size() > 0) {
    const double scale = m.cwiseAbs().maxCoeff();
    if (scale > 0.0) {
      cod = Eigen::CompleteOrthogonalDecomposition<Mat>();
      cod.setThreshold(tol / scale);
      cod.compute(m);
    }
  }
  return cod.solve(v);
}

/// Kronecker product: entry (i*rows_b + k, j*cols_b + l) = a(i,j) * b(k,l).
inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Column-major stacking, matching the kron identity vec(AXB^T) = (B kron A) vec(X).
inline Vec vectorize(const Mat& m) {
  return Eigen::Map<const Vec>(m.data(), m.size());
}

inline Mat unvectorize(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) {
    throw std::invalid_argument("unvectorize: size mismatch");
  }
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

/// Solves X = f X f^T + q by vectorization: (I - f kron f) vec(X) = vec(q).
/// Requires spectral radius of f strictly below one; q symmetric. The solution
/// is symmetrized to remove round-off asymmetry.
inline Mat solve_discrete_lyapunov(const Mat& f, const Mat& q) {
  require_square(f, "solve_discrete_lyapunov");
  if (q.rows() != f.rows() || q.cols() != f.cols()) {
    throw std::invalid_argument("solve_discrete_lyapunov: q must match f in shape");
  }
  const CVec eigs = eigenvalues(f);
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    if (std::abs(eigs(i)) >= 1.0) {
      std::ostringstream os;
      os << "solve_discrete_lyapunov: unstable eigenvalue " << eigs(i).real()
         << (eigs(i).imag() >= 0 ? "+" : "") << eigs(i).imag() << "i (|.| = "
         << std::abs(eigs(i)) << " >= 1)";
      throw std::runtime_error(os.str());
    }
  }
  const Eigen::Index d = f.rows();
  const Mat system = Mat::Identity(d * d, d * d) - kron(f, f);
  const Vec x = system.partialPivLu().solve(vectorize(q));
  Mat sol = unvectorize(x, d, d);
  return 0.5 * (sol + sol.transpose());
}

}  // namespace polsa::linalg
