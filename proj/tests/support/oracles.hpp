#pragma once

// Independent reference computations. Nothing here calls into the library's
// numerics, so agreement with it is evidence rather than tautology.

#include "dispmon/recon.hpp"

#include <boost/multiprecision/cpp_dec_float.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace oracle {

// 46.81 * n^-1.95 in 50 significant digits.
inline double lambda_hp(std::size_t n) {
  using big = boost::multiprecision::cpp_dec_float_50;
  const big coeff("46.81");
  const big expo("-1.95");
  return static_cast<double>(coeff * boost::multiprecision::pow(big(n), expo));
}

// Built element by element from the stencil definition.
inline Eigen::MatrixXd stencil(std::size_t n) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n - 2), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i + 2 < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    d(r, r) = 1.0;
    d(r, r + 1) = -2.0;
    d(r, r + 2) = 1.0;
  }
  return d;
}

// numpy.hanning(n - 2)
inline Eigen::VectorXd hann_interior(std::size_t n) {
  const std::size_t m = n - 2;
  Eigen::VectorXd w(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    w(static_cast<Eigen::Index>(i)) =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(m - 1));
  }
  return w;
}

// Right-hand side of the defining system: Lw^T W S, with S picking the
// interior sample each stencil row is centred on.
inline Eigen::MatrixXd defining_rhs(const Eigen::MatrixXd& lw, const Eigen::VectorXd& w) {
  const auto m = lw.rows();
  const auto n = lw.cols();
  Eigen::MatrixXd ws = Eigen::MatrixXd::Zero(m, n);
  for (Eigen::Index i = 0; i < m; ++i) ws(i, i + 1) = w(i);
  return lw.transpose() * ws;
}

// ||(Lw^T Lw + lambda^2 I) C - Lw^T W S||_F / ||Lw^T W S||_F
inline double defining_residual(const Eigen::MatrixXd& c, const Eigen::VectorXd& w, double lambda) {
  const Eigen::MatrixXd lw = w.asDiagonal() * stencil(static_cast<std::size_t>(c.rows()));
  const Eigen::MatrixXd rhs = defining_rhs(lw, w);
  Eigen::MatrixXd a = lw.transpose() * lw;
  a.diagonal().array() += lambda * lambda;
  return (a * c - rhs).norm() / rhs.norm();
}

// Trapezoid double integration from exact initial displacement and velocity.
inline std::vector<double> double_integrate(const std::vector<double>& a, double dt, double d0, double v0) {
  std::vector<double> d(a.size());
  double v = v0;
  double x = d0;
  if (!a.empty()) d[0] = x;
  for (std::size_t i = 1; i < a.size(); ++i) {
    const double v_next = v + 0.5 * dt * (a[i - 1] + a[i]);
    x += 0.5 * dt * (v + v_next);
    v = v_next;
    d[i] = x;
  }
  return d;
}

// Plain O(n^2) one-sided periodogram |X_k|^2, k = 0..n/2.
inline std::vector<double> periodogram(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> p(n / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * i % n) / static_cast<double>(n);
      acc += x[i] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    p[k] = std::norm(acc);
  }
  return p;
}

inline double rms_pct(const std::vector<double>& est, const std::vector<double>& ref, std::size_t lo, std::size_t hi) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    num += (est[i] - ref[i]) * (est[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  return 100.0 * std::sqrt(num / den);
}

class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("dispmon-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

}  // namespace oracle
