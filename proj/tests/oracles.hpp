#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library's numerical routines.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

inline constexpr double kPi = std::numbers::pi;

struct GalerkinPair {
  double value;
  int winding;
};

/// Spectrum of -J d/dt - S(t) on 2-vector loops of period T in the complex
/// Fourier basis e^{i w k t}, |k| <= K, with S given pointwise. Windings are
/// read from the real eigenfunctions sampled on a fine grid.
inline std::vector<GalerkinPair> galerkin_spectrum(
    const std::function<Eigen::Matrix2d(double)>& s, double period, int K, int window) {
  using C = std::complex<double>;
  const int m = 2 * K + 1;
  const int quad = 8 * m;
  const double w0 = 2.0 * kPi / period;
  std::vector<Eigen::Matrix2d> samples(quad);
  for (int q = 0; q < quad; ++q) samples[q] = s(period * q / quad);
  // Fourier coefficients S^(j) for |j| <= 2K
  std::vector<Eigen::Matrix2cd> coef(4 * K + 1);
  for (int j = -2 * K; j <= 2 * K; ++j) {
    Eigen::Matrix2cd acc = Eigen::Matrix2cd::Zero();
    for (int q = 0; q < quad; ++q) {
      const double t = period * q / quad;
      acc += samples[q].cast<C>() * std::exp(C(0.0, -w0 * j * t));
    }
    coef[j + 2 * K] = acc / static_cast<double>(quad);
  }
  Eigen::Matrix2d j2;
  j2 << 0, -1, 1, 0;
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(2 * m, 2 * m);
  for (int k = -K; k <= K; ++k) {
    for (int l = -K; l <= K; ++l) {
      Eigen::Matrix2cd block = -coef[(k - l) + 2 * K];
      if (k == l) block += -j2.cast<C>() * C(0.0, w0 * l);
      a.block<2, 2>(2 * (k + K), 2 * (l + K)) = block;
    }
  }
  a = 0.5 * (a + a.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a);
  std::vector<int> idx(2 * m);
  for (int i = 0; i < 2 * m; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int x, int y) {
    return std::abs(es.eigenvalues()(x)) < std::abs(es.eigenvalues()(y));
  });
  idx.resize(window);
  std::sort(idx.begin(), idx.end(),
            [&](int x, int y) { return es.eigenvalues()(x) < es.eigenvalues()(y); });
  std::vector<GalerkinPair> out;
  const int fine = 16 * m;
  for (int i : idx) {
    const Eigen::VectorXcd v = es.eigenvectors().col(i);
    std::vector<Eigen::Vector2cd> f(fine);
    double re_norm = 0.0, im_norm = 0.0;
    for (int p = 0; p < fine; ++p) {
      const double t = period * p / fine;
      Eigen::Vector2cd acc = Eigen::Vector2cd::Zero();
      for (int k = -K; k <= K; ++k)
        acc += v.segment<2>(2 * (k + K)) * std::exp(C(0.0, w0 * k * t));
      f[p] = acc;
      re_norm += acc.real().squaredNorm();
      im_norm += acc.imag().squaredNorm();
    }
    double total = 0.0;
    for (int p = 0; p < fine; ++p) {
      const bool use_re = re_norm >= im_norm;
      const Eigen::Vector2cd& g0 = f[p];
      const Eigen::Vector2cd& g1 = f[(p + 1) % fine];
      const Eigen::Vector2d a0 = use_re ? Eigen::Vector2d(g0.real()) : Eigen::Vector2d(g0.imag());
      const Eigen::Vector2d a1 = use_re ? Eigen::Vector2d(g1.real()) : Eigen::Vector2d(g1.imag());
      total += std::atan2(a0(0) * a1(1) - a0(1) * a1(0), a0.dot(a1));
    }
    out.push_back({es.eigenvalues()(i), static_cast<int>(std::lround(total / (2 * kPi)))});
  }
  return out;
}

inline int cz_from(const std::vector<GalerkinPair>& spec) {
  const GalerkinPair* neg = nullptr;
  const GalerkinPair* pos = nullptr;
  for (const auto& p : spec) {
    if (p.value < 0) {
      if (!neg || p.value > neg->value) neg = &p;
    } else if (!pos || p.value < pos->value) {
      pos = &p;
    }
  }
  return neg->winding + pos->winding;
}

/// Symmetric S(t) = -J G(t) of the linear elliptic and hyperbolic models.
inline Eigen::Matrix2d linear_s(bool elliptic, double theta, int k, double a, double period,
                                double t) {
  Eigen::Matrix2d j2;
  j2 << 0, -1, 1, 0;
  Eigen::Matrix2d g;
  if (elliptic) {
    g = (2 * kPi * theta / period) * j2;
  } else {
    const double w = 2 * kPi * k / period;
    const double c = std::cos(w * t), s = std::sin(w * t);
    Eigen::Matrix2d r;
    r << c, -s, s, c;
    Eigen::Matrix2d d = Eigen::Matrix2d::Zero();
    d(0, 0) = -a;
    d(1, 1) = a;
    g = w * j2 + r * d * r.transpose();
  }
  const Eigen::Matrix2d sm = -j2 * g;
  return 0.5 * (sm + sm.transpose());
}

/// Direct midpoint discretisation of the Gauss double integral.
inline double gauss_integral(const std::vector<Eigen::Vector3d>& a,
                             const std::vector<Eigen::Vector3d>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Eigen::Vector3d da = a[(i + 1) % a.size()] - a[i];
    const Eigen::Vector3d ma = 0.5 * (a[(i + 1) % a.size()] + a[i]);
    for (std::size_t j = 0; j < b.size(); ++j) {
      const Eigen::Vector3d db = b[(j + 1) % b.size()] - b[j];
      const Eigen::Vector3d mb = 0.5 * (b[(j + 1) % b.size()] + b[j]);
      const Eigen::Vector3d r = ma - mb;
      acc += r.dot(da.cross(db)) / std::pow(r.norm(), 3);
    }
  }
  return acc / (4 * kPi);
}

}  // namespace oracle
