#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "cbem/em.hpp"
#include "cbem/errors.hpp"

namespace cbem {

/// Series solution for scattering of a plane wave by a homogeneous sphere
/// (log-derivative algorithm). Outgoing waves use the spherical Hankel
/// function of the second kind, consistent with the e^{+j omega t} convention
/// used everywhere else; magnitudes agree with the usual tabulations.
struct MieSeries {
  std::vector<cplx> a, b;  // a[n-1], b[n-1] for n = 1..nstop
  double x = 0.0;          // size parameter k_ext * radius
  double k_ext = 0.0;
};

inline MieSeries mie_series(double radius, cplx eps_r, cplx mu_r,
                            double k_ext) {
  if (!(radius > 0.0) || !(k_ext > 0.0))
    throw InvalidParam("mie_series: radius and k_ext must be positive");
  if (!(eps_r.real() > 0.0) || !(mu_r.real() > 0.0))
    throw InvalidParam("mie_series: need Re(eps_r) > 0 and Re(mu_r) > 0");

  MieSeries s;
  s.k_ext = k_ext;
  s.x = k_ext * radius;
  const double x = s.x;
  const cplx m = std::sqrt(eps_r * mu_r);
  const cplx mx = m * x;

  const int nstop = static_cast<int>(std::lround(x + 4.0 * std::cbrt(x) + 2.0));
  const int nmx = std::max(nstop, static_cast<int>(std::ceil(std::abs(mx)))) + 16;
  if (nstop < 1 || nmx > 100000)
    throw NonConvergentSeries("mie_series: series length out of range");

  // log-derivative D_n(mx) by downward recurrence
  std::vector<cplx> D(nmx + 1, cplx(0.0));
  for (int n = nmx; n >= 1; --n) {
    cplx nn = cplx(n) / mx;
    D[n - 1] = nn - 1.0 / (D[n] + nn);
  }

  // Riccati-Bessel psi_n(x), chi_n(x) by upward recurrence
  double psi_m1 = std::cos(x), psi_0 = std::sin(x);
  double chi_m1 = -std::sin(x), chi_0 = std::cos(x);
  cplx xi_m1(psi_m1, chi_m1), xi_0(psi_0, chi_0);  // xi = psi + j chi

  s.a.resize(nstop);
  s.b.resize(nstop);
  for (int n = 1; n <= nstop; ++n) {
    double psi_n = (2.0 * n - 1.0) / x * psi_0 - psi_m1;
    double chi_n = (2.0 * n - 1.0) / x * chi_0 - chi_m1;
    cplx xi_n(psi_n, chi_n);

    cplx fa = mu_r * D[n] / m + cplx(n) / x;
    cplx fb = m * D[n] / mu_r + cplx(n) / x;
    s.a[n - 1] = (fa * psi_n - psi_0) / (fa * xi_n - xi_0);
    s.b[n - 1] = (fb * psi_n - psi_0) / (fb * xi_n - xi_0);

    psi_m1 = psi_0;
    psi_0 = psi_n;
    chi_m1 = chi_0;
    chi_0 = chi_n;
    xi_m1 = xi_0;
    xi_0 = xi_n;
  }
  return s;
}

/// Scattering amplitudes S1, S2 at scattering angle theta measured from the
/// forward (propagation) direction.
inline std::pair<cplx, cplx> mie_amplitudes(const MieSeries& s, double theta) {
  const double mu = std::cos(theta);
  const int nmax = static_cast<int>(s.a.size());
  cplx s1 = 0.0, s2 = 0.0;
  double pi_prev = 0.0, pi_n = 1.0;  // pi_0, pi_1
  for (int n = 1; n <= nmax; ++n) {
    double tau_n = n * mu * pi_n - (n + 1) * pi_prev;
    double f = (2.0 * n + 1.0) / (n * (n + 1.0));
    s1 += f * (s.a[n - 1] * pi_n + s.b[n - 1] * tau_n);
    s2 += f * (s.a[n - 1] * tau_n + s.b[n - 1] * pi_n);
    double pi_next = ((2.0 * n + 1.0) * mu * pi_n - (n + 1.0) * pi_prev) / n;
    pi_prev = pi_n;
    pi_n = pi_next;
  }
  return {s1, s2};
}

/// Bistatic radar cross section (absolute area, lengths in exterior
/// wavelengths when k_ext = 2 pi). pol 0: incident E in the scattering plane
/// (uses S2); pol 1: incident E perpendicular to it (uses S1).
inline double mie_bistatic_rcs(const MieSeries& s, double theta, int pol) {
  auto [s1, s2] = mie_amplitudes(s, theta);
  cplx amp = (pol == 0) ? s2 : s1;
  return 4.0 * std::numbers::pi / (s.k_ext * s.k_ext) * std::norm(amp);
}

/// Monostatic (backscatter) radar cross section.
inline double mie_backscatter_rcs(const MieSeries& s) {
  cplx sum = 0.0;
  double sign = -1.0;
  for (std::size_t i = 0; i < s.a.size(); ++i) {
    double n = static_cast<double>(i + 1);
    sum += sign * (2.0 * n + 1.0) * (s.a[i] - s.b[i]);
    sign = -sign;
  }
  return std::numbers::pi / (s.k_ext * s.k_ext) * std::norm(sum);
}

}  // namespace cbem
