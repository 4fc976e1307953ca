#include "usc/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "usc/log.hpp"

namespace usc {

std::vector<double> make_grid(double lo, double hi, int points) {
  if (points < 2 || !(hi > lo)) throw ContractError("make_grid: need points >= 2 and hi > lo");
  std::vector<double> g(points);
  const double step = (hi - lo) / (points - 1);
  for (int i = 0; i < points; ++i) g[i] = lo + step * i;
  g.back() = hi;
  return g;
}

void validate_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw ContractError("frequency grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ContractError("frequency grid must be strictly ascending");
  }
}

Spectrum unit_max(const Spectrum& s) {
  const auto it = std::max_element(s.intensity.begin(), s.intensity.end());
  if (it == s.intensity.end() || !(*it > 0.0)) throw NumericalError("unit_max: spectrum has no positive value");
  Spectrum out = s;
  const double peak = *it;
  for (double& v : out.intensity) v /= peak;
  out.normalization = Normalization::UnitMax;
  return out;
}

void ClassicalParams::validate() const {
  if (!(omega_c > 0.0) || !(omega_0 > 0.0)) throw ContractError("classical: frequencies must be positive");
  if (!(g >= 0.0) || !(kappa >= 0.0)) throw ContractError("classical: g and kappa must be non-negative");
  if (micro) {
    const double lhs = 4.0 * g * g;
    const double rhs = micro->dipole * micro->dipole * omega_c / (2.0 * micro->eps_0 * micro->mode_volume * micro->eps_b);
    if (std::abs(lhs - rhs) > 1e-10 * std::max(std::abs(lhs), std::abs(rhs))) {
      std::ostringstream msg;
      msg << "classical: coupling g = " << g << " is inconsistent with the microscopic block (4g^2 = " << lhs
          << " vs " << rhs << ")";
      throw ContractError(msg.str());
    }
  }
}

ClassicalParams ClassicalParams::from_microscopic(double omega_c, double omega_0, double kappa, const Microscopic& m) {
  ClassicalParams cp;
  cp.omega_c = omega_c;
  cp.omega_0 = omega_0;
  cp.kappa = kappa;
  cp.g = std::sqrt(m.dipole * m.dipole * omega_c / (8.0 * m.eps_0 * m.mode_volume * m.eps_b));
  cp.micro = m;
  return cp;
}

namespace {

Complex lossy_cavity_denominator(double omega, const ClassicalParams& cp) {
  return Complex(cp.omega_c * cp.omega_c - omega * omega, -omega * cp.kappa);
}

}  // namespace

Complex cavity_green(double omega, const ClassicalParams& cp) {
  if (!(omega >= 0.0)) throw ContractError("cavity_green: omega must be non-negative");
  const Complex den = lossy_cavity_denominator(omega, cp);
  if (den == Complex(0.0)) throw PoleError("cavity_green: lossless Green function evaluated on its pole omega_c");
  return cp.ac() * omega * omega / den;
}

std::array<Complex, 2> cavity_green_poles(const ClassicalParams& cp) {
  // w^2 + i kappa w - w_c^2 = 0
  const Complex b(0.0, cp.kappa);
  const Complex root = std::sqrt(b * b + 4.0 * cp.omega_c * cp.omega_c);
  return {(-b - root) / 2.0, (-b + root) / 2.0};
}

Complex dressed_polarizability(double omega, const ClassicalParams& cp) {
  if (!(omega >= 0.0)) throw ContractError("dressed_polarizability: omega must be non-negative");
  const double w2 = omega * omega;
  Complex den = cp.omega_0 * cp.omega_0 - w2;
  if (cp.g != 0.0) {
    const Complex cav = lossy_cavity_denominator(omega, cp);
    if (cav == Complex(0.0)) return 0.0;  // cavity pole: the self-energy diverges and alpha -> 0
    den -= (cp.omega_0 / cp.omega_c) * 4.0 * cp.g * cp.g * w2 / cav;
  }
  if (std::abs(den) <= 1e-14 * std::max(1.0, cp.omega_0 * cp.omega_0)) {
    std::ostringstream msg;
    msg << "dressed_polarizability: evaluated on a lossless pole at omega = " << omega;
    throw PoleError(msg.str());
  }
  return cp.a0() * cp.omega_0 / den;
}

Spectrum classical_spectrum(const std::vector<double>& grid, const ClassicalParams& cp) {
  validate_grid(grid);
  cp.validate();
  if (!(cp.kappa > 0.0)) throw ContractError("classical_spectrum: kappa must be positive");
  Spectrum s;
  s.omega = grid;
  s.intensity.resize(grid.size());
  const double g2 = cp.g * cp.g;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w = grid[i];
    const double w2 = w * w;
    const Complex den =
        Complex(w2 - cp.omega_c * cp.omega_c, -w * cp.kappa) * (w2 - cp.omega_0 * cp.omega_0) - 4.0 * g2 * w2;
    s.intensity[i] = std::norm(g2 * w2 / den);
  }
  return s;
}

Spectrum emission_spectrum(const Liouvillian& l, const TransitionSet& t, const ComplexMatrix& rho,
                           const std::vector<double>& grid) {
  validate_grid(grid);
  if (l.dim != t.dim || rho.rows() != t.dim) throw DimensionError("emission_spectrum: dressed dimensions differ");

  const ComplexMatrix x_minus = t.x_minus();
  const Complex mean = (rho * x_minus).trace();
  // Remove the stationary component so the resolvent never sees the kernel.
  const ComplexMatrix initial = rho * x_minus - mean * rho;
  if (std::abs(initial.trace()) > 1e-10 * std::max(1.0, max_abs(initial))) {
    throw NumericalError("emission_spectrum: kernel deflation failed (steady state is not trace normalized)");
  }

  // Tr[X^+ Y] = vec(X^+^T) . vec(Y)
  const ShiftedSolver solver(l.matrix);
  const auto proj = solver.project(vectorize(t.x_plus.transpose()), vectorize(initial));

  Spectrum s;
  s.omega = grid;
  std::vector<Complex> shifts;
  shifts.reserve(grid.size());
  for (double w : grid) shifts.emplace_back(0.0, w);
  std::vector<Complex> values;
  try {
    values = solver.bilinear(shifts, proj);
  } catch (const SolverError& e) {
    throw SolverError(std::string("emission_spectrum: resolvent solve failed (an undamped mode on the grid?): ") +
                          e.what(),
                      e.rcond());
  }
  s.intensity.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) s.intensity[i] = -values[i].real();

  const double peak = *std::max_element(s.intensity.begin(), s.intensity.end());
  const double low = *std::min_element(s.intensity.begin(), s.intensity.end());
  if (peak > 0.0 && low < -1e-8 * peak) {
    std::ostringstream msg;
    msg << "emission_spectrum: negative intensity " << low << " exceeds 1e-8 of the maximum " << peak;
    throw NumericalError(msg.str());
  }
  int clamped = 0;
  for (double& v : s.intensity) {
    if (v < 0.0) {
      v = 0.0;
      ++clamped;
    }
  }
  if (peak > 0.0 && low < -1e-10 * peak) {
    std::ostringstream msg;
    msg << "emission_spectrum: clamped " << clamped << " negative samples (min " << low / peak << " of max)";
    warn(msg.str());
  }
  s.provenance["clamped_points"] = std::to_string(clamped);
  return s;
}

namespace {

// Linear interpolation of the abscissa where y crosses `level` between samples i and j.
double crossing(const Spectrum& s, std::size_t i, std::size_t j, double level) {
  const double yi = s.intensity[i];
  const double yj = s.intensity[j];
  if (yi == yj) return s.omega[i];
  return s.omega[i] + (level - yi) * (s.omega[j] - s.omega[i]) / (yj - yi);
}

}  // namespace

std::vector<Peak> find_peaks(const Spectrum& s, double prominence_frac) {
  if (s.normalization != Normalization::UnitMax) throw ContractError("find_peaks: spectrum must be UnitMax");
  const std::size_t n = s.size();
  std::vector<Peak> peaks;
  if (n < 3) return peaks;
  const double gmax = *std::max_element(s.intensity.begin(), s.intensity.end());
  const auto& y = s.intensity;

  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;

    // Walk outward until a higher sample (or the edge); the lowest point on
    // each side is that side's base.
    double left_min = y[i];
    std::size_t l = i;
    while (l > 0 && y[l - 1] <= y[i]) {
      --l;
      left_min = std::min(left_min, y[l]);
    }
    double right_min = y[i];
    std::size_t r = i;
    while (r + 1 < n && y[r + 1] <= y[i]) {
      ++r;
      right_min = std::min(right_min, y[r]);
    }
    const double prominence = y[i] - std::max(left_min, right_min);
    if (prominence < prominence_frac * gmax || prominence <= 0.0) continue;

    const double level = y[i] - 0.5 * prominence;
    std::size_t a = i;
    while (a > 0 && y[a - 1] > level) --a;
    const double left_x = a > 0 ? crossing(s, a - 1, a, level) : s.omega.front();
    std::size_t b = i;
    while (b + 1 < n && y[b + 1] > level) ++b;
    const double right_x = b + 1 < n ? crossing(s, b, b + 1, level) : s.omega.back();

    // Parabolic vertex through the three samples around the maximum.
    double x_peak = s.omega[i];
    double y_peak = y[i];
    const double x0 = s.omega[i - 1], x1 = s.omega[i], x2 = s.omega[i + 1];
    const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
    const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    if (denom != 0.0) {
      const double ca = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
      const double cb = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
      const double cc = (x1 * x2 * (x1 - x2) * y0 + x2 * x0 * (x2 - x0) * y1 + x0 * x1 * (x0 - x1) * y2) / denom;
      if (ca < 0.0) {
        const double xv = -cb / (2.0 * ca);
        if (xv >= x0 && xv <= x2) {
          x_peak = xv;
          y_peak = ca * xv * xv + cb * xv + cc;
        }
      }
    }
    peaks.push_back(Peak{x_peak, y_peak, 0.5 * (right_x - left_x), prominence});
  }
  return peaks;
}

SpectrumComparison compare_spectra(const Spectrum& a, const Spectrum& b, double prominence_frac) {
  if (a.normalization != Normalization::UnitMax || b.normalization != Normalization::UnitMax) {
    throw ContractError("compare_spectra: both spectra must be UnitMax");
  }
  if (a.size() != b.size()) throw ContractError("compare_spectra: grid mismatch (different lengths)");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a.omega[i] - b.omega[i]) > 1e-12 * std::max(1.0, std::abs(a.omega[i]))) {
      throw ContractError("compare_spectra: grid mismatch");
    }
  }
  SpectrumComparison c;
  for (std::size_t i = 0; i < a.size(); ++i) c.linf = std::max(c.linf, std::abs(a.intensity[i] - b.intensity[i]));

  const auto pa = find_peaks(a, prominence_frac);
  const auto pb = find_peaks(b, prominence_frac);
  c.peak_count_a = static_cast<int>(pa.size());
  c.peak_count_b = static_cast<int>(pb.size());
  if (pa.empty() || pb.empty()) return c;

  const auto nearest = [](const Peak& p, const std::vector<Peak>& others) {
    double best = std::numeric_limits<double>::infinity();
    for (const Peak& o : others) best = std::min(best, std::abs(o.omega - p.omega));
    return best;
  };
  c.peak_shift_max = 0.0;
  for (const Peak& p : pa) c.peak_shift_max = std::max(c.peak_shift_max, nearest(p, pb));
  for (const Peak& p : pb) c.peak_shift_max = std::max(c.peak_shift_max, nearest(p, pa));
  return c;
}

}  // namespace usc
