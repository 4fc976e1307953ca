#pragma once

// Quantum (regression-theorem resolvent) and classical (coupled-oscillator)
// emission spectra, the classical response functions behind them, and
// peak / comparison analytics. Frequencies are in units of omega_0.

#include <array>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "usc/gme.hpp"
#include "usc/operator_kit.hpp"

namespace usc {

enum class Normalization { Raw, UnitMax };

using Provenance = std::map<std::string, std::string>;

struct Spectrum {
  std::vector<double> omega;
  std::vector<double> intensity;
  Normalization normalization = Normalization::Raw;
  Provenance provenance;

  std::size_t size() const { return omega.size(); }
};

/// Evenly spaced grid with `points` samples on [lo, hi].
std::vector<double> make_grid(double lo, double hi, int points);

/// Throws ContractError unless the grid is non-empty and strictly ascending.
void validate_grid(const std::vector<double>& grid);

/// Copy scaled to unit maximum. Throws NumericalError for a spectrum whose
/// maximum is not positive.
Spectrum unit_max(const Spectrum& s);

/// Optional microscopic parameters. eps_0 defaults to 1 (dimensionless units).
struct Microscopic {
  double dipole = 1.0;
  double mode_volume = 1.0;
  double eps_b = 1.0;
  double eps_0 = 1.0;

  double a0() const { return 2.0 * dipole * dipole / eps_0; }  // bare polarizability amplitude
  double ac() const { return 1.0 / (mode_volume * eps_b); }    // cavity Green-function amplitude
};

struct ClassicalParams {
  double omega_c = 1.0;
  double omega_0 = 1.0;
  double g = 0.0;
  double kappa = 0.0;
  std::optional<Microscopic> micro;

  double a0() const { return micro ? micro->a0() : 1.0; }
  double ac() const { return micro ? micro->ac() : 1.0; }

  /// Throws ContractError when the microscopic block violates
  /// 4 g^2 = d^2 omega_c / (2 eps_0 V_eff eps_b) beyond 1e-10 relative.
  void validate() const;

  /// Derives g from the microscopic block.
  static ClassicalParams from_microscopic(double omega_c, double omega_0, double kappa, const Microscopic& m);
};

/// Single-mode cavity Green function A_c w^2 / (w_c^2 - w^2 - i w kappa).
/// kappa = 0 gives the lossless form, which throws PoleError at w = w_c.
Complex cavity_green(double omega, const ClassicalParams& cp);

/// Complex roots of w_c^2 - w^2 - i w kappa. With the exp(-i w t) time
/// convention used here they sit in the lower half plane (retarded).
std::array<Complex, 2> cavity_green_poles(const ClassicalParams& cp);

/// Cavity-dressed oscillator polarizability
/// A_0 w_0 / (w_0^2 - w^2 - (w_0 / w_c) 4 g^2 w^2 / (w_c^2 - w^2 - i w kappa)).
Complex dressed_polarizability(double omega, const ClassicalParams& cp);

/// |g^2 w^2 / ((w^2 - w_c^2 - i w kappa)(w^2 - w_0^2) - 4 g^2 w^2)|^2 with F E_0^2 = 1.
Spectrum classical_spectrum(const std::vector<double>& grid, const ClassicalParams& cp);

/// Stationary cavity emission S(w) = Re Tr[X^+ (-(L + i w))^{-1} (rho X^- - <X^-> rho)].
/// Raw normalization; small negative values are clamped to zero, larger
/// ones (below -1e-8 max) throw NumericalError.
Spectrum emission_spectrum(const Liouvillian& l, const TransitionSet& t, const ComplexMatrix& rho,
                           const std::vector<double>& grid);

struct Peak {
  double omega;
  double height;
  double halfwidth;  // half width at half prominence
  double prominence;
};

/// Local maxima with prominence >= prominence_frac * global max, positions
/// refined by parabolic interpolation. Requires UnitMax normalization.
std::vector<Peak> find_peaks(const Spectrum& s, double prominence_frac = 0.05);

struct SpectrumComparison {
  double linf = 0.0;
  double peak_shift_max = std::numeric_limits<double>::infinity();
  int peak_count_a = 0;
  int peak_count_b = 0;
};

/// L-infinity distance and the largest displacement between each peak and
/// its nearest counterpart. Both inputs must be UnitMax on identical grids.
SpectrumComparison compare_spectra(const Spectrum& a, const Spectrum& b, double prominence_frac = 0.05);

}  // namespace usc
