#pragma once

// System Hamiltonians (Hopfield and quantum Rabi, dipole and Coulomb gauge),
// gauge-corrected cavity operators, and closed-form polariton frequencies.
// All frequencies are in units of the dipole frequency omega_0.

#include <string>
#include <vector>

#include "usc/operator_kit.hpp"

namespace usc {

enum class ModelKind { Hopfield, Rabi };
enum class Gauge { Dipole, Coulomb };

std::string to_string(ModelKind m);
std::string to_string(Gauge g);

struct ModelParams {
  double omega_c = 1.0;
  double omega_0 = 1.0;
  double eta = 0.0;  // normalized coupling g / omega_c
  ModelKind model = ModelKind::Hopfield;
  Gauge gauge = Gauge::Dipole;
  bool diamagnetic = true;  // Hopfield only
  HilbertSpace space = HilbertSpace::boson(15, 15);

  double coupling() const { return eta * omega_c; }
  /// D = eta * g for the Hopfield model with the diamagnetic term, else 0.
  double diamagnetic_amplitude() const;
  /// Throws ContractError on inconsistent fields.
  void validate() const;
};

struct PolePair {
  double omega_minus = 0.0;
  double omega_plus = 0.0;
};

/// No-diamagnetic poles; the lower pole is imaginary for eta >= 1/2.
struct FlaggedPolePair {
  PolePair poles;
  bool lower_pole_valid = true;
};

/// Stored Hamiltonians keep all c-number offsets; compare excitation
/// energies relative to the ground state.
ComplexMatrix build_hamiltonian(const ModelParams& p);

/// Matter quadrature sigma_x = b + b^dag (Hopfield) or sigma^+ + sigma^- (Rabi), embedded.
ComplexMatrix matter_quadrature(const ModelParams& p);

/// Cavity operators with and without the truncation gauge correction
/// a' = a + i eta sigma_x. P = i(a^dag - a), Q = a + a^dag.
struct CavityOperators {
  ComplexMatrix a;
  ComplexMatrix a_prime;
  ComplexMatrix p;
  ComplexMatrix q;
  ComplexMatrix p_prime;
  ComplexMatrix q_prime;
};

CavityOperators gauge_corrected_cavity_op(const ModelParams& p);

/// Lossless polariton frequencies for arbitrary detuning, from the
/// Bogoliubov-renormalized dipole frequency omega~_0^2 = omega_0^2 + 4 D omega_0
/// and coupling g~^2 = g^2 omega_0 / omega~_0 (D = g^2 / omega_c).
PolePair hopfield_poles_general(double omega_0, double omega_c, double g);

/// Resonant polariton poles omega_0 sqrt(1 + 2 eta^2 +- 2 eta sqrt(1 + eta^2)).
PolePair hopfield_poles_resonant(double eta, double omega_0);

/// O(eta^2) approximation omega_0 (1 + eta^2 / 2) +- g.
PolePair bloch_siegert_poles(double eta, double omega_0);

/// omega_0 sqrt(1 +- 2 eta); lower pole flagged (and set to 0) once eta >= 1/2.
FlaggedPolePair no_diamagnetic_poles(double eta, double omega_0);

/// Perturbative Rabi-model poles omega_0 +- g sqrt(1 + eta^2 / 4).
PolePair qrm_bs_poles(double eta, double omega_0);

/// Resonant Hopfield ground-state energy omega_0 (sqrt(1 + eta^2) - 1).
/// Equals the lowest eigenvalue of build_hamiltonian() with the
/// diamagnetic term written as D (b + b^dag)^2, no further offset.
double ground_state_energy(double eta, double omega_0);

/// Lowest `count` eigenvalues of the model relative to its ground state.
std::vector<double> excitation_energies(const ModelParams& p, int count);

/// The two lowest single-polariton excitations: dressed states reachable
/// from the ground state through the cavity quadratures. Multi-polariton
/// states (e.g. 2 omega_- < omega_+ at eta = 0.5) are skipped.
PolePair numeric_polariton_poles(const ModelParams& p);

}  // namespace usc
