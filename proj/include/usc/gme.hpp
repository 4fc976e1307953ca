#pragma once

// Dressed-state generalized master equation: non-secular cavity dissipator,
// incoherent pump, Liouvillian assembly and steady state.
//
// Density matrices are vectorized by column stacking, vec(A X B) =
// (B^T (x) A) vec(X). Frequencies are in units of omega_0.

#include <span>
#include <string>
#include <vector>

#include "usc/models.hpp"
#include "usc/operator_kit.hpp"

namespace usc {

enum class BathCoupling { P, Q, PplusQ, PminusQ };
enum class RateModel { Flat };

std::string to_string(BathCoupling c);
BathCoupling parse_bath_coupling(const std::string& s);

struct BathSpec {
  BathCoupling pi = BathCoupling::PplusQ;
  bool gauge_corrected = true;
  double kappa = 0.025;
  double pump = 2.5e-6;
  RateModel rate_model = RateModel::Flat;

  /// Gamma_c(omega); the flat model returns kappa for every omega > 0.
  double rate(double omega) const;
  /// Throws on non-positive kappa or negative pump; warns when the pump
  /// leaves the weak-excitation regime (pump > 1e-2 kappa).
  void validate() const;
};

inline constexpr double kDefaultPumpRatio = 1e-4;
inline constexpr double kWeakPumpLimit = 1e-2;

/// Bath coupling operator Pi_c on the full space. In the dipole gauge with
/// gauge_corrected set, P and Q are built from a'; in the Coulomb gauge the
/// bare cavity operators are already gauge consistent and are always used.
ComplexMatrix bath_operator(const CavityOperators& ops, const BathSpec& bath, Gauge gauge);

struct Transition {
  double omega;     // omega_k - omega_j > 0
  Complex element;  // <j|Pi_c|k>
  int j;
  int k;
};

/// Positive-frequency dressed transitions X^+(omega) = <j|Pi|k> |j><k|.
struct TransitionSet {
  int dim = 0;  // dressed-basis truncation K
  std::vector<Transition> transitions;
  RealVector energies;   // K lowest eigenvalues, ground state shifted to 0
  ComplexMatrix x_plus;  // sum over all transitions, K x K

  ComplexMatrix x_minus() const { return x_plus.adjoint(); }
};

TransitionSet dressed_transitions(const EigenSystem& eig, const ComplexMatrix& pi_op, int k_states,
                                  double degeneracy_tol = 1e-9);

/// Superoperator on vectorized K x K matrices.
struct Liouvillian {
  int dim = 0;
  ComplexMatrix matrix;
};

ComplexVector vectorize(const ComplexMatrix& rho);
ComplexMatrix unvectorize(const ComplexVector& v, int dim);
ComplexMatrix spre(const ComplexMatrix& a);   // X -> A X
ComplexMatrix spost(const ComplexMatrix& b);  // X -> X B

/// rate * (O X O^dag - {O^dag O, X} / 2), i.e. (rate / 2) D[O].
ComplexMatrix lindblad_dissipator(const ComplexMatrix& o, double rate);

/// Cavity dissipator evaluated as the explicit double sum over transition
/// pairs (omega, omega'). For the flat rate model the result is checked
/// against the collapsed form (kappa/2) D[X^+]; a mismatch above 1e-12
/// throws NumericalError.
ComplexMatrix gme_dissipator(const TransitionSet& t, const BathSpec& bath);

/// Same double sum without the self-check.
ComplexMatrix gme_dissipator_double_sum(const TransitionSet& t, const BathSpec& bath);

/// Incoherent pump (P_c / 2) D[X^-] with the total X^- of `t`.
ComplexMatrix pump_dissipator(const TransitionSet& t, const BathSpec& bath);

/// L = -i[H, .] + sum of dissipators, H diagonal in the dressed basis.
Liouvillian build_liouvillian(const RealVector& energies, std::span<const ComplexMatrix> dissipators);

struct LiouvillianDiagnostics {
  double trace_residual = 0.0;  // max |1^T L|
  double max_real_eigenvalue = 0.0;
};

/// Trace-preservation residual of L.
double trace_residual(const Liouvillian& l);

/// Trace residual plus the full eigenvalue spectrum check (O(K^6)).
LiouvillianDiagnostics check_liouvillian(const Liouvillian& l);

struct SteadyStateOptions {
  double negativity_tol = 1e-8;
  double kernel_gap = 1e3;     // second-smallest |lambda| over smallest
  int eigen_check_max_dim = 900;  // above this the kernel check uses the LU condition
};

/// Unique stationary state of L with unit trace, Hermitian by
/// symmetrization. Throws NumericalError for a degenerate kernel or a
/// state with eigenvalues below -negativity_tol.
ComplexMatrix steady_state(const Liouvillian& l, const SteadyStateOptions& opts = {});

/// Full pipeline for one bath configuration in a precomputed eigenbasis.
struct GmeSolution {
  TransitionSet transitions;
  Liouvillian liouvillian;
  ComplexMatrix rho;
};

GmeSolution solve_gme(const EigenSystem& eig, const ComplexMatrix& pi_op, const BathSpec& bath, int k_states);

}  // namespace usc
