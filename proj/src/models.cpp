#include "usc/models.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SparseCore>

namespace usc {

std::string to_string(ModelKind m) { return m == ModelKind::Hopfield ? "hopfield" : "qrm"; }
std::string to_string(Gauge g) { return g == Gauge::Dipole ? "dipole" : "coulomb"; }

double ModelParams::diamagnetic_amplitude() const {
  return (model == ModelKind::Hopfield && diamagnetic) ? eta * coupling() : 0.0;
}

void ModelParams::validate() const {
  if (!(omega_c > 0.0) || !(omega_0 > 0.0)) throw ContractError("omega_c and omega_0 must be positive");
  if (!(eta >= 0.0)) throw ContractError("eta must be non-negative");
  if (model == ModelKind::Rabi && space.matter_kind() != MatterKind::TwoLevel) {
    throw ContractError("the quantum Rabi model needs a two-level matter factor");
  }
  if (model == ModelKind::Hopfield && space.matter_kind() != MatterKind::Boson) {
    throw ContractError("the Hopfield model needs a bosonic matter factor");
  }
}

namespace {

using SparseMatrix = Eigen::SparseMatrix<Complex>;

ComplexMatrix matter_lowering(const ModelParams& p) {
  const ComplexMatrix local =
      p.space.matter_kind() == MatterKind::TwoLevel ? tls_lowering() : annihilation(p.space.matter_dim());
  return embed(local, Slot::Matter, p.space);
}

// Ladder operators are bidiagonal in the product basis; sparse products
// keep assembly at N = 40 cheap.
ComplexMatrix hopfield(const ModelParams& p) {
  const SparseMatrix a = embed(annihilation(p.space.cavity_dim()), Slot::Cavity, p.space).sparseView();
  const SparseMatrix b = matter_lowering(p).sparseView();
  const SparseMatrix ad = a.adjoint();
  const SparseMatrix bd = b.adjoint();
  const double g = p.coupling();
  const double d = p.diamagnetic_amplitude();

  SparseMatrix h = p.omega_c * (ad * a) + p.omega_0 * (bd * b);
  if (p.gauge == Gauge::Dipole) {
    const SparseMatrix x = b + bd;
    h += (kI * g) * (SparseMatrix(ad - a) * x) + d * (x * x);
  } else {
    const SparseMatrix x = a + ad;
    h += (kI * g * (p.omega_0 / p.omega_c)) * (SparseMatrix(bd - b) * x) + d * (x * x);
  }
  return ComplexMatrix(h);
}

ComplexMatrix rabi(const ModelParams& p) {
  const ComplexMatrix a = embed(annihilation(p.space.cavity_dim()), Slot::Cavity, p.space);
  const ComplexMatrix sm = matter_lowering(p);
  const ComplexMatrix ad = a.adjoint();
  const ComplexMatrix sp = sm.adjoint();

  ComplexMatrix h = p.omega_c * ad * a;
  if (p.gauge == Gauge::Dipole) {
    h += p.omega_0 * sp * sm + kI * p.coupling() * (ad - a) * (sp + sm);
    return h;
  }
  // Coulomb gauge: the two-level projection of the minimal-coupling
  // Hamiltonian carries the field to all orders through cos/sin.
  const ComplexMatrix sz = sp * sm - sm * sp;
  const ComplexMatrix sy = -kI * (sp - sm);
  const ComplexMatrix phase = 2.0 * p.eta * (a + ad);
  h += 0.5 * p.omega_0 *
       (sz * hermitian_function(phase, MatrixFunction::Cos) + sy * hermitian_function(phase, MatrixFunction::Sin));
  return h;
}

}  // namespace

ComplexMatrix build_hamiltonian(const ModelParams& p) {
  p.validate();
  ComplexMatrix h = p.model == ModelKind::Hopfield ? hopfield(p) : rabi(p);
  // Products of Hermitian factors that commute only approximately in
  // floating point; remove the rounding-level anti-Hermitian part.
  return 0.5 * (h + h.adjoint());
}

ComplexMatrix matter_quadrature(const ModelParams& p) {
  p.validate();
  const ComplexMatrix b = matter_lowering(p);
  return b + b.adjoint();
}

CavityOperators gauge_corrected_cavity_op(const ModelParams& p) {
  p.validate();
  CavityOperators ops;
  ops.a = embed(annihilation(p.space.cavity_dim()), Slot::Cavity, p.space);
  ops.a_prime = ops.a + kI * p.eta * matter_quadrature(p);
  ops.p = kI * (ops.a.adjoint() - ops.a);
  ops.q = ops.a + ops.a.adjoint();
  ops.p_prime = kI * (ops.a_prime.adjoint() - ops.a_prime);
  ops.q_prime = ops.a_prime + ops.a_prime.adjoint();
  return ops;
}

PolePair hopfield_poles_general(double omega_0, double omega_c, double g) {
  if (!(omega_0 > 0.0) || !(omega_c > 0.0) || !(g >= 0.0)) {
    throw ContractError("hopfield_poles_general: frequencies must be positive and g non-negative");
  }
  const double d = g * g / omega_c;
  const double w0t2 = omega_0 * omega_0 + 4.0 * d * omega_0;
  const double w0t = std::sqrt(w0t2);
  const double gt2 = g * g * omega_0 / w0t;
  const double wc2 = omega_c * omega_c;
  const double sum = w0t2 + wc2;
  const double disc = std::sqrt((w0t2 - wc2) * (w0t2 - wc2) + 16.0 * gt2 * w0t * omega_c);
  // The lower root is positive because its product with the upper root is
  // omega_0^2 omega_c^2; compute it from the product to avoid cancellation.
  const double upper2 = 0.5 * (sum + disc);
  const double lower2 = (w0t2 * wc2 - 4.0 * gt2 * w0t * omega_c) / upper2;
  return PolePair{std::sqrt(std::max(lower2, 0.0)), std::sqrt(upper2)};
}

PolePair hopfield_poles_resonant(double eta, double omega_0) {
  if (!(eta >= 0.0)) throw ContractError("eta must be non-negative");
  const double root = 2.0 * eta * std::sqrt(1.0 + eta * eta);
  const double base = 1.0 + 2.0 * eta * eta;
  return PolePair{omega_0 * std::sqrt(base - root), omega_0 * std::sqrt(base + root)};
}

PolePair bloch_siegert_poles(double eta, double omega_0) {
  const double center = omega_0 * (1.0 + 0.5 * eta * eta);
  const double g = eta * omega_0;
  return PolePair{center - g, center + g};
}

FlaggedPolePair no_diamagnetic_poles(double eta, double omega_0) {
  FlaggedPolePair out;
  out.poles.omega_plus = omega_0 * std::sqrt(1.0 + 2.0 * eta);
  const double lower = 1.0 - 2.0 * eta;
  out.lower_pole_valid = lower > 0.0;
  out.poles.omega_minus = out.lower_pole_valid ? omega_0 * std::sqrt(lower) : 0.0;
  return out;
}

PolePair qrm_bs_poles(double eta, double omega_0) {
  const double split = eta * omega_0 * std::sqrt(1.0 + 0.25 * eta * eta);
  return PolePair{omega_0 - split, omega_0 + split};
}

double ground_state_energy(double eta, double omega_0) {
  return omega_0 * (std::sqrt(1.0 + eta * eta) - 1.0);
}

std::vector<double> excitation_energies(const ModelParams& p, int count) {
  const ComplexMatrix h = build_hamiltonian(p);
  const EigenSystem es = hermitian_eig_lowest(h, static_cast<int>(std::min<Eigen::Index>(count, h.rows())));
  const int n = std::min(count, es.dim());
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = es.values(i) - es.values(0);
  return out;
}

PolePair numeric_polariton_poles(const ModelParams& p) {
  // Dark multi-polariton states (2 omega_- < omega_+ for strong coupling)
  // can sit between the two bright ones; 16 levels cover eta <~ 1.
  const ComplexMatrix h = build_hamiltonian(p);
  const EigenSystem es = hermitian_eig_lowest(h, static_cast<int>(std::min<Eigen::Index>(16, h.rows())));
  const CavityOperators ops = gauge_corrected_cavity_op(p);
  const ComplexVector ground = es.vectors.col(0);
  const ComplexVector pg = ops.p * ground;
  const ComplexVector qg = ops.q * ground;

  std::vector<double> bright;
  for (int k = 1; k < es.dim() && bright.size() < 2; ++k) {
    const ComplexVector v = es.vectors.col(k);
    const double weight = std::norm(v.dot(pg)) + std::norm(v.dot(qg));
    if (weight > 1e-6) bright.push_back(es.values(k) - es.values(0));
  }
  if (bright.size() < 2) throw NumericalError("numeric_polariton_poles: fewer than two bright excitations found");
  return PolePair{bright[0], bright[1]};
}

}  // namespace usc
