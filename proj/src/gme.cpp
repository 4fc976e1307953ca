#include "usc/gme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "usc/log.hpp"

namespace usc {

std::string to_string(BathCoupling c) {
  switch (c) {
    case BathCoupling::P: return "P";
    case BathCoupling::Q: return "Q";
    case BathCoupling::PplusQ: return "P+Q";
    case BathCoupling::PminusQ: return "P-Q";
  }
  return "?";
}

BathCoupling parse_bath_coupling(const std::string& s) {
  if (s == "P" || s == "p") return BathCoupling::P;
  if (s == "Q" || s == "q") return BathCoupling::Q;
  if (s == "P+Q" || s == "PplusQ" || s == "p+q") return BathCoupling::PplusQ;
  if (s == "P-Q" || s == "PminusQ" || s == "p-q") return BathCoupling::PminusQ;
  throw ConfigError("unknown bath coupling '" + s + "' (expected P, Q, P+Q or P-Q)");
}

double BathSpec::rate(double omega) const {
  return omega > 0.0 ? kappa : 0.0;
}

void BathSpec::validate() const {
  if (!(kappa > 0.0)) throw ContractError("bath: kappa must be positive");
  if (!(pump >= 0.0)) throw ContractError("bath: pump must be non-negative");
  if (pump > kWeakPumpLimit * kappa) {
    std::ostringstream msg;
    msg << "pump rate " << pump << " exceeds " << kWeakPumpLimit << " kappa; spectra leave the weak-excitation regime";
    warn(msg.str());
  }
}

ComplexMatrix bath_operator(const CavityOperators& ops, const BathSpec& bath, Gauge gauge) {
  const bool primed = bath.gauge_corrected && gauge == Gauge::Dipole;
  const ComplexMatrix& p = primed ? ops.p_prime : ops.p;
  const ComplexMatrix& q = primed ? ops.q_prime : ops.q;
  switch (bath.pi) {
    case BathCoupling::P: return p;
    case BathCoupling::Q: return q;
    case BathCoupling::PplusQ: return (p + q) / std::sqrt(2.0);
    case BathCoupling::PminusQ: return (p - q) / std::sqrt(2.0);
  }
  throw ContractError("bath_operator: unknown coupling");
}

TransitionSet dressed_transitions(const EigenSystem& eig, const ComplexMatrix& pi_op, int k_states,
                                  double degeneracy_tol) {
  if (k_states < 2) throw ContractError("dressed_transitions: need K >= 2 dressed states");
  if (k_states > eig.dim()) {
    throw DimensionError("dressed_transitions: K = " + std::to_string(k_states) + " exceeds the available eigenpairs " +
                         std::to_string(eig.dim()));
  }
  if (pi_op.rows() != eig.vectors.rows() || pi_op.cols() != eig.vectors.rows()) {
    throw DimensionError("dressed_transitions: coupling operator does not match the eigensystem");
  }
  const double scale = max_abs(pi_op);
  const double tol = kNumericPolicy.hermiticity_rel * scale;
  if (max_abs(pi_op - pi_op.adjoint()) > tol && max_abs(pi_op + pi_op.adjoint()) > tol) {
    throw ContractError("dressed_transitions: coupling operator must be Hermitian or anti-Hermitian");
  }

  const auto v = eig.vectors.leftCols(k_states);
  const ComplexMatrix m = v.adjoint() * pi_op * v;

  TransitionSet t;
  t.dim = k_states;
  t.energies = eig.values.head(k_states).array() - eig.values(0);
  t.x_plus = ComplexMatrix::Zero(k_states, k_states);
  for (int j = 0; j < k_states; ++j) {
    for (int k = 0; k < k_states; ++k) {
      const double omega = eig.values(k) - eig.values(j);
      if (omega <= degeneracy_tol) continue;
      t.transitions.push_back(Transition{omega, m(j, k), j, k});
      t.x_plus(j, k) = m(j, k);
    }
  }
  return t;
}

ComplexVector vectorize(const ComplexMatrix& rho) {
  return rho.reshaped();
}

ComplexMatrix unvectorize(const ComplexVector& v, int dim) {
  if (v.size() != static_cast<Eigen::Index>(dim) * dim) throw DimensionError("unvectorize: length is not dim^2");
  return v.reshaped(dim, dim);
}

ComplexMatrix spre(const ComplexMatrix& a) {
  return Eigen::kroneckerProduct(ComplexMatrix::Identity(a.rows(), a.rows()), a).eval();
}

ComplexMatrix spost(const ComplexMatrix& b) {
  return Eigen::kroneckerProduct(b.transpose(), ComplexMatrix::Identity(b.rows(), b.rows())).eval();
}

ComplexMatrix lindblad_dissipator(const ComplexMatrix& o, double rate) {
  const Eigen::Index k = o.rows();
  const ComplexMatrix od = o.adjoint();
  const ComplexMatrix n = od * o;
  const ComplexMatrix id = ComplexMatrix::Identity(k, k);
  ComplexMatrix s = Eigen::kroneckerProduct(od.transpose(), o).eval();  // O X O^dag
  s -= 0.5 * Eigen::kroneckerProduct(id, n).eval();
  s -= 0.5 * Eigen::kroneckerProduct(n.transpose(), id).eval();
  return rate * s;
}

ComplexMatrix gme_dissipator_double_sum(const TransitionSet& t, const BathSpec& bath) {
  const int k = t.dim;
  ComplexMatrix s = ComplexMatrix::Zero(static_cast<Eigen::Index>(k) * k, static_cast<Eigen::Index>(k) * k);
  const auto idx = [k](int r, int c) { return static_cast<Eigen::Index>(c) * k + r; };

  // Group transitions by their lower state j: the X^- X^+ products vanish
  // unless both transitions share it.
  std::vector<std::vector<const Transition*>> by_lower(k);
  for (const Transition& tr : t.transitions) by_lower[tr.j].push_back(&tr);

  for (const Transition& t1 : t.transitions) {
    const double g1 = bath.rate(t1.omega);
    for (const Transition& t2 : t.transitions) {
      const double g2 = bath.rate(t2.omega);
      // X^+(w) rho X^-(w') = e1 conj(e2) |j1><k1| rho |k2><j2|
      s(idx(t1.j, t2.j), idx(t1.k, t2.k)) += 0.5 * (g1 + g2) * t1.element * std::conj(t2.element);
    }
  }
  for (int j = 0; j < k; ++j) {
    for (const Transition* t1 : by_lower[j]) {
      const double g1 = bath.rate(t1->omega);
      for (const Transition* t2 : by_lower[j]) {
        const double g2 = bath.rate(t2->omega);
        const Complex c = t1->element * std::conj(t2->element);
        for (int m = 0; m < k; ++m) {
          // -X^-(w') X^+(w) rho  and  -rho X^-(w') X^+(w)
          s(idx(t2->k, m), idx(t1->k, m)) -= 0.5 * g1 * c;
          s(idx(m, t1->k), idx(m, t2->k)) -= 0.5 * g2 * c;
        }
      }
    }
  }
  return s;
}

ComplexMatrix gme_dissipator(const TransitionSet& t, const BathSpec& bath) {
  const Eigen::Index n = static_cast<Eigen::Index>(t.dim) * t.dim;
  if (t.transitions.empty()) {
    warn("gme_dissipator: empty transition set, cavity dissipator is zero");
    return ComplexMatrix::Zero(n, n);
  }
  ComplexMatrix s = gme_dissipator_double_sum(t, bath);
  if (bath.rate_model == RateModel::Flat) {
    const ComplexMatrix collapsed = lindblad_dissipator(t.x_plus, bath.kappa);
    const double diff = max_abs(s - collapsed);
    if (diff > 1e-12 * std::max(1.0, max_abs(collapsed))) {
      std::ostringstream msg;
      msg << "gme_dissipator: double sum disagrees with the collapsed flat-rate form by " << diff;
      throw NumericalError(msg.str());
    }
  }
  return s;
}

ComplexMatrix pump_dissipator(const TransitionSet& t, const BathSpec& bath) {
  const Eigen::Index n = static_cast<Eigen::Index>(t.dim) * t.dim;
  if (bath.pump == 0.0) return ComplexMatrix::Zero(n, n);
  return lindblad_dissipator(t.x_minus(), bath.pump);
}

Liouvillian build_liouvillian(const RealVector& energies, std::span<const ComplexMatrix> dissipators) {
  const int k = static_cast<int>(energies.size());
  const Eigen::Index n = static_cast<Eigen::Index>(k) * k;
  Liouvillian l{k, ComplexMatrix::Zero(n, n)};
  for (int c = 0; c < k; ++c) {
    for (int r = 0; r < k; ++r) {
      const Eigen::Index i = static_cast<Eigen::Index>(c) * k + r;
      l.matrix(i, i) = -kI * (energies(r) - energies(c));
    }
  }
  for (const ComplexMatrix& d : dissipators) {
    if (d.rows() != n || d.cols() != n) {
      throw DimensionError("build_liouvillian: dissipator is not " + std::to_string(n) + "x" + std::to_string(n));
    }
    l.matrix += d;
  }
  return l;
}

double trace_residual(const Liouvillian& l) {
  const int k = l.dim;
  Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(l.matrix.cols());
  for (int r = 0; r < k; ++r) row += l.matrix.row(static_cast<Eigen::Index>(r) * k + r);
  return row.cwiseAbs().maxCoeff();
}

LiouvillianDiagnostics check_liouvillian(const Liouvillian& l) {
  LiouvillianDiagnostics d;
  d.trace_residual = trace_residual(l);
  Eigen::ComplexEigenSolver<ComplexMatrix> es(l.matrix, false);
  if (es.info() != Eigen::Success) throw NumericalError("check_liouvillian: eigenvalue iteration failed");
  d.max_real_eigenvalue = es.eigenvalues().real().maxCoeff();
  return d;
}

namespace {

void check_kernel_gap(const Liouvillian& l, const SteadyStateOptions& opts) {
  Eigen::ComplexEigenSolver<ComplexMatrix> es(l.matrix, false);
  if (es.info() != Eigen::Success) throw NumericalError("steady_state: eigenvalue iteration failed");
  std::vector<double> mags(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) mags[i] = std::abs(es.eigenvalues()(i));
  std::partial_sort(mags.begin(), mags.begin() + std::min<std::size_t>(2, mags.size()), mags.end());
  if (mags.size() < 2) return;
  const double floor = 1e-13 * std::max(1.0, max_abs(l.matrix));
  if (!(mags[1] > opts.kernel_gap * std::max(mags[0], floor))) {
    std::ostringstream msg;
    msg << "steady_state: Liouvillian kernel is not one-dimensional (|lambda_1| = " << mags[0]
        << ", |lambda_2| = " << mags[1] << "); check that every dressed state decays, e.g. eta > 0 or pump > 0";
    throw NumericalError(msg.str());
  }
}

}  // namespace

ComplexMatrix steady_state(const Liouvillian& l, const SteadyStateOptions& opts) {
  const int k = l.dim;
  const Eigen::Index n = l.matrix.rows();
  if (n != static_cast<Eigen::Index>(k) * k) throw DimensionError("steady_state: Liouvillian dimension mismatch");
  if (n <= opts.eigen_check_max_dim) check_kernel_gap(l, opts);

  // The population rows of L sum to zero (trace preservation), so one of
  // them can be swapped for the trace condition Tr rho = 1.
  ComplexMatrix a = l.matrix;
  ComplexVector rhs = ComplexVector::Zero(n);
  a.row(0).setZero();
  for (int r = 0; r < k; ++r) a(0, static_cast<Eigen::Index>(r) * k + r) = 1.0;
  rhs(0) = 1.0;

  LinearSolution sol;
  try {
    sol = solve_linear(a, rhs);
  } catch (const SolverError& e) {
    throw NumericalError(std::string("steady_state: stationary state is not unique (") + e.what() + ")");
  }
  ComplexMatrix rho = unvectorize(sol.x, k);
  const double asym = hermiticity_error(rho);
  if (asym > 1e-10) {
    std::ostringstream msg;
    msg << "steady_state: symmetrizing rho, max|rho - rho^dag| = " << asym;
    warn(msg.str());
  }
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace();

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < -opts.negativity_tol) {
    std::ostringstream msg;
    msg << "steady_state: density matrix has eigenvalue " << min_eig << " below -" << opts.negativity_tol;
    throw NumericalError(msg.str());
  }
  return rho;
}

GmeSolution solve_gme(const EigenSystem& eig, const ComplexMatrix& pi_op, const BathSpec& bath, int k_states) {
  bath.validate();
  GmeSolution out;
  out.transitions = dressed_transitions(eig, pi_op, k_states);
  const ComplexMatrix dissipators[] = {gme_dissipator(out.transitions, bath), pump_dissipator(out.transitions, bath)};
  out.liouvillian = build_liouvillian(out.transitions.energies, dissipators);
  out.rho = steady_state(out.liouvillian);
  return out;
}

}  // namespace usc
