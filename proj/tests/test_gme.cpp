#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "usc/gme.hpp"
#include "usc/log.hpp"

using namespace usc;

namespace {

struct Dressed {
  ModelParams params;
  EigenSystem eig;
  CavityOperators ops;
};

Dressed hopfield(double eta, int n, double omega_c = 1.0) {
  Dressed d;
  d.params.eta = eta;
  d.params.omega_c = omega_c;
  d.params.space = HilbertSpace::boson(n, n);
  d.eig = hermitian_eig(build_hamiltonian(d.params));
  d.ops = gauge_corrected_cavity_op(d.params);
  return d;
}

BathSpec bath(BathCoupling pi, double kappa = 0.025, double pump_ratio = 1e-4, bool gc = true) {
  BathSpec b;
  b.pi = pi;
  b.kappa = kappa;
  b.pump = pump_ratio * kappa;
  b.gauge_corrected = gc;
  return b;
}

ComplexMatrix random_matrix(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d;
  ComplexMatrix m(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) m(i, j) = Complex(d(rng), d(rng));
  return m;
}

// Operator in the K-state dressed basis.
ComplexMatrix dressed(const Dressed& d, const ComplexMatrix& op, int k) {
  const auto v = d.eig.vectors.leftCols(k);
  return v.adjoint() * op * v;
}

double trace_row_residual(const ComplexMatrix& l, int dim) {
  return (vectorize(ComplexMatrix::Identity(dim, dim)).transpose() * l).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("bath coupling names") {
  for (BathCoupling c : {BathCoupling::P, BathCoupling::Q, BathCoupling::PplusQ, BathCoupling::PminusQ}) {
    CHECK(parse_bath_coupling(to_string(c)) == c);
  }
  CHECK_THROWS_AS(parse_bath_coupling("X"), ConfigError);
}

TEST_CASE("bath validation") {
  BathSpec b = bath(BathCoupling::P);
  CHECK_NOTHROW(b.validate());
  CHECK(b.rate(0.7) == b.kappa);
  b.kappa = 0.0;
  CHECK_THROWS(b.validate());
  b = bath(BathCoupling::P);
  b.pump = -1.0;
  CHECK_THROWS(b.validate());

  std::vector<std::string> seen;
  ScopedWarningSink sink([&](std::string_view m) { seen.emplace_back(m); });
  b = bath(BathCoupling::P, 0.025, 0.05);
  b.validate();
  CHECK(seen.size() == 1);
}

TEST_CASE("vectorization convention") {
  const ComplexMatrix a = random_matrix(4, 1);
  const ComplexMatrix b = random_matrix(4, 2);
  const ComplexMatrix x = random_matrix(4, 3);
  CHECK(max_abs(unvectorize(vectorize(x), 4) - x) == 0.0);
  const ComplexMatrix super = Eigen::kroneckerProduct(b.transpose(), a).eval();
  CHECK(max_abs(super * vectorize(x) - vectorize(a * x * b)) < 1e-12);
  CHECK(max_abs(spre(a) * spost(b) * vectorize(x) - vectorize(a * x * b)) < 1e-12);
  CHECK(vectorize(x)(1) == x(1, 0));
}

TEST_CASE("bath operator selection") {
  const Dressed d = hopfield(0.5, 6);
  const ComplexMatrix p_raw = bath_operator(d.ops, bath(BathCoupling::P, 0.025, 1e-4, false), Gauge::Dipole);
  const ComplexMatrix p_gc = bath_operator(d.ops, bath(BathCoupling::P), Gauge::Dipole);
  CHECK(max_abs(p_raw - d.ops.p) == 0.0);
  CHECK(max_abs(p_gc - d.ops.p_prime) == 0.0);
  const ComplexMatrix pq = bath_operator(d.ops, bath(BathCoupling::PplusQ), Gauge::Dipole);
  CHECK(max_abs(pq - (d.ops.p_prime + d.ops.q_prime) / std::sqrt(2.0)) < 1e-15);
  const ComplexMatrix pmq = bath_operator(d.ops, bath(BathCoupling::PminusQ), Gauge::Dipole);
  CHECK(max_abs(pmq - (d.ops.p_prime - d.ops.q_prime) / std::sqrt(2.0)) < 1e-15);
  // Coulomb gauge: bare operators regardless of the flag.
  CHECK(max_abs(bath_operator(d.ops, bath(BathCoupling::P), Gauge::Coulomb) - d.ops.p) == 0.0);
}

TEST_CASE("bare cavity transitions") {
  // Detuned so the bare levels are not degenerate.
  const Dressed d = hopfield(0.0, 6, 1.3);
  const TransitionSet t = dressed_transitions(d.eig, bath_operator(d.ops, bath(BathCoupling::P), Gauge::Dipole), 8);
  CHECK(t.dim == 8);
  CHECK(t.energies(0) == 0.0);
  REQUIRE_FALSE(t.transitions.empty());
  // |<n-1|P|n>| = sqrt(n); eigenvector phases are arbitrary
  int bright = 0;
  for (const Transition& tr : t.transitions) {
    if (std::abs(tr.element) < 1e-12) continue;
    ++bright;
    CHECK(tr.omega == doctest::Approx(1.3));
    if (std::abs(t.energies(tr.k) - 1.3) < 1e-9) CHECK(std::abs(tr.element) == doctest::Approx(1.0));
    if (std::abs(t.energies(tr.k) - 2.6) < 1e-9) CHECK(std::abs(tr.element) == doctest::Approx(std::sqrt(2.0)));
  }
  CHECK(bright > 0);
}

TEST_CASE("transition structure at eta = 0.5") {
  const Dressed d = hopfield(0.5, 12);
  const ComplexMatrix pi_p = bath_operator(d.ops, bath(BathCoupling::P), Gauge::Dipole);
  const ComplexMatrix pi_q = bath_operator(d.ops, bath(BathCoupling::Q), Gauge::Dipole);
  const ComplexMatrix pi_pq = bath_operator(d.ops, bath(BathCoupling::PplusQ), Gauge::Dipole);
  const TransitionSet tp = dressed_transitions(d.eig, pi_p, 12);
  const TransitionSet tq = dressed_transitions(d.eig, pi_q, 12);
  const TransitionSet tpq = dressed_transitions(d.eig, pi_pq, 12);

  // nothing lies below the ground state
  CHECK(tpq.x_plus.col(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(tpq.x_minus().row(0).cwiseAbs().maxCoeff() == 0.0);
  // strictly energy lowering: upper triangular in the ascending basis
  CHECK(max_abs(ComplexMatrix(tpq.x_plus.triangularView<Eigen::Lower>())) == 0.0);
  CHECK(max_abs(tpq.x_plus - (tp.x_plus + tq.x_plus) / std::sqrt(2.0)) < 1e-12);
  for (const Transition& tr : tpq.transitions) {
    CHECK(tr.omega > 0.0);
    CHECK(tr.j < tr.k);
  }

  CHECK_THROWS_AS(dressed_transitions(d.eig, pi_p, 1), ContractError);
  CHECK_THROWS_AS(dressed_transitions(d.eig, pi_p, 1000), DimensionError);
  CHECK_THROWS_AS(dressed_transitions(d.eig, ComplexMatrix::Identity(3, 3), 4), DimensionError);
}

TEST_CASE("bare-cavity limit of the dissipators") {
  const Dressed d = hopfield(0.0, 6, 1.3);
  const BathSpec b = bath(BathCoupling::P, 0.04, 0.1);
  const int k = 8;
  const TransitionSet t = dressed_transitions(d.eig, bath_operator(d.ops, b, Gauge::Dipole), k);
  const ComplexMatrix a = dressed(d, d.ops.a, k);
  CHECK(max_abs(gme_dissipator(t, b) - lindblad_dissipator(a, b.kappa)) < 1e-12);
  CHECK(max_abs(pump_dissipator(t, b) - lindblad_dissipator(a.adjoint(), b.pump)) < 1e-12);

  BathSpec off = b;
  off.pump = 0.0;
  CHECK(max_abs(pump_dissipator(t, off)) == 0.0);
}

TEST_CASE("double sum equals the collapsed form") {
  const Dressed d = hopfield(0.5, 12);
  for (BathCoupling pi : {BathCoupling::P, BathCoupling::Q, BathCoupling::PplusQ}) {
    const BathSpec b = bath(pi);
    const TransitionSet t = dressed_transitions(d.eig, bath_operator(d.ops, b, Gauge::Dipole), 12);
    const ComplexMatrix ds = gme_dissipator_double_sum(t, b);
    CHECK(max_abs(ds - lindblad_dissipator(t.x_plus, b.kappa)) <= 1e-12);
    CHECK(trace_row_residual(ds, 12) <= 1e-12);
    CHECK(trace_row_residual(pump_dissipator(t, b), 12) <= 1e-12);
  }
}

TEST_CASE("liouvillian spectra") {
  // no dissipators: eigenvalues -i (w_j - w_k)
  RealVector e(3);
  e << 0.0, 0.7, 1.9;
  const Liouvillian unitary = build_liouvillian(e, std::span<const ComplexMatrix>{});
  Eigen::ComplexEigenSolver<ComplexMatrix> es(unitary.matrix);
  CHECK(es.eigenvalues().real().cwiseAbs().maxCoeff() < 1e-14);
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) {
      const Complex target(0.0, -(e(j) - e(k)));
      CHECK((es.eigenvalues().array() - target).abs().minCoeff() < 1e-12);
    }
  }

  // a damped two-level cavity ladder: the population mode decays at kappa
  const Dressed d = hopfield(0.0, 4, 1.3);
  const BathSpec b = bath(BathCoupling::P, 0.05, 0.0);
  const TransitionSet t = dressed_transitions(d.eig, bath_operator(d.ops, b, Gauge::Dipole), 3);
  const ComplexMatrix parts[] = {gme_dissipator(t, b)};
  const Liouvillian l = build_liouvillian(t.energies, parts);
  Eigen::ComplexEigenSolver<ComplexMatrix> el(l.matrix);
  CHECK((el.eigenvalues().array() + 0.05).abs().minCoeff() < 1e-12);
  CHECK(trace_residual(l) <= 1e-12);
}

TEST_CASE("full hopfield liouvillian invariants") {
  const Dressed d = hopfield(0.5, 12);
  for (bool gc : {false, true}) {
    const BathSpec b = bath(BathCoupling::PplusQ, 0.025, 1e-4, gc);
    const GmeSolution s = solve_gme(d.eig, bath_operator(d.ops, b, Gauge::Dipole), b, 12);
    const LiouvillianDiagnostics diag = check_liouvillian(s.liouvillian);
    CHECK(diag.trace_residual <= 1e-10);
    CHECK(diag.max_real_eigenvalue <= 1e-8);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> rs(s.rho, Eigen::EigenvaluesOnly);
    CHECK(rs.eigenvalues().minCoeff() >= -1e-8);
    CHECK(std::abs(s.rho.trace() - 1.0) < 1e-12);
    CHECK(hermiticity_error(s.rho) == 0.0);
    // weak excitation
    for (int k = 1; k < 12; ++k) CHECK(s.rho(k, k).real() <= 1e-3);
  }
}

TEST_CASE("steady states") {
  const Dressed d = hopfield(0.5, 12);
  BathSpec b = bath(BathCoupling::PplusQ, 0.025, 0.0);
  const GmeSolution s = solve_gme(d.eig, bath_operator(d.ops, b, Gauge::Dipole), b, 12);
  ComplexMatrix ground = ComplexMatrix::Zero(12, 12);
  ground(0, 0) = 1.0;
  CHECK(max_abs(s.rho - ground) <= 1e-10);

  // Bare pumped cavity: geometric ladder with <n> = P / (kappa - P). The
  // matter level is pushed above the K kept states so every state decays.
  Dressed c;
  c.params.eta = 0.0;
  c.params.omega_0 = 20.0;
  c.params.space = HilbertSpace::boson(12, 2);
  c.eig = hermitian_eig(build_hamiltonian(c.params));
  c.ops = gauge_corrected_cavity_op(c.params);
  BathSpec pumped = bath(BathCoupling::P, 0.05, 0.01);
  const int k = 12;
  const GmeSolution sc = solve_gme(c.eig, bath_operator(c.ops, pumped, Gauge::Dipole), pumped, k);
  const ComplexMatrix n = dressed(c, c.ops.a.adjoint() * c.ops.a, k);
  const double mean = (sc.rho * n).trace().real();
  const double expect = pumped.pump / (pumped.kappa - pumped.pump);
  CHECK(mean == doctest::Approx(expect).epsilon(1e-6));

  // An isolated pair of levels has a degenerate kernel.
  RealVector e(4);
  e << 0.0, 1.0, 2.0, 3.0;
  const Liouvillian free = build_liouvillian(e, std::span<const ComplexMatrix>{});
  CHECK_THROWS_AS(steady_state(free), NumericalError);
}
