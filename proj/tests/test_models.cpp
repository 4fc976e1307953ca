#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "usc/models.hpp"

using namespace usc;

namespace {

ModelParams hopfield(double eta, int n, Gauge gauge = Gauge::Dipole) {
  ModelParams p;
  p.eta = eta;
  p.gauge = gauge;
  p.space = HilbertSpace::boson(n, n);
  return p;
}

ModelParams rabi(double eta, int n, Gauge gauge = Gauge::Dipole) {
  ModelParams p;
  p.model = ModelKind::Rabi;
  p.eta = eta;
  p.gauge = gauge;
  p.space = HilbertSpace::two_level(n);
  return p;
}

// Closed-form values evaluated at 30 digits.
constexpr double kMinus01 = 0.904987562112089022;
constexpr double kPlus01 = 1.104987562112089033;
constexpr double kMinus03 = 0.744030650891055026;
constexpr double kPlus03 = 1.344030650891055004;
constexpr double kMinus05 = 0.618033988749894848;
constexpr double kPlus05 = 1.618033988749894848;

}  // namespace

TEST_CASE("decoupled oscillators") {
  ModelParams p = hopfield(0.0, 4);
  p.omega_c = 1.3;
  const EigenSystem e = hermitian_eig(build_hamiltonian(p));
  std::vector<double> expect;
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) expect.push_back(m * 1.3 + n * 1.0);
  std::sort(expect.begin(), expect.end());
  for (int k = 0; k < 16; ++k) CHECK(e.values(k) == doctest::Approx(expect[k]).epsilon(1e-12));

  const ModelParams q = rabi(0.0, 5, Gauge::Coulomb);
  const EigenSystem eq = hermitian_eig(build_hamiltonian(q));
  // Coulomb-gauge two-level energy is written as (omega_0 / 2) sigma_z.
  std::vector<double> expect_q;
  for (int n = 0; n < 5; ++n) {
    expect_q.push_back(n - 0.5);
    expect_q.push_back(n + 0.5);
  }
  std::sort(expect_q.begin(), expect_q.end());
  for (int k = 0; k < 10; ++k) CHECK(eq.values(k) == doctest::Approx(expect_q[k]).epsilon(1e-12));
}

TEST_CASE("hamiltonians are hermitian") {
  for (Gauge g : {Gauge::Dipole, Gauge::Coulomb}) {
    CHECK(hermiticity_error(build_hamiltonian(hopfield(0.7, 8, g))) == 0.0);
    CHECK(hermiticity_error(build_hamiltonian(rabi(0.7, 8, g))) == 0.0);
  }
}

TEST_CASE("model validation") {
  ModelParams p = rabi(0.5, 6);
  p.space = HilbertSpace::boson(6, 6);
  CHECK_THROWS_AS(build_hamiltonian(p), ContractError);
  ModelParams q = hopfield(0.5, 6);
  q.space = HilbertSpace::two_level(6);
  CHECK_THROWS_AS(build_hamiltonian(q), ContractError);
  CHECK_THROWS_AS(build_hamiltonian(hopfield(-0.1, 4)), ContractError);
  ModelParams r = hopfield(0.2, 4);
  r.omega_c = 0.0;
  CHECK_THROWS_AS(build_hamiltonian(r), ContractError);
}

TEST_CASE("numeric polariton poles at N = 40") {
  const PolePair p = numeric_polariton_poles(hopfield(0.5, 40));
  CHECK(std::abs(p.omega_minus - kMinus05) <= 1e-5);
  CHECK(std::abs(p.omega_plus - kPlus05) <= 1e-5);

  // 2 omega_- lies below omega_+ here; the second excitation is dark.
  const auto ex = excitation_energies(hopfield(0.5, 40), 3);
  CHECK(ex[0] == doctest::Approx(0.0));
  CHECK(ex[1] == doctest::Approx(kMinus05).epsilon(1e-6));
  CHECK(ex[2] == doctest::Approx(2.0 * kMinus05).epsilon(1e-6));
}

TEST_CASE("dipole and coulomb gauge eigenvalues agree") {
  const auto d = excitation_energies(hopfield(0.5, 40), 30);
  const auto c = excitation_energies(hopfield(0.5, 40, Gauge::Coulomb), 30);
  for (std::size_t k = 0; k < d.size(); ++k) CHECK(std::abs(d[k] - c[k]) <= 1e-8);

  // The two-level projection is gauge-consistent too at this truncation.
  const auto qd = excitation_energies(rabi(0.5, 30), 6);
  const auto qc = excitation_energies(rabi(0.5, 30, Gauge::Coulomb), 6);
  for (std::size_t k = 0; k < qd.size(); ++k) CHECK(std::abs(qd[k] - qc[k]) <= 1e-8);
}

TEST_CASE("gauge-corrected cavity operator") {
  const ModelParams p0 = hopfield(0.0, 6);
  const CavityOperators o0 = gauge_corrected_cavity_op(p0);
  CHECK(max_abs(o0.a_prime - o0.a) == 0.0);

  for (const ModelParams& p : {hopfield(0.5, 8), rabi(0.5, 8)}) {
    const CavityOperators o = gauge_corrected_cavity_op(p);
    CHECK(max_abs(o.q_prime - o.q) <= 1e-12);
    CHECK(max_abs(o.p_prime - o.p - 2.0 * p.eta * matter_quadrature(p)) <= 1e-12);
  }

  // a' = U a U^dag with U = exp(-i eta (a + a^dag) x_matter), built from
  // hermitian_function. Truncation only pollutes the top Fock states.
  const int n = 24;
  const ModelParams p = hopfield(0.3, n);
  const CavityOperators o = gauge_corrected_cavity_op(p);
  const ComplexMatrix theta = p.eta * o.q * matter_quadrature(p);
  const ComplexMatrix u = hermitian_function(theta, MatrixFunction::Cos) - kI * hermitian_function(theta, MatrixFunction::Sin);
  const ComplexMatrix conj = u * o.a * u.adjoint();
  double err = 0.0;
  for (int i = 0; i < n * n; ++i) {
    for (int j = 0; j < n * n; ++j) {
      const bool low = i / n < 5 && i % n < 5 && j / n < 5 && j % n < 5;
      if (low) err = std::max(err, std::abs(conj(i, j) - o.a_prime(i, j)));
    }
  }
  CHECK(err <= 1e-8);
}

TEST_CASE("hopfield pole formulas") {
  const PolePair r0 = hopfield_poles_resonant(0.0, 1.0);
  CHECK(r0.omega_minus == doctest::Approx(1.0));
  CHECK(r0.omega_plus == doctest::Approx(1.0));
  const PolePair r1 = hopfield_poles_resonant(0.1, 1.0);
  CHECK(r1.omega_minus == doctest::Approx(kMinus01).epsilon(1e-14));
  CHECK(r1.omega_plus == doctest::Approx(kPlus01).epsilon(1e-14));
  const PolePair r3 = hopfield_poles_resonant(0.3, 1.0);
  CHECK(r3.omega_minus == doctest::Approx(kMinus03).epsilon(1e-14));
  CHECK(r3.omega_plus == doctest::Approx(kPlus03).epsilon(1e-14));
  const PolePair r5 = hopfield_poles_resonant(0.5, 2.0);
  CHECK(r5.omega_minus == doctest::Approx(2.0 * kMinus05).epsilon(1e-14));
  CHECK(r5.omega_plus == doctest::Approx(2.0 * kPlus05).epsilon(1e-14));
  // omega_+ omega_- = omega_0^2
  CHECK(r3.omega_minus * r3.omega_plus == doctest::Approx(1.0).epsilon(1e-14));

  const PolePair g0 = hopfield_poles_general(1.0, 1.4, 0.0);
  CHECK(g0.omega_minus == doctest::Approx(1.0));
  CHECK(g0.omega_plus == doctest::Approx(1.4));
  const PolePair g5 = hopfield_poles_general(1.0, 1.0, 0.5);
  CHECK(g5.omega_minus == doctest::Approx(kMinus05).epsilon(1e-13));
  CHECK(g5.omega_plus == doctest::Approx(kPlus05).epsilon(1e-13));
  const PolePair g3 = hopfield_poles_general(1.0, 1.0, 0.3);
  CHECK(g3.omega_minus == doctest::Approx(0.74403).epsilon(1e-5));
  CHECK(g3.omega_plus == doctest::Approx(1.34403).epsilon(1e-5));
  CHECK_THROWS_AS(hopfield_poles_general(-1.0, 1.0, 0.1), ContractError);
}

TEST_CASE("detuned poles follow the renormalized dipole frequency") {
  // Oracle: N = 40 Fock diagonalization at omega_c = 1.2, eta = 0.3.
  const PolePair g = hopfield_poles_general(1.0, 1.2, 0.3 * 1.2);
  CHECK(g.omega_minus == doctest::Approx(0.80453053).epsilon(1e-7));
  CHECK(g.omega_plus == doctest::Approx(1.49155309).epsilon(1e-7));

  ModelParams p = hopfield(0.3, 30);
  p.omega_c = 1.2;
  const PolePair n = numeric_polariton_poles(p);
  CHECK(std::abs(n.omega_minus - g.omega_minus) <= 1e-6);
  CHECK(std::abs(n.omega_plus - g.omega_plus) <= 1e-6);
}

TEST_CASE("approximate pole formulas") {
  const PolePair b1 = bloch_siegert_poles(0.1, 1.0);
  CHECK(b1.omega_minus == doctest::Approx(0.905));
  CHECK(b1.omega_plus == doctest::Approx(1.105));
  CHECK(std::abs(b1.omega_minus - kMinus01) <= 5e-5);
  CHECK(std::abs(b1.omega_plus - kPlus01) <= 5e-5);
  const PolePair b5 = bloch_siegert_poles(0.5, 1.0);
  CHECK(b5.omega_minus == doctest::Approx(0.625));
  CHECK(b5.omega_plus == doctest::Approx(1.625));
  CHECK(b5.omega_minus - kMinus05 == doctest::Approx(0.007).epsilon(0.05));

  const FlaggedPolePair nd = no_diamagnetic_poles(0.25, 1.0);
  CHECK(nd.lower_pole_valid);
  CHECK(nd.poles.omega_minus == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(nd.poles.omega_plus == doctest::Approx(1.22474).epsilon(1e-5));
  const FlaggedPolePair nd5 = no_diamagnetic_poles(0.5, 1.0);
  CHECK_FALSE(nd5.lower_pole_valid);
  CHECK(nd5.poles.omega_minus == 0.0);
  const FlaggedPolePair nd0 = no_diamagnetic_poles(0.0, 1.0);
  CHECK(nd0.poles.omega_minus == doctest::Approx(1.0));

  const PolePair q0 = qrm_bs_poles(0.0, 1.0);
  CHECK(q0.omega_minus == doctest::Approx(1.0));
  const PolePair q1 = qrm_bs_poles(0.1, 1.0);
  CHECK(q1.omega_minus == doctest::Approx(0.89987).epsilon(1e-5));
  CHECK(q1.omega_plus == doctest::Approx(1.10013).epsilon(1e-5));
  CHECK(0.5 * (q1.omega_minus + q1.omega_plus) == doctest::Approx(1.0));
  CHECK(0.5 * (b1.omega_minus + b1.omega_plus) > 1.0);
}

TEST_CASE("ground-state energy") {
  CHECK(ground_state_energy(0.0, 1.0) == 0.0);
  CHECK(ground_state_energy(0.5, 1.0) == doctest::Approx(0.118034).epsilon(1e-6));
  for (double eta : {0.1, 0.3, 0.5, 1.0}) {
    const PolePair r = hopfield_poles_resonant(eta, 1.0);
    CHECK(std::abs(ground_state_energy(eta, 1.0) - (0.5 * (r.omega_plus + r.omega_minus) - 1.0)) <= 1e-12);
  }
  const ComplexMatrix h = build_hamiltonian(hopfield(0.5, 40));
  const EigenSystem e = hermitian_eig_lowest(h, 1);
  CHECK(std::abs(e.values(0) - ground_state_energy(0.5, 1.0)) <= 1e-5);
}
