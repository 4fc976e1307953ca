#pragma once

// Dense complex linear algebra and elementary operators on truncated
// cavity (x) matter Hilbert spaces.
//
// Tensor ordering is cavity (x) matter everywhere: basis index
// i = n_cavity * matter_dim + m_matter. Build composite operators with
// embed() only.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "usc/errors.hpp"

namespace usc {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// Numerical tolerances shared by the whole library and its tests.
struct NumericPolicy {
  double hermiticity_rel = 1e-9;      // max|A - A^dag| <= tol * max|A|
  double orthonormality = 1e-10;      // max|V^dag V - 1|
  double reconstruction_rel = 1e-9;   // max|A - V L V^dag| <= tol * max|A|
  double min_rcond = 1e-14;           // below this a dense solve is rejected
  double solve_residual_rel = 1e-10;  // |Ax - b| <= tol * |b| for well-conditioned systems
};

inline constexpr NumericPolicy kNumericPolicy{};

enum class MatterKind { Boson, TwoLevel };
enum class Slot { Cavity, Matter };

/// Truncated product space: Fock cavity of dimension N_c times either a
/// Fock matter oscillator (N_m) or a two-level system.
class HilbertSpace {
 public:
  static HilbertSpace boson(int cavity_dim, int matter_dim);
  static HilbertSpace two_level(int cavity_dim);

  int cavity_dim() const { return cavity_dim_; }
  int matter_dim() const { return matter_dim_; }
  MatterKind matter_kind() const { return kind_; }
  int total_dim() const { return cavity_dim_ * matter_dim_; }
  int factor_dim(Slot slot) const { return slot == Slot::Cavity ? cavity_dim_ : matter_dim_; }

  bool operator==(const HilbertSpace&) const = default;

 private:
  HilbertSpace(int cavity_dim, int matter_dim, MatterKind kind);

  int cavity_dim_;
  int matter_dim_;
  MatterKind kind_;
};

/// Ascending eigenvalues with orthonormal column eigenvectors.
struct EigenSystem {
  RealVector values;
  ComplexMatrix vectors;

  int dim() const { return static_cast<int>(values.size()); }
};

struct LinearSolution {
  ComplexVector x;
  double rcond = 0.0;     // reciprocal condition estimate of A
  double residual = 0.0;  // |Ax - b| / |b|
};

enum class MatrixFunction { Cos, Sin };

/// Truncated bosonic lowering operator: entries (i, i+1) = sqrt(i+1).
ComplexMatrix annihilation(int n);

/// Two-level lowering operator sigma^-; basis order (ground, excited).
ComplexMatrix tls_lowering();

/// Kronecker product of `op` with the identity on the complementary factor.
ComplexMatrix embed(const ComplexMatrix& op, Slot slot, const HilbertSpace& space);

double max_abs(const ComplexMatrix& a);
double hermiticity_error(const ComplexMatrix& a);
bool is_hermitian(const ComplexMatrix& a, double rel_tol = kNumericPolicy.hermiticity_rel);

/// Eigendecomposition of a Hermitian matrix. Throws ContractError when the
/// input is not Hermitian to the policy tolerance. Blocks decoupled by exact
/// zeros (a conserved parity, say) are diagonalized separately.
EigenSystem hermitian_eig(const ComplexMatrix& a);

/// The `count` lowest eigenpairs only.
EigenSystem hermitian_eig_lowest(const ComplexMatrix& a, int count);

/// Dense LU solve with condition estimate. Throws SolverError when the
/// reciprocal condition number falls below the policy threshold.
LinearSolution solve_linear(const ComplexMatrix& a, const ComplexVector& rhs);

/// f(A) = V f(L) V^dag for Hermitian A.
ComplexMatrix hermitian_function(const ComplexMatrix& a, MatrixFunction f);

/// Repeated solves of (A + s 1) x = b for many complex shifts s.
///
/// A is reduced once to complex Schur form A = Z T Z^dag; each shift is
/// then a triangular solve, O(n^2) instead of a fresh factorization.
class ShiftedSolver {
 public:
  explicit ShiftedSolver(const ComplexMatrix& a);

  int dim() const { return static_cast<int>(t_.rows()); }

  /// Solves (A + shift) x = rhs.
  ComplexVector solve(Complex shift, const ComplexVector& rhs) const;

  /// Left and right vectors rotated into the Schur basis.
  struct Projection {
    ComplexVector left;   // Z^T l
    ComplexVector right;  // Z^dag r
  };
  Projection project(const ComplexVector& left, const ComplexVector& right) const;

  /// l^T (A + shift)^{-1} r using a precomputed projection.
  Complex bilinear(Complex shift, const Projection& p) const;
  std::vector<Complex> bilinear(const std::vector<Complex>& shifts, const Projection& p) const;

 private:
  ComplexMatrix solve_triangular(const std::vector<Complex>& shifts, ComplexMatrix y) const;

  ComplexMatrix t_;
  ComplexMatrix z_;
  double scale_ = 0.0;
};

}  // namespace usc
