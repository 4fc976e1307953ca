#include "usc/operator_kit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace usc {

HilbertSpace::HilbertSpace(int cavity_dim, int matter_dim, MatterKind kind)
    : cavity_dim_(cavity_dim), matter_dim_(matter_dim), kind_(kind) {
  if (cavity_dim_ < 2) {
    throw DimensionError("cavity Fock truncation must be >= 2, got " + std::to_string(cavity_dim_));
  }
  if (kind_ == MatterKind::Boson && matter_dim_ < 2) {
    throw DimensionError("matter Fock truncation must be >= 2, got " + std::to_string(matter_dim_));
  }
}

HilbertSpace HilbertSpace::boson(int cavity_dim, int matter_dim) {
  return HilbertSpace(cavity_dim, matter_dim, MatterKind::Boson);
}

HilbertSpace HilbertSpace::two_level(int cavity_dim) {
  return HilbertSpace(cavity_dim, 2, MatterKind::TwoLevel);
}

ComplexMatrix annihilation(int n) {
  if (n < 2) throw DimensionError("annihilation operator needs n >= 2, got " + std::to_string(n));
  ComplexMatrix a = ComplexMatrix::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = std::sqrt(static_cast<double>(i + 1));
  return a;
}

ComplexMatrix tls_lowering() {
  ComplexMatrix sm = ComplexMatrix::Zero(2, 2);
  sm(0, 1) = 1.0;
  return sm;
}

ComplexMatrix embed(const ComplexMatrix& op, Slot slot, const HilbertSpace& space) {
  const int n = space.factor_dim(slot);
  if (op.rows() != n || op.cols() != n) {
    std::ostringstream msg;
    msg << "embed: operator is " << op.rows() << "x" << op.cols() << " but the "
        << (slot == Slot::Cavity ? "cavity" : "matter") << " factor has dimension " << n;
    throw DimensionError(msg.str());
  }
  if (slot == Slot::Cavity) {
    return Eigen::kroneckerProduct(op, ComplexMatrix::Identity(space.matter_dim(), space.matter_dim())).eval();
  }
  return Eigen::kroneckerProduct(ComplexMatrix::Identity(space.cavity_dim(), space.cavity_dim()), op).eval();
}

double max_abs(const ComplexMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

double hermiticity_error(const ComplexMatrix& a) {
  return max_abs(a - a.adjoint());
}

bool is_hermitian(const ComplexMatrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  return hermiticity_error(a) <= rel_tol * max_abs(a);
}

namespace {

// Connected components of the nonzero pattern.
std::vector<std::vector<Eigen::Index>> decoupled_blocks(const ComplexMatrix& a) {
  const Eigen::Index n = a.rows();
  std::vector<Eigen::Index> parent(n);
  for (Eigen::Index i = 0; i < n; ++i) parent[i] = i;
  const auto root = [&parent](Eigen::Index i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      if (a(i, j) != Complex(0.0)) parent[root(i)] = root(j);
    }
  }
  std::vector<std::vector<Eigen::Index>> out;
  std::vector<Eigen::Index> slot(n, -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index r = root(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<Eigen::Index>(out.size());
      out.emplace_back();
    }
    out[slot[r]].push_back(i);
  }
  return out;
}

// Lowest `count` eigenpairs of a dense Hermitian block (lower triangle used).
EigenSystem dense_eig(ComplexMatrix v, int count) {
  const lapack_int n = static_cast<lapack_int>(v.rows());
  if (count >= n) {
    RealVector w(n);
    const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, v.data(), n, w.data());
    if (info != 0) throw NumericalError("hermitian_eig: zheevd failed (info = " + std::to_string(info) + ")");
    return EigenSystem{std::move(w), std::move(v)};
  }
  RealVector w(n);
  ComplexMatrix z(n, count);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(count));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, v.data(), n, 0.0, 0.0, 1, count, 0.0,
                                         &found, w.data(), z.data(), n, support.data());
  if (info != 0 || found != count) {
    throw NumericalError("hermitian_eig: zheevr failed (info = " + std::to_string(info) + ")");
  }
  return EigenSystem{w.head(count), std::move(z)};
}

}  // namespace

EigenSystem hermitian_eig_lowest(const ComplexMatrix& a, int count) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw DimensionError("hermitian_eig: matrix must be square and non-empty");
  }
  if (count < 1 || count > a.rows()) throw DimensionError("hermitian_eig: requested eigenpair count out of range");
  const double err = hermiticity_error(a);
  const double scale = max_abs(a);
  if (err > kNumericPolicy.hermiticity_rel * scale) {
    std::ostringstream msg;
    msg << "hermitian_eig: input is not Hermitian (max|A - A^dag| = " << err << ", max|A| = " << scale << ")";
    throw ContractError(msg.str());
  }
  const ComplexMatrix sym = 0.5 * (a + a.adjoint());
  const auto blocks = decoupled_blocks(sym);
  if (blocks.size() == 1) return dense_eig(sym, count);

  struct Entry {
    double value;
    std::size_t block;
    Eigen::Index col;
  };
  std::vector<EigenSystem> parts;
  std::vector<Entry> entries;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& idx = blocks[b];
    const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
    ComplexMatrix sub(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index i = 0; i < m; ++i) sub(i, j) = sym(idx[i], idx[j]);
    }
    parts.push_back(dense_eig(std::move(sub), static_cast<int>(std::min<Eigen::Index>(count, m))));
    for (Eigen::Index c = 0; c < parts.back().values.size(); ++c) entries.push_back({parts.back().values(c), b, c});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) { return x.value < y.value; });

  EigenSystem out{RealVector(count), ComplexMatrix::Zero(a.rows(), count)};
  for (int k = 0; k < count; ++k) {
    const Entry& e = entries[k];
    out.values(k) = e.value;
    const auto& idx = blocks[e.block];
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.vectors(idx[i], k) = parts[e.block].vectors(static_cast<Eigen::Index>(i), e.col);
    }
  }
  return out;
}

EigenSystem hermitian_eig(const ComplexMatrix& a) {
  return hermitian_eig_lowest(a, static_cast<int>(a.rows()));
}

LinearSolution solve_linear(const ComplexMatrix& a, const ComplexVector& rhs) {
  if (a.rows() != a.cols()) throw DimensionError("solve_linear: matrix must be square");
  if (rhs.size() != a.rows()) {
    throw DimensionError("solve_linear: rhs length " + std::to_string(rhs.size()) + " does not match dimension " +
                         std::to_string(a.rows()));
  }
  Eigen::PartialPivLU<ComplexMatrix> lu(a);
  LinearSolution out;
  out.rcond = lu.rcond();
  if (!(out.rcond >= kNumericPolicy.min_rcond)) {
    std::ostringstream msg;
    msg << "solve_linear: matrix is singular or ill-conditioned (rcond ~ " << out.rcond << ")";
    throw SolverError(msg.str(), out.rcond);
  }
  out.x = lu.solve(rhs);
  const double bnorm = rhs.norm();
  out.residual = bnorm == 0.0 ? (a * out.x).norm() : (a * out.x - rhs).norm() / bnorm;
  return out;
}

ComplexMatrix hermitian_function(const ComplexMatrix& a, MatrixFunction f) {
  const EigenSystem es = hermitian_eig(a);
  RealVector fv(es.dim());
  for (int i = 0; i < es.dim(); ++i) {
    fv(i) = f == MatrixFunction::Cos ? std::cos(es.values(i)) : std::sin(es.values(i));
  }
  return es.vectors * fv.asDiagonal() * es.vectors.adjoint();
}

ShiftedSolver::ShiftedSolver(const ComplexMatrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw DimensionError("ShiftedSolver: matrix must be square");
  const lapack_int n = static_cast<lapack_int>(a.rows());
  t_ = a;
  z_.resize(n, n);
  ComplexVector w(n);
  lapack_int sdim = 0;
  const lapack_int info =
      LAPACKE_zgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, n, t_.data(), n, &sdim, w.data(), z_.data(), n);
  if (info != 0) throw NumericalError("ShiftedSolver: zgees failed (info = " + std::to_string(info) + ")");
  t_.triangularView<Eigen::StrictlyLower>().setZero();
  scale_ = max_abs(a);
}

ComplexMatrix ShiftedSolver::solve_triangular(const std::vector<Complex>& shifts, ComplexMatrix y) const {
  const Eigen::Index n = t_.rows();
  for (std::size_t b = 0; b < shifts.size(); ++b) {
    const double scale = scale_ + std::abs(shifts[b]);
    const double pivot = (t_.diagonal().array() + shifts[b]).abs().minCoeff();
    const double rcond = scale > 0.0 ? pivot / scale : 0.0;
    if (!(rcond >= kNumericPolicy.min_rcond)) {
      std::ostringstream msg;
      msg << "shifted solve is singular at shift " << shifts[b] << " (pivot ratio " << rcond << ")";
      throw SolverError(msg.str(), rcond);
    }
  }
  // Column-oriented back substitution; each column of T is read once for
  // the whole batch of shifts.
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    for (std::size_t b = 0; b < shifts.size(); ++b) {
      const Eigen::Index c = static_cast<Eigen::Index>(b);
      y(i, c) /= t_(i, i) + shifts[b];
      if (i > 0) y.col(c).head(i).noalias() -= y(i, c) * t_.col(i).head(i);
    }
  }
  return y;
}

ComplexVector ShiftedSolver::solve(Complex shift, const ComplexVector& rhs) const {
  if (rhs.size() != t_.rows()) throw DimensionError("ShiftedSolver::solve: rhs length mismatch");
  return z_ * solve_triangular({shift}, z_.adjoint() * rhs);
}

ShiftedSolver::Projection ShiftedSolver::project(const ComplexVector& left, const ComplexVector& right) const {
  if (left.size() != t_.rows() || right.size() != t_.rows()) {
    throw DimensionError("ShiftedSolver::project: vector length mismatch");
  }
  return Projection{z_.transpose() * left, z_.adjoint() * right};
}

Complex ShiftedSolver::bilinear(Complex shift, const Projection& p) const {
  return bilinear(std::vector<Complex>{shift}, p).front();
}

std::vector<Complex> ShiftedSolver::bilinear(const std::vector<Complex>& shifts, const Projection& p) const {
  constexpr std::size_t batch = 8;
  std::vector<Complex> out;
  out.reserve(shifts.size());
  for (std::size_t start = 0; start < shifts.size(); start += batch) {
    const std::vector<Complex> chunk(shifts.begin() + start, shifts.begin() + std::min(shifts.size(), start + batch));
    const ComplexMatrix y = solve_triangular(chunk, p.right.replicate(1, static_cast<Eigen::Index>(chunk.size())));
    const Eigen::Matrix<Complex, 1, Eigen::Dynamic> v = p.left.transpose() * y;
    for (Eigen::Index c = 0; c < v.size(); ++c) out.push_back(v(c));
  }
  return out;
}

}  // namespace usc
