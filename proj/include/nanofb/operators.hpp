// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <vector>

#include "nanofb/error.hpp"

namespace nanofb {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using SparseOperator = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

enum class Slot : int { beam = 0, qubit = 1, tlr = 2 };

/// Truncated beam (x) qubit (x) resonator space, factors in that order.
struct HilbertSpec {
  int n_beam = 10;
  int n_tlr = 6;
  static constexpr int n_qubit = 2;

  int dim() const { return n_beam * n_qubit * n_tlr; }
  int slot_dim(Slot s) const;
  std::vector<int> factor_dims() const { return {n_beam, n_qubit, n_tlr}; }
  void validate() const;
};

/// Density matrix together with the dimensions of its tensor factors.
/// A beam-only state has dims == {n_beam}.
struct DensityState {
  std::vector<int> dims;
  ComplexMatrix matrix;

  DensityState() = default;
  DensityState(std::vector<int> factor_dims, ComplexMatrix m);
  static DensityState on(const HilbertSpec& space, ComplexMatrix m);

  int dim() const { return static_cast<int>(matrix.rows()); }
  bool is_full_space() const { return dims.size() == 3 && dims[1] == 2; }
};

enum class Pauli { x, y, z, plus, minus };

ComplexMatrix identity(int n);
ComplexMatrix fock_annihilation(int levels);
ComplexMatrix number_operator(int levels);
ComplexMatrix pauli(Pauli which);
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

/// Kronecker product with identities on every other factor of `dims`.
ComplexMatrix embed(const ComplexMatrix& op, int factor, const std::vector<int>& dims);
ComplexMatrix embed(const ComplexMatrix& op, Slot slot, const HilbertSpec& space);

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);

// D[c]rho = c rho c^+ - 1/2 {c^+ c, rho}
ComplexMatrix dissipator(const ComplexMatrix& c, const ComplexMatrix& rho);
ComplexMatrix dissipator(const ComplexMatrix& c, const DensityState& rho);
// H[c]rho = c rho + rho c^+ - <c + c^+> rho
ComplexMatrix meas_superop(const ComplexMatrix& c, const ComplexMatrix& rho);
ComplexMatrix meas_superop(const ComplexMatrix& c, const DensityState& rho);

Complex expectation(const ComplexMatrix& op, const ComplexMatrix& rho);
Complex expectation(const ComplexMatrix& op, const DensityState& rho);
Complex expectation(const SparseOperator& op, const ComplexMatrix& rho);

/// Reduced state on the factors listed in `keep` (indices into rho.dims).
DensityState partial_trace(const DensityState& rho, const std::vector<int>& keep);
DensityState partial_trace(const DensityState& rho, const std::vector<Slot>& keep);

ComplexMatrix thermal_state(int levels, double nbar);
ComplexMatrix fock_state(int levels, int n);
ComplexMatrix coherent_state(int levels, Complex alpha);
ComplexMatrix pure_state(const Eigen::VectorXcd& psi);

double hermiticity_residual(const ComplexMatrix& m);
double min_eigenvalue(const ComplexMatrix& m);
double purity(const ComplexMatrix& rho);

/// Population of the top `top_levels` Fock levels of one factor.
double top_level_population(const DensityState& rho, int factor, int top_levels = 2);

inline constexpr double kLeakageWarning = 1e-4;
inline constexpr double kNegativityClamp = -1e-8;

/// Clamp eigenvalues below `threshold` to zero and (optionally) renormalize
/// the trace. Returns true when a clamp happened.
bool repair_positivity(ComplexMatrix& rho, double threshold = kNegativityClamp, bool renormalize = true);

/// Cheap check that rho + |threshold| I is positive definite.
bool is_positive_within(const ComplexMatrix& rho, double threshold = kNegativityClamp);

void require_square(const ComplexMatrix& m, const char* what);
void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* what);

SparseOperator to_sparse(const ComplexMatrix& m, double drop_tol = 0.0);

}  // namespace nanofb
