// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Compressed-row kernels for applying operators with a handful of entries
// per row to dense column-major density matrices.

#include <vector>

#include "nanofb/operators.hpp"

namespace nanofb::detail {

struct Csr {
  int rows = 0;
  int cols = 0;
  std::vector<int> ptr;
  std::vector<int> idx;
  std::vector<Complex> val;

  static Csr from(const SparseOperator& s);
  bool empty() const { return val.empty(); }
};

/// Several operators on one shared sparsity pattern; values are re-assembled
/// as a linear combination without reallocation.
class CombinedCsr {
 public:
  CombinedCsr() = default;
  explicit CombinedCsr(const std::vector<SparseOperator>& terms);
  void assemble(const std::vector<Complex>& coefficients, Csr& out) const;
  const Csr& pattern() const { return combined_; }
  std::size_t terms() const { return term_values_.size(); }

 private:
  Csr combined_;
  std::vector<std::vector<Complex>> term_values_;
};

// out = X S^+  (column axpys; the fast orientation for column-major X)
void csr_right_adjoint(const ComplexMatrix& x, const Csr& s, ComplexMatrix& out);
// out += alpha S X S^+ for Hermitian X, using tmp as scratch
void csr_sandwich_add(const Csr& s, const ComplexMatrix& x, double alpha, ComplexMatrix& tmp, ComplexMatrix& out);
// tr(S X)
Complex csr_trace_product(const Csr& s, const ComplexMatrix& x);

}  // namespace nanofb::detail
