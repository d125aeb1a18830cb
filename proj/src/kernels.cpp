// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#include "kernels.hpp"

#include <map>

namespace nanofb::detail {

namespace {

inline void madd(double& re, double& im, const Complex& a, const Complex& b) {
  re += a.real() * b.real() - a.imag() * b.imag();
  im += a.real() * b.imag() + a.imag() * b.real();
}

}  // namespace

Csr Csr::from(const SparseOperator& s) {
  SparseOperator c = s;
  c.makeCompressed();
  Csr out;
  out.rows = static_cast<int>(c.rows());
  out.cols = static_cast<int>(c.cols());
  out.ptr.assign(c.outerIndexPtr(), c.outerIndexPtr() + c.rows() + 1);
  out.idx.assign(c.innerIndexPtr(), c.innerIndexPtr() + c.nonZeros());
  out.val.assign(c.valuePtr(), c.valuePtr() + c.nonZeros());
  return out;
}

CombinedCsr::CombinedCsr(const std::vector<SparseOperator>& terms) {
  if (terms.empty()) return;
  const int rows = static_cast<int>(terms.front().rows());
  std::vector<std::map<int, std::size_t>> pattern(rows);
  for (const auto& t : terms) {
    for (int i = 0; i < rows; ++i)
      for (SparseOperator::InnerIterator it(t, i); it; ++it) pattern[i].emplace(static_cast<int>(it.col()), 0);
  }
  combined_.rows = rows;
  combined_.cols = static_cast<int>(terms.front().cols());
  combined_.ptr.push_back(0);
  for (int i = 0; i < rows; ++i) {
    for (auto& [col, pos] : pattern[i]) {
      pos = combined_.idx.size();
      combined_.idx.push_back(col);
    }
    combined_.ptr.push_back(static_cast<int>(combined_.idx.size()));
  }
  combined_.val.assign(combined_.idx.size(), Complex(0.0));
  for (const auto& t : terms) {
    std::vector<Complex> v(combined_.idx.size(), Complex(0.0));
    for (int i = 0; i < rows; ++i)
      for (SparseOperator::InnerIterator it(t, i); it; ++it) v[pattern[i].at(static_cast<int>(it.col()))] += it.value();
    term_values_.push_back(std::move(v));
  }
}

void CombinedCsr::assemble(const std::vector<Complex>& coefficients, Csr& out) const {
  if (out.val.size() != combined_.val.size()) out = combined_;
  std::fill(out.val.begin(), out.val.end(), Complex(0.0));
  for (std::size_t k = 0; k < term_values_.size() && k < coefficients.size(); ++k) {
    const Complex c = coefficients[k];
    if (c == Complex(0.0)) continue;
    const auto& v = term_values_[k];
    for (std::size_t p = 0; p < v.size(); ++p) out.val[p] += c * v[p];
  }
}

void csr_right_adjoint(const ComplexMatrix& x, const Csr& s, ComplexMatrix& out) {
  out.setZero(x.rows(), s.rows);
  for (int j = 0; j < s.rows; ++j)
    for (int p = s.ptr[j]; p < s.ptr[j + 1]; ++p) out.col(j) += std::conj(s.val[p]) * x.col(s.idx[p]);
}

void csr_sandwich_add(const Csr& s, const ComplexMatrix& x, double alpha, ComplexMatrix& tmp, ComplexMatrix& out) {
  csr_right_adjoint(x, s, tmp);  // X S^+
  const ComplexMatrix sx = tmp.adjoint();  // S X
  for (int j = 0; j < s.rows; ++j)
    for (int p = s.ptr[j]; p < s.ptr[j + 1]; ++p) out.col(j) += (alpha * std::conj(s.val[p])) * sx.col(s.idx[p]);
}

Complex csr_trace_product(const Csr& s, const ComplexMatrix& x) {
  double re = 0.0, im = 0.0;
  for (int i = 0; i < s.rows; ++i)
    for (int p = s.ptr[i]; p < s.ptr[i + 1]; ++p) madd(re, im, s.val[p], x(s.idx[p], i));
  return {re, im};
}

}  // namespace nanofb::detail
