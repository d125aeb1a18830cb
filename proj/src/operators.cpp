// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#include "nanofb/operators.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace nanofb {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ok: return "ok";
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::shape: return "shape";
    case ErrorCode::regime: return "regime";
    case ErrorCode::detuning_sign: return "detuning-sign";
    case ErrorCode::blowup: return "integration-blowup";
    case ErrorCode::too_few_samples: return "too-few-samples";
    case ErrorCode::near_singular_gain: return "near-singular-gain";
    case ErrorCode::out_of_validity: return "out-of-validity";
    case ErrorCode::config: return "config";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::empty_input: return "empty-input";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

int HilbertSpec::slot_dim(Slot s) const {
  switch (s) {
    case Slot::beam: return n_beam;
    case Slot::qubit: return n_qubit;
    case Slot::tlr: return n_tlr;
  }
  throw Error(ErrorCode::invalid_argument, "invalid slot");
}

void HilbertSpec::validate() const {
  if (n_beam < 2 || n_tlr < 2) {
    throw Error(ErrorCode::dimension, "Fock truncations must be >= 2 (n_beam=" +
                                          std::to_string(n_beam) + ", n_tlr=" + std::to_string(n_tlr) + ")");
  }
}

DensityState::DensityState(std::vector<int> factor_dims, ComplexMatrix m)
    : dims(std::move(factor_dims)), matrix(std::move(m)) {
  const int total = std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<>());
  if (matrix.rows() != total || matrix.cols() != total) {
    throw Error(ErrorCode::shape, "density matrix is " + std::to_string(matrix.rows()) + "x" +
                                      std::to_string(matrix.cols()) + ", factors give " + std::to_string(total));
  }
}

DensityState DensityState::on(const HilbertSpec& space, ComplexMatrix m) {
  space.validate();
  return DensityState(space.factor_dims(), std::move(m));
}

ComplexMatrix identity(int n) { return ComplexMatrix::Identity(n, n); }

ComplexMatrix fock_annihilation(int levels) {
  if (levels < 2) {
    throw Error(ErrorCode::dimension, "Fock truncation must be >= 2, got " + std::to_string(levels));
  }
  ComplexMatrix a = ComplexMatrix::Zero(levels, levels);
  for (int n = 1; n < levels; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

ComplexMatrix number_operator(int levels) {
  if (levels < 2) {
    throw Error(ErrorCode::dimension, "Fock truncation must be >= 2, got " + std::to_string(levels));
  }
  ComplexMatrix n = ComplexMatrix::Zero(levels, levels);
  for (int k = 0; k < levels; ++k) n(k, k) = k;
  return n;
}

ComplexMatrix pauli(Pauli which) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  const Complex i(0.0, 1.0);
  switch (which) {
    case Pauli::x: m(0, 1) = 1.0; m(1, 0) = 1.0; break;
    case Pauli::y: m(0, 1) = -i; m(1, 0) = i; break;
    case Pauli::z: m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    case Pauli::plus: m(0, 1) = 1.0; break;
    case Pauli::minus: m(1, 0) = 1.0; break;
  }
  return m;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

ComplexMatrix embed(const ComplexMatrix& op, int factor, const std::vector<int>& dims) {
  if (factor < 0 || factor >= static_cast<int>(dims.size())) {
    throw Error(ErrorCode::invalid_argument, "factor index out of range");
  }
  if (op.rows() != dims[factor] || op.cols() != dims[factor]) {
    throw Error(ErrorCode::dimension, "operator is " + std::to_string(op.rows()) + "x" +
                                          std::to_string(op.cols()) + ", factor has dimension " +
                                          std::to_string(dims[factor]));
  }
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (int k = 0; k < static_cast<int>(dims.size()); ++k) {
    out = kron(out, k == factor ? op : identity(dims[k]));
  }
  return out;
}

ComplexMatrix embed(const ComplexMatrix& op, Slot slot, const HilbertSpec& space) {
  space.validate();
  return embed(op, static_cast<int>(slot), space.factor_dims());
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_shape(a, b, "commutator");
  return a * b - b * a;
}

void require_square(const ComplexMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::shape, std::string(what) + ": matrix must be square and non-empty");
  }
}

void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::shape, std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                                      std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                      std::to_string(b.cols()));
  }
}

ComplexMatrix dissipator(const ComplexMatrix& c, const ComplexMatrix& rho) {
  require_square(rho, "dissipator");
  require_same_shape(c, rho, "dissipator");
  const ComplexMatrix cdc = c.adjoint() * c;
  return c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc);
}

ComplexMatrix dissipator(const ComplexMatrix& c, const DensityState& rho) { return dissipator(c, rho.matrix); }

ComplexMatrix meas_superop(const ComplexMatrix& c, const ComplexMatrix& rho) {
  require_square(rho, "meas_superop");
  require_same_shape(c, rho, "meas_superop");
  const ComplexMatrix cr = c * rho;
  const double mean = 2.0 * cr.trace().real();
  return cr + cr.adjoint() - mean * rho;
}

ComplexMatrix meas_superop(const ComplexMatrix& c, const DensityState& rho) { return meas_superop(c, rho.matrix); }

Complex expectation(const ComplexMatrix& op, const ComplexMatrix& rho) {
  require_same_shape(op, rho, "expectation");
  // tr(A rho) = sum_ij A_ij rho_ji
  return (op.array() * rho.transpose().array()).sum();
}

Complex expectation(const ComplexMatrix& op, const DensityState& rho) { return expectation(op, rho.matrix); }

Complex expectation(const SparseOperator& op, const ComplexMatrix& rho) {
  if (op.rows() != rho.rows() || op.cols() != rho.cols()) {
    throw Error(ErrorCode::shape, "expectation: shape mismatch");
  }
  Complex acc = 0.0;
  for (Eigen::Index i = 0; i < op.outerSize(); ++i) {
    for (SparseOperator::InnerIterator it(op, i); it; ++it) acc += it.value() * rho(it.col(), i);
  }
  return acc;
}

namespace {

std::vector<int> digits(int index, const std::vector<int>& dims) {
  std::vector<int> d(dims.size());
  for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
    d[k] = index % dims[k];
    index /= dims[k];
  }
  return d;
}

}  // namespace

DensityState partial_trace(const DensityState& rho, const std::vector<int>& keep) {
  const int nf = static_cast<int>(rho.dims.size());
  std::vector<bool> kept(nf, false);
  for (int k : keep) {
    if (k < 0 || k >= nf) throw Error(ErrorCode::invalid_argument, "partial_trace: invalid factor " + std::to_string(k));
    kept[k] = true;
  }
  std::vector<int> keep_dims, trace_dims;
  for (int k = 0; k < nf; ++k) (kept[k] ? keep_dims : trace_dims).push_back(rho.dims[k]);
  const int nk = std::accumulate(keep_dims.begin(), keep_dims.end(), 1, std::multiplies<>());
  const int nt = std::accumulate(trace_dims.begin(), trace_dims.end(), 1, std::multiplies<>());

  // full index for (kept multi-index, traced multi-index)
  std::vector<int> stride(nf, 1);
  for (int k = nf - 2; k >= 0; --k) stride[k] = stride[k + 1] * rho.dims[k + 1];
  auto compose = [&](int ki, int ti) {
    const auto kd = digits(ki, keep_dims);
    const auto td = digits(ti, trace_dims);
    int idx = 0, a = 0, b = 0;
    for (int k = 0; k < nf; ++k) idx += stride[k] * (kept[k] ? kd[a++] : td[b++]);
    return idx;
  };
  std::vector<int> map(static_cast<size_t>(nk) * nt);
  for (int ki = 0; ki < nk; ++ki)
    for (int ti = 0; ti < nt; ++ti) map[static_cast<size_t>(ki) * nt + ti] = compose(ki, ti);

  ComplexMatrix out = ComplexMatrix::Zero(nk, nk);
  for (int r = 0; r < nk; ++r)
    for (int c = 0; c < nk; ++c) {
      Complex acc = 0.0;
      for (int t = 0; t < nt; ++t) acc += rho.matrix(map[static_cast<size_t>(r) * nt + t], map[static_cast<size_t>(c) * nt + t]);
      out(r, c) = acc;
    }
  if (keep_dims.empty()) keep_dims.push_back(1);
  return DensityState(keep_dims, out);
}

DensityState partial_trace(const DensityState& rho, const std::vector<Slot>& keep) {
  if (!rho.is_full_space()) throw Error(ErrorCode::invalid_argument, "slot-based partial trace needs a full-space state");
  std::vector<int> idx;
  for (Slot s : keep) idx.push_back(static_cast<int>(s));
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return partial_trace(rho, idx);
}

ComplexMatrix thermal_state(int levels, double nbar) {
  if (levels < 1) throw Error(ErrorCode::dimension, "thermal_state: levels must be positive");
  if (nbar < 0.0) throw Error(ErrorCode::invalid_argument, "thermal_state: negative occupation");
  ComplexMatrix rho = ComplexMatrix::Zero(levels, levels);
  if (nbar == 0.0) {
    rho(0, 0) = 1.0;
    return rho;
  }
  const double q = nbar / (1.0 + nbar);
  double p = 1.0 / (1.0 + nbar), total = 0.0;
  for (int n = 0; n < levels; ++n, p *= q) {
    rho(n, n) = p;
    total += p;
  }
  return rho / total;
}

ComplexMatrix fock_state(int levels, int n) {
  if (n < 0 || n >= levels) throw Error(ErrorCode::dimension, "fock_state: level out of range");
  ComplexMatrix rho = ComplexMatrix::Zero(levels, levels);
  rho(n, n) = 1.0;
  return rho;
}

ComplexMatrix coherent_state(int levels, Complex alpha) {
  Eigen::VectorXcd psi(levels);
  Complex c = 1.0;
  for (int n = 0; n < levels; ++n) {
    if (n > 0) c *= alpha / std::sqrt(static_cast<double>(n));
    psi(n) = c;
  }
  psi.normalize();
  return pure_state(psi);
}

ComplexMatrix pure_state(const Eigen::VectorXcd& psi) { return psi * psi.adjoint() / psi.squaredNorm(); }

double hermiticity_residual(const ComplexMatrix& m) {
  const double n = m.norm();
  if (n == 0.0) return 0.0;
  return (m - m.adjoint()).norm() / n;
}

double min_eigenvalue(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double purity(const ComplexMatrix& rho) { return expectation(rho, rho).real(); }

double top_level_population(const DensityState& rho, int factor, int top_levels) {
  const DensityState r = partial_trace(rho, std::vector<int>{factor});
  const int n = r.dim();
  double pop = 0.0;
  for (int k = std::max(0, n - top_levels); k < n; ++k) pop += r.matrix(k, k).real();
  return pop;
}

bool is_positive_within(const ComplexMatrix& rho, double threshold) {
  ComplexMatrix shifted = rho;
  shifted.diagonal().array() += std::abs(threshold);
  Eigen::LLT<ComplexMatrix> llt(shifted);
  return llt.info() == Eigen::Success;
}

bool repair_positivity(ComplexMatrix& rho, double threshold, bool renormalize) {
  if (is_positive_within(rho, threshold)) return false;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho);
  Eigen::VectorXd w = es.eigenvalues();
  if (w.minCoeff() >= threshold) return false;
  for (Eigen::Index k = 0; k < w.size(); ++k)
    if (w(k) < threshold) w(k) = 0.0;
  rho = es.eigenvectors() * w.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  const double tr = rho.trace().real();
  if (renormalize && tr > 0.0) rho /= tr;
  return true;
}

SparseOperator to_sparse(const ComplexMatrix& m, double drop_tol) {
  std::vector<Eigen::Triplet<Complex>> nz;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (std::abs(m(i, j)) > drop_tol) nz.emplace_back(static_cast<int>(i), static_cast<int>(j), m(i, j));
  SparseOperator s(m.rows(), m.cols());
  s.setFromTriplets(nz.begin(), nz.end());
  s.makeCompressed();
  return s;
}

}  // namespace nanofb
