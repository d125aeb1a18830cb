// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
//
// Gaussian reduction of the beam-only conditional master equation.
// Quadrature vector r = (x, p), [x, p] = i. For H = r^T G r / 2 + f^T r and
// channels L_k = l_k^T r:
//   d<r>/dt   = A <r> + S f,        A = S G - sum_k S Im(l_k l_k^+)
//   dV/dt     = A V + V A^T + D,    D = sum_k S Re(l_k l_k^+) S^T
// where S = [[0, 1], [-1, 0]]. Homodyne monitoring of L with efficiency eta
// adds d<r> = sqrt(eta) h dW, h = 2 V Re(l) - S Im(l), and -eta h h^T to dV.
// The feedback drive f is linear in the conditional means, so it enters the
// mean dynamics only; the spread of conditional means M obeys
//   dM/dt = A_fb M + M A_fb^T + eta h h^T.
#include <algorithm>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "nanofb/reduced_beam.hpp"

namespace nanofb {

namespace {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;
using CVec2 = Eigen::Vector2cd;
using Mat4 = Eigen::Matrix4d;

const Complex kI(0.0, 1.0);

Mat2 symplectic() {
  Mat2 s;
  s << 0.0, 1.0, -1.0, 0.0;
  return s;
}

struct LinearModel {
  Mat2 A, A_fb, D;
  Mat2 A_r, D_r, R;  // Riccati form
  Vec2 c, s;         // h = 2 V c - s
  double eta = 0.0;
};

LinearModel build_model(const ControlGains& g, const ReducedCoeffs& rc, const DerivedParams& d,
                        const PhysicalParams& p) {
  const Mat2 S = symplectic();
  const double r2 = std::sqrt(2.0);
  const double w = p.omega_M;
  Mat2 G;
  G << w + 2.0 * rc.xi_M.real(), -2.0 * rc.xi_M.imag(), -2.0 * rc.xi_M.imag(), w - 2.0 * rc.xi_M.real();

  const CVec2 up = std::sqrt(d.gamma_M * d.nbar_M) / r2 * CVec2(1.0, -kI);
  const CVec2 down = std::sqrt(d.gamma_M * (d.nbar_M + 1.0)) / r2 * CVec2(1.0, kI);
  const CVec2 meas = std::sqrt(p.gamma_T) / r2 * CVec2(rc.C1 + rc.C2, kI * (rc.C1 - rc.C2));

  LinearModel m;
  m.A = S * G;
  m.D.setZero();
  for (const CVec2& l : {up, down, meas}) {
    const Eigen::Matrix2cd ll = l * l.adjoint();
    m.A -= S * ll.imag();
    m.D += S * ll.real() * S.transpose();
  }
  const Vec2 drive_dir = r2 * Vec2(rc.alpha_x.real(), -rc.alpha_x.imag());
  const Vec2 gain = r2 * (-g.v_x * Vec2(rc.alpha_x.real(), -rc.alpha_x.imag()) +
                          g.v_p * Vec2(rc.alpha_p.real(), -rc.alpha_p.imag()));
  m.A_fb = m.A + S * drive_dir * gain.transpose();

  m.eta = p.eta;
  m.c = meas.real();
  m.s = S * meas.imag();
  m.A_r = m.A + 2.0 * m.eta * m.s * m.c.transpose();
  m.D_r = m.D - m.eta * m.s * m.s.transpose();
  m.R = 4.0 * m.eta * m.c * m.c.transpose();
  return m;
}

Mat4 riccati_generator(const LinearModel& m) {
  Mat4 h;
  h.block<2, 2>(0, 0) = -m.A_r.transpose();
  h.block<2, 2>(0, 2) = m.R;
  h.block<2, 2>(2, 0) = m.D_r;
  h.block<2, 2>(2, 2) = m.A_r;
  return h;
}

// vec(A M + M A^T) = K vec(M), column-major vec
Mat4 lyapunov_operator(const Mat2& a) {
  Mat4 k = Mat4::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int q = 0; q < 2; ++q) {
        k(i + 2 * j, q + 2 * j) += a(i, q);  // A M
        k(i + 2 * j, i + 2 * q) += a(j, q);  // M A^T
      }
  return k;
}

double max_real_eig(const Eigen::MatrixXd& a) { return Eigen::EigenSolver<Eigen::MatrixXd>(a).eigenvalues().real().maxCoeff(); }

double max_abs_real_eig(const Eigen::MatrixXd& a) {
  return Eigen::EigenSolver<Eigen::MatrixXd>(a).eigenvalues().real().cwiseAbs().maxCoeff();
}

struct Propagator {
  Mat4 ric;   // exp(H tau)
  Mat2 mean;  // exp(A_fb tau)
  Mat4 lyap_k;
  Mat4 lyap_phi;  // int_0^tau exp(K s) ds
  double tau = 0.0;
};

Propagator make_propagator(const LinearModel& m, double tau) {
  Propagator pr;
  pr.tau = tau;
  pr.ric = (riccati_generator(m) * tau).exp();
  pr.mean = (m.A_fb * tau).exp();
  const Mat4 k = lyapunov_operator(m.A_fb);
  // exp([[K, I], [0, 0]] tau) = [[e^{K tau}, phi], [0, I]]
  Eigen::Matrix<double, 8, 8> aug = Eigen::Matrix<double, 8, 8>::Zero();
  aug.block<4, 4>(0, 0) = k * tau;
  aug.block<4, 4>(0, 4) = Mat4::Identity() * tau;
  const Eigen::Matrix<double, 8, 8> e = aug.exp();
  pr.lyap_k = e.block<4, 4>(0, 0);
  pr.lyap_phi = e.block<4, 4>(0, 4);
  return pr;
}

struct FlowState {
  Vec2 mean;
  Mat2 V, M;
};

FlowState from_moments(const GaussianMoments& x) {
  FlowState s;
  s.mean << x.mean_x, x.mean_p;
  s.V << x.V_x, x.C_xp, x.C_xp, x.V_p;
  s.M << x.V_mean_x, x.C_mean_xp, x.C_mean_xp, x.V_mean_p;
  return s;
}

GaussianMoments to_moments(const FlowState& s) {
  GaussianMoments x;
  x.mean_x = s.mean(0);
  x.mean_p = s.mean(1);
  x.V_x = s.V(0, 0);
  x.V_p = s.V(1, 1);
  x.C_xp = 0.5 * (s.V(0, 1) + s.V(1, 0));
  x.V_mean_x = s.M(0, 0);
  x.V_mean_p = s.M(1, 1);
  x.C_mean_xp = 0.5 * (s.M(0, 1) + s.M(1, 0));
  return x;
}

Mat2 noise_source(const LinearModel& m, const Mat2& v) {
  const Vec2 h = 2.0 * v * m.c - m.s;
  return m.eta * h * h.transpose();
}

void advance(FlowState& st, const LinearModel& m, const Propagator& pr) {
  const Mat2 q0 = noise_source(m, st.V);
  const Mat2 x = pr.ric.block<2, 2>(0, 0) + pr.ric.block<2, 2>(0, 2) * st.V;
  const Mat2 y = pr.ric.block<2, 2>(2, 0) + pr.ric.block<2, 2>(2, 2) * st.V;
  st.V = y * x.inverse();
  st.V = 0.5 * (st.V + st.V.transpose()).eval();

  // trapezoid in the source
  const Mat2 q = 0.5 * (q0 + noise_source(m, st.V));
  const Eigen::Vector4d qv = Eigen::Map<const Eigen::Vector4d>(q.data());
  Eigen::Vector4d mv = Eigen::Map<const Eigen::Vector4d>(st.M.data());
  mv = pr.lyap_k * mv + pr.lyap_phi * qv;
  st.M = Eigen::Map<const Mat2>(mv.data());
  st.M = 0.5 * (st.M + st.M.transpose()).eval();
  st.mean = pr.mean * st.mean;
}

double max_abs_eig(const Eigen::MatrixXd& a) { return Eigen::EigenSolver<Eigen::MatrixXd>(a).eigenvalues().cwiseAbs().maxCoeff(); }

// Keeps the Moebius factors well conditioned and, when resolving transients,
// the piecewise-constant noise source close to the moving covariance.
int substeps(const LinearModel& m, double window, bool resolve_oscillation) {
  const double growth = max_abs_real_eig(riccati_generator(m));
  double fast = std::max(growth, max_abs_real_eig(m.A_fb));
  if (resolve_oscillation) fast = std::max({fast, max_abs_eig(riccati_generator(m)), max_abs_eig(m.A_fb)});
  const double per_step = resolve_oscillation ? 0.02 : 0.5;
  return std::max(1, static_cast<int>(std::ceil(window * fast / per_step)));
}

bool finite_state(const FlowState& s) { return s.mean.allFinite() && s.V.allFinite() && s.M.allFinite(); }

double largest(const FlowState& s) {
  return std::max({s.mean.cwiseAbs().maxCoeff(), s.V.cwiseAbs().maxCoeff(), s.M.cwiseAbs().maxCoeff()});
}

double change(const FlowState& a, const FlowState& b) {
  const double v_scale = std::max(b.V.trace(), 1e-300);
  const double m_scale = std::max(b.M.trace(), 1e-12 * v_scale);
  const double mean_scale = std::sqrt(v_scale);
  double c = 0.0;
  auto rel = [&](double x, double y, double scale) {
    c = std::max(c, std::abs(x - y) / std::max(std::abs(y), 1e-12 * scale));
  };
  for (int i = 0; i < 2; ++i) {
    rel(a.mean(i), b.mean(i), mean_scale);
    for (int j = i; j < 2; ++j) {
      rel(a.V(i, j), b.V(i, j), v_scale);
      rel(a.M(i, j), b.M(i, j), m_scale);
    }
  }
  return c;
}

}  // namespace

GaussianMoments GaussianMoments::thermal(double nbar) {
  GaussianMoments x;
  x.V_x = x.V_p = nbar + 0.5;
  return x;
}

double GaussianMoments::nbar() const {
  return average_occupation(V_x, V_p, V_mean_x, V_mean_p, mean_x, mean_p);
}

const char* flow_status_name(FlowStatus s) {
  switch (s) {
    case FlowStatus::converged: return "converged";
    case FlowStatus::diverged: return "diverged";
    case FlowStatus::not_converged: return "not_converged";
  }
  return "?";
}

GaussianFlowResult gaussian_moment_flow(const ControlGains& g, const ReducedCoeffs& rc, const DerivedParams& d,
                                        const PhysicalParams& p, const GaussianMoments& x0,
                                        const GaussianFlowOptions& opt) {
  if (!(d.gamma_M > 0.0)) throw Error(ErrorCode::invalid_argument, "gaussian flow needs gamma_M > 0");
  if (std::abs(rc.chi) < 1e-6 * p.omega_T * p.omega_T) {
    throw Error(ErrorCode::near_singular_gain, "gaussian flow: near-singular gains");
  }
  const LinearModel m = build_model(g, rc, d, p);
  const double window = opt.window_gamma_M / d.gamma_M;
  const int n_sub = substeps(m, window, false);
  const Propagator pr = make_propagator(m, window / n_sub);
  const int max_windows = std::max(1, static_cast<int>(std::ceil(opt.horizon_gamma_M / opt.window_gamma_M)));

  GaussianFlowResult res;
  res.max_mean_growth_rate = max_real_eig(m.A_fb);
  FlowState st = from_moments(x0);
  for (int w = 0; w < max_windows; ++w) {
    const FlowState before = st;
    for (int k = 0; k < n_sub; ++k) advance(st, m, pr);
    res.windows = w + 1;
    res.time = window * res.windows;
    if (!finite_state(st) || largest(st) > opt.divergence_limit) {
      res.status = FlowStatus::diverged;
      res.moments = to_moments(st);
      return res;
    }
    res.last_change = change(before, st);
    if (res.last_change < opt.tolerance) {
      res.status = FlowStatus::converged;
      res.moments = to_moments(st);
      return res;
    }
  }
  res.status = res.max_mean_growth_rate > 0.0 ? FlowStatus::diverged : FlowStatus::not_converged;
  res.moments = to_moments(st);
  return res;
}

GaussianMoments gaussian_moments_at(const ControlGains& g, const ReducedCoeffs& rc, const DerivedParams& d,
                                    const PhysicalParams& p, const GaussianMoments& x0, double t) {
  if (t < 0.0) throw Error(ErrorCode::invalid_argument, "gaussian_moments_at: negative time");
  FlowState st = from_moments(x0);
  if (t == 0.0) return x0;
  const LinearModel m = build_model(g, rc, d, p);
  const int n_sub = substeps(m, t, true);
  const Propagator pr = make_propagator(m, t / n_sub);
  for (int k = 0; k < n_sub; ++k) advance(st, m, pr);
  return to_moments(st);
}

}  // namespace nanofb
