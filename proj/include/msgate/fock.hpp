#pragma once

// Truncated-Fock-space oracle for the two-spin + one-mode system.
//
// Effective Hamiltonian in the qubit rotating frame (x, p dimensionless,
// [x, p] = i):
//   H(t) = -sqrt2 Omega(t) [cos(theta(t)) p + sin(theta(t)) x] S_y + H_Z(t)
//   H_Z(t) = P^2(t) [w_z1 sigma_z^1 + w_z2 sigma_z^2] / 2
// with theta(t) = delta t plus any accumulated detuning-error phase.  The
// overall drive sign is fixed by requiring that the error-free propagation
// reproduce the F, G, A integrals (checked in the test suite, not assumed).
// The compensation tone makes each qubit frame track its own shift, which
// cancels H_Z in this frame.
//
// Time stepping: commutator-free fourth-order Magnus (two exponentials per
// step, Gauss nodes), exponentials applied by truncated Taylor action.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "common.hpp"
#include "envelope.hpp"
#include "solver.hpp"

namespace msgate {

using cxd = std::complex<double>;

struct ErrorModel {
  double static_detuning = 0.0;                  // rad/s
  std::array<double, 2> zeeman_peak_hz{0.0, 0.0};
  double heating_rate = 0.0;                     // quanta/s
  bool compensation = false;
  // Carrier and mode frequencies; metadata for waveform provenance only.
  double omega0_hz = 1082.55e6;
  double omega_r_hz = 6.16e6;
};

struct ThermalSpec {
  double nbar = 0.0;
  int fock_cutoff = 0;  // 0 selects the cutoff automatically
};

// Occupation weights of a thermal state truncated where the residual tail
// drops below `tail`.
inline std::vector<double> thermal_weights(double nbar, double tail = 1e-8) {
  if (nbar < 0.0) throw invalid_parameter("thermal_weights: nbar must be >= 0");
  if (nbar == 0.0) return {1.0};
  std::vector<double> w;
  double q = nbar / (1.0 + nbar);
  double wn = 1.0 / (1.0 + nbar);
  double rest = 1.0;
  while (rest > tail) {
    w.push_back(wn);
    rest -= wn;
    wn *= q;
  }
  double sum = 0.0;
  for (double v : w) sum += v;
  for (double& v : w) v /= sum;
  return w;
}

namespace detail {

inline int auto_cutoff(double nbar) {
  int n0max = static_cast<int>(thermal_weights(nbar).size()) - 1;
  return std::max(40, n0max + 26);
}

inline double cf4_max_step(const GateSolution& sol) {
  double f = std::max(std::abs(sol.delta), sol.omega_ms()) / two_pi;
  return 1.0 / (200.0 * f);
}

// Propagates a state vector through one gate; spin index s in {uu, ud, du, dd}
// is the slow index, mode index n the fast one.
class FockPropagator {
 public:
  FockPropagator(const GateSolution& sol, const ErrorModel& errors, int cutoff,
                 double step_scale = 1.0, const std::vector<double>& extra_edges = {})
      : env_(sol.envelope),
        delta_(sol.delta),
        n_(cutoff),
        wz_{hz_to_rad(errors.zeeman_peak_hz[0]), hz_to_rad(errors.zeeman_peak_hz[1])},
        zeeman_(!errors.compensation &&
                (errors.zeeman_peak_hz[0] != 0.0 || errors.zeeman_peak_hz[1] != 0.0)) {
    if (cutoff < 2) throw invalid_parameter("fock: cutoff too small");
    if (step_scale <= 0.0) throw invalid_parameter("fock: step_scale must be positive");
    sq_.resize(n_ + 1);
    for (int i = 0; i <= n_; ++i) sq_[i] = std::sqrt(static_cast<double>(i));
    build_grid(sol, step_scale, extra_edges);
  }

  int dim() const { return 4 * n_; }
  int cutoff() const { return n_; }
  const std::vector<double>& step_times() const { return times_; }

  // eps(i): extra detuning (rad/s) held constant across step i.
  // observer(i, t): called before step 0 and after every step.
  void run(std::vector<cxd>& psi, const std::function<double(int)>& eps,
           const std::function<void(int, double)>& observer = nullptr) const {
    double chi = 0.0;
    if (observer) observer(0, times_.front());
    auto steps = static_cast<int>(times_.size()) - 1;
    for (int i = 0; i < steps; ++i) {
      double e = eps ? eps(i) : 0.0;
      step(psi, times_[i], times_[i + 1] - times_[i], chi, e);
      chi += e * (times_[i + 1] - times_[i]);
      if (observer) observer(i + 1, times_[i + 1]);
    }
  }

  // One CF4 step from t0 with the drive phase theta(t) = delta t + chi + eps (t - t0).
  void step(std::vector<cxd>& psi, double t0, double dt, double chi, double eps) const {
    constexpr double node1 = 0.21132486540518713;  // 1/2 - sqrt(3)/6
    constexpr double node2 = 0.78867513459481287;
    constexpr double wplus = 0.53867513459481287;  // 1/4 + sqrt(3)/6
    constexpr double wminus = -0.03867513459481287;
    double t1 = t0 + node1 * dt, t2 = t0 + node2 * dt;
    NodeData h1 = node_data(t1, chi + eps * (t1 - t0));
    NodeData h2 = node_data(t2, chi + eps * (t2 - t0));
    apply_exponential(psi, dt, combine(h1, h2, wplus, wminus));
    apply_exponential(psi, dt, combine(h1, h2, wminus, wplus));
  }

  // Trace over the mode: 4x4 spin density matrix entries, row-major.
  std::array<cxd, 16> spin_density(const std::vector<cxd>& psi) const {
    std::array<cxd, 16> rho{};
    for (int s = 0; s < 4; ++s)
      for (int r = 0; r < 4; ++r) {
        cxd acc = 0.0;
        for (int m = 0; m < n_; ++m) acc += psi[s * n_ + m] * std::conj(psi[r * n_ + m]);
        rho[s * 4 + r] = acc;
      }
    return rho;
  }

  std::vector<cxd> initial_state(int n0) const {
    if (n0 < 0 || n0 >= n_) throw invalid_parameter("fock: initial occupation beyond cutoff");
    std::vector<cxd> psi(dim(), 0.0);
    psi[3 * n_ + n0] = 1.0;  // |dd> (x) |n0>
    return psi;
  }

  struct NodeData {
    cxd lower;               // coefficient multiplying sqrt(n) v_{n-1} in the mode operator
    double z1, z2;           // P^2-weighted Zeeman terms, rad/s
  };

  NodeData node_data(double t, double chi_t) const {
    double om = env_.evaluate(t);
    double theta = delta_ * t + chi_t;
    // -sqrt2 Omega S_y (x) M with M v|_n = cm sqrt(n) v_{n-1} + conj(cm) sqrt(n+1) v_{n+1},
    // cm = i e^{-i theta} / sqrt2.
    cxd cm = cxd(0.0, 1.0) * std::exp(cxd(0.0, -theta)) / sqrt2;
    NodeData d;
    d.lower = -sqrt2 * om * cm;
    double p2 = 0.0;
    if (zeeman_) {
      double pp = env_.p(t);
      p2 = pp * pp;
    }
    d.z1 = zeeman_ ? p2 * wz_[0] : 0.0;
    d.z2 = zeeman_ ? p2 * wz_[1] : 0.0;
    return d;
  }

  static NodeData combine(const NodeData& a, const NodeData& b, double wa, double wb) {
    return {wa * a.lower + wb * b.lower, wa * a.z1 + wb * b.z1, wa * a.z2 + wb * b.z2};
  }

  // out = A v for the combined generator A = S_y (x) T + non-trivial H_Z part.
  void apply_generator(const NodeData& d, const std::vector<cxd>& v,
                       std::vector<cxd>& out) const {
    // mode operator T on each spin block into scratch
    scratch_.resize(v.size());
    for (int s = 0; s < 4; ++s) {
      const cxd* in = v.data() + s * n_;
      cxd* w = scratch_.data() + s * n_;
      cxd lo = d.lower;
      cxd up = std::conj(d.lower);
      w[0] = up * sq_[1] * in[1];
      for (int m = 1; m < n_ - 1; ++m)
        w[m] = lo * sq_[m] * in[m - 1] + up * sq_[m + 1] * in[m + 1];
      w[n_ - 1] = lo * sq_[n_ - 1] * in[n_ - 2];
    }
    // spin mixing by S_y across the blocks
    const cxd* uu = scratch_.data();
    const cxd* ud = scratch_.data() + n_;
    const cxd* du = scratch_.data() + 2 * n_;
    const cxd* dd = scratch_.data() + 3 * n_;
    constexpr cxd ih(0.0, 0.5);  // i/2
    for (int m = 0; m < n_; ++m) {
      out[m] = -ih * (ud[m] + du[m]);
      out[n_ + m] = ih * (uu[m] - dd[m]);
      out[2 * n_ + m] = ih * (uu[m] - dd[m]);
      out[3 * n_ + m] = ih * (ud[m] + du[m]);
    }
    if (d.z1 != 0.0 || d.z2 != 0.0) {
      double zuu = 0.5 * (d.z1 + d.z2);
      double zud = 0.5 * (d.z1 - d.z2);
      for (int m = 0; m < n_; ++m) {
        out[m] += zuu * v[m];
        out[n_ + m] += zud * v[n_ + m];
        out[2 * n_ + m] += -zud * v[2 * n_ + m];
        out[3 * n_ + m] += -zuu * v[3 * n_ + m];
      }
    }
  }

  // psi <- exp(-i dt A) psi by Taylor series; safe because ||A|| dt << 1 at
  // the mandated step bound.
  void apply_exponential(std::vector<cxd>& psi, double dt, const NodeData& d) const {
    term_.assign(psi.begin(), psi.end());
    double ref = 0.0;
    for (const cxd& z : psi) ref += std::norm(z);
    ref = std::sqrt(ref);
    for (int k = 1; k <= 60; ++k) {
      next_.resize(term_.size());
      apply_generator(d, term_, next_);
      cxd factor = cxd(0.0, -dt / k);
      double mag = 0.0;
      for (std::size_t j = 0; j < psi.size(); ++j) {
        term_[j] = factor * next_[j];
        psi[j] += term_[j];
        mag += std::norm(term_[j]);
      }
      if (std::sqrt(mag) < 1e-16 * std::max(ref, 1e-300)) return;
    }
    throw numeric_failure("fock: Taylor exponential failed to converge; step too large", dt);
  }

 private:
  void build_grid(const GateSolution& sol, double step_scale,
                  const std::vector<double>& extra_edges) {
    double tau = sol.tau();
    double hmax = cf4_max_step(sol) * step_scale;
    std::vector<double> edges = env_.breakpoints();
    for (double t : extra_edges) {
      if (t < -1e-15 * tau || t > tau * (1.0 + 1e-15))
        throw invalid_parameter("fock: sample time outside the gate window");
      edges.push_back(std::clamp(t, 0.0, tau));
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [tau](double a, double b) { return b - a < 1e-15 * tau; }),
                edges.end());
    times_.clear();
    times_.push_back(0.0);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      double a = edges[i], b = edges[i + 1];
      int steps = std::max(1, static_cast<int>(std::ceil((b - a) / hmax)));
      for (int j = 1; j <= steps; ++j) times_.push_back(a + (b - a) * j / steps);
    }
    if (std::abs(times_.back() - tau) > 1e-15 * tau) times_.push_back(tau);
  }

  PulseEnvelope env_;
  double delta_;
  int n_;
  std::array<double, 2> wz_;
  bool zeeman_;
  std::vector<double> sq_;
  std::vector<double> times_;
  mutable std::vector<cxd> scratch_, term_, next_;
};

// Density-matrix propagation with the infinite-temperature heating dissipator
//   L rho = ndot (D[a] + D[a+]) rho,
// split symmetrically around the unitary CF4 step.
class FockDensityPropagator {
 public:
  FockDensityPropagator(const GateSolution& sol, const ErrorModel& errors, int cutoff,
                        double step_scale = 1.0, const std::vector<double>& extra_edges = {})
      : prop_(sol, errors, cutoff, step_scale, extra_edges), rate_(errors.heating_rate) {
    if (rate_ < 0.0) throw invalid_parameter("fock: heating_rate must be >= 0");
  }

  const FockPropagator& base() const { return prop_; }

  std::vector<cxd> initial_thermal(double nbar, double tail = 1e-8) const {
    int n = prop_.cutoff();
    std::vector<cxd> rho(static_cast<std::size_t>(16) * n * n, 0.0);
    auto w = thermal_weights(nbar, tail);
    if (static_cast<int>(w.size()) > n)
      throw invalid_parameter("fock: cutoff too small for requested nbar");
    // |dd><dd| (x) thermal
    for (std::size_t n0 = 0; n0 < w.size(); ++n0)
      rho_at(rho, 3, 3, static_cast<int>(n0), static_cast<int>(n0)) = w[n0];
    return rho;
  }

  void run(std::vector<cxd>& rho, const std::function<void(int, double)>& observer = nullptr,
           double eps = 0.0) const {
    const auto& times = prop_.step_times();
    double chi = 0.0;
    if (observer) observer(0, times.front());
    auto steps = static_cast<int>(times.size()) - 1;
    for (int i = 0; i < steps; ++i) {
      double dt = times[i + 1] - times[i];
      dissipate(rho, dt / 2);
      unitary_step(rho, times[i], dt, chi, eps);
      dissipate(rho, dt / 2);
      chi += eps * dt;
      if (observer) observer(i + 1, times[i + 1]);
    }
  }

  std::array<cxd, 16> spin_density(const std::vector<cxd>& rho) const {
    int n = prop_.cutoff();
    std::array<cxd, 16> out{};
    for (int s = 0; s < 4; ++s)
      for (int r = 0; r < 4; ++r) {
        cxd acc = 0.0;
        for (int m = 0; m < n; ++m) acc += rho_at_c(rho, s, r, m, m);
        out[s * 4 + r] = acc;
      }
    return out;
  }

 private:
  cxd& rho_at(std::vector<cxd>& rho, int s, int r, int m, int k) const {
    int n = prop_.cutoff();
    return rho[(static_cast<std::size_t>(s) * n + m) * (4 * n) + r * n + k];
  }
  const cxd& rho_at_c(const std::vector<cxd>& rho, int s, int r, int m, int k) const {
    int n = prop_.cutoff();
    return rho[(static_cast<std::size_t>(s) * n + m) * (4 * n) + r * n + k];
  }

  // rho <- U rho U+ with U the CF4 step applied columnwise.
  void unitary_step(std::vector<cxd>& rho, double t0, double dt, double chi, double eps) const {
    int d = prop_.dim();
    col_.resize(d);
    // columns
    for (int c = 0; c < d; ++c) {
      for (int r = 0; r < d; ++r) col_[r] = rho[static_cast<std::size_t>(r) * d + c];
      prop_.step(col_, t0, dt, chi, eps);
      for (int r = 0; r < d; ++r) rho[static_cast<std::size_t>(r) * d + c] = col_[r];
    }
    // rows: apply to the conjugate transpose columns
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) col_[c] = std::conj(rho[static_cast<std::size_t>(r) * d + c]);
      prop_.step(col_, t0, dt, chi, eps);
      for (int c = 0; c < d; ++c) rho[static_cast<std::size_t>(r) * d + c] = std::conj(col_[c]);
    }
  }

  // Second-order Taylor of exp(h L); h ndot is ~1e-5 at gate steps, so the
  // truncation error is far below the trace tolerance.
  void dissipate(std::vector<cxd>& rho, double h) const {
    if (rate_ == 0.0) return;
    l1_.resize(rho.size());
    lindblad(rho, l1_);
    l2_.resize(rho.size());
    lindblad(l1_, l2_);
    double g = h * rate_;
    for (std::size_t j = 0; j < rho.size(); ++j)
      rho[j] += g * l1_[j] + 0.5 * g * g * l2_[j];
  }

  // out = (D[a] + D[a+]) rho (unit rate).
  void lindblad(const std::vector<cxd>& rho, std::vector<cxd>& out) const {
    int n = prop_.cutoff();
    for (int s = 0; s < 4; ++s)
      for (int r = 0; r < 4; ++r)
        for (int m = 0; m < n; ++m)
          for (int k = 0; k < n; ++k) {
            cxd v = 0.0;
            // a rho a+ : sqrt((m+1)(k+1)) rho_{m+1,k+1}
            if (m + 1 < n && k + 1 < n)
              v += std::sqrt(double(m + 1) * (k + 1)) * rho_at_c(rho, s, r, m + 1, k + 1);
            // a+ rho a : sqrt(m k) rho_{m-1,k-1}
            if (m >= 1 && k >= 1)
              v += std::sqrt(double(m) * k) * rho_at_c(rho, s, r, m - 1, k - 1);
            // -1/2 {a+a + a a+, rho} = -(m + k + 1) rho_{mk}
            v -= (m + k + 1.0) * rho_at_c(rho, s, r, m, k);
            out[(static_cast<std::size_t>(s) * n + m) * (4 * n) + r * n + k] = v;
          }
  }

  FockPropagator prop_;
  double rate_;
  mutable std::vector<cxd> col_, l1_, l2_;
};

}  // namespace detail

}  // namespace msgate
