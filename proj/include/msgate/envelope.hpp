#pragma once

// Dimensionless pulse envelopes P(t) and the Rabi profile Omega(t) = Omega_MS * P(t).

#include <cmath>
#include <cstdint>
#include <vector>

#include "common.hpp"

namespace msgate {

enum class EnvelopeKind { Square, SinN, Walsh };

inline const char* kind_name(EnvelopeKind k) {
  switch (k) {
    case EnvelopeKind::Square: return "square";
    case EnvelopeKind::SinN: return "sinn";
    case EnvelopeKind::Walsh: return "walsh";
  }
  return "?";
}

// Sequency-ordered Walsh function: index = number of sign changes on [0, 1).
// Segment signs come from the Gray code of the index applied to bit-reversed
// segment numbers; see Beauchamp, "Applications of Walsh and Related Functions".
inline int walsh_segment_count(int index) {
  int segs = 1;
  while (segs < index + 1) segs *= 2;
  return segs;
}

inline std::vector<int> walsh_signs(int index) {
  if (index < 0) throw invalid_parameter("walsh_signs: negative index");
  int segs = walsh_segment_count(index);
  int levels = 0;
  while ((1 << levels) < segs) ++levels;
  unsigned gray = static_cast<unsigned>(index) ^ (static_cast<unsigned>(index) >> 1);
  std::vector<int> signs(segs);
  for (int i = 0; i < segs; ++i) {
    int parity = 0;
    for (int j = 0; j < levels; ++j)
      if ((gray >> j) & 1u) parity ^= (i >> (levels - 1 - j)) & 1;
    signs[i] = parity ? -1 : 1;
  }
  return signs;
}

class PulseEnvelope {
 public:
  EnvelopeKind kind() const { return kind_; }
  double omega_ms() const { return omega_ms_; }
  double duration() const { return duration_; }
  int n() const { return n_; }
  int m() const { return m_; }
  int walsh_index() const { return walsh_index_; }
  const std::vector<int>& segments() const { return segments_; }

  // Dimensionless P(t); identically zero outside [0, duration].
  double p(double t) const {
    if (t < 0.0 || t > duration_) return 0.0;
    switch (kind_) {
      case EnvelopeKind::Square:
        return 1.0;
      case EnvelopeKind::SinN:
        return std::pow(std::sin(m_ * pi * t / duration_), n_);
      case EnvelopeKind::Walsh: {
        auto segs = static_cast<int>(segments_.size());
        int i = static_cast<int>(t / duration_ * segs);
        if (i >= segs) i = segs - 1;
        return static_cast<double>(segments_[i]);
      }
    }
    return 0.0;
  }

  double evaluate(double t) const { return omega_ms_ * p(t); }

  // Integral of Omega^2 over the pulse; proportional to dissipated energy.
  double pulse_energy() const {
    double w2t = omega_ms_ * omega_ms_ * duration_;
    switch (kind_) {
      case EnvelopeKind::Square:
      case EnvelopeKind::Walsh:
        return w2t;
      case EnvelopeKind::SinN:
        return w2t * sin_power_mean(2 * n_);
    }
    return 0.0;
  }

  // Times where P(t) is discontinuous or kinked; quadrature splits here.
  std::vector<double> breakpoints() const {
    std::vector<double> b{0.0};
    if (kind_ == EnvelopeKind::Walsh) {
      auto segs = static_cast<int>(segments_.size());
      for (int i = 1; i < segs; ++i) b.push_back(duration_ * i / segs);
    }
    b.push_back(duration_);
    return b;
  }

  static PulseEnvelope square(double omega_ms, double tau) {
    check_common(omega_ms, tau);
    PulseEnvelope e;
    e.kind_ = EnvelopeKind::Square;
    e.omega_ms_ = omega_ms;
    e.duration_ = tau;
    return e;
  }

  static PulseEnvelope sinn(double omega_ms, int n, int m, double tau) {
    check_common(omega_ms, tau);
    if (n < 1 || m < 1) throw invalid_parameter("sinn: need n >= 1 and m >= 1");
    PulseEnvelope e;
    e.kind_ = EnvelopeKind::SinN;
    e.omega_ms_ = omega_ms;
    e.duration_ = tau;
    e.n_ = n;
    e.m_ = m;
    return e;
  }

  static PulseEnvelope walsh(double omega_ms, double tau, int walsh_index) {
    check_common(omega_ms, tau);
    if (walsh_index < 0) throw invalid_parameter("walsh: negative index");
    PulseEnvelope e;
    e.kind_ = EnvelopeKind::Walsh;
    e.omega_ms_ = omega_ms;
    e.duration_ = tau;
    e.walsh_index_ = walsh_index;
    e.segments_ = walsh_signs(walsh_index);
    return e;
  }

  // Same envelope shape at a different duration (used by the solver).
  PulseEnvelope with_duration(double tau) const {
    PulseEnvelope e = *this;
    if (tau <= 0.0) throw invalid_parameter("with_duration: tau must be positive");
    e.duration_ = tau;
    return e;
  }

 private:
  // (1/pi) * integral of sin^p(u) du over [0, pi] for even p: (p-1)!! / p!!.
  static double sin_power_mean(int p) {
    double v = 1.0;
    for (int i = 2; i <= p; i += 2) v *= (i - 1.0) / i;
    return v;
  }

  static void check_common(double omega_ms, double tau) {
    if (omega_ms <= 0.0) throw invalid_parameter("envelope: omega_ms must be positive");
    if (tau <= 0.0) throw invalid_parameter("envelope: tau must be positive");
  }

  EnvelopeKind kind_ = EnvelopeKind::Square;
  double omega_ms_ = 0.0;
  double duration_ = 0.0;
  int n_ = 2;
  int m_ = 1;
  int walsh_index_ = 0;
  std::vector<int> segments_;
};

inline PulseEnvelope make_sinn(double omega_ms, int n, int m, double tau) {
  return PulseEnvelope::sinn(omega_ms, n, m, tau);
}

inline PulseEnvelope make_square(double omega_ms, double tau) {
  return PulseEnvelope::square(omega_ms, tau);
}

inline PulseEnvelope make_walsh(double omega_ms, double tau, int walsh_index) {
  return PulseEnvelope::walsh(omega_ms, tau, walsh_index);
}

inline double evaluate(const PulseEnvelope& env, double t) { return env.evaluate(t); }

inline double pulse_energy(const PulseEnvelope& env) { return env.pulse_energy(); }

}  // namespace msgate
