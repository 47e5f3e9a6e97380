#pragma once

// Empirical switching-probability models fitted to the measured device, and
// the behavioral MTJ element used by the pulse engine. Currents in mA, pulse
// widths in ms to match the measurement axes.

#include <cmath>
#include <cstdint>
#include <string>

#include "spinbayes/errors.hpp"
#include "spinbayes/rng.hpp"

namespace spinbayes {

// Amplitude response is logistic in current; width response is a Weibull
// tail. Both are calibrated from two-point anchors with exact inverses.
struct SwitchCurve {
  // logistic amplitude model P(i) = 1 / (1 + exp(-(i - i50)/slope)),
  // defaults from the 1%@0.47mA / 99%@0.54mA anchors
  double i50_ma = 0.505;
  double slope_ma = 0.07 / (2.0 * std::log(99.0));
  double amp_min_ma = 0.44;
  double amp_max_ma = 0.58;
  // Weibull width model P(t) = 1 - exp(-(t/tau)^beta), defaults from the
  // 6%@1ms / 98%@50ms anchors (tau ~ 13.8 ms, beta ~ 1.06)
  double beta = std::log(std::log(0.02) / std::log(0.94)) / std::log(50.0);
  double tau_ms = std::pow(-std::log(0.94), -1.0 / beta);

  void validate() const {
    if (!(slope_ma > 0.0) || !std::isfinite(i50_ma))
      throw validation_error("amplitude curve needs finite i50 and slope > 0");
    if (!(amp_min_ma < amp_max_ma))
      throw validation_error("amplitude operating range is empty");
    if (!(tau_ms > 0.0) || !(beta > 0.0))
      throw validation_error("width curve needs tau > 0 and beta > 0");
  }

  // Calibrate the logistic branch so P(i_lo) = p_lo and P(i_hi) = p_hi.
  static SwitchCurve from_amplitude_anchors(double i_lo, double p_lo, double i_hi,
                                            double p_hi) {
    return from_amplitude_anchors(i_lo, p_lo, i_hi, p_hi, SwitchCurve{});
  }
  static SwitchCurve from_amplitude_anchors(double i_lo, double p_lo, double i_hi,
                                            double p_hi, SwitchCurve base) {
    if (!(i_lo < i_hi) || !(p_lo > 0.0) || !(p_lo < p_hi) || !(p_hi < 1.0))
      throw validation_error("amplitude anchors must satisfy i_lo < i_hi, 0 < p_lo < p_hi < 1");
    const double z_lo = std::log(p_lo / (1.0 - p_lo));
    const double z_hi = std::log(p_hi / (1.0 - p_hi));
    base.slope_ma = (i_hi - i_lo) / (z_hi - z_lo);
    base.i50_ma = i_lo - base.slope_ma * z_lo;
    base.validate();
    return base;
  }

  // Calibrate the Weibull branch so P(t_lo) = p_lo and P(t_hi) = p_hi.
  static SwitchCurve from_width_anchors(double t_lo, double p_lo, double t_hi,
                                        double p_hi) {
    return from_width_anchors(t_lo, p_lo, t_hi, p_hi, SwitchCurve{});
  }
  static SwitchCurve from_width_anchors(double t_lo, double p_lo, double t_hi,
                                        double p_hi, SwitchCurve base) {
    if (!(t_lo > 0.0) || !(t_lo < t_hi) || !(p_lo > 0.0) || !(p_lo < p_hi) || !(p_hi < 1.0))
      throw validation_error("width anchors must satisfy 0 < t_lo < t_hi, 0 < p_lo < p_hi < 1");
    const double l_lo = -std::log(1.0 - p_lo);
    const double l_hi = -std::log(1.0 - p_hi);
    base.beta = std::log(l_hi / l_lo) / std::log(t_hi / t_lo);
    base.tau_ms = t_lo / std::pow(l_lo, 1.0 / base.beta);
    base.validate();
    return base;
  }

  // Measured anchors: 1%@0.47mA, 99%@0.54mA; 6%@1ms, 98%@50ms.
  static SwitchCurve measured() {
    SwitchCurve c = from_amplitude_anchors(0.47, 0.01, 0.54, 0.99);
    return from_width_anchors(1.0, 0.06, 50.0, 0.98, c);
  }

  // Switching probability vs amplitude; currents outside the operating range
  // clamp to its edge (clamped flag reports that).
  double p_amplitude(double i_ma, bool* clamped = nullptr) const {
    if (!std::isfinite(i_ma)) throw validation_error("current must be finite");
    double i = i_ma;
    if (i < amp_min_ma) i = amp_min_ma;
    if (i > amp_max_ma) i = amp_max_ma;
    if (clamped) *clamped = i != i_ma;
    return 1.0 / (1.0 + std::exp(-(i - i50_ma) / slope_ma));
  }

  // Switching probability vs pulse width at the calibration amplitude.
  double p_width(double t_ms) const {
    if (!(t_ms > 0.0) || !std::isfinite(t_ms))
      throw validation_error("pulse width must be finite and > 0");
    return 1.0 - std::exp(-std::pow(t_ms / tau_ms, beta));
  }

  // Exact logit inverse of the amplitude model. Only probabilities attainable
  // inside the operating range are valid.
  double current_for_probability(double p) const {
    const double p_lo = p_amplitude(amp_min_ma);
    const double p_hi = p_amplitude(amp_max_ma);
    if (!(p >= p_lo) || !(p <= p_hi))
      throw validation_error("target probability " + std::to_string(p) +
                             " outside attainable [" + std::to_string(p_lo) + ", " +
                             std::to_string(p_hi) + "]");
    return i50_ma + slope_ma * std::log(p / (1.0 - p));
  }
};

enum class MtjState { Parallel, Antiparallel };

// Two-terminal MTJ bit: a write attempt from the reset (parallel) state
// succeeds with the curve probability; the read threshold sits between the
// two resistance levels.
struct MtjDevice {
  SwitchCurve curve = SwitchCurve::measured();
  double r_p_ohm = 10e3;
  double r_ap_ohm = 25e3;
  double r_ref_ohm = 16e3;
  MtjState state = MtjState::Parallel;

  void validate() const {
    curve.validate();
    if (!(r_p_ohm > 0.0) || !(r_ap_ohm > r_p_ohm))
      throw validation_error("need 0 < R_P < R_AP");
    const double ratio = r_ap_ohm / r_p_ohm;
    if (!(ratio >= 2.0) || !(ratio <= 3.0))
      throw validation_error("R_AP/R_P outside the device's 2..3 range");
    if (!(r_ref_ohm > r_p_ohm) || !(r_ref_ohm < r_ap_ohm))
      throw validation_error("read reference must sit between R_P and R_AP");
  }

  // One stochastic write pulse. Requires the device to be in the reset state.
  bool attempt_write(double i_ma, Rng& rng) {
    if (state != MtjState::Parallel)
      throw protocol_error("write attempted without a preceding reset");
    const bool flip = rng.bernoulli(curve.p_amplitude(i_ma));
    if (flip) state = MtjState::Antiparallel;
    return flip;
  }

  double resistance_ohm() const {
    return state == MtjState::Parallel ? r_p_ohm : r_ap_ohm;
  }

  // Non-destructive threshold read: 1 for the high (switched) state.
  int read() const { return resistance_ohm() > r_ref_ohm ? 1 : 0; }

  void reset() { state = MtjState::Parallel; }
};

} // namespace spinbayes
