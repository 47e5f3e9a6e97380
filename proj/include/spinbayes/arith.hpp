#pragma once

// Stochastic pulse arithmetic: AND-gate rate multiplication and the
// counter-and-feedback rate divider built around one MTJ output element.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "spinbayes/device.hpp"
#include "spinbayes/errors.hpp"
#include "spinbayes/pulse.hpp"
#include "spinbayes/rng.hpp"

namespace spinbayes {

// rate(a AND b) = rate(a) * rate(b) for independent trains.
inline PulseTrain and_multiply(const PulseTrain& a, const PulseTrain& b) {
  if (a.bits.size() != b.bits.size())
    throw validation_error("AND of trains with different lengths: " +
                           std::to_string(a.bits.size()) + " vs " +
                           std::to_string(b.bits.size()));
  PulseTrain out;
  out.bits.reserve(a.bits.size());
  for (std::size_t i = 0; i < a.bits.size(); ++i)
    out.bits.push_back(a.bits[i] & b.bits[i]);
  return out;
}

struct DividerConfig {
  int window_len = 64;
  double step_gain = 0.5;
  int burn_in_windows = 10;
  double initial_estimate = 0.5;
  double s2_rate_floor = 0.02; // below this the result is flagged unreliable
  SwitchCurve curve{};
  DacSpec dac{};

  void validate() const {
    if (window_len < 1) throw validation_error("divider window must be >= 1 cycles");
    if (!(step_gain > 0.0)) throw validation_error("divider gain must be > 0");
    if (burn_in_windows < 0) throw validation_error("burn-in must be >= 0 windows");
    if (!(initial_estimate > 0.0) || !(initial_estimate < 1.0))
      throw validation_error("initial estimate must lie in (0, 1)");
    curve.validate();
    dac.validate();
  }
};

// Servo loop solving s1 = s2 * so for the output rate so. Counters compare
// the s1 pulses against coincidences of s2 with the output element, and the
// output rate setting moves by gain * (error / window) each window, clamped
// to the DAC-attainable probability band.
class RateDivider {
 public:
  RateDivider(const DividerConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), rng_(seed) {
    cfg_.validate();
    mtj_.curve = cfg_.curve;
    p_floor_ = cfg_.curve.p_amplitude(cfg_.dac.i_min_ma);
    p_ceil_ = cfg_.curve.p_amplitude(cfg_.dac.i_max_ma);
    so_ = std::min(std::max(cfg_.initial_estimate, p_floor_), p_ceil_);
  }

  // One clock cycle; returns the output element's bit.
  bool step(bool s1_bit, bool s2_bit) {
    const double drive = cfg_.dac.quantize(cfg_.curve.current_for_probability(so_));
    const bool out = mtj_.attempt_write(drive, rng_);
    (void)mtj_.read();
    mtj_.reset();
    count_s1_ += s1_bit ? 1 : 0;
    count_s2so_ += (s2_bit && out) ? 1 : 0;
    if (++cycle_in_window_ == cfg_.window_len) {
      const double err = static_cast<double>(count_s1_ - count_s2so_) /
                         static_cast<double>(cfg_.window_len);
      so_ += cfg_.step_gain * err;
      so_ = std::min(std::max(so_, p_floor_), p_ceil_);
      windows_.push_back(so_);
      count_s1_ = 0;
      count_s2so_ = 0;
      cycle_in_window_ = 0;
    }
    return out;
  }

  double setting() const { return so_; }
  const std::vector<double>& window_settings() const { return windows_; }
  double p_floor() const { return p_floor_; }
  double p_ceil() const { return p_ceil_; }

  // Converged value: mean of the post-burn-in window settings, which
  // suppresses the servo's equilibrium jitter.
  double converged_estimate() const {
    const std::size_t skip = static_cast<std::size_t>(cfg_.burn_in_windows);
    if (windows_.size() <= skip)
      throw validation_error("divider needs more than " +
                             std::to_string(cfg_.burn_in_windows) +
                             " complete windows to converge");
    double sum = 0.0;
    for (std::size_t i = skip; i < windows_.size(); ++i) sum += windows_[i];
    return sum / static_cast<double>(windows_.size() - skip);
  }

 private:
  DividerConfig cfg_;
  Rng rng_;
  MtjDevice mtj_;
  double so_ = 0.5;
  double p_floor_ = 0.0;
  double p_ceil_ = 1.0;
  long count_s1_ = 0;
  long count_s2so_ = 0;
  int cycle_in_window_ = 0;
  std::vector<double> windows_;
};

struct DivideResult {
  PulseTrain out;
  double estimate = 0.0;      // converged rate-ratio estimate
  double final_setting = 0.0; // last window's setting
  std::vector<double> window_settings;
  double s2_rate = 0.0;
  bool low_evidence = false;
  std::string diagnostic;
};

// Feed two recorded trains through the divider; estimates rate(s1)/rate(s2).
inline DivideResult divide_trains(const PulseTrain& s1, const PulseTrain& s2,
                                  const DividerConfig& cfg, std::uint64_t seed) {
  if (s1.bits.size() != s2.bits.size())
    throw validation_error("divider trains must have equal length");
  if (s1.bits.empty()) throw validation_error("divider trains are empty");
  RateDivider div(cfg, seed);
  DivideResult res;
  res.out.bits.reserve(s1.bits.size());
  for (std::size_t i = 0; i < s1.bits.size(); ++i)
    res.out.bits.push_back(div.step(s1.bits[i] != 0, s2.bits[i] != 0) ? 1 : 0);
  res.estimate = div.converged_estimate();
  res.final_setting = div.setting();
  res.window_settings = div.window_settings();
  res.s2_rate = s2.rate();
  if (res.s2_rate < cfg.s2_rate_floor) {
    res.low_evidence = true;
    res.diagnostic = "divisor rate " + std::to_string(res.s2_rate) +
                     " below reliability floor " + std::to_string(cfg.s2_rate_floor);
  }
  return res;
}

} // namespace spinbayes
