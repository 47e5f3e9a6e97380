#pragma once

// Macrospin stochastic LLG core for a perpendicular free layer driven by the
// spin Hall current of an adjacent heavy-metal wire. Landau-Lifshitz explicit
// form with Gilbert damping, Slonczewski-like spin torque from a spin current
// polarized along +y, and a thermal field per Brown/Scholz.

#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "spinbayes/constants.hpp"
#include "spinbayes/errors.hpp"
#include "spinbayes/rng.hpp"
#include "spinbayes/vec3.hpp"

namespace spinbayes {

struct MagnetParams {
  double diameter_m = 40e-9;       // free-layer disc diameter
  double thickness_m = 1.3e-9;     // free-layer thickness
  double ms_a_per_m = 5.8136e5;    // saturation magnetization (581.36 emu/cc)
  double alpha = 0.0122;           // Gilbert damping
  double barrier_kbt = 31.44;      // anisotropy barrier Ku*V in units of kB*T_ref
  double barrier_ref_temp_k = 300.0;
  double temperature_k = 300.0;
  double theta_sh = 0.12;          // spin Hall angle of the heavy metal
  double hm_thickness_m = 10e-9;   // heavy-metal wire thickness
  double hm_width_m = 40e-9;       // heavy-metal wire width (defaults to diameter)
  Vec3 h_applied_a_per_m = {100.0 * oersted_to_a_per_m, 0.0, 0.0}; // in-plane bias

  double volume_m3() const {
    const double r = 0.5 * diameter_m;
    return pi * r * r * thickness_m;
  }
  // Number of Bohr magnetons in the free layer.
  double ns_spins() const { return ms_a_per_m * volume_m3() / mu_bohr; }
  double ku_j_per_m3() const {
    return barrier_kbt * k_boltzmann * barrier_ref_temp_k / volume_m3();
  }
  // Perpendicular anisotropy field Hk = 2 Ku / (mu0 Ms).
  double hk_a_per_m() const { return 2.0 * ku_j_per_m3() / (mu_0 * ms_a_per_m); }

  void validate() const {
    if (!(diameter_m > 0.0) || !(thickness_m > 0.0) || !(ms_a_per_m > 0.0) ||
        !(hm_thickness_m > 0.0) || !(hm_width_m > 0.0))
      throw validation_error("magnet geometry and Ms must be positive");
    if (!(alpha > 0.0) || !(alpha < 1.0))
      throw validation_error("damping alpha must lie in (0, 1)");
    if (!(barrier_kbt > 0.0) || !(barrier_ref_temp_k > 0.0))
      throw validation_error("anisotropy barrier must be positive");
    if (!(temperature_k >= 0.0) || !std::isfinite(temperature_k))
      throw validation_error("temperature must be finite and >= 0");
    if (!(theta_sh > 0.0) || !(theta_sh <= 1.0))
      throw validation_error("spin Hall angle must lie in (0, 1]");
    if (!is_finite(h_applied_a_per_m))
      throw validation_error("applied field must be finite");
  }
};

struct CurrentPulse {
  double amplitude_a = 0.0; // charge current through the heavy metal
  double width_s = 2e-9;
};

enum class Integrator { StochasticHeun, DeterministicRk4 };

struct LlgConfig {
  double dt_s = 1e-12;
  Integrator integrator = Integrator::StochasticHeun;
  bool renormalize_each_step = true;
  std::uint64_t seed = 0;
  double settle_time_s = 5e-9; // zero-current relaxation appended to the pulse
  int record_stride = 1;       // trajectory decimation
  int n_threads = 1;           // 0 = hardware concurrency (trial-level only)
};

enum class Polarity { Up, Down };

struct Trajectory {
  std::vector<double> t_s;
  std::vector<Vec3> m;
  Polarity initial = Polarity::Up;
  Polarity final_state = Polarity::Up;
  bool switched = false;
};

struct SwitchEstimate {
  double p_switch = 0.0;
  double ci_half_width = 0.0; // Wilson 95%
  long n_switched = 0;
  long n_trials = 0;
};

// Uniaxial field from the perpendicular easy axis, Hk * mz * z.
inline Vec3 anisotropy_field(Vec3 m, const MagnetParams& p) {
  return {0.0, 0.0, p.hk_a_per_m() * m.z};
}

// Deterministic effective field: applied bias plus anisotropy.
inline Vec3 effective_field(Vec3 m, const MagnetParams& p) {
  return p.h_applied_a_per_m + anisotropy_field(m, p);
}

// Thermal field std-dev per Cartesian component for one step of length dt.
inline double thermal_sigma_a_per_m(const MagnetParams& p, double dt_s) {
  if (p.temperature_k == 0.0) return 0.0;
  const double a2 = 1.0 + p.alpha * p.alpha;
  return std::sqrt(p.alpha / a2 * 2.0 * k_boltzmann * p.temperature_k /
                   (gyromagnetic_ratio * mu_0 * p.ms_a_per_m * p.volume_m3() * dt_s));
}

inline Vec3 thermal_field(const MagnetParams& p, double dt_s, Rng& rng) {
  const double s = thermal_sigma_a_per_m(p, dt_s);
  if (s == 0.0) return {0.0, 0.0, 0.0};
  return {s * rng.normal(), s * rng.normal(), s * rng.normal()};
}

// Spin current absorbed by the free layer, in amperes, polarized along +y.
// |Is| = theta_SH * (disc area / wire cross-section) * I.
inline Vec3 spin_current_a(double charge_current_a, const MagnetParams& p) {
  const double a_fm = pi * 0.25 * p.diameter_m * p.diameter_m;
  const double a_hm = p.hm_width_m * p.hm_thickness_m;
  return {0.0, p.theta_sh * (a_fm / a_hm) * charge_current_a, 0.0};
}

// Explicit Landau-Lifshitz right-hand side, converted from the implicit
// Gilbert form; h is the full field (applied + anisotropy + thermal).
inline Vec3 llg_rhs(Vec3 m, Vec3 h, Vec3 i_s, const MagnetParams& p) {
  const double pre = 1.0 / (1.0 + p.alpha * p.alpha);
  const double beta = 1.0 / (q_electron * p.ns_spins()); // torque per ampere
  const Vec3 mxh = cross(m, h);
  const Vec3 mxmxh = cross(m, mxh);
  const Vec3 isxm = cross(i_s, m);
  const Vec3 mxisxm = cross(m, isxm);
  const Vec3 mxis = cross(m, i_s);
  return pre * (-gyromagnetic_ratio * (mxh + p.alpha * mxmxh) +
                beta * (mxisxm + p.alpha * mxis));
}

// One stochastic Heun step. h_ext already contains the thermal field, which
// is held fixed across predictor and corrector (Stratonovich); the
// state-dependent anisotropy field is recomputed at the predictor point.
inline Vec3 llg_step_heun(Vec3 m, Vec3 h_ext, Vec3 i_s, const MagnetParams& p,
                          double dt_s) {
  if (!is_finite(m) || !is_finite(h_ext) || !is_finite(i_s) || !std::isfinite(dt_s))
    throw validation_error("llg step requires finite inputs");
  const Vec3 k1 = llg_rhs(m, h_ext + anisotropy_field(m, p), i_s, p);
  const Vec3 mp = m + dt_s * k1;
  const Vec3 k2 = llg_rhs(mp, h_ext + anisotropy_field(mp, p), i_s, p);
  return m + (0.5 * dt_s) * (k1 + k2);
}

// Classical RK4 step for zero-temperature validation runs.
inline Vec3 llg_step_rk4(Vec3 m, Vec3 h_ext, Vec3 i_s, const MagnetParams& p,
                         double dt_s) {
  if (!is_finite(m) || !is_finite(h_ext) || !is_finite(i_s) || !std::isfinite(dt_s))
    throw validation_error("llg step requires finite inputs");
  const auto f = [&](Vec3 x) { return llg_rhs(x, h_ext + anisotropy_field(x, p), i_s, p); };
  const Vec3 k1 = f(m);
  const Vec3 k2 = f(m + (0.5 * dt_s) * k1);
  const Vec3 k3 = f(m + (0.5 * dt_s) * k2);
  const Vec3 k4 = f(m + dt_s * k3);
  return m + (dt_s / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Magnetic energy: Zeeman in the applied field plus uniaxial anisotropy.
inline double energy_j(Vec3 m, const MagnetParams& p) {
  const double v = p.volume_m3();
  return -mu_0 * p.ms_a_per_m * v * dot(p.h_applied_a_per_m, m) -
         p.ku_j_per_m3() * v * m.z * m.z;
}

// Thermal-equilibrium start near the chosen pole: polar tilt |N(0, sigma)|
// with sigma^2 = kB*T/(2*Ku*V) and uniform azimuth. At T = 0 a fixed 1-degree
// tilt breaks the unstable colinearity with the easy axis.
inline Vec3 initial_magnetization(const MagnetParams& p, Polarity init, Rng& rng) {
  double theta;
  double phi;
  if (p.temperature_k > 0.0) {
    const double sigma = std::sqrt(k_boltzmann * p.temperature_k /
                                   (2.0 * p.ku_j_per_m3() * p.volume_m3()));
    theta = std::fabs(rng.normal()) * sigma;
    phi = 2.0 * pi * rng.uniform();
  } else {
    theta = pi / 180.0;
    phi = 0.0;
  }
  const double s = std::sin(theta);
  Vec3 m{s * std::cos(phi), s * std::sin(phi), std::cos(theta)};
  if (init == Polarity::Down) m.z = -m.z;
  return m;
}

namespace detail {

inline void validate_run(const CurrentPulse& pulse, const MagnetParams& p,
                         const LlgConfig& cfg) {
  p.validate();
  if (!std::isfinite(pulse.amplitude_a) || !std::isfinite(pulse.width_s))
    throw validation_error("pulse amplitude and width must be finite");
  if (!(pulse.width_s > 0.0)) throw validation_error("pulse width must be > 0");
  if (!(cfg.dt_s > 0.0)) throw validation_error("dt must be > 0");
  if (cfg.dt_s > pulse.width_s / 10.0)
    throw validation_error("dt too large: need at least 10 steps per pulse");
  if (cfg.settle_time_s < 0.0) throw validation_error("settle time must be >= 0");
  if (cfg.record_stride < 1) throw validation_error("record stride must be >= 1");
}

// Shared pulse-then-settle integration; Recorder is called as rec(t, m) for
// every retained sample so the trajectory and Monte Carlo paths are one code.
template <typename Recorder>
Polarity run_switch(const CurrentPulse& pulse, const MagnetParams& p,
                    const LlgConfig& cfg, Polarity init, Rng& rng, Recorder&& rec) {
  const long n_pulse = std::lround(pulse.width_s / cfg.dt_s);
  const long n_settle = std::lround(cfg.settle_time_s / cfg.dt_s);
  const long n_total = n_pulse + n_settle;
  const bool thermal = p.temperature_k > 0.0;
  if (cfg.integrator == Integrator::DeterministicRk4 && thermal)
    throw validation_error("deterministic RK4 requires temperature = 0");

  Vec3 m = initial_magnetization(p, init, rng);
  const Vec3 i_s_on = spin_current_a(pulse.amplitude_a, p);
  const Vec3 i_s_off{0.0, 0.0, 0.0};
  rec(0.0, m);
  for (long step = 0; step < n_total; ++step) {
    const Vec3& i_s = step < n_pulse ? i_s_on : i_s_off;
    Vec3 h_ext = p.h_applied_a_per_m;
    if (thermal) h_ext += thermal_field(p, cfg.dt_s, rng);
    m = cfg.integrator == Integrator::StochasticHeun
            ? llg_step_heun(m, h_ext, i_s, p, cfg.dt_s)
            : llg_step_rk4(m, h_ext, i_s, p, cfg.dt_s);
    if (!is_finite(m))
      throw numeric_error("non-finite magnetization at step " + std::to_string(step));
    if (cfg.renormalize_each_step) m = normalized(m);
    if ((step + 1) % cfg.record_stride == 0 || step + 1 == n_total)
      rec(static_cast<double>(step + 1) * cfg.dt_s, m);
  }
  return m.z >= 0.0 ? Polarity::Up : Polarity::Down;
}

} // namespace detail

// Integrate one write attempt and keep the sampled trajectory.
inline Trajectory simulate_switch(const CurrentPulse& pulse, const MagnetParams& p,
                                  const LlgConfig& cfg, Polarity init = Polarity::Up) {
  detail::validate_run(pulse, p, cfg);
  Rng rng(cfg.seed);
  Trajectory traj;
  traj.initial = init;
  traj.final_state = detail::run_switch(pulse, p, cfg, init, rng,
                                        [&](double t, Vec3 m) {
                                          traj.t_s.push_back(t);
                                          traj.m.push_back(m);
                                        });
  traj.switched = traj.final_state != init;
  return traj;
}

// Monte Carlo switching probability over independent per-trial streams
// derived from cfg.seed; results do not depend on the thread count.
inline SwitchEstimate estimate_switch_prob(const CurrentPulse& pulse,
                                           const MagnetParams& p,
                                           const LlgConfig& cfg, long n_trials,
                                           Polarity init = Polarity::Up) {
  detail::validate_run(pulse, p, cfg);
  if (n_trials <= 0) throw validation_error("trial count must be > 0");

  std::vector<std::uint8_t> switched(static_cast<std::size_t>(n_trials), 0);
  const auto run_range = [&](long lo, long hi) {
    for (long i = lo; i < hi; ++i) {
      Rng rng = Rng::for_stream(cfg.seed, static_cast<std::uint64_t>(i));
      const Polarity fin =
          detail::run_switch(pulse, p, cfg, init, rng, [](double, Vec3) {});
      switched[static_cast<std::size_t>(i)] = fin != init ? 1 : 0;
    }
  };

  long n_threads = cfg.n_threads;
  if (n_threads == 0)
    n_threads = static_cast<long>(std::thread::hardware_concurrency());
  n_threads = std::max(1L, std::min(n_threads, n_trials));
  if (n_threads == 1) {
    run_range(0, n_trials);
  } else {
    std::vector<std::thread> pool;
    const long chunk = (n_trials + n_threads - 1) / n_threads;
    for (long t = 0; t < n_threads; ++t) {
      const long lo = t * chunk;
      const long hi = std::min(n_trials, lo + chunk);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  SwitchEstimate est;
  est.n_trials = n_trials;
  for (auto b : switched) est.n_switched += b;
  est.p_switch = static_cast<double>(est.n_switched) / static_cast<double>(n_trials);
  if (p.temperature_k > 0.0) {
    // Wilson 95% interval half-width.
    const double z = 1.959963984540054;
    const double n = static_cast<double>(n_trials);
    const double ph = est.p_switch;
    est.ci_half_width = z / (1.0 + z * z / n) *
                        std::sqrt(ph * (1.0 - ph) / n + z * z / (4.0 * n * n));
  }
  return est;
}

} // namespace spinbayes
