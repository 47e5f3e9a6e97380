#pragma once

// Cycle-accurate behavioral model of the pulse-computing fabric: one MTJ bit
// plus clocked latch per variable, CPT-gated DAC current sources selected by
// the parents' latched outputs, and a write/read/reset phase sequence per
// clock cycle.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spinbayes/device.hpp"
#include "spinbayes/errors.hpp"
#include "spinbayes/rng.hpp"

namespace spinbayes {

// Write-current DAC: codes 0..2^bits spanning [i_min, i_max].
struct DacSpec {
  int bits = 6;
  double i_min_ma = 0.48;
  double i_max_ma = 0.54;

  void validate() const {
    if (bits < 1 || bits > 16) throw validation_error("DAC bits must be in 1..16");
    if (!(i_min_ma < i_max_ma)) throw validation_error("DAC range is empty");
  }
  int levels() const { return 1 << bits; }
  double lsb_ma() const { return (i_max_ma - i_min_ma) / levels(); }
  double quantize(double i_ma) const {
    if (!std::isfinite(i_ma)) throw validation_error("DAC input must be finite");
    long code = std::lround((i_ma - i_min_ma) / lsb_ma());
    if (code < 0) code = 0;
    if (code > levels()) code = levels();
    return i_min_ma + static_cast<double>(code) * lsb_ma();
  }
};

enum class NoiseScope {
  PerWrite,  // fresh gaussian per write event
  PerSample, // one offset per current source, drawn at run start
};

// Gaussian disturbance on the drive current, in LSB units of the DAC.
struct NoiseModel {
  bool enabled = false;
  double sigma_lsb = 0.0;
  NoiseScope scope = NoiseScope::PerSample;

  void validate() const {
    if (!(sigma_lsb >= 0.0) || !std::isfinite(sigma_lsb))
      throw validation_error("noise sigma must be finite and >= 0");
  }
  double sigma_ma(const DacSpec& dac) const { return sigma_lsb * dac.lsb_ma(); }
  bool active() const { return enabled && sigma_lsb > 0.0; }
  // Per-write semantics: returns the disturbed analog drive current.
  double apply(double i_ma, const DacSpec& dac, Rng& rng) const {
    if (!active()) return i_ma;
    return i_ma + sigma_ma(dac) * rng.normal();
  }
};

// One output bit per clock cycle (the V_o+ rail; V_o- is the complement).
struct PulseTrain {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  std::size_t count_ones() const {
    std::size_t n = 0;
    for (auto b : bits) n += b;
    return n;
  }
  double rate() const {
    if (bits.empty()) throw validation_error("rate of an empty pulse train");
    return static_cast<double>(count_ones()) / static_cast<double>(bits.size());
  }
  PulseTrain complement() const {
    PulseTrain out;
    out.bits.reserve(bits.size());
    for (auto b : bits) out.bits.push_back(b ? 0 : 1);
    return out;
  }
};

// Trains from one run, in evaluation order.
struct RunResult {
  std::vector<std::string> names;
  std::vector<PulseTrain> trains;
  std::vector<std::vector<double>> noise_offsets_ma; // per variable, per CPT entry
  long n_cycles = 0;

  const PulseTrain& train(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return trains[i];
    throw validation_error("unknown variable '" + name + "' in run result");
  }
};

class PulseNetwork {
 public:
  enum class Phase { Write, Read, Reset };

  struct Variable {
    std::string name;
    std::vector<int> parents;                      // indices of earlier variables
    std::vector<std::optional<double>> current_ma; // 2^k entries; nullopt = source disabled
    MtjDevice device;
    int latch = 0;
    int latch_snapshot = 0; // parent value seen in pipelined mode
    Phase phase = Phase::Write;
    std::vector<double> noise_offset_ma; // per entry, PerSample scope
  };

  PulseNetwork(DacSpec dac = {}, NoiseModel noise = {}, bool pipeline_parents = false)
      : dac_(dac), noise_(noise), pipeline_parents_(pipeline_parents) {
    dac_.validate();
    noise_.validate();
  }

  const DacSpec& dac() const { return dac_; }
  const NoiseModel& noise() const { return noise_; }
  bool pipelined() const { return pipeline_parents_; }
  std::size_t size() const { return vars_.size(); }
  const Variable& variable(int idx) const { return vars_.at(static_cast<std::size_t>(idx)); }

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i].name == name) return static_cast<int>(i);
    throw validation_error("unknown variable '" + name + "'");
  }

  // Parents must already be present, so insertion order is an evaluation
  // (topological) order by construction.
  int add_variable(const std::string& name, const std::vector<std::string>& parents,
                   std::vector<std::optional<double>> current_ma, MtjDevice device = {}) {
    if (name.empty()) throw validation_error("variable name must be non-empty");
    for (const auto& v : vars_)
      if (v.name == name) throw validation_error("duplicate variable '" + name + "'");
    Variable var;
    var.name = name;
    for (const auto& pn : parents) var.parents.push_back(index_of(pn));
    if (var.parents.size() > 16)
      throw validation_error("variable '" + name + "' has more than 16 parents");
    const std::size_t want = std::size_t{1} << var.parents.size();
    if (current_ma.size() != want)
      throw validation_error("variable '" + name + "' needs " + std::to_string(want) +
                             " current entries, got " + std::to_string(current_ma.size()));
    for (const auto& c : current_ma) {
      if (!c) continue;
      if (!std::isfinite(*c) || *c < dac_.i_min_ma - 1e-12 || *c > dac_.i_max_ma + 1e-12)
        throw validation_error("variable '" + name + "' current outside DAC range");
      if (std::fabs(dac_.quantize(*c) - *c) > 1e-9)
        throw validation_error("variable '" + name + "' current is not a DAC code");
    }
    device.validate();
    var.current_ma = std::move(current_ma);
    var.device = device;
    var.noise_offset_ma.assign(var.current_ma.size(), 0.0);
    vars_.push_back(std::move(var));
    return static_cast<int>(vars_.size()) - 1;
  }

  // CPT row selected by the parents' latched bits, first parent most
  // significant.
  std::size_t entry_index(int idx) const {
    const Variable& v = vars_.at(static_cast<std::size_t>(idx));
    std::size_t e = 0;
    for (int pi : v.parents) {
      const Variable& p = vars_[static_cast<std::size_t>(pi)];
      e = (e << 1) | static_cast<std::size_t>(pipeline_parents_ ? p.latch_snapshot : p.latch);
    }
    return e;
  }

  // WR phase: fire the selected current source into the MTJ (if enabled).
  void write_phase(int idx, Rng& rng) {
    Variable& v = vars_.at(static_cast<std::size_t>(idx));
    if (v.phase != Phase::Write)
      throw protocol_error("variable '" + v.name + "': write phase out of order");
    const std::size_t e = entry_index(idx);
    const auto& src = v.current_ma[e];
    if (src) {
      double i = *src;
      if (noise_.active()) {
        i += noise_.scope == NoiseScope::PerWrite ? noise_.sigma_ma(dac_) * rng.normal()
                                                  : v.noise_offset_ma[e];
      }
      v.device.attempt_write(i, rng);
    }
    v.phase = Phase::Read;
  }

  // RD phase: sense the MTJ into the latch.
  void read_phase(int idx) {
    Variable& v = vars_.at(static_cast<std::size_t>(idx));
    if (v.phase != Phase::Read)
      throw protocol_error("variable '" + v.name + "': read phase out of order");
    v.latch = v.device.read();
    v.phase = Phase::Reset;
  }

  // RST phase: emit the latched bit on the output rail and re-arm the MTJ.
  int reset_phase(int idx) {
    Variable& v = vars_.at(static_cast<std::size_t>(idx));
    if (v.phase != Phase::Reset)
      throw protocol_error("variable '" + v.name + "': reset phase out of order");
    v.device.reset();
    v.phase = Phase::Write;
    return v.latch;
  }

  // Run n full clock cycles from a cold start; per (network, seed, n) the
  // result is deterministic.
  RunResult run_cycles(long n_cycles, std::uint64_t seed) {
    if (n_cycles < 0) throw validation_error("cycle count must be >= 0");
    if (vars_.empty()) throw validation_error("network has no variables");
    Rng rng(seed);
    RunResult res;
    res.n_cycles = n_cycles;
    for (auto& v : vars_) {
      v.device.reset();
      v.latch = 0;
      v.latch_snapshot = 0;
      v.phase = Phase::Write;
      std::fill(v.noise_offset_ma.begin(), v.noise_offset_ma.end(), 0.0);
      if (noise_.active() && noise_.scope == NoiseScope::PerSample)
        for (std::size_t e = 0; e < v.current_ma.size(); ++e)
          if (v.current_ma[e]) v.noise_offset_ma[e] = noise_.sigma_ma(dac_) * rng.normal();
      res.names.push_back(v.name);
      res.noise_offsets_ma.push_back(v.noise_offset_ma);
    }
    res.trains.resize(vars_.size());
    for (auto& t : res.trains) t.bits.reserve(static_cast<std::size_t>(n_cycles));

    for (long c = 0; c < n_cycles; ++c) {
      if (pipeline_parents_)
        for (auto& v : vars_) v.latch_snapshot = v.latch;
      for (std::size_t i = 0; i < vars_.size(); ++i) {
        const int idx = static_cast<int>(i);
        write_phase(idx, rng);
        read_phase(idx);
        res.trains[i].bits.push_back(static_cast<std::uint8_t>(reset_phase(idx)));
      }
    }
    return res;
  }

 private:
  DacSpec dac_;
  NoiseModel noise_;
  bool pipeline_parents_ = false;
  std::vector<Variable> vars_;
};

} // namespace spinbayes
