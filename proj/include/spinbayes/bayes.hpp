#pragma once

// Bayesian networks over binary variables: JSON loading, exact enumeration,
// compilation onto the pulse fabric, and pulse-train estimators.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinbayes/arith.hpp"
#include "spinbayes/device.hpp"
#include "spinbayes/errors.hpp"
#include "spinbayes/pulse.hpp"

namespace spinbayes {

// CPT rows are row-major over parent assignments with the first-listed
// parent most significant; each entry is P(X=1 | parents).
struct BayesNode {
  std::string name;
  std::vector<std::string> parents;
  std::vector<double> cpt;
};

class BayesNet {
 public:
  BayesNet() = default;
  explicit BayesNet(std::vector<BayesNode> nodes) : nodes_(std::move(nodes)) { validate(); }

  const std::vector<BayesNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].name == name) return static_cast<int>(i);
    throw validation_error("unknown variable '" + name + "'");
  }

  // Kahn's algorithm with lexicographic tiebreak, so the evaluation order is
  // stable across load orders. Throws on cycles.
  std::vector<int> topological_order() const {
    const std::size_t n = nodes_.size();
    std::vector<int> indeg(n, 0);
    std::vector<std::vector<int>> children(n);
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& pn : nodes_[i].parents) {
        const int pi = index_of(pn);
        children[static_cast<std::size_t>(pi)].push_back(static_cast<int>(i));
        ++indeg[i];
      }
    auto by_name = [&](int a, int b) {
      return nodes_[static_cast<std::size_t>(a)].name < nodes_[static_cast<std::size_t>(b)].name;
    };
    std::vector<int> ready;
    for (std::size_t i = 0; i < n; ++i)
      if (indeg[i] == 0) ready.push_back(static_cast<int>(i));
    std::sort(ready.begin(), ready.end(), by_name);
    std::vector<int> order;
    while (!ready.empty()) {
      const int v = ready.front();
      ready.erase(ready.begin());
      order.push_back(v);
      for (int c : children[static_cast<std::size_t>(v)])
        if (--indeg[static_cast<std::size_t>(c)] == 0) {
          ready.insert(std::upper_bound(ready.begin(), ready.end(), c, by_name), c);
        }
    }
    if (order.size() != n)
      throw validation_error("network graph contains a cycle");
    return order;
  }

  void validate() const {
    if (nodes_.empty()) throw validation_error("network has no variables");
    if (nodes_.size() > 20)
      throw validation_error("exact enumeration supports at most 20 variables");
    std::set<std::string> seen;
    for (const auto& nd : nodes_) {
      if (nd.name.empty()) throw validation_error("variable name must be non-empty");
      if (!seen.insert(nd.name).second)
        throw validation_error("duplicate variable '" + nd.name + "'");
    }
    for (const auto& nd : nodes_) {
      std::set<std::string> pseen;
      for (const auto& pn : nd.parents) {
        index_of(pn); // throws on unknown parent
        if (pn == nd.name)
          throw validation_error("variable '" + nd.name + "' lists itself as parent");
        if (!pseen.insert(pn).second)
          throw validation_error("variable '" + nd.name + "' repeats parent '" + pn + "'");
      }
      const std::size_t want = std::size_t{1} << nd.parents.size();
      if (nd.cpt.size() != want)
        throw validation_error("variable '" + nd.name + "' needs " + std::to_string(want) +
                               " CPT entries, got " + std::to_string(nd.cpt.size()));
      for (double p : nd.cpt)
        if (!(p >= 0.0) || !(p <= 1.0))
          throw validation_error("variable '" + nd.name + "' has CPT entry outside [0, 1]");
    }
    (void)topological_order(); // cycle check
  }

  // The four-variable rain/sprinkler/wet-grass benchmark network.
  static BayesNet sprinkler() {
    return BayesNet({
        {"Cloudy", {}, {0.5}},
        {"Sprinkler", {"Cloudy"}, {0.5, 0.1}},
        {"Rain", {"Cloudy"}, {0.2, 0.8}},
        {"Wet", {"Sprinkler", "Rain"}, {0.0, 0.9, 0.9, 0.99}},
    });
  }

  static BayesNet from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("variables") || !j["variables"].is_array())
      throw validation_error("network file needs a top-level 'variables' array");
    std::vector<BayesNode> nodes;
    for (const auto& jv : j["variables"]) {
      if (!jv.is_object() || !jv.contains("name") || !jv["name"].is_string())
        throw validation_error("each variable needs a string 'name'");
      BayesNode nd;
      nd.name = jv["name"].get<std::string>();
      if (jv.contains("parents")) {
        if (!jv["parents"].is_array())
          throw validation_error("variable '" + nd.name + "': 'parents' must be an array");
        for (const auto& jp : jv["parents"]) {
          if (!jp.is_string())
            throw validation_error("variable '" + nd.name + "': parent names must be strings");
          nd.parents.push_back(jp.get<std::string>());
        }
      }
      if (!jv.contains("cpt") || !jv["cpt"].is_array())
        throw validation_error("variable '" + nd.name + "' needs a 'cpt' array");
      for (const auto& jp : jv["cpt"]) {
        if (!jp.is_number())
          throw validation_error("variable '" + nd.name + "': CPT entries must be numbers");
        nd.cpt.push_back(jp.get<double>());
      }
      nodes.push_back(std::move(nd));
    }
    return BayesNet(std::move(nodes));
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["variables"] = nlohmann::ordered_json::array();
    for (const auto& nd : nodes_) {
      nlohmann::ordered_json jv;
      jv["name"] = nd.name;
      jv["parents"] = nd.parents;
      jv["cpt"] = nd.cpt;
      j["variables"].push_back(std::move(jv));
    }
    return j;
  }

 private:
  std::vector<BayesNode> nodes_;
};

struct Query {
  std::string target;
  int target_value = 1;
  std::map<std::string, int> evidence; // name -> observed value
};

// Exact P(target = v | evidence) by full joint enumeration.
inline double exact_infer(const BayesNet& net, const Query& q) {
  const auto& nodes = net.nodes();
  const int ti = net.index_of(q.target);
  if (q.target_value != 0 && q.target_value != 1)
    throw validation_error("target value must be 0 or 1");
  std::vector<int> ev(nodes.size(), -1);
  for (const auto& [name, val] : q.evidence) {
    if (val != 0 && val != 1)
      throw validation_error("evidence for '" + name + "' must be 0 or 1");
    const int i = net.index_of(name);
    if (i == ti)
      throw validation_error("target '" + q.target + "' cannot also be evidence");
    ev[static_cast<std::size_t>(i)] = val;
  }

  std::vector<std::vector<int>> parent_idx(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (const auto& pn : nodes[i].parents)
      parent_idx[i].push_back(net.index_of(pn));

  const std::size_t n = nodes.size();
  double p_evidence = 0.0;
  double p_joint = 0.0;
  for (std::uint32_t assign = 0; assign < (1u << n); ++assign) {
    const auto bit = [&](std::size_t i) -> int {
      return (assign >> (n - 1 - i)) & 1u;
    };
    bool compatible = true;
    for (std::size_t i = 0; i < n && compatible; ++i)
      if (ev[i] >= 0 && bit(i) != ev[i]) compatible = false;
    if (!compatible) continue;
    double p = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t row = 0;
      for (int pi : parent_idx[i])
        row = (row << 1) | static_cast<std::size_t>(bit(static_cast<std::size_t>(pi)));
      const double p1 = nodes[i].cpt[row];
      p *= bit(i) ? p1 : 1.0 - p1;
    }
    p_evidence += p;
    if (bit(static_cast<std::size_t>(ti)) == q.target_value) p_joint += p;
  }
  if (!(p_evidence > 0.0))
    throw validation_error("evidence has zero probability under the network");
  return p_joint / p_evidence;
}

struct CompileOptions {
  bool zero_gate = true; // exact-zero CPT entries disable the source entirely
  bool pipeline_parents = false;
};

struct CompileEvent {
  enum class Kind { ZeroGated, ClampedLow, ClampedHigh };
  Kind kind;
  std::string variable;
  std::size_t entry;
  double requested;
  double realized;
};

struct CompiledNetwork {
  PulseNetwork network;
  std::vector<CompileEvent> events;
};

namespace detail {

// Probability actually produced for a requested CPT entry after clamping to
// the DAC-attainable band and quantizing the drive current.
inline double realize_entry(double p, const SwitchCurve& curve, const DacSpec& dac,
                            bool zero_gate, CompileEvent::Kind* kind) {
  const double p_floor = curve.p_amplitude(dac.i_min_ma);
  const double p_ceil = curve.p_amplitude(dac.i_max_ma);
  if (kind) *kind = CompileEvent::Kind::ZeroGated;
  if (zero_gate && p == 0.0) return 0.0;
  double pc = p;
  if (pc < p_floor) {
    pc = p_floor;
    if (kind) *kind = CompileEvent::Kind::ClampedLow;
  } else if (pc > p_ceil) {
    pc = p_ceil;
    if (kind) *kind = CompileEvent::Kind::ClampedHigh;
  }
  return curve.p_amplitude(dac.quantize(curve.current_for_probability(pc)));
}

} // namespace detail

// The network the hardware actually samples from: every CPT entry replaced
// by its clamped, quantized realization. This is the oracle for comparing
// pulse statistics against exact inference.
inline BayesNet realized_network(const BayesNet& net, const SwitchCurve& curve,
                                 const DacSpec& dac, bool zero_gate = true) {
  std::vector<BayesNode> nodes = net.nodes();
  for (auto& nd : nodes)
    for (auto& p : nd.cpt)
      p = detail::realize_entry(p, curve, dac, zero_gate, nullptr);
  return BayesNet(std::move(nodes));
}

// Map every CPT entry to a quantized DAC drive current and build the pulse
// fabric in topological order. Out-of-band entries are reported as events.
inline CompiledNetwork compile_to_pulse_network(const BayesNet& net,
                                                const SwitchCurve& curve,
                                                const DacSpec& dac,
                                                const NoiseModel& noise = {},
                                                const CompileOptions& opts = {}) {
  net.validate();
  curve.validate();
  dac.validate();
  const double p_floor = curve.p_amplitude(dac.i_min_ma);
  const double p_ceil = curve.p_amplitude(dac.i_max_ma);
  CompiledNetwork out{PulseNetwork(dac, noise, opts.pipeline_parents), {}};
  MtjDevice dev;
  dev.curve = curve;
  for (int ni : net.topological_order()) {
    const BayesNode& nd = net.nodes()[static_cast<std::size_t>(ni)];
    std::vector<std::optional<double>> currents;
    for (std::size_t e = 0; e < nd.cpt.size(); ++e) {
      const double p = nd.cpt[e];
      if (opts.zero_gate && p == 0.0) {
        currents.push_back(std::nullopt);
        out.events.push_back({CompileEvent::Kind::ZeroGated, nd.name, e, p, 0.0});
        continue;
      }
      double pc = p;
      if (pc < p_floor) {
        pc = p_floor;
        out.events.push_back({CompileEvent::Kind::ClampedLow, nd.name, e, p, p_floor});
      } else if (pc > p_ceil) {
        pc = p_ceil;
        out.events.push_back({CompileEvent::Kind::ClampedHigh, nd.name, e, p, p_ceil});
      }
      currents.push_back(dac.quantize(curve.current_for_probability(pc)));
    }
    out.network.add_variable(nd.name, nd.parents, std::move(currents), dev);
  }
  return out;
}

// rate of the variable's train = Monte Carlo marginal P(X=1).
inline double estimate_marginal(const RunResult& run, const std::string& name) {
  return run.train(name).rate();
}

enum class ConditionalMethod { CounterRatio, HardwareDivider };

struct ConditionalEstimate {
  double value = 0.0;
  ConditionalMethod method = ConditionalMethod::CounterRatio;
  bool low_evidence = false;
  std::string diagnostic;
};

// P(target=1 | evidence=1) from recorded trains, either by direct counter
// ratio or through the rate-divider hardware path.
inline ConditionalEstimate estimate_conditional(const RunResult& run,
                                                const std::string& target,
                                                const std::string& evidence,
                                                ConditionalMethod method,
                                                const DividerConfig& div_cfg = {},
                                                std::uint64_t seed = 0) {
  const PulseTrain& t = run.train(target);
  const PulseTrain& e = run.train(evidence);
  ConditionalEstimate res;
  res.method = method;
  if (method == ConditionalMethod::CounterRatio) {
    const PulseTrain both = and_multiply(t, e);
    const std::size_t n_e = e.count_ones();
    if (n_e == 0)
      throw validation_error("evidence '" + evidence + "' never fired; conditional undefined");
    res.value = static_cast<double>(both.count_ones()) / static_cast<double>(n_e);
    return res;
  }
  const DivideResult dr = divide_trains(and_multiply(t, e), e, div_cfg, seed);
  res.value = dr.estimate;
  res.low_evidence = dr.low_evidence;
  res.diagnostic = dr.diagnostic;
  return res;
}

} // namespace spinbayes
