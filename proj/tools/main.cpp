// Command-line front end: device curve sweeps, single-device LLG runs,
// pulse-network inference, write-noise robustness sweeps, and divider checks.
// Every result file embeds the resolved configuration and its hash so runs
// can be reproduced exactly.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spinbayes/spinbayes.hpp"

namespace sb = spinbayes;
using nlohmann::ordered_json;

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_outdir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw sb::numeric_error("cannot create output directory '" + dir + "'");
}

// Result files carry the resolved config, a hash of it, and a timestamp; the
// timestamp sits on its own line so byte comparisons can ignore it.
void write_result(const std::string& path, const std::string& tool, ordered_json config,
                  ordered_json results) {
  ordered_json j;
  j["tool"] = tool;
  j["config"] = std::move(config);
  j["config_hash"] = sb::hex64(sb::fnv1a64(j["config"].dump()));
  j["timestamp"] = utc_timestamp();
  j["results"] = std::move(results);
  std::ofstream f(path);
  if (!f) throw sb::numeric_error("cannot open '" + path + "' for writing");
  f << j.dump(2) << '\n';
  if (!f.good()) throw sb::numeric_error("write failed for '" + path + "'");
}

nlohmann::json load_json_file(const std::string& path, const char* what) {
  std::ifstream f(path);
  if (!f) throw sb::validation_error(std::string(what) + " file '" + path + "' not readable");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw sb::validation_error(std::string(what) + " file '" + path + "' is not valid JSON: " + e.what());
  }
  return j;
}

// Precedence: explicit CLI flag > config file key > built-in default.
template <typename T>
void merge_cfg(const CLI::Option* opt, const nlohmann::json& cfg, const char* key, T& value) {
  if (opt != nullptr && opt->count() > 0) return;
  if (cfg.contains(key)) {
    try {
      value = cfg.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw sb::validation_error(std::string("config key '") + key + "' has the wrong type");
    }
  }
}

// String-list keys also accept a single string for convenience.
void merge_cfg_list(const CLI::Option* opt, const nlohmann::json& cfg, const char* key,
                    std::vector<std::string>& value) {
  if (opt != nullptr && opt->count() > 0) return;
  if (!cfg.contains(key)) return;
  const auto& v = cfg.at(key);
  if (v.is_string()) {
    value = {v.get<std::string>()};
    return;
  }
  if (!v.is_array())
    throw sb::validation_error(std::string("config key '") + key +
                               "' must be a string or an array of strings");
  value.clear();
  for (const auto& e : v) {
    if (!e.is_string())
      throw sb::validation_error(std::string("config key '") + key +
                                 "' must contain only strings");
    value.push_back(e.get<std::string>());
  }
}

// Optional "curve" config block: two-point anchors and/or explicit
// parameters (anchors apply first, explicit values then override).
sb::SwitchCurve curve_from_config(const nlohmann::json& cfg) {
  sb::SwitchCurve c = sb::SwitchCurve::measured();
  if (!cfg.contains("curve")) return c;
  const auto& jc = cfg.at("curve");
  if (!jc.is_object()) throw sb::validation_error("config key 'curve' must be an object");

  const auto anchors = [&](const char* key, auto&& apply) {
    if (!jc.contains(key)) return;
    const auto& a = jc.at(key);
    if (!a.is_array() || a.size() != 4 || !a[0].is_number() || !a[1].is_number() ||
        !a[2].is_number() || !a[3].is_number())
      throw sb::validation_error(std::string("curve key '") + key +
                                 "' must be [x_lo, p_lo, x_hi, p_hi]");
    apply(a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), a[3].get<double>());
  };
  anchors("amplitude_anchors", [&](double i_lo, double p_lo, double i_hi, double p_hi) {
    c = sb::SwitchCurve::from_amplitude_anchors(i_lo, p_lo, i_hi, p_hi, c);
  });
  anchors("width_anchors", [&](double t_lo, double p_lo, double t_hi, double p_hi) {
    c = sb::SwitchCurve::from_width_anchors(t_lo, p_lo, t_hi, p_hi, c);
  });

  const auto num = [&](const char* key, double& dst) {
    if (!jc.contains(key)) return;
    if (!jc.at(key).is_number())
      throw sb::validation_error(std::string("curve key '") + key + "' must be a number");
    dst = jc.at(key).get<double>();
  };
  num("i50_ma", c.i50_ma);
  num("slope_ma", c.slope_ma);
  num("amp_min_ma", c.amp_min_ma);
  num("amp_max_ma", c.amp_max_ma);
  num("beta", c.beta);
  num("tau_ms", c.tau_ms);
  c.validate();
  return c;
}

// Echo in the explicit-parameter form so the block round-trips exactly.
ordered_json curve_to_config(const sb::SwitchCurve& c) {
  ordered_json j;
  j["i50_ma"] = c.i50_ma;
  j["slope_ma"] = c.slope_ma;
  j["amp_min_ma"] = c.amp_min_ma;
  j["amp_max_ma"] = c.amp_max_ma;
  j["beta"] = c.beta;
  j["tau_ms"] = c.tau_ms;
  return j;
}

sb::BayesNet load_network(const std::string& path) {
  if (path.empty()) return sb::BayesNet::sprinkler();
  return sb::BayesNet::from_json(load_json_file(path, "network"));
}

sb::NoiseScope parse_scope(const std::string& s) {
  if (s == "per-sample") return sb::NoiseScope::PerSample;
  if (s == "per-write") return sb::NoiseScope::PerWrite;
  throw sb::validation_error("noise scope must be 'per-sample' or 'per-write'");
}

struct CsvFile {
  std::ofstream f;
  explicit CsvFile(const std::string& path) : f(path) {
    if (!f) throw sb::numeric_error("cannot open '" + path + "' for writing");
  }
  void close_checked(const std::string& path) {
    f.flush();
    if (!f.good()) throw sb::numeric_error("write failed for '" + path + "'");
  }
};

// ---------------------------------------------------------------- device-sweep

int run_device_sweep(const std::string& out_dir, const sb::SwitchCurve& curve,
                     long mc_trials, std::uint64_t seed) {
  ensure_outdir(out_dir);
  if (mc_trials < 0) throw sb::validation_error("Monte Carlo trial count must be >= 0");

  const std::string amp_path = out_dir + "/device_amplitude.csv";
  {
    sb::Rng rng(seed);
    CsvFile csv(amp_path);
    csv.f << (mc_trials > 0 ? "i_mA,p,p_mc\n" : "i_mA,p\n");
    const int n_pts = 141;
    for (int k = 0; k < n_pts; ++k) {
      const double i = curve.amp_min_ma +
                       (curve.amp_max_ma - curve.amp_min_ma) * k / (n_pts - 1.0);
      csv.f << sb::fmt_g17(i) << ',' << sb::fmt_g17(curve.p_amplitude(i));
      if (mc_trials > 0) {
        sb::MtjDevice dev;
        dev.curve = curve;
        long flips = 0;
        for (long t = 0; t < mc_trials; ++t) {
          flips += dev.attempt_write(i, rng) ? 1 : 0;
          dev.reset();
        }
        csv.f << ',' << sb::fmt_g17(static_cast<double>(flips) / static_cast<double>(mc_trials));
      }
      csv.f << '\n';
    }
    csv.close_checked(amp_path);
  }

  const std::string width_path = out_dir + "/device_width.csv";
  {
    std::vector<double> grid;
    for (int k = 0; k <= 60; ++k) grid.push_back(std::pow(10.0, -1.0 + 0.05 * k));
    grid.push_back(1.0);
    grid.push_back(50.0);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    CsvFile csv(width_path);
    csv.f << "t_ms,p\n";
    for (double t : grid) csv.f << sb::fmt_g17(t) << ',' << sb::fmt_g17(curve.p_width(t)) << '\n';
    csv.close_checked(width_path);
  }

  ordered_json cfg;
  cfg["out"] = out_dir;
  cfg["seed"] = seed;
  cfg["mc_trials"] = mc_trials;
  cfg["curve"] = curve_to_config(curve);
  ordered_json res;
  res["amplitude_csv"] = amp_path;
  res["width_csv"] = width_path;
  res["i50_ma"] = curve.i50_ma;
  res["slope_ma"] = curve.slope_ma;
  res["tau_ms"] = curve.tau_ms;
  res["beta"] = curve.beta;
  res["anchors"] = {{"p_0.47mA", curve.p_amplitude(0.47)},
                    {"p_0.54mA", curve.p_amplitude(0.54)},
                    {"p_1ms", curve.p_width(1.0)},
                    {"p_50ms", curve.p_width(50.0)}};
  write_result(out_dir + "/device_sweep.json", "device-sweep", cfg, res);
  std::cout << "device-sweep: wrote " << amp_path << ", " << width_path << '\n';
  return 0;
}

// ------------------------------------------------------------------------ llg

int run_llg(const std::string& out_dir, std::uint64_t seed, double amplitude_ua,
            double width_ns, double temperature_k, long trials, int trajectories,
            double dt_ps, int threads) {
  ensure_outdir(out_dir);
  sb::MagnetParams params;
  params.temperature_k = temperature_k;
  sb::CurrentPulse pulse{amplitude_ua * 1e-6, width_ns * 1e-9};
  sb::LlgConfig cfg;
  cfg.dt_s = dt_ps * 1e-12;
  cfg.seed = seed;
  cfg.n_threads = threads;

  std::vector<std::string> traj_files;
  for (int k = 0; k < trajectories; ++k) {
    sb::LlgConfig tc = cfg;
    tc.seed = seed + static_cast<std::uint64_t>(k);
    tc.record_stride = 10;
    const sb::Trajectory traj = sb::simulate_switch(pulse, params, tc);
    const std::string path = out_dir + "/trajectory_" + std::to_string(k) + ".csv";
    sb::write_trajectory_csv(path, traj);
    traj_files.push_back(path);
  }

  const sb::SwitchEstimate est = sb::estimate_switch_prob(pulse, params, cfg, trials);

  ordered_json jc;
  jc["seed"] = seed;
  jc["out"] = out_dir;
  jc["amplitude_ua"] = amplitude_ua;
  jc["width_ns"] = width_ns;
  jc["temperature_k"] = temperature_k;
  jc["trials"] = trials;
  jc["trajectories"] = trajectories;
  jc["dt_ps"] = dt_ps;
  ordered_json jr;
  jr["p_switch"] = est.p_switch;
  jr["ci95_half_width"] = est.ci_half_width;
  jr["n_switched"] = est.n_switched;
  jr["n_trials"] = est.n_trials;
  jr["trajectory_files"] = traj_files;
  write_result(out_dir + "/llg_summary.json", "llg", jc, jr);
  std::cout << "llg: p_switch = " << est.p_switch << " +/- " << est.ci_half_width
            << " (" << est.n_switched << "/" << est.n_trials << ")\n";
  return 0;
}

// ---------------------------------------------------------------------- infer

int run_infer(const std::string& out_dir, const std::string& network_path,
              const sb::SwitchCurve& curve, std::uint64_t seed, long cycles,
              double noise_lsb, const std::string& noise_scope,
              std::vector<std::string> targets, std::vector<std::string> evidences,
              bool dump_trains) {
  ensure_outdir(out_dir);
  if (cycles <= 0) throw sb::validation_error("cycle count must be > 0");
  if (targets.size() != evidences.size())
    throw sb::validation_error("--target and --evidence must be given in pairs");
  const sb::BayesNet net = load_network(network_path);
  // On the bundled network, report the two benchmark conditionals by default.
  if (targets.empty() && network_path.empty()) {
    targets = {"Sprinkler", "Rain"};
    evidences = {"Wet", "Wet"};
  }
  const sb::DacSpec dac;
  sb::NoiseModel noise;
  noise.sigma_lsb = noise_lsb;
  noise.enabled = noise_lsb > 0.0;
  noise.scope = parse_scope(noise_scope);

  sb::CompiledNetwork compiled = sb::compile_to_pulse_network(net, curve, dac, noise);
  for (const auto& ev : compiled.events) {
    const char* what = ev.kind == sb::CompileEvent::Kind::ZeroGated ? "zero-gated"
                       : ev.kind == sb::CompileEvent::Kind::ClampedLow ? "clamped up"
                                                                       : "clamped down";
    std::cerr << "warning: " << ev.variable << " entry " << ev.entry << ": requested "
              << ev.requested << " " << what << " -> " << ev.realized << '\n';
  }

  const sb::RunResult run = compiled.network.run_cycles(cycles, seed);
  const sb::BayesNet realized = sb::realized_network(net, curve, dac);

  ordered_json jm;
  for (const auto& name : run.names) {
    const double exact = sb::exact_infer(net, {name, 1, {}});
    const double realized_exact = sb::exact_infer(realized, {name, 1, {}});
    const double est = sb::estimate_marginal(run, name);
    ordered_json row;
    row["ones"] = run.train(name).count_ones();
    row["exact"] = exact;
    row["realized_exact"] = realized_exact;
    row["pulse_estimate"] = est;
    row["abs_error_vs_exact"] = std::fabs(est - exact);
    row["abs_error_vs_realized"] = std::fabs(est - realized_exact);
    jm[name] = std::move(row);
  }

  ordered_json jr;
  jr["cycles"] = cycles;
  jr["marginals"] = std::move(jm);
  ordered_json jconds = ordered_json::array();
  for (std::size_t qi = 0; qi < targets.size(); ++qi) {
    const std::string& target = targets[qi];
    const std::string& evidence = evidences[qi];
    sb::Query q{target, 1, {{evidence, 1}}};
    const double exact = sb::exact_infer(net, q);
    const double realized_exact = sb::exact_infer(realized, q);
    const auto counter =
        sb::estimate_conditional(run, target, evidence, sb::ConditionalMethod::CounterRatio);
    sb::DividerConfig dcfg;
    dcfg.curve = curve;
    dcfg.dac = dac;
    ordered_json jq;
    jq["target"] = target;
    jq["evidence"] = evidence;
    jq["exact"] = exact;
    jq["realized_exact"] = realized_exact;
    jq["counter_ratio"] = counter.value;
    jq["counter_abs_error_vs_exact"] = std::fabs(counter.value - exact);
    jq["counter_abs_error_vs_realized"] = std::fabs(counter.value - realized_exact);
    // The divider needs enough cycles to fill its burn-in windows; a run too
    // short for it still has a valid counter-ratio answer.
    try {
      const auto divider = sb::estimate_conditional(
          run, target, evidence, sb::ConditionalMethod::HardwareDivider, dcfg,
          seed + 1 + static_cast<std::uint64_t>(qi));
      jq["hardware_divider"] = divider.value;
      jq["divider_abs_error_vs_exact"] = std::fabs(divider.value - exact);
      jq["divider_low_evidence"] = divider.low_evidence;
      if (!divider.diagnostic.empty()) jq["divider_diagnostic"] = divider.diagnostic;
    } catch (const sb::validation_error& e) {
      jq["hardware_divider"] = nullptr;
      jq["divider_diagnostic"] = e.what();
    }
    jconds.push_back(std::move(jq));
  }
  jr["conditionals"] = std::move(jconds);

  if (dump_trains) {
    const std::string path = out_dir + "/trains.csv";
    CsvFile csv(path);
    csv.f << "cycle";
    for (const auto& n : run.names) csv.f << ',' << n;
    csv.f << '\n';
    for (long c = 0; c < cycles; ++c) {
      csv.f << c;
      for (const auto& t : run.trains) csv.f << ',' << int(t.bits[static_cast<std::size_t>(c)]);
      csv.f << '\n';
    }
    csv.close_checked(path);
    jr["trains_csv"] = path;
  }

  ordered_json jc;
  jc["network"] = network_path; // empty = builtin sprinkler
  jc["seed"] = seed;
  jc["out"] = out_dir;
  jc["cycles"] = cycles;
  jc["noise_lsb"] = noise_lsb;
  jc["noise_scope"] = noise_scope;
  jc["target"] = targets;
  jc["evidence"] = evidences;
  jc["curve"] = curve_to_config(curve);
  write_result(out_dir + "/infer_result.json", "infer", jc, jr);
  std::cout << "infer: " << cycles << " cycles over " << run.names.size()
            << " variables -> " << out_dir << "/infer_result.json\n";
  return 0;
}

// ----------------------------------------------------------------- noise-sweep

int run_noise_sweep(const std::string& out_dir, const std::string& network_path,
                    const sb::SwitchCurve& curve, std::uint64_t seed, long samples,
                    long cycles, const std::string& levels_csv, const std::string& target,
                    const std::string& evidence, const std::string& noise_scope) {
  ensure_outdir(out_dir);
  if (samples <= 0 || cycles <= 0)
    throw sb::validation_error("samples and cycles must be > 0");
  std::vector<double> levels;
  {
    std::stringstream ss(levels_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        levels.push_back(std::stod(tok));
      } catch (...) {
        throw sb::validation_error("bad noise level '" + tok + "'");
      }
    }
    if (levels.empty()) throw sb::validation_error("no noise levels given");
  }

  const sb::BayesNet net = load_network(network_path);
  const sb::DacSpec dac;
  const sb::NoiseScope scope = parse_scope(noise_scope);

  const std::string csv_path = out_dir + "/noise_sweep.csv";
  const std::string hist_path = out_dir + "/noise_hist.csv";
  const std::string conv_path = out_dir + "/noise_convergence.csv";
  CsvFile csv(csv_path);
  csv.f << "sigma_lsb,sample,estimate\n";
  CsvFile hist(hist_path);
  hist.f << "sigma_lsb,bin_lo,bin_hi,count\n";
  CsvFile conv(conv_path);
  conv.f << "sigma_lsb,n_samples,running_mean,running_std\n";
  const double bin_w = 0.005;
  const long conv_stride = std::max(1L, samples / 100);

  ordered_json jlevels = ordered_json::array();
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const double lsb = levels[li];
    sb::NoiseModel noise;
    noise.sigma_lsb = lsb;
    noise.enabled = lsb > 0.0;
    noise.scope = scope;
    sb::CompiledNetwork compiled = sb::compile_to_pulse_network(net, curve, dac, noise);

    std::vector<double> ests;
    ests.reserve(static_cast<std::size_t>(samples));
    double run_sum = 0.0, run_sq = 0.0;
    for (long s = 0; s < samples; ++s) {
      // Independent stream per (level, sample).
      std::uint64_t mix = seed ^ (0x100000001b3ull * (li + 1));
      const std::uint64_t run_seed = sb::splitmix64(mix) + static_cast<std::uint64_t>(s);
      const sb::RunResult run = compiled.network.run_cycles(cycles, run_seed);
      const auto est = sb::estimate_conditional(run, target, evidence,
                                                sb::ConditionalMethod::CounterRatio);
      ests.push_back(est.value);
      csv.f << sb::fmt_g17(lsb) << ',' << s << ',' << sb::fmt_g17(est.value) << '\n';
      run_sum += est.value;
      run_sq += est.value * est.value;
      const long n = s + 1;
      if (n % conv_stride == 0 || n == samples) {
        const double m = run_sum / static_cast<double>(n);
        conv.f << sb::fmt_g17(lsb) << ',' << n << ',' << sb::fmt_g17(m) << ',';
        if (n > 1) {
          const double var = (run_sq - static_cast<double>(n) * m * m) /
                             static_cast<double>(n - 1);
          conv.f << sb::fmt_g17(std::sqrt(std::max(var, 0.0)));
        }
        conv.f << '\n';
      }
    }

    // Estimate density: fixed-width bins, only occupied ones emitted.
    std::map<long, long> bins;
    for (double e : ests) ++bins[static_cast<long>(std::floor(e / bin_w))];
    for (const auto& [b, count] : bins)
      hist.f << sb::fmt_g17(lsb) << ',' << sb::fmt_g17(static_cast<double>(b) * bin_w) << ','
             << sb::fmt_g17(static_cast<double>(b + 1) * bin_w) << ',' << count << '\n';

    double mean = 0.0;
    for (double e : ests) mean += e;
    mean /= static_cast<double>(ests.size());
    double var = 0.0;
    for (double e : ests) var += (e - mean) * (e - mean);
    ordered_json row;
    row["sigma_lsb"] = lsb;
    row["samples"] = samples;
    row["mean"] = mean;
    // A single sample has no spread estimate.
    if (ests.size() > 1)
      row["std"] = std::sqrt(var / static_cast<double>(ests.size() - 1));
    jlevels.push_back(std::move(row));
    std::cout << "noise-sweep: sigma " << lsb << " LSB -> mean " << mean << '\n';
  }
  csv.close_checked(csv_path);
  hist.close_checked(hist_path);
  conv.close_checked(conv_path);

  ordered_json jc;
  jc["network"] = network_path; // empty = builtin sprinkler
  jc["seed"] = seed;
  jc["out"] = out_dir;
  jc["samples"] = samples;
  jc["cycles"] = cycles;
  jc["levels"] = levels_csv;
  jc["target"] = target;
  jc["evidence"] = evidence;
  jc["noise_scope"] = noise_scope;
  jc["curve"] = curve_to_config(curve);
  ordered_json jr;
  jr["per_sample_csv"] = csv_path;
  jr["histogram_csv"] = hist_path;
  jr["convergence_csv"] = conv_path;
  jr["levels"] = std::move(jlevels);
  write_result(out_dir + "/noise_summary.json", "noise-sweep", jc, jr);
  return 0;
}

// ---------------------------------------------------------------- divider-test

int run_divider_test(const std::string& out_dir, const sb::SwitchCurve& curve,
                     std::uint64_t seed, double s1, double s2, long cycles, int window,
                     double gain, int burn_in) {
  ensure_outdir(out_dir);
  if (!(s1 >= 0.0) || !(s1 <= 1.0) || !(s2 >= 0.0) || !(s2 <= 1.0))
    throw sb::validation_error("train rates must lie in [0, 1]");
  if (!(s2 > 0.0)) throw sb::validation_error("divisor rate must be > 0");
  if (cycles <= 0) throw sb::validation_error("cycle count must be > 0");

  sb::Rng rng_s1 = sb::Rng::for_stream(seed, 1);
  sb::Rng rng_s2 = sb::Rng::for_stream(seed, 2);
  sb::PulseTrain t1, t2;
  for (long c = 0; c < cycles; ++c) {
    t1.bits.push_back(rng_s1.bernoulli(s1) ? 1 : 0);
    t2.bits.push_back(rng_s2.bernoulli(s2) ? 1 : 0);
  }

  sb::DividerConfig cfg;
  cfg.window_len = window;
  cfg.step_gain = gain;
  cfg.burn_in_windows = burn_in;
  cfg.curve = curve;
  const sb::DivideResult res = sb::divide_trains(t1, t2, cfg, seed);

  const std::string csv_path = out_dir + "/divider_windows.csv";
  {
    CsvFile csv(csv_path);
    csv.f << "window,so_setting\n";
    for (std::size_t w = 0; w < res.window_settings.size(); ++w)
      csv.f << w << ',' << sb::fmt_g17(res.window_settings[w]) << '\n';
    csv.close_checked(csv_path);
  }

  const double expected = std::min(s1 / s2, 1.0);
  ordered_json jc;
  jc["seed"] = seed;
  jc["out"] = out_dir;
  jc["s1"] = s1;
  jc["s2"] = s2;
  jc["cycles"] = cycles;
  jc["window"] = window;
  jc["gain"] = gain;
  jc["burn_in"] = burn_in;
  jc["curve"] = curve_to_config(curve);
  ordered_json jr;
  jr["estimate"] = res.estimate;
  jr["expected_ratio"] = expected;
  jr["abs_error"] = std::fabs(res.estimate - expected);
  jr["final_setting"] = res.final_setting;
  jr["windows"] = res.window_settings.size();
  jr["windows_csv"] = csv_path;
  jr["s2_rate"] = res.s2_rate;
  jr["low_evidence"] = res.low_evidence;
  if (!res.diagnostic.empty()) jr["diagnostic"] = res.diagnostic;
  write_result(out_dir + "/divider_result.json", "divider-test", jc, jr);
  std::cout << "divider-test: estimate " << res.estimate << " vs " << expected
            << " (|err| = " << std::fabs(res.estimate - expected) << ")\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic-nanomagnet pulse-computing simulator"};
  app.require_subcommand(1);
  app.fallthrough(); // allow --config after the subcommand name

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; CLI flags take precedence");

  // Shared knobs, merged per subcommand.
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string network_path;
  long cycles = 100000;
  long samples = 1000;
  double noise_lsb = 0.0;
  std::string noise_scope = "per-sample";

  auto* c_dev = app.add_subcommand("device-sweep", "Write the fitted switching curves as CSV");
  long mc_trials = 0;
  auto* o_dev_out = c_dev->add_option("--out", out_dir, "output directory");
  auto* o_dev_seed = c_dev->add_option("--seed", seed, "master seed");
  auto* o_dev_mc = c_dev->add_option("--mc-trials", mc_trials,
                                     "write attempts per amplitude point (0 = model only)");

  auto* c_llg = app.add_subcommand("llg", "Thermal macrospin write attempts");
  double amplitude_ua = 900.0, width_ns = 2.0, temperature_k = 300.0, dt_ps = 1.0;
  long trials = 200;
  int trajectories = 2, threads = 1;
  auto* o_llg_out = c_llg->add_option("--out", out_dir, "output directory");
  auto* o_llg_seed = c_llg->add_option("--seed", seed, "master seed");
  auto* o_llg_amp = c_llg->add_option("--amplitude-ua", amplitude_ua, "pulse amplitude in uA");
  auto* o_llg_width = c_llg->add_option("--width-ns", width_ns, "pulse width in ns");
  auto* o_llg_temp = c_llg->add_option("--temperature", temperature_k, "temperature in K");
  auto* o_llg_trials = c_llg->add_option("--trials", trials, "Monte Carlo write attempts");
  auto* o_llg_traj = c_llg->add_option("--trajectories", trajectories, "trajectory files to write");
  auto* o_llg_dt = c_llg->add_option("--dt-ps", dt_ps, "integrator step in ps");
  auto* o_llg_threads = c_llg->add_option("--threads", threads, "worker threads (0 = auto)");

  auto* c_inf = app.add_subcommand("infer", "Run a pulse network and report inference results");
  std::vector<std::string> targets, evidences;
  bool dump_trains = false;
  auto* o_inf_out = c_inf->add_option("--out", out_dir, "output directory");
  auto* o_inf_net = c_inf->add_option("--network", network_path, "network JSON (default: builtin sprinkler)");
  auto* o_inf_seed = c_inf->add_option("--seed", seed, "master seed");
  auto* o_inf_cycles = c_inf->add_option("--cycles", cycles, "clock cycles to run");
  auto* o_inf_noise = c_inf->add_option("--noise-lsb", noise_lsb, "write-noise sigma in DAC LSBs");
  auto* o_inf_scope = c_inf->add_option("--noise-scope", noise_scope, "per-sample or per-write");
  auto* o_inf_target = c_inf->add_option("--target", targets,
                                         "conditional target variable (repeatable)");
  auto* o_inf_evid = c_inf->add_option("--evidence", evidences,
                                       "conditional evidence variable, =1 (repeatable)");
  c_inf->add_flag("--dump-trains", dump_trains, "also write the raw pulse trains CSV");

  auto* c_noise = app.add_subcommand("noise-sweep", "Repeated-inference robustness vs write noise");
  std::string levels_csv = "0,1,2,3";
  std::string ns_target = "Rain", ns_evidence = "Wet";
  auto* o_ns_out = c_noise->add_option("--out", out_dir, "output directory");
  auto* o_ns_net = c_noise->add_option("--network", network_path, "network JSON (default: builtin sprinkler)");
  auto* o_ns_seed = c_noise->add_option("--seed", seed, "master seed");
  auto* o_ns_samples = c_noise->add_option("--samples", samples, "independent inference samples per level");
  auto* o_ns_cycles = c_noise->add_option("--cycles", cycles, "clock cycles per sample");
  auto* o_ns_levels = c_noise->add_option("--noise-lsb", levels_csv, "comma-separated sigma list in LSBs");
  auto* o_ns_target = c_noise->add_option("--target", ns_target, "conditional target variable");
  auto* o_ns_evid = c_noise->add_option("--evidence", ns_evidence, "conditional evidence variable (=1)");
  auto* o_ns_scope = c_noise->add_option("--noise-scope", noise_scope, "per-sample or per-write");

  auto* c_div = app.add_subcommand("divider-test", "Rate divider on synthetic Bernoulli trains");
  double s1 = 0.3, s2 = 0.6, gain = 0.5;
  int window = 64, burn_in = 10;
  auto* o_div_out = c_div->add_option("--out", out_dir, "output directory");
  auto* o_div_seed = c_div->add_option("--seed", seed, "master seed");
  auto* o_div_s1 = c_div->add_option("--s1", s1, "numerator train rate");
  auto* o_div_s2 = c_div->add_option("--s2", s2, "denominator train rate");
  auto* o_div_cycles = c_div->add_option("--cycles", cycles, "train length in cycles");
  auto* o_div_window = c_div->add_option("--window", window, "counting window in cycles");
  auto* o_div_gain = c_div->add_option("--gain", gain, "feedback gain");
  auto* o_div_burn = c_div->add_option("--burn-in", burn_in, "windows dropped before averaging");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    nlohmann::json cfg = nlohmann::json::object();
    if (!config_path.empty()) cfg = load_json_file(config_path, "config");

    if (c_dev->parsed()) {
      merge_cfg(o_dev_out, cfg, "out", out_dir);
      merge_cfg(o_dev_seed, cfg, "seed", seed);
      merge_cfg(o_dev_mc, cfg, "mc_trials", mc_trials);
      return run_device_sweep(out_dir, curve_from_config(cfg), mc_trials, seed);
    }
    if (c_llg->parsed()) {
      merge_cfg(o_llg_out, cfg, "out", out_dir);
      merge_cfg(o_llg_seed, cfg, "seed", seed);
      merge_cfg(o_llg_amp, cfg, "amplitude_ua", amplitude_ua);
      merge_cfg(o_llg_width, cfg, "width_ns", width_ns);
      merge_cfg(o_llg_temp, cfg, "temperature_k", temperature_k);
      merge_cfg(o_llg_trials, cfg, "trials", trials);
      merge_cfg(o_llg_traj, cfg, "trajectories", trajectories);
      merge_cfg(o_llg_dt, cfg, "dt_ps", dt_ps);
      merge_cfg(o_llg_threads, cfg, "threads", threads);
      return run_llg(out_dir, seed, amplitude_ua, width_ns, temperature_k, trials,
                     trajectories, dt_ps, threads);
    }
    if (c_inf->parsed()) {
      merge_cfg(o_inf_out, cfg, "out", out_dir);
      merge_cfg(o_inf_net, cfg, "network", network_path);
      merge_cfg(o_inf_seed, cfg, "seed", seed);
      merge_cfg(o_inf_cycles, cfg, "cycles", cycles);
      merge_cfg(o_inf_noise, cfg, "noise_lsb", noise_lsb);
      merge_cfg(o_inf_scope, cfg, "noise_scope", noise_scope);
      merge_cfg_list(o_inf_target, cfg, "target", targets);
      merge_cfg_list(o_inf_evid, cfg, "evidence", evidences);
      return run_infer(out_dir, network_path, curve_from_config(cfg), seed, cycles,
                       noise_lsb, noise_scope, std::move(targets), std::move(evidences),
                       dump_trains);
    }
    if (c_noise->parsed()) {
      merge_cfg(o_ns_out, cfg, "out", out_dir);
      merge_cfg(o_ns_net, cfg, "network", network_path);
      merge_cfg(o_ns_seed, cfg, "seed", seed);
      merge_cfg(o_ns_samples, cfg, "samples", samples);
      merge_cfg(o_ns_cycles, cfg, "cycles", cycles);
      merge_cfg(o_ns_levels, cfg, "noise_lsb", levels_csv);
      merge_cfg(o_ns_target, cfg, "target", ns_target);
      merge_cfg(o_ns_evid, cfg, "evidence", ns_evidence);
      merge_cfg(o_ns_scope, cfg, "noise_scope", noise_scope);
      return run_noise_sweep(out_dir, network_path, curve_from_config(cfg), seed, samples,
                             cycles, levels_csv, ns_target, ns_evidence, noise_scope);
    }
    if (c_div->parsed()) {
      merge_cfg(o_div_out, cfg, "out", out_dir);
      merge_cfg(o_div_seed, cfg, "seed", seed);
      merge_cfg(o_div_s1, cfg, "s1", s1);
      merge_cfg(o_div_s2, cfg, "s2", s2);
      merge_cfg(o_div_cycles, cfg, "cycles", cycles);
      merge_cfg(o_div_window, cfg, "window", window);
      merge_cfg(o_div_gain, cfg, "gain", gain);
      merge_cfg(o_div_burn, cfg, "burn_in", burn_in);
      return run_divider_test(out_dir, curve_from_config(cfg), seed, s1, s2, cycles,
                              window, gain, burn_in);
    }
  } catch (const sb::validation_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
