#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir() {
  static int counter = 0;
  const fs::path d = fs::temp_directory_path() /
                     ("spinbayes_cli_" + std::to_string(::getpid()) + "_" +
                      std::to_string(counter++));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SPINBAYES_CLI_PATH) + " " + args +
                          " >/dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p) {
  return nlohmann::json::parse(read_file(p));
}

// Result files are byte-stable across reruns except for the timestamp line.
std::string without_timestamp(const std::string& text) {
  std::stringstream in(text), out;
  std::string line;
  while (std::getline(in, line))
    if (line.find("\"timestamp\"") == std::string::npos) out << line << '\n';
  return out.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::size_t cols) {
  std::ifstream f(p);
  REQUIRE(f.good());
  std::string line;
  REQUIRE(std::getline(f, line)); // header
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
    REQUIRE(row.size() == cols);
    rows.push_back(std::move(row));
  }
  return rows;
}

double lookup(const std::vector<std::vector<double>>& rows, double key) {
  for (const auto& r : rows)
    if (std::fabs(r[0] - key) < 1e-9) return r[1];
  FAIL("no row with key " << key);
  return 0.0;
}

} // namespace

TEST_CASE("device-sweep writes curves that hit the calibration anchors") {
  const fs::path dir = fresh_dir();
  REQUIRE(run_cli("device-sweep --out " + dir.string()) == 0);

  const auto amp = read_csv(dir / "device_amplitude.csv", 2);
  REQUIRE(amp.size() >= 50);
  CHECK_THAT(lookup(amp, 0.47), WithinAbs(0.01, 1e-9));
  CHECK_THAT(lookup(amp, 0.54), WithinAbs(0.99, 1e-9));
  for (std::size_t k = 1; k < amp.size(); ++k) {
    CHECK(amp[k][0] > amp[k - 1][0]);
    CHECK(amp[k][1] > amp[k - 1][1]);
  }

  const auto wid = read_csv(dir / "device_width.csv", 2);
  CHECK_THAT(lookup(wid, 1.0), WithinAbs(0.06, 1e-9));
  CHECK_THAT(lookup(wid, 50.0), WithinAbs(0.98, 1e-9));
  for (std::size_t k = 1; k < wid.size(); ++k) CHECK(wid[k][1] > wid[k - 1][1]);

  const auto j = read_json(dir / "device_sweep.json");
  CHECK(j["tool"] == "device-sweep");
  CHECK(j["config_hash"].get<std::string>().size() == 16);
  CHECK_THAT(j["results"]["anchors"]["p_1ms"].get<double>(), WithinAbs(0.06, 1e-9));

  SECTION("Monte Carlo column appears only when trials are requested") {
    const fs::path dir2 = fresh_dir();
    REQUIRE(run_cli("device-sweep --out " + dir2.string() + " --mc-trials 400 --seed 21") == 0);
    const auto mc = read_csv(dir2 / "device_amplitude.csv", 3);
    REQUIRE(mc.size() == amp.size());
    for (const auto& r : mc) {
      // 400 write attempts per point: allow generous sampling slack.
      CHECK_THAT(r[2], WithinAbs(r[1], 0.12));
      CHECK(r[2] >= 0.0);
      CHECK(r[2] <= 1.0);
    }
    // The width grid stays model-only; pulse writes are amplitude-driven.
    read_csv(dir2 / "device_width.csv", 2);
  }
  SECTION("curve calibration is loadable from the config file") {
    const fs::path cfg = dir / "curve.json";
    {
      std::ofstream f(cfg);
      f << R"({"curve": {"amplitude_anchors": [0.40, 0.01, 0.60, 0.99]}})";
    }
    const fs::path dir3 = fresh_dir();
    REQUIRE(run_cli("device-sweep --config " + cfg.string() + " --out " + dir3.string()) == 0);
    const auto j3 = read_json(dir3 / "device_sweep.json");
    CHECK_THAT(j3["config"]["curve"]["i50_ma"].get<double>(), WithinAbs(0.5, 1e-12));
    CHECK_THAT(j3["results"]["anchors"]["p_1ms"].get<double>(), WithinAbs(0.06, 1e-9));
    const auto amp3 = read_csv(dir3 / "device_amplitude.csv", 2);
    CHECK_THAT(lookup(amp3, 0.47), WithinAbs(0.2012442347150104, 1e-9));
    SECTION("explicit parameters override anchors") {
      const fs::path cfg2 = dir / "curve2.json";
      {
        std::ofstream f(cfg2);
        f << R"({"curve": {"amplitude_anchors": [0.40, 0.01, 0.60, 0.99], "i50_ma": 0.52}})";
      }
      const fs::path dir4 = fresh_dir();
      REQUIRE(run_cli("device-sweep --config " + cfg2.string() + " --out " + dir4.string()) == 0);
      const auto j4 = read_json(dir4 / "device_sweep.json");
      CHECK_THAT(j4["config"]["curve"]["i50_ma"].get<double>(), WithinAbs(0.52, 1e-12));
      CHECK(j4["config"]["curve"]["slope_ma"] == j3["config"]["curve"]["slope_ma"]);
    }
    SECTION("a malformed curve block is a usage error") {
      const fs::path cfg3 = dir / "curve3.json";
      {
        std::ofstream f(cfg3);
        f << R"({"curve": {"amplitude_anchors": [0.40, 0.01]}})";
      }
      CHECK(run_cli("device-sweep --config " + cfg3.string() + " --out " + dir3.string()) == 2);
    }
  }
}

TEST_CASE("llg subcommand writes trajectories and a summary") {
  const fs::path dir = fresh_dir();
  REQUIRE(run_cli("llg --out " + dir.string() +
                  " --seed 5 --trials 24 --trajectories 2 --amplitude-ua 900"
                  " --width-ns 2") == 0);

  const std::string t0 = read_file(dir / "trajectory_0.csv");
  const std::string t1 = read_file(dir / "trajectory_1.csv");
  CHECK(t0.rfind("t_s,mx,my,mz\n", 0) == 0);
  CHECK(t0 != t1); // different trial seeds, different thermal paths

  const auto j = read_json(dir / "llg_summary.json");
  CHECK(j["config"]["trials"] == 24);
  const double p = j["results"]["p_switch"].get<double>();
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);
  CHECK(j["results"]["n_trials"] == 24);
  CHECK(j["results"]["trajectory_files"].size() == 2);
}

TEST_CASE("infer runs the builtin network end to end") {
  const fs::path dir = fresh_dir();
  const std::string args = " --cycles 3000 --seed 9 --target Sprinkler --evidence Wet";
  REQUIRE(run_cli("infer --out " + dir.string() + args) == 0);
  const auto j = read_json(dir / "infer_result.json");

  for (const char* name : {"Cloudy", "Rain", "Sprinkler", "Wet"}) {
    const auto& row = j["results"]["marginals"][name];
    CHECK(row.contains("exact"));
    CHECK(row.contains("realized_exact"));
    CHECK(row.contains("pulse_estimate"));
  }
  CHECK_THAT(j["results"]["marginals"]["Wet"]["exact"].get<double>(),
             WithinAbs(0.6471, 1e-9));
  const auto& wet = j["results"]["marginals"]["Wet"];
  CHECK_THAT(wet["abs_error_vs_exact"].get<double>(),
             WithinAbs(std::fabs(wet["pulse_estimate"].get<double>() -
                                 wet["exact"].get<double>()),
                       1e-15));
  REQUIRE(j["results"]["conditionals"].size() == 1);
  const auto& cond = j["results"]["conditionals"][0];
  CHECK(cond["target"] == "Sprinkler");
  CHECK_THAT(cond["exact"].get<double>(), WithinAbs(0.42976356050069553, 1e-9));
  const double cr = cond["counter_ratio"].get<double>();
  CHECK(cr > 0.3);
  CHECK(cr < 0.56);
  CHECK(cond["divider_low_evidence"] == false);

  SECTION("reruns are byte-identical up to the timestamp") {
    const std::string first = without_timestamp(read_file(dir / "infer_result.json"));
    REQUIRE(run_cli("infer --out " + dir.string() + args) == 0);
    CHECK(without_timestamp(read_file(dir / "infer_result.json")) == first);
  }
  SECTION("a different seed gives different pulse statistics") {
    const fs::path dir3 = fresh_dir();
    REQUIRE(run_cli("infer --out " + dir3.string() +
                    " --cycles 3000 --seed 10 --target Sprinkler --evidence Wet") == 0);
    const auto j3 = read_json(dir3 / "infer_result.json");
    CHECK(j3["results"]["marginals"]["Wet"]["pulse_estimate"] !=
          j["results"]["marginals"]["Wet"]["pulse_estimate"]);
    // Exact quantities are seed-independent.
    CHECK(j3["results"]["marginals"]["Wet"]["realized_exact"] ==
          j["results"]["marginals"]["Wet"]["realized_exact"]);
  }
}

TEST_CASE("infer defaults to both benchmark conditionals on the builtin network") {
  const fs::path dir = fresh_dir();
  REQUIRE(run_cli("infer --out " + dir.string() + " --cycles 2000 --seed 8") == 0);
  const auto j = read_json(dir / "infer_result.json");
  const auto& conds = j["results"]["conditionals"];
  REQUIRE(conds.size() == 2);
  CHECK(conds[0]["target"] == "Sprinkler");
  CHECK(conds[0]["evidence"] == "Wet");
  CHECK(conds[1]["target"] == "Rain");
  CHECK(conds[1]["evidence"] == "Wet");
  CHECK_THAT(conds[1]["exact"].get<double>(), WithinAbs(0.7079276773296247, 1e-12));
  for (const auto& c : conds) {
    const double err = std::fabs(c["counter_ratio"].get<double>() -
                                 c["realized_exact"].get<double>());
    CHECK_THAT(c["counter_abs_error_vs_realized"].get<double>(), WithinAbs(err, 1e-15));
  }
  SECTION("repeated target flags pair up in order") {
    const fs::path dir2 = fresh_dir();
    REQUIRE(run_cli("infer --out " + dir2.string() +
                    " --cycles 2000 --seed 8 --target Rain --evidence Wet"
                    " --target Cloudy --evidence Rain") == 0);
    const auto j2 = read_json(dir2 / "infer_result.json");
    const auto& c2 = j2["results"]["conditionals"];
    REQUIRE(c2.size() == 2);
    CHECK(c2[0]["target"] == "Rain");
    CHECK(c2[1]["target"] == "Cloudy");
    CHECK(c2[1]["evidence"] == "Rain");
    // P(C=1 | R=1) = 0.5*0.8 / (0.5*0.8 + 0.5*0.2) = 0.8 on the ideal net.
    CHECK_THAT(c2[1]["exact"].get<double>(), WithinAbs(0.8, 1e-12));
  }
}

TEST_CASE("infer can dump raw trains") {
  const fs::path dir = fresh_dir();
  REQUIRE(run_cli("infer --out " + dir.string() + " --cycles 50 --seed 4 --dump-trains") == 0);
  const auto rows = read_csv(dir / "trains.csv", 5); // cycle + 4 variables
  REQUIRE(rows.size() == 50);
  for (const auto& r : rows)
    for (std::size_t c = 1; c < r.size(); ++c) CHECK((r[c] == 0.0 || r[c] == 1.0));
}

TEST_CASE("config file merges under explicit flags") {
  const fs::path dir = fresh_dir();
  const fs::path cfg = dir / "cfg.json";
  {
    std::ofstream f(cfg);
    f << R"({"cycles": 2500, "seed": 77, "target": "Rain", "evidence": "Wet"})";
  }
  const fs::path d1 = fresh_dir();
  REQUIRE(run_cli("infer --config " + cfg.string() + " --out " + d1.string()) == 0);
  const auto j1 = read_json(d1 / "infer_result.json");
  CHECK(j1["config"]["cycles"] == 2500);
  CHECK(j1["config"]["seed"] == 77);
  // A scalar config value is promoted to the one-element list form.
  REQUIRE(j1["config"]["target"].is_array());
  CHECK(j1["config"]["target"][0] == "Rain");
  REQUIRE(j1["results"]["conditionals"].size() == 1);

  SECTION("explicit flag wins over the config key") {
    const fs::path d2 = fresh_dir();
    REQUIRE(run_cli("infer --config " + cfg.string() + " --out " + d2.string() +
                    " --cycles 500") == 0);
    const auto j2 = read_json(d2 / "infer_result.json");
    CHECK(j2["config"]["cycles"] == 500);
    CHECK(j2["config"]["seed"] == 77);
  }
  SECTION("the echoed config reproduces the run") {
    const fs::path cfg2 = dir / "echo.json";
    {
      std::ofstream f(cfg2);
      f << j1["config"].dump();
    }
    const fs::path d3 = fresh_dir();
    REQUIRE(run_cli("infer --config " + cfg2.string() + " --out " + d3.string()) == 0);
    const auto j3 = read_json(d3 / "infer_result.json");
    CHECK(j3["results"] == j1["results"]);
  }
}

TEST_CASE("divider-test converges on synthetic trains") {
  const fs::path dir = fresh_dir();
  REQUIRE(run_cli("divider-test --out " + dir.string() +
                  " --s1 0.3 --s2 0.6 --cycles 4000 --seed 11") == 0);
  const auto j = read_json(dir / "divider_result.json");
  CHECK_THAT(j["results"]["expected_ratio"].get<double>(), WithinAbs(0.5, 1e-12));
  CHECK(j["results"]["abs_error"].get<double>() < 0.08);
  CHECK(j["results"]["windows"] == 62);
  const auto rows = read_csv(dir / "divider_windows.csv", 2);
  CHECK(rows.size() == 62);
}

TEST_CASE("noise-sweep reports spread per level") {
  const fs::path dir = fresh_dir();
  REQUIRE(run_cli("noise-sweep --out " + dir.string() +
                  " --samples 4 --cycles 400 --noise-lsb 0,2 --seed 3") == 0);
  const auto j = read_json(dir / "noise_summary.json");
  const auto& levels = j["results"]["levels"];
  REQUIRE(levels.size() == 2);
  CHECK(levels[0]["sigma_lsb"] == 0.0);
  CHECK(levels[1]["sigma_lsb"] == 2.0);
  for (const auto& row : levels) {
    const double mean = row["mean"].get<double>();
    CHECK(mean > 0.0);
    CHECK(mean < 1.0);
    CHECK(row["std"].get<double>() >= 0.0);
  }
  const auto rows = read_csv(dir / "noise_sweep.csv", 3);
  CHECK(rows.size() == 8);

  SECTION("histogram rows cover every recorded sample") {
    const auto hist = read_csv(dir / "noise_hist.csv", 4);
    REQUIRE(!hist.empty());
    double total = 0.0;
    for (const auto& r : hist) {
      CHECK(r[2] > r[1]); // bin_hi > bin_lo
      CHECK(r[3] >= 1.0); // only occupied bins are written
      total += r[3];
    }
    CHECK(total == 8.0); // 2 levels x 4 samples
  }
  SECTION("convergence curve ends at the per-level mean") {
    std::ifstream f(dir / "noise_convergence.csv");
    std::string line;
    REQUIRE(std::getline(f, line));
    CHECK(line == "sigma_lsb,n_samples,running_mean,running_std");
    std::size_t finals = 0, singles = 0;
    while (std::getline(f, line)) {
      std::stringstream ss(line);
      std::string sig, n, mean, sd;
      REQUIRE(std::getline(ss, sig, ','));
      REQUIRE(std::getline(ss, n, ','));
      REQUIRE(std::getline(ss, mean, ','));
      const bool has_sd = static_cast<bool>(std::getline(ss, sd, ','));
      if (n == "1") {
        ++singles;
        CHECK(!has_sd); // one sample gives no spread estimate
        continue;
      }
      REQUIRE(has_sd);
      if (n != "4") continue;
      ++finals;
      const auto& row = sig == "0" ? levels[0] : levels[1];
      CHECK_THAT(std::stod(mean), WithinAbs(row["mean"].get<double>(), 1e-12));
      CHECK_THAT(std::stod(sd), WithinAbs(row["std"].get<double>(), 1e-9));
    }
    CHECK(finals == 2);
    CHECK(singles == 2);
  }
  SECTION("a single sample has a mean but no spread") {
    const fs::path dir2 = fresh_dir();
    REQUIRE(run_cli("noise-sweep --out " + dir2.string() +
                    " --samples 1 --cycles 400 --noise-lsb 1 --seed 3") == 0);
    const auto j2 = read_json(dir2 / "noise_summary.json");
    const auto& lv = j2["results"]["levels"][0];
    CHECK(lv.contains("mean"));
    CHECK(!lv.contains("std"));
    // The lone convergence row leaves the std cell empty.
    const std::string conv = read_file(dir2 / "noise_convergence.csv");
    REQUIRE(conv.rfind("sigma_lsb,n_samples,running_mean,running_std\n1,1,", 0) == 0);
    CHECK(conv.substr(conv.size() - 2) == ",\n");
  }
}

TEST_CASE("exit codes distinguish usage errors from runtime failures") {
  const fs::path dir = fresh_dir();
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("no-such-subcommand") == 2);
  CHECK(run_cli("infer --no-such-flag") == 2);
  CHECK(run_cli("infer --out " + dir.string() + " --cycles 0") == 2);
  CHECK(run_cli("infer --out " + dir.string() + " --cycles 10 --target Sprinkler") == 2);
  CHECK(run_cli("infer --out " + dir.string() + " --network /nonexistent.json") == 2);
  CHECK(run_cli("infer --out " + dir.string() + " --cycles 10 --noise-scope sometimes") == 2);
  const fs::path bad = dir / "bad.json";
  {
    std::ofstream f(bad);
    f << "{ not json";
  }
  CHECK(run_cli("infer --out " + dir.string() + " --network " + bad.string()) == 2);
  // Validation inside the network definition also maps to exit 2.
  const fs::path cyc = dir / "cycle.json";
  {
    std::ofstream f(cyc);
    f << R"({"variables": [
      {"name": "A", "parents": ["B"], "cpt": [0.5, 0.5]},
      {"name": "B", "parents": ["A"], "cpt": [0.5, 0.5]}
    ]})";
  }
  CHECK(run_cli("infer --out " + dir.string() + " --network " + cyc.string()) == 2);
}

TEST_CASE("network files load equivalently to the builtin") {
  // data/sprinkler.json ships with the repository.
  const fs::path repo_net = fs::path(SPINBAYES_SOURCE_DIR) / "data" / "sprinkler.json";
  REQUIRE(fs::exists(repo_net));
  const fs::path d1 = fresh_dir(), d2 = fresh_dir();
  const std::string query = " --cycles 200 --seed 21 --target Rain --evidence Wet";
  REQUIRE(run_cli("infer --out " + d1.string() + query) == 0);
  REQUIRE(run_cli("infer --out " + d2.string() + query + " --network " +
                  repo_net.string()) == 0);
  const auto j1 = read_json(d1 / "infer_result.json");
  const auto j2 = read_json(d2 / "infer_result.json");
  CHECK(j1["results"] == j2["results"]);
}
