#pragma once

// Small I/O helpers shared by the CLI and tests: deterministic number
// formatting, FNV-1a hashing for config fingerprints, trajectory CSV.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>

#include "spinbayes/errors.hpp"
#include "spinbayes/llg.hpp"

namespace spinbayes {

// Shortest exact decimal round-trip is not needed; %.17g is exact and stable.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream f(path);
  if (!f) throw numeric_error("cannot open '" + path + "' for writing");
  f << "t_s,mx,my,mz\n";
  for (std::size_t i = 0; i < traj.t_s.size(); ++i)
    f << fmt_g17(traj.t_s[i]) << ',' << fmt_g17(traj.m[i].x) << ','
      << fmt_g17(traj.m[i].y) << ',' << fmt_g17(traj.m[i].z) << '\n';
  if (!f.good()) throw numeric_error("write failed for '" + path + "'");
}

} // namespace spinbayes
