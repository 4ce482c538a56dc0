#pragma once

#include <span>
#include <vector>

namespace morphon {

struct OcConfig {
  double move_limit = 0.2;
  double damping = 0.5;
  double volume_tol = 1e-6;  // relative
  double growth_factor = 10.0;
  int max_growth_steps = 60;
  int max_bisection_steps = 300;
  double lambda_lo = 1e-9;
  double lambda_hi = 1e9;
  double g_floor = 1e-12;

  void validate() const;
};

// Design for a fixed multiplier:
//   clamp(z_i (-g_i / (lambda dV_i))^damping, max(0, z_i - m), min(1, z_i + m))
// with g already sanitized to be <= -g_floor.
std::vector<double> oc_candidate(std::span<const double> z, std::span<const double> g,
                                 std::span<const double> dV, double lambda, const OcConfig& cfg);

// Replaces every component by min(g_i, -g_floor). Throws on NaN.
std::vector<double> sanitize_sensitivities(std::span<const double> g, double g_floor);

struct OcResult {
  std::vector<double> z;
  double lambda = 0.0;
  double volume = 0.0;   // dV^T z, i.e. v^T P z
  double target = 0.0;   // Vmax * sum(dV)
  bool active = true;    // false when slack at the lower bracket
};

// Optimality-criteria step with log-space bisection on the volume multiplier.
// dV = P^T v; Vmax is the allowed fraction of the total volume sum(dV).
OcResult oc_step(std::span<const double> z, std::span<const double> g,
                 std::span<const double> dV, double Vmax, const OcConfig& cfg);

std::vector<double> oc_update(std::span<const double> z, std::span<const double> g,
                              std::span<const double> dV, double Vmax, const OcConfig& cfg);

}  // namespace morphon
