#include "morphon/oc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace morphon {

void OcConfig::validate() const {
  if (!(move_limit > 0.0 && move_limit <= 1.0)) throw std::invalid_argument("oc: move limit must be in (0,1]");
  if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("oc: damping must be in (0,1]");
  if (!(volume_tol > 0.0)) throw std::invalid_argument("oc: volume tolerance must be > 0");
  if (!(growth_factor > 1.0)) throw std::invalid_argument("oc: bracket growth factor must be > 1");
  if (!(lambda_lo > 0.0 && lambda_hi > lambda_lo)) throw std::invalid_argument("oc: invalid multiplier bracket");
  if (!(g_floor > 0.0)) throw std::invalid_argument("oc: g_floor must be > 0");
}

std::vector<double> sanitize_sensitivities(std::span<const double> g, double g_floor) {
  std::vector<double> out(g.size());
  for (size_t i = 0; i < g.size(); ++i) {
    if (std::isnan(g[i])) throw std::invalid_argument("oc: NaN in sensitivity " + std::to_string(i));
    out[i] = std::min(g[i], -g_floor);
  }
  return out;
}

std::vector<double> oc_candidate(std::span<const double> z, std::span<const double> g,
                                 std::span<const double> dV, double lambda, const OcConfig& cfg) {
  std::vector<double> out(z.size());
  for (size_t i = 0; i < z.size(); ++i) {
    const double ratio = -g[i] / (lambda * dV[i]);
    const double trial = z[i] * std::pow(ratio, cfg.damping);
    const double lo = std::max(0.0, z[i] - cfg.move_limit);
    const double hi = std::min(1.0, z[i] + cfg.move_limit);
    out[i] = std::clamp(trial, lo, hi);
  }
  return out;
}

namespace {

double weighted_sum(std::span<const double> w, std::span<const double> x) {
  double s = 0.0;
  for (size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s;
}

}  // namespace

OcResult oc_step(std::span<const double> z, std::span<const double> g_raw,
                 std::span<const double> dV, double Vmax, const OcConfig& cfg) {
  cfg.validate();
  if (g_raw.size() != z.size() || dV.size() != z.size())
    throw std::invalid_argument("oc: z, g and dV must have equal length");
  if (!(Vmax > 0.0 && Vmax <= 1.0)) throw std::invalid_argument("oc: Vmax must be in (0,1]");
  for (size_t i = 0; i < dV.size(); ++i)
    if (!(dV[i] > 0.0)) throw std::invalid_argument("oc: volume sensitivity must be positive");
  const auto g = sanitize_sensitivities(g_raw, cfg.g_floor);

  double total = 0.0;
  for (double d : dV) total += d;
  OcResult res;
  res.target = Vmax * total;
  const double tol = cfg.volume_tol * res.target;

  auto evaluate = [&](double lambda) {
    res.lambda = lambda;
    res.z = oc_candidate(z, g, dV, lambda, cfg);
    res.volume = weighted_sum(dV, res.z);
    return res.volume;
  };

  double lo = cfg.lambda_lo;
  if (evaluate(lo) <= res.target + tol) {
    res.active = std::abs(res.volume - res.target) <= tol;
    return res;
  }
  double hi = cfg.lambda_hi;
  int grown = 0;
  while (evaluate(hi) > res.target + tol) {
    if (++grown > cfg.max_growth_steps)
      throw std::runtime_error("oc: no multiplier bracket found; volume stays above target");
    lo = hi;
    hi *= cfg.growth_factor;
  }
  if (res.target - res.volume <= tol) return res;

  // vol(lo) > target >= vol(hi); volume is non-increasing in lambda.
  for (int it = 0; it < cfg.max_bisection_steps; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (!(mid > lo && mid < hi)) break;
    const double v = evaluate(mid);
    if (std::abs(v - res.target) <= tol) return res;
    if (v > res.target)
      lo = mid;
    else
      hi = mid;
  }
  // Bracket collapsed at a jump in the clamped volume; keep the feasible side.
  evaluate(hi);
  return res;
}

std::vector<double> oc_update(std::span<const double> z, std::span<const double> g,
                              std::span<const double> dV, double Vmax, const OcConfig& cfg) {
  return oc_step(z, g, dV, Vmax, cfg).z;
}

}  // namespace morphon
