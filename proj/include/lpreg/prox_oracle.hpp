#pragma once

// Brute-force global minimization of the scalar prox objective. Used to
// verify prox_scalar(); shares no root finder with it.
//
// A uniform grid on [min(0,z)-1, max(0,z)+1] locates candidate brackets, the
// best few discrete local minima are refined by golden-section search, and
// each refined point is polished by bisection on the sign of g'. The point
// t = 0 is always a candidate.
//
// Grid blocks whose lower bound exceeds a known value of g cannot contain
// the grid minimum or any grid point below that value, so they are skipped.
// Set `prune = false` to evaluate every grid point.

#include <lpreg/prox.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace lpreg {

struct OracleOptions {
  std::size_t grid_points = 1'000'000;
  std::size_t block_size = 1000;
  std::size_t brackets = 3;
  bool prune = true;
};

namespace detail {

struct OracleCandidate {
  double t;
  double g;
};

inline double oracle_g(double t, double z, double v, double lambda, double p) {
  const double quad = (t - z) * (t - z) / (2.0 * v);
  return (t == 0.0) ? quad : lambda * std::pow(std::abs(t), p) + quad;
}

inline double oracle_dg(double t, double z, double v, double lambda, double p) {
  return lambda * p * std::pow(std::abs(t), p - 1.0) * sign(t) + (t - z) / v;
}

inline double golden_section(double a, double b, double z, double v, double lambda, double p) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double gc = oracle_g(c, z, v, lambda, p);
  double gd = oracle_g(d, z, v, lambda, p);
  for (int it = 0; it < 200 && (b - a) > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (gc <= gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - inv_phi * (b - a);
      gc = oracle_g(c, z, v, lambda, p);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + inv_phi * (b - a);
      gd = oracle_g(d, z, v, lambda, p);
    }
  }
  return (gc <= gd) ? c : d;
}

// Sharpen a smooth interior minimum by bisecting on the sign of g' over the
// grid bracket [a, b], restricted to the side of 0 that t lies on. Golden
// section alone resolves t only to about sqrt(eps * g / g'').
inline double derivative_polish(double t, double a, double b, double z, double v, double lambda,
                                double p) {
  if (t == 0.0) return t;
  double lo = a;
  double hi = b;
  if (t > 0.0) lo = std::max(lo, 0.5 * t); else hi = std::min(hi, 0.5 * t);
  double dlo = oracle_dg(lo, z, v, lambda, p);
  const double dhi = oracle_dg(hi, z, v, lambda, p);
  if (!(dlo < 0.0 && dhi > 0.0)) return t;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double dm = oracle_dg(mid, z, v, lambda, p);
    if (dm < 0.0) {
      lo = mid;
      dlo = dm;
    } else {
      hi = mid;
    }
  }
  const double glo = oracle_g(lo, z, v, lambda, p);
  const double ghi = oracle_g(hi, z, v, lambda, p);
  return (glo <= ghi) ? lo : hi;
}

}  // namespace detail

inline ProxResult prox_oracle(const ProxQuery& q, const OracleOptions& opt = {}) {
  q.validate();
  const double z = q.z;
  const double v = q.v;
  const double lam = q.lambda;
  const double p = q.p;
  auto g = [&](double t) { return detail::oracle_g(t, z, v, lam, p); };

  const std::size_t n = std::max<std::size_t>(opt.grid_points, 3);
  const double left = std::min(0.0, z) - 1.0;
  const double right = std::max(0.0, z) + 1.0;
  const double h = (right - left) / static_cast<double>(n - 1);
  auto node = [&](std::size_t j) { return left + static_cast<double>(j) * h; };

  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t block = std::max<std::size_t>(opt.block_size, 1);
  const std::size_t blocks = (n + block - 1) / block;

  std::vector<char> keep(blocks, 1);
  if (opt.prune) {
    double upper = g(0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
      const std::size_t j0 = b * block;
      const std::size_t j1 = std::min(n, j0 + block) - 1;
      upper = std::min(upper, g(node((j0 + j1) / 2)));
    }
    for (std::size_t b = 0; b < blocks; ++b) {
      const std::size_t j0 = b * block;
      const std::size_t j1 = std::min(n, j0 + block) - 1;
      const double t0 = node(j0);
      const double t1 = node(j1);
      const double min_abs = (t0 <= 0.0 && t1 >= 0.0) ? 0.0 : std::min(std::abs(t0), std::abs(t1));
      const double nearest = std::clamp(z, t0, t1);
      const double lower = lam * std::pow(min_abs, p) + (nearest - z) * (nearest - z) / (2.0 * v);
      keep[b] = lower <= upper + 1e-12 * (1.0 + std::abs(upper));
    }
  }

  // Discrete local minima inside kept blocks (neighbors are always evaluated),
  // best first.
  std::vector<std::pair<double, std::size_t>> minima;
  std::vector<double> buf(block + 2);
  for (std::size_t b = 0; b < blocks; ++b) {
    if (!keep[b]) continue;
    const std::size_t j0 = b * block;
    const std::size_t j1 = std::min(n, j0 + block);  // exclusive
    buf[0] = (j0 > 0) ? g(node(j0 - 1)) : inf;
    for (std::size_t j = j0; j < j1; ++j) buf[j - j0 + 1] = g(node(j));
    buf[j1 - j0 + 1] = (j1 < n) ? g(node(j1)) : inf;
    for (std::size_t j = j0; j < j1; ++j) {
      const double* w = &buf[j - j0];
      if (w[1] <= w[0] && w[1] <= w[2]) minima.emplace_back(w[1], j);
    }
  }
  std::stable_sort(minima.begin(), minima.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<detail::OracleCandidate> cands{{0.0, g(0.0)}};
  std::vector<std::size_t> used;
  for (const auto& [value, j] : minima) {
    if (used.size() >= opt.brackets) break;
    bool adjacent = false;
    for (std::size_t u : used) adjacent = adjacent || (j + 1 >= u && j <= u + 1);
    if (adjacent) continue;
    used.push_back(j);
    const double a = node(j > 0 ? j - 1 : j);
    const double b = node(j + 1 < n ? j + 1 : j);
    double t = detail::golden_section(a, b, z, v, lam, p);
    t = detail::derivative_polish(t, a, b, z, v, lam, p);
    cands.push_back({t, g(t)});
  }

  std::stable_sort(cands.begin(), cands.end(),
                   [](const auto& a, const auto& b) { return a.g < b.g; });
  const auto& best = cands.front();
  ProxResult r;
  r.value = best.g;
  r.minimizers = {best.t, 0.0};
  for (std::size_t i = 1; i < cands.size(); ++i) {
    const auto& c = cands[i];
    const bool distinct = std::abs(c.t - best.t) > 1e-6 * (1.0 + std::abs(best.t));
    if (distinct && std::abs(c.g - best.g) <= 1e-12 * (1.0 + std::abs(best.g))) {
      double first = best.t;
      double second = c.t;
      if (std::abs(second) < std::abs(first)) std::swap(first, second);
      r.minimizers = {first, second};
      r.count = 2;
      r.tie = true;
      break;
    }
  }
  return r;
}

}  // namespace lpreg
