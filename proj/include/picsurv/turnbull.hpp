#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "picsurv/model.hpp"

namespace picsurv {

// Event-time set: (left, right] or [left, right] when left_closed; right may
// be +inf (right censoring).
struct CensoredInterval {
  double left = 0.0;
  double right = kInf;
  bool left_closed = false;
};

// Observation (l, r) mapped onto the event-time axis: a baseline positive is a
// point mass at 0, a missing-baseline positive is [0, r].
inline CensoredInterval to_censored_interval(double l, double r) {
  switch (classify(l, r)) {
    case Group::C1: return {0.0, 0.0, true};
    case Group::C4: return {0.0, r, true};
    case Group::C2:
    case Group::C3: return {l, r, false};
  }
  return {};
}

struct NpmleCurve {
  std::vector<CensoredInterval> intervals;  // innermost intervals, ordered
  std::vector<double> mass;
  int iterations = 0;
  std::vector<double> loglik_trace;         // log likelihood after each EM step

  double tail_mass() const {
    double s = 0.0;
    for (std::size_t j = 0; j < intervals.size(); ++j) {
      if (intervals[j].right == kInf) s += mass[j];
    }
    return s;
  }

  // Mass is placed at the right end of each innermost interval.
  double survival(double t) const {
    double f = 0.0;
    for (std::size_t j = 0; j < intervals.size(); ++j) {
      if (intervals[j].right <= t) f += mass[j];
    }
    return std::clamp(1.0 - f, 0.0, 1.0);
  }

  // (t, S(t)) at t = 0 and at every finite right endpoint.
  std::vector<std::pair<double, double>> steps() const {
    std::vector<double> ts{0.0};
    for (const auto& iv : intervals) {
      if (std::isfinite(iv.right) && iv.right > 0.0) ts.push_back(iv.right);
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    std::vector<std::pair<double, double>> out;
    for (double t : ts) out.emplace_back(t, survival(t));
    return out;
  }
};

namespace detail {

// Endpoint order on the real line: [v < v] < (v.
inline std::pair<double, int> left_key(const CensoredInterval& iv) {
  return {iv.left, iv.left_closed ? 0 : 2};
}
inline std::pair<double, int> right_key(const CensoredInterval& iv) { return {iv.right, 1}; }

}  // namespace detail

// Turnbull self-consistency EM over the innermost intervals, iterated until
// the largest mass change falls below tol.
inline NpmleCurve turnbull_npmle(std::span<const CensoredInterval> data, double tol = 1e-8,
                                 int max_iter = 1000000) {
  NpmleCurve curve;
  if (data.empty()) return curve;
  for (const auto& iv : data) {
    if (!(iv.left <= iv.right) || (iv.left == iv.right && !iv.left_closed)) {
      throw IllegalInterval("empty censoring interval");
    }
  }

  struct Endpoint {
    std::pair<double, int> key;
    bool is_left;
    const CensoredInterval* src;
  };
  std::vector<Endpoint> ends;
  for (const auto& iv : data) {
    ends.push_back({detail::left_key(iv), true, &iv});
    ends.push_back({detail::right_key(iv), false, &iv});
  }
  std::stable_sort(ends.begin(), ends.end(), [](const Endpoint& a, const Endpoint& b) { return a.key < b.key; });
  for (std::size_t k = 0; k + 1 < ends.size(); ++k) {
    if (ends[k].is_left && !ends[k + 1].is_left) {
      curve.intervals.push_back({ends[k].key.first, ends[k + 1].key.first, ends[k].key.second == 0});
    }
  }

  // Each observation covers a contiguous run [first, last] of innermost intervals.
  const std::size_t m = curve.intervals.size();
  std::vector<std::pair<std::size_t, std::size_t>> cover;
  cover.reserve(data.size());
  for (const auto& iv : data) {
    std::size_t first = m, last = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const auto& in = curve.intervals[j];
      if (detail::left_key(iv) <= detail::left_key(in) && detail::right_key(in) <= detail::right_key(iv)) {
        first = std::min(first, j);
        last = j;
      }
    }
    cover.emplace_back(first, last);
  }

  const double n = static_cast<double>(data.size());
  curve.mass.assign(m, 1.0 / static_cast<double>(m));
  std::vector<double> prefix(m + 1), next(m);
  for (int it = 0; it < max_iter; ++it) {
    prefix[0] = 0.0;
    for (std::size_t j = 0; j < m; ++j) prefix[j + 1] = prefix[j] + curve.mass[j];
    std::fill(next.begin(), next.end(), 0.0);
    // weight_j = sum over observations covering j of 1 / P(observation)
    std::vector<double> diff(m + 1, 0.0);
    double loglik = 0.0;
    for (const auto& [first, last] : cover) {
      const double denom = prefix[last + 1] - prefix[first];
      loglik += std::log(denom);
      diff[first] += 1.0 / denom;
      diff[last + 1] -= 1.0 / denom;
    }
    double w = 0.0, change = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      w += diff[j];
      next[j] = curve.mass[j] * w / n;
      change = std::max(change, std::abs(next[j] - curve.mass[j]));
    }
    curve.loglik_trace.push_back(loglik);
    curve.mass.swap(next);
    curve.iterations = it + 1;
    if (change < tol) break;
  }
  return curve;
}

inline NpmleCurve turnbull_npmle(std::span<const ObservationRecord> data, double tol = 1e-8) {
  std::vector<CensoredInterval> ivs;
  ivs.reserve(data.size());
  for (const auto& r : data) ivs.push_back(to_censored_interval(r.l, r.r));
  return turnbull_npmle(ivs, tol);
}

}  // namespace picsurv
