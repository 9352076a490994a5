#include "v2vsim/metrics.hpp"

#include <cmath>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>

#include "v2vsim/errors.hpp"

namespace v2vsim {

double knowledge_indicator(const SimState& state, std::span<const KnowledgeBase> kbs) {
  if (kbs.size() != state.cars.size()) throw ParameterError("one knowledge base per car is required");
  std::size_t active = 0;
  std::size_t known = 0;
  for (std::size_t c = 0; c < state.cars.size(); ++c) {
    if (!state.cars[c].active) continue;
    ++active;
    for (const KnowledgeRecord& r : kbs[c].records()) {
      if (state.cars[r.subject].active) ++known;
    }
  }
  return active == 0 ? 0.0 : static_cast<double>(known) / static_cast<double>(active);
}

double contact_indicator(const SimState& state, double range) {
  const Network& net = *state.net;
  std::vector<Point> where;
  for (const CarState& c : state.cars) {
    if (c.active) where.push_back(embed_position(net, c.road, c.x));
  }
  if (where.empty()) return 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < where.size(); ++a) {
    for (std::size_t b = a + 1; b < where.size(); ++b) {
      if (distance(where[a], where[b]) < range) ++pairs;
    }
  }
  return 2.0 * static_cast<double>(pairs) / static_cast<double>(where.size());
}

std::vector<double> cumulative_average(std::span<const double> values) {
  if (values.empty()) throw ParameterError("cumulative average of an empty sequence");
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    out[i] = sum / static_cast<double>(i + 1);
  }
  return out;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw ParameterError("mean of an empty sequence");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) throw ParameterError("standard deviation needs at least two values");
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double student_t_quantile(double alpha, double dof) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  if (!(dof > 0.0)) throw ParameterError("degrees of freedom must be positive");
  // P(T > t) = I_{dof/(dof+t^2)}(dof/2, 1/2) / 2, decreasing in t.
  auto upper_tail = [dof](double t) {
    return 0.5 * boost::math::ibeta(0.5 * dof, 0.5, dof / (dof + t * t));
  };
  const double target = 0.5 * alpha;
  double lo = 0.0;
  double hi = 1.0;
  while (upper_tail(hi) > target) hi *= 2.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (upper_tail(mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double confidence_halfwidth(double stddev, std::size_t runs, double alpha) {
  if (runs < 2) throw ParameterError("a confidence interval needs at least two runs");
  if (stddev == 0.0) return 0.0;
  const double r = static_cast<double>(runs);
  return student_t_quantile(alpha, r - 1.0) * stddev / std::sqrt(r);
}

double confidence_halfwidth(std::span<const double> values, double alpha) {
  if (values.size() < 2) throw ParameterError("a confidence interval needs at least two runs");
  return confidence_halfwidth(sample_stddev(values), values.size(), alpha);
}

std::size_t required_runs(std::span<const double> pilot, double alpha, double target_eps) {
  if (!(target_eps > 0.0)) throw ParameterError("target half width must be positive");
  const double s = sample_stddev(pilot);
  auto ok = [&](std::size_t r) { return confidence_halfwidth(s, r, alpha) <= target_eps; };
  if (ok(2)) return 2;
  std::size_t lo = 2;  // !ok(lo)
  std::size_t hi = 4;
  while (!ok(hi)) {
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace v2vsim
