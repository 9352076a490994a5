#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "v2vsim/dynamics.hpp"
#include "v2vsim/knowledge.hpp"

namespace v2vsim {

/// Global knowledge over time: k_n[i] active cars known per active car at
/// times[i], n_a[i] active cars. `contacts[i]` is the mean number of active
/// cars currently within range of an active car.
struct KnowledgeSeries {
  std::vector<double> times;
  std::vector<double> k_n;
  std::vector<std::size_t> n_a;
  std::vector<double> contacts;
};

/// (1/N_a) sum over active c of the active subjects in kbs[c]; 0 when no car
/// is active. kbs is indexed like state.cars.
double knowledge_indicator(const SimState& state, std::span<const KnowledgeBase> kbs);

/// Mean number of other active cars closer than `range` to an active car.
double contact_indicator(const SimState& state, double range);

/// Running means X_r = (1/r) sum_{i<=r} values_i.
std::vector<double> cumulative_average(std::span<const double> values);

double mean(std::span<const double> values);

/// Sample standard deviation (divisor r - 1); needs r >= 2.
double sample_stddev(std::span<const double> values);

/// Two-sided Student quantile t_{alpha/2, dof}: P(|T| > t) = alpha.
double student_t_quantile(double alpha, double dof);

/// Half width t_{alpha/2, r-1} * s / sqrt(r) of the confidence interval of
/// the mean.
double confidence_halfwidth(std::span<const double> values, double alpha);

/// Same with a given standard deviation and sample count.
double confidence_halfwidth(double stddev, std::size_t runs, double alpha);

/// Smallest r >= 2 with halfwidth(pilot stddev, r, alpha) <= target_eps.
std::size_t required_runs(std::span<const double> pilot, double alpha, double target_eps);

}  // namespace v2vsim
