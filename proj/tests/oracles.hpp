// Test-only reference computations. These work on plain vectors and never
// call into the library, so they stay independent of the code they check.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

std::vector<double> bin_centers(double lower, double upper, std::size_t bins);

/// exp(-(c - point)^2 / (2 bw^2)) at each center, normalized.
std::vector<double> gaussian_kernel(const std::vector<double>& centers, double point, double bw);

/// sum p ln(p / q), skipping p = 0.
double kl(const std::vector<double>& p, const std::vector<double>& q);

/// prior * si / marginal, elementwise, normalized.
std::vector<double> social_bayes(const std::vector<double>& prior, const std::vector<double>& si,
                                 const std::vector<double>& marginal);

double improvement(double error_new, double error_baseline);

/// Random probability vector with every entry at least `floor` before
/// normalization.
std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n, double floor = 0.0);

}  // namespace oracle
