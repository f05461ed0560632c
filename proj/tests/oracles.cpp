#include "oracles.hpp"

#include <cmath>

namespace oracle {

std::vector<double> bin_centers(double lower, double upper, std::size_t bins) {
  std::vector<double> c;
  const double w = (upper - lower) / static_cast<double>(bins);
  for (std::size_t i = 0; i < bins; ++i) c.push_back(lower + w * (static_cast<double>(i) + 0.5));
  return c;
}

std::vector<double> gaussian_kernel(const std::vector<double>& centers, double point, double bw) {
  std::vector<double> out;
  double total = 0.0;
  for (double c : centers) {
    out.push_back(std::exp(-(c - point) * (c - point) / (2.0 * bw * bw)));
    total += out.back();
  }
  for (double& v : out) v /= total;
  return out;
}

double kl(const std::vector<double>& p, const std::vector<double>& q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) acc += p[i] * std::log(p[i] / q[i]);
  return acc;
}

std::vector<double> social_bayes(const std::vector<double>& prior, const std::vector<double>& si,
                                 const std::vector<double>& marginal) {
  std::vector<double> out;
  double total = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    out.push_back(prior[i] * si[i] / marginal[i]);
    total += out.back();
  }
  for (double& v : out) v /= total;
  return out;
}

double improvement(double error_new, double error_baseline) {
  const double gain = (error_baseline - error_new) / 100.0;
  const double remaining = 1.0 - error_baseline / 100.0;
  return 100.0 * gain / remaining * 100.0;
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n, double floor) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(n);
  double total = 0.0;
  for (auto& x : v) {
    x = e(rng) + floor;
    total += x;
  }
  for (auto& x : v) x /= total;
  return v;
}

}  // namespace oracle
