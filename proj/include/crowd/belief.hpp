// Discrete belief distributions over a uniform grid of the prediction axis.
//
// Every distribution in a round lives on the same BinGrid so that priors,
// social histograms, marginals and posteriors can be multiplied bin by bin.
// All types here are immutable values once constructed.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crowd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform binning of [lower, upper] into bin_count bins.
///
/// Bin i covers [lower + i*width, lower + (i+1)*width); the last bin is
/// closed on the right so that `upper` itself belongs to it.
class BinGrid {
 public:
  BinGrid(double lower, double upper, std::size_t bin_count);

  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }
  std::size_t bin_count() const noexcept { return bin_count_; }
  double width() const noexcept { return (upper_ - lower_) / static_cast<double>(bin_count_); }

  double center(std::size_t i) const noexcept;
  /// Edge i for i in [0, bin_count]; edge(bin_count) is exactly upper().
  double edge(std::size_t i) const noexcept;
  std::vector<double> centers() const;
  std::vector<double> edges() const;

  bool contains(double x) const noexcept { return x >= lower_ && x <= upper_; }
  /// Index of the bin containing x; values outside the grid clamp to the
  /// first or last bin.
  std::size_t bin_of(double x) const noexcept;

  friend bool operator==(const BinGrid&, const BinGrid&) = default;

 private:
  double lower_;
  double upper_;
  std::size_t bin_count_;
};

/// Probability mass over the bins of a grid. Non-negative, sums to 1.
class BeliefDistribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  /// Validates `mass` as-is; throws if it is not a probability vector.
  BeliefDistribution(BinGrid grid, std::vector<double> mass);

  /// Normalizes non-negative weights. Throws "empty posterior support" when
  /// every weight is zero.
  static BeliefDistribution from_weights(BinGrid grid, std::vector<double> weights);
  static BeliefDistribution uniform(const BinGrid& grid);

  const BinGrid& grid() const noexcept { return grid_; }
  std::span<const double> mass() const noexcept { return mass_; }
  double operator[](std::size_t i) const noexcept { return mass_[i]; }
  std::size_t size() const noexcept { return mass_.size(); }

  bool strictly_positive() const noexcept;

 private:
  BinGrid grid_;
  std::vector<double> mass_;
};

/// Raw peer-prediction counts per bin, as shown to one participant.
class SocialHistogram {
 public:
  SocialHistogram(BinGrid grid, std::vector<std::uint64_t> counts);

  const BinGrid& grid() const noexcept { return grid_; }
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }
  std::uint64_t total() const noexcept { return total_; }

  /// Count-weighted mean of the bin centers.
  double mean() const noexcept;
  /// Count-weighted population standard deviation of the bin centers.
  double stddev() const noexcept;

  /// Reassigns every count to the bin of `target` containing its source
  /// bin center. Total count is preserved.
  SocialHistogram rebin(const BinGrid& target) const;

  friend bool operator==(const SocialHistogram&, const SocialHistogram&) = default;

 private:
  BinGrid grid_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

enum class Kernel { delta, gaussian };

/// Kernel choice for turning a point estimate into a distribution.
/// An empty bandwidth means one bin width.
struct KernelOptions {
  Kernel kernel = Kernel::gaussian;
  std::optional<double> bandwidth;

  double bandwidth_for(const BinGrid& grid) const;
};

BinGrid make_grid(std::span<const double> points, std::size_t bin_count, double padding_fraction);

BeliefDistribution point_to_distribution(double point, const BinGrid& grid, const KernelOptions& kernel = {});

/// Gaussian with the given center and standard deviation, evaluated at the
/// bin centers and normalized. Stable for bandwidths far below one bin width.
BeliefDistribution gaussian_on_grid(double center, double sd, const BinGrid& grid);

/// Additive (Laplace) smoothing: mass[i] = (counts[i] + s) / (total + s * bins).
BeliefDistribution histogram_to_distribution(const SocialHistogram& hist, double smoothing);

/// Treats `d` as one pseudo-observation and applies additive smoothing:
/// mass[i] = (d[i] + s) / (1 + s * bins).
BeliefDistribution smooth_distribution(const BeliefDistribution& d, double smoothing);

double dist_mean(const BeliefDistribution& d);
/// Center of the most probable bin; ties go to the lowest index.
double dist_mode(const BeliefDistribution& d);

/// KL(p || q) in nats, with 0 * ln(0 / q) = 0.
double kl_divergence(const BeliefDistribution& p, const BeliefDistribution& q);

using Matrix = std::vector<std::vector<double>>;

/// entry (i, j) = kl_divergence(dists[i], dists[j]).
Matrix kl_matrix(std::span<const BeliefDistribution> dists);

std::string to_string(Kernel k);
Kernel parse_kernel(const std::string& s);

}  // namespace crowd
