#include "crowd/belief.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace crowd {

// ---------------------------------------------------------------------------
// BinGrid
// ---------------------------------------------------------------------------

BinGrid::BinGrid(double lower, double upper, std::size_t bin_count)
    : lower_(lower), upper_(upper), bin_count_(bin_count) {
  if (bin_count < 2) throw Error("degenerate grid: bin_count must be at least 2");
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper))
    throw Error("degenerate grid: lower must be strictly below upper");
}

double BinGrid::center(std::size_t i) const noexcept {
  return lower_ + (static_cast<double>(i) + 0.5) * width();
}

double BinGrid::edge(std::size_t i) const noexcept {
  if (i >= bin_count_) return upper_;
  return lower_ + static_cast<double>(i) * width();
}

std::vector<double> BinGrid::centers() const {
  std::vector<double> out(bin_count_);
  for (std::size_t i = 0; i < bin_count_; ++i) out[i] = center(i);
  return out;
}

std::vector<double> BinGrid::edges() const {
  std::vector<double> out(bin_count_ + 1);
  for (std::size_t i = 0; i <= bin_count_; ++i) out[i] = edge(i);
  return out;
}

std::size_t BinGrid::bin_of(double x) const noexcept {
  if (!(x > lower_)) return 0;
  if (x >= upper_) return bin_count_ - 1;
  auto i = static_cast<std::size_t>(std::floor((x - lower_) / width()));
  i = std::min(i, bin_count_ - 1);
  // Floating-point division can land one bin off near an edge.
  if (i > 0 && x < edge(i)) --i;
  if (i + 1 < bin_count_ && x >= edge(i + 1)) ++i;
  return i;
}

// ---------------------------------------------------------------------------
// BeliefDistribution
// ---------------------------------------------------------------------------

BeliefDistribution::BeliefDistribution(BinGrid grid, std::vector<double> mass)
    : grid_(grid), mass_(std::move(mass)) {
  if (mass_.size() != grid_.bin_count())
    throw Error("distribution length " + std::to_string(mass_.size()) + " does not match grid bin count " +
                std::to_string(grid_.bin_count()));
  double sum = 0.0;
  for (double m : mass_) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw Error("distribution mass must be finite and non-negative");
    sum += m;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) throw Error("distribution mass does not sum to 1");
}

BeliefDistribution BeliefDistribution::from_weights(BinGrid grid, std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw Error("empty posterior support");
  for (double& w : weights) w /= total;
  return BeliefDistribution(grid, std::move(weights));
}

BeliefDistribution BeliefDistribution::uniform(const BinGrid& grid) {
  return BeliefDistribution(grid, std::vector<double>(grid.bin_count(), 1.0 / static_cast<double>(grid.bin_count())));
}

bool BeliefDistribution::strictly_positive() const noexcept {
  return std::all_of(mass_.begin(), mass_.end(), [](double m) { return m > 0.0; });
}

// ---------------------------------------------------------------------------
// SocialHistogram
// ---------------------------------------------------------------------------

SocialHistogram::SocialHistogram(BinGrid grid, std::vector<std::uint64_t> counts)
    : grid_(grid), counts_(std::move(counts)) {
  if (counts_.size() != grid_.bin_count())
    throw Error("histogram length " + std::to_string(counts_.size()) + " does not match grid bin count " +
                std::to_string(grid_.bin_count()));
  total_ = std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
  if (total_ == 0) throw Error("histogram has zero total count");
}

double SocialHistogram::mean() const noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < counts_.size(); ++i) acc += static_cast<double>(counts_[i]) * grid_.center(i);
  return acc / static_cast<double>(total_);
}

double SocialHistogram::stddev() const noexcept {
  const double mu = mean();
  double acc = 0.0;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    const double d = grid_.center(i) - mu;
    acc += static_cast<double>(counts_[i]) * d * d;
  }
  return std::sqrt(acc / static_cast<double>(total_));
}

SocialHistogram SocialHistogram::rebin(const BinGrid& target) const {
  if (target == grid_) return *this;
  std::vector<std::uint64_t> out(target.bin_count(), 0);
  for (std::size_t i = 0; i < counts_.size(); ++i) out[target.bin_of(grid_.center(i))] += counts_[i];
  return SocialHistogram(target, std::move(out));
}

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

double KernelOptions::bandwidth_for(const BinGrid& grid) const {
  if (!bandwidth) return grid.width();
  if (!(*bandwidth > 0.0) || !std::isfinite(*bandwidth)) throw Error("bandwidth must be positive");
  return *bandwidth;
}

BinGrid make_grid(std::span<const double> points, std::size_t bin_count, double padding_fraction) {
  if (points.empty()) throw Error("no observations");
  if (bin_count < 2) throw Error("degenerate grid: bin_count must be at least 2");
  if (!(padding_fraction >= 0.0)) throw Error("padding fraction must be non-negative");
  const auto [lo, hi] = std::minmax_element(points.begin(), points.end());
  const double range = *hi - *lo;
  if (range == 0.0) return BinGrid(*lo - 0.5, *hi + 0.5, bin_count);
  return BinGrid(*lo - padding_fraction * range, *hi + padding_fraction * range, bin_count);
}

BeliefDistribution gaussian_on_grid(double center, double sd, const BinGrid& grid) {
  if (!(sd > 0.0) || !std::isfinite(sd)) throw Error("gaussian standard deviation must be positive");
  const std::size_t n = grid.bin_count();
  std::vector<double> sq(n);
  double min_sq = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = grid.center(i) - center;
    sq[i] = d * d;
    min_sq = std::min(min_sq, sq[i]);
  }
  // Shifting by the smallest squared distance keeps the peak at exp(0) = 1.
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(-(sq[i] - min_sq) / (2.0 * sd * sd));
  return BeliefDistribution::from_weights(grid, std::move(w));
}

BeliefDistribution point_to_distribution(double point, const BinGrid& grid, const KernelOptions& kernel) {
  const double bw = kernel.bandwidth_for(grid);
  if (!std::isfinite(point) || point < grid.lower() - bw || point > grid.upper() + bw)
    throw Error("point off grid");
  if (kernel.kernel == Kernel::delta) {
    std::vector<double> mass(grid.bin_count(), 0.0);
    mass[grid.bin_of(point)] = 1.0;
    return BeliefDistribution(grid, std::move(mass));
  }
  return gaussian_on_grid(point, bw, grid);
}

BeliefDistribution histogram_to_distribution(const SocialHistogram& hist, double smoothing) {
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) throw Error("smoothing must be non-negative");
  const auto counts = hist.counts();
  const double denom = static_cast<double>(hist.total()) + smoothing * static_cast<double>(counts.size());
  std::vector<double> mass(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) mass[i] = (static_cast<double>(counts[i]) + smoothing) / denom;
  return BeliefDistribution(hist.grid(), std::move(mass));
}

BeliefDistribution smooth_distribution(const BeliefDistribution& d, double smoothing) {
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) throw Error("smoothing must be non-negative");
  const double denom = 1.0 + smoothing * static_cast<double>(d.size());
  std::vector<double> mass(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) mass[i] = (d[i] + smoothing) / denom;
  return BeliefDistribution::from_weights(d.grid(), std::move(mass));
}

// ---------------------------------------------------------------------------
// Summaries and divergences
// ---------------------------------------------------------------------------

double dist_mean(const BeliefDistribution& d) {
  double acc = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) acc += d[i] * d.grid().center(i);
  return acc;
}

double dist_mode(const BeliefDistribution& d) {
  const auto m = d.mass();
  // max_element returns the first maximum, which is the lowest index.
  const auto it = std::max_element(m.begin(), m.end());
  return d.grid().center(static_cast<std::size_t>(it - m.begin()));
}

double kl_divergence(const BeliefDistribution& p, const BeliefDistribution& q) {
  if (!(p.grid() == q.grid())) throw Error("KL divergence requires distributions on the same grid");
  // For normalized inputs sum p ln(p/q) = sum [p (u - log1p(u))] + sum_{p=0} q
  // with u = q/p - 1. Every term is non-negative and the small-u case has no
  // cancellation, so near-identical inputs still give a positive result.
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) {
      acc += q[i];
      continue;
    }
    if (q[i] == 0.0) throw Error("unsmoothed support mismatch");
    const double u = (q[i] - p[i]) / p[i];
    acc += p[i] * (u - std::log1p(u));
  }
  return acc;
}

Matrix kl_matrix(std::span<const BeliefDistribution> dists) {
  const std::size_t n = dists.size();
  Matrix out(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) out[i][j] = kl_divergence(dists[i], dists[j]);
  return out;
}

std::string to_string(Kernel k) { return k == Kernel::delta ? "delta" : "gaussian"; }

Kernel parse_kernel(const std::string& s) {
  if (s == "delta") return Kernel::delta;
  if (s == "gaussian") return Kernel::gaussian;
  throw Error("unknown kernel '" + s + "' (expected delta or gaussian)");
}

}  // namespace crowd
