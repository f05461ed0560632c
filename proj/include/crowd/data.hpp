// Prediction-record files and the synthetic round generator.
//
// Delimited format (header required):
//
//   round_id,user_id,asset_id,pre_social,post_social,si_edges,si_counts,confidence
//   1,u1,asset_1,101.5,100.2,"[90,95,100,105,110]","[1,3,2,0]",4
//
// si_edges holds counts + 1 uniformly spaced values. Confidence is empty
// when absent. The line-structured format is JSON Lines with the same field
// names, arrays for si_edges/si_counts and null for a missing confidence.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowd/belief.hpp"
#include "crowd/models.hpp"
#include "crowd/record.hpp"

namespace crowd {

enum class DataFormat { delimited, line_structured };

/// .jsonl / .ndjson select line_structured; anything else is delimited.
DataFormat format_for_path(const std::filesystem::path& path);

struct IngestResult {
  std::vector<Round> rounds;
  /// Rows dropped for violating a record invariant (non-positive price,
  /// empty histogram).
  std::size_t rejected = 0;
  std::vector<std::string> warnings;
};

/// Parses and validates records, grouping them by round in order of first
/// appearance. Malformed rows throw with their line number.
IngestResult ingest(std::istream& in, DataFormat format);
IngestResult ingest(const std::filesystem::path& path);

void serialize(std::ostream& out, std::span<const Round> rounds, DataFormat format);
void serialize(const std::filesystem::path& path, std::span<const Round> rounds);

/// Puts every record of a round on one shared grid.
///
/// When all histograms already share a grid with `bin_count` bins that
/// covers every pre- and post-social value, that grid is kept unchanged.
/// Otherwise a grid is built from all pre-social, post-social and histogram
/// edge values with `padding_fraction` padding and every histogram is
/// re-binned onto it.
Round normalize_round(const Round& round, std::size_t bin_count, double padding_fraction = 0.05);

struct SyntheticConfig {
  std::size_t agent_count = 100;
  std::size_t round_count = 7;
  /// Per-round true value; when shorter than round_count the remaining
  /// rounds use 100 * (1 + round index / 10).
  std::vector<double> true_values;
  /// Standard deviation of pre-social draws, as a fraction of the true value.
  double prior_noise_rel = 0.10;
  /// Standard deviation of post-social noise, as a fraction of the true value.
  double observation_noise_rel = 0.0;
  ModelSpec generator;
  std::uint64_t seed = 0;
  std::size_t bins = 50;
  KernelOptions kernel;

  void validate() const;
  double true_value(std::size_t round) const;
};

/// Draws pre-social predictions, shows each agent a leave-one-out histogram
/// of its peers and applies the generator rule plus observation noise.
/// Round r uses the sub-seed seed + r.
std::vector<Round> synthesize(const SyntheticConfig& config);

}  // namespace crowd
