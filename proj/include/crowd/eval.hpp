// Per-round model evaluation and the model-comparison report.

#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "crowd/models.hpp"
#include "crowd/record.hpp"

namespace crowd {

enum class MaeMode { relative_percent, absolute };

/// relative_percent: 100 * mean(|p - a| / |a|); absolute: mean(|p - a|).
double mae(std::span<const double> predicted, std::span<const double> actual, MaeMode mode);

/// 100 * (error_baseline - error_new) / (1 - error_baseline / 100), with both
/// errors in percent. Throws for error_baseline >= 100.
double improvement(double error_new, double error_baseline);

struct ModelScore {
  std::string name;
  double mae;
  bool social_bayesian = false;  // excluded from the baseline set
};

/// Evaluation of every model on one round.
struct RoundSlice {
  std::string round_id;
  std::vector<ModelScore> scores;
  std::optional<std::string> best_baseline;
  std::optional<double> improvement;
};

/// Options that apply to every record of an evaluation run.
struct EvalOptions {
  std::size_t bins = 50;
  double padding_fraction = 0.05;
  KernelOptions kernel;
  MaeMode mae_mode = MaeMode::relative_percent;
};

/// Fills best_baseline and improvement from the scores: the baseline is the
/// lowest-MAE model that is not a social Bayesian one (ties go to the
/// lexicographically first name); the new model is the row named
/// "social_bayesian", or the first social Bayesian row.
void score_round(RoundSlice& slice);

/// Evaluates `specs` on a round whose records already share one grid.
RoundSlice evaluate_round(const Round& round, std::span<const ModelSpec> specs, const EvalOptions& options);

struct EvaluationReport {
  std::vector<std::string> rounds;
  /// Model rows in first-seen order.
  std::vector<std::string> models;
  std::set<std::string> social_bayesian_models;
  std::map<std::pair<std::string, std::string>, double> mae;  // (model, round)
  std::map<std::string, std::string> best_baseline;           // round -> model
  std::map<std::string, double> improvement;                  // round -> percent

  std::optional<double> mae_of(const std::string& model, const std::string& round) const;
};

EvaluationReport build_report(std::span<const RoundSlice> slices);

/// Normalizes each round onto its grid, evaluates and assembles the report.
EvaluationReport evaluate(std::span<const Round> rounds, std::span<const ModelSpec> specs, const EvalOptions& options);

/// Model rows x round columns, 2-decimal values, then best_baseline and
/// improvement rows. Missing cells are written as NA.
void write_table(std::ostream& out, const EvaluationReport& report);
/// One JSON object per line, full precision.
void write_jsonl(std::ostream& out, const EvaluationReport& report);
/// Per-round social Bayesian MAE next to the best baseline's MAE.
void write_figure_series(std::ostream& out, const EvaluationReport& report);

/// The social Bayesian row the improvement row refers to, if any.
std::optional<std::string> social_bayesian_row(const EvaluationReport& report);

/// Reads a precomputed table in the write_table layout (model rows x round
/// columns; best_baseline and improvement rows are ignored). Rows whose
/// name normalizes to social_bayesian* are treated as social Bayesian.
std::vector<RoundSlice> read_mae_table(std::istream& in);

std::string to_string(MaeMode m);
MaeMode parse_mae_mode(const std::string& s);

}  // namespace crowd
