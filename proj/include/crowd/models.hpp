// Belief-update models: how a participant's pre-social belief and the peer
// histogram they were shown combine into a post-social belief.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowd/belief.hpp"
#include "crowd/record.hpp"

namespace crowd {

enum class ModelKind { social_bayesian, degroot, prob_learning, naive_bayes };
enum class LikelihoodFamily { empirical, normal };
enum class PriorFamily { normal, uniform };
enum class Extraction { mean, mode };
enum class SiConditioning { full_histogram, mean_kernel };
enum class MarginalSource { round_empirical, uniform };

/// Full configuration of one model row. Fields that do not apply to `kind`
/// are carried along and ignored.
struct ModelSpec {
  std::string name;
  ModelKind kind = ModelKind::social_bayesian;
  LikelihoodFamily likelihood_family = LikelihoodFamily::empirical;
  PriorFamily prior_family = PriorFamily::normal;
  Extraction extraction = Extraction::mean;
  /// Fixed self-weight in [0, 1]; empty means fit per round.
  std::optional<double> degroot_weight;
  SiConditioning si_conditioning = SiConditioning::full_histogram;
  double smoothing = 1.0;
  MarginalSource marginal_source = MarginalSource::round_empirical;

  void validate() const;
};

struct UpdateResult {
  BeliefDistribution posterior;
  double point_prediction;
};

double extract_point(const BeliefDistribution& d, Extraction how);

/// posterior[i] ∝ si[i] * prior[i] / marginal[i]. The normalizing constant
/// P(SI) P(prior) / P(prior, SI) is absorbed by renormalization.
UpdateResult social_bayesian_update(const BeliefDistribution& prior_dist, const BeliefDistribution& si_dist,
                                    const BeliefDistribution& marginal_post, Extraction extraction);

/// posterior[i] ∝ si[i] * prior[i].
UpdateResult probabilistic_learning_update(const BeliefDistribution& prior_dist, const BeliefDistribution& si_dist,
                                           Extraction extraction);

/// w * prior_point + (1 - w) * si_mean.
double degroot_update(double prior_point, double si_mean, double w);

struct DegrootTriple {
  double prior_point;
  double si_mean;
  double actual_post;
};

/// Closed-form least-squares self-weight, clamped to [0, 1].
double fit_degroot_weight(std::span<const DegrootTriple> triples);

/// Likelihood is the shown histogram (empirical, smoothed) or a Gaussian
/// matched to its mean and spread; prior is a Gaussian at the pre-social
/// point or uniform over the grid. A unanimous histogram under the normal
/// likelihood uses one bin width as its spread.
/// An empty prior bandwidth means one bin width.
UpdateResult naive_bayes_update(double prior_point, const SocialHistogram& si_hist, const ModelSpec& spec,
                                std::optional<double> prior_bandwidth = std::nullopt);

/// Smoothed distribution of the round's post-social predictions with the
/// predicted record's own answer removed, so a record never informs its own
/// marginal. A round with no other answers yields the uniform marginal.
BeliefDistribution peer_marginal(const SocialHistogram& posts, double own_post, double smoothing);

/// Read-only state shared by every record of a round.
struct RoundContext {
  BinGrid grid;
  /// Post-social predictions of the round binned on `grid`; P(post) for a
  /// record is peer_marginal of this histogram.
  SocialHistogram post_histogram;
  std::optional<double> fitted_degroot_weight;
  KernelOptions kernel;
};

/// Builds the context from records that already share one histogram grid.
RoundContext make_round_context(std::span<const PredictionRecord> records, const KernelOptions& kernel);

/// Dispatches on spec.kind, building the prior, SI and marginal factors.
UpdateResult run_model(const PredictionRecord& record, const ModelSpec& spec, const RoundContext& context);

/// Model presets accepted by parse_model_spec, in report order.
const std::vector<std::string>& model_names();

/// Parses "name[:key=value]*", e.g. "degroot:w=0.3" or
/// "social_bayesian:si=mean_kernel:extraction=mode". `defaults` provides
/// the smoothing, SI conditioning and marginal source used when the string
/// does not override them.
ModelSpec parse_model_spec(const std::string& text, const ModelSpec& defaults = {});

std::string to_string(ModelKind k);
std::string to_string(Extraction e);
std::string to_string(SiConditioning s);
std::string to_string(MarginalSource m);
SiConditioning parse_si_conditioning(const std::string& s);
MarginalSource parse_marginal_source(const std::string& s);

}  // namespace crowd
