#include "crowd/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace crowd {

namespace {

void require_same_grid(const BeliefDistribution& a, const BeliefDistribution& b) {
  if (!(a.grid() == b.grid())) throw Error("distributions must share one grid");
}

UpdateResult finish(std::vector<double> weights, const BinGrid& grid, Extraction extraction) {
  auto posterior = BeliefDistribution::from_weights(grid, std::move(weights));
  const double point = extract_point(posterior, extraction);
  return UpdateResult{std::move(posterior), point};
}

double parse_number(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw Error("model option '" + key + "' expects a number, got '" + value + "'");
  return out;
}

ModelSpec preset(const std::string& name, const ModelSpec& defaults) {
  ModelSpec s = defaults;
  s.name = name;
  auto naive = [&](LikelihoodFamily lik, PriorFamily prior, Extraction ex) {
    s.kind = ModelKind::naive_bayes;
    s.likelihood_family = lik;
    s.prior_family = prior;
    s.extraction = ex;
  };
  if (name == "social_bayesian") {
    s.kind = ModelKind::social_bayesian;
  } else if (name == "degroot") {
    s.kind = ModelKind::degroot;
  } else if (name == "prob_learning") {
    s.kind = ModelKind::prob_learning;
  } else if (name == "normal_approx") {
    naive(LikelihoodFamily::normal, PriorFamily::normal, Extraction::mean);
  } else if (name == "em_mean_norm") {
    naive(LikelihoodFamily::empirical, PriorFamily::normal, Extraction::mean);
  } else if (name == "em_mean_uni") {
    naive(LikelihoodFamily::empirical, PriorFamily::uniform, Extraction::mean);
  } else if (name == "em_mode_norm") {
    naive(LikelihoodFamily::empirical, PriorFamily::normal, Extraction::mode);
  } else if (name == "em_mode_uni") {
    naive(LikelihoodFamily::empirical, PriorFamily::uniform, Extraction::mode);
  } else {
    std::ostringstream msg;
    msg << "unknown model '" << name << "'; valid names:";
    for (const auto& n : model_names()) msg << ' ' << n;
    throw Error(msg.str());
  }
  return s;
}

}  // namespace

BeliefDistribution peer_marginal(const SocialHistogram& posts, double own_post, double smoothing) {
  const BinGrid& grid = posts.grid();
  std::vector<std::uint64_t> counts(posts.counts().begin(), posts.counts().end());
  if (auto& own = counts[grid.bin_of(own_post)]; own > 0) --own;
  if (posts.total() <= 1) {
    if (!(smoothing > 0.0)) throw Error("unsmoothed marginal");
    return BeliefDistribution::uniform(grid);
  }
  return histogram_to_distribution(SocialHistogram(grid, std::move(counts)), smoothing);
}

void ModelSpec::validate() const {
  if (degroot_weight && !(*degroot_weight >= 0.0 && *degroot_weight <= 1.0))
    throw Error("degroot weight must lie in [0, 1]");
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) throw Error("smoothing must be non-negative");
}

double extract_point(const BeliefDistribution& d, Extraction how) {
  return how == Extraction::mean ? dist_mean(d) : dist_mode(d);
}

UpdateResult social_bayesian_update(const BeliefDistribution& prior_dist, const BeliefDistribution& si_dist,
                                    const BeliefDistribution& marginal_post, Extraction extraction) {
  require_same_grid(prior_dist, si_dist);
  require_same_grid(prior_dist, marginal_post);
  if (!marginal_post.strictly_positive()) throw Error("unsmoothed marginal");
  std::vector<double> w(prior_dist.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = si_dist[i] * prior_dist[i] / marginal_post[i];
  return finish(std::move(w), prior_dist.grid(), extraction);
}

UpdateResult probabilistic_learning_update(const BeliefDistribution& prior_dist, const BeliefDistribution& si_dist,
                                           Extraction extraction) {
  require_same_grid(prior_dist, si_dist);
  std::vector<double> w(prior_dist.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = si_dist[i] * prior_dist[i];
  return finish(std::move(w), prior_dist.grid(), extraction);
}

double degroot_update(double prior_point, double si_mean, double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw Error("degroot weight must lie in [0, 1]");
  return w * prior_point + (1.0 - w) * si_mean;
}

double fit_degroot_weight(std::span<const DegrootTriple> triples) {
  // Minimizing sum (w a + s - post)^2 with a = prior - si, b = post - si
  // gives w = sum(a b) / sum(a^2).
  double ab = 0.0;
  double aa = 0.0;
  for (const auto& t : triples) {
    const double a = t.prior_point - t.si_mean;
    const double b = t.actual_post - t.si_mean;
    ab += a * b;
    aa += a * a;
  }
  if (!(aa > 0.0)) throw Error("weight unidentifiable");
  return std::clamp(ab / aa, 0.0, 1.0);
}

UpdateResult naive_bayes_update(double prior_point, const SocialHistogram& si_hist, const ModelSpec& spec,
                                std::optional<double> prior_bandwidth) {
  const BinGrid& grid = si_hist.grid();

  const BeliefDistribution likelihood = [&] {
    if (spec.likelihood_family == LikelihoodFamily::empirical)
      return histogram_to_distribution(si_hist, spec.smoothing);
    const double sd = si_hist.stddev();
    return gaussian_on_grid(si_hist.mean(), sd > 0.0 ? sd : grid.width(), grid);
  }();

  const BeliefDistribution prior =
      spec.prior_family == PriorFamily::uniform
          ? BeliefDistribution::uniform(grid)
          : point_to_distribution(prior_point, grid, KernelOptions{Kernel::gaussian, prior_bandwidth});

  std::vector<double> w(grid.bin_count());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = likelihood[i] * prior[i];
  return finish(std::move(w), grid, spec.extraction);
}

RoundContext make_round_context(std::span<const PredictionRecord> records, const KernelOptions& kernel) {
  if (records.empty()) throw Error("round has no records");
  const BinGrid grid = records.front().si.grid();
  std::vector<std::uint64_t> post_counts(grid.bin_count(), 0);
  std::vector<DegrootTriple> triples;
  triples.reserve(records.size());
  for (const auto& r : records) {
    if (!(r.si.grid() == grid)) throw Error("records of a round must share one histogram grid");
    ++post_counts[grid.bin_of(r.post_social)];
    triples.push_back({r.pre_social, r.si.mean(), r.post_social});
  }
  std::optional<double> w;
  try {
    w = fit_degroot_weight(triples);
  } catch (const Error&) {
    // Left empty; a degroot row that needs a fitted weight reports it.
  }
  return RoundContext{grid, SocialHistogram(grid, std::move(post_counts)), w, kernel};
}

UpdateResult run_model(const PredictionRecord& record, const ModelSpec& spec, const RoundContext& context) {
  spec.validate();
  const BinGrid& grid = context.grid;
  if (!(record.si.grid() == grid)) throw Error("record histogram grid does not match the round grid");

  const KernelOptions gaussian{Kernel::gaussian, context.kernel.bandwidth};

  switch (spec.kind) {
    case ModelKind::degroot: {
      const auto w = spec.degroot_weight ? spec.degroot_weight : context.fitted_degroot_weight;
      if (!w) throw Error("weight unidentifiable");
      const double point = degroot_update(record.pre_social, record.si.mean(), *w);
      return UpdateResult{point_to_distribution(point, grid, context.kernel), point};
    }
    case ModelKind::naive_bayes:
      return naive_bayes_update(record.pre_social, record.si, spec, context.kernel.bandwidth);
    case ModelKind::social_bayesian:
    case ModelKind::prob_learning:
      break;
  }

  const auto prior = point_to_distribution(record.pre_social, grid, context.kernel);
  const auto si = spec.si_conditioning == SiConditioning::full_histogram
                      ? histogram_to_distribution(record.si, spec.smoothing)
                      : point_to_distribution(record.si.mean(), grid, gaussian);
  if (spec.kind == ModelKind::prob_learning) return probabilistic_learning_update(prior, si, spec.extraction);

  const auto marginal = spec.marginal_source == MarginalSource::uniform
                            ? BeliefDistribution::uniform(grid)
                            : peer_marginal(context.post_histogram, record.post_social, spec.smoothing);
  return social_bayesian_update(prior, si, marginal, spec.extraction);
}

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"normal_approx", "em_mean_norm", "em_mean_uni",
                                              "em_mode_norm",  "em_mode_uni",  "degroot",
                                              "prob_learning", "social_bayesian"};
  return names;
}

ModelSpec parse_model_spec(const std::string& text, const ModelSpec& defaults) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, ':')) parts.push_back(part);
  if (parts.empty() || parts.front().empty()) throw Error("empty model name");

  ModelSpec spec = preset(parts.front(), defaults);
  spec.name = text;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos) throw Error("model option '" + parts[i] + "' is not key=value");
    const std::string key = parts[i].substr(0, eq);
    const std::string value = parts[i].substr(eq + 1);
    if (key == "w") {
      if (value == "fit")
        spec.degroot_weight.reset();
      else
        spec.degroot_weight = parse_number(key, value);
    } else if (key == "extraction") {
      if (value == "mean")
        spec.extraction = Extraction::mean;
      else if (value == "mode")
        spec.extraction = Extraction::mode;
      else
        throw Error("extraction must be mean or mode");
    } else if (key == "si") {
      spec.si_conditioning = parse_si_conditioning(value);
    } else if (key == "marginal") {
      spec.marginal_source = parse_marginal_source(value);
    } else if (key == "smoothing") {
      spec.smoothing = parse_number(key, value);
    } else if (key == "likelihood") {
      if (value == "empirical")
        spec.likelihood_family = LikelihoodFamily::empirical;
      else if (value == "normal")
        spec.likelihood_family = LikelihoodFamily::normal;
      else
        throw Error("likelihood must be empirical or normal");
    } else if (key == "prior") {
      if (value == "normal")
        spec.prior_family = PriorFamily::normal;
      else if (value == "uniform")
        spec.prior_family = PriorFamily::uniform;
      else
        throw Error("prior must be normal or uniform");
    } else {
      throw Error("unknown model option '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::social_bayesian: return "social_bayesian";
    case ModelKind::degroot: return "degroot";
    case ModelKind::prob_learning: return "prob_learning";
    case ModelKind::naive_bayes: return "naive_bayes";
  }
  return "?";
}

std::string to_string(Extraction e) { return e == Extraction::mean ? "mean" : "mode"; }

std::string to_string(SiConditioning s) {
  return s == SiConditioning::full_histogram ? "full_histogram" : "mean_kernel";
}

std::string to_string(MarginalSource m) { return m == MarginalSource::round_empirical ? "round_empirical" : "uniform"; }

SiConditioning parse_si_conditioning(const std::string& s) {
  if (s == "full_histogram") return SiConditioning::full_histogram;
  if (s == "mean_kernel") return SiConditioning::mean_kernel;
  throw Error("SI mode must be full_histogram or mean_kernel");
}

MarginalSource parse_marginal_source(const std::string& s) {
  if (s == "round_empirical") return MarginalSource::round_empirical;
  if (s == "uniform") return MarginalSource::uniform;
  throw Error("marginal must be round_empirical or uniform");
}

}  // namespace crowd
