// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "crowd/cli.hpp"
#include "crowd/data.hpp"
#include "crowd/eval.hpp"
#include "crowd/models.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace crowd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

std::vector<double> as_vector(const BeliefDistribution& d) { return {d.mass().begin(), d.mass().end()}; }

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Scratch {
  fs::path dir = fs::temp_directory_path() / ("crowd_acceptance_" + std::to_string(::getpid()));
  Scratch() { fs::create_directories(dir); }
  ~Scratch() { fs::remove_all(dir); }
};

int run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = cli::run(args, out, err);
  if (status != 0) std::fprintf(stderr, "crowdbelief %s: %s", args.front().c_str(), err.str().c_str());
  return status;
}

// MAE rows, improvement row and SB row name from a compare JSON-lines report.
struct CompareJson {
  std::map<std::string, std::map<std::string, double>> mae;
  std::map<std::string, bool> social_bayesian;
  std::map<std::string, double> improvement;
  std::string improvement_model;
  std::vector<std::string> rounds;
};

CompareJson read_compare_jsonl(const fs::path& path) {
  CompareJson c;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "mae") {
      const auto model = j.at("model").get<std::string>();
      c.social_bayesian[model] = j.at("social_bayesian").get<bool>();
      for (const auto& [r, v] : j.at("values").items()) c.mae[model][r] = v.get<double>();
    } else if (kind == "improvement") {
      for (const auto& [r, v] : j.at("values").items()) c.improvement[r] = v.get<double>();
      c.improvement_model = j.value("model", "");
    } else if (kind == "rounds") {
      c.rounds = j.at("values").get<std::vector<std::string>>();
    }
  }
  return c;
}

// Name of the row with the lowest MAE in a round (name breaks ties).
std::string winner(const CompareJson& c, const std::string& round) {
  std::string best;
  double best_mae = INFINITY;
  for (const auto& [model, values] : c.mae) {
    const auto it = values.find(round);
    if (it != values.end() && it->second < best_mae) {
      best_mae = it->second;
      best = model;
    }
  }
  return best;
}

std::vector<std::string> recovery_args(const std::string& generator, const fs::path& output) {
  return {"compare", "--generator", generator, "--agents", "2000", "--rounds", "7", "--prior-noise", "0.1",
          "--obs-noise", "0.005", "--seed", "1", "--output", output.string()};
}

Outcome improvement_row() {
  const std::vector<std::pair<double, double>> pairs{{2.05, 1.52}, {5.23, 5.13}, {1.94, 1.92}, {1.69, 0.82},
                                                     {1.21, 0.63}, {2.47, 1.28}, {2.29, 0.86}};
  const std::vector<double> expected{54.2, 10.5, 2.0, 87.7, 58.9, 122.3, 147.1};
  double worst = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    worst = std::max(worst, std::abs(improvement(pairs[i].second, pairs[i].first) - expected[i]));
  return {worst <= 0.8, fmt("max deviation %.4f pp (tolerance 0.8)", worst)};
}

Outcome reduction_identities() {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> bins(2, 60);
  double pl_gap = 0.0;
  double prior_gap = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = bins(rng);
    const BinGrid grid(0.0, static_cast<double>(n), n);
    const auto prior = BeliefDistribution::from_weights(grid, oracle::random_simplex(rng, n, 1e-6));
    const auto si = BeliefDistribution::from_weights(grid, oracle::random_simplex(rng, n, 1e-6));
    const auto uniform = BeliefDistribution::uniform(grid);
    for (const auto ex : {Extraction::mean, Extraction::mode}) {
      const auto sb = social_bayesian_update(prior, si, uniform, ex);
      const auto pl = probabilistic_learning_update(prior, si, ex);
      pl_gap = std::max(pl_gap, max_abs_diff(as_vector(sb.posterior), as_vector(pl.posterior)));
      const auto flat = social_bayesian_update(prior, uniform, uniform, ex);
      prior_gap = std::max(prior_gap, max_abs_diff(as_vector(flat.posterior), as_vector(prior)));
    }
  }
  return {pl_gap <= 1e-12 && prior_gap <= 1e-12,
          fmt("1000 pairs; max |SB - PL| %.3g, max |SB - prior| %.3g (tolerance 1e-12)", pl_gap, prior_gap)};
}

Outcome brute_force_lattice() {
  // Every 3-bin mass vector with entries on multiples of 0.1.
  std::vector<std::vector<double>> lattice;
  for (int a = 0; a <= 10; ++a)
    for (int b = 0; a + b <= 10; ++b) lattice.push_back({a / 10.0, b / 10.0, (10 - a - b) / 10.0});
  std::vector<std::vector<double>> positive;
  for (const auto& v : lattice)
    if (std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0; })) positive.push_back(v);

  const BinGrid grid(0.0, 3.0, 3);
  double worst = 0.0;
  std::size_t checked = 0;
  std::size_t empty_support = 0;
  for (const auto& p : lattice)
    for (const auto& s : lattice) {
      double overlap = 0.0;
      for (std::size_t i = 0; i < 3; ++i) overlap += p[i] * s[i];
      for (const auto& m : positive) {
        const auto prior = BeliefDistribution::from_weights(grid, p);
        const auto si = BeliefDistribution::from_weights(grid, s);
        const auto marg = BeliefDistribution::from_weights(grid, m);
        if (overlap == 0.0) {
          // No support in common: the update must refuse rather than emit NaN.
          try {
            social_bayesian_update(prior, si, marg, Extraction::mean);
            return {false, "empty posterior support was not rejected"};
          } catch (const Error&) {
            ++empty_support;
          }
          continue;
        }
        const auto got = social_bayesian_update(prior, si, marg, Extraction::mean);
        worst = std::max(worst, max_abs_diff(as_vector(got.posterior), oracle::social_bayes(p, s, m)));
        ++checked;
      }
    }
  return {worst <= 1e-12, fmt("%zu instances, max deviation %.3g (tolerance 1e-12); %zu empty-support cases rejected",
                              checked, worst, empty_support)};
}

Outcome recovery() {
  Scratch scratch;
  std::vector<std::string> notes;
  bool pass = true;

  // DeGroot half: planted weight and per-round winner.
  SyntheticConfig cfg;
  cfg.agent_count = 2000;
  cfg.round_count = 7;
  cfg.prior_noise_rel = 0.1;
  cfg.observation_noise_rel = 0.005;
  cfg.seed = 1;
  cfg.generator = parse_model_spec("degroot:w=0.3");
  double worst_w = 0.0;
  for (const auto& round : synthesize(cfg)) {
    std::vector<DegrootTriple> triples;
    for (const auto& r : round.records) triples.push_back({r.pre_social, r.si.mean(), r.post_social});
    worst_w = std::max(worst_w, std::abs(fit_degroot_weight(triples) - 0.3));
  }
  pass = pass && worst_w <= 0.05;
  notes.push_back(fmt("fitted w max |w - 0.3| = %.4f", worst_w));

  const auto dg_out = scratch.dir / "degroot.csv";
  if (run_cli(recovery_args("degroot:w=0.3", dg_out)) != 0) return {false, "compare on DeGroot data failed"};
  const auto dg = read_compare_jsonl(cli::report_paths(dg_out).jsonl);
  int dg_wins = 0;
  for (const auto& r : dg.rounds) dg_wins += winner(dg, r) == "degroot";
  pass = pass && dg_wins >= 6;
  notes.push_back(fmt("DeGroot best in %d/7", dg_wins));

  // Social Bayesian half.
  const auto sb_out = scratch.dir / "sb.csv";
  if (run_cli(recovery_args("social_bayesian", sb_out)) != 0) return {false, "compare on SB data failed"};
  const auto sb = read_compare_jsonl(cli::report_paths(sb_out).jsonl);
  int sb_wins = 0;
  int positive_where_won = 0;
  for (const auto& r : sb.rounds) {
    if (winner(sb, r) != "social_bayesian") continue;
    ++sb_wins;
    const auto it = sb.improvement.find(r);
    positive_where_won += it != sb.improvement.end() && it->second > 0.0;
  }
  pass = pass && sb_wins >= 6 && positive_where_won == sb_wins;
  notes.push_back(fmt("social_bayesian best in %d/7, improvement positive in %d of those", sb_wins, positive_where_won));

  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
  return {pass, detail};
}

Outcome invariants() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> bins(2, 40);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> count(0, 6);
  std::string failure;
  auto check_dist = [&](const BeliefDistribution& d, const char* what) {
    double sum = 0.0;
    for (const double p : d.mass()) {
      if (!(p >= 0.0)) failure = std::string(what) + " has a negative mass";
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) failure = std::string(what) + fmt(" sums to %.17g", sum);
  };

  std::size_t kl_pairs = 0;
  for (int t = 0; t < 10000 && failure.empty(); ++t) {
    const std::size_t n = bins(rng);
    const double lower = 200.0 * unit(rng) - 100.0;
    const BinGrid grid(lower, lower + 0.5 + 50.0 * unit(rng), n);

    std::vector<std::uint64_t> counts(n);
    for (auto& c : counts) c = static_cast<std::uint64_t>(count(rng));
    counts[t % n] += 1;
    const SocialHistogram hist(grid, counts);
    const double smoothing = 0.01 + 2.0 * unit(rng);
    const double point = grid.lower() + (grid.upper() - grid.lower()) * unit(rng);

    const auto weights = BeliefDistribution::from_weights(grid, oracle::random_simplex(rng, n));
    const auto empirical = histogram_to_distribution(hist, 0.0);
    const auto gauss = point_to_distribution(point, grid, KernelOptions{Kernel::gaussian, grid.width() * (0.2 + 3 * unit(rng))});
    const auto delta = point_to_distribution(point, grid, KernelOptions{Kernel::delta, std::nullopt});
    for (const auto* d : {&weights, &empirical, &gauss, &delta}) check_dist(*d, "constructed distribution");

    std::vector<BeliefDistribution> smoothed;
    for (const auto* d : {&weights, &empirical, &gauss, &delta}) {
      smoothed.push_back(smooth_distribution(*d, smoothing));
      check_dist(smoothed.back(), "smoothed distribution");
      if (!smoothed.back().strictly_positive()) failure = "smoothed distribution has a zero bin";
    }
    smoothed.push_back(histogram_to_distribution(hist, smoothing));
    if (!smoothed.back().strictly_positive()) failure = "smoothed histogram has a zero bin";

    const auto sb = social_bayesian_update(smoothed[2], smoothed[4], smoothed[0], Extraction::mean);
    check_dist(sb.posterior, "social Bayesian posterior");
    check_dist(probabilistic_learning_update(smoothed[1], smoothed[3], Extraction::mode).posterior,
               "probabilistic-learning posterior");

    for (const auto& p : smoothed)
      for (const auto& q : smoothed) {
        const double d = kl_divergence(p, q);
        const bool equal = max_abs_diff(as_vector(p), as_vector(q)) <= 1e-12;
        if (d < 0.0) failure = "negative KL";
        // KL is quadratic in the difference, so unequal inputs need only be
        // strictly positive.
        if (equal ? d > 1e-12 : !(d > 0.0)) failure = fmt("KL %.3g disagrees with equality of inputs (max diff %.3g)", d, max_abs_diff(as_vector(p), as_vector(q)));
        ++kl_pairs;
      }
    const auto m = kl_matrix(smoothed);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i][i] != 0.0) failure = "KL matrix diagonal is not zero";
  }
  if (!failure.empty()) return {false, failure};
  return {true, fmt("10000 constructions, %zu KL pairs checked", kl_pairs)};
}

Outcome determinism() {
  Scratch scratch;
  const auto a = scratch.dir / "a.csv";
  const auto b = scratch.dir / "b.csv";
  for (const auto& path : {a, b})
    if (run_cli({"simulate", "--agents", "500", "--rounds", "7", "--seed", "42", "--output", path.string()}) != 0)
      return {false, "simulate failed"};
  const bool identical = slurp(a) == slurp(b) && !slurp(a).empty();

  const auto report = scratch.dir / "report.csv";
  if (run_cli({"compare", "--input", a.string(), "--output", report.string()}) != 0) return {false, "compare failed"};
  const auto c = read_compare_jsonl(cli::report_paths(report).jsonl);
  double worst = 0.0;
  std::size_t checked = 0;
  for (const auto& r : c.rounds) {
    double best = INFINITY;
    std::string best_name;
    for (const auto& [model, values] : c.mae)
      if (!c.social_bayesian.at(model) && values.contains(r) && values.at(r) < best) {
        best = values.at(r);
        best_name = model;
      }
    if (best_name.empty() || !c.improvement.contains(r)) return {false, "missing improvement cell in round " + r};
    const double expected = improvement(c.mae.at(c.improvement_model).at(r), best);
    worst = std::max(worst, std::abs(expected - c.improvement.at(r)));
    ++checked;
  }
  return {identical && worst == 0.0 && checked == 7,
          fmt("simulate outputs %s; improvement row vs recomputation max |diff| %.3g over %zu rounds",
              identical ? "byte-identical" : "DIFFER", worst, checked)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 improvement row", improvement_row},     {"2 reduction identities", reduction_identities},
      {"3 brute-force lattice", brute_force_lattice}, {"4 model recovery", recovery},
      {"5 distribution invariants", invariants},  {"6 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  %-28s %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
