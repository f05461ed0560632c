#include "crowd/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "crowd/data.hpp"
#include "csv.hpp"

namespace crowd::cli {

namespace {

ModelSpec model_defaults(const RunConfig& config) {
  ModelSpec d;
  d.smoothing = config.smoothing;
  d.si_conditioning = config.si_mode;
  d.marginal_source = config.marginal;
  return d;
}

std::vector<Round> load_or_synthesize(const RunConfig& config, std::ostream& err) {
  if (config.input) {
    auto result = ingest(*config.input);
    for (const auto& w : result.warnings) err << "warning: " << w << '\n';
    if (result.rejected > 0) err << "rejected " << result.rejected << " row(s)\n";
    return std::move(result.rounds);
  }
  if (!config.generator) throw UsageError("compare needs --input or --generator");
  SyntheticConfig synth;
  synth.agent_count = config.agents;
  synth.round_count = config.rounds;
  synth.prior_noise_rel = config.prior_noise;
  synth.observation_noise_rel = config.obs_noise;
  synth.seed = config.seed;
  synth.bins = config.bins;
  synth.kernel = config.kernel;
  try {
    synth.generator = parse_model_spec(*config.generator, model_defaults(config));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return synthesize(synth);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open output file " + path.string());
  return out;
}

void write_report(const EvaluationReport& report, const std::optional<std::filesystem::path>& output,
                  std::ostream& out) {
  if (!output) {
    write_table(out, report);
    return;
  }
  const auto paths = report_paths(*output);
  auto table = open_output(paths.table);
  write_table(table, report);
  auto jsonl = open_output(paths.jsonl);
  write_jsonl(jsonl, report);
  auto figure = open_output(paths.figure);
  write_figure_series(figure, report);
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

std::vector<ModelSpec> resolve_models(const RunConfig& config) {
  const ModelSpec defaults = model_defaults(config);
  std::vector<std::string> names;
  for (const auto& m : config.models) {
    if (m.empty()) continue;
    if (m == "all") {
      names.insert(names.end(), model_names().begin(), model_names().end());
      names.push_back(config.si_mode == SiConditioning::full_histogram ? "social_bayesian:si=mean_kernel"
                                                                       : "social_bayesian:si=full_histogram");
    } else {
      names.push_back(m);
    }
  }
  if (names.empty()) throw UsageError("no models given; valid names: all " + [] {
    std::string s;
    for (const auto& n : model_names()) s += n + ' ';
    return s;
  }());

  std::vector<ModelSpec> specs;
  for (const auto& n : names) {
    try {
      specs.push_back(parse_model_spec(n, defaults));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  return specs;
}

ReportPaths report_paths(const std::filesystem::path& output) {
  auto stem = output;
  stem.replace_extension();
  return ReportPaths{output, stem.string() + ".jsonl", stem.string() + ".figure.csv"};
}

int cmd_compare(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto specs = resolve_models(config);
    const auto rounds = load_or_synthesize(config, err);
    if (rounds.empty()) throw Error("input contains no records");
    EvalOptions options;
    options.bins = config.bins;
    options.kernel = config.kernel;
    options.mae_mode = config.mae_mode;
    write_report(evaluate(rounds, specs, options), config.output, out);
    return kExitOk;
  });
}

int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig c = config;
    c.input.reset();
    if (!c.generator) c.generator = "social_bayesian";
    const auto rounds = load_or_synthesize(c, err);
    if (c.output)
      serialize(*c.output, rounds);
    else
      serialize(out, rounds, DataFormat::delimited);
    return kExitOk;
  });
}

int cmd_kl(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!config.input) throw UsageError("kl needs --input");
    auto data = ingest(*config.input);
    for (const auto& w : data.warnings) err << "warning: " << w << '\n';
    if (data.rounds.empty()) throw Error("input contains no records");

    const Round* chosen = &data.rounds.front();
    if (config.round) {
      chosen = nullptr;
      for (const auto& r : data.rounds)
        if (r.id == *config.round) chosen = &r;
      if (!chosen) throw UsageError("round '" + *config.round + "' not found");
    }
    const Round round = normalize_round(*chosen, config.bins);
    const BinGrid& grid = round.records.front().si.grid();

    std::vector<std::string> users;
    std::vector<BeliefDistribution> beliefs;
    for (const auto& r : round.records) {
      if (std::find(users.begin(), users.end(), r.user_id) != users.end()) continue;
      users.push_back(r.user_id);
      beliefs.push_back(smooth_distribution(point_to_distribution(r.pre_social, grid, config.kernel), config.smoothing));
    }
    const Matrix m = kl_matrix(beliefs);

    std::ofstream file;
    if (config.output) file = open_output(*config.output);
    std::ostream& sink = config.output ? static_cast<std::ostream&>(file) : out;
    sink << "user_id";
    for (const auto& u : users) sink << ',' << csv::quote(u);
    sink << '\n';
    for (std::size_t i = 0; i < users.size(); ++i) {
      sink << csv::quote(users[i]);
      for (double v : m[i]) sink << ',' << csv::format_number(v);
      sink << '\n';
    }
    return kExitOk;
  });
}

int cmd_table(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!config.input) throw UsageError("table needs --input");
    std::ifstream in(*config.input, std::ios::binary);
    if (!in) throw Error("cannot open input file " + config.input->string());
    const auto slices = read_mae_table(in);
    write_report(build_report(slices), config.output, out);
    return kExitOk;
  });
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Social-learning belief update models: compare, simulate and inspect"};
  app.require_subcommand(1);

  RunConfig config;
  std::string input, output, kernel = "gaussian", bandwidth = "auto", mae_mode = "relative_percent";
  std::string si_mode = "full_histogram", marginal = "round_empirical", round, generator;
  std::vector<std::string> models{"all"};

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--input", input, "Record file (.csv delimited, .jsonl line-structured)");
    sub->add_option("--output", output, "Output file; stdout when omitted");
    sub->add_option("--bins", config.bins, "Bins per round grid")->check(CLI::Range(2, 1000000));
    sub->add_option("--kernel", kernel, "Point-to-distribution kernel")->check(CLI::IsMember({"delta", "gaussian"}));
    sub->add_option("--bandwidth", bandwidth, "Kernel bandwidth, or auto for one bin width");
    sub->add_option("--smoothing", config.smoothing, "Additive smoothing constant")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", config.seed, "Random seed");
    sub->add_option("--si-mode", si_mode, "SI conditioning for social models")
        ->check(CLI::IsMember({"full_histogram", "mean_kernel"}));
    sub->add_option("--marginal", marginal, "Source of P(post)")->check(CLI::IsMember({"round_empirical", "uniform"}));
  };
  auto add_synthetic = [&](CLI::App* sub) {
    sub->add_option("--generator", generator, "Ground-truth update rule, e.g. degroot:w=0.3");
    sub->add_option("--agents", config.agents, "Agents per round")->check(CLI::Range(2, 100000000));
    sub->add_option("--rounds", config.rounds, "Number of rounds")->check(CLI::Range(1, 100000));
    sub->add_option("--prior-noise", config.prior_noise, "Pre-social noise sd as a fraction of the true value")
        ->check(CLI::PositiveNumber);
    sub->add_option("--obs-noise", config.obs_noise, "Post-social noise sd as a fraction of the true value")
        ->check(CLI::NonNegativeNumber);
  };

  auto* compare = app.add_subcommand("compare", "Compare update models round by round");
  add_common(compare);
  add_synthetic(compare);
  compare->add_option("--models", models, "Comma-separated model names, or all")->delimiter(',');
  compare->add_option("--mae-mode", mae_mode, "MAE unit")->check(CLI::IsMember({"relative_percent", "absolute"}));

  auto* simulate = app.add_subcommand("simulate", "Write a synthetic record file");
  add_common(simulate);
  add_synthetic(simulate);

  auto* kl = app.add_subcommand("kl", "Pairwise KL divergence between users' prior beliefs");
  add_common(kl);
  kl->add_option("--round", round, "Round identifier; first round when omitted");

  auto* table = app.add_subcommand("table", "Recompute best-baseline and improvement rows of an MAE table");
  add_common(table);

  std::vector<std::string> argv_store{"crowdbelief"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (!input.empty()) config.input = input;
    if (!output.empty()) config.output = output;
    if (!round.empty()) config.round = round;
    if (!generator.empty()) config.generator = generator;
    config.kernel.kernel = parse_kernel(kernel);
    if (bandwidth != "auto") {
      double bw = 0.0;
      std::istringstream bs(bandwidth);
      if (!(bs >> bw) || !bs.eof() || !(bw > 0.0)) throw Error("--bandwidth must be a positive number or auto");
      config.kernel.bandwidth = bw;
    }
    config.mae_mode = parse_mae_mode(mae_mode);
    config.si_mode = parse_si_conditioning(si_mode);
    config.marginal = parse_marginal_source(marginal);
    config.models = models;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  if (compare->parsed()) return cmd_compare(config, out, err);
  if (simulate->parsed()) return cmd_simulate(config, out, err);
  if (kl->parsed()) return cmd_kl(config, out, err);
  return cmd_table(config, out, err);
}

}  // namespace crowd::cli
