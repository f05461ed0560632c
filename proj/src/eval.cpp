#include "crowd/eval.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "crowd/data.hpp"
#include "csv.hpp"
#include "json.hpp"

namespace crowd {

double mae(std::span<const double> predicted, std::span<const double> actual, MaeMode mode) {
  if (predicted.size() != actual.size())
    throw Error("MAE needs equal lengths, got " + std::to_string(predicted.size()) + " and " +
                std::to_string(actual.size()));
  if (predicted.empty()) throw Error("MAE of an empty sequence");
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double err = std::abs(predicted[i] - actual[i]);
    if (mode == MaeMode::absolute) {
      acc += err;
    } else {
      if (actual[i] == 0.0) throw Error("relative MAE is undefined for a zero actual value");
      acc += err / std::abs(actual[i]);
    }
  }
  const double mean = acc / static_cast<double>(predicted.size());
  return mode == MaeMode::absolute ? mean : 100.0 * mean;
}

double improvement(double error_new, double error_baseline) {
  if (!(error_baseline < 100.0)) throw Error("undefined denominator: baseline error must be below 100%");
  if (error_baseline < 0.0 || error_new < 0.0) throw Error("errors must be non-negative");
  return 100.0 * (error_baseline - error_new) / (1.0 - error_baseline / 100.0);
}

void score_round(RoundSlice& slice) {
  slice.best_baseline.reset();
  slice.improvement.reset();

  const ModelScore* best = nullptr;
  const ModelScore* fresh = nullptr;
  for (const auto& s : slice.scores) {
    if (s.social_bayesian) {
      if (!fresh || (s.name == "social_bayesian" && fresh->name != "social_bayesian")) fresh = &s;
      continue;
    }
    if (!best || s.mae < best->mae || (s.mae == best->mae && s.name < best->name)) best = &s;
  }
  if (best) slice.best_baseline = best->name;
  if (best && fresh && best->mae < 100.0) slice.improvement = improvement(fresh->mae, best->mae);
}

RoundSlice evaluate_round(const Round& round, std::span<const ModelSpec> specs, const EvalOptions& options) {
  if (round.records.empty()) throw Error("round " + round.id + " has no records");
  if (specs.empty()) throw Error("no models to evaluate");

  const RoundContext context = make_round_context(round.records, options.kernel);
  std::vector<double> actual;
  actual.reserve(round.records.size());
  for (const auto& r : round.records) actual.push_back(r.post_social);

  RoundSlice slice{round.id, {}, std::nullopt, std::nullopt};
  std::vector<double> predicted(round.records.size());
  for (const auto& spec : specs) {
    for (std::size_t i = 0; i < round.records.size(); ++i)
      predicted[i] = run_model(round.records[i], spec, context).point_prediction;
    slice.scores.push_back(
        ModelScore{spec.name, mae(predicted, actual, options.mae_mode), spec.kind == ModelKind::social_bayesian});
  }
  score_round(slice);
  return slice;
}

std::optional<double> EvaluationReport::mae_of(const std::string& model, const std::string& round) const {
  const auto it = mae.find({model, round});
  if (it == mae.end()) return std::nullopt;
  return it->second;
}

EvaluationReport build_report(std::span<const RoundSlice> slices) {
  if (slices.empty()) throw Error("report needs at least one round");
  EvaluationReport report;
  for (const auto& input : slices) {
    if (std::find(report.rounds.begin(), report.rounds.end(), input.round_id) != report.rounds.end())
      throw Error("duplicate round identifier '" + input.round_id + "'");
    report.rounds.push_back(input.round_id);

    RoundSlice slice = input;
    score_round(slice);
    for (const auto& s : slice.scores) {
      if (std::find(report.models.begin(), report.models.end(), s.name) == report.models.end())
        report.models.push_back(s.name);
      if (s.social_bayesian) report.social_bayesian_models.insert(s.name);
      report.mae[{s.name, slice.round_id}] = s.mae;
    }
    if (slice.best_baseline) report.best_baseline[slice.round_id] = *slice.best_baseline;
    if (slice.improvement) report.improvement[slice.round_id] = *slice.improvement;
  }
  return report;
}

EvaluationReport evaluate(std::span<const Round> rounds, std::span<const ModelSpec> specs, const EvalOptions& options) {
  std::vector<RoundSlice> slices;
  slices.reserve(rounds.size());
  for (const auto& round : rounds)
    slices.push_back(evaluate_round(normalize_round(round, options.bins, options.padding_fraction), specs, options));
  return build_report(slices);
}

std::optional<std::string> social_bayesian_row(const EvaluationReport& report) {
  if (report.social_bayesian_models.contains("social_bayesian")) return "social_bayesian";
  for (const auto& m : report.models)
    if (report.social_bayesian_models.contains(m)) return m;
  return std::nullopt;
}

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

void write_table(std::ostream& out, const EvaluationReport& report) {
  out << "model";
  for (const auto& r : report.rounds) out << ',' << csv::quote(r);
  out << '\n';
  for (const auto& m : report.models) {
    out << csv::quote(m);
    for (const auto& r : report.rounds) {
      const auto v = report.mae_of(m, r);
      out << ',' << (v ? fixed2(*v) : "NA");
    }
    out << '\n';
  }
  out << "best_baseline";
  for (const auto& r : report.rounds) {
    const auto it = report.best_baseline.find(r);
    out << ',' << (it == report.best_baseline.end() ? "NA" : csv::quote(it->second));
  }
  out << '\n';
  if (!report.improvement.empty()) {
    out << "improvement";
    for (const auto& r : report.rounds) {
      const auto it = report.improvement.find(r);
      out << ',' << (it == report.improvement.end() ? "NA" : fixed2(it->second));
    }
    out << '\n';
  }
}

void write_jsonl(std::ostream& out, const EvaluationReport& report) {
  using nlohmann::json;
  for (const auto& m : report.models) {
    json j{{"kind", "mae"}, {"model", m}, {"social_bayesian", report.social_bayesian_models.contains(m)}};
    json values = json::object();
    for (const auto& r : report.rounds)
      if (const auto v = report.mae_of(m, r)) values[r] = *v;
    j["values"] = std::move(values);
    out << j.dump() << '\n';
  }
  json best{{"kind", "best_baseline"}, {"values", json::object()}};
  for (const auto& [r, m] : report.best_baseline) best["values"][r] = m;
  out << best.dump() << '\n';
  json imp{{"kind", "improvement"}, {"values", json::object()}};
  for (const auto& [r, v] : report.improvement) imp["values"][r] = v;
  if (const auto sb = social_bayesian_row(report)) imp["model"] = *sb;
  out << imp.dump() << '\n';
  json order{{"kind", "rounds"}, {"values", report.rounds}};
  out << order.dump() << '\n';
}

void write_figure_series(std::ostream& out, const EvaluationReport& report) {
  const auto sb = social_bayesian_row(report);
  out << "round,social_bayesian_mae,best_baseline,best_baseline_mae\n";
  for (const auto& r : report.rounds) {
    out << csv::quote(r) << ',';
    const auto sb_mae = sb ? report.mae_of(*sb, r) : std::nullopt;
    out << (sb_mae ? csv::format_number(*sb_mae) : "NA") << ',';
    const auto it = report.best_baseline.find(r);
    if (it == report.best_baseline.end()) {
      out << "NA,NA\n";
      continue;
    }
    out << csv::quote(it->second) << ',' << csv::format_number(*report.mae_of(it->second, r)) << '\n';
  }
}

namespace {

bool looks_social_bayesian(std::string name) {
  for (char& c : name) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c == ' ' || c == '.' || c == '-') c = '_';
  }
  return name.rfind("social_bayesian", 0) == 0;
}

}  // namespace

std::vector<RoundSlice> read_mae_table(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<RoundSlice> slices;
  auto fail = [&](const std::string& what) { throw Error("line " + std::to_string(lineno) + ": " + what); };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    if (!fields || fields->size() < 2) fail("expected a model name and at least one value");
    if (slices.empty()) {
      for (std::size_t i = 1; i < fields->size(); ++i) slices.push_back(RoundSlice{(*fields)[i], {}, {}, {}});
      continue;
    }
    const std::string& name = fields->front();
    if (name == "best_baseline" || name == "improvement") continue;
    if (fields->size() != slices.size() + 1) fail("row has " + std::to_string(fields->size() - 1) + " values");
    for (std::size_t i = 1; i < fields->size(); ++i) {
      const std::string& cell = (*fields)[i];
      if (cell == "NA" || cell.empty()) continue;
      double v = 0.0;
      const auto* end = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(cell.data(), end, v);
      if (ec != std::errc{} || ptr != end || !(v >= 0.0)) fail("bad MAE value '" + cell + "'");
      slices[i - 1].scores.push_back(ModelScore{name, v, looks_social_bayesian(name)});
    }
  }
  if (slices.empty()) throw Error("empty MAE table");
  for (auto& s : slices) score_round(s);
  return slices;
}

std::string to_string(MaeMode m) { return m == MaeMode::relative_percent ? "relative_percent" : "absolute"; }

MaeMode parse_mae_mode(const std::string& s) {
  if (s == "relative_percent") return MaeMode::relative_percent;
  if (s == "absolute") return MaeMode::absolute;
  throw Error("MAE mode must be relative_percent or absolute");
}

}  // namespace crowd
