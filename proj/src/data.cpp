#include "crowd/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>

#include "csv.hpp"
#include "json.hpp"

namespace crowd {

namespace {

using json = nlohmann::json;
using csv::format_number;
using csv::quote;

const char* const kHeader = "round_id,user_id,asset_id,pre_social,post_social,si_edges,si_counts,confidence";

/// Thrown for rows that parse but violate a record invariant; these are
/// counted rather than aborting the read.
struct Rejection {
  std::string reason;
};

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error("line " + std::to_string(line) + ": " + what);
}

template <typename T>
bool parse_exact(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

template <typename T>
std::vector<T> parse_list(const std::string& field, std::size_t lineno, const char* name) {
  std::string_view s = field;
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') malformed(lineno, std::string(name) + " is not a bracketed list");
  s = s.substr(1, s.size() - 2);
  std::vector<T> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    const auto item = s.substr(0, comma);
    T v{};
    if (!parse_exact(item, v)) malformed(lineno, std::string(name) + " has a non-numeric entry '" + std::string(item) + "'");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  if (out.empty()) malformed(lineno, std::string(name) + " is empty");
  return out;
}

template <typename T>
std::string join_list(std::span<const T> values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>)
      out += format_number(values[i]);
    else
      out += std::to_string(values[i]);
  }
  return out + ']';
}

BinGrid grid_from_edges(std::span<const double> edges, std::size_t counts, std::size_t lineno) {
  if (edges.size() != counts + 1)
    malformed(lineno, "si_edges must have " + std::to_string(counts + 1) + " entries, got " + std::to_string(edges.size()));
  if (counts < 2) malformed(lineno, "histogram needs at least 2 bins");
  if (!(edges.front() < edges.back())) malformed(lineno, "si_edges must be increasing");
  const double width = (edges.back() - edges.front()) / static_cast<double>(counts);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double expected = edges.front() + static_cast<double>(i) * width;
    if (std::abs(edges[i] - expected) > 1e-6 * width) malformed(lineno, "si_edges are not uniformly spaced");
  }
  return BinGrid(edges.front(), edges.back(), counts);
}

PredictionRecord build_record(std::string round_id, std::string user_id, std::string asset_id, double pre,
                              double post, const std::vector<double>& edges, std::vector<std::uint64_t> counts,
                              std::optional<int> confidence, std::size_t lineno) {
  const BinGrid grid = grid_from_edges(edges, counts.size(), lineno);
  if (confidence && (*confidence < 1 || *confidence > 5)) malformed(lineno, "confidence must be an integer in 1..5");
  if (!std::isfinite(pre) || !std::isfinite(post)) malformed(lineno, "prices must be finite");
  if (!(pre > 0.0) || !(post > 0.0)) throw Rejection{"non-positive price"};
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw Rejection{"empty histogram"};
  return PredictionRecord{std::move(round_id), std::move(user_id), std::move(asset_id),
                          pre,  post,  SocialHistogram(grid, std::move(counts)), confidence};
}

PredictionRecord parse_delimited_row(const std::string& line, std::size_t lineno) {
  auto split = csv::split(line);
  if (!split) malformed(lineno, "unterminated quoted field");
  auto& f = *split;
  if (f.size() != 8) malformed(lineno, "expected 8 fields, got " + std::to_string(f.size()));
  double pre = 0.0, post = 0.0;
  if (!parse_exact(std::string_view(f[3]), pre)) malformed(lineno, "pre_social is not a number");
  if (!parse_exact(std::string_view(f[4]), post)) malformed(lineno, "post_social is not a number");
  auto edges = parse_list<double>(f[5], lineno, "si_edges");
  auto counts = parse_list<std::uint64_t>(f[6], lineno, "si_counts");
  std::optional<int> confidence;
  if (!f[7].empty()) {
    int c = 0;
    if (!parse_exact(std::string_view(f[7]), c)) malformed(lineno, "confidence is not an integer");
    confidence = c;
  }
  if (f[0].empty() || f[1].empty()) malformed(lineno, "round_id and user_id are required");
  return build_record(std::move(f[0]), std::move(f[1]), std::move(f[2]), pre, post, edges, std::move(counts),
                      confidence, lineno);
}

PredictionRecord parse_json_row(const std::string& line, std::size_t lineno) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    malformed(lineno, std::string("invalid JSON: ") + e.what());
  }
  try {
    std::optional<int> confidence;
    if (j.contains("confidence") && !j.at("confidence").is_null()) confidence = j.at("confidence").get<int>();
    auto round_id = j.at("round_id").get<std::string>();
    auto user_id = j.at("user_id").get<std::string>();
    if (round_id.empty() || user_id.empty()) malformed(lineno, "round_id and user_id are required");
    auto edges = j.at("si_edges").get<std::vector<double>>();
    auto counts = j.at("si_counts").get<std::vector<std::uint64_t>>();
    return build_record(std::move(round_id), std::move(user_id), j.at("asset_id").get<std::string>(),
                        j.at("pre_social").get<double>(), j.at("post_social").get<double>(), edges,
                        std::move(counts), confidence, lineno);
  } catch (const json::exception& e) {
    malformed(lineno, std::string("bad field: ") + e.what());
  }
}

}  // namespace

DataFormat format_for_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".jsonl" || ext == ".ndjson") ? DataFormat::line_structured : DataFormat::delimited;
}

IngestResult ingest(std::istream& in, DataFormat format) {
  IngestResult result;
  std::map<std::string, std::size_t> round_index;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = format == DataFormat::line_structured;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kHeader) malformed(lineno, "missing or unexpected header");
      header_seen = true;
      continue;
    }
    try {
      auto rec = format == DataFormat::delimited ? parse_delimited_row(line, lineno) : parse_json_row(line, lineno);
      auto [it, inserted] = round_index.try_emplace(rec.round_id, result.rounds.size());
      if (inserted) result.rounds.push_back(Round{rec.round_id, {}});
      result.rounds[it->second].records.push_back(std::move(rec));
    } catch (const Rejection& r) {
      ++result.rejected;
      result.warnings.push_back("line " + std::to_string(lineno) + ": rejected (" + r.reason + ")");
    }
  }
  if (result.rounds.empty()) result.warnings.emplace_back("no records found in input");
  return result;
}

IngestResult ingest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open input file " + path.string());
  return ingest(in, format_for_path(path));
}

void serialize(std::ostream& out, std::span<const Round> rounds, DataFormat format) {
  if (format == DataFormat::delimited) out << kHeader << '\n';
  for (const auto& round : rounds) {
    for (const auto& r : round.records) {
      const auto edges = r.si.grid().edges();
      if (format == DataFormat::delimited) {
        out << quote(r.round_id) << ',' << quote(r.user_id) << ',' << quote(r.asset_id) << ','
            << format_number(r.pre_social) << ',' << format_number(r.post_social) << ",\""
            << join_list<double>(edges) << "\",\"" << join_list<std::uint64_t>(r.si.counts()) << "\",";
        if (r.confidence) out << *r.confidence;
        out << '\n';
      } else {
        json j;
        j["round_id"] = r.round_id;
        j["user_id"] = r.user_id;
        j["asset_id"] = r.asset_id;
        j["pre_social"] = r.pre_social;
        j["post_social"] = r.post_social;
        j["si_edges"] = edges;
        j["si_counts"] = std::vector<std::uint64_t>(r.si.counts().begin(), r.si.counts().end());
        j["confidence"] = r.confidence ? json(*r.confidence) : json(nullptr);
        out << j.dump() << '\n';
      }
    }
  }
}

void serialize(const std::filesystem::path& path, std::span<const Round> rounds) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open output file " + path.string());
  serialize(out, rounds, format_for_path(path));
  if (!out) throw Error("failed writing " + path.string());
}

Round normalize_round(const Round& round, std::size_t bin_count, double padding_fraction) {
  if (round.records.empty()) return round;

  const BinGrid& first = round.records.front().si.grid();
  const bool shared = std::all_of(round.records.begin(), round.records.end(), [&](const PredictionRecord& r) {
    return r.si.grid() == first && first.contains(r.pre_social) && first.contains(r.post_social);
  });
  if (shared && first.bin_count() == bin_count) return round;

  std::vector<double> points;
  points.reserve(round.records.size() * 4);
  for (const auto& r : round.records) {
    points.push_back(r.pre_social);
    points.push_back(r.post_social);
    points.push_back(r.si.grid().lower());
    points.push_back(r.si.grid().upper());
  }
  const BinGrid grid = make_grid(points, bin_count, padding_fraction);

  Round out{round.id, {}};
  out.records.reserve(round.records.size());
  for (const auto& r : round.records) {
    PredictionRecord copy = r;
    copy.si = r.si.rebin(grid);
    out.records.push_back(std::move(copy));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

void SyntheticConfig::validate() const {
  if (agent_count < 2) throw Error("synthetic rounds need at least 2 agents");
  if (round_count < 1) throw Error("synthetic data needs at least 1 round");
  if (!(prior_noise_rel > 0.0)) throw Error("prior noise must be positive");
  if (!(observation_noise_rel >= 0.0)) throw Error("observation noise must be non-negative");
  if (bins < 2) throw Error("degenerate grid: bin_count must be at least 2");
  for (double v : true_values)
    if (!(v > 0.0)) throw Error("true values must be positive");
  if (generator.kind == ModelKind::degroot && !generator.degroot_weight)
    throw Error("a degroot generator needs a fixed weight (e.g. degroot:w=0.3)");
  generator.validate();
}

double SyntheticConfig::true_value(std::size_t round) const {
  if (round < true_values.size()) return true_values[round];
  return 100.0 * (1.0 + static_cast<double>(round) / 10.0);
}

namespace {

constexpr std::size_t kMaxMarginalSweeps = 200;

Round synthesize_round(const SyntheticConfig& config, std::size_t r) {
  std::mt19937_64 rng(config.seed + r);
  std::normal_distribution<double> standard(0.0, 1.0);
  const double truth = config.true_value(r);
  const std::size_t n = config.agent_count;

  std::vector<double> pre(n);
  for (auto& p : pre) p = std::max(truth + config.prior_noise_rel * truth * standard(rng), 1e-3 * truth);
  std::vector<double> noise(n, 0.0);
  if (config.observation_noise_rel > 0.0)
    for (auto& e : noise) e = config.observation_noise_rel * truth * standard(rng);

  std::vector<double> points = pre;
  points.push_back(truth);
  const BinGrid grid = make_grid(points, config.bins, 0.05);

  std::vector<std::uint64_t> all_counts(grid.bin_count(), 0);
  for (double p : pre) ++all_counts[grid.bin_of(p)];

  const std::string round_id = std::to_string(r + 1);
  const std::string asset_id = "asset_" + round_id;
  const std::size_t id_width = std::to_string(n).size();

  Round round{round_id, {}};
  round.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto counts = all_counts;
    --counts[grid.bin_of(pre[i])];
    std::string uid = std::to_string(i + 1);
    uid = "u" + std::string(id_width - uid.size(), '0') + uid;
    round.records.push_back(PredictionRecord{round_id, uid, asset_id, pre[i], pre[i],
                                             SocialHistogram(grid, std::move(counts)), std::nullopt});
  }

  const double floor = 0.1 * grid.width();
  auto respond = [&](std::size_t i, const RoundContext& ctx) {
    const double p = run_model(round.records[i], config.generator, ctx).point_prediction + noise[i];
    return std::max(std::clamp(p, grid.lower(), grid.upper()), floor);
  };

  RoundContext ctx{grid, SocialHistogram(grid, all_counts), std::nullopt, config.kernel};
  std::vector<double> post(n);
  for (std::size_t i = 0; i < n; ++i) post[i] = respond(i, ctx);
  for (std::size_t i = 0; i < n; ++i) round.records[i].post_social = post[i];

  // The round-empirical marginal is built from the very responses it
  // produces. Agents respond one at a time against the current histogram of
  // responses until a full sweep moves nobody to another bin; every response
  // is then consistent with the final marginal. The marginal leaves out the
  // agent's own answer, which keeps an agent from chasing itself across a
  // bin edge.
  const bool self_referential = config.generator.kind == ModelKind::social_bayesian &&
                                config.generator.marginal_source == MarginalSource::round_empirical;
  if (self_referential) {
    std::vector<std::uint64_t> counts(grid.bin_count(), 0);
    for (double p : post) ++counts[grid.bin_of(p)];
    for (std::size_t sweep = 0; sweep < kMaxMarginalSweeps; ++sweep) {
      bool moved = false;
      for (std::size_t i = 0; i < n; ++i) {
        ctx.post_histogram = SocialHistogram(grid, counts);
        const double p = respond(i, ctx);
        const auto from = grid.bin_of(post[i]);
        const auto to = grid.bin_of(p);
        post[i] = p;
        round.records[i].post_social = p;
        if (from != to) {
          --counts[from];
          ++counts[to];
          moved = true;
        }
      }
      if (!moved) break;
    }
  }

  return round;
}

}  // namespace

std::vector<Round> synthesize(const SyntheticConfig& config) {
  config.validate();
  std::vector<Round> rounds;
  rounds.reserve(config.round_count);
  for (std::size_t r = 0; r < config.round_count; ++r) rounds.push_back(synthesize_round(config, r));
  return rounds;
}

}  // namespace crowd
