// Command-line front end. Kept in the library so tests can drive it without
// spawning processes.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crowd/belief.hpp"
#include "crowd/eval.hpp"
#include "crowd/models.hpp"

namespace crowd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Raised for invalid flag combinations; maps to exit status 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

enum class Command { compare, simulate, kl, table };

struct RunConfig {
  Command command = Command::compare;
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> output;
  std::size_t bins = 50;
  KernelOptions kernel;
  double smoothing = 1.0;
  std::vector<std::string> models{"all"};
  MaeMode mae_mode = MaeMode::relative_percent;
  std::uint64_t seed = 1;
  SiConditioning si_mode = SiConditioning::full_histogram;
  MarginalSource marginal = MarginalSource::round_empirical;
  std::optional<std::string> round;
  std::optional<std::string> generator;
  std::size_t agents = 200;
  std::size_t rounds = 7;
  double prior_noise = 0.10;
  double obs_noise = 0.005;
};

/// Expands "all" and parses every model name, applying the global
/// smoothing / SI / marginal defaults. Throws UsageError for unknown names
/// or an empty list.
std::vector<ModelSpec> resolve_models(const RunConfig& config);

/// Companion files written next to a compare/table report.
struct ReportPaths {
  std::filesystem::path table;
  std::filesystem::path jsonl;
  std::filesystem::path figure;
};
ReportPaths report_paths(const std::filesystem::path& output);

int cmd_compare(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_kl(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_table(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses arguments (without the program name) and runs the command.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crowd::cli
