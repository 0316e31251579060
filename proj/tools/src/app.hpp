#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <bfstab/deficits.hpp>

namespace bfstab::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFail = 2;
inline constexpr int kExitInconclusive = 3;

int exit_code(Status overall);

struct RunConfig {
  std::string command;  // distance, deficit, talagrand, verify, sweep, pl-check
  std::string u, v, measure, g;
  std::string suite, theorem, mode, family;
  std::vector<double> values;
  std::vector<double> lambdas;
  int dim = 1;
  bool diagnostics = false;

  std::uint64_t seed = 0;
  int jobs = 1;
  std::optional<double> tol;
  std::optional<std::uint64_t> mc_budget;
  std::optional<int> directions;
  std::string format = "json";
  std::string out;
};

/// Configuration as recorded in reports. The worker count is left out: it
/// changes scheduling only, never results.
nlohmann::ordered_json resolved_config(const RunConfig& cfg);

VerifyOptions verify_options(const RunConfig& cfg);

struct Outcome {
  int exit_code = kExitPass;
  std::string artifact;  // report text in the requested format
};

/// Runs a parsed configuration. Input errors surface as ValidationError.
Outcome execute(const RunConfig& cfg);

struct Task {
  std::string case_id;
  std::function<DeficitReport()> run;
};

/// Runs tasks on `jobs` workers; results come back in task order. A task that
/// throws yields an inconclusive report carrying the error text.
std::vector<DeficitReport> run_tasks(const std::vector<Task>& tasks, int jobs);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_atomically(const std::filesystem::path& path, const std::string& content);

/// Full front end: parse argv, execute, write the artifact. Returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bfstab::cli
