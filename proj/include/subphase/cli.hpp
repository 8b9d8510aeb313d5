#pragma once

// Scenario files and the command implementations behind the `subphase`
// executable. Commands return the process exit code: 0 success, 1 input
// error, 2 numerical failure.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "subphase/core.hpp"
#include "subphase/models.hpp"
#include "subphase/propagator.hpp"
#include "subphase/sub_phase.hpp"

namespace subphase::cli {

/// Schema violation; the message starts with the offending key path.
class ScenarioError : public InputError {
 public:
  using InputError::InputError;
};

struct ScanSection {
  double omega_min = 0.0;
  double omega_max = 0.0;
  std::size_t points = 0;
  double horizon = 0.0;
  std::size_t target_index = 0;
};

struct TwoLevelModel {
  models::TwoLevelScenario params;
  double truncation_ratio = 1e-14;
};

struct PerturbationModel {
  models::PerturbationScenario params;
};

struct Scenario {
  EnergySpectrum spectrum;
  DriveSpec drive;
  TimeGrid grid;
  std::optional<std::size_t> initial_index;
  std::optional<CVector> initial_vector;
  ExtractionConfig analysis;
  IntegratorConfig integrator;
  std::optional<ScanSection> scan;
  std::variant<std::monostate, PerturbationModel, TwoLevelModel> model;
};

Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);

struct CommandContext {
  unsigned threads = 1;
  std::ostream* status = nullptr;    // one-line JSON status (stdout)
  std::ostream* diagnostics = nullptr;  // warnings (stderr)
};

int cmd_propagate(const std::filesystem::path& scenario, const std::filesystem::path& out,
                  const CommandContext& ctx);
int cmd_twolevel(const std::filesystem::path& scenario, const std::filesystem::path& out,
                 const CommandContext& ctx);
int cmd_perturb(const std::filesystem::path& scenario, const std::filesystem::path& out,
                const CommandContext& ctx);
int cmd_scan(const std::filesystem::path& scenario, const std::filesystem::path& out,
             const CommandContext& ctx);
int cmd_validate(const std::filesystem::path& scenario, const CommandContext& ctx);

/// Dispatch by subcommand name; unknown names are input errors.
int run(std::string_view command, const std::filesystem::path& scenario,
        const std::optional<std::filesystem::path>& out, const CommandContext& ctx);

/// Where cmd_scan writes its JSON report for a given CSV path.
std::filesystem::path scan_report_path(const std::filesystem::path& csv);

/// Shortest-exact scientific rendering used in every CSV ("%.16e", -0 as 0).
std::string format_number(double v);

/// Threads for scans: SUBPHASE_THREADS if set to a positive integer,
/// otherwise hardware concurrency.
unsigned threads_from_env();

}  // namespace subphase::cli
