#pragma once

#include "tvmcf/io.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>

namespace tvmcf::cli {

enum ExitCode { kOk = 0, kConfigError = 1, kGuardTripped = 2, kUnderResolved = 3, kVerifyFailed = 4 };

struct SimulateResult {
  int exit_code = kOk;
  Trajectory trajectory;
  RunAnalysis analysis;
  io::json report;
};

/// Runs the flow, streaming the CSV and checkpoints into out_dir; a restart continues a checkpointed run.
SimulateResult simulate(const io::RunConfig& cfg, const std::filesystem::path& out_dir,
                        const std::optional<io::Checkpoint>& restart, std::ostream& log);

struct StabilityResult {
  int exit_code = kOk;
  io::json report;
  /// (parameter, sigma1) per sweep point.
  std::vector<std::pair<double, double>> sweep;
};

StabilityResult stability(const io::RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

struct VerifyResult {
  int exit_code = kOk;
  std::vector<CheckResult> checks;
  io::json report;
};

VerifyResult verify(const io::RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// First sweep interval [a, b] on which sigma1 changes sign.
std::optional<std::pair<double, double>> sign_change(const std::vector<std::pair<double, double>>& sweep);

int main_entry(int argc, char** argv);

}  // namespace tvmcf::cli
