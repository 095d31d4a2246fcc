#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcvar/backtest.hpp"
#include "mcvar/config.hpp"
#include "mcvar/metrics.hpp"

namespace mcvar {

/// Deterministic, locale-independent formatting used by every report file.
std::string format_double(double value, int significant_digits = 12);

/// FNV-1a 64-bit content hash used by the run manifest.
std::uint64_t fnv1a64(const std::string& bytes);

struct StrategyResult {
    std::string name;
    StrategyKind kind = StrategyKind::nominal;
    OOSReturns oos;
    MetricsTable metrics;
};

/// Writes the per-strategy report files and the run manifest into `dir`:
/// metrics_<name>.csv (x10^-3 presentation scaling), weights_<name>.csv,
/// returns_<name>.csv, cumulative_<name>.csv and manifest.txt. Output bytes
/// are a pure function of (config, data, version).
void write_reports(const std::string& dir, const ExperimentConfig& config,
                   const ScenarioMatrix& scen, const WindowPlan& plan,
                   const std::vector<StrategyResult>& results);

} // namespace mcvar
