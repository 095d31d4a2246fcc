#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcvar/formulation.hpp"
#include "mcvar/scenarios.hpp"
#include "mcvar/solver.hpp"

namespace mcvar {

enum class StrategyKind { nominal, rom_rkhs, equal_weight, benchmark_index };

const char* to_string(StrategyKind kind) noexcept;
StrategyKind strategy_kind_from_string(const std::string& name);

/// How the kernel expansion set is assembled from an in-sample window:
/// chronological takes the first T0 return vectors as the sample and the
/// remaining (T - T0) real returns as support vectors; perturbed_resample
/// replaces the support vectors with jittered resamples of the sample.
struct ExpansionPolicy {
    enum class Kind { chronological, perturbed_resample } kind = Kind::chronological;
    std::size_t sample_count = 42; // T0
    double perturbation = 1e-3;
    std::uint64_t seed = 42;
};

/// Kernel/ambiguity parameters resolved per window for the robust model.
struct AmbiguitySettings {
    double alpha = 0.05;
    ExpansionPolicy expansion;
    std::optional<double> bandwidth; // empty => median heuristic per window
    double jitter_start = 1e-10;
};

struct StrategySpec {
    StrategyKind kind = StrategyKind::nominal;
    ModelConfig model_cfg;                 // optimizing kinds
    AmbiguitySettings ambiguity;           // rom_rkhs only
    Eigen::VectorXd benchmark_series;      // benchmark kind: full-period returns
    std::string name;                      // label used in reports
    BnBConfig bnb;
};

struct OOSReturns {
    std::vector<Eigen::VectorXd> per_window;
    Eigen::VectorXd concatenated;
    std::vector<Portfolio> window_portfolios; // empty for non-optimizing kinds
    std::vector<std::string> dates;           // period-end dates when available
};

/// Raised when a window's model solve fails; carries the window index,
/// the solver status and all windows completed before the failure.
class WindowFailure : public Error {
  public:
    WindowFailure(std::size_t window_index, SolveStatus status, OOSReturns partial)
        : Error(Errc::window_failure,
                "window " + std::to_string(window_index) + " solve ended with " +
                    std::string(to_string(status))),
          window_index(window_index), status(status), partial(std::move(partial)) {}

    std::size_t window_index;
    SolveStatus status;
    OOSReturns partial;
};

/// Builds the expansion set for one in-sample slice under the given policy.
ExpansionSet make_expansion(const ScenarioMatrix& in_sample, const ExpansionPolicy& policy);

/// Solves one in-sample window for an optimizing strategy and returns the
/// portfolio (branch-and-bound on the cardinality binaries).
Portfolio solve_window(const ScenarioMatrix& in_sample, const StrategySpec& strat,
                       Solution* solution_out = nullptr, MixedConicProgram* program_out = nullptr);

/// Rolling-window protocol: per window, fit on the in-sample slice, hold the
/// weights over the out-of-sample segment, concatenate the realized returns
/// chronologically. Windows may be solved on `threads` workers; results are
/// deterministic and identical to the sequential run.
OOSReturns run_backtest(const ScenarioMatrix& scen, const WindowPlan& plan,
                        const StrategySpec& strat, int threads = 1);

/// Cumulative series of the figures: additive running sum of simple returns
/// by default, compounding prod(1+r)-1 behind the flag.
Eigen::VectorXd cumulative_series(const OOSReturns& oos, bool compound = false);

} // namespace mcvar
