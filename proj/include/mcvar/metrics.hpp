#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcvar/errors.hpp"

namespace mcvar {

struct MetricsOptions {
    double tail_level = 0.05;     // level for VaR/CVaR and STARR
    double risk_free = 0.0;
    double omega_threshold = 0.0; // TP
    bool omega_as_printed = false; // flip to the paper's printed (inverted) fraction
};

/// The 13-metric out-of-sample table. Ratios that divide by a degenerate
/// quantity (zero SD, non-positive CVaR, zero beta, zero downside) are left
/// unset rather than reported as non-finite numbers. Values are in plain
/// return units; the report layer applies the x10^-3 presentation scaling.
struct MetricsTable {
    double max = 0.0;
    double min = 0.0;
    double mean = 0.0;
    double median = 0.0;
    double sd = 0.0;
    double tail_level = 0.05;
    double var_at_level = 0.0;
    double cvar_at_level = 0.0;
    std::optional<double> starr;
    std::optional<double> sharpe;
    std::optional<double> treynor;
    std::optional<double> jensen;
    std::optional<double> omega;
    std::optional<double> sortino;
};

/// max, min, mean, median and population standard deviation
/// sqrt((1/T) sum (mean - r_l)^2). Median of an even-length series is the
/// midpoint average.
struct SummaryStats {
    double max, min, mean, median, sd;
};
SummaryStats summary_stats(const Eigen::VectorXd& returns);

/// Empirical VaR/CVaR of the series at `level`, computed on losses
/// (= -returns) with uniform scenario weights.
struct TailMetrics {
    double var, cvar;
};
TailMetrics tail_metrics(const Eigen::VectorXd& returns, double level);

/// OLS slope of portfolio returns on market returns, cov(p,m)/var(m) with
/// population normalization.
double ols_beta(const Eigen::VectorXd& portfolio_returns, const Eigen::VectorXd& market_returns);

/// The full table; market_returns drives beta, Treynor and Jensen.
MetricsTable compute_metrics(const Eigen::VectorXd& returns, const Eigen::VectorXd& market_returns,
                             const MetricsOptions& options = {});

/// Paper table ordering of the metric rows.
std::vector<std::pair<std::string, std::optional<double>>> metric_rows(const MetricsTable& table);

} // namespace mcvar
