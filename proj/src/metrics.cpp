#include "mcvar/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mcvar/risk.hpp"

namespace mcvar {

SummaryStats summary_stats(const Eigen::VectorXd& returns) {
    if (returns.size() == 0) throw Error(Errc::empty_series, "empty return series");
    SummaryStats s{};
    s.max = returns.maxCoeff();
    s.min = returns.minCoeff();
    s.mean = returns.mean();
    s.sd = std::sqrt((returns.array() - s.mean).square().mean());
    std::vector<double> sorted(returns.data(), returns.data() + returns.size());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t t = sorted.size();
    s.median = (t % 2 == 1) ? sorted[t / 2] : 0.5 * (sorted[t / 2 - 1] + sorted[t / 2]);
    return s;
}

TailMetrics tail_metrics(const Eigen::VectorXd& returns, double level) {
    if (returns.size() == 0) throw Error(Errc::empty_series, "empty return series");
    if (!(level > 0.0) || !(level < 1.0))
        throw Error(Errc::invalid_level, "tail level must lie in (0,1)");
    const Eigen::VectorXd losses = -returns;
    const Eigen::VectorXd probs =
        Eigen::VectorXd::Constant(returns.size(), 1.0 / double(returns.size()));
    return {empirical_var(losses, probs, level), empirical_cvar(losses, probs, level)};
}

double ols_beta(const Eigen::VectorXd& portfolio_returns, const Eigen::VectorXd& market_returns) {
    if (portfolio_returns.size() != market_returns.size())
        throw Error(Errc::dim_mismatch, "portfolio and market series differ in length");
    if (portfolio_returns.size() < 2)
        throw Error(Errc::insufficient_data, "need at least 2 observations for a regression");
    const double pm = portfolio_returns.mean();
    const double mm = market_returns.mean();
    const double var_m = (market_returns.array() - mm).square().mean();
    if (var_m <= 0.0) throw Error(Errc::degenerate_market, "market series has zero variance");
    const double cov =
        ((portfolio_returns.array() - pm) * (market_returns.array() - mm)).mean();
    return cov / var_m;
}

MetricsTable compute_metrics(const Eigen::VectorXd& returns, const Eigen::VectorXd& market_returns,
                             const MetricsOptions& options) {
    const SummaryStats s = summary_stats(returns);
    const TailMetrics tail = tail_metrics(returns, options.tail_level);

    MetricsTable t;
    t.max = s.max;
    t.min = s.min;
    t.mean = s.mean;
    t.median = s.median;
    t.sd = s.sd;
    t.tail_level = options.tail_level;
    t.var_at_level = tail.var;
    t.cvar_at_level = tail.cvar;

    const double rf = options.risk_free;
    const double excess = s.mean - rf;

    if (t.cvar_at_level > 0.0) t.starr = excess / t.cvar_at_level;
    if (s.sd > 0.0) t.sharpe = excess / s.sd;

    // downside semi-deviation below the mean, exactly as printed in the
    // performance-measure list
    const double ssd =
        std::sqrt((s.mean - returns.array()).max(0.0).square().mean());
    if (ssd > 0.0) t.sortino = excess / ssd;

    if (market_returns.size() == returns.size() && returns.size() >= 2) {
        try {
            const double beta = ols_beta(returns, market_returns);
            if (beta != 0.0) t.treynor = excess / beta;
            t.jensen = s.mean - (rf + beta * (market_returns.mean() - rf));
        } catch (const Error&) {
            // degenerate market: beta-based ratios stay unset
        }
    }

    const double tp = options.omega_threshold;
    const double upside = (returns.array() - tp).max(0.0).mean();
    const double downside = (tp - returns.array()).max(0.0).mean();
    if (options.omega_as_printed) {
        if (upside > 0.0) t.omega = downside / upside;
    } else {
        if (downside > 0.0) t.omega = upside / downside;
    }
    return t;
}

std::vector<std::pair<std::string, std::optional<double>>> metric_rows(const MetricsTable& t) {
    auto lvl = [&](const char* base) {
        return std::string(base) + " " + std::to_string(t.tail_level).substr(0, 4);
    };
    return {
        {"MAX", t.max},
        {"MIN", t.min},
        {"MEAN", t.mean},
        {"MEDIAN", t.median},
        {"SD", t.sd},
        {lvl("VAR"), t.var_at_level},
        {lvl("CVAR"), t.cvar_at_level},
        {lvl("STARR"), t.starr},
        {"SHARPE", t.sharpe},
        {"TREYNOR", t.treynor},
        {"JENSEN", t.jensen},
        {"OMEGA", t.omega},
        {"SORTINO", t.sortino},
    };
}

} // namespace mcvar
