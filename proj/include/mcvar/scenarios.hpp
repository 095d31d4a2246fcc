#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcvar/errors.hpp"

namespace mcvar {

/// Closing-price history of a single asset. Timestamps are ISO-8601 dates
/// (lexicographic order equals chronological order) and must be strictly
/// increasing; all closes must be strictly positive.
struct PriceSeries {
    std::string asset_id;
    std::vector<std::string> timestamps;
    std::vector<double> closes;
};

/// Discrete return scenarios: one row per asset, one column per period,
/// with scenario probabilities summing to one.
struct ScenarioMatrix {
    Eigen::MatrixXd returns;           // n x T, simple per-period returns
    Eigen::VectorXd probs;             // length T, >= 0, sums to 1
    std::vector<std::string> asset_ids; // length n, sorted ascending
    std::vector<std::string> dates;     // length T, period-end dates (may be empty)

    Eigen::Index n_assets() const { return returns.rows(); }
    Eigen::Index n_periods() const { return returns.cols(); }

    /// Column slice [first, last) as a new matrix with uniform probabilities.
    ScenarioMatrix slice(Eigen::Index first, Eigen::Index last) const;
};

struct Window {
    std::size_t in_start = 0;
    std::size_t in_end = 0;  // == out_start, no look-ahead gap
    std::size_t out_start = 0;
    std::size_t out_end = 0;
};

/// Rolling-window schedule over a series of `total` periods.
struct WindowPlan {
    std::vector<Window> windows;
    std::size_t in_len = 0;
    std::size_t out_len = 0;
    std::size_t step = 0;
};

/// Simple returns (C_{j+1} - C_j) / C_j for one price series.
/// Output length is input length - 1.
std::vector<double> compute_returns(const PriceSeries& prices);

/// Inner-joins all series on their common dates, drops everything else, and
/// assembles the scenario matrix with rows sorted by asset id and uniform
/// probabilities 1/T. Dates missing for any single asset are discarded for
/// all of them; no imputation is performed.
ScenarioMatrix align_assets(const std::vector<PriceSeries>& series);

/// Non-overlapping out-of-sample schedule: windows advance by `step`, each
/// holding `in_len` in-sample periods directly followed by `out_len`
/// out-of-sample periods.
WindowPlan make_windows(std::size_t total_periods, std::size_t in_len,
                        std::size_t out_len, std::size_t step);

/// Reads price data from a delimiter-separated file. Long format has header
/// `date,asset,close`; wide format has header `date,<asset>,...`. The format
/// is auto-detected from the header unless forced.
enum class PriceFileFormat { auto_detect, long_format, wide_format };
std::vector<PriceSeries> read_price_file(const std::string& path,
                                         PriceFileFormat format = PriceFileFormat::auto_detect);

} // namespace mcvar
