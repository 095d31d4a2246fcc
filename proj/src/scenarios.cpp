#include "mcvar/scenarios.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mcvar {

namespace {

void validate_series(const PriceSeries& s) {
    if (s.closes.size() != s.timestamps.size())
        throw Error(Errc::insufficient_data,
                    "series '" + s.asset_id + "' has mismatched date/close lengths");
    for (std::size_t i = 0; i + 1 < s.timestamps.size(); ++i) {
        if (!(s.timestamps[i] < s.timestamps[i + 1]))
            throw Error(Errc::insufficient_data,
                        "series '" + s.asset_id + "' dates not strictly increasing at " +
                            s.timestamps[i + 1]);
    }
    for (double c : s.closes) {
        if (!(c > 0.0))
            throw Error(Errc::invalid_price,
                        "series '" + s.asset_id + "' has non-positive close " + std::to_string(c));
    }
}

std::vector<std::string> split_csv_line(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, sep)) {
        // trim surrounding whitespace
        auto b = field.find_first_not_of(" \t\r");
        auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == sep) out.push_back("");
    return out;
}

} // namespace

std::vector<double> compute_returns(const PriceSeries& prices) {
    validate_series(prices);
    if (prices.closes.size() < 2)
        throw Error(Errc::insufficient_data,
                    "series '" + prices.asset_id + "' needs at least 2 prices, has " +
                        std::to_string(prices.closes.size()));
    std::vector<double> r(prices.closes.size() - 1);
    for (std::size_t j = 0; j + 1 < prices.closes.size(); ++j)
        r[j] = (prices.closes[j + 1] - prices.closes[j]) / prices.closes[j];
    return r;
}

ScenarioMatrix ScenarioMatrix::slice(Eigen::Index first, Eigen::Index last) const {
    if (first < 0 || last > returns.cols() || first >= last)
        throw Error(Errc::out_of_range, "bad scenario slice [" + std::to_string(first) + ", " +
                                            std::to_string(last) + ")");
    ScenarioMatrix out;
    out.returns = returns.middleCols(first, last - first);
    out.probs = Eigen::VectorXd::Constant(last - first, 1.0 / double(last - first));
    out.asset_ids = asset_ids;
    if (!dates.empty())
        out.dates.assign(dates.begin() + first, dates.begin() + last);
    return out;
}

ScenarioMatrix align_assets(const std::vector<PriceSeries>& series) {
    if (series.empty()) throw Error(Errc::insufficient_data, "no price series given");

    std::set<std::string> seen;
    for (const auto& s : series) {
        validate_series(s);
        if (!seen.insert(s.asset_id).second)
            throw Error(Errc::duplicate_asset, "asset '" + s.asset_id + "' appears twice");
    }

    // Intersect the date grids.
    std::set<std::string> common(series[0].timestamps.begin(), series[0].timestamps.end());
    for (std::size_t k = 1; k < series.size(); ++k) {
        std::set<std::string> next;
        for (const auto& d : series[k].timestamps)
            if (common.count(d)) next.insert(d);
        common.swap(next);
    }
    if (common.empty()) throw Error(Errc::no_common_dates, "date grids have empty intersection");

    std::vector<std::string> dates(common.begin(), common.end());

    // Rows ordered by asset id.
    std::vector<const PriceSeries*> ordered;
    ordered.reserve(series.size());
    for (const auto& s : series) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(),
              [](const PriceSeries* a, const PriceSeries* b) { return a->asset_id < b->asset_id; });

    const auto n = static_cast<Eigen::Index>(ordered.size());
    ScenarioMatrix scen;
    scen.asset_ids.reserve(ordered.size());

    std::vector<std::vector<double>> rows(ordered.size());
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        std::map<std::string, double> by_date;
        for (std::size_t j = 0; j < ordered[i]->timestamps.size(); ++j)
            by_date[ordered[i]->timestamps[j]] = ordered[i]->closes[j];
        PriceSeries joined;
        joined.asset_id = ordered[i]->asset_id;
        joined.timestamps = dates;
        for (const auto& d : dates) joined.closes.push_back(by_date.at(d));
        rows[i] = compute_returns(joined);
        scen.asset_ids.push_back(ordered[i]->asset_id);
    }

    const auto T = static_cast<Eigen::Index>(rows[0].size());
    scen.returns.resize(n, T);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < T; ++j) scen.returns(i, j) = rows[i][j];
    scen.probs = Eigen::VectorXd::Constant(T, 1.0 / double(T));
    scen.dates.assign(dates.begin() + 1, dates.end()); // period-end dates
    return scen;
}

WindowPlan make_windows(std::size_t total_periods, std::size_t in_len, std::size_t out_len,
                        std::size_t step) {
    if (in_len == 0 || out_len == 0 || step == 0)
        throw Error(Errc::invalid_spec, "window lengths and step must be positive");
    if (total_periods < in_len + out_len)
        throw Error(Errc::insufficient_data,
                    "need at least " + std::to_string(in_len + out_len) + " periods, have " +
                        std::to_string(total_periods));

    WindowPlan plan;
    plan.in_len = in_len;
    plan.out_len = out_len;
    plan.step = step;
    const std::size_t count = (total_periods - in_len - out_len) / step + 1;
    plan.windows.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        Window w;
        w.in_start = k * step;
        w.in_end = w.in_start + in_len;
        w.out_start = w.in_end;
        w.out_end = w.out_start + out_len;
        plan.windows.push_back(w);
    }
    return plan;
}

std::vector<PriceSeries> read_price_file(const std::string& path, PriceFileFormat format) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open '" + path + "'");

    std::string header;
    if (!std::getline(in, header)) throw Error(Errc::parse_error, "'" + path + "' is empty");
    const char sep = header.find(';') != std::string::npos ? ';' : ',';
    auto cols = split_csv_line(header, sep);
    if (cols.size() < 2 || cols[0] != "date")
        throw Error(Errc::parse_error, "'" + path + "' header must start with 'date'");

    bool long_fmt;
    if (format == PriceFileFormat::long_format) {
        long_fmt = true;
    } else if (format == PriceFileFormat::wide_format) {
        long_fmt = false;
    } else {
        long_fmt = cols.size() == 3 && cols[1] == "asset" && cols[2] == "close";
    }
    if (long_fmt && (cols.size() != 3 || cols[1] != "asset" || cols[2] != "close"))
        throw Error(Errc::parse_error, "long format requires header date,asset,close");

    std::map<std::string, PriceSeries> by_asset;
    std::vector<std::string> order; // keep file order for wide format
    if (!long_fmt) {
        for (std::size_t c = 1; c < cols.size(); ++c) {
            if (cols[c].empty()) throw Error(Errc::parse_error, "empty asset name in header");
            if (by_asset.count(cols[c]))
                throw Error(Errc::duplicate_asset, "asset '" + cols[c] + "' appears twice");
            by_asset[cols[c]].asset_id = cols[c];
            order.push_back(cols[c]);
        }
    }

    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto f = split_csv_line(line, sep);
        try {
            if (long_fmt) {
                if (f.size() != 3) throw std::invalid_argument("expected 3 fields");
                auto& s = by_asset[f[1]];
                if (s.asset_id.empty()) {
                    s.asset_id = f[1];
                    order.push_back(f[1]);
                }
                s.timestamps.push_back(f[0]);
                s.closes.push_back(std::stod(f[2]));
            } else {
                if (f.size() != cols.size()) throw std::invalid_argument("field count mismatch");
                for (std::size_t c = 1; c < cols.size(); ++c) {
                    if (f[c].empty()) continue; // missing quote; inner join drops the date later
                    auto& s = by_asset[cols[c]];
                    s.timestamps.push_back(f[0]);
                    s.closes.push_back(std::stod(f[c]));
                }
            }
        } catch (const std::exception& e) {
            throw Error(Errc::parse_error,
                        "'" + path + "' line " + std::to_string(lineno) + ": " + e.what());
        }
    }

    std::vector<PriceSeries> out;
    out.reserve(order.size());
    for (const auto& id : order) out.push_back(std::move(by_asset.at(id)));
    for (const auto& s : out) validate_series(s);
    return out;
}

} // namespace mcvar
