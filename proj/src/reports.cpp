#include "mcvar/reports.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace mcvar {

std::string format_double(double value, int significant_digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", significant_digits, value);
    return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write '" + path.string() + "'");
    return out;
}

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot read '" + path + "'");
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace

void write_reports(const std::string& dir, const ExperimentConfig& config,
                   const ScenarioMatrix& scen, const WindowPlan& plan,
                   const std::vector<StrategyResult>& results) {
    const std::filesystem::path base(dir);
    std::filesystem::create_directories(base);

    for (const auto& r : results) {
        {
            auto out = open_out(base / ("metrics_" + r.name + ".csv"));
            out << "metric,value_x1e-3\n";
            for (const auto& [label, value] : metric_rows(r.metrics)) {
                out << label << ',';
                if (value.has_value()) out << format_double(*value * 1e3);
                else out << "NA";
                out << '\n';
            }
        }
        {
            auto out = open_out(base / ("weights_" + r.name + ".csv"));
            out << "window,asset,weight\n";
            for (std::size_t k = 0; k < r.oos.window_portfolios.size(); ++k) {
                const auto& p = r.oos.window_portfolios[k];
                for (Eigen::Index i = 0; i < p.weights.size(); ++i) {
                    if (p.weights[i] == 0.0) continue;
                    out << k << ',' << scen.asset_ids[static_cast<std::size_t>(i)] << ','
                        << format_double(p.weights[i]) << '\n';
                }
            }
        }
        {
            auto out = open_out(base / ("returns_" + r.name + ".csv"));
            out << "t,date,return\n";
            for (Eigen::Index t = 0; t < r.oos.concatenated.size(); ++t) {
                const std::string date =
                    static_cast<std::size_t>(t) < r.oos.dates.size()
                        ? r.oos.dates[static_cast<std::size_t>(t)]
                        : "";
                out << t << ',' << date << ',' << format_double(r.oos.concatenated[t]) << '\n';
            }
        }
        {
            auto out = open_out(base / ("cumulative_" + r.name + ".csv"));
            out << "t,date,cumulative\n";
            const Eigen::VectorXd cum = cumulative_series(r.oos, config.cumulative_compound);
            for (Eigen::Index t = 0; t < cum.size(); ++t) {
                const std::string date =
                    static_cast<std::size_t>(t) < r.oos.dates.size()
                        ? r.oos.dates[static_cast<std::size_t>(t)]
                        : "";
                out << t << ',' << date << ',' << format_double(cum[t]) << '\n';
            }
        }
    }

    auto out = open_out(base / "manifest.txt");
    out << "mcvar " << kVersion << '\n';
    out << "config " << config.config_path << '\n';
    out << "config_hash " << fnv1a64(read_all(config.config_path)) << '\n';
    out << "data " << config.data_path << '\n';
    out << "data_hash " << fnv1a64(read_all(config.data_path)) << '\n';
    out << "assets " << scen.n_assets() << '\n';
    out << "periods " << scen.n_periods() << '\n';
    out << "windows " << plan.windows.size() << '\n';
    out << "strategies";
    for (const auto& r : results) out << ' ' << r.name;
    out << '\n';
}

} // namespace mcvar
