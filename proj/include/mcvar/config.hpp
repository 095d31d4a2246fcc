#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcvar/backtest.hpp"
#include "mcvar/errors.hpp"
#include "mcvar/metrics.hpp"

namespace mcvar {

inline constexpr const char* kVersion = "0.1.0";

/// Sectioned key = value text file. Lines starting with '#' or ';' are
/// comments; inline trailing comments after '#' are stripped. Keys remember
/// their line number so validation errors can point at them.
struct ConfigFile {
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::map<std::string, Entry> entries; // "section.key" -> entry
    std::string raw_text;

    bool has(const std::string& key) const { return entries.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback = "") const;
    int line_of(const std::string& key) const;

    static ConfigFile load(const std::string& path);
    static ConfigFile parse(const std::string& text, const std::string& origin = "<string>");
};

/// How the market series used by beta/Treynor/Jensen (and the
/// benchmark_index strategy) is derived from the dataset.
struct MarketSpec {
    enum class Kind { equal_weight, asset } kind = Kind::equal_weight;
    std::string asset_id;
};

struct ExperimentConfig {
    std::string config_path;
    std::string data_path;
    PriceFileFormat data_format = PriceFileFormat::auto_detect;
    std::string date_start, date_end; // optional inclusive ISO-8601 bounds

    std::size_t in_len = 50, out_len = 4, step = 4;

    ModelConfig model;                 // shared by nominal and robust
    ReturnTarget return_target;        // duplicated into model at build time
    AmbiguitySettings ambiguity;
    std::vector<StrategyKind> strategies;
    MarketSpec market;

    BnBConfig bnb;
    int threads = 1;
    bool cumulative_compound = false;
    MetricsOptions metrics;
    std::string output_dir = "out";
    std::uint64_t seed = 42;

    /// Parses and checks everything that does not require the dataset.
    static ExperimentConfig from_file(const std::string& path);

    /// Dataset-dependent invariants (cardinality vs asset count, window fit,
    /// T0 vs in_len, benchmark asset existence). Returns human-readable
    /// violations; empty means valid.
    std::vector<std::string> validate_against(const ScenarioMatrix& scen,
                                              const ConfigFile& file) const;
};

/// Loads the dataset named by the config, applies the optional date range,
/// and aligns it into a scenario matrix.
ScenarioMatrix load_scenarios(const ExperimentConfig& config);

/// Market return series per the config's market spec.
Eigen::VectorXd market_series(const ExperimentConfig& config, const ScenarioMatrix& scen);

/// The default configuration shipped with the repository.
std::string default_config_text();

} // namespace mcvar
