#include "mcvar/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace mcvar {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const ConfigFile& f, const std::string& key, double fallback) {
    if (!f.has(key)) return fallback;
    const std::string v = f.get(key);
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw Error(Errc::parse_error, "line " + std::to_string(f.line_of(key)) + ": '" + key +
                                           "' is not a number: '" + v + "'");
    }
}

long parse_long(const ConfigFile& f, const std::string& key, long fallback) {
    if (!f.has(key)) return fallback;
    const std::string v = f.get(key);
    try {
        std::size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw Error(Errc::parse_error, "line " + std::to_string(f.line_of(key)) + ": '" + key +
                                           "' is not an integer: '" + v + "'");
    }
}

bool parse_bool(const ConfigFile& f, const std::string& key, bool fallback) {
    if (!f.has(key)) return fallback;
    const std::string v = f.get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(Errc::parse_error, "line " + std::to_string(f.line_of(key)) + ": '" + key +
                                       "' must be true/false, got '" + v + "'");
}

std::vector<double> parse_double_list(const ConfigFile& f, const std::string& key) {
    std::vector<double> out;
    for (const auto& item : split_list(f.get(key))) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw Error(Errc::parse_error, "line " + std::to_string(f.line_of(key)) + ": '" + key +
                                               "' has a non-numeric entry '" + item + "'");
        }
    }
    return out;
}

} // namespace

std::string ConfigFile::get(const std::string& key, const std::string& fallback) const {
    auto it = entries.find(key);
    return it == entries.end() ? fallback : it->second.value;
}

int ConfigFile::line_of(const std::string& key) const {
    auto it = entries.find(key);
    return it == entries.end() ? 0 : it->second.line;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
    ConfigFile f;
    f.raw_text = text;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty() || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw Error(Errc::parse_error,
                            origin + " line " + std::to_string(lineno) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(Errc::parse_error,
                        origin + " line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw Error(Errc::parse_error,
                        origin + " line " + std::to_string(lineno) + ": empty key");
        f.entries[section + "." + key] = {value, lineno};
    }
    return f;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    const ConfigFile f = ConfigFile::load(path);
    ExperimentConfig cfg;
    cfg.config_path = path;

    cfg.data_path = f.get("data.path");
    if (cfg.data_path.empty())
        throw Error(Errc::invalid_spec, "config is missing data.path");
    const std::string fmt = f.get("data.format", "auto");
    if (fmt == "auto") cfg.data_format = PriceFileFormat::auto_detect;
    else if (fmt == "long") cfg.data_format = PriceFileFormat::long_format;
    else if (fmt == "wide") cfg.data_format = PriceFileFormat::wide_format;
    else
        throw Error(Errc::parse_error, "line " + std::to_string(f.line_of("data.format")) +
                                           ": data.format must be auto/long/wide");
    cfg.date_start = f.get("data.date_start");
    cfg.date_end = f.get("data.date_end");

    cfg.in_len = static_cast<std::size_t>(parse_long(f, "window.in_len", 50));
    cfg.out_len = static_cast<std::size_t>(parse_long(f, "window.out_len", 4));
    cfg.step = static_cast<std::size_t>(parse_long(f, "window.step", 4));
    if (cfg.in_len == 0 || cfg.out_len == 0 || cfg.step == 0)
        throw Error(Errc::invalid_spec, "window lengths and step must be positive");

    // MCVaR specification; the levels are stored strictly decreasing and the
    // weights stay paired with their level
    std::vector<double> levels = {0.05, 0.03, 0.01};
    std::vector<double> weights = {0.40, 0.48, 0.12};
    if (f.has("model.levels")) levels = parse_double_list(f, "model.levels");
    if (f.has("model.weights")) weights = parse_double_list(f, "model.weights");
    if (levels.size() != weights.size())
        throw Error(Errc::invalid_spec,
                    "model.levels and model.weights must have the same length");
    for (std::size_t k = 1; k < levels.size(); ++k)
        if (!(levels[k] < levels[k - 1]))
            throw Error(Errc::invalid_spec,
                        "line " + std::to_string(f.line_of("model.levels")) +
                            ": model.levels must be strictly decreasing");
    cfg.model.mcvar.levels = levels;
    cfg.model.mcvar.weights = weights;
    cfg.model.mcvar.validate();

    cfg.model.lower_bounds = Eigen::VectorXd::Constant(1, parse_double(f, "model.lower_bound", 0.015));
    cfg.model.upper_bounds = Eigen::VectorXd::Constant(1, parse_double(f, "model.upper_bound", 0.7));
    cfg.model.cardinality = static_cast<std::size_t>(parse_long(f, "model.cardinality", 3));
    cfg.model.gamma_chance = parse_double(f, "model.gamma_chance", 0.1);
    cfg.model.ellipsoid_scale = parse_double(f, "model.ellipsoid_scale", 0.072);

    const std::string target = f.get("model.return_target", "prose");
    if (target == "prose") cfg.return_target.mode = ReturnTarget::Mode::prose;
    else if (target == "printed") cfg.return_target.mode = ReturnTarget::Mode::printed;
    else {
        cfg.return_target.mode = ReturnTarget::Mode::value;
        try {
            cfg.return_target.value = std::stod(target);
        } catch (const std::exception&) {
            throw Error(Errc::parse_error, "line " + std::to_string(f.line_of("model.return_target")) +
                                               ": return_target must be prose/printed/<number>");
        }
    }
    cfg.model.return_target = cfg.return_target;

    cfg.ambiguity.alpha = parse_double(f, "ambiguity.alpha", 0.05);
    if (cfg.ambiguity.alpha < 0.0)
        throw Error(Errc::invalid_radius, "ambiguity.alpha must be >= 0");
    cfg.ambiguity.expansion.sample_count =
        static_cast<std::size_t>(parse_long(f, "ambiguity.sample_count", 42));
    const std::string policy = f.get("ambiguity.support_policy", "chronological");
    if (policy == "chronological")
        cfg.ambiguity.expansion.kind = ExpansionPolicy::Kind::chronological;
    else if (policy == "perturbed")
        cfg.ambiguity.expansion.kind = ExpansionPolicy::Kind::perturbed_resample;
    else
        throw Error(Errc::parse_error,
                    "line " + std::to_string(f.line_of("ambiguity.support_policy")) +
                        ": support_policy must be chronological/perturbed");
    cfg.ambiguity.expansion.perturbation = parse_double(f, "ambiguity.perturbation", 1e-3);
    const std::string bw = f.get("ambiguity.bandwidth", "median");
    if (bw != "median") {
        try {
            cfg.ambiguity.bandwidth = std::stod(bw);
        } catch (const std::exception&) {
            throw Error(Errc::parse_error, "line " + std::to_string(f.line_of("ambiguity.bandwidth")) +
                                               ": bandwidth must be median/<number>");
        }
        if (!(*cfg.ambiguity.bandwidth > 0.0))
            throw Error(Errc::invalid_spec, "ambiguity.bandwidth must be positive");
    }
    cfg.ambiguity.jitter_start = parse_double(f, "ambiguity.jitter_start", 1e-10);

    cfg.bnb.rel_gap_tol = parse_double(f, "solver.rel_gap", 1e-6);
    cfg.bnb.max_nodes = parse_long(f, "solver.max_nodes", 100000);
    cfg.bnb.solver.cone.feastol = parse_double(f, "solver.feastol", 1e-8);
    cfg.bnb.solver.cone.abstol = cfg.bnb.solver.cone.feastol;
    cfg.bnb.solver.cone.reltol = cfg.bnb.solver.cone.feastol;

    std::vector<std::string> strategy_names = {"nominal", "rom_rkhs", "equal_weight"};
    if (f.has("strategies.list")) strategy_names = split_list(f.get("strategies.list"));
    if (strategy_names.empty())
        throw Error(Errc::invalid_spec, "strategies.list must not be empty");
    for (const auto& name : strategy_names)
        cfg.strategies.push_back(strategy_kind_from_string(name));

    const std::string market = f.get("strategies.market", "equal_weight");
    if (market == "equal_weight") {
        cfg.market.kind = MarketSpec::Kind::equal_weight;
    } else if (market.rfind("asset:", 0) == 0) {
        cfg.market.kind = MarketSpec::Kind::asset;
        cfg.market.asset_id = trim(market.substr(6));
        if (cfg.market.asset_id.empty())
            throw Error(Errc::invalid_spec, "strategies.market asset id is empty");
    } else {
        throw Error(Errc::parse_error, "line " + std::to_string(f.line_of("strategies.market")) +
                                           ": market must be equal_weight or asset:<id>");
    }

    cfg.threads = static_cast<int>(parse_long(f, "backtest.threads", 1));
    const std::string cum = f.get("backtest.cumulative", "additive");
    if (cum == "additive") cfg.cumulative_compound = false;
    else if (cum == "compound") cfg.cumulative_compound = true;
    else
        throw Error(Errc::parse_error, "line " + std::to_string(f.line_of("backtest.cumulative")) +
                                           ": cumulative must be additive/compound");

    cfg.metrics.tail_level = parse_double(f, "metrics.tail_level", 0.05);
    cfg.metrics.risk_free = parse_double(f, "metrics.risk_free", 0.0);
    cfg.metrics.omega_threshold = parse_double(f, "metrics.omega_threshold", 0.0);
    cfg.metrics.omega_as_printed = parse_bool(f, "metrics.omega_as_printed", false);
    if (!(cfg.metrics.tail_level > 0.0) || !(cfg.metrics.tail_level < 1.0))
        throw Error(Errc::invalid_level, "metrics.tail_level must lie in (0,1)");

    cfg.output_dir = f.get("output.dir", "out");
    cfg.seed = static_cast<std::uint64_t>(parse_long(f, "misc.seed", 42));
    cfg.ambiguity.expansion.seed = cfg.seed;
    return cfg;
}

std::vector<std::string> ExperimentConfig::validate_against(const ScenarioMatrix& scen,
                                                            const ConfigFile& file) const {
    std::vector<std::string> problems;
    auto anchored = [&](const std::string& key, const std::string& msg) {
        const int line = file.line_of(key);
        problems.push_back((line > 0 ? "line " + std::to_string(line) + ": " : "") + key + ": " + msg);
    };

    const auto n = scen.n_assets();
    const auto T = static_cast<std::size_t>(scen.n_periods());
    if (model.cardinality > static_cast<std::size_t>(n))
        anchored("model.cardinality", "A = " + std::to_string(model.cardinality) +
                                          " exceeds the dataset's asset count " + std::to_string(n));
    else {
        try {
            model.validate(n);
        } catch (const Error& e) {
            anchored("model.cardinality", e.what());
        }
    }
    if (T < in_len + out_len)
        anchored("window.in_len", "dataset has " + std::to_string(T) +
                                      " return periods, need at least " +
                                      std::to_string(in_len + out_len));
    if (ambiguity.expansion.sample_count < 1 || ambiguity.expansion.sample_count > in_len)
        anchored("ambiguity.sample_count",
                 "T0 must lie in [1, in_len]; got " + std::to_string(ambiguity.expansion.sample_count));
    if (market.kind == MarketSpec::Kind::asset &&
        std::find(scen.asset_ids.begin(), scen.asset_ids.end(), market.asset_id) ==
            scen.asset_ids.end())
        anchored("strategies.market", "asset '" + market.asset_id + "' not in the dataset");
    if (threads < 1) anchored("backtest.threads", "must be >= 1");
    return problems;
}

ScenarioMatrix load_scenarios(const ExperimentConfig& config) {
    auto series = read_price_file(config.data_path, config.data_format);
    if (!config.date_start.empty() || !config.date_end.empty()) {
        for (auto& s : series) {
            PriceSeries filtered;
            filtered.asset_id = s.asset_id;
            for (std::size_t i = 0; i < s.timestamps.size(); ++i) {
                if (!config.date_start.empty() && s.timestamps[i] < config.date_start) continue;
                if (!config.date_end.empty() && s.timestamps[i] > config.date_end) continue;
                filtered.timestamps.push_back(s.timestamps[i]);
                filtered.closes.push_back(s.closes[i]);
            }
            s = std::move(filtered);
        }
    }
    return align_assets(series);
}

Eigen::VectorXd market_series(const ExperimentConfig& config, const ScenarioMatrix& scen) {
    if (config.market.kind == MarketSpec::Kind::equal_weight)
        return scen.returns.colwise().mean().transpose();
    const auto it =
        std::find(scen.asset_ids.begin(), scen.asset_ids.end(), config.market.asset_id);
    if (it == scen.asset_ids.end())
        throw Error(Errc::invalid_spec, "market asset '" + config.market.asset_id + "' not found");
    const auto row = static_cast<Eigen::Index>(it - scen.asset_ids.begin());
    return scen.returns.row(row).transpose();
}

std::string default_config_text() {
    return R"(# mcvar experiment configuration
#
# Keys omitted here fall back to the same defaults, so a minimal config only
# needs data.path.

[data]
path = data/synthetic_8asset_120w.csv
format = auto              # auto | long | wide
date_start =               # optional inclusive ISO-8601 lower bound
date_end =                 # optional inclusive upper bound

[window]
in_len = 50                # in-sample periods per window
out_len = 4                # out-of-sample periods held after each fit
step = 4                   # windows advance by the out-of-sample length

[model]
# CVaR levels, strictly decreasing, with their weights (same order).
levels = 0.05, 0.03, 0.01
weights = 0.40, 0.48, 0.12
lower_bound = 0.015        # l_i, applied to every asset
upper_bound = 0.7          # u_i
cardinality = 3            # A, number of assets held
gamma_chance = 0.1         # chance-constraint tolerance
ellipsoid_scale = 0.072    # P_j = scale * I
# prose  -> twice the per-period equal-weight in-sample mean return
# printed-> twice the raw sum of in-sample returns (no 1/(nT) normalization)
# <number> -> explicit per-period target
return_target = prose

[ambiguity]
alpha = 0.05               # MMD radius (no reference value exists; calibrate per use)
sample_count = 42          # T0 empirical points; the rest of the window are support vectors
support_policy = chronological   # chronological | perturbed
perturbation = 0.001       # jitter for the perturbed policy
bandwidth = median         # median | <number>
jitter_start = 1e-10       # Gram factorization jitter escalation start

[solver]
rel_gap = 1e-6
max_nodes = 100000
feastol = 1e-8

[strategies]
list = nominal, rom_rkhs, equal_weight
market = equal_weight      # equal_weight | asset:<id>

[backtest]
threads = 1
cumulative = additive      # additive | compound

[metrics]
tail_level = 0.05
risk_free = 0.0
omega_threshold = 0.0
omega_as_printed = false   # true flips omega to the inverted fraction

[output]
dir = out

[misc]
seed = 42
)";
}

} // namespace mcvar
