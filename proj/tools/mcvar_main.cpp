#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "mcvar/backtest.hpp"
#include "mcvar/config.hpp"
#include "mcvar/reports.hpp"

namespace {

enum ExitCode { exit_ok = 0, exit_validation = 1, exit_solve = 2, exit_io = 3 };

int log_level() {
    const char* env = std::getenv("MCVAR_LOG");
    if (!env) return 1;
    const std::string v(env);
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << msg << "\n";
}

struct LoadedExperiment {
    mcvar::ExperimentConfig config;
    mcvar::ConfigFile file;
    mcvar::ScenarioMatrix scen;
    mcvar::WindowPlan plan;
};

LoadedExperiment load_experiment(const std::string& config_path) {
    LoadedExperiment exp;
    exp.file = mcvar::ConfigFile::load(config_path);
    exp.config = mcvar::ExperimentConfig::from_file(config_path);
    exp.scen = mcvar::load_scenarios(exp.config);
    exp.plan = mcvar::make_windows(static_cast<std::size_t>(exp.scen.n_periods()),
                                   exp.config.in_len, exp.config.out_len, exp.config.step);
    return exp;
}

std::vector<std::string> validate_loaded(const LoadedExperiment& exp) {
    return exp.config.validate_against(exp.scen, exp.file);
}

mcvar::StrategySpec make_strategy(const LoadedExperiment& exp, mcvar::StrategyKind kind,
                                  const std::string& name) {
    mcvar::StrategySpec strat;
    strat.kind = kind;
    strat.name = name;
    strat.model_cfg = exp.config.model;
    strat.ambiguity = exp.config.ambiguity;
    strat.bnb = exp.config.bnb;
    if (kind == mcvar::StrategyKind::benchmark_index)
        strat.benchmark_series = mcvar::market_series(exp.config, exp.scen);
    return strat;
}

std::vector<std::pair<std::string, mcvar::StrategyKind>>
strategy_names(const mcvar::ExperimentConfig& config) {
    std::vector<std::pair<std::string, mcvar::StrategyKind>> out;
    std::map<std::string, int> seen;
    for (auto kind : config.strategies) {
        std::string name = mcvar::to_string(kind);
        const int count = ++seen[name];
        if (count > 1) name += "_" + std::to_string(count);
        out.emplace_back(name, kind);
    }
    return out;
}

int cmd_validate(const std::string& config_path) {
    try {
        LoadedExperiment exp = load_experiment(config_path);
        const auto problems = validate_loaded(exp);
        if (problems.empty()) {
            std::cout << "valid: " << config_path << " (" << exp.scen.n_assets() << " assets, "
                      << exp.scen.n_periods() << " periods, " << exp.plan.windows.size()
                      << " windows)\n";
            return exit_ok;
        }
        for (const auto& p : problems) std::cout << "invalid: " << p << "\n";
        return exit_validation;
    } catch (const mcvar::Error& e) {
        std::cout << "invalid: " << e.what() << "\n";
        return e.code() == mcvar::Errc::io_error ? exit_io : exit_validation;
    }
}

int cmd_backtest(const std::string& config_path, const std::string& out_override,
                 int threads_override, const std::string& strategy_override) {
    LoadedExperiment exp;
    try {
        exp = load_experiment(config_path);
        const auto problems = validate_loaded(exp);
        if (!problems.empty()) {
            for (const auto& p : problems) std::cerr << "invalid: " << p << "\n";
            return exit_validation;
        }
    } catch (const mcvar::Error& e) {
        std::cerr << "invalid: " << e.what() << "\n";
        return e.code() == mcvar::Errc::io_error ? exit_io : exit_validation;
    }

    if (!out_override.empty()) exp.config.output_dir = out_override;
    if (threads_override > 0) exp.config.threads = threads_override;
    if (!strategy_override.empty()) {
        exp.config.strategies = {mcvar::strategy_kind_from_string(strategy_override)};
    }

    const Eigen::VectorXd market = mcvar::market_series(exp.config, exp.scen);
    std::vector<mcvar::StrategyResult> results;
    try {
        for (const auto& [name, kind] : strategy_names(exp.config)) {
            info("running strategy " + name + " over " +
                 std::to_string(exp.plan.windows.size()) + " windows");
            mcvar::StrategyResult r;
            r.name = name;
            r.kind = kind;
            r.oos = mcvar::run_backtest(exp.scen, exp.plan,
                                        make_strategy(exp, kind, name), exp.config.threads);
            Eigen::VectorXd oos_market(r.oos.concatenated.size());
            Eigen::Index at = 0;
            for (const auto& w : exp.plan.windows) {
                for (std::size_t t = w.out_start; t < w.out_end; ++t)
                    oos_market[at++] = market[static_cast<Eigen::Index>(t)];
            }
            r.metrics = mcvar::compute_metrics(r.oos.concatenated, oos_market,
                                               exp.config.metrics);
            results.push_back(std::move(r));
        }
    } catch (const mcvar::WindowFailure& e) {
        std::cerr << "solve failure: " << e.what() << " (window " << e.window_index << ", "
                  << mcvar::to_string(e.status) << ")\n";
        return exit_solve;
    } catch (const mcvar::Error& e) {
        std::cerr << "solve failure: " << e.what() << "\n";
        return exit_solve;
    }

    try {
        mcvar::write_reports(exp.config.output_dir, exp.config, exp.scen, exp.plan, results);
    } catch (const mcvar::Error& e) {
        std::cerr << "write failure: " << e.what() << "\n";
        return exit_io;
    }
    info("reports written to " + exp.config.output_dir);
    return exit_ok;
}

int cmd_solve_window(const std::string& config_path, std::size_t index,
                     const std::string& strategy_override) {
    LoadedExperiment exp;
    try {
        exp = load_experiment(config_path);
        const auto problems = validate_loaded(exp);
        if (!problems.empty()) {
            for (const auto& p : problems) std::cerr << "invalid: " << p << "\n";
            return exit_validation;
        }
    } catch (const mcvar::Error& e) {
        std::cerr << "invalid: " << e.what() << "\n";
        return e.code() == mcvar::Errc::io_error ? exit_io : exit_validation;
    }

    if (index >= exp.plan.windows.size()) {
        std::cerr << "invalid: window index " << index << " out of range (have "
                  << exp.plan.windows.size() << " windows)\n";
        return exit_validation;
    }

    mcvar::StrategyKind kind = mcvar::StrategyKind::nominal;
    if (!strategy_override.empty()) {
        kind = mcvar::strategy_kind_from_string(strategy_override);
    } else {
        for (auto k : exp.config.strategies) {
            if (k == mcvar::StrategyKind::nominal || k == mcvar::StrategyKind::rom_rkhs) {
                kind = k;
                break;
            }
        }
    }
    if (kind != mcvar::StrategyKind::nominal && kind != mcvar::StrategyKind::rom_rkhs) {
        std::cerr << "invalid: solve-window needs an optimizing strategy\n";
        return exit_validation;
    }

    const mcvar::Window& w = exp.plan.windows[index];
    const mcvar::ScenarioMatrix in_sample =
        exp.scen.slice(static_cast<Eigen::Index>(w.in_start), static_cast<Eigen::Index>(w.in_end));
    mcvar::StrategySpec strat = make_strategy(exp, kind, mcvar::to_string(kind));

    try {
        mcvar::Solution sol;
        mcvar::MixedConicProgram program;
        const mcvar::Portfolio p = mcvar::solve_window(in_sample, strat, &sol, &program);

        std::cout << "window " << index << " strategy " << mcvar::to_string(kind) << "\n";
        std::cout << "objective " << mcvar::format_double(sol.objective) << "\n";
        std::cout << "status " << mcvar::to_string(sol.status) << "\n";
        std::cout << "nodes " << sol.nodes << "\n";
        std::cout << "gap " << mcvar::format_double(sol.mip_gap) << "\n";
        std::cout << "residuals primal " << mcvar::format_double(sol.kkt_residuals.primal_feas)
                  << " dual " << mcvar::format_double(sol.kkt_residuals.dual_feas) << " gap "
                  << mcvar::format_double(sol.kkt_residuals.gap) << "\n";
        if (kind == mcvar::StrategyKind::rom_rkhs) {
            mcvar::KernelSpec kspec;
            kspec.bandwidth = strat.ambiguity.bandwidth;
            const mcvar::ExpansionSet exp_set =
                mcvar::make_expansion(in_sample, strat.ambiguity.expansion);
            const mcvar::GramFactors factors =
                mcvar::build_gram_factors(exp_set, kspec, strat.ambiguity.jitter_start);
            std::cout << "alpha " << mcvar::format_double(strat.ambiguity.alpha) << "\n";
            std::cout << "s_bar " << mcvar::format_double(factors.s_bar) << "\n";
            std::cout << "bandwidth " << mcvar::format_double(factors.bandwidth) << "\n";
        }
        std::cout << "weights\n";
        for (Eigen::Index i = 0; i < p.weights.size(); ++i) {
            if (p.weights[i] == 0.0) continue;
            std::cout << "  " << in_sample.asset_ids[static_cast<std::size_t>(i)] << " "
                      << mcvar::format_double(p.weights[i]) << "\n";
        }
        return exit_ok;
    } catch (const mcvar::Error& e) {
        std::cerr << "solve failure: " << e.what() << "\n";
        return exit_solve;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixed-CVaR portfolio optimization with a kernel-robust chance constraint"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::string strategy_override;
    int threads_override = -1;
    std::size_t window_index = 0;

    auto add_config_flag = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment configuration file")->required();
    };

    CLI::App* validate = app.add_subcommand("validate", "check a configuration and its dataset");
    add_config_flag(validate);

    CLI::App* backtest =
        app.add_subcommand("backtest", "run the rolling-window backtest and write reports");
    add_config_flag(backtest);
    backtest->add_option("--out", out_override, "override the output directory");
    backtest->add_option("--threads", threads_override, "override backtest.threads");
    backtest->add_option("--strategy", strategy_override, "run a single strategy");

    CLI::App* solve =
        app.add_subcommand("solve-window", "solve one in-sample window and print the portfolio");
    add_config_flag(solve);
    solve->add_option("--index", window_index, "window index")->required();
    solve->add_option("--strategy", strategy_override, "nominal or rom_rkhs");

    CLI11_PARSE(app, argc, argv);

    if (validate->parsed()) return cmd_validate(config_path);
    if (backtest->parsed())
        return cmd_backtest(config_path, out_override, threads_override, strategy_override);
    if (solve->parsed()) return cmd_solve_window(config_path, window_index, strategy_override);
    return exit_validation;
}
