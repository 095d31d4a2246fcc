#include "mcvar/backtest.hpp"

#include <atomic>
#include <random>
#include <thread>

namespace mcvar {

const char* to_string(StrategyKind kind) noexcept {
    switch (kind) {
    case StrategyKind::nominal: return "nominal";
    case StrategyKind::rom_rkhs: return "rom_rkhs";
    case StrategyKind::equal_weight: return "equal_weight";
    case StrategyKind::benchmark_index: return "benchmark_index";
    }
    return "unknown";
}

StrategyKind strategy_kind_from_string(const std::string& name) {
    if (name == "nominal") return StrategyKind::nominal;
    if (name == "rom_rkhs") return StrategyKind::rom_rkhs;
    if (name == "equal_weight") return StrategyKind::equal_weight;
    if (name == "benchmark_index") return StrategyKind::benchmark_index;
    throw Error(Errc::invalid_spec, "unknown strategy kind '" + name + "'");
}

ExpansionSet make_expansion(const ScenarioMatrix& in_sample, const ExpansionPolicy& policy) {
    const auto T = in_sample.n_periods();
    const auto T0 = static_cast<Eigen::Index>(policy.sample_count);
    if (T0 < 1 || T0 > T)
        throw Error(Errc::invalid_spec, "sample_count T0 must lie in [1, T], got " +
                                            std::to_string(policy.sample_count) + " for T = " +
                                            std::to_string(T));
    ExpansionSet exp;
    exp.sample_count = policy.sample_count;
    exp.points.reserve(static_cast<std::size_t>(T));
    for (Eigen::Index j = 0; j < T0; ++j) exp.points.push_back(in_sample.returns.col(j));

    if (policy.kind == ExpansionPolicy::Kind::chronological) {
        for (Eigen::Index j = T0; j < T; ++j) exp.points.push_back(in_sample.returns.col(j));
    } else {
        std::mt19937_64 rng(policy.seed);
        std::uniform_int_distribution<Eigen::Index> pick(0, T0 - 1);
        std::normal_distribution<double> noise(0.0, policy.perturbation);
        for (Eigen::Index j = T0; j < T; ++j) {
            Eigen::VectorXd p = in_sample.returns.col(pick(rng));
            for (Eigen::Index i = 0; i < p.size(); ++i) p[i] += noise(rng);
            exp.points.push_back(std::move(p));
        }
    }
    return exp;
}

Portfolio solve_window(const ScenarioMatrix& in_sample, const StrategySpec& strat,
                       Solution* solution_out, MixedConicProgram* program_out) {
    ModelConfig cfg = strat.model_cfg;
    MixedConicProgram program;
    if (strat.kind == StrategyKind::nominal) {
        cfg.ambiguity.reset();
        program = build_nom(in_sample, cfg);
    } else if (strat.kind == StrategyKind::rom_rkhs) {
        AmbiguityConfig amb;
        amb.alpha = strat.ambiguity.alpha;
        amb.expansion = make_expansion(in_sample, strat.ambiguity.expansion);
        KernelSpec kspec;
        kspec.bandwidth = strat.ambiguity.bandwidth;
        amb.factors = build_gram_factors(amb.expansion, kspec, strat.ambiguity.jitter_start);
        cfg.ambiguity = std::move(amb);
        program = build_rom_rkhs(in_sample, cfg);
    } else {
        throw Error(Errc::invalid_spec, "solve_window expects an optimizing strategy");
    }

    Solution sol = branch_and_bound(program, strat.bnb);
    if (solution_out) *solution_out = sol;
    if (program_out) *program_out = std::move(program);
    if (sol.status != SolveStatus::optimal && sol.status != SolveStatus::iter_limit)
        throw Error(Errc::window_failure,
                    std::string("window solve ended with ") + to_string(sol.status));
    if (sol.status == SolveStatus::iter_limit && sol.primal.empty())
        throw Error(Errc::window_failure, "node limit reached without an incumbent");
    return extract_portfolio(sol.primal, program, cfg, in_sample.asset_ids);
}

OOSReturns run_backtest(const ScenarioMatrix& scen, const WindowPlan& plan,
                        const StrategySpec& strat, int threads) {
    const auto T = scen.n_periods();
    const auto n = scen.n_assets();
    for (const auto& w : plan.windows) {
        if (w.out_end > static_cast<std::size_t>(T))
            throw Error(Errc::out_of_range, "window plan exceeds the scenario matrix");
    }
    if (strat.kind == StrategyKind::benchmark_index &&
        strat.benchmark_series.size() != T)
        throw Error(Errc::dim_mismatch, "benchmark series must cover the full period");

    const std::size_t W = plan.windows.size();
    std::vector<Eigen::VectorXd> per_window(W);
    std::vector<Portfolio> portfolios(W);
    std::vector<std::optional<SolveStatus>> failures(W);
    const bool optimizing =
        strat.kind == StrategyKind::nominal || strat.kind == StrategyKind::rom_rkhs;

    auto run_one = [&](std::size_t k) {
        const Window& w = plan.windows[k];
        Eigen::VectorXd weights;
        if (optimizing) {
            const ScenarioMatrix in_sample =
                scen.slice(static_cast<Eigen::Index>(w.in_start),
                           static_cast<Eigen::Index>(w.in_end));
            Solution sol;
            try {
                portfolios[k] = solve_window(in_sample, strat, &sol);
            } catch (const Error&) {
                failures[k] = sol.status;
                return;
            }
            weights = portfolios[k].weights;
        } else if (strat.kind == StrategyKind::equal_weight) {
            weights = Eigen::VectorXd::Constant(n, 1.0 / double(n));
        }
        Eigen::VectorXd out(w.out_end - w.out_start);
        for (std::size_t t = w.out_start; t < w.out_end; ++t) {
            const auto col = static_cast<Eigen::Index>(t);
            double r;
            if (strat.kind == StrategyKind::benchmark_index)
                r = strat.benchmark_series[col];
            else if (strat.kind == StrategyKind::equal_weight)
                r = scen.returns.col(col).mean(); // bit-exact column mean
            else
                r = weights.dot(scen.returns.col(col));
            out[static_cast<Eigen::Index>(t - w.out_start)] = r;
        }
        per_window[k] = std::move(out);
    };

    if (threads <= 1 || W <= 1 || !optimizing) {
        for (std::size_t k = 0; k < W; ++k) run_one(k);
    } else {
        std::atomic<std::size_t> next{0};
        const int workers = std::min<int>(threads, int(W));
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (std::size_t k = next.fetch_add(1); k < W; k = next.fetch_add(1)) run_one(k);
            });
        for (auto& th : pool) th.join();
    }

    auto concatenate = [](OOSReturns& r) {
        Eigen::Index total = 0;
        for (const auto& v : r.per_window) total += v.size();
        r.concatenated.resize(total);
        Eigen::Index at = 0;
        for (const auto& v : r.per_window) {
            r.concatenated.segment(at, v.size()) = v;
            at += v.size();
        }
    };

    OOSReturns oos;
    for (std::size_t k = 0; k < W; ++k) {
        if (failures[k].has_value()) {
            // abort, handing the completed prefix back through the error
            concatenate(oos);
            throw WindowFailure(k, *failures[k], std::move(oos));
        }
        oos.per_window.push_back(per_window[k]);
        if (optimizing) oos.window_portfolios.push_back(portfolios[k]);
        if (!scen.dates.empty()) {
            const Window& w = plan.windows[k];
            for (std::size_t t = w.out_start; t < w.out_end; ++t) oos.dates.push_back(scen.dates[t]);
        }
    }
    concatenate(oos);
    return oos;
}

Eigen::VectorXd cumulative_series(const OOSReturns& oos, bool compound) {
    if (oos.concatenated.size() == 0) throw Error(Errc::empty_series, "no out-of-sample returns");
    Eigen::VectorXd cum(oos.concatenated.size());
    double acc = compound ? 1.0 : 0.0;
    for (Eigen::Index t = 0; t < oos.concatenated.size(); ++t) {
        if (compound) {
            acc *= 1.0 + oos.concatenated[t];
            cum[t] = acc - 1.0;
        } else {
            acc += oos.concatenated[t];
            cum[t] = acc;
        }
    }
    return cum;
}

} // namespace mcvar
