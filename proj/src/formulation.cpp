#include "mcvar/formulation.hpp"

#include <algorithm>
#include <cmath>

namespace mcvar {

double ReturnTarget::resolve(const ScenarioMatrix& scen) const {
    switch (mode) {
    case Mode::prose:
        return 2.0 * scen.returns.mean();
    case Mode::printed:
        return 2.0 * scen.returns.sum();
    case Mode::value:
        return value;
    }
    return value;
}

double ModelConfig::lower(Eigen::Index i) const {
    return lower_bounds.size() == 1 ? lower_bounds[0] : lower_bounds[i];
}

double ModelConfig::upper(Eigen::Index i) const {
    return upper_bounds.size() == 1 ? upper_bounds[0] : upper_bounds[i];
}

void ModelConfig::validate(Eigen::Index n) const {
    mcvar.validate();
    if (lower_bounds.size() != 1 && lower_bounds.size() != n)
        throw Error(Errc::invalid_spec, "lower_bounds must have length 1 or n");
    if (upper_bounds.size() != 1 && upper_bounds.size() != n)
        throw Error(Errc::invalid_spec, "upper_bounds must have length 1 or n");
    double l_min = 1.0, u_max = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double l = lower(i), u = upper(i);
        if (!(0.0 <= l && l <= u && u <= 1.0))
            throw Error(Errc::invalid_spec, "need 0 <= l_i <= u_i <= 1 for asset " +
                                                std::to_string(i));
        l_min = std::min(l_min, l);
        u_max = std::max(u_max, u);
    }
    if (cardinality == 0)
        throw Error(Errc::structurally_infeasible, "cardinality A = 0 makes sum w = 1 impossible");
    if (cardinality > static_cast<std::size_t>(n))
        throw Error(Errc::structurally_infeasible,
                    "cardinality A = " + std::to_string(cardinality) + " exceeds asset count " +
                        std::to_string(n));
    if (double(cardinality) * l_min > 1.0 + 1e-12)
        throw Error(Errc::structurally_infeasible, "A * min(l) > 1: lower bounds cannot fit");
    if (double(cardinality) * u_max < 1.0 - 1e-12)
        throw Error(Errc::structurally_infeasible, "A * max(u) < 1: upper bounds cannot reach 1");
    if (!(gamma_chance > 0.0) || !(gamma_chance < 1.0))
        throw Error(Errc::invalid_spec, "gamma_chance must lie in (0,1)");
    if (ellipsoid_scale < 0.0)
        throw Error(Errc::invalid_spec, "ellipsoid_scale must be >= 0");
}

namespace {

// Shared skeleton of (NoM): objective, CVaR rows, budget, coupling,
// cardinality; the hard return row is optional because the robust model
// replaces it with the chance machinery.
MixedConicProgram build_core(const ScenarioMatrix& scen, const ModelConfig& cfg,
                             bool include_return_row, ProgramLayout& lay) {
    const auto n = scen.n_assets();
    const auto T = scen.n_periods();
    if (n == 0 || T == 0) throw Error(Errc::empty_scenarios, "scenario matrix is empty");
    cfg.validate(n);
    const auto m = static_cast<Eigen::Index>(cfg.mcvar.size());

    MixedConicProgram p;
    lay = ProgramLayout{};
    lay.n = int(n);
    lay.T = int(T);
    lay.m = int(m);

    lay.w0 = p.n_vars();
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::string tag = scen.asset_ids.empty() ? std::to_string(i) : scen.asset_ids[i];
        p.add_var("w[" + tag + "]");
    }
    lay.y0 = p.n_vars();
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::string tag = scen.asset_ids.empty() ? std::to_string(i) : scen.asset_ids[i];
        p.add_var("y[" + tag + "]");
    }
    lay.c0 = p.n_vars();
    for (Eigen::Index k = 0; k < m; ++k)
        for (Eigen::Index j = 0; j < T; ++j)
            p.add_var("c[" + std::to_string(j) + "," + std::to_string(k) + "]");
    lay.gamma0 = p.n_vars();
    for (Eigen::Index k = 0; k < m; ++k) p.add_var("gamma[" + std::to_string(k) + "]");

    // objective: sum_k theta_k (gamma_k + (1/delta_k) sum_j p_j c_jk)
    for (Eigen::Index k = 0; k < m; ++k) {
        const double theta = cfg.mcvar.weights[k];
        const double delta = cfg.mcvar.levels[k];
        p.objective[static_cast<std::size_t>(lay.gamma0 + k)] = theta;
        for (Eigen::Index j = 0; j < T; ++j)
            p.objective[static_cast<std::size_t>(lay.c_of(int(j), int(k)))] =
                theta * scen.probs[j] / delta;
    }

    // CVaR rows: -c_jk - gamma_k - sum_i r_ij w_i <= 0
    lay.cvar_row0 = int(p.ineq_rows.size());
    for (Eigen::Index k = 0; k < m; ++k) {
        for (Eigen::Index j = 0; j < T; ++j) {
            LinearRow row;
            row.expr.add(lay.c_of(int(j), int(k)), -1.0);
            row.expr.add(lay.gamma0 + int(k), -1.0);
            for (Eigen::Index i = 0; i < n; ++i) row.expr.add(lay.w0 + int(i), -scen.returns(i, j));
            row.rhs = 0.0;
            p.ineq_rows.push_back(std::move(row));
        }
    }
    // c_jk >= 0
    for (Eigen::Index k = 0; k < m; ++k) {
        for (Eigen::Index j = 0; j < T; ++j) {
            LinearRow row;
            row.expr.add(lay.c_of(int(j), int(k)), -1.0);
            p.ineq_rows.push_back(std::move(row));
        }
    }
    // l_i y_i <= w_i <= u_i y_i
    for (Eigen::Index i = 0; i < n; ++i) {
        LinearRow lower_row;
        lower_row.expr.add(lay.y0 + int(i), cfg.lower(i));
        lower_row.expr.add(lay.w0 + int(i), -1.0);
        p.ineq_rows.push_back(std::move(lower_row));
        LinearRow upper_row;
        upper_row.expr.add(lay.w0 + int(i), 1.0);
        upper_row.expr.add(lay.y0 + int(i), -cfg.upper(i));
        p.ineq_rows.push_back(std::move(upper_row));
    }
    if (include_return_row) {
        // mu(R_w) >= R*  ->  -sum_j sum_i p_j r_ij w_i <= -R*
        LinearRow row;
        for (Eigen::Index i = 0; i < n; ++i)
            row.expr.add(lay.w0 + int(i), -scen.returns.row(i).dot(scen.probs));
        row.rhs = -cfg.return_target.resolve(scen);
        lay.return_row = int(p.ineq_rows.size());
        p.ineq_rows.push_back(std::move(row));
    }

    LinearRow budget;
    for (Eigen::Index i = 0; i < n; ++i) budget.expr.add(lay.w0 + int(i), 1.0);
    budget.rhs = 1.0;
    p.eq_rows.push_back(std::move(budget));
    LinearRow card;
    for (Eigen::Index i = 0; i < n; ++i) card.expr.add(lay.y0 + int(i), 1.0);
    card.rhs = double(cfg.cardinality);
    p.eq_rows.push_back(std::move(card));

    for (Eigen::Index i = 0; i < n; ++i) {
        p.binary_idx.push_back(lay.y0 + int(i));
        p.links.push_back({lay.y0 + int(i), lay.w0 + int(i), cfg.lower(i), cfg.upper(i)});
    }
    return p;
}

// P_j for scenario j: explicit matrix list (broadcast a single entry) or
// ellipsoid_scale * I.
Eigen::MatrixXd shape_matrix(const ModelConfig& cfg, Eigen::Index n, Eigen::Index j) {
    if (!cfg.ellipsoid_matrices.empty()) {
        const auto& mats = cfg.ellipsoid_matrices;
        const Eigen::MatrixXd& P = mats.size() == 1 ? mats[0] : mats[static_cast<std::size_t>(j)];
        if (P.rows() != P.cols())
            throw Error(Errc::invalid_shape_matrix,
                        "P_j must be square, got " + std::to_string(P.rows()) + "x" +
                            std::to_string(P.cols()));
        if (P.rows() != n)
            throw Error(Errc::invalid_shape_matrix, "P_j dimension does not match asset count");
        return P;
    }
    return cfg.ellipsoid_scale * Eigen::MatrixXd::Identity(n, n);
}

} // namespace

MixedConicProgram build_nom(const ScenarioMatrix& scen, const ModelConfig& cfg,
                            ProgramLayout* layout) {
    if (cfg.ambiguity.has_value())
        throw Error(Errc::invalid_spec, "build_nom expects no ambiguity config");
    ProgramLayout lay;
    MixedConicProgram p = build_core(scen, cfg, /*include_return_row=*/true, lay);
    if (layout) *layout = lay;
    return p;
}

void ellipsoid_blocks(const ScenarioMatrix& scen, const ModelConfig& cfg,
                      MixedConicProgram& program, ProgramLayout& lay) {
    const auto n = scen.n_assets();
    const auto T = scen.n_periods();
    if (!cfg.ellipsoid_matrices.empty() && cfg.ellipsoid_matrices.size() != 1 &&
        cfg.ellipsoid_matrices.size() != static_cast<std::size_t>(T))
        throw Error(Errc::invalid_shape_matrix, "need one P_j or one per scenario");

    // a zero support set degenerates every cone to t_j >= 0 with t_j = 0 at
    // any optimum, leaving the rows exactly nominal; emitting those apex
    // cones would only burden the solver
    if (cfg.ellipsoid_matrices.empty() && cfg.ellipsoid_scale == 0.0) return;

    lay.t0 = program.n_vars();
    for (Eigen::Index j = 0; j < T; ++j) program.add_var("t[" + std::to_string(j) + "]");

    // Rewrite every CVaR row to t_j - c_jk - gamma_k - sum_i r_ij w_i <= 0.
    for (int k = 0; k < lay.m; ++k)
        for (int j = 0; j < lay.T; ++j)
            program.ineq_rows[static_cast<std::size_t>(lay.cvar_row0 + k * lay.T + j)].expr.add(
                lay.t0 + j, 1.0);

    // One cone per scenario: |P_j' w| <= t_j.
    for (Eigen::Index j = 0; j < T; ++j) {
        const Eigen::MatrixXd P = shape_matrix(cfg, n, j);
        SocBlock block;
        block.head.resize(static_cast<std::size_t>(n));
        for (Eigen::Index r = 0; r < n; ++r) {
            for (Eigen::Index i = 0; i < n; ++i)
                block.head[static_cast<std::size_t>(r)].add(lay.w0 + int(i), P(i, r));
        }
        block.tail.add(lay.t0 + int(j), 1.0);
        program.soc_blocks.push_back(std::move(block));
    }
}

MixedConicProgram build_rom_rkhs(const ScenarioMatrix& scen, const ModelConfig& cfg,
                                 ProgramLayout* layout) {
    if (!cfg.ambiguity.has_value())
        throw Error(Errc::invalid_spec, "build_rom_rkhs requires an ambiguity config");
    const AmbiguityConfig& amb = *cfg.ambiguity;
    if (amb.alpha < 0.0)
        throw Error(Errc::invalid_radius, "alpha must be >= 0, got " + std::to_string(amb.alpha));
    const auto T = scen.n_periods();
    const auto n = scen.n_assets();
    if (static_cast<Eigen::Index>(amb.expansion.size()) != T)
        throw Error(Errc::dim_mismatch, "expansion has " + std::to_string(amb.expansion.size()) +
                                            " points, scenario matrix has " + std::to_string(T));
    if (amb.expansion.dim() != n)
        throw Error(Errc::dim_mismatch, "expansion point dimension does not match asset count");
    if (amb.factors.expansion_size() != T)
        throw Error(Errc::dim_mismatch, "Gram factors not dimensioned to the expansion set");

    ProgramLayout lay;
    MixedConicProgram p = build_core(scen, cfg, /*include_return_row=*/false, lay);
    ellipsoid_blocks(scen, cfg, p, lay);

    const double t0_count = double(amb.factors.sample_size());
    const double alpha_sq = amb.alpha * amb.alpha;
    const double s_bar = amb.factors.s_bar;
    const double r_star = cfg.return_target.resolve(scen);
    const Eigen::VectorXd q = amb.factors.M.rowwise().sum() / t0_count; // (1/T0) M 1

    lay.lambda = p.add_var("lambda");
    lay.omega = p.add_var("omega");
    lay.beta1 = p.add_var("beta1");
    lay.beta2 = p.add_var("beta2");
    lay.phi0 = p.n_vars();
    for (Eigen::Index j = 0; j < T; ++j) p.add_var("phi[" + std::to_string(j) + "]");
    lay.big_r0 = p.n_vars();
    for (Eigen::Index j = 0; j < T; ++j) p.add_var("R[" + std::to_string(j) + "]");

    // Scalar chance row:
    // Gamma*lambda - omega - (1 - a^2 + s_bar)/2 * beta1 + (1 + a^2 - s_bar)/2 * beta2 <= 0
    {
        LinearRow row;
        row.expr.add(lay.lambda, cfg.gamma_chance);
        row.expr.add(lay.omega, -1.0);
        row.expr.add(lay.beta1, -0.5 * (1.0 - alpha_sq + s_bar));
        row.expr.add(lay.beta2, 0.5 * (1.0 + alpha_sq - s_bar));
        lay.chance_row = int(p.ineq_rows.size());
        p.ineq_rows.push_back(std::move(row));
    }

    // Per-scenario dual rows. The cone in the worst-case primal carries
    // L' eta, so its adjoint pairs Phi through L (not L'); using L here is
    // what makes weak/strong duality against mmd_sq hold exactly.
    for (Eigen::Index j = 0; j < T; ++j) {
        LinearRow row;
        row.expr.add(lay.omega, 1.0);
        for (Eigen::Index l = 0; l <= j; ++l) {
            const double v = amb.factors.L(j, l); // lower triangular
            if (v != 0.0) row.expr.add(lay.phi0 + int(l), v);
        }
        row.expr.add(lay.beta1, q[j]);
        row.expr.add(lay.beta2, q[j]);
        row.expr.add(lay.big_r0 + int(j), 1.0);
        p.ineq_rows.push_back(std::move(row));
    }

    // Hinge rows: R_j >= 0 and R_j >= R* - r_j' w - lambda over the
    // expansion points.
    for (Eigen::Index j = 0; j < T; ++j) {
        LinearRow nonneg;
        nonneg.expr.add(lay.big_r0 + int(j), -1.0);
        p.ineq_rows.push_back(std::move(nonneg));
    }
    for (Eigen::Index j = 0; j < T; ++j) {
        LinearRow row;
        const Eigen::VectorXd& r_j = amb.expansion.points[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < n; ++i) row.expr.add(lay.w0 + int(i), -r_j[i]);
        row.expr.add(lay.lambda, -1.0);
        row.expr.add(lay.big_r0 + int(j), -1.0);
        row.rhs = -r_star;
        p.ineq_rows.push_back(std::move(row));
    }

    // MMD cone |(Phi, beta1)| <= beta2.
    {
        SocBlock block;
        block.head.resize(static_cast<std::size_t>(T) + 1);
        for (Eigen::Index j = 0; j < T; ++j)
            block.head[static_cast<std::size_t>(j)].add(lay.phi0 + int(j), 1.0);
        block.head.back().add(lay.beta1, 1.0);
        block.tail.add(lay.beta2, 1.0);
        p.soc_blocks.push_back(std::move(block));
    }

    if (layout) *layout = lay;
    return p;
}

Portfolio extract_portfolio(const std::vector<double>& solution,
                            const MixedConicProgram& program, const ModelConfig& cfg,
                            const std::vector<std::string>& asset_ids) {
    const std::size_t n = program.links.size();
    if (n == 0) throw Error(Errc::corrupt_solution, "program carries no selection structure");
    if (solution.size() != static_cast<std::size_t>(program.n_vars()))
        throw Error(Errc::corrupt_solution, "solution length does not match program");

    Portfolio out;
    out.objective_value = program.objective_offset;
    for (int i = 0; i < program.n_vars(); ++i)
        out.objective_value +=
            program.objective[static_cast<std::size_t>(i)] * solution[static_cast<std::size_t>(i)];
    out.weights.resize(static_cast<Eigen::Index>(n));
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = solution[static_cast<std::size_t>(program.links[i].weight_var)];
        if (std::abs(w) < 1e-8) w = 0.0;
        out.weights[static_cast<Eigen::Index>(i)] = w;
        sum += w;
        const double y = solution[static_cast<std::size_t>(program.links[i].binary_var)];
        if (y > 0.5) {
            out.selected.push_back(int(i));
            if (!asset_ids.empty()) out.selected_ids.push_back(asset_ids[i]);
        }
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw Error(Errc::corrupt_solution, "weights sum to " + std::to_string(sum));
    for (std::size_t i = 0; i < n; ++i) {
        const double w = out.weights[static_cast<Eigen::Index>(i)];
        const bool active = std::find(out.selected.begin(), out.selected.end(), int(i)) !=
                            out.selected.end();
        if (!active && w != 0.0)
            throw Error(Errc::corrupt_solution,
                        "unselected asset " + std::to_string(i) + " has weight " + std::to_string(w));
        if (active && (w < program.links[i].lower - 1e-6 || w > program.links[i].upper + 1e-6))
            throw Error(Errc::corrupt_solution,
                        "weight " + std::to_string(w) + " violates bounds for asset " +
                            std::to_string(i));
    }
    if (out.selected.size() != cfg.cardinality)
        throw Error(Errc::corrupt_solution, "selected " + std::to_string(out.selected.size()) +
                                                " assets, expected " +
                                                std::to_string(cfg.cardinality));
    return out;
}

} // namespace mcvar
