#include <doctest.h>

#include <random>
#include <sstream>

#include "mcvar/formulation.hpp"

using namespace mcvar;

namespace {

ScenarioMatrix fixture_scen(Eigen::Index n, Eigen::Index t, std::uint64_t seed = 77) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.002, 0.03);
    ScenarioMatrix scen;
    scen.returns.resize(n, t);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < t; ++j) scen.returns(i, j) = dist(rng);
    scen.probs = Eigen::VectorXd::Constant(t, 1.0 / double(t));
    for (Eigen::Index i = 0; i < n; ++i) scen.asset_ids.push_back("a" + std::to_string(i));
    return scen;
}

ModelConfig fixture_cfg(std::size_t cardinality, std::size_t m_levels = 2) {
    ModelConfig cfg;
    if (m_levels == 2) cfg.mcvar = MCVaRSpec::from_pairs({{0.05, 0.6}, {0.01, 0.4}});
    else if (m_levels == 1) cfg.mcvar = MCVaRSpec::from_pairs({{0.05, 1.0 - 1e-13}});
    else cfg.mcvar = MCVaRSpec::from_pairs({{0.01, 0.12}, {0.03, 0.48}, {0.05, 0.40}});
    cfg.lower_bounds = Eigen::VectorXd::Constant(1, 0.015);
    cfg.upper_bounds = Eigen::VectorXd::Constant(1, 0.7);
    cfg.cardinality = cardinality;
    cfg.return_target = {ReturnTarget::Mode::value, -1.0}; // slack by default
    cfg.gamma_chance = 0.1;
    cfg.ellipsoid_scale = 0.072;
    return cfg;
}

AmbiguityConfig fixture_ambiguity(const ScenarioMatrix& scen, std::size_t t0, double alpha) {
    AmbiguityConfig amb;
    amb.alpha = alpha;
    amb.expansion.sample_count = t0;
    for (Eigen::Index j = 0; j < scen.n_periods(); ++j)
        amb.expansion.points.push_back(scen.returns.col(j));
    amb.factors = build_gram_factors(amb.expansion, KernelSpec{});
    return amb;
}

} // namespace

TEST_CASE("build_nom produces the documented variable and row counts") {
    const auto scen = fixture_scen(3, 5);
    const auto cfg = fixture_cfg(2);
    ProgramLayout lay;
    const MixedConicProgram p = build_nom(scen, cfg, &lay);
    p.validate();

    // w(3) + y(3) + c(10) + gamma(2)
    CHECK(p.n_vars() == 18);
    // 10 CVaR rows + 10 c>=0 rows + 6 coupling rows + 1 return row
    CHECK(p.ineq_rows.size() == 27);
    CHECK(p.eq_rows.size() == 2);
    CHECK(p.soc_blocks.empty());
    CHECK(p.binary_idx.size() == 3);
    CHECK(p.links.size() == 3);

    // objective: theta_k on gamma_k, theta_k p_j / delta_k on c_jk
    CHECK(p.objective[static_cast<std::size_t>(lay.gamma0)] == doctest::Approx(0.6));
    CHECK(p.objective[static_cast<std::size_t>(lay.gamma0 + 1)] == doctest::Approx(0.4));
    CHECK(p.objective[static_cast<std::size_t>(lay.c_of(0, 0))] ==
          doctest::Approx(0.6 * 0.2 / 0.05));
    CHECK(p.objective[static_cast<std::size_t>(lay.c_of(0, 1))] ==
          doctest::Approx(0.4 * 0.2 / 0.01));

    // the CVaR row for (j=2, k=1) carries -r_{i2} on w_i
    const auto& row = p.ineq_rows[static_cast<std::size_t>(lay.cvar_row0 + 1 * 5 + 2)];
    bool found_w1 = false;
    for (const auto& [idx, v] : row.expr.coeffs) {
        if (idx == lay.w0 + 1) {
            CHECK(v == doctest::Approx(-scen.returns(1, 2)));
            found_w1 = true;
        }
    }
    CHECK(found_w1);
}

TEST_CASE("build_nom rejects structurally infeasible configs") {
    const auto scen = fixture_scen(3, 5);
    SUBCASE("A = 0") {
        auto cfg = fixture_cfg(0);
        CHECK_THROWS_WITH_AS(build_nom(scen, cfg), doctest::Contains("StructurallyInfeasible"),
                             Error);
    }
    SUBCASE("A > n") {
        auto cfg = fixture_cfg(4);
        CHECK_THROWS_WITH_AS(build_nom(scen, cfg), doctest::Contains("StructurallyInfeasible"),
                             Error);
    }
    SUBCASE("A * l_min > 1") {
        auto cfg = fixture_cfg(3);
        cfg.lower_bounds = Eigen::VectorXd::Constant(1, 0.4);
        CHECK_THROWS_WITH_AS(build_nom(scen, cfg), doctest::Contains("StructurallyInfeasible"),
                             Error);
    }
    SUBCASE("A * u_max < 1") {
        auto cfg = fixture_cfg(2);
        cfg.upper_bounds = Eigen::VectorXd::Constant(1, 0.3);
        CHECK_THROWS_WITH_AS(build_nom(scen, cfg), doctest::Contains("StructurallyInfeasible"),
                             Error);
    }
    SUBCASE("ambiguity present is rejected") {
        auto cfg = fixture_cfg(2);
        cfg.ambiguity = fixture_ambiguity(scen, 4, 0.05);
        CHECK_THROWS_WITH_AS(build_nom(scen, cfg), doctest::Contains("InvalidSpec"), Error);
    }
}

TEST_CASE("ellipsoid_blocks adds one cone per scenario and rewrites the CVaR rows") {
    const auto scen = fixture_scen(2, 3);
    auto cfg = fixture_cfg(2);
    ProgramLayout lay;
    MixedConicProgram p = build_nom(scen, cfg, &lay);
    const auto nominal_rows = p.ineq_rows;
    ellipsoid_blocks(scen, cfg, p, lay);

    REQUIRE(p.soc_blocks.size() == 3);
    for (const auto& block : p.soc_blocks) CHECK(block.head.size() == 2);

    // every CVaR row gained exactly the +t_j term, with j matching its scenario
    for (int k = 0; k < lay.m; ++k) {
        for (int j = 0; j < lay.T; ++j) {
            const auto& before = nominal_rows[static_cast<std::size_t>(lay.cvar_row0 + k * lay.T + j)];
            const auto& after = p.ineq_rows[static_cast<std::size_t>(lay.cvar_row0 + k * lay.T + j)];
            REQUIRE(after.expr.coeffs.size() == before.expr.coeffs.size() + 1);
            CHECK(after.expr.coeffs.back().first == lay.t0 + j);
            CHECK(after.expr.coeffs.back().second == 1.0);
        }
    }

    // P = scale * I: at w = e_1 the head evaluates to scale in one slot
    std::vector<double> x(static_cast<std::size_t>(p.n_vars()), 0.0);
    x[static_cast<std::size_t>(lay.w0)] = 1.0;
    double head_norm_sq = 0.0;
    for (const auto& hrow : p.soc_blocks[0].head) {
        const double v = hrow.eval(x);
        head_norm_sq += v * v;
    }
    CHECK(std::sqrt(head_norm_sq) == doctest::Approx(0.072));
}

TEST_CASE("ellipsoid_blocks accepts full matrices and rejects non-square ones") {
    const auto scen = fixture_scen(2, 3);
    auto cfg = fixture_cfg(2);
    ProgramLayout lay;

    SUBCASE("full matrix broadcast") {
        cfg.ellipsoid_matrices = {Eigen::MatrixXd::Identity(2, 2) * 0.05};
        MixedConicProgram p = build_nom(scen, cfg, &lay);
        ellipsoid_blocks(scen, cfg, p, lay);
        CHECK(p.soc_blocks.size() == 3);
    }
    SUBCASE("non-square is rejected") {
        cfg.ellipsoid_matrices = {Eigen::MatrixXd::Zero(2, 3)};
        MixedConicProgram p = build_nom(scen, cfg, &lay);
        CHECK_THROWS_WITH_AS(ellipsoid_blocks(scen, cfg, p, lay),
                             doctest::Contains("InvalidShapeMatrix"), Error);
    }
    SUBCASE("wrong dimension is rejected") {
        cfg.ellipsoid_matrices = {Eigen::MatrixXd::Identity(3, 3)};
        MixedConicProgram p = build_nom(scen, cfg, &lay);
        CHECK_THROWS_WITH_AS(ellipsoid_blocks(scen, cfg, p, lay),
                             doctest::Contains("InvalidShapeMatrix"), Error);
    }
}

TEST_CASE("build_rom_rkhs layout: kernel variables, rows and cones") {
    const auto scen = fixture_scen(3, 5);
    auto cfg = fixture_cfg(2);
    cfg.ambiguity = fixture_ambiguity(scen, 4, 0.05);
    ProgramLayout lay;
    const MixedConicProgram p = build_rom_rkhs(scen, cfg, &lay);
    p.validate();

    // nominal 18 + ellipsoid t(5) + lambda/omega/beta1/beta2 + phi(5) + R(5)
    CHECK(p.n_vars() == 18 + 5 + 4 + 5 + 5);
    // cones: 5 ellipsoid + 1 MMD
    REQUIRE(p.soc_blocks.size() == 6);
    CHECK(p.soc_blocks.back().head.size() == 6); // (phi, beta1)
    // rows: 10 CVaR + 10 c>=0 + 6 coupling (no return row)
    //       + 1 chance + 5 vector + 5 R>=0 + 5 hinge
    CHECK(p.ineq_rows.size() == 10 + 10 + 6 + 1 + 5 + 5 + 5);
    CHECK(lay.return_row == -1);

    // the chance row carries Gamma on lambda and the alpha/s_bar constants
    const auto& chance = p.ineq_rows[static_cast<std::size_t>(lay.chance_row)];
    const double a2 = 0.05 * 0.05;
    const double s_bar = cfg.ambiguity->factors.s_bar;
    bool saw_lambda = false, saw_beta1 = false, saw_beta2 = false;
    for (const auto& [idx, v] : chance.expr.coeffs) {
        if (idx == lay.lambda) {
            CHECK(v == doctest::Approx(0.1));
            saw_lambda = true;
        } else if (idx == lay.beta1) {
            CHECK(v == doctest::Approx(-0.5 * (1.0 - a2 + s_bar)));
            saw_beta1 = true;
        } else if (idx == lay.beta2) {
            CHECK(v == doctest::Approx(0.5 * (1.0 + a2 - s_bar)));
            saw_beta2 = true;
        }
    }
    CHECK(saw_lambda);
    CHECK(saw_beta1);
    CHECK(saw_beta2);
}

TEST_CASE("build_rom_rkhs validates ambiguity inputs") {
    const auto scen = fixture_scen(3, 5);
    SUBCASE("missing ambiguity") {
        auto cfg = fixture_cfg(2);
        CHECK_THROWS_WITH_AS(build_rom_rkhs(scen, cfg), doctest::Contains("InvalidSpec"), Error);
    }
    SUBCASE("negative radius") {
        auto cfg = fixture_cfg(2);
        cfg.ambiguity = fixture_ambiguity(scen, 4, 0.05);
        cfg.ambiguity->alpha = -0.1;
        CHECK_THROWS_WITH_AS(build_rom_rkhs(scen, cfg), doctest::Contains("InvalidRadius"), Error);
    }
    SUBCASE("expansion size mismatch") {
        auto cfg = fixture_cfg(2);
        const auto other = fixture_scen(3, 7, 99);
        cfg.ambiguity = fixture_ambiguity(other, 4, 0.05);
        CHECK_THROWS_WITH_AS(build_rom_rkhs(scen, cfg), doctest::Contains("DimMismatch"), Error);
    }
}

TEST_CASE("builder programs survive a dump/parse round trip") {
    const auto scen = fixture_scen(3, 5);
    auto cfg = fixture_cfg(2);
    const MixedConicProgram nom = build_nom(scen, cfg);
    CHECK(dump_program(parse_program(dump_program(nom))) == dump_program(nom));

    cfg.ambiguity = fixture_ambiguity(scen, 4, 0.05);
    const MixedConicProgram rom = build_rom_rkhs(scen, cfg);
    CHECK(dump_program(parse_program(dump_program(rom))) == dump_program(rom));
}

TEST_CASE("extract_portfolio reads weights and enforces invariants") {
    const auto scen = fixture_scen(3, 5);
    auto cfg = fixture_cfg(2);
    ProgramLayout lay;
    const MixedConicProgram p = build_nom(scen, cfg, &lay);

    std::vector<double> x(static_cast<std::size_t>(p.n_vars()), 0.0);
    x[static_cast<std::size_t>(lay.w0 + 0)] = 0.4;
    x[static_cast<std::size_t>(lay.w0 + 2)] = 0.6;
    x[static_cast<std::size_t>(lay.y0 + 0)] = 1.0;
    x[static_cast<std::size_t>(lay.y0 + 2)] = 1.0;

    const Portfolio pf = extract_portfolio(x, p, cfg, scen.asset_ids);
    CHECK(pf.selected == std::vector<int>{0, 2});
    CHECK(pf.selected_ids == std::vector<std::string>{"a0", "a2"});
    CHECK(pf.weights.sum() == doctest::Approx(1.0));

    SUBCASE("boundary weights at u_i and near l_i are accepted") {
        auto x2 = x;
        x2[static_cast<std::size_t>(lay.w0 + 0)] = 0.7; // exactly u
        x2[static_cast<std::size_t>(lay.w0 + 2)] = 0.3;
        CHECK_NOTHROW(extract_portfolio(x2, p, cfg, scen.asset_ids));
    }
    SUBCASE("weights not summing to one are rejected") {
        auto x2 = x;
        x2[static_cast<std::size_t>(lay.w0 + 2)] = 0.4; // sum 0.8
        CHECK_THROWS_WITH_AS(extract_portfolio(x2, p, cfg, scen.asset_ids),
                             doctest::Contains("CorruptSolution"), Error);
    }
    SUBCASE("tiny weights snap to zero") {
        auto x2 = x;
        x2[static_cast<std::size_t>(lay.w0 + 1)] = 5e-9;
        CHECK_NOTHROW(extract_portfolio(x2, p, cfg, scen.asset_ids));
    }
    SUBCASE("wrong support size is rejected") {
        auto x2 = x;
        x2[static_cast<std::size_t>(lay.y0 + 1)] = 1.0; // claims 3 selected
        CHECK_THROWS_WITH_AS(extract_portfolio(x2, p, cfg, scen.asset_ids),
                             doctest::Contains("CorruptSolution"), Error);
    }
}

TEST_CASE("return target: prose vs printed reading") {
    const auto scen = fixture_scen(4, 6);
    ReturnTarget prose{ReturnTarget::Mode::prose, 0.0};
    ReturnTarget printed{ReturnTarget::Mode::printed, 0.0};
    CHECK(prose.resolve(scen) == doctest::Approx(2.0 * scen.returns.mean()));
    CHECK(printed.resolve(scen) == doctest::Approx(2.0 * scen.returns.sum()));
    CHECK(printed.resolve(scen) ==
          doctest::Approx(prose.resolve(scen) * double(scen.returns.size())));
}
