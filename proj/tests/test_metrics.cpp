#include <doctest.h>

#include <random>

#include "mcvar/metrics.hpp"

using namespace mcvar;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

} // namespace

TEST_CASE("summary_stats on the printed formulas") {
    SUBCASE("two-point series") {
        const auto s = summary_stats(vec({0.1, -0.1}));
        CHECK(s.mean == doctest::Approx(0.0));
        CHECK(s.sd == doctest::Approx(0.1)); // population normalization
        CHECK(s.median == doctest::Approx(0.0));
        CHECK(s.max == doctest::Approx(0.1));
        CHECK(s.min == doctest::Approx(-0.1));
    }
    SUBCASE("constant series") {
        const auto s = summary_stats(vec({0.03, 0.03, 0.03}));
        CHECK(s.sd == doctest::Approx(0.0));
        CHECK(s.mean == doctest::Approx(0.03));
        CHECK(s.median == doctest::Approx(0.03));
    }
    SUBCASE("singleton") {
        const auto s = summary_stats(vec({0.42}));
        CHECK(s.max == doctest::Approx(0.42));
        CHECK(s.min == doctest::Approx(0.42));
        CHECK(s.median == doctest::Approx(0.42));
        CHECK(s.sd == doctest::Approx(0.0));
    }
    SUBCASE("empty series") {
        CHECK_THROWS_WITH_AS(summary_stats(Eigen::VectorXd()), doctest::Contains("EmptySeries"),
                             Error);
    }
}

TEST_CASE("tail_metrics applies the loss convention") {
    const auto r = vec({-5e-3, -4e-3, -3e-3, -2e-3, -1e-3});
    const auto tm = tail_metrics(r, 0.2);
    CHECK(tm.var == doctest::Approx(4e-3));
    CHECK(tm.cvar == doctest::Approx(5e-3));

    // gains register as negative losses
    const auto pos = tail_metrics(vec({0.01, 0.02, 0.03}), 0.5);
    CHECK(pos.var < 0.0);
    CHECK(pos.cvar < 0.0);

    CHECK_THROWS_WITH_AS(tail_metrics(r, 0.0), doctest::Contains("InvalidLevel"), Error);
    CHECK_THROWS_WITH_AS(tail_metrics(r, 1.0), doctest::Contains("InvalidLevel"), Error);
}

TEST_CASE("cvar dominates var and both shrink in the level") {
    std::mt19937_64 rng(88);
    std::normal_distribution<double> dist(0.001, 0.02);
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::VectorXd r(30);
        for (Eigen::Index i = 0; i < 30; ++i) r[i] = dist(rng);
        const auto lo = tail_metrics(r, 0.05);
        const auto hi = tail_metrics(r, 0.25);
        CHECK(lo.cvar >= lo.var - 1e-12);
        CHECK(hi.cvar >= hi.var - 1e-12);
        CHECK(lo.var >= hi.var - 1e-12);
        CHECK(lo.cvar >= hi.cvar - 1e-12);
    }
}

TEST_CASE("ols_beta") {
    const auto m = vec({0.01, -0.02, 0.005, 0.03, -0.01});
    CHECK(ols_beta(2.0 * m, m) == doctest::Approx(2.0));

    // exactly orthogonal fixture: cov(p, m) = 0
    const auto mm = vec({1.0, -1.0, 1.0, -1.0});
    const auto pp = vec({1.0, 1.0, -1.0, -1.0});
    CHECK(ols_beta(pp, mm) == doctest::Approx(0.0));

    CHECK_THROWS_WITH_AS(ols_beta(m, vec({0.01, 0.01, 0.01, 0.01, 0.01})),
                         doctest::Contains("DegenerateMarket"), Error);
    CHECK_THROWS_WITH_AS(ols_beta(m, vec({0.01, 0.02})), doctest::Contains("DimMismatch"), Error);
}

TEST_CASE("ratio metrics against hand values") {
    SUBCASE("portfolio equal to market: beta one, jensen zero") {
        const auto r = vec({0.01, -0.02, 0.03, 0.005});
        const auto t = compute_metrics(r, r);
        REQUIRE(t.jensen.has_value());
        REQUIRE(t.treynor.has_value());
        CHECK(*t.jensen == doctest::Approx(0.0));
        CHECK(*t.treynor == doctest::Approx(r.mean()));
    }
    SUBCASE("omega follows the prose orientation by default") {
        const auto r = vec({0.02, 0.02, -0.01});
        const auto t = compute_metrics(r, r);
        REQUIRE(t.omega.has_value());
        CHECK(*t.omega == doctest::Approx(4.0));

        MetricsOptions printed;
        printed.omega_as_printed = true;
        const auto tp = compute_metrics(r, r, printed);
        REQUIRE(tp.omega.has_value());
        CHECK(*tp.omega == doctest::Approx(0.25));
    }
    SUBCASE("degenerate ratios are reported as unset, not infinite") {
        const auto r = vec({0.01, 0.01, 0.01});
        const auto t = compute_metrics(r, vec({0.01, 0.02, 0.03}));
        CHECK_FALSE(t.sharpe.has_value());   // sd = 0
        CHECK_FALSE(t.sortino.has_value());  // no downside
        CHECK_FALSE(t.omega.has_value());    // no downside
        CHECK(t.cvar_at_level < 0.0);        // all gains
        CHECK_FALSE(t.starr.has_value());    // cvar <= 0
    }
    SUBCASE("sortino uses the printed below-mean semideviation") {
        const auto r = vec({0.03, -0.01, 0.01, 0.01});
        const double mean = r.mean();
        double ssd = 0.0;
        for (Eigen::Index i = 0; i < r.size(); ++i)
            ssd += std::pow(std::max(mean - r[i], 0.0), 2);
        ssd = std::sqrt(ssd / double(r.size()));
        const auto t = compute_metrics(r, r);
        REQUIRE(t.sortino.has_value());
        CHECK(*t.sortino == doctest::Approx(mean / ssd).epsilon(1e-12));
    }
}

TEST_CASE("scale equivariance of the table") {
    std::mt19937_64 rng(321);
    std::normal_distribution<double> dist(0.002, 0.03);
    Eigen::VectorXd r(24), m(24);
    for (Eigen::Index i = 0; i < 24; ++i) {
        r[i] = dist(rng);
        m[i] = dist(rng);
    }
    const double a = 3.5;
    const auto base = compute_metrics(r, m);
    const auto scaled = compute_metrics(a * r, a * m);
    CHECK(scaled.mean == doctest::Approx(a * base.mean).epsilon(1e-12));
    CHECK(scaled.sd == doctest::Approx(a * base.sd).epsilon(1e-12));
    CHECK(scaled.var_at_level == doctest::Approx(a * base.var_at_level).epsilon(1e-12));
    CHECK(scaled.cvar_at_level == doctest::Approx(a * base.cvar_at_level).epsilon(1e-12));
    REQUIRE(base.sharpe.has_value());
    CHECK(*scaled.sharpe == doctest::Approx(*base.sharpe).epsilon(1e-12)); // invariant
    REQUIRE(base.omega.has_value());
    CHECK(*scaled.omega == doctest::Approx(*base.omega).epsilon(1e-12)); // TP = 0
}

TEST_CASE("metric rows follow the paper table ordering") {
    const auto r = vec({0.01, -0.02, 0.03, 0.005, -0.001, 0.012});
    const auto rows = metric_rows(compute_metrics(r, r));
    REQUIRE(rows.size() == 13);
    CHECK(rows[0].first == "MAX");
    CHECK(rows[1].first == "MIN");
    CHECK(rows[2].first == "MEAN");
    CHECK(rows[3].first == "MEDIAN");
    CHECK(rows[4].first == "SD");
    CHECK(rows[5].first == "VAR 0.05");
    CHECK(rows[6].first == "CVAR 0.05");
    CHECK(rows[7].first == "STARR 0.05");
    CHECK(rows[8].first == "SHARPE");
    CHECK(rows[9].first == "TREYNOR");
    CHECK(rows[10].first == "JENSEN");
    CHECK(rows[11].first == "OMEGA");
    CHECK(rows[12].first == "SORTINO");
}

TEST_CASE("tail level parameterization reaches the table labels") {
    const auto r = vec({0.01, -0.02, 0.03, 0.005, -0.001, 0.012});
    MetricsOptions opt;
    opt.tail_level = 0.1;
    const auto rows = metric_rows(compute_metrics(r, r, opt));
    CHECK(rows[5].first == "VAR 0.10");
    CHECK(rows[6].first == "CVAR 0.10");
}
