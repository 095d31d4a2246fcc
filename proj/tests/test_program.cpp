#include <doctest.h>

#include <random>

#include "mcvar/program.hpp"

using namespace mcvar;

namespace {

MixedConicProgram random_program(std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 3.0);
    MixedConicProgram p;
    const int n = 3 + int(rng() % 10);
    for (int i = 0; i < n; ++i) p.add_var("x" + std::to_string(i));
    for (int i = 0; i < n; ++i) p.objective[static_cast<std::size_t>(i)] = dist(rng);
    p.objective_offset = dist(rng);

    const int eqs = int(rng() % 3);
    for (int r = 0; r < eqs; ++r) {
        LinearRow row;
        for (int i = 0; i < n; ++i)
            if (rng() % 2) row.expr.add(i, dist(rng));
        row.expr.add(int(rng() % n), dist(rng));
        row.rhs = dist(rng);
        p.eq_rows.push_back(row);
    }
    const int ineqs = 1 + int(rng() % 5);
    for (int r = 0; r < ineqs; ++r) {
        LinearRow row;
        row.expr.add(int(rng() % n), dist(rng));
        row.expr.add(int(rng() % n), dist(rng));
        row.rhs = dist(rng);
        p.ineq_rows.push_back(row);
    }
    const int blocks = int(rng() % 3);
    for (int b = 0; b < blocks; ++b) {
        SocBlock block;
        const int dim = 1 + int(rng() % 4);
        block.head.resize(static_cast<std::size_t>(dim));
        for (auto& hrow : block.head) {
            hrow.add(int(rng() % n), dist(rng));
            hrow.offset = dist(rng);
        }
        block.tail.add(int(rng() % n), dist(rng));
        block.tail.offset = dist(rng);
        p.soc_blocks.push_back(block);
    }
    p.binary_idx = {0, 1};
    p.links.push_back({0, 2, 0.1, 0.9});
    return p;
}

bool expr_equal(const LinearExpr& a, const LinearExpr& b) {
    return a.coeffs == b.coeffs && a.offset == b.offset;
}

bool program_equal(const MixedConicProgram& a, const MixedConicProgram& b) {
    if (a.var_names != b.var_names || a.objective != b.objective ||
        a.objective_offset != b.objective_offset || a.binary_idx != b.binary_idx)
        return false;
    if (a.eq_rows.size() != b.eq_rows.size() || a.ineq_rows.size() != b.ineq_rows.size() ||
        a.soc_blocks.size() != b.soc_blocks.size() || a.links.size() != b.links.size())
        return false;
    for (std::size_t i = 0; i < a.eq_rows.size(); ++i)
        if (!expr_equal(a.eq_rows[i].expr, b.eq_rows[i].expr) ||
            a.eq_rows[i].rhs != b.eq_rows[i].rhs)
            return false;
    for (std::size_t i = 0; i < a.ineq_rows.size(); ++i)
        if (!expr_equal(a.ineq_rows[i].expr, b.ineq_rows[i].expr) ||
            a.ineq_rows[i].rhs != b.ineq_rows[i].rhs)
            return false;
    for (std::size_t i = 0; i < a.soc_blocks.size(); ++i) {
        if (a.soc_blocks[i].head.size() != b.soc_blocks[i].head.size()) return false;
        for (std::size_t j = 0; j < a.soc_blocks[i].head.size(); ++j)
            if (!expr_equal(a.soc_blocks[i].head[j], b.soc_blocks[i].head[j])) return false;
        if (!expr_equal(a.soc_blocks[i].tail, b.soc_blocks[i].tail)) return false;
    }
    for (std::size_t i = 0; i < a.links.size(); ++i) {
        if (a.links[i].binary_var != b.links[i].binary_var ||
            a.links[i].weight_var != b.links[i].weight_var ||
            a.links[i].lower != b.links[i].lower || a.links[i].upper != b.links[i].upper)
            return false;
    }
    return true;
}

} // namespace

TEST_CASE("program dump round-trips the sparse structure losslessly") {
    std::mt19937_64 rng(8675309);
    for (int rep = 0; rep < 30; ++rep) {
        const MixedConicProgram p = random_program(rng);
        const std::string text = dump_program(p);
        const MixedConicProgram back = parse_program(text);
        CHECK(program_equal(p, back));
        // and a second trip is byte-identical
        CHECK(dump_program(back) == text);
    }
}

TEST_CASE("validate rejects unused variables and bad indices") {
    MixedConicProgram p;
    p.add_var("a");
    p.add_var("b");
    LinearRow row;
    row.expr.add(0, 1.0);
    row.rhs = 1.0;
    p.eq_rows.push_back(row);
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("unused"), Error);

    p.objective[1] = 1.0;
    CHECK_NOTHROW(p.validate());

    LinearRow bad;
    bad.expr.add(5, 1.0);
    p.ineq_rows.push_back(bad);
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("OutOfRange"), Error);
}

TEST_CASE("parse_program rejects malformed dumps") {
    CHECK_THROWS_WITH_AS(parse_program(std::string("garbage\n")),
                         doctest::Contains("ParseError"), Error);
    MixedConicProgram p;
    p.add_var("a");
    p.objective[0] = 1.0;
    std::string text = dump_program(p);
    text.resize(text.size() / 2); // truncate
    CHECK_THROWS_AS(parse_program(text), Error);
}
