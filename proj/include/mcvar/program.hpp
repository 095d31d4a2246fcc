#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mcvar/errors.hpp"

namespace mcvar {

/// Sparse affine expression sum_i coeffs[i].second * x[coeffs[i].first] + offset.
struct LinearExpr {
    std::vector<std::pair<int, double>> coeffs;
    double offset = 0.0;

    LinearExpr() = default;
    LinearExpr& add(int var, double coeff) {
        if (coeff != 0.0) coeffs.emplace_back(var, coeff);
        return *this;
    }
    double eval(const std::vector<double>& x) const;
};

/// Linear row a'x (=|<=) rhs; the sense is determined by which program list
/// the row lives in.
struct LinearRow {
    LinearExpr expr; // offset unused, kept zero
    double rhs = 0.0;
};

/// Second-order cone block: |head(x)| <= tail(x), all entries affine in x.
struct SocBlock {
    std::vector<LinearExpr> head;
    LinearExpr tail;
};

/// Couples a binary selection variable to the continuous variable it gates:
/// fixing the binary to 0 forces the weight to 0, fixing it to 1 tightens
/// the weight into [lower, upper]. Used by branch-and-bound propagation.
struct SemicontinuousLink {
    int binary_var = -1;
    int weight_var = -1;
    double lower = 0.0;
    double upper = 0.0;
};

/// Solver-agnostic mixed-integer second-order cone program (minimization).
struct MixedConicProgram {
    std::vector<std::string> var_names;
    std::vector<double> objective;      // dense c, minimize c'x
    double objective_offset = 0.0;
    std::vector<LinearRow> eq_rows;     // a'x == rhs
    std::vector<LinearRow> ineq_rows;   // a'x <= rhs
    std::vector<SocBlock> soc_blocks;
    std::vector<int> binary_idx;
    std::vector<SemicontinuousLink> links;

    int n_vars() const { return static_cast<int>(var_names.size()); }
    int add_var(const std::string& name);

    /// Checks index ranges and that every variable is referenced by at
    /// least one row, block, or the objective.
    void validate() const;
};

/// Plain-text sparse dump. The format round-trips the full structure
/// (variables, objective, rows, cones, binaries, links); numeric values are
/// written with enough digits to reproduce the double exactly.
void dump_program(const MixedConicProgram& program, std::ostream& out);
std::string dump_program(const MixedConicProgram& program);
MixedConicProgram parse_program(std::istream& in);
MixedConicProgram parse_program(const std::string& text);

} // namespace mcvar
