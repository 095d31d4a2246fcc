#pragma once

#include <iosfwd>
#include <limits>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "mcvar/conelp.hpp"
#include "mcvar/formulation.hpp"
#include "mcvar/program.hpp"

namespace mcvar {

enum class SolveStatus { optimal, infeasible, iter_limit, numerical_failure };

const char* to_string(SolveStatus status) noexcept;

struct KKTResiduals {
    double primal_feas = 0.0;
    double dual_feas = 0.0;
    double gap = 0.0;
};

struct Solution {
    SolveStatus status = SolveStatus::numerical_failure;
    std::vector<double> primal;      // full variable vector of the program
    double objective = std::numeric_limits<double>::quiet_NaN();
    KKTResiduals kkt_residuals;
    ConeStatus cone_status = ConeStatus::numerical_failure;
    long nodes = 0;                  // relaxations solved (B&B / enumeration)
    double bound = -std::numeric_limits<double>::infinity(); // proven lower bound
    double mip_gap = 0.0;
};

/// Variable-bound overlay applied on top of a program (used to relax/fix
/// binaries and propagate fixings). Missing variables keep their natural
/// (unbounded) domain.
using BoundOverlay = std::map<int, std::pair<double, double>>;

struct SolverSettings {
    ConeSettings cone;
};

struct BnBConfig {
    double rel_gap_tol = 1e-6;
    long max_nodes = 100000;
    enum class Branching { most_fractional, max_weight } branching = Branching::most_fractional;
    // node order is best-bound with FIFO tie-break
    double int_tol = 1e-6;
    double tie_tol = 1e-7;   // objective ties resolved toward the lex-smallest support
    SolverSettings solver;
    std::ostream* trace = nullptr; // one line per node: id, depth, bound, incumbent
};

/// Solves the continuous conic relaxation (binaries relaxed to [0,1], plus
/// any overlay fixings). Deterministic for identical inputs.
Solution solve_continuous(const MixedConicProgram& program, const SolverSettings& settings = {},
                          const BoundOverlay& overlay = {});

/// Branch-and-bound on the cardinality binaries: most-fractional branching
/// with max-weight tie-break, best-bound node selection with FIFO tie-break,
/// bound propagation through the program's semicontinuous links.
Solution branch_and_bound(const MixedConicProgram& program, const BnBConfig& config = {});

/// Exhaustive oracle: solves one continuous subproblem per support of size A
/// (lexicographic order) and keeps the best; ties within tie_tol go to the
/// lexicographically smallest support. Guarded to at most 20 binaries.
Solution enumerate_exact(const MixedConicProgram& program, std::size_t A,
                         const SolverSettings& settings = {});

/// Constants of the kernel chance constraint derived from the Gram factors:
/// d1 = (1 - a^2 + s_bar)/2, d2 = (s_bar - a^2 - 1)/2, q = (1/T0) M 1.
struct KernelChanceConstants {
    double d1 = 0.0;
    double d2 = 0.0;
    Eigen::VectorXd q;
};
KernelChanceConstants kernel_chance_constants(const GramFactors& factors, double alpha);

/// Per-expansion-point shortfall hinge (R* - r_j' w - lambda)^+.
Eigen::VectorXd shortfall_hinge(const Eigen::VectorXd& weights, double lambda, double r_star,
                                const ExpansionSet& expansion);

struct WorstCaseResult {
    double value = 0.0;
    Eigen::VectorXd variables; // eta for the primal; (omega, beta1, beta2, phi) for the dual
    SolveStatus status = SolveStatus::numerical_failure;
};

/// Worst-case expected shortfall over the MMD ambiguity ball:
/// max_eta sum_j eta_j (R* - r_j' w - lambda)^+ over the simplex intersected
/// with the kernel ball, solved in the paper's (T+2)-cone primal form.
WorstCaseResult worst_case_primal(const Eigen::VectorXd& weights, double lambda, double r_star,
                                  const AmbiguityConfig& ambiguity, const ScenarioMatrix& scen,
                                  const SolverSettings& settings = {});

/// Conic dual of worst_case_primal (the rows embedded in the robust model):
/// min -omega - d1 beta1 - d2 beta2 subject to
/// omega 1 + L phi + (beta1 + beta2) q <= -hinge, |(phi, beta1)| <= beta2.
WorstCaseResult worst_case_dual(const Eigen::VectorXd& weights, double lambda, double r_star,
                                const AmbiguityConfig& ambiguity, const ScenarioMatrix& scen,
                                const SolverSettings& settings = {});

} // namespace mcvar
