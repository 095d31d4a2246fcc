#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace mcvar {

/// Conic linear program in standard form:
///
///     minimize    c'x
///     subject to  A x = b
///                 G x + s = h,  s in K
///
/// where K is a product of a nonnegative orthant of size `n_nonneg`
/// (leading rows of G) followed by second-order cones. Each cone block of
/// dimension d occupies d consecutive rows of G; the first row of a block is
/// the cone scalar (s0 >= |s_1:d-1|).
struct ConeLP {
    Eigen::SparseMatrix<double> A; // p x n
    Eigen::SparseMatrix<double> G; // m x n
    Eigen::VectorXd c, b, h;
    int n_nonneg = 0;
    std::vector<int> soc_dims;
};

struct ConeSettings {
    double feastol = 1e-8;
    double abstol = 1e-8;
    double reltol = 1e-8;
    double feastol_inacc = 1e-4;
    double abstol_inacc = 5e-5;
    double reltol_inacc = 5e-5;
    int max_iters = 100;
    int nitref = 6;              // iterative refinement steps per KKT solve
    double linsysacc = 1e-14;    // refinement target relative to rhs
    double irerrfact = 30.0;     // stop refining when error shrinks less than this
    double deltastat = 1e-8;     // static KKT regularization
    int equil_iters = 3;         // Ruiz equilibration sweeps
    double stepmin = 1e-6;
    double stepmax = 0.999;
    double step_scale = 0.99;    // back-off applied to the combined step
    double sigmamin = 1e-4;
    double sigmamax = 1.0;
    double safeguard = 500.0;    // restore best iterate if pres blows up by this factor
};

enum class ConeStatus {
    optimal,
    close_to_optimal,
    primal_infeasible,
    close_to_primal_infeasible,
    dual_infeasible,
    close_to_dual_infeasible,
    max_iters,
    numerical_failure,
};

struct ConeSolution {
    ConeStatus status = ConeStatus::numerical_failure;
    Eigen::VectorXd x, y, z, s;
    double pcost = 0.0;
    double dcost = 0.0;
    double gap = 0.0;     // s'z
    double relgap = 0.0;
    double pres = 0.0;
    double dres = 0.0;
    int iters = 0;

    bool usable() const {
        return status == ConeStatus::optimal || status == ConeStatus::close_to_optimal;
    }
    bool infeasible() const {
        return status == ConeStatus::primal_infeasible ||
               status == ConeStatus::close_to_primal_infeasible;
    }
};

/// Interior-point solve (homogeneous self-dual embedding with Nesterov-Todd
/// scaling and a Mehrotra predictor-corrector). Deterministic for identical
/// inputs and settings.
ConeSolution solve_conelp(const ConeLP& problem, const ConeSettings& settings = {});

} // namespace mcvar
