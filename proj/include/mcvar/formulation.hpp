#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcvar/kernel.hpp"
#include "mcvar/program.hpp"
#include "mcvar/risk.hpp"
#include "mcvar/scenarios.hpp"

namespace mcvar {

/// Minimum-return requirement. The paper's prose fixes the target at twice
/// the per-period equal-weight in-sample mean return; its inline formula
/// omits the 1/(nT) normalization. Both readings are exposed, plus an
/// explicit numeric override.
struct ReturnTarget {
    enum class Mode { prose, printed, value };
    Mode mode = Mode::prose;
    double value = 0.0; // used when mode == value

    double resolve(const ScenarioMatrix& scen) const;
};

/// Kernel ambiguity data for the robust model: MMD radius plus the
/// factorized constants over the expansion set.
struct AmbiguityConfig {
    double alpha = 0.05;
    GramFactors factors;
    ExpansionSet expansion;
};

/// Full model parameterization shared by the nominal and robust builders.
struct ModelConfig {
    MCVaRSpec mcvar;
    Eigen::VectorXd lower_bounds; // per-asset l_i, or length-1 broadcast
    Eigen::VectorXd upper_bounds; // per-asset u_i, or length-1 broadcast
    std::size_t cardinality = 0;  // A
    ReturnTarget return_target;
    double gamma_chance = 0.1;     // chance tolerance Gamma
    double ellipsoid_scale = 0.072;
    std::vector<Eigen::MatrixXd> ellipsoid_matrices; // optional; 1 => broadcast, else T entries
    std::optional<AmbiguityConfig> ambiguity;

    double lower(Eigen::Index i) const;
    double upper(Eigen::Index i) const;
    void validate(Eigen::Index n_assets) const;
};

/// Solved portfolio: weights, selected support and achieved objective.
struct Portfolio {
    Eigen::VectorXd weights;
    std::vector<int> selected;              // indices of assets with y > 0.5
    std::vector<std::string> selected_ids;  // resolved names when available
    double objective_value = 0.0;
};

/// Index bookkeeping for the documented variable/row layout of the builders.
struct ProgramLayout {
    int n = 0, T = 0, m = 0;
    int w0 = 0, y0 = 0, c0 = 0, gamma0 = 0;
    int t0 = -1;                                     // ellipsoid auxiliaries
    int lambda = -1, omega = -1, beta1 = -1, beta2 = -1, phi0 = -1, big_r0 = -1;
    int cvar_row0 = 0;                               // first of m*T CVaR rows
    int return_row = -1;                             // hard return row, if present
    int chance_row = -1;                             // kernel scalar row
    int c_of(int j, int k) const { return c0 + k * T + j; }
};

/// Builds the nominal mixed-CVaR model (no ambiguity): minimize
/// sum_k theta_k (gamma_k + (1/delta_k) sum_j c_jk p_j) subject to the CVaR
/// linearization, budget, bound-coupling, cardinality and the hard return
/// requirement. No cones.
MixedConicProgram build_nom(const ScenarioMatrix& scen, const ModelConfig& cfg,
                            ProgramLayout* layout = nullptr);

/// Robustifies the CVaR rows of a nominal-shaped program in place under an
/// ellipsoidal support set: introduces one auxiliary t_j and one cone
/// t_j >= |P_j' w| per scenario and rewrites every CVaR row to
/// t_j - c_jk - gamma_k - sum_i r_ij w_i <= 0.
void ellipsoid_blocks(const ScenarioMatrix& scen, const ModelConfig& cfg,
                      MixedConicProgram& program, ProgramLayout& layout);

/// Builds the robust model: nominal skeleton without the hard return row,
/// ellipsoidal CVaR rows, and the kernel chance-constraint machinery
/// (scalar row, per-scenario dual rows, hinge rows, MMD cone).
MixedConicProgram build_rom_rkhs(const ScenarioMatrix& scen, const ModelConfig& cfg,
                                 ProgramLayout* layout = nullptr);

/// Reads the weight/selection blocks out of a solved variable vector,
/// snaps sub-1e-8 weights to zero and enforces the portfolio invariants.
Portfolio extract_portfolio(const std::vector<double>& solution,
                            const MixedConicProgram& program, const ModelConfig& cfg,
                            const std::vector<std::string>& asset_ids = {});

} // namespace mcvar
