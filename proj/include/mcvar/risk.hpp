#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mcvar/errors.hpp"

namespace mcvar {

/// Mixed-CVaR specification: confidence levels with their weights.
/// Levels are held strictly decreasing; weights are positive and sum to one.
struct MCVaRSpec {
    std::vector<double> levels;  // delta_k in (0,1), strictly decreasing
    std::vector<double> weights; // theta_k in (0,1), sum == 1

    std::size_t size() const { return levels.size(); }

    /// Builds a spec from (level, weight) pairs in any order; pairs are
    /// sorted by decreasing level and validated.
    static MCVaRSpec from_pairs(std::vector<std::pair<double, double>> pairs);

    /// Throws InvalidSpec if any invariant is violated.
    void validate() const;
};

// All risk functions operate on losses (loss = -portfolio return).

/// Empirical value-at-risk: inf{ l : P(L > l) <= delta } over the discrete
/// loss distribution. The convention matters for atoms; this is the smallest
/// loss level whose exceedance probability is within the tolerance.
double empirical_var(const Eigen::VectorXd& losses, const Eigen::VectorXd& probs, double delta);

/// Empirical conditional value-at-risk at level delta, i.e. the
/// Rockafellar-Uryasev optimum min_g g + E(L - g)^+ / delta. Boundary atoms
/// are split fractionally so the value matches the LP formulation exactly.
double empirical_cvar(const Eigen::VectorXd& losses, const Eigen::VectorXd& probs, double delta);

/// Weighted combination sum_k theta_k CVaR_{delta_k}(L).
double mcvar(const Eigen::VectorXd& losses, const Eigen::VectorXd& probs, const MCVaRSpec& spec);

} // namespace mcvar
