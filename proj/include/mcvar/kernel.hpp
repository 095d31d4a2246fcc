#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mcvar/errors.hpp"

namespace mcvar {

/// Kernel family and length-scale. Bandwidth is either explicit or resolved
/// from the expansion points via the median heuristic.
struct KernelSpec {
    enum class Family { gaussian_rbf };
    Family family = Family::gaussian_rbf;
    std::optional<double> bandwidth; // empty => median heuristic
};

/// Points used to discretize the support of candidate distributions.
/// The first `sample_count` points are the empirical sample; any remaining
/// points are support vectors extending the expansion.
struct ExpansionSet {
    std::vector<Eigen::VectorXd> points; // T points in R^n
    std::size_t sample_count = 0;        // T0 <= T

    std::size_t size() const { return points.size(); }
    Eigen::Index dim() const { return points.empty() ? 0 : points.front().size(); }
    void validate() const;
};

/// Factorized kernel constants entering the conic formulation:
/// L lower-triangular with L L' ~= Gram (jitter on the diagonal),
/// M the T x T0 cross-kernel block, and s_bar the sample-block mean
/// (1/T0^2) sum K(r_l, r_k).
struct GramFactors {
    Eigen::MatrixXd L;       // T x T lower-triangular
    Eigen::MatrixXd M;       // T x T0
    double s_bar = 0.0;
    double jitter_used = 0.0;
    double bandwidth = 0.0;  // resolved length-scale

    Eigen::Index expansion_size() const { return L.rows(); }
    Eigen::Index sample_size() const { return M.cols(); }
};

/// Kernel evaluation; Gaussian RBF: exp(-|x-y|^2 / (2 sigma^2)).
double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const KernelSpec& spec);

/// Median of all pairwise Euclidean distances. Deterministic; throws
/// DegeneratePoints when the median distance is zero.
double median_heuristic(const std::vector<Eigen::VectorXd>& points);

/// Builds the Gram factorization with jitter escalation: the Cholesky of
/// Gram + jitter*I is attempted at jitter_start and the jitter grows by 10x
/// up to 1e-6 until the factorization succeeds.
GramFactors build_gram_factors(const ExpansionSet& expansion, const KernelSpec& spec,
                               double jitter_start = 1e-10);

/// Empirical squared maximum mean discrepancy of the distribution eta over
/// the expansion points against the uniform empirical sample:
/// |L' eta|^2 - (2/T0) eta' M 1 + s_bar, clipped at zero.
double mmd_sq(const Eigen::VectorXd& eta, const GramFactors& factors);

} // namespace mcvar
