#include "mcvar/kernel.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

namespace mcvar {

void ExpansionSet::validate() const {
    if (points.empty()) throw Error(Errc::empty_scenarios, "expansion set is empty");
    if (sample_count == 0 || sample_count > points.size())
        throw Error(Errc::invalid_spec, "sample_count must lie in [1, T]");
    const auto d = points.front().size();
    for (const auto& p : points)
        if (p.size() != d) throw Error(Errc::dim_mismatch, "expansion points differ in dimension");
}

double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const KernelSpec& spec) {
    if (x.size() != y.size())
        throw Error(Errc::dim_mismatch, "kernel arguments differ in dimension: " +
                                            std::to_string(x.size()) + " vs " +
                                            std::to_string(y.size()));
    if (!spec.bandwidth.has_value() || !(*spec.bandwidth > 0.0))
        throw Error(Errc::invalid_spec, "kernel bandwidth must be resolved and positive");
    const double sigma = *spec.bandwidth;
    return std::exp(-(x - y).squaredNorm() / (2.0 * sigma * sigma));
}

double median_heuristic(const std::vector<Eigen::VectorXd>& points) {
    if (points.size() < 2)
        throw Error(Errc::degenerate_points, "median heuristic needs at least 2 points");
    std::vector<double> dists;
    dists.reserve(points.size() * (points.size() - 1) / 2);
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            if (points[i].size() != points[j].size())
                throw Error(Errc::dim_mismatch, "points differ in dimension");
            dists.push_back((points[i] - points[j]).norm());
        }
    }
    std::sort(dists.begin(), dists.end());
    const std::size_t m = dists.size();
    const double median = (m % 2 == 1) ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
    if (!(median > 0.0))
        throw Error(Errc::degenerate_points, "median pairwise distance is zero");
    return median;
}

GramFactors build_gram_factors(const ExpansionSet& expansion, const KernelSpec& spec,
                               double jitter_start) {
    expansion.validate();
    if (!(jitter_start > 0.0))
        throw Error(Errc::invalid_spec, "jitter_start must be positive");

    KernelSpec resolved = spec;
    if (!resolved.bandwidth.has_value())
        resolved.bandwidth = median_heuristic(expansion.points);

    const auto T = static_cast<Eigen::Index>(expansion.size());
    const auto T0 = static_cast<Eigen::Index>(expansion.sample_count);

    Eigen::MatrixXd gram(T, T);
    for (Eigen::Index l = 0; l < T; ++l) {
        gram(l, l) = 1.0;
        for (Eigen::Index k = l + 1; k < T; ++k) {
            const double v = kernel_eval(expansion.points[l], expansion.points[k], resolved);
            gram(l, k) = v;
            gram(k, l) = v;
        }
    }

    GramFactors out;
    out.bandwidth = *resolved.bandwidth;
    out.M = gram.leftCols(T0);
    out.s_bar = gram.topLeftCorner(T0, T0).sum() / (double(T0) * double(T0));

    constexpr double kJitterMax = 1e-6;
    for (double jitter = jitter_start; jitter <= kJitterMax * (1.0 + 1e-12); jitter *= 10.0) {
        Eigen::LLT<Eigen::MatrixXd> llt(gram + jitter * Eigen::MatrixXd::Identity(T, T));
        if (llt.info() == Eigen::Success) {
            out.L = llt.matrixL();
            out.jitter_used = jitter;
            return out;
        }
    }
    throw Error(Errc::not_factorizable,
                "Gram matrix not factorizable up to jitter 1e-6 (T=" + std::to_string(T) + ")");
}

double mmd_sq(const Eigen::VectorXd& eta, const GramFactors& factors) {
    const auto T = factors.expansion_size();
    if (eta.size() != T)
        throw Error(Errc::dim_mismatch, "eta has length " + std::to_string(eta.size()) +
                                            ", expected " + std::to_string(T));
    double sum = 0.0;
    for (Eigen::Index j = 0; j < T; ++j) {
        if (eta[j] < -1e-12)
            throw Error(Errc::invalid_distribution, "eta has a negative entry");
        sum += eta[j];
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw Error(Errc::invalid_distribution, "eta sums to " + std::to_string(sum));

    const double T0 = double(factors.sample_size());
    const double quad = (factors.L.transpose() * eta).squaredNorm();
    const double cross = (eta.transpose() * factors.M).sum();
    const double value = quad - (2.0 / T0) * cross + factors.s_bar;
    return std::max(value, 0.0);
}

} // namespace mcvar
