#include "mcvar/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mcvar {

namespace {

constexpr double kProbTol = 1e-12;

void validate_distribution(const Eigen::VectorXd& losses, const Eigen::VectorXd& probs) {
    if (losses.size() == 0) throw Error(Errc::empty_scenarios, "empty loss vector");
    if (losses.size() != probs.size())
        throw Error(Errc::dim_mismatch, "losses and probs differ in length");
    double sum = 0.0;
    for (Eigen::Index j = 0; j < probs.size(); ++j) {
        if (probs[j] < -kProbTol)
            throw Error(Errc::invalid_distribution, "negative probability");
        sum += probs[j];
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw Error(Errc::invalid_distribution, "probabilities sum to " + std::to_string(sum));
}

void validate_level(double delta) {
    if (!(delta > 0.0) || !(delta < 1.0))
        throw Error(Errc::invalid_level, "level must lie in (0,1), got " + std::to_string(delta));
}

// Indices sorted by descending loss.
std::vector<Eigen::Index> descending_order(const Eigen::VectorXd& losses) {
    std::vector<Eigen::Index> idx(losses.size());
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return losses[a] > losses[b]; });
    return idx;
}

} // namespace

MCVaRSpec MCVaRSpec::from_pairs(std::vector<std::pair<double, double>> pairs) {
    std::sort(pairs.begin(), pairs.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    MCVaRSpec spec;
    for (const auto& [level, weight] : pairs) {
        spec.levels.push_back(level);
        spec.weights.push_back(weight);
    }
    spec.validate();
    return spec;
}

void MCVaRSpec::validate() const {
    if (levels.empty() || levels.size() != weights.size())
        throw Error(Errc::invalid_spec, "levels/weights must be non-empty and equal-length");
    double sum = 0.0;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        if (!(levels[k] > 0.0) || !(levels[k] < 1.0))
            throw Error(Errc::invalid_spec, "level out of (0,1): " + std::to_string(levels[k]));
        if (!(weights[k] > 0.0) || !(weights[k] < 1.0 + kProbTol))
            throw Error(Errc::invalid_spec, "weight out of (0,1): " + std::to_string(weights[k]));
        if (k > 0 && !(levels[k] < levels[k - 1]))
            throw Error(Errc::invalid_spec, "levels must be strictly decreasing");
        sum += weights[k];
    }
    if (std::abs(sum - 1.0) > kProbTol)
        throw Error(Errc::invalid_spec, "weights sum to " + std::to_string(sum) + ", expected 1");
}

double empirical_var(const Eigen::VectorXd& losses, const Eigen::VectorXd& probs, double delta) {
    validate_distribution(losses, probs);
    validate_level(delta);

    // Walk atoms from the largest loss down, tracking P(L > candidate).
    // VaR is the smallest atom value whose exceedance stays within delta.
    const auto idx = descending_order(losses);
    double tail = 0.0; // P(L > losses[idx[i]]) before adding atom i
    for (std::size_t i = 0; i < idx.size(); ++i) {
        double v = losses[idx[i]];
        // accumulate all atoms strictly above the next candidate value
        double mass = probs[idx[i]];
        std::size_t k = i + 1;
        while (k < idx.size() && losses[idx[k]] == v) mass += probs[idx[k++]];
        if (k == idx.size()) return v; // smallest atom: nothing below can qualify
        if (tail + mass > delta) return v;
        tail += mass;
        i = k - 1;
    }
    return losses[idx.back()];
}

double empirical_cvar(const Eigen::VectorXd& losses, const Eigen::VectorXd& probs, double delta) {
    validate_distribution(losses, probs);
    validate_level(delta);

    // Average the worst delta probability mass, splitting the boundary atom.
    const auto idx = descending_order(losses);
    double remaining = delta;
    double acc = 0.0;
    for (auto i : idx) {
        if (remaining <= 0.0) break;
        const double take = std::min(probs[i], remaining);
        acc += take * losses[i];
        remaining -= take;
    }
    if (remaining > kProbTol) {
        // delta exceeds the total mass only through rounding; renormalize
        return acc / (delta - remaining);
    }
    return acc / delta;
}

double mcvar(const Eigen::VectorXd& losses, const Eigen::VectorXd& probs, const MCVaRSpec& spec) {
    spec.validate();
    double value = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k)
        value += spec.weights[k] * empirical_cvar(losses, probs, spec.levels[k]);
    return value;
}

} // namespace mcvar
