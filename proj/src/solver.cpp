#include "mcvar/solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <queue>
#include <set>

namespace mcvar {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lowers a MixedConicProgram (plus bound overlay) to conelp standard form
// and remembers how to read the solution back.
struct Lowering {
    ConeLP cone;
    int n_vars = 0;
};

Lowering lower_program(const MixedConicProgram& p, const BoundOverlay& overlay,
                       bool relax_binaries) {
    p.validate();
    const int n = p.n_vars();

    // effective bounds: overlay wins, otherwise binaries get [0,1]
    std::vector<double> lb(static_cast<std::size_t>(n), -kInf);
    std::vector<double> ub(static_cast<std::size_t>(n), kInf);
    if (relax_binaries) {
        for (int i : p.binary_idx) {
            lb[static_cast<std::size_t>(i)] = 0.0;
            ub[static_cast<std::size_t>(i)] = 1.0;
        }
    }
    for (const auto& [var, range] : overlay) {
        if (var < 0 || var >= n) throw Error(Errc::out_of_range, "overlay variable out of range");
        lb[static_cast<std::size_t>(var)] = range.first;
        ub[static_cast<std::size_t>(var)] = range.second;
    }

    std::vector<Eigen::Triplet<double>> at, gt;
    std::vector<double> bvec, hvec;
    int arow = 0, grow = 0;

    auto push_eq = [&](const LinearExpr& e, double rhs) {
        for (const auto& [idx, v] : e.coeffs) at.emplace_back(arow, idx, v);
        bvec.push_back(rhs - e.offset);
        ++arow;
    };
    auto push_le = [&](const LinearExpr& e, double rhs) {
        for (const auto& [idx, v] : e.coeffs) gt.emplace_back(grow, idx, v);
        hvec.push_back(rhs - e.offset);
        ++grow;
    };

    for (const auto& r : p.eq_rows) push_eq(r.expr, r.rhs);
    // pinned variables become equalities; they are numerically kinder than
    // two opposing inequalities
    for (int i = 0; i < n; ++i) {
        if (lb[static_cast<std::size_t>(i)] == ub[static_cast<std::size_t>(i)] &&
            std::isfinite(lb[static_cast<std::size_t>(i)])) {
            LinearExpr e;
            e.add(i, 1.0);
            push_eq(e, lb[static_cast<std::size_t>(i)]);
        }
    }

    for (const auto& r : p.ineq_rows) push_le(r.expr, r.rhs);
    for (int i = 0; i < n; ++i) {
        const double lo = lb[static_cast<std::size_t>(i)];
        const double hi = ub[static_cast<std::size_t>(i)];
        if (lo == hi) continue; // already an equality
        if (std::isfinite(hi)) {
            LinearExpr e;
            e.add(i, 1.0);
            push_le(e, hi);
        }
        if (std::isfinite(lo)) {
            LinearExpr e;
            e.add(i, -1.0);
            push_le(e, -lo);
        }
    }
    const int n_nonneg = grow;

    std::vector<int> dims;
    for (const auto& block : p.soc_blocks) {
        // tail row first, then the head rows
        LinearExpr tail = block.tail;
        for (auto& [idx, v] : tail.coeffs) gt.emplace_back(grow, idx, -v);
        hvec.push_back(tail.offset);
        ++grow;
        for (const auto& hrow : block.head) {
            for (const auto& [idx, v] : hrow.coeffs) gt.emplace_back(grow, idx, -v);
            hvec.push_back(hrow.offset);
            ++grow;
        }
        dims.push_back(int(block.head.size()) + 1);
    }

    Lowering out;
    out.n_vars = n;
    out.cone.A.resize(arow, n);
    out.cone.A.setFromTriplets(at.begin(), at.end());
    out.cone.G.resize(grow, n);
    out.cone.G.setFromTriplets(gt.begin(), gt.end());
    out.cone.b = Eigen::Map<Eigen::VectorXd>(bvec.data(), arow);
    out.cone.h = Eigen::Map<Eigen::VectorXd>(hvec.data(), grow);
    out.cone.c = Eigen::Map<const Eigen::VectorXd>(p.objective.data(), n);
    out.cone.n_nonneg = n_nonneg;
    out.cone.soc_dims = dims;
    return out;
}

Solution to_solution(const ConeSolution& cs, const MixedConicProgram& p) {
    Solution out;
    out.cone_status = cs.status;
    out.kkt_residuals = {cs.pres, cs.dres, cs.gap};
    switch (cs.status) {
    case ConeStatus::optimal:
        out.status = SolveStatus::optimal;
        break;
    case ConeStatus::primal_infeasible:
    case ConeStatus::close_to_primal_infeasible:
        out.status = SolveStatus::infeasible;
        break;
    case ConeStatus::max_iters:
        out.status = SolveStatus::iter_limit;
        break;
    default:
        out.status = SolveStatus::numerical_failure;
        break;
    }
    if (cs.status == ConeStatus::optimal || cs.status == ConeStatus::close_to_optimal ||
        cs.status == ConeStatus::max_iters) {
        out.primal.assign(cs.x.data(), cs.x.data() + cs.x.size());
        out.objective = cs.pcost + p.objective_offset;
        out.bound = cs.dcost + p.objective_offset;
    }
    return out;
}

bool bound_usable(const ConeSolution& cs) { return cs.usable(); }

} // namespace

const char* to_string(SolveStatus status) noexcept {
    switch (status) {
    case SolveStatus::optimal: return "Optimal";
    case SolveStatus::infeasible: return "Infeasible";
    case SolveStatus::iter_limit: return "IterLimit";
    case SolveStatus::numerical_failure: return "NumericalFailure";
    }
    return "Unknown";
}

Solution solve_continuous(const MixedConicProgram& program, const SolverSettings& settings,
                          const BoundOverlay& overlay) {
    Lowering low = lower_program(program, overlay, /*relax_binaries=*/true);
    ConeSolution cs = solve_conelp(low.cone, settings.cone);
    Solution sol = to_solution(cs, program);
    sol.nodes = 1;
    return sol;
}

namespace {

struct BnBNode {
    BoundOverlay fixings; // binary fixings only; weight propagation applied on solve
    double bound = -kInf;
    long id = 0;
    int depth = 0;
};

struct NodeOrder {
    bool operator()(const BnBNode& a, const BnBNode& b) const {
        if (a.bound != b.bound) return a.bound > b.bound; // min-heap on bound
        return a.id > b.id;                               // FIFO tie-break
    }
};

// Applies the semicontinuous links: a fixed binary pins its weight range.
BoundOverlay propagate(const MixedConicProgram& p, const BoundOverlay& fixings) {
    BoundOverlay full = fixings;
    for (const auto& link : p.links) {
        auto it = fixings.find(link.binary_var);
        if (it == fixings.end()) continue;
        if (it->second.second <= 0.5)
            full[link.weight_var] = {0.0, 0.0};
        else
            full[link.weight_var] = {link.lower, link.upper};
    }
    return full;
}

bool support_lex_less(const std::vector<int>& a, const std::vector<int>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

std::vector<int> support_of(const MixedConicProgram& p, const std::vector<double>& primal,
                            double threshold = 0.5) {
    std::vector<int> s;
    for (int bi : p.binary_idx)
        if (primal[static_cast<std::size_t>(bi)] > threshold) s.push_back(bi);
    return s;
}

// Cardinality A implied by the program: the equality row over exactly the
// binary variables, if present.
double cardinality_rhs(const MixedConicProgram& p) {
    std::set<int> bins(p.binary_idx.begin(), p.binary_idx.end());
    for (const auto& row : p.eq_rows) {
        if (row.expr.coeffs.size() != bins.size()) continue;
        bool all = true;
        for (const auto& [idx, v] : row.expr.coeffs)
            if (!bins.count(idx) || v != 1.0) { all = false; break; }
        if (all) return row.rhs;
    }
    return -1.0;
}

} // namespace

Solution branch_and_bound(const MixedConicProgram& program, const BnBConfig& config) {
    if (program.binary_idx.empty()) return solve_continuous(program, config.solver);
    if (!(config.rel_gap_tol > 0.0) || config.max_nodes <= 0)
        throw Error(Errc::invalid_spec, "BnB tolerances must be positive");

    const double A = cardinality_rhs(program);
    const long n_bin = static_cast<long>(program.binary_idx.size());

    Solution incumbent;
    incumbent.status = SolveStatus::infeasible;
    std::vector<int> incumbent_support;
    long node_count = 0;

    std::priority_queue<BnBNode, std::vector<BnBNode>, NodeOrder> open;
    long next_id = 0;
    open.push(BnBNode{{}, -kInf, next_id++, 0});

    auto incumbent_obj = [&]() {
        return incumbent.status == SolveStatus::optimal ? incumbent.objective : kInf;
    };

    while (!open.empty()) {
        if (node_count >= config.max_nodes) {
            incumbent.nodes = node_count;
            incumbent.bound = open.top().bound;
            incumbent.mip_gap = incumbent_obj() - incumbent.bound;
            incumbent.status = SolveStatus::iter_limit;
            return incumbent;
        }
        BnBNode node = open.top();
        open.pop();

        // bound-based fathom against the current incumbent
        if (node.bound >= incumbent_obj() - 1e-9) continue;
        // documented termination: with best-bound ordering, once the top
        // node is within rel_gap_tol of the incumbent every open node is
        if (incumbent.status == SolveStatus::optimal && node.bound > -kInf &&
            incumbent_obj() - node.bound <=
                config.rel_gap_tol * std::max(1.0, std::abs(incumbent_obj()))) {
            incumbent.nodes = node_count;
            incumbent.bound = node.bound;
            incumbent.mip_gap = incumbent_obj() - node.bound;
            for (int bi : program.binary_idx) {
                double& yv = incumbent.primal[static_cast<std::size_t>(bi)];
                yv = yv > 0.5 ? 1.0 : 0.0;
            }
            return incumbent;
        }

        // cardinality pre-propagation
        long fixed1 = 0, fixed0 = 0;
        for (const auto& [var, range] : node.fixings) {
            if (range.second <= 0.5) ++fixed0;
            else ++fixed1;
        }
        const long free_bins = n_bin - fixed0 - fixed1;
        if (A >= 0.0) {
            if (double(fixed1) > A + 1e-9 || double(fixed1 + free_bins) < A - 1e-9) continue;
            if (std::abs(double(fixed1) - A) < 1e-9 && free_bins > 0) {
                for (int bi : program.binary_idx)
                    if (!node.fixings.count(bi)) node.fixings[bi] = {0.0, 0.0};
            } else if (std::abs(double(fixed1 + free_bins) - A) < 1e-9 && free_bins > 0) {
                for (int bi : program.binary_idx)
                    if (!node.fixings.count(bi)) node.fixings[bi] = {1.0, 1.0};
            }
        }
        const bool all_fixed =
            std::all_of(program.binary_idx.begin(), program.binary_idx.end(),
                        [&](int bi) { return node.fixings.count(bi) > 0; });

        Lowering low = lower_program(program, propagate(program, node.fixings), true);
        ConeSolution cs = solve_conelp(low.cone, config.solver.cone);
        ++node_count;

        if (config.trace) {
            *config.trace << "node " << node.id << " depth " << node.depth << " bound ";
            if (bound_usable(cs)) *config.trace << cs.dcost + program.objective_offset;
            else *config.trace << "-";
            *config.trace << " incumbent ";
            if (incumbent.status == SolveStatus::optimal) *config.trace << incumbent.objective;
            else *config.trace << "-";
            *config.trace << "\n";
        }

        if (cs.infeasible()) continue;
        if (!bound_usable(cs)) {
            // cannot trust the relaxation; keep searching below unless the
            // node is already fully fixed
            if (all_fixed) continue;
            int branch_var = -1;
            for (int bi : program.binary_idx)
                if (!node.fixings.count(bi)) { branch_var = bi; break; }
            for (double val : {1.0, 0.0}) {
                BnBNode child = node;
                child.fixings[branch_var] = {val, val};
                child.id = next_id++;
                child.depth = node.depth + 1;
                open.push(child);
            }
            continue;
        }

        const double node_bound = cs.dcost + program.objective_offset;
        if (node_bound >= incumbent_obj() - 1e-9) continue;

        std::vector<double> primal(cs.x.data(), cs.x.data() + cs.x.size());

        // most fractional free binary; ties to the larger linked weight,
        // then to the smaller index
        int branch_var = -1;
        double best_score = -kInf;
        double best_weight = -kInf;
        auto weight_of = [&](int bi) {
            for (const auto& l : program.links)
                if (l.binary_var == bi) return primal[static_cast<std::size_t>(l.weight_var)];
            return 0.0;
        };
        for (int bi : program.binary_idx) {
            if (node.fixings.count(bi)) continue;
            const double y = primal[static_cast<std::size_t>(bi)];
            const double frac = std::min(y, 1.0 - y);
            if (frac <= config.int_tol) continue;
            const double score =
                config.branching == BnBConfig::Branching::max_weight ? weight_of(bi) : frac;
            const double w = weight_of(bi);
            if (score > best_score + 1e-9 ||
                (score > best_score - 1e-9 && w > best_weight + 1e-12)) {
                branch_var = bi;
                best_score = score;
                best_weight = w;
            }
        }

        if (branch_var < 0) {
            // integral relaxation: polish by solving with the support fixed
            // so the incumbent value is exactly the support value
            Solution cand;
            std::vector<int> support = support_of(program, primal);
            if (all_fixed) {
                cand = to_solution(cs, program);
                cand.status = SolveStatus::optimal;
            } else {
                BoundOverlay polish;
                for (int bi : program.binary_idx) {
                    const bool in =
                        std::find(support.begin(), support.end(), bi) != support.end();
                    polish[bi] = in ? std::pair<double, double>{1.0, 1.0}
                                    : std::pair<double, double>{0.0, 0.0};
                }
                Lowering plow = lower_program(program, propagate(program, polish), true);
                ConeSolution pcs = solve_conelp(plow.cone, config.solver.cone);
                if (!pcs.usable()) continue;
                cand = to_solution(pcs, program);
                cand.status = SolveStatus::optimal;
            }
            bool accept = incumbent.status != SolveStatus::optimal;
            if (!accept && cand.objective < incumbent_obj() - config.tie_tol) accept = true;
            if (!accept && cand.objective < incumbent_obj() + config.tie_tol &&
                support_lex_less(support, incumbent_support))
                accept = true;
            if (accept) {
                incumbent = cand;
                incumbent_support = support;
            }
            continue;
        }

        for (double val : {1.0, 0.0}) {
            BnBNode child;
            child.fixings = node.fixings;
            child.fixings[branch_var] = {val, val};
            child.bound = node_bound;
            child.id = next_id++;
            child.depth = node.depth + 1;
            open.push(child);
        }
    }

    incumbent.nodes = node_count;
    if (incumbent.status == SolveStatus::optimal) {
        incumbent.bound = incumbent.objective;
        incumbent.mip_gap = 0.0;
        // snap binaries exactly
        for (int bi : program.binary_idx) {
            double& y = incumbent.primal[static_cast<std::size_t>(bi)];
            y = y > 0.5 ? 1.0 : 0.0;
        }
    }
    return incumbent;
}

Solution enumerate_exact(const MixedConicProgram& program, std::size_t A,
                         const SolverSettings& settings) {
    const std::size_t n = program.binary_idx.size();
    if (n > 20)
        throw Error(Errc::too_large, "enumerate_exact guard: " + std::to_string(n) +
                                         " binaries exceed the limit of 20");
    if (A > n) {
        Solution out;
        out.status = SolveStatus::infeasible;
        return out;
    }

    Solution best;
    best.status = SolveStatus::infeasible;
    long solves = 0;
    // ties go to the first (lexicographically smallest) support seen
    constexpr double tie_tol = 1e-7;

    // lexicographic combinations over the binary indices
    std::vector<std::size_t> comb(A);
    for (std::size_t i = 0; i < A; ++i) comb[i] = i;
    bool done = A == 0;
    while (!done) {
        BoundOverlay fix;
        for (std::size_t i = 0, c = 0; i < n; ++i) {
            const bool in = c < A && comb[c] == i;
            if (in) ++c;
            fix[program.binary_idx[i]] = in ? std::pair<double, double>{1.0, 1.0}
                                            : std::pair<double, double>{0.0, 0.0};
        }
        Lowering low = lower_program(program, propagate(program, fix), true);
        ConeSolution cs = solve_conelp(low.cone, settings.cone);
        ++solves;
        if (cs.usable()) {
            Solution cand = to_solution(cs, program);
            cand.status = SolveStatus::optimal;
            if (best.status != SolveStatus::optimal ||
                cand.objective < best.objective - tie_tol) {
                best = cand;
            }
        }

        // advance combination
        std::size_t k = A;
        while (k > 0 && comb[k - 1] == n - A + (k - 1)) --k;
        if (k == 0) done = true;
        else {
            ++comb[k - 1];
            for (std::size_t j = k; j < A; ++j) comb[j] = comb[j - 1] + 1;
        }
    }

    best.nodes = solves;
    if (best.status == SolveStatus::optimal) {
        best.bound = best.objective;
        for (int bi : program.binary_idx) {
            double& y = best.primal[static_cast<std::size_t>(bi)];
            y = y > 0.5 ? 1.0 : 0.0;
        }
    }
    return best;
}

KernelChanceConstants kernel_chance_constants(const GramFactors& factors, double alpha) {
    if (alpha < 0.0) throw Error(Errc::invalid_radius, "alpha must be >= 0");
    KernelChanceConstants out;
    const double a2 = alpha * alpha;
    out.d1 = 0.5 * (1.0 - a2 + factors.s_bar);
    out.d2 = 0.5 * (factors.s_bar - a2 - 1.0);
    out.q = factors.M.rowwise().sum() / double(factors.sample_size());
    return out;
}

Eigen::VectorXd shortfall_hinge(const Eigen::VectorXd& weights, double lambda, double r_star,
                                const ExpansionSet& expansion) {
    expansion.validate();
    if (expansion.dim() != weights.size())
        throw Error(Errc::dim_mismatch, "weights do not match expansion dimension");
    Eigen::VectorXd out(static_cast<Eigen::Index>(expansion.size()));
    for (std::size_t j = 0; j < expansion.size(); ++j)
        out[static_cast<Eigen::Index>(j)] =
            std::max(0.0, r_star - expansion.points[j].dot(weights) - lambda);
    return out;
}

namespace {

void check_ambiguity(const AmbiguityConfig& amb, const ScenarioMatrix& scen) {
    if (amb.alpha < 0.0) throw Error(Errc::invalid_radius, "alpha must be >= 0");
    if (static_cast<Eigen::Index>(amb.expansion.size()) != scen.n_periods())
        throw Error(Errc::dim_mismatch, "expansion size does not match scenario count");
    if (amb.factors.expansion_size() != static_cast<Eigen::Index>(amb.expansion.size()))
        throw Error(Errc::dim_mismatch, "Gram factors do not match expansion set");
}

SolveStatus from_cone(ConeStatus s) {
    switch (s) {
    case ConeStatus::optimal: return SolveStatus::optimal;
    case ConeStatus::close_to_optimal: return SolveStatus::optimal;
    case ConeStatus::primal_infeasible:
    case ConeStatus::close_to_primal_infeasible: return SolveStatus::infeasible;
    case ConeStatus::max_iters: return SolveStatus::iter_limit;
    default: return SolveStatus::numerical_failure;
    }
}

} // namespace

WorstCaseResult worst_case_primal(const Eigen::VectorXd& weights, double lambda, double r_star,
                                  const AmbiguityConfig& ambiguity, const ScenarioMatrix& scen,
                                  const SolverSettings& settings) {
    check_ambiguity(ambiguity, scen);
    const auto T = static_cast<int>(ambiguity.expansion.size());
    const Eigen::VectorXd hinge = shortfall_hinge(weights, lambda, r_star, ambiguity.expansion);
    const KernelChanceConstants kc = kernel_chance_constants(ambiguity.factors, ambiguity.alpha);

    // max hinge' eta  s.t.  1' eta = 1, eta >= 0,
    //   (q' eta - d2, L' eta, q' eta - d1) in Q^{T+2}
    ConeLP lp;
    lp.c = -hinge;
    std::vector<Eigen::Triplet<double>> at, gt;
    lp.b = Eigen::VectorXd::Ones(1);
    for (int j = 0; j < T; ++j) at.emplace_back(0, j, 1.0);
    lp.A.resize(1, T);
    lp.A.setFromTriplets(at.begin(), at.end());

    const int m = T + (T + 2);
    lp.h = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < T; ++j) gt.emplace_back(j, j, -1.0); // eta >= 0
    int row = T;
    for (int j = 0; j < T; ++j) gt.emplace_back(row, j, -kc.q[j]); // tail
    lp.h[row] = -kc.d2;
    ++row;
    const Eigen::MatrixXd Lt = ambiguity.factors.L.transpose();
    for (int r = 0; r < T; ++r, ++row)
        for (int j = r; j < T; ++j) // upper-triangular L'
            if (Lt(r, j) != 0.0) gt.emplace_back(row, j, -Lt(r, j));
    for (int j = 0; j < T; ++j) gt.emplace_back(row, j, -kc.q[j]);
    lp.h[row] = -kc.d1;
    ++row;
    lp.G.resize(m, T);
    lp.G.setFromTriplets(gt.begin(), gt.end());
    lp.n_nonneg = T;
    lp.soc_dims = {T + 2};

    ConeSolution cs = solve_conelp(lp, settings.cone);
    WorstCaseResult out;
    out.status = from_cone(cs.status);
    out.value = -cs.pcost;
    out.variables = cs.x;
    return out;
}

WorstCaseResult worst_case_dual(const Eigen::VectorXd& weights, double lambda, double r_star,
                                const AmbiguityConfig& ambiguity, const ScenarioMatrix& scen,
                                const SolverSettings& settings) {
    check_ambiguity(ambiguity, scen);
    const auto T = static_cast<int>(ambiguity.expansion.size());
    const Eigen::VectorXd hinge = shortfall_hinge(weights, lambda, r_star, ambiguity.expansion);
    const KernelChanceConstants kc = kernel_chance_constants(ambiguity.factors, ambiguity.alpha);

    // variables: omega, beta1, beta2, phi[0..T-1]
    const int n = 3 + T;
    ConeLP lp;
    lp.c = Eigen::VectorXd::Zero(n);
    lp.c[0] = -1.0;
    lp.c[1] = -kc.d1;
    lp.c[2] = -kc.d2;
    lp.A.resize(0, n);
    lp.b.resize(0);

    std::vector<Eigen::Triplet<double>> gt;
    const int m = T + (T + 2);
    lp.h = Eigen::VectorXd::Zero(m);
    // omega + (L phi)_j + (beta1 + beta2) q_j <= -hinge_j
    for (int j = 0; j < T; ++j) {
        gt.emplace_back(j, 0, 1.0);
        gt.emplace_back(j, 1, kc.q[j]);
        gt.emplace_back(j, 2, kc.q[j]);
        for (int l = 0; l <= j; ++l) {
            const double v = ambiguity.factors.L(j, l);
            if (v != 0.0) gt.emplace_back(j, 3 + l, v);
        }
        lp.h[j] = -hinge[j];
    }
    int row = T;
    gt.emplace_back(row, 2, -1.0); // tail: beta2
    ++row;
    for (int l = 0; l < T; ++l, ++row) gt.emplace_back(row, 3 + l, -1.0); // phi
    gt.emplace_back(row, 1, -1.0);                                       // beta1
    ++row;
    lp.G.resize(m, n);
    lp.G.setFromTriplets(gt.begin(), gt.end());
    lp.n_nonneg = T;
    lp.soc_dims = {T + 2};

    ConeSolution cs = solve_conelp(lp, settings.cone);
    WorstCaseResult out;
    out.status = from_cone(cs.status);
    out.value = cs.pcost; // dual is itself a minimization
    out.variables = cs.x;
    return out;
}

} // namespace mcvar
