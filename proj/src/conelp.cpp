#include "mcvar/conelp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include <Eigen/SparseCholesky>

#include "mcvar/errors.hpp"

namespace mcvar {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Iterate {
    Eigen::VectorXd x, y, z, s;
    double tau = 1.0, kap = 1.0;
    // statistics of this iterate
    double pcost = 0, dcost = 0, gap = 0, relgap = kInf, pres = kInf, dres = kInf;
    double pinfres = kInf, dinfres = kInf, mu = kInf, kapovert = kInf;
    double cx = 0, by = 0, hz = 0;
    int iter = 0;
    bool has_relgap = false, has_pinfres = false, has_dinfres = false;

    // Mirrors the usual "keep the best iterate" heuristic of HSD solvers.
    bool better_than(const Iterate& o) const {
        if (has_pinfres && kapovert > 1.0)
            return gap > 0 && o.gap > 0 && gap < o.gap && pinfres > 0 &&
                   (!o.has_pinfres || pinfres < o.pres) && mu > 0 && mu < o.mu;
        return gap > 0 && o.gap > 0 && gap < o.gap && pres > 0 && pres < o.pres && dres > 0 &&
               dres < o.dres && kapovert > 0 && kapovert < o.kapovert && mu > 0 && mu < o.mu;
    }
};

class HSDSolver {
  public:
    HSDSolver(const ConeLP& prob, const ConeSettings& cfg) : cfg_(cfg) {
        A_ = prob.A;
        G_ = prob.G;
        c_ = prob.c;
        b_ = prob.b;
        h_ = prob.h;
        nlp_ = prob.n_nonneg;
        dims_ = prob.soc_dims;
        n_ = int(c_.size());
        p_ = int(b_.size());
        m_ = int(h_.size());
        int cone_rows = nlp_;
        for (int d : dims_) {
            if (d < 2) throw Error(Errc::invalid_spec, "second-order cone must have dim >= 2");
            cone_rows += d;
        }
        if (cone_rows != m_) throw Error(Errc::dim_mismatch, "cone dims do not cover G rows");
        if (A_.rows() != p_ || (p_ > 0 && A_.cols() != n_))
            throw Error(Errc::dim_mismatch, "A dimensions inconsistent");
        if (G_.rows() != m_ || G_.cols() != n_)
            throw Error(Errc::dim_mismatch, "G dimensions inconsistent");
        if (m_ == 0) throw Error(Errc::invalid_spec, "conic solver needs at least one cone row");
        deg_ = nlp_ + int(dims_.size());

        equilibrate();
        At_ = A_.transpose();
        Gt_ = G_.transpose();

        lp_w2_.resize(nlp_);
        soc_eta2_.resize(dims_.size());
        soc_wbar_.resize(dims_.size());
        setup_kkt();
    }

    ConeSolution run();

  private:
    // --- data ---
    ConeSettings cfg_;
    Eigen::SparseMatrix<double> A_, G_, At_, Gt_;
    Eigen::VectorXd c_, b_, h_;
    Eigen::VectorXd xe_, ae_, ge_; // equilibration scalings
    int n_ = 0, p_ = 0, m_ = 0, nlp_ = 0, deg_ = 0;
    std::vector<int> dims_;

    // NT scaling state
    Eigen::VectorXd lp_w2_;                 // s_i / z_i on the orthant
    std::vector<double> soc_eta2_;
    std::vector<Eigen::VectorXd> soc_wbar_; // normalized scaling points
    bool identity_scaling_ = true;

    // KKT system
    Eigen::SparseMatrix<double> K_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt_;
    std::vector<double*> scaling_ptrs_; // (3,3) block entries in fill order
    bool analyzed_ = false;

    // residual bookkeeping
    Eigen::VectorXd rx_, ry_, rz_;
    double rt_ = 0, hresx_ = 0, hresy_ = 0, hresz_ = 0;
    double resx0_ = 1, resy0_ = 1, resz0_ = 1;
    double nx_ = 0, ny_ = 0, nz_ = 0, ns_ = 0;

    // --- setup ---
    void equilibrate();
    void setup_kkt();
    void set_identity_scaling();
    bool update_scalings(const Eigen::VectorXd& s, const Eigen::VectorXd& z,
                         Eigen::VectorXd& lambda);
    void write_kkt_scalings();

    // --- cone algebra ---
    Eigen::VectorXd scale(const Eigen::VectorXd& v) const;     // W v
    Eigen::VectorXd w2_times(const Eigen::VectorXd& v) const;  // W^2 v
    Eigen::VectorXd conic_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
    Eigen::VectorXd conic_division(const Eigen::VectorXd& u, const Eigen::VectorXd& w) const;
    Eigen::VectorXd bring_to_cone(const Eigen::VectorXd& r) const;
    double line_search(const Eigen::VectorXd& lambda, const Eigen::VectorXd& ds,
                       const Eigen::VectorXd& dz, double tau, double dtau, double kap,
                       double dkap) const;
    bool strictly_in_cone(const Eigen::VectorXd& v) const;

    // --- iterations ---
    int solve_kkt(const Eigen::VectorXd& rhs, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                  Eigen::VectorXd& dz, bool initialize);
    void compute_residuals(Iterate& w);
    void update_statistics(Iterate& w);
    enum class Verdict { none, optimal, pinf, dinf };
    Verdict check_exit(const Iterate& w, bool reduced) const;

    ConeSolution finish(Iterate& w, ConeStatus status);
};

void HSDSolver::equilibrate() {
    xe_ = Eigen::VectorXd::Ones(n_);
    ae_ = Eigen::VectorXd::Ones(p_);
    ge_ = Eigen::VectorXd::Ones(m_);

    auto max_rows = [](Eigen::VectorXd& e, const Eigen::SparseMatrix<double>& mat) {
        for (int j = 0; j < mat.outerSize(); ++j)
            for (Eigen::SparseMatrix<double>::InnerIterator it(mat, j); it; ++it)
                e[it.row()] = std::max(e[it.row()], std::abs(it.value()));
    };
    auto max_cols = [](Eigen::VectorXd& e, const Eigen::SparseMatrix<double>& mat) {
        for (int j = 0; j < mat.outerSize(); ++j)
            for (Eigen::SparseMatrix<double>::InnerIterator it(mat, j); it; ++it)
                e[j] = std::max(e[j], std::abs(it.value()));
    };
    auto div_rows = [](const Eigen::VectorXd& e, Eigen::SparseMatrix<double>& mat) {
        for (int j = 0; j < mat.outerSize(); ++j)
            for (Eigen::SparseMatrix<double>::InnerIterator it(mat, j); it; ++it)
                it.valueRef() /= e[it.row()];
    };
    auto div_cols = [](const Eigen::VectorXd& e, Eigen::SparseMatrix<double>& mat) {
        for (int j = 0; j < mat.outerSize(); ++j)
            for (Eigen::SparseMatrix<double>::InnerIterator it(mat, j); it; ++it)
                it.valueRef() /= e[j];
    };
    auto sqrt_or_one = [](double v) { return v < 1e-6 ? 1.0 : std::sqrt(v); };

    for (int iter = 0; iter < cfg_.equil_iters; ++iter) {
        Eigen::VectorXd xt = Eigen::VectorXd::Zero(n_);
        Eigen::VectorXd at = Eigen::VectorXd::Zero(p_);
        Eigen::VectorXd gt = Eigen::VectorXd::Zero(m_);
        max_cols(xt, A_);
        max_cols(xt, G_);
        max_rows(at, A_);
        max_rows(gt, G_);
        // rows of one cone share a common scaling so the cone stays a cone
        int row = nlp_;
        for (int d : dims_) {
            const double total = gt.segment(row, d).sum();
            gt.segment(row, d).setConstant(total);
            row += d;
        }
        xt = xt.unaryExpr(sqrt_or_one);
        at = at.unaryExpr(sqrt_or_one);
        gt = gt.unaryExpr(sqrt_or_one);
        div_rows(at, A_);
        div_rows(gt, G_);
        div_cols(xt, A_);
        div_cols(xt, G_);
        xe_ = xe_.cwiseProduct(xt);
        ae_ = ae_.cwiseProduct(at);
        ge_ = ge_.cwiseProduct(gt);
    }
    c_ = c_.cwiseQuotient(xe_);
    b_ = b_.cwiseQuotient(ae_);
    h_ = h_.cwiseQuotient(ge_);
}

void HSDSolver::setup_kkt() {
    //      [ dI   A'   G' ]
    //  K = [ A  -dI    0  ]
    //      [ G    0  -W^2-dI ]
    // stored fully symmetric; the (3,3) block values are rewritten each
    // iteration through cached pointers.
    const int dim = n_ + p_ + m_;
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < n_; ++i) trip.emplace_back(i, i, cfg_.deltastat);
    for (int i = 0; i < p_; ++i) trip.emplace_back(n_ + i, n_ + i, -cfg_.deltastat);
    for (int j = 0; j < A_.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) {
            trip.emplace_back(n_ + int(it.row()), int(it.col()), it.value());
            trip.emplace_back(int(it.col()), n_ + int(it.row()), it.value());
        }
    for (int j = 0; j < G_.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(G_, j); it; ++it) {
            trip.emplace_back(n_ + p_ + int(it.row()), int(it.col()), it.value());
            trip.emplace_back(int(it.col()), n_ + p_ + int(it.row()), it.value());
        }
    // scaling block placeholders: orthant diagonal, then dense SOC blocks
    const int z0 = n_ + p_;
    for (int i = 0; i < nlp_; ++i) trip.emplace_back(z0 + i, z0 + i, -1.0);
    int row = nlp_;
    for (int d : dims_) {
        for (int r = 0; r < d; ++r)
            for (int col = 0; col < d; ++col)
                trip.emplace_back(z0 + row + r, z0 + row + col, r == col ? -1.0 : 0.0);
        row += d;
    }
    K_.resize(dim, dim);
    K_.setFromTriplets(trip.begin(), trip.end());
    K_.makeCompressed();

    scaling_ptrs_.clear();
    for (int i = 0; i < nlp_; ++i) scaling_ptrs_.push_back(&K_.coeffRef(z0 + i, z0 + i));
    row = nlp_;
    for (int d : dims_) {
        for (int r = 0; r < d; ++r)
            for (int col = 0; col < d; ++col)
                scaling_ptrs_.push_back(&K_.coeffRef(z0 + row + r, z0 + row + col));
        row += d;
    }
}

void HSDSolver::set_identity_scaling() {
    lp_w2_.setOnes();
    for (std::size_t k = 0; k < dims_.size(); ++k) {
        soc_eta2_[k] = 1.0;
        soc_wbar_[k] = Eigen::VectorXd::Zero(dims_[k]);
        soc_wbar_[k][0] = 1.0;
    }
    identity_scaling_ = true;
    write_kkt_scalings();
}

bool HSDSolver::update_scalings(const Eigen::VectorXd& s, const Eigen::VectorXd& z,
                                Eigen::VectorXd& lambda) {
    for (int i = 0; i < nlp_; ++i) {
        if (s[i] <= 0.0 || z[i] <= 0.0) return false;
        lp_w2_[i] = s[i] / z[i];
    }
    int row = nlp_;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
        const int d = dims_[k];
        const auto sk = s.segment(row, d);
        const auto zk = z.segment(row, d);
        const double sres = sk[0] * sk[0] - sk.tail(d - 1).squaredNorm();
        const double zres = zk[0] * zk[0] - zk.tail(d - 1).squaredNorm();
        if (sres <= 0.0 || zres <= 0.0 || sk[0] <= 0.0 || zk[0] <= 0.0) return false;
        const double snorm = std::sqrt(sres);
        const double znorm = std::sqrt(zres);
        const Eigen::VectorXd sbar = sk / snorm;
        const Eigen::VectorXd zbar = zk / znorm;
        const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
        Eigen::VectorXd wbar(d);
        wbar[0] = (0.5 / gamma) * (sbar[0] + zbar[0]);
        wbar.tail(d - 1) = (0.5 / gamma) * (sbar.tail(d - 1) - zbar.tail(d - 1));
        soc_eta2_[k] = snorm / znorm;
        soc_wbar_[k] = wbar;
        row += d;
    }
    identity_scaling_ = false;
    lambda = scale(z);
    return true;
}

void HSDSolver::write_kkt_scalings() {
    std::size_t ptr = 0;
    for (int i = 0; i < nlp_; ++i) *scaling_ptrs_[ptr++] = -lp_w2_[i] - cfg_.deltastat;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
        const int d = dims_[k];
        const double eta2 = soc_eta2_[k];
        const Eigen::VectorXd& w = soc_wbar_[k];
        for (int r = 0; r < d; ++r) {
            for (int col = 0; col < d; ++col) {
                double v = 2.0 * eta2 * w[r] * w[col];
                if (r == col) v -= eta2 * (r == 0 ? 1.0 : -1.0); // subtract eta2 * J
                v = -v;
                if (r == col) v -= cfg_.deltastat;
                *scaling_ptrs_[ptr++] = v;
            }
        }
    }
}

Eigen::VectorXd HSDSolver::scale(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(m_);
    out.head(nlp_) = lp_w2_.cwiseSqrt().cwiseProduct(v.head(nlp_));
    int row = nlp_;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
        const int d = dims_[k];
        const double eta = std::sqrt(soc_eta2_[k]);
        const Eigen::VectorXd& w = soc_wbar_[k];
        const auto vk = v.segment(row, d);
        const double zeta = w.tail(d - 1).dot(vk.tail(d - 1));
        out[row] = eta * (w[0] * vk[0] + zeta);
        out.segment(row + 1, d - 1) =
            eta * (vk.tail(d - 1) + (vk[0] + zeta / (1.0 + w[0])) * w.tail(d - 1));
        row += d;
    }
    return out;
}

Eigen::VectorXd HSDSolver::w2_times(const Eigen::VectorXd& v) const {
    if (identity_scaling_) return v;
    Eigen::VectorXd out(m_);
    out.head(nlp_) = lp_w2_.cwiseProduct(v.head(nlp_));
    int row = nlp_;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
        const int d = dims_[k];
        const double eta2 = soc_eta2_[k];
        const Eigen::VectorXd& w = soc_wbar_[k];
        const auto vk = v.segment(row, d);
        const double dot = w.dot(vk);
        Eigen::VectorXd jv(d);
        jv[0] = vk[0];
        jv.tail(d - 1) = -vk.tail(d - 1);
        out.segment(row, d) = eta2 * (2.0 * dot * w - jv);
        row += d;
    }
    return out;
}

Eigen::VectorXd HSDSolver::conic_product(const Eigen::VectorXd& u,
                                         const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(m_);
    out.head(nlp_) = u.head(nlp_).cwiseProduct(v.head(nlp_));
    int row = nlp_;
    for (int d : dims_) {
        const auto uk = u.segment(row, d);
        const auto vk = v.segment(row, d);
        out[row] = uk.dot(vk);
        out.segment(row + 1, d - 1) = uk[0] * vk.tail(d - 1) + vk[0] * uk.tail(d - 1);
        row += d;
    }
    return out;
}

Eigen::VectorXd HSDSolver::conic_division(const Eigen::VectorXd& u,
                                          const Eigen::VectorXd& w) const {
    Eigen::VectorXd out(m_);
    out.head(nlp_) = w.head(nlp_).cwiseQuotient(u.head(nlp_));
    int row = nlp_;
    for (int d : dims_) {
        const auto uk = u.segment(row, d);
        const auto wk = w.segment(row, d);
        const double rho = uk[0] * uk[0] - uk.tail(d - 1).squaredNorm();
        const double zeta = uk.tail(d - 1).dot(wk.tail(d - 1));
        const double factor = (zeta / uk[0] - wk[0]) / rho;
        out[row] = (uk[0] * wk[0] - zeta) / rho;
        out.segment(row + 1, d - 1) = factor * uk.tail(d - 1) + wk.tail(d - 1) / uk[0];
        row += d;
    }
    return out;
}

Eigen::VectorXd HSDSolver::bring_to_cone(const Eigen::VectorXd& r) const {
    double alpha = -0.99;
    for (int i = 0; i < nlp_; ++i)
        if (r[i] <= 0.0) alpha = std::max(alpha, -r[i]);
    int row = nlp_;
    for (int d : dims_) {
        const double res = r[row] - r.segment(row + 1, d - 1).norm();
        if (res <= 0.0) alpha = std::max(alpha, -res);
        row += d;
    }
    Eigen::VectorXd s = r;
    alpha += 1.0;
    s.head(nlp_).array() += alpha;
    row = nlp_;
    for (int d : dims_) {
        s[row] += alpha;
        row += d;
    }
    return s;
}

// Step length keeping the scaled pair inside the cone: the bounds come from
// the spectral factorization of the directions in the frame of lambda, which
// stays stable even when a cone has nearly collapsed.
double HSDSolver::line_search(const Eigen::VectorXd& lambda, const Eigen::VectorXd& ds,
                              const Eigen::VectorXd& dz, double tau, double dtau, double kap,
                              double dkap) const {
    double alpha = 10.0;
    if (nlp_ > 0) {
        const double rhomin = (ds.head(nlp_).cwiseQuotient(lambda.head(nlp_))).minCoeff();
        const double sigmamin = (dz.head(nlp_).cwiseQuotient(lambda.head(nlp_))).minCoeff();
        constexpr double eps = 1e-13;
        if (-sigmamin > -rhomin)
            alpha = sigmamin < 0.0 ? 1.0 / (-sigmamin) : 1.0 / eps;
        else
            alpha = rhomin < 0.0 ? 1.0 / (-rhomin) : 1.0 / eps;
    }
    if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
    if (dkap < 0.0) alpha = std::min(alpha, -kap / dkap);

    int row = nlp_;
    for (int d : dims_) {
        const auto lk = lambda.segment(row, d);
        const double lknorm2 = lk[0] * lk[0] - lk.tail(d - 1).squaredNorm();
        if (lknorm2 > 0.0) {
            const double lknorm = std::sqrt(lknorm2);
            const Eigen::VectorXd lkbar = lk / lknorm;

            auto spectral_bound = [&](const Eigen::VectorXd& dir) {
                const auto dk = dir.segment(row, d);
                const double lkbar_dk = lkbar[0] * dk[0] - lkbar.tail(d - 1).dot(dk.tail(d - 1));
                const double rho0 = lkbar_dk / lknorm;
                const double factor = (lkbar_dk + dk[0]) / (lkbar[0] + 1.0);
                const Eigen::VectorXd rho1 =
                    (dk.tail(d - 1) - factor * lkbar.tail(d - 1)) / lknorm;
                return rho1.norm() - rho0;
            };
            const double conic_step =
                std::max({0.0, spectral_bound(ds), spectral_bound(dz)});
            if (conic_step != 0.0) alpha = std::min(alpha, 1.0 / conic_step);
        }
        row += d;
    }
    return std::clamp(alpha, cfg_.stepmin, cfg_.stepmax);
}

bool HSDSolver::strictly_in_cone(const Eigen::VectorXd& v) const {
    for (int i = 0; i < nlp_; ++i)
        if (v[i] <= 0.0) return false;
    int row = nlp_;
    for (int d : dims_) {
        if (v[row] <= 0.0) return false;
        if (v[row] * v[row] - v.segment(row + 1, d - 1).squaredNorm() <= 0.0) return false;
        row += d;
    }
    return true;
}

int HSDSolver::solve_kkt(const Eigen::VectorXd& rhs, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                         Eigen::VectorXd& dz, bool initialize) {
    Eigen::VectorXd sol = ldlt_.solve(rhs);
    const double threshold = (1.0 + rhs.lpNorm<Eigen::Infinity>()) * cfg_.linsysacc;
    double prev_err = kInf;
    Eigen::VectorXd correction;

    const auto bx = rhs.head(n_);
    const auto by = rhs.segment(n_, p_);
    const auto bz = rhs.tail(m_);

    int k_ref = 0;
    for (; k_ref <= cfg_.nitref; ++k_ref) {
        const auto vx = sol.head(n_);
        const auto vy = sol.segment(n_, p_);
        const auto vz = sol.tail(m_);

        // residuals of the unregularized system
        Eigen::VectorXd ex = bx - Gt_ * vz;
        if (p_ > 0) ex -= At_ * vy;
        Eigen::VectorXd ey = by;
        if (p_ > 0) ey -= A_ * vx;
        Eigen::VectorXd ez = bz - G_ * vx;
        if (initialize) ez += vz;
        else ez += w2_times(vz);

        double err = std::max(ex.lpNorm<Eigen::Infinity>(), ez.lpNorm<Eigen::Infinity>());
        if (p_ > 0) err = std::max(err, ey.lpNorm<Eigen::Infinity>());

        if (k_ref > 0 && err > prev_err) {
            sol -= correction;
            --k_ref;
            break;
        }
        if (k_ref == cfg_.nitref || err < threshold ||
            (k_ref > 0 && prev_err < cfg_.irerrfact * err)) {
            break;
        }
        prev_err = err;
        Eigen::VectorXd e(n_ + p_ + m_);
        e << ex, ey, ez;
        correction = ldlt_.solve(e);
        sol += correction;
    }
    dx = sol.head(n_);
    dy = sol.segment(n_, p_);
    dz = sol.tail(m_);
    return k_ref;
}

void HSDSolver::compute_residuals(Iterate& w) {
    rx_ = -(Gt_ * w.z);
    if (p_ > 0) rx_ -= At_ * w.y;
    hresx_ = rx_.norm();
    rx_ -= w.tau * c_;

    if (p_ > 0) {
        ry_ = A_ * w.x;
        hresy_ = ry_.norm();
        ry_ -= w.tau * b_;
    } else {
        ry_.resize(0);
        hresy_ = 0.0;
    }

    rz_ = w.s + G_ * w.x;
    hresz_ = rz_.norm();
    rz_ -= w.tau * h_;

    w.cx = c_.dot(w.x);
    w.by = p_ > 0 ? b_.dot(w.y) : 0.0;
    w.hz = h_.dot(w.z);
    rt_ = w.kap + w.cx + w.by + w.hz;

    nx_ = w.x.norm();
    ny_ = w.y.norm();
    nz_ = w.z.norm();
    ns_ = w.s.norm();
}

void HSDSolver::update_statistics(Iterate& w) {
    w.gap = w.s.dot(w.z);
    w.mu = (w.gap + w.kap * w.tau) / double(deg_ + 1);
    w.kapovert = w.kap / w.tau;
    w.pcost = w.cx / w.tau;
    w.dcost = -(w.hz + w.by) / w.tau;

    if (w.pcost < 0.0) {
        w.relgap = w.gap / (-w.pcost);
        w.has_relgap = true;
    } else if (w.dcost > 0.0) {
        w.relgap = w.gap / w.dcost;
        w.has_relgap = true;
    } else {
        w.relgap = kInf;
        w.has_relgap = false;
    }

    const double nry = p_ > 0 ? ry_.norm() / std::max(resy0_ + nx_, 1.0) : 0.0;
    const double nrz = rz_.norm() / std::max(resz0_ + nx_ + ns_, 1.0);
    w.pres = std::max(nry, nrz) / w.tau;
    w.dres = rx_.norm() / std::max(resx0_ + ny_ + nz_, 1.0) / w.tau;

    w.has_pinfres = (w.hz + w.by) / std::max(ny_ + nz_, 1.0) < -cfg_.reltol;
    if (w.has_pinfres) w.pinfres = hresx_ / std::max(ny_ + nz_, 1.0);
    w.has_dinfres = w.cx / std::max(nx_, 1.0) < -cfg_.reltol;
    if (w.has_dinfres)
        w.dinfres = std::max(hresy_ / std::max(nx_, 1.0), hresz_ / std::max(nx_ + ns_, 1.0));
}

HSDSolver::Verdict HSDSolver::check_exit(const Iterate& w, bool reduced) const {
    const double feastol = reduced ? cfg_.feastol_inacc : cfg_.feastol;
    const double abstol = reduced ? cfg_.abstol_inacc : cfg_.abstol;
    const double reltol = reduced ? cfg_.reltol_inacc : cfg_.reltol;

    if ((-w.cx > 0.0 || -w.by - w.hz >= -abstol) && w.pres < feastol && w.dres < feastol &&
        (w.gap < abstol || (w.has_relgap && w.relgap < reltol)))
        return Verdict::optimal;
    if (w.has_dinfres && w.dinfres < feastol && w.tau < w.kap) return Verdict::dinf;
    if ((w.has_pinfres && w.pinfres < feastol && w.tau < w.kap) ||
        (w.tau < feastol && w.kap < feastol && w.has_pinfres && w.pinfres < feastol))
        return Verdict::pinf;
    return Verdict::none;
}

ConeSolution HSDSolver::finish(Iterate& w, ConeStatus status) {
    ConeSolution out;
    out.status = status;
    out.x = w.x.cwiseQuotient(xe_ * w.tau);
    out.y = p_ > 0 ? Eigen::VectorXd(w.y.cwiseQuotient(ae_ * w.tau)) : Eigen::VectorXd(0);
    out.z = w.z.cwiseQuotient(ge_ * w.tau);
    out.s = w.s.cwiseProduct(ge_ / w.tau);
    out.pcost = w.pcost;
    out.dcost = w.dcost;
    out.gap = w.gap;
    out.relgap = w.has_relgap ? w.relgap : kInf;
    out.pres = w.pres;
    out.dres = w.dres;
    out.iters = w.iter;
    return out;
}

ConeSolution HSDSolver::run() {
    Iterate w;
    w.x.setZero(n_);
    w.y.setZero(p_);
    w.z.setZero(m_);
    w.s.setZero(m_);

    set_identity_scaling();

    resx0_ = std::max(1.0, c_.norm());
    resy0_ = std::max(1.0, b_.norm());
    resz0_ = std::max(1.0, h_.norm());

    if (!analyzed_) {
        ldlt_.analyzePattern(K_);
        analyzed_ = true;
    }
    ldlt_.factorize(K_);
    if (ldlt_.info() != Eigen::Success) return finish(w, ConeStatus::numerical_failure);

    Eigen::VectorXd rhs1(n_ + p_ + m_);
    rhs1.setZero();
    rhs1.segment(n_, p_) = b_;
    rhs1.tail(m_) = h_;

    Eigen::VectorXd dx1(n_), dy1(p_), dz1(m_);
    solve_kkt(rhs1, dx1, dy1, dz1, true);
    w.x = dx1;
    w.s = bring_to_cone(-dz1);

    Eigen::VectorXd rhs2(n_ + p_ + m_);
    rhs2.setZero();
    rhs2.head(n_) = -c_;
    Eigen::VectorXd dx2(n_), dy2(p_), dz2(m_);
    solve_kkt(rhs2, dx2, dy2, dz2, true);
    w.y = dy2;
    w.z = bring_to_cone(dz2);

    w.kap = 1.0;
    w.tau = 1.0;
    rhs1.head(n_) = -c_;

    Iterate best = w;
    bool have_best = false;
    double pres_prev = kInf;
    double last_step = kInf;
    Eigen::VectorXd lambda(m_);

    static const bool trace = std::getenv("MCVAR_CONELP_TRACE") != nullptr;

    for (w.iter = 0; w.iter <= cfg_.max_iters; ++w.iter) {
        compute_residuals(w);
        update_statistics(w);
        if (trace)
            std::fprintf(stderr,
                         "it %2d pcost % .6e dcost % .6e gap %.2e pres %.2e dres %.2e "
                         "k/t %.2e step %.4f\n",
                         w.iter, w.pcost, w.dcost, w.gap, w.pres, w.dres, w.kapovert,
                         last_step == kInf ? 0.0 : last_step);

        // recover from a diverging step
        if (w.iter > 0 && (w.pres > cfg_.safeguard * pres_prev || w.gap < 0.0)) {
            w = best;
            const Verdict v = check_exit(w, true);
            if (v == Verdict::optimal) return finish(w, ConeStatus::close_to_optimal);
            if (v == Verdict::pinf) return finish(w, ConeStatus::close_to_primal_infeasible);
            if (v == Verdict::dinf) return finish(w, ConeStatus::close_to_dual_infeasible);
            return finish(w, ConeStatus::numerical_failure);
        }
        pres_prev = w.pres;

        const Verdict v = check_exit(w, false);
        if (v == Verdict::optimal) return finish(w, ConeStatus::optimal);
        if (v == Verdict::pinf) return finish(w, ConeStatus::primal_infeasible);
        if (v == Verdict::dinf) return finish(w, ConeStatus::dual_infeasible);

        if (w.iter > 0 && last_step <= cfg_.stepmin * cfg_.step_scale * (1.0 + 1e-12)) {
            w = best;
            const Verdict vr = check_exit(w, true);
            if (vr == Verdict::optimal) return finish(w, ConeStatus::close_to_optimal);
            if (vr == Verdict::pinf) return finish(w, ConeStatus::close_to_primal_infeasible);
            if (vr == Verdict::dinf) return finish(w, ConeStatus::close_to_dual_infeasible);
            return finish(w, ConeStatus::numerical_failure);
        }
        if (w.iter == cfg_.max_iters) {
            if (have_best && !w.better_than(best)) w = best;
            const Verdict vr = check_exit(w, true);
            if (vr == Verdict::optimal) return finish(w, ConeStatus::close_to_optimal);
            if (vr == Verdict::pinf) return finish(w, ConeStatus::close_to_primal_infeasible);
            if (vr == Verdict::dinf) return finish(w, ConeStatus::close_to_dual_infeasible);
            return finish(w, ConeStatus::max_iters);
        }
        if (std::isnan(w.pcost)) {
            if (have_best) {
                w = best;
                const Verdict vr = check_exit(w, true);
                if (vr == Verdict::optimal) return finish(w, ConeStatus::close_to_optimal);
            }
            return finish(w, ConeStatus::numerical_failure);
        }

        if (!have_best || w.better_than(best)) {
            best = w;
            have_best = true;
        }

        if (!update_scalings(w.s, w.z, lambda)) {
            if (trace) std::fprintf(stderr, "exit: iterate left the cone at iter %d\n", w.iter);
            w = best;
            const Verdict vr = check_exit(w, true);
            if (vr == Verdict::optimal) return finish(w, ConeStatus::close_to_optimal);
            return finish(w, ConeStatus::numerical_failure);
        }
        write_kkt_scalings();
        ldlt_.factorize(K_);
        if (ldlt_.info() != Eigen::Success) {
            // exact zero pivot from an ill-conditioned scaling block near
            // convergence; boost the static regularization and retry
            const double saved = cfg_.deltastat;
            cfg_.deltastat = saved * 1e3;
            write_kkt_scalings();
            ldlt_.factorize(K_);
            cfg_.deltastat = saved;
            if (ldlt_.info() != Eigen::Success) {
                if (trace) std::fprintf(stderr, "exit: KKT factorization failed at iter %d\n", w.iter);
                w = best;
                const Verdict vr = check_exit(w, true);
                if (vr == Verdict::optimal) return finish(w, ConeStatus::close_to_optimal);
                if (vr == Verdict::pinf) return finish(w, ConeStatus::close_to_primal_infeasible);
                if (vr == Verdict::dinf) return finish(w, ConeStatus::close_to_dual_infeasible);
                return finish(w, ConeStatus::numerical_failure);
            }
        }

        solve_kkt(rhs1, dx1, dy1, dz1, false);
        const double dtau_denom =
            w.kap / w.tau - c_.dot(dx1) - (p_ > 0 ? b_.dot(dy1) : 0.0) - h_.dot(dz1);

        // affine (predictor) direction
        rhs2.head(n_) = rx_;
        rhs2.segment(n_, p_) = -ry_;
        rhs2.tail(m_) = w.s - rz_;
        solve_kkt(rhs2, dx2, dy2, dz2, false);

        const double dtau_aff =
            (rt_ - w.kap + c_.dot(dx2) + (p_ > 0 ? b_.dot(dy2) : 0.0) + h_.dot(dz2)) / dtau_denom;
        Eigen::VectorXd dz_aff = dz2 + dtau_aff * dz1;
        Eigen::VectorXd W_dz_aff = scale(dz_aff);
        Eigen::VectorXd ds_by_W = -W_dz_aff - lambda; // W^{-T} ds_aff
        const double dkap_aff = -w.kap - w.kap / w.tau * dtau_aff;

        const double step_aff =
            line_search(lambda, ds_by_W, W_dz_aff, w.tau, dtau_aff, w.kap, dkap_aff);

        const double sigma =
            std::clamp(std::pow(1.0 - step_aff, 3.0), cfg_.sigmamin, cfg_.sigmamax);
        const double sigmamu = sigma * w.mu;

        // combined (corrector) direction
        Eigen::VectorXd ds = conic_product(lambda, lambda) + conic_product(ds_by_W, W_dz_aff);
        ds.head(nlp_).array() -= sigmamu;
        {
            int row = nlp_;
            for (int d : dims_) {
                ds[row] -= sigmamu;
                row += d;
            }
        }
        Eigen::VectorXd lambda_div_ds = conic_division(lambda, ds);
        rhs2.head(n_) = (1.0 - sigma) * rx_;
        rhs2.segment(n_, p_) = -(1.0 - sigma) * ry_;
        rhs2.tail(m_) = -(1.0 - sigma) * rz_ + scale(lambda_div_ds);
        solve_kkt(rhs2, dx2, dy2, dz2, false);

        const double bkap = w.kap * w.tau + dkap_aff * dtau_aff - sigmamu;
        const double dtau = ((1.0 - sigma) * rt_ - bkap / w.tau + c_.dot(dx2) +
                             (p_ > 0 ? b_.dot(dy2) : 0.0) + h_.dot(dz2)) /
                            dtau_denom;
        dx2 += dtau * dx1;
        dy2 += dtau * dy1;
        dz2 += dtau * dz1;
        Eigen::VectorXd W_dz = scale(dz2);
        ds_by_W = -(lambda_div_ds + W_dz);
        const double dkap = -(bkap + w.kap * dtau) / w.tau;

        double step =
            line_search(lambda, ds_by_W, W_dz, w.tau, dtau, w.kap, dkap) * cfg_.step_scale;

        Eigen::VectorXd ds_unscaled = scale(ds_by_W); // W (W^{-T} ds) = ds

        // guard against rounding pushing a nearly collapsed cone across its
        // boundary: verify in the unscaled space and back off if needed
        for (int back = 0; back < 40; ++back) {
            if (strictly_in_cone(w.s + step * ds_unscaled) &&
                strictly_in_cone(w.z + step * dz2) && w.tau + step * dtau > 0.0 &&
                w.kap + step * dkap > 0.0)
                break;
            step *= 0.5;
        }
        last_step = step;

        w.x += step * dx2;
        w.y += step * dy2;
        w.z += step * dz2;
        w.s += step * ds_unscaled;
        w.kap += step * dkap;
        w.tau += step * dtau;
    }
    return finish(w, ConeStatus::max_iters);
}

} // namespace

ConeSolution solve_conelp(const ConeLP& problem, const ConeSettings& settings) {
    HSDSolver solver(problem, settings);
    return solver.run();
}

} // namespace mcvar
