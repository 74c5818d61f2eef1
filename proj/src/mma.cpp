#include "sogym/mma.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace sogym {

using Eigen::ArrayXd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kRangeFloor = 1e-5;
constexpr double kRaaFloor = 1e-5;
constexpr int kNewtonBudget = 500;
constexpr int kLineSearchBudget = 50;
constexpr double kRoundingFloor = 1e3 * DBL_EPSILON;

VectorXd ranges(const MmaState& s) {
    return (s.xmax - s.xmin).cwiseMax(kRangeFloor);
}

// Interior point iterate of the subproblem.
struct Point {
    VectorXd x, y, lam, xsi, eta, mu, s;
    double z = 1.0, zet = 1.0;
};

// KKT residual of the barrier problem. When `mag` is given it receives, per
// row, the magnitude of the terms that row is computed from. Gradient spikes
// put terms near 1e8 into the stationarity rows and push multipliers to
// where x - alfa sits below the resolution of x, so the raw residual has a
// rounding floor proportional to mag.
VectorXd kkt_residual(const Subproblem& sp, const OptimizerConfig& cfg, const Point& p, double epsi,
                      VectorXd* mag = nullptr) {
    const ArrayXd ux1 = (sp.upp - p.x).array();
    const ArrayXd xl1 = (p.x - sp.low).array();
    const VectorXd plam = sp.p0 + sp.P.transpose() * p.lam;
    const VectorXd qlam = sp.q0 + sp.Q.transpose() * p.lam;
    const VectorXd gvec = sp.P * ux1.inverse().matrix() + sp.Q * xl1.inverse().matrix();
    const ArrayXd dpsidx = plam.array() / ux1.square() - qlam.array() / xl1.square();
    const Eigen::Index n = p.x.size();
    const Eigen::Index m = p.y.size();

    VectorXd res(3 * n + 4 * m + 2);
    Eigen::Index k = 0;
    res.segment(k, n) = (dpsidx - p.xsi.array() + p.eta.array()).matrix();
    k += n;
    res.segment(k, m) = (cfg.c + cfg.d * p.y.array() - p.mu.array() - p.lam.array()).matrix();
    k += m;
    res[k++] = cfg.a0 - p.zet - cfg.a * p.lam.sum();
    res.segment(k, m) = (gvec.array() - cfg.a * p.z - p.y.array() + p.s.array() - sp.b.array()).matrix();
    k += m;
    res.segment(k, n) = (p.xsi.array() * (p.x - sp.alfa).array() - epsi).matrix();
    k += n;
    res.segment(k, n) = (p.eta.array() * (sp.beta - p.x).array() - epsi).matrix();
    k += n;
    res.segment(k, m) = (p.mu.array() * p.y.array() - epsi).matrix();
    k += m;
    res[k++] = p.zet * p.z - epsi;
    res.segment(k, m) = (p.lam.array() * p.s.array() - epsi).matrix();

    if (mag) {
        const ArrayXd ax = p.x.array().abs();
        mag->resize(res.size());
        k = 0;
        mag->segment(k, n) = (plam.array() / ux1.square()).max(qlam.array() / xl1.square()).max(p.xsi.array()).max(p.eta.array()).matrix();
        k += n;
        mag->segment(k, m) = (cfg.d * p.y.array()).max(p.mu.array()).max(p.lam.array()).max(cfg.c).matrix();
        k += m;
        (*mag)[k++] = std::max(cfg.a0, p.zet);
        mag->segment(k, m) = gvec.array().abs().max(sp.b.array().abs()).max(p.y.array()).max(p.s.array()).matrix();
        k += m;
        mag->segment(k, n) = (p.xsi.array() * ax.max(sp.alfa.array().abs())).matrix();
        k += n;
        mag->segment(k, n) = (p.eta.array() * ax.max(sp.beta.array().abs())).matrix();
        k += n;
        mag->tail(2 * m + 1).setZero();
    }
    return res;
}

// Residual norm with each row's rounding floor discounted; used as the line
// search merit so noise in the large rows cannot block progress elsewhere.
double merit(const VectorXd& res, const VectorXd& mag) {
    return (res.array().abs() - kRoundingFloor * mag.array()).max(0.0).matrix().norm();
}

// Largest residual entry once each row's rounding floor is discounted.
double excess_residual(const VectorXd& res, const VectorXd& mag) {
    return (res.array().abs() - kRoundingFloor * mag.array()).maxCoeff();
}
// Rounding can land x exactly on alfa or beta once the barrier has pushed
// x - alfa below the resolution of x; keep it one ulp inside.
VectorXd strictly_inside(VectorXd x, const Subproblem& sp) {
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        x[j] = std::clamp(x[j], std::nextafter(sp.alfa[j], sp.beta[j]), std::nextafter(sp.beta[j], sp.alfa[j]));
    }
    return x;
}

double max_ratio(const ArrayXd& step, const ArrayXd& base) {
    return (-1.01 * step / base).maxCoeff();
}

void update_asymptotes(MmaState& s, const OptimizerConfig& cfg) {
    const VectorXd span = ranges(s);
    if (s.iter <= 2) {
        s.low = s.x - cfg.asyinit * span;
        s.upp = s.x + cfg.asyinit * span;
        return;
    }
    const ArrayXd trend = (s.x - s.xold1).array() * (s.xold1 - s.xold2).array();
    ArrayXd factor = ArrayXd::Ones(s.x.size());
    for (Eigen::Index j = 0; j < factor.size(); ++j) {
        if (trend[j] > 0) factor[j] = cfg.asyincr;
        else if (trend[j] < 0) factor[j] = cfg.asydecr;
    }
    s.low = (s.x.array() - factor * (s.xold1 - s.low).array()).matrix();
    s.upp = (s.x.array() + factor * (s.upp - s.xold1).array()).matrix();
    s.low = s.low.cwiseMax(s.x - 10.0 * span).cwiseMin(s.x - 0.01 * span);
    s.upp = s.upp.cwiseMin(s.x + 10.0 * span).cwiseMax(s.x + 0.01 * span);
}

void move_limits(const MmaState& s, const OptimizerConfig& cfg, Subproblem& sp) {
    const VectorXd span = s.xmax - s.xmin;
    sp.alfa = (sp.low + cfg.albefa * (s.x - sp.low)).cwiseMax(s.x - cfg.move * span).cwiseMax(s.xmin);
    sp.beta = (sp.upp - cfg.albefa * (sp.upp - s.x)).cwiseMin(s.x + cfg.move * span).cwiseMin(s.xmax);
}

// Builds p, q and b for the MMA form (MMA) or the GCMMA form with explicit
// constant terms r0, r.
Subproblem build(const MmaState& s, const OptimizerConfig& cfg, const Response& r, double raa0,
                 const VectorXd& raa, bool gcmma) {
    Subproblem sp;
    sp.low = s.low;
    sp.upp = s.upp;
    move_limits(s, cfg, sp);

    const ArrayXd inv_span = ranges(s).array().inverse();
    const ArrayXd ux1 = (s.upp - s.x).array();
    const ArrayXd xl1 = (s.x - s.low).array();
    const ArrayXd ux2 = ux1.square();
    const ArrayXd xl2 = xl1.square();

    ArrayXd p0 = r.df0.array().max(0.0);
    ArrayXd q0 = (-r.df0.array()).max(0.0);
    const ArrayXd pq0 = 0.001 * (p0 + q0) + raa0 * inv_span;
    sp.p0 = ((p0 + pq0) * ux2).matrix();
    sp.q0 = ((q0 + pq0) * xl2).matrix();

    const Eigen::Index m = r.g.size();
    sp.P = r.dg.cwiseMax(0.0);
    sp.Q = (-r.dg).cwiseMax(0.0);
    for (Eigen::Index i = 0; i < m; ++i) {
        const ArrayXd pq = 0.001 * (sp.P.row(i).array() + sp.Q.row(i).array()).transpose() + raa[i] * inv_span;
        sp.P.row(i) = ((sp.P.row(i).array().transpose() + pq) * ux2).matrix().transpose();
        sp.Q.row(i) = ((sp.Q.row(i).array().transpose() + pq) * xl2).matrix().transpose();
    }
    const VectorXd uxinv = ux1.inverse().matrix();
    const VectorXd xlinv = xl1.inverse().matrix();
    if (gcmma) {
        sp.r0 = r.f0 - sp.p0.dot(uxinv) - sp.q0.dot(xlinv);
        sp.r = r.g - sp.P * uxinv - sp.Q * xlinv;
        sp.b = -sp.r;
    } else {
        sp.b = sp.P * uxinv + sp.Q * xlinv - r.g;
    }
    return sp;
}

// Approximated objective and constraints at x.
std::pair<double, VectorXd> approximation(const Subproblem& sp, const VectorXd& x) {
    const VectorXd uxinv = (sp.upp - x).cwiseInverse();
    const VectorXd xlinv = (x - sp.low).cwiseInverse();
    return {sp.r0 + sp.p0.dot(uxinv) + sp.q0.dot(xlinv), sp.r + sp.P * uxinv + sp.Q * xlinv};
}

bool is_conservative(double f0app, const VectorXd& fapp, const Response& actual, double epsimin) {
    if (f0app + epsimin < actual.f0) return false;
    return ((fapp.array() + epsimin) >= actual.g.array()).all();
}

void raa_update(MmaState& s, const Subproblem& sp, const VectorXd& xmma, double f0app, const VectorXd& fapp,
                const Response& actual, double epsimin) {
    const ArrayXd span = ranges(s).array();
    const ArrayXd xxux = (xmma - s.x).array() / (sp.upp - xmma).array();
    const ArrayXd xxxl = (xmma - s.x).array() / (xmma - sp.low).array();
    const ArrayXd ulxx = (sp.upp - sp.low).array() / span;
    const double raacof = std::max((xxux * xxxl * ulxx).sum(), 1e-12);

    if (actual.f0 > f0app + 0.5 * epsimin) {
        const double delta = (actual.f0 - f0app) / raacof;
        s.raa0 = std::min(1.1 * (s.raa0 + delta), 10.0 * s.raa0);
    }
    for (Eigen::Index i = 0; i < s.raa.size(); ++i) {
        if (actual.g[i] > fapp[i] + 0.5 * epsimin) {
            const double delta = (actual.g[i] - fapp[i]) / raacof;
            s.raa[i] = std::min(1.1 * (s.raa[i] + delta), 10.0 * s.raa[i]);
        }
    }
}

// Builds and solves the subproblem; on failure contracts the asymptotes
// halfway towards x, rebuilds and tries once more.
template <class Make>
SubproblemSolution solve_with_retry(MmaState& s, const OptimizerConfig& cfg, Make&& make, Subproblem& sp,
                                    StepInfo& info) {
    sp = make();
    SubproblemSolution sol = solve_subproblem(sp, cfg);
    if (!sol.converged) {
        info.retried = true;
        s.low = s.x - 0.5 * (s.x - s.low);
        s.upp = s.x + 0.5 * (s.upp - s.x);
        sp = make();
        sol = solve_subproblem(sp, cfg);
    }
    info.converged = sol.converged;
    info.rejected = !sol.converged;
    return sol;
}

// The subproblem keeps x inside [alfa, beta]; clamping only removes
// rounding beyond the box.
VectorXd in_box(const MmaState& s, const VectorXd& x) {
    return x.cwiseMax(s.xmin).cwiseMin(s.xmax);
}

void advance(MmaState& s, const VectorXd& next) {
    s.xold2 = s.xold1;
    s.xold1 = s.x;
    s.x = in_box(s, next);
}

}  // namespace

MmaState::MmaState(VectorXd x0, VectorXd lower, VectorXd upper, int m_)
    : x(std::move(x0)), xmin(std::move(lower)), xmax(std::move(upper)), m(m_) {
    if (x.size() != xmin.size() || x.size() != xmax.size()) throw std::invalid_argument("MmaState: size mismatch");
    if (m < 1) throw std::invalid_argument("MmaState: at least one constraint required");
    if ((xmax.array() <= xmin.array()).any()) throw std::invalid_argument("MmaState: empty box");
    x = x.cwiseMax(xmin).cwiseMin(xmax);
    xold1 = x;
    xold2 = x;
    low = xmin;
    upp = xmax;
    raa0 = 0.01;
    raa = VectorXd::Constant(m, 0.01);
}

SubproblemSolution solve_subproblem(const Subproblem& sp, const OptimizerConfig& cfg) {
    const Eigen::Index m = sp.b.size();
    const ArrayXd c = ArrayXd::Constant(m, cfg.c);
    const ArrayXd d = ArrayXd::Constant(m, cfg.d);
    const VectorXd a = VectorXd::Constant(m, cfg.a);

    Point p;
    p.x = 0.5 * (sp.alfa + sp.beta);
    p.y = VectorXd::Ones(m);
    p.lam = VectorXd::Ones(m);
    p.xsi = (p.x - sp.alfa).cwiseInverse().cwiseMax(1.0);
    p.eta = (sp.beta - p.x).cwiseInverse().cwiseMax(1.0);
    p.mu = (0.5 * c).max(1.0).matrix();
    p.s = VectorXd::Ones(m);

    SubproblemSolution out;
    double epsi = 1.0;
    while (epsi > cfg.epsimin) {
        VectorXd mag;
        VectorXd res = kkt_residual(sp, cfg, p, epsi, &mag);
        double resnorm = merit(res, mag);
        double resmax = excess_residual(res, mag);
        int steps = 0;
        while (resmax > 0.9 * epsi && steps < kNewtonBudget) {
            ++steps;
            const ArrayXd ux1 = (sp.upp - p.x).array();
            const ArrayXd xl1 = (p.x - sp.low).array();
            const ArrayXd ux2 = ux1.square();
            const ArrayXd xl2 = xl1.square();
            const VectorXd plam = sp.p0 + sp.P.transpose() * p.lam;
            const VectorXd qlam = sp.q0 + sp.Q.transpose() * p.lam;
            const VectorXd gvec = sp.P * ux1.inverse().matrix() + sp.Q * xl1.inverse().matrix();
            const MatrixXd GG = sp.P * ux2.inverse().matrix().asDiagonal() - sp.Q * xl2.inverse().matrix().asDiagonal();
            const ArrayXd xa = (p.x - sp.alfa).array();
            const ArrayXd bx = (sp.beta - p.x).array();
            const ArrayXd dpsidx = plam.array() / ux2 - qlam.array() / xl2;

            const ArrayXd delx = dpsidx - epsi / xa + epsi / bx;
            const ArrayXd dely = c + d * p.y.array() - p.lam.array() - epsi / p.y.array();
            const double delz = cfg.a0 - a.dot(p.lam) - epsi / p.z;
            const ArrayXd dellam = gvec.array() - a.array() * p.z - p.y.array() - sp.b.array() + epsi / p.lam.array();
            const ArrayXd diagx =
                2.0 * (plam.array() / (ux2 * ux1) + qlam.array() / (xl2 * xl1)) + p.xsi.array() / xa + p.eta.array() / bx;
            const ArrayXd diagy = d + p.mu.array() / p.y.array();
            const ArrayXd diaglamyi = p.s.array() / p.lam.array() + diagy.inverse();

            // Reduced system in (dlam, dz).
            MatrixXd AA(m + 1, m + 1);
            AA.topLeftCorner(m, m) = MatrixXd(diaglamyi.matrix().asDiagonal()) +
                                     GG * diagx.inverse().matrix().asDiagonal() * GG.transpose();
            AA.topRightCorner(m, 1) = a;
            AA.bottomLeftCorner(1, m) = a.transpose();
            AA(m, m) = -p.zet / p.z;
            VectorXd bb(m + 1);
            bb.head(m) = dellam.matrix() + (dely / diagy).matrix() - GG * (delx / diagx).matrix();
            bb[m] = delz;
            const VectorXd sol = AA.partialPivLu().solve(bb);
            const VectorXd dlam = sol.head(m);
            const double dz = sol[m];
            const ArrayXd dx = -delx / diagx - (GG.transpose() * dlam).array() / diagx;
            const ArrayXd dy = -dely / diagy + dlam.array() / diagy;
            const ArrayXd dxsi = -p.xsi.array() + epsi / xa - p.xsi.array() * dx / xa;
            const ArrayXd deta = -p.eta.array() + epsi / bx + p.eta.array() * dx / bx;
            const ArrayXd dmu = -p.mu.array() + epsi / p.y.array() - p.mu.array() * dy / p.y.array();
            const double dzet = -p.zet + epsi / p.z - p.zet * dz / p.z;
            const ArrayXd ds = -p.s.array() + epsi / p.lam.array() - p.s.array() * dlam.array() / p.lam.array();

            double stm = std::max({max_ratio(dy, p.y.array()), -1.01 * dz / p.z, max_ratio(dlam.array(), p.lam.array()),
                                   max_ratio(dxsi, p.xsi.array()), max_ratio(deta, p.eta.array()),
                                   max_ratio(dmu, p.mu.array()), -1.01 * dzet / p.zet, max_ratio(ds, p.s.array()),
                                   (-1.01 * dx / xa).maxCoeff(), (1.01 * dx / bx).maxCoeff(), 1.0});
            double step = 1.0 / stm;

            const Point old = p;
            double resnew = 2.0 * resnorm;
            for (int ls = 0; ls < kLineSearchBudget && !(resnew <= resnorm); ++ls) {
                p.x = strictly_inside(old.x + step * dx.matrix(), sp);
                p.y = old.y + step * dy.matrix();
                p.z = old.z + step * dz;
                p.lam = old.lam + step * dlam;
                p.xsi = old.xsi + step * dxsi.matrix();
                p.eta = old.eta + step * deta.matrix();
                p.mu = old.mu + step * dmu.matrix();
                p.zet = old.zet + step * dzet;
                p.s = old.s + step * ds.matrix();
                res = kkt_residual(sp, cfg, p, epsi, &mag);
                resnew = merit(res, mag);
                step *= 0.5;
            }
            if (!std::isfinite(resnew)) {
                // No finite trial point along this direction: keep the last
                // good iterate and give up on this barrier level.
                p = old;
                res = kkt_residual(sp, cfg, p, epsi, &mag);
                resmax = excess_residual(res, mag);
                break;
            }
            resnorm = resnew;
            resmax = excess_residual(res, mag);
        }
        out.newton_steps += steps;
        out.residual = resmax;
        // Intermediate levels only steer the path; a level that runs out of
        // Newton steps is picked up by the next one. The last level decides.
        out.converged = resmax <= 0.9 * epsi && p.x.allFinite();
        epsi *= 0.1;
    }
    out.x = p.x;
    out.y = p.y;
    out.z = p.z;
    out.lam = p.lam;
    return out;
}

StepInfo mma_step(MmaState& s, const OptimizerConfig& cfg, const Response& r) {
    ++s.iter;
    update_asymptotes(s, cfg);
    const VectorXd raa = VectorXd::Constant(s.m, cfg.raa0);
    StepInfo info;
    Subproblem sp;
    const SubproblemSolution sol =
        solve_with_retry(s, cfg, [&] { return build(s, cfg, r, cfg.raa0, raa, false); }, sp, info);
    advance(s, info.rejected ? s.x : sol.x);
    return info;
}

StepInfo gcmma_step(MmaState& s, const OptimizerConfig& cfg, Response& current, const Evaluator& eval) {
    ++s.iter;
    const VectorXd span = ranges(s);
    const double n = static_cast<double>(s.x.size());
    s.raa0 = std::max(kRaaFloor, 0.1 / n * current.df0.cwiseAbs().dot(span));
    s.raa = (0.1 / n * (current.dg.cwiseAbs() * span)).cwiseMax(kRaaFloor);
    update_asymptotes(s, cfg);

    StepInfo info;
    auto make = [&] { return build(s, cfg, current, s.raa0, s.raa, true); };
    Subproblem sp;
    SubproblemSolution sol = solve_with_retry(s, cfg, make, sp, info);
    sol.x = in_box(s, sol.x);
    if (info.rejected) {
        advance(s, s.x);
        return info;
    }
    auto [f0app, fapp] = approximation(sp, sol.x);
    Response trial = eval(sol.x);
    info.conservative = is_conservative(f0app, fapp, trial, cfg.epsimin);
    while (!info.conservative && info.inner_iterations < cfg.maxinnerit) {
        ++info.inner_iterations;
        raa_update(s, sp, sol.x, f0app, fapp, trial, cfg.epsimin);
        StepInfo retry;
        const SubproblemSolution next = solve_with_retry(s, cfg, make, sp, retry);
        if (retry.rejected) {
            info.converged = false;
            break;
        }
        info.retried = info.retried || retry.retried;
        sol = next;
        sol.x = in_box(s, sol.x);
        std::tie(f0app, fapp) = approximation(sp, sol.x);
        trial = eval(sol.x);
        info.conservative = is_conservative(f0app, fapp, trial, cfg.epsimin);
    }
    advance(s, sol.x);
    current = std::move(trial);
    return info;
}

}  // namespace sogym
