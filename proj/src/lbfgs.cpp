#include "fracvar/lbfgs.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <deque>

#include "fracvar/error.hpp"

namespace fracvar {
namespace {

constexpr double kNoise = 1e-13;

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

struct Pair {
    std::vector<double> s;
    std::vector<double> y;
    double rho;
};

}  // namespace

ProjectedLbfgs::ProjectedLbfgs(LbfgsOptions options, std::vector<double> upper, std::vector<double> scale,
                               PreconditionerFn precondition)
    : options_(options), upper_(std::move(upper)), scale_(std::move(scale)), precondition_(std::move(precondition)) {
    if (upper_.size() != scale_.size()) {
        throw DimensionError("ProjectedLbfgs: bound and scale vectors differ in length");
    }
    if (options_.memory < 1 || options_.max_iters < 0 || !(options_.grad_tol > 0.0)) {
        throw PreconditionError("ProjectedLbfgs: invalid options");
    }
}

double ProjectedLbfgs::projected_norm(std::span<const double> z, std::span<const double> g) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        // z - P(z - g)
        const double pg = z[i] - std::min(z[i] - g[i], upper_[i]);
        worst = std::max(worst, std::abs(pg) / scale_[i]);
    }
    return worst;
}

LbfgsResult ProjectedLbfgs::minimize(const ObjectiveFn& f, std::vector<double> z0) const {
    const std::size_t m = upper_.size();
    if (z0.size() != m) {
        throw DimensionError("ProjectedLbfgs: start vector has the wrong length");
    }
    LbfgsResult out;
    std::vector<double> z = std::move(z0);
    for (std::size_t i = 0; i < m; ++i) {
        z[i] = std::min(z[i], upper_[i]);
    }
    std::vector<double> g(m);
    double fz = f(z, g);

    std::deque<Pair> history;
    std::vector<double> d(m), gf(m), zt(m), gt(m), tmp(m);
    std::vector<char> active(m, 0), previous(m, 0);
    std::vector<double> alpha_buf;

    // P^{-1} restricted to the free subspace through a Schur complement on the few
    // active coordinates: y = P^{-1}x - W S^{-1} W^T x with W = P^{-1}E, S = E^T W.
    std::vector<std::size_t> act;
    std::vector<std::vector<double>> w_cols;
    Eigen::MatrixXd schur;
    auto refresh_schur = [&] {
        act.clear();
        w_cols.clear();
        for (std::size_t i = 0; i < m; ++i) {
            if (active[i]) {
                act.push_back(i);
            }
        }
        if (!precondition_ || act.empty()) {
            return;
        }
        std::vector<double> e(m, 0.0);
        for (std::size_t c : act) {
            e[c] = 1.0;
            w_cols.emplace_back(m);
            precondition_(e, w_cols.back());
            e[c] = 0.0;
        }
        const auto k = static_cast<Eigen::Index>(act.size());
        schur.resize(k, k);
        for (Eigen::Index r = 0; r < k; ++r) {
            for (Eigen::Index c = 0; c < k; ++c) {
                schur(r, c) = w_cols[static_cast<std::size_t>(c)][act[static_cast<std::size_t>(r)]];
            }
        }
    };
    auto apply_h0 = [&](std::span<const double> in, std::span<double> res, double theta) {
        if (precondition_) {
            precondition_(in, res);
            if (!act.empty()) {
                Eigen::VectorXd rhs(static_cast<Eigen::Index>(act.size()));
                for (std::size_t r = 0; r < act.size(); ++r) {
                    rhs(static_cast<Eigen::Index>(r)) = res[act[r]];
                }
                const Eigen::VectorXd coef = schur.ldlt().solve(rhs);
                for (std::size_t c = 0; c < act.size(); ++c) {
                    for (std::size_t i = 0; i < m; ++i) {
                        res[i] -= coef(static_cast<Eigen::Index>(c)) * w_cols[c][i];
                    }
                }
            }
        } else {
            std::copy(in.begin(), in.end(), res.begin());
        }
        for (std::size_t i = 0; i < m; ++i) {
            res[i] = active[i] ? 0.0 : theta * res[i];
        }
    };

    int iter = 0;
    for (;; ++iter) {
        out.grad_norm = projected_norm(z, g);
        if (out.grad_norm <= options_.grad_tol) {
            out.converged = true;
            break;
        }
        if (iter >= options_.max_iters) {
            break;
        }
        for (std::size_t i = 0; i < m; ++i) {
            active[i] = (z[i] >= upper_[i] && g[i] < 0.0) ? 1 : 0;
            gf[i] = active[i] ? 0.0 : g[i];
        }
        if (iter == 0 || active != previous) {
            history.clear();
            refresh_schur();
            previous = active;
        }

        // Two-loop recursion on the free subspace; stored pairs are already masked.
        std::copy(gf.begin(), gf.end(), d.begin());
        alpha_buf.assign(history.size(), 0.0);
        for (std::size_t k = history.size(); k-- > 0;) {
            const Pair& p = history[k];
            alpha_buf[k] = p.rho * dot(p.s, d);
            for (std::size_t i = 0; i < m; ++i) {
                d[i] -= alpha_buf[k] * p.y[i];
            }
        }
        double theta = 1.0;
        if (!history.empty()) {
            const Pair& last = history.back();
            apply_h0(last.y, tmp, 1.0);
            theta = dot(last.s, last.y) / dot(last.y, tmp);
        }
        apply_h0(std::vector<double>(d), d, theta);
        for (std::size_t k = 0; k < history.size(); ++k) {
            const Pair& p = history[k];
            const double beta = p.rho * dot(p.y, d);
            for (std::size_t i = 0; i < m; ++i) {
                d[i] += (alpha_buf[k] - beta) * p.s[i];
            }
        }
        for (std::size_t i = 0; i < m; ++i) {
            d[i] = active[i] ? 0.0 : -d[i];
        }
        if (!(dot(d, gf) < 0.0)) {
            history.clear();
            apply_h0(gf, d, 1.0);
            for (std::size_t i = 0; i < m; ++i) {
                d[i] = -d[i];
            }
            if (!(dot(d, gf) < 0.0)) {
                for (std::size_t i = 0; i < m; ++i) {
                    d[i] = -gf[i];
                }
            }
        }

        // Backtracking along the projection arc.
        bool accepted = false;
        double ft = fz;
        double t = 1.0;
        for (int bt = 0; bt < options_.max_backtracks; ++bt, t *= 0.5) {
            for (std::size_t i = 0; i < m; ++i) {
                zt[i] = std::min(z[i] + t * d[i], upper_[i]);
                tmp[i] = zt[i] - z[i];
            }
            ft = f(zt, gt);
            if (!std::isfinite(ft)) {
                continue;
            }
            const double decrease = dot(g, tmp);
            if (ft <= fz + options_.armijo * decrease) {
                accepted = true;
                break;
            }
            // Once the change in f is at rounding level, measure it by the trapezoid
            // rule on the directional derivative instead (exact for quadratics).
            const double noise = kNoise * (1.0 + std::abs(fz));
            if (std::abs(ft - fz) <= noise) {
                const double estimate = 0.5 * (decrease + dot(gt, tmp));
                if (estimate <= options_.armijo * decrease) {
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted) {
            if (history.empty()) {
                break;
            }
            history.clear();
            continue;
        }

        Pair p{std::vector<double>(m), std::vector<double>(m), 0.0};
        for (std::size_t i = 0; i < m; ++i) {
            p.s[i] = active[i] ? 0.0 : zt[i] - z[i];
            p.y[i] = active[i] ? 0.0 : gt[i] - g[i];
        }
        const double sy = dot(p.s, p.y);
        if (sy > 1e-12 * std::sqrt(dot(p.s, p.s) * dot(p.y, p.y)) && sy > 0.0) {
            p.rho = 1.0 / sy;
            history.push_back(std::move(p));
            if (static_cast<int>(history.size()) > options_.memory) {
                history.pop_front();
            }
        }
        std::swap(z, zt);
        std::swap(g, gt);
        fz = ft;
        if (on_accept) {
            on_accept(iter + 1, fz);
        }
    }
    out.iterations = iter;
    out.value = fz;
    out.z = std::move(z);
    return out;
}

}  // namespace fracvar
