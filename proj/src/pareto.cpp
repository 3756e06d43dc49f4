#include "fracvar/pareto.hpp"

#include <fmt/format.h>

#include <cmath>
#include <exception>
#include <numeric>

#include "fracvar/error.hpp"

namespace fracvar {
namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

void lattice(int d, int m, int left, std::vector<int>& current, std::vector<WeightVector>& out) {
    if (static_cast<int>(current.size()) == d - 1) {
        current.push_back(left);
        std::vector<double> w;
        for (int k : current) {
            w.push_back(static_cast<double>(k) / m);
        }
        out.emplace_back(std::move(w));
        current.pop_back();
        return;
    }
    for (int k = left; k >= 0; --k) {
        current.push_back(k);
        lattice(d, m, left - k, current, out);
        current.pop_back();
    }
}

void require_multiobjective(const ProblemSpec& problem) {
    if (problem.n_objectives() < 2) {
        throw PreconditionError(fmt::format("needs d >= 2 objectives, got {}", problem.n_objectives()));
    }
}

}  // namespace

WeightVector::WeightVector(std::vector<double> w) : w_(std::move(w)) {
    if (w_.empty()) {
        throw PreconditionError("WeightVector: empty");
    }
    double sum = 0.0;
    for (double v : w_) {
        if (!std::isfinite(v) || v < 0.0) {
            throw PreconditionError(fmt::format("WeightVector: entries must be finite and >= 0, got {}", v));
        }
        sum += v;
    }
    if (!(sum > 0.0)) {
        throw PreconditionError("WeightVector: weights sum to zero");
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        for (double& v : w_) {
            v /= sum;
        }
    }
}

bool WeightVector::strictly_positive() const {
    for (double v : w_) {
        if (!(v > 0.0)) {
            return false;
        }
    }
    return true;
}

std::vector<WeightVector> weight_grid(int d, int m) {
    if (d < 2 || m < 1) {
        throw PreconditionError(fmt::format("weight_grid: need d >= 2 and M >= 1, got d={}, M={}", d, m));
    }
    std::vector<WeightVector> out;
    if (m == 1) {
        std::vector<double> w(sz(d), 0.0);
        w[0] = 1.0;
        out.emplace_back(std::move(w));
        return out;
    }
    if (d == 2) {
        for (int k = 0; k < m; ++k) {
            const double w1 = static_cast<double>(k) / (m - 1);
            out.emplace_back(std::vector<double>{w1, 1.0 - w1});
        }
        return out;
    }
    std::vector<int> current;
    lattice(d, m - 1, m - 1, current, out);
    return out;
}

LagrangianExpr weighted_objective(const ProblemSpec& problem, const WeightVector& w) {
    require_multiobjective(problem);
    if (w.size() != problem.n_objectives()) {
        throw DimensionError(fmt::format("weighted_objective: {} weights for {} objectives", w.size(),
                                         problem.n_objectives()));
    }
    return LagrangianExpr::weighted_sum(problem.objectives, w.values());
}

std::vector<double> objective_values(const ProblemSpec& problem, const SolveContext& ctx, const Trajectory& traj) {
    std::vector<double> out;
    for (const auto& l : problem.objectives) {
        out.push_back(DiscreteObjective(l, ctx.operators()).value(traj));
    }
    return out;
}

std::vector<ParetoPoint> pareto_sweep(const ProblemSpec& problem, const std::vector<WeightVector>& weights,
                                      const Grid& grid, const SolveOptions& opts) {
    const SolveContext ctx(problem, grid);
    return pareto_sweep(problem, weights, ctx, opts);
}

std::vector<ParetoPoint> pareto_sweep(const ProblemSpec& problem, const std::vector<WeightVector>& weights,
                                      const SolveContext& ctx, const SolveOptions& opts) {
    require_multiobjective(problem);
    if (weights.empty()) {
        throw PreconditionError("pareto_sweep: empty weight list");
    }
    std::vector<LagrangianExpr> scalarized;
    for (const auto& w : weights) {
        scalarized.push_back(weighted_objective(problem, w));
    }
    const int count = static_cast<int>(weights.size());
    std::vector<SolveResult> results(weights.size());
    std::vector<std::exception_ptr> errors(weights.size());
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < count; ++k) {
        try {
            results[sz(k)] = solve(problem.with_objective(scalarized[sz(k)]), ctx, opts);
        } catch (...) {
            errors[sz(k)] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    std::vector<ParetoPoint> out;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        std::vector<double> values = objective_values(problem, ctx, results[k].trajectory);
        out.push_back({weights[k], std::move(values), std::move(results[k])});
    }
    return out;
}

std::vector<bool> nondominated_mask(const std::vector<std::vector<double>>& objectives, double tol) {
    const std::size_t n = objectives.size();
    std::vector<bool> keep(n, true);
    for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t z = 0; z < n && keep[y]; ++z) {
            if (z == y) {
                continue;
            }
            const auto& jz = objectives[z];
            const auto& jy = objectives[y];
            if (jz.size() != jy.size()) {
                throw DimensionError("dominance_filter: points disagree on the objective count");
            }
            bool no_worse = true;
            bool better = false;
            for (std::size_t i = 0; i < jy.size(); ++i) {
                no_worse = no_worse && jz[i] <= jy[i] + tol;
                better = better || jz[i] < jy[i] - tol;
            }
            if (no_worse && better) {
                keep[y] = false;
            }
        }
    }
    return keep;
}

std::vector<ParetoPoint> dominance_filter(const std::vector<ParetoPoint>& points, double tol) {
    std::vector<std::vector<double>> values;
    for (const auto& p : points) {
        values.push_back(p.objectives);
    }
    const std::vector<bool> keep = nondominated_mask(values, tol);
    std::vector<ParetoPoint> out;
    for (std::size_t k = 0; k < points.size(); ++k) {
        if (keep[k]) {
            out.push_back(points[k]);
        }
    }
    return out;
}

EpsilonReport epsilon_constraint_check(const ProblemSpec& problem, const ParetoPoint& candidate, int i,
                                       const Grid& grid, const SolveOptions& opts) {
    const SolveContext ctx(problem, grid);
    return epsilon_constraint_check(problem, candidate, i, ctx, opts);
}

EpsilonReport epsilon_constraint_check(const ProblemSpec& problem, const ParetoPoint& candidate, int i,
                                       const SolveContext& ctx, const SolveOptions& opts) {
    require_multiobjective(problem);
    const int d = problem.n_objectives();
    if (i < 0 || i >= d) {
        throw PreconditionError(fmt::format("epsilon_constraint_check: objective index {} out of range", i));
    }
    if (!(candidate.result.trajectory.grid() == ctx.grid())) {
        throw PreconditionError("epsilon_constraint_check: candidate was solved on a different grid");
    }
    const std::vector<double> bound = objective_values(problem, ctx, candidate.result.trajectory);

    // Targets are tightened by the feasibility tolerance so an accepted solve satisfies
    // the candidate's own bounds exactly.
    std::vector<double> target(bound);
    for (double& t : target) {
        t -= opts.constraint_tol;
    }

    EpsilonReport out;
    for (int j = 0; j < d; ++j) {
        if (j == i) {
            continue;
        }
        const SolveResult alone = solve(problem.with_objective(problem.objectives[sz(j)]), ctx, opts);
        if (alone.converged && alone.constraint_violation <= opts.constraint_tol && alone.objective > target[sz(j)]) {
            out.converged = true;
            out.unattainable = true;
            out.objectives = objective_values(problem, ctx, alone.trajectory);
            return out;
        }
    }

    ProblemSpec scalar = problem.with_objective(problem.objectives[sz(i)]);
    for (int j = 0; j < d; ++j) {
        if (j != i) {
            scalar.constraints.push_back({ConstraintKind::IsoIneq, problem.objectives[sz(j)], target[sz(j)]});
        }
    }
    const SolveResult r = solve_isoperimetric(scalar, ctx, opts);

    out.converged = r.converged;
    out.objectives = objective_values(problem, ctx, r.trajectory);
    bool feasible = true;
    for (int j = 0; j < d; ++j) {
        if (j != i && out.objectives[sz(j)] > bound[sz(j)]) {
            feasible = false;
        }
    }
    for (const auto& c : problem.constraints) {
        const double g = DiscreteObjective(c.integrand, ctx.operators()).value(r.trajectory);
        const double gap = g - c.target;
        if (is_inequality(c.kind) ? gap > opts.constraint_tol : std::abs(gap) > opts.constraint_tol) {
            feasible = false;
        }
    }
    if (feasible) {
        out.improvement = bound[sz(i)] - out.objectives[sz(i)];
        out.improved = out.improvement > 10.0 * opts.constraint_tol;
    }
    return out;
}

}  // namespace fracvar
