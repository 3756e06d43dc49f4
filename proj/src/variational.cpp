#include "fracvar/variational.hpp"

#include <fmt/format.h>

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <memory>
#include <limits>
#include <random>
#include <tuple>
#include <utility>

#include "fracvar/error.hpp"
#include "fracvar/solver.hpp"

namespace fracvar {
namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

struct NodePartials {
    Trajectory v;
    Trajectory dy;
    Trajectory dv;
};

void check_params(const LagrangianExpr& expr, const ParamSamples& params, int nodes) {
    if (static_cast<int>(params.size()) != expr.n_params()) {
        throw DimensionError(
            fmt::format("integrand takes {} parameters, {} supplied", expr.n_params(), params.size()));
    }
    for (const auto& p : params) {
        if (p.size() != 1 && static_cast<int>(p.size()) != nodes) {
            throw DimensionError("parameter samples must be a constant or one value per node");
        }
    }
}

void check_traj(const LagrangianExpr& expr, const FracOrders& orders, const Trajectory& traj) {
    if (traj.components() != expr.n_components() || orders.components() != expr.n_components()) {
        throw DimensionError(fmt::format("trajectory has {} components, integrand {}, orders {}", traj.components(),
                                         expr.n_components(), orders.components()));
    }
}

NodePartials node_partials(const LagrangianExpr& expr, const FracOrders& orders, const Trajectory& traj,
                           const ParamSamples& params) {
    check_traj(expr, orders, traj);
    const Grid& grid = traj.grid();
    const int n_comp = traj.components();
    check_params(expr, params, grid.size());
    NodePartials out{Trajectory(grid, n_comp), Trajectory(grid, n_comp), Trajectory(grid, n_comp)};
    for (int i = 0; i < n_comp; ++i) {
        const auto& o = orders[i];
        fracvar::apply(combined_caputo(grid, o.alpha, o.beta, o.gamma), traj.component(i), out.v.component(i));
    }
    std::vector<double> args(sz(expr.arity()));
    std::vector<double> grad(args.size());
    for (int k = 0; k < grid.size(); ++k) {
        args[0] = grid.node(k);
        for (int i = 0; i < n_comp; ++i) {
            args[sz(expr.slot_y(i))] = traj.at(k, i);
            args[sz(expr.slot_v(i))] = out.v.at(k, i);
        }
        for (std::size_t j = 0; j < params.size(); ++j) {
            args[sz(expr.slot_p(static_cast<int>(j)))] = params[j].size() == 1 ? params[j][0] : params[j][sz(k)];
        }
        expr.partials(args, grad);
        for (int i = 0; i < n_comp; ++i) {
            out.dy.at(k, i) = grad[sz(expr.slot_y(i))];
            out.dv.at(k, i) = grad[sz(expr.slot_v(i))];
        }
    }
    return out;
}

const LagrangianExpr& objective_at(const ProblemSpec& problem, int index) {
    if (index < 0 || index >= problem.n_objectives()) {
        throw PreconditionError(fmt::format("objective index {} out of range", index));
    }
    return problem.objectives[sz(index)];
}

void require_grid(const ProblemSpec& problem, const Trajectory& traj) {
    if (traj.grid().a() != problem.a || traj.grid().b() != problem.b) {
        throw DimensionError("trajectory grid does not span the problem interval");
    }
}

}  // namespace

Trajectory euler_lagrange_residual(const LagrangianExpr& lagrangian, const FracOrders& orders, const Trajectory& traj,
                                   const ParamSamples& params) {
    const NodePartials p = node_partials(lagrangian, orders, traj, params);
    const Grid& grid = traj.grid();
    Trajectory out(grid, traj.components());
    std::vector<double> dual(sz(grid.size()));
    for (int i = 0; i < traj.components(); ++i) {
        const auto dv = p.dv.component(i);
        const auto dy = p.dy.component(i);
        auto r = out.component(i);
        const bool v_used = std::any_of(dv.begin(), dv.end(), [](double x) { return x != 0.0; });
        if (v_used) {
            const auto& o = orders[i];
            fracvar::apply(dual_combined_rl(grid, o.alpha, o.beta, o.gamma), dv, dual);
        } else {
            std::fill(dual.begin(), dual.end(), 0.0);
        }
        for (std::size_t k = 0; k < r.size(); ++k) {
            r[k] = dy[k] + dual[k];
        }
    }
    return out;
}

Trajectory euler_lagrange_residual(const ProblemSpec& problem, int objective_index, const Trajectory& traj) {
    require_grid(problem, traj);
    return euler_lagrange_residual(objective_at(problem, objective_index), problem.orders, traj);
}

double interior_max_abs(const Trajectory& residual) {
    const Grid& g = residual.grid();
    return window_max_abs(residual, g.a(), g.b());
}

double window_max_abs(const Trajectory& residual, double lo, double hi) {
    const Grid& g = residual.grid();
    double worst = 0.0;
    for (int k = 1; k < g.n(); ++k) {
        const double x = g.node(k);
        if (x < lo || x > hi) {
            continue;
        }
        for (int i = 0; i < residual.components(); ++i) {
            worst = std::max(worst, std::abs(residual.at(k, i)));
        }
    }
    return worst;
}

TransversalityReport transversality_residual(const LagrangianExpr& lagrangian, const FracOrders& orders,
                                             const BoundarySpec& boundary, const Trajectory& traj, int component,
                                             const ParamSamples& params) {
    if (component < 0 || component >= traj.components() || boundary.components() != traj.components()) {
        throw DimensionError(fmt::format("transversality: component {} out of range", component));
    }
    const EndCondition& end = boundary[component].right;
    if (end.kind == EndKind::Fixed) {
        throw PreconditionError(fmt::format("transversality: component {} is fixed at b", component + 1));
    }
    const NodePartials p = node_partials(lagrangian, orders, traj, params);
    const Grid& grid = traj.grid();
    const auto& o = orders[component];
    const auto dv = p.dv.component(component);
    std::vector<double> bracket(sz(grid.size()), 0.0);
    std::vector<double> part(bracket.size());
    if (o.gamma > 0.0) {
        fracvar::apply(rl_integral_matrix(grid, 1.0 - o.alpha, Side::Right), dv, part);
        for (std::size_t k = 0; k < part.size(); ++k) {
            bracket[k] += o.gamma * part[k];
        }
    }
    if (o.gamma < 1.0) {
        fracvar::apply(rl_integral_matrix(grid, 1.0 - o.beta, Side::Left), dv, part);
        for (std::size_t k = 0; k < part.size(); ++k) {
            bracket[k] -= (1.0 - o.gamma) * part[k];
        }
    }
    const int n = grid.n();
    TransversalityReport out;
    out.residual = 2.0 * bracket[sz(n - 1)] - bracket[sz(n - 2)];
    out.node_value = bracket[sz(n)];
    if (end.kind == EndKind::UpperBounded) {
        const double gap = traj.at(n, component) - end.value;
        out.complementarity = gap * out.residual;
        out.feasibility = std::max(0.0, gap);
    }
    return out;
}

TransversalityReport transversality_residual(const ProblemSpec& problem, int objective_index, const Trajectory& traj,
                                             int component) {
    require_grid(problem, traj);
    return transversality_residual(objective_at(problem, objective_index), problem.orders, problem.boundary, traj,
                                   component);
}

double BoundExpr::eval(double x, std::span<const double> y, std::span<const double> v) const {
    const int n = expr.n_components();
    if (static_cast<int>(y.size()) != n || static_cast<int>(v.size()) != n) {
        throw DimensionError("BoundExpr: wrong number of components");
    }
    std::vector<double> args(sz(expr.arity()));
    args[0] = x;
    for (int i = 0; i < n; ++i) {
        args[sz(expr.slot_y(i))] = y[sz(i)];
        args[sz(expr.slot_v(i))] = v[sz(i)];
    }
    for (std::size_t j = 0; j < params.size(); ++j) {
        args[sz(expr.slot_p(static_cast<int>(j)))] = params[j];
    }
    return expr.eval(args);
}

ParamSamples BoundExpr::samples() const {
    ParamSamples out;
    for (double p : params) {
        out.push_back({p});
    }
    return out;
}

BoundExpr augment_isoperimetric(const ProblemSpec& problem, int objective_index, std::span<const double> multipliers) {
    const LagrangianExpr& base = objective_at(problem, objective_index);
    if (problem.has_pointwise()) {
        throw PreconditionError("augment_isoperimetric: pointwise constraints present");
    }
    if (multipliers.size() != problem.constraints.size()) {
        throw DimensionError(fmt::format("augment_isoperimetric: {} multipliers for {} constraints",
                                         multipliers.size(), problem.constraints.size()));
    }
    if (base.n_params() != 0) {
        throw PreconditionError("augment_isoperimetric: objective already has parameters");
    }
    std::vector<LagrangianExpr> terms;
    std::vector<double> params;
    for (std::size_t j = 0; j < multipliers.size(); ++j) {
        const auto& c = problem.constraints[j];
        terms.push_back(c.integrand);
        params.push_back(is_inequality(c.kind) ? -multipliers[j] : multipliers[j]);
    }
    if (terms.empty()) {
        return {base, {}};
    }
    // Inequality multipliers enter with + sign; folding the sign into the bound value keeps
    // a single F = L - sum p_j G^j tree.
    return {LagrangianExpr::parameter_combination(base, terms, -1.0, 0), params};
}

PointwiseReport pointwise_system_residual(const ProblemSpec& problem, const Trajectory& traj,
                                          const MultiplierSet& multipliers, int objective_index) {
    problem.validate();
    require_grid(problem, traj);
    const LagrangianExpr& base = objective_at(problem, objective_index);
    const int r = problem.n_constraints();
    if (problem.has_isoperimetric()) {
        throw PreconditionError("pointwise_system_residual: isoperimetric constraint present");
    }
    if (r >= problem.n_components()) {
        throw PreconditionError("pointwise_system_residual: needs fewer constraints than components");
    }
    const Grid& grid = traj.grid();
    const auto nodes = sz(grid.size());
    if (static_cast<int>(multipliers.functions.size()) != r) {
        throw DimensionError(fmt::format("{} multiplier functions for {} constraints", multipliers.functions.size(), r));
    }
    for (int j = 0; j < r; ++j) {
        if (multipliers.functions[sz(j)].size() != nodes) {
            throw DimensionError("multiplier function must have one value per node");
        }
        const bool ineq = is_inequality(problem.constraints[sz(j)].kind);
        const bool has_slack = sz(j) < multipliers.slacks.size() && !multipliers.slacks[sz(j)].empty();
        if (ineq && (!has_slack || multipliers.slacks[sz(j)].size() != nodes)) {
            throw DimensionError(fmt::format("inequality constraint {} needs slack samples", j + 1));
        }
        if (!ineq && has_slack) {
            throw PreconditionError(fmt::format("equality constraint {} cannot carry a slack", j + 1));
        }
    }

    std::vector<LagrangianExpr> terms;
    ParamSamples params;
    for (int j = 0; j < r; ++j) {
        terms.push_back(problem.constraints[sz(j)].integrand);
        params.push_back(multipliers.functions[sz(j)]);
    }
    PointwiseReport out;
    const LagrangianExpr f = r == 0 ? base : LagrangianExpr::parameter_combination(base, terms, 1.0, 0);
    out.el_residual = euler_lagrange_residual(f, problem.orders, traj, params);

    Trajectory v(grid, traj.components());
    for (int i = 0; i < traj.components(); ++i) {
        const auto& o = problem.orders[i];
        fracvar::apply(combined_caputo(grid, o.alpha, o.beta, o.gamma), traj.component(i), v.component(i));
    }
    std::vector<double> yk(sz(traj.components())), vk(yk.size());
    for (int j = 0; j < r; ++j) {
        const auto& c = problem.constraints[sz(j)];
        const bool ineq = is_inequality(c.kind);
        const BoundExpr g{c.integrand, {}};
        std::vector<double> cres(nodes), comp(nodes, 0.0);
        for (std::size_t k = 0; k < nodes; ++k) {
            for (int i = 0; i < traj.components(); ++i) {
                yk[sz(i)] = traj.at(static_cast<int>(k), i);
                vk[sz(i)] = v.at(static_cast<int>(k), i);
            }
            cres[k] = g.eval(grid.node(static_cast<int>(k)), yk, vk);
            if (ineq) {
                const double phi = multipliers.slacks[sz(j)][k];
                cres[k] += phi * phi;
                comp[k] = multipliers.functions[sz(j)][k] * phi;
            }
        }
        out.constraint_residual.push_back(std::move(cres));
        out.complementarity.push_back(std::move(comp));
    }
    return out;
}

ConvexityBox ConvexityBox::uniform(int n_components, double x_lo, double x_hi, double lo, double hi) {
    ConvexityBox b;
    b.x_lo = x_lo;
    b.x_hi = x_hi;
    b.y_lo.assign(sz(n_components), lo);
    b.y_hi.assign(sz(n_components), hi);
    b.v_lo.assign(sz(n_components), lo);
    b.v_hi.assign(sz(n_components), hi);
    return b;
}

ConvexityReport convexity_certificate(const LagrangianExpr& expr, const ConvexityBox& box, int samples,
                                      std::uint64_t seed, std::span<const double> params) {
    if (samples < 1) {
        throw PreconditionError("convexity_certificate: samples must be >= 1");
    }
    const int n = expr.n_components();
    for (const auto* v : {&box.y_lo, &box.y_hi, &box.v_lo, &box.v_hi}) {
        if (static_cast<int>(v->size()) != n) {
            throw DimensionError("convexity_certificate: box does not match the component count");
        }
    }
    if (static_cast<int>(params.size()) != expr.n_params()) {
        throw DimensionError("convexity_certificate: wrong number of parameters");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    std::vector<double> p(sz(expr.arity())), q(p.size()), grad(p.size());
    for (std::size_t j = 0; j < params.size(); ++j) {
        p[sz(expr.slot_p(static_cast<int>(j)))] = params[j];
        q[sz(expr.slot_p(static_cast<int>(j)))] = params[j];
    }
    ConvexityReport out;
    out.worst_gap = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        const double x = draw(box.x_lo, box.x_hi);
        p[0] = q[0] = x;
        for (int i = 0; i < n; ++i) {
            for (auto [slot, lo, hi] : {std::tuple{expr.slot_y(i), box.y_lo[sz(i)], box.y_hi[sz(i)]},
                                        std::tuple{expr.slot_v(i), box.v_lo[sz(i)], box.v_hi[sz(i)]}}) {
                p[sz(slot)] = draw(lo, hi);
                q[sz(slot)] = draw(lo, hi);
            }
        }
        const double fp = expr.partials(p, grad);
        const double fq = expr.eval(q);
        double lin = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int slot : {expr.slot_y(i), expr.slot_v(i)}) {
                lin += grad[sz(slot)] * (q[sz(slot)] - p[sz(slot)]);
            }
        }
        const double gap = fq - fp - lin;
        out.worst_gap = std::min(out.worst_gap, gap);
        if (gap < -1e-9) {
            ++out.violations;
        }
    }
    return out;
}

RegularityReport regularity_diagnostic(const ProblemSpec& problem, const Trajectory& traj) {
    problem.validate();
    require_grid(problem, traj);
    if (problem.has_pointwise()) {
        throw PreconditionError("regularity_diagnostic: isoperimetric constraints only");
    }
    const int r = problem.n_constraints();
    RegularityReport out;
    if (r == 0) {
        return out;
    }
    const Grid& grid = traj.grid();
    const int n = grid.n();
    const int n_comp = traj.components();
    auto ops = std::make_shared<const OperatorSet>(grid, problem.orders);

    // Hat-shaped variation l centred at the l-th of r interior points, in component l mod N.
    const int half = std::max(1, n / (2 * (r + 1)));
    std::vector<std::vector<double>> bumps;
    for (int l = 0; l < r; ++l) {
        const int centre = static_cast<int>(std::lround(static_cast<double>(n) * (l + 1) / (r + 1)));
        std::vector<double> h(sz(grid.size()), 0.0);
        for (int k = 1; k < n; ++k) {
            h[sz(k)] = std::max(0.0, 1.0 - std::abs(k - centre) / static_cast<double>(half));
        }
        bumps.push_back(std::move(h));
    }
    Eigen::MatrixXd a(r, r);
    Trajectory grad(grid, n_comp);
    for (int k = 0; k < r; ++k) {
        const DiscreteObjective g(problem.constraints[sz(k)].integrand, ops);
        g.value_and_gradient(traj, grad);
        for (int l = 0; l < r; ++l) {
            const auto gi = std::as_const(grad).component(l % n_comp);
            double s = 0.0;
            for (std::size_t m = 0; m < gi.size(); ++m) {
                s += gi[m] * bumps[sz(l)][m];
            }
            a(k, l) = s;
            out.matrix.push_back(s);
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& sv = svd.singularValues();
    const double top = sv.size() > 0 ? sv(0) : 0.0;
    for (int i = 0; i < sv.size(); ++i) {
        out.singular_values.push_back(sv(i));
        if (sv(i) > 1e-8 * top && sv(i) > 0.0) {
            ++out.rank;
        }
    }
    return out;
}

}  // namespace fracvar
