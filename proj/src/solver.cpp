#include "fracvar/solver.hpp"

#include <fmt/format.h>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "fracvar/error.hpp"
#include "fracvar/lbfgs.hpp"

namespace fracvar {
namespace {

constexpr double kPenaltyCap = 1e12;

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

void require_same_interval(const ProblemSpec& problem, const Grid& grid) {
    if (problem.a != grid.a() || problem.b != grid.b()) {
        throw PreconditionError(fmt::format("grid [{}, {}] does not match the problem interval [{}, {}]", grid.a(),
                                            grid.b(), problem.a, problem.b));
    }
}

const LagrangianExpr& single_objective(const ProblemSpec& problem) {
    if (problem.n_objectives() != 1) {
        throw PreconditionError(
            fmt::format("solve: expected one objective, got {}; scalarize first", problem.n_objectives()));
    }
    return problem.objectives.front();
}

LbfgsOptions inner_options(const SolveOptions& opts) {
    LbfgsOptions o;
    o.max_iters = opts.max_iters;
    o.grad_tol = opts.grad_tol;
    return o;
}

}  // namespace

void SolveOptions::validate() const {
    if (!(grad_tol > 0.0) || max_iters <= 0 || !(al_penalty_init > 0.0) || !(al_penalty_growth > 1.0) ||
        al_outer_iters <= 0 || !(constraint_tol > 0.0)) {
        throw PreconditionError("SolveOptions: tolerances and counts must be positive and growth > 1");
    }
}

OperatorSet::OperatorSet(const Grid& grid, const FracOrders& orders) : grid_(grid), orders_(orders) {
    for (int i = 0; i < orders_.components(); ++i) {
        const auto& o = orders_[i];
        std::shared_ptr<const OperatorMatrix> found;
        for (int j = 0; j < i; ++j) {
            const auto& p = orders_[j];
            if (p.alpha == o.alpha && p.beta == o.beta && p.gamma == o.gamma) {
                found = ops_[sz(j)];
                break;
            }
        }
        if (!found) {
            found = std::make_shared<const OperatorMatrix>(combined_caputo(grid_, o.alpha, o.beta, o.gamma));
        }
        ops_.push_back(std::move(found));
    }
}

Trajectory OperatorSet::apply(const Trajectory& y) const {
    if (!(y.grid() == grid_) || y.components() != components()) {
        throw DimensionError("OperatorSet: trajectory does not match grid or component count");
    }
    Trajectory v(grid_, components());
    for (int i = 0; i < components(); ++i) {
        fracvar::apply(op(i), y.component(i), v.component(i));
    }
    return v;
}

FreeLayout::FreeLayout(const Grid& grid, const BoundarySpec& boundary)
    : grid_(grid), boundary_(boundary), components_(boundary.components()) {
    const int n = grid.n();
    nodes_.resize(sz(components_));
    for (int i = 0; i < components_; ++i) {
        const auto& c = boundary[i];
        for (int k = 0; k <= n; ++k) {
            double upper = std::numeric_limits<double>::infinity();
            if (k == 0 || k == n) {
                const EndCondition& e = k == 0 ? c.left : c.right;
                if (e.kind == EndKind::Fixed) {
                    continue;
                }
                upper = e.upper();
            }
            entries_.push_back({i, k, upper});
            nodes_[sz(i)].push_back(k);
        }
    }
}

std::vector<double> FreeLayout::upper() const {
    std::vector<double> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) {
        out.push_back(e.upper);
    }
    return out;
}

std::vector<double> FreeLayout::scale() const {
    const std::vector<double> q = grid_.trapezoid_weights();
    std::vector<double> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) {
        out.push_back(q[sz(e.node)]);
    }
    return out;
}

Trajectory FreeLayout::initial() const {
    Trajectory y(grid_, components_);
    for (int i = 0; i < components_; ++i) {
        const auto& c = boundary_[i];
        double left = c.left.value;
        double right = c.right.value;
        if (c.left.kind == EndKind::Free) {
            left = right;
        }
        if (c.right.kind == EndKind::Free) {
            right = left;
        }
        auto yi = y.component(i);
        const int n = grid_.n();
        for (int k = 0; k <= n; ++k) {
            const double t = static_cast<double>(k) / n;
            yi[sz(k)] = k == n ? right : left + (right - left) * t;
        }
    }
    return y;
}

void FreeLayout::scatter(std::span<const double> z, Trajectory& full) const {
    if (z.size() != entries_.size()) {
        throw DimensionError("FreeLayout: variable vector has the wrong length");
    }
    for (std::size_t e = 0; e < entries_.size(); ++e) {
        full.at(entries_[e].node, entries_[e].comp) = z[e];
    }
}

void FreeLayout::gather(const Trajectory& full, std::span<double> z) const {
    if (z.size() != entries_.size()) {
        throw DimensionError("FreeLayout: variable vector has the wrong length");
    }
    for (std::size_t e = 0; e < entries_.size(); ++e) {
        z[e] = full.at(entries_[e].node, entries_[e].comp);
    }
}

DiscreteObjective::DiscreteObjective(LagrangianExpr lagrangian, std::shared_ptr<const OperatorSet> ops,
                                     std::vector<double> params, bool fd_fallback)
    : lagrangian_(std::move(lagrangian)), ops_(std::move(ops)), params_(std::move(params)), fd_fallback_(fd_fallback) {
    if (lagrangian_.n_components() != ops_->components()) {
        throw DimensionError(fmt::format("DiscreteObjective: integrand has {} components, operators {}",
                                         lagrangian_.n_components(), ops_->components()));
    }
    if (static_cast<int>(params_.size()) != lagrangian_.n_params()) {
        throw DimensionError(fmt::format("DiscreteObjective: integrand takes {} parameters, {} given",
                                         lagrangian_.n_params(), params_.size()));
    }
}

DiscreteObjective::Samples DiscreteObjective::sample(const Trajectory& y, const Trajectory& v) const {
    const Grid& grid = ops_->grid();
    const int n_comp = ops_->components();
    const int m = grid.size();
    Samples s{std::vector<double>(sz(m)), Trajectory(grid, n_comp), Trajectory(grid, n_comp)};
    std::vector<double> args(sz(lagrangian_.arity()));
    std::vector<double> grad(args.size());
    for (std::size_t j = 0; j < params_.size(); ++j) {
        args[sz(lagrangian_.slot_p(static_cast<int>(j)))] = params_[j];
    }
    for (int k = 0; k < m; ++k) {
        args[0] = grid.node(k);
        for (int i = 0; i < n_comp; ++i) {
            args[sz(lagrangian_.slot_y(i))] = y.at(k, i);
            args[sz(lagrangian_.slot_v(i))] = v.at(k, i);
        }
        double value = 0.0;
        try {
            value = lagrangian_.partials(args, grad);
        } catch (const DifferentiationError&) {
            if (!fd_fallback_) {
                throw;
            }
            value = lagrangian_.eval(args);
            for (int i = 0; i < n_comp; ++i) {
                for (int slot : {lagrangian_.slot_y(i), lagrangian_.slot_v(i)}) {
                    const double keep = args[sz(slot)];
                    const double step = 1e-6 * std::max(1.0, std::abs(keep));
                    args[sz(slot)] = keep + step;
                    const double up = lagrangian_.eval(args);
                    args[sz(slot)] = keep - step;
                    const double down = lagrangian_.eval(args);
                    args[sz(slot)] = keep;
                    grad[sz(slot)] = (up - down) / (2.0 * step);
                }
            }
        }
        s.values[sz(k)] = value;
        for (int i = 0; i < n_comp; ++i) {
            s.dy.at(k, i) = grad[sz(lagrangian_.slot_y(i))];
            s.dv.at(k, i) = grad[sz(lagrangian_.slot_v(i))];
        }
    }
    return s;
}

double DiscreteObjective::value(const Trajectory& y) const {
    const Trajectory v = ops_->apply(y);
    const Grid& grid = ops_->grid();
    std::vector<double> args(sz(lagrangian_.arity()));
    for (std::size_t j = 0; j < params_.size(); ++j) {
        args[sz(lagrangian_.slot_p(static_cast<int>(j)))] = params_[j];
    }
    std::vector<double> values(sz(grid.size()));
    for (int k = 0; k < grid.size(); ++k) {
        args[0] = grid.node(k);
        for (int i = 0; i < ops_->components(); ++i) {
            args[sz(lagrangian_.slot_y(i))] = y.at(k, i);
            args[sz(lagrangian_.slot_v(i))] = v.at(k, i);
        }
        values[sz(k)] = lagrangian_.eval(args);
    }
    return trapezoid_quadrature(grid, values);
}

double DiscreteObjective::value_and_gradient(const Trajectory& y, Trajectory& grad) const {
    const Grid& grid = ops_->grid();
    if (!(grad.grid() == grid) || grad.components() != ops_->components()) {
        grad = Trajectory(grid, ops_->components());
    }
    const Trajectory v = ops_->apply(y);
    Samples s = sample(y, v);
    const std::vector<double> q = grid.trapezoid_weights();
    std::vector<double> weighted(q.size());
    for (int i = 0; i < ops_->components(); ++i) {
        const auto dy = s.dy.component(i);
        const auto dv = s.dv.component(i);
        for (std::size_t k = 0; k < q.size(); ++k) {
            weighted[k] = q[k] * dv[k];
        }
        auto gi = grad.component(i);
        apply_transpose(ops_->op(i), weighted, gi);
        for (std::size_t k = 0; k < q.size(); ++k) {
            gi[k] += q[k] * dy[k];
        }
    }
    return trapezoid_quadrature(grid, s.values);
}

DiscreteObjective discretize_objective(const ProblemSpec& problem, int objective_index, const Grid& grid) {
    problem.validate();
    require_same_interval(problem, grid);
    if (objective_index < 0 || objective_index >= problem.n_objectives()) {
        throw PreconditionError(fmt::format("objective index {} out of range", objective_index));
    }
    const auto& expr = problem.objectives[sz(objective_index)];
    if (expr.n_params() != 0) {
        throw PreconditionError("discretize_objective: integrand has unbound parameters");
    }
    return DiscreteObjective(expr, std::make_shared<const OperatorSet>(grid, problem.orders));
}

struct SolveContext::Block {
    int offset = 0;
    int size = 0;
    Eigen::LLT<Eigen::MatrixXd> llt;
};

SolveContext::SolveContext(const ProblemSpec& problem, const Grid& grid)
    : ops_(nullptr), layout_(grid, problem.boundary) {
    problem.validate();
    require_same_interval(problem, grid);
    ops_ = std::make_shared<const OperatorSet>(grid, problem.orders);
}

void SolveContext::build() const {
    const Grid& grid = ops_->grid();
    const std::vector<double> q = grid.trapezoid_weights();
    const int n1 = grid.size();
    int offset = 0;
    blocks_.assign(sz(layout_.components()), nullptr);
    for (int i = 0; i < layout_.components(); ++i) {
        const auto& free = layout_.free_nodes(i);
        const int m = static_cast<int>(free.size());
        std::shared_ptr<const Block> reuse;
        for (int j = 0; j < i; ++j) {
            if (ops_->shared_op(j) == ops_->shared_op(i) && layout_.free_nodes(j) == free) {
                reuse = blocks_[sz(j)];
            }
        }
        auto block = std::make_shared<Block>();
        block->offset = offset;
        block->size = m;
        if (reuse) {
            block->llt = reuse->llt;
        } else {
            const OperatorMatrix& op = ops_->op(i);
            Eigen::MatrixXd at(m, n1);
            for (int c = 0; c < m; ++c) {
                for (int k = 0; k < n1; ++k) {
                    at(c, k) = std::sqrt(q[sz(k)]) * op(k, free[sz(c)]);
                }
            }
            Eigen::MatrixXd p = Eigen::MatrixXd::Zero(m, m);
            for (int c = 0; c < m; ++c) {
                p(c, c) = q[sz(free[sz(c)])];
            }
            p.selfadjointView<Eigen::Lower>().rankUpdate(at);
            block->llt.compute(p);
            if (block->llt.info() != Eigen::Success) {
                throw DomainError("SolveContext: preconditioner is not positive definite");
            }
        }
        offset += m;
        blocks_[sz(i)] = std::move(block);
    }
}

void SolveContext::precondition(std::span<const double> in, std::span<double> out) const {
    std::call_once(once_, [this] { build(); });
    for (const auto& b : blocks_) {
        Eigen::Map<const Eigen::VectorXd> src(in.data() + b->offset, b->size);
        Eigen::Map<Eigen::VectorXd> dst(out.data() + b->offset, b->size);
        dst = b->llt.solve(src);
    }
}

namespace {

struct Functional {
    DiscreteObjective objective;
    double target;
    bool inequality;
};

// Shared machinery for the basic and augmented-Lagrangian solves.
class Minimizer {
public:
    Minimizer(const SolveContext& ctx, const SolveOptions& opts)
        : ctx_(ctx), opts_(opts), y_(ctx.layout().initial()), grad_(ctx.grid(), ctx.layout().components()),
          work_(ctx.grid(), ctx.layout().components()) {}

    LbfgsResult run(const ObjectiveFn& f, std::vector<double> z0) const {
        ProjectedLbfgs lbfgs(inner_options(opts_), ctx_.layout().upper(), ctx_.layout().scale(),
                             [this](std::span<const double> in, std::span<double> out) { ctx_.precondition(in, out); });
        return lbfgs.minimize(f, std::move(z0));
    }

    std::vector<double> start() const {
        std::vector<double> z(sz(ctx_.layout().dimension()));
        ctx_.layout().gather(y_, z);
        return z;
    }

    Trajectory& trajectory(std::span<const double> z) {
        ctx_.layout().scatter(z, y_);
        return y_;
    }

    double projected_norm(std::span<const double> z, std::span<const double> g) const {
        const auto upper = ctx_.layout().upper();
        const auto scale = ctx_.layout().scale();
        double worst = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double pg = z[i] - std::min(z[i] - g[i], upper[i]);
            worst = std::max(worst, std::abs(pg) / scale[i]);
        }
        return worst;
    }

    const SolveContext& ctx_;
    const SolveOptions& opts_;
    Trajectory y_;
    Trajectory grad_;
    Trajectory work_;
};

}  // namespace

SolveResult solve_basic(const ProblemSpec& problem, const Grid& grid, const SolveOptions& opts) {
    const SolveContext ctx(problem, grid);
    return solve_basic(problem, ctx, opts);
}

SolveResult solve_basic(const ProblemSpec& problem, const SolveContext& ctx, const SolveOptions& opts) {
    opts.validate();
    problem.validate();
    if (!problem.constraints.empty()) {
        throw PreconditionError("solve_basic: problem has constraints");
    }
    const DiscreteObjective objective(single_objective(problem), ctx.operators(), {}, opts.fd_fallback);
    Minimizer mz(ctx, opts);
    auto f = [&](std::span<const double> z, std::span<double> g) {
        const double v = objective.value_and_gradient(mz.trajectory(z), mz.grad_);
        ctx.layout().gather(mz.grad_, g);
        return v;
    };
    const LbfgsResult r = mz.run(f, mz.start());

    SolveResult out;
    out.trajectory = mz.trajectory(r.z);
    out.objective = r.value;
    out.grad_norm = r.grad_norm;
    out.iterations = r.iterations;
    out.outer_iterations = 1;
    out.converged = r.converged;
    return out;
}

SolveResult solve_isoperimetric(const ProblemSpec& problem, const Grid& grid, const SolveOptions& opts) {
    const SolveContext ctx(problem, grid);
    return solve_isoperimetric(problem, ctx, opts);
}

SolveResult solve_isoperimetric(const ProblemSpec& problem, const SolveContext& ctx, const SolveOptions& opts) {
    opts.validate();
    problem.validate();
    if (problem.constraints.empty() || problem.has_pointwise()) {
        throw PreconditionError("solve_isoperimetric: needs one or more isoperimetric constraints and no others");
    }
    const DiscreteObjective objective(single_objective(problem), ctx.operators(), {}, opts.fd_fallback);
    std::vector<Functional> cons;
    for (const auto& c : problem.constraints) {
        cons.push_back({DiscreteObjective(c.integrand, ctx.operators(), {}, opts.fd_fallback), c.target,
                        is_inequality(c.kind)});
    }
    const std::size_t r = cons.size();
    std::vector<double> lambda(r, 0.0);
    std::vector<double> values(r, 0.0);
    double rho = opts.al_penalty_init;

    Minimizer mz(ctx, opts);
    Trajectory total(ctx.grid(), ctx.layout().components());

    auto merit = [&](std::span<const double> z, std::span<double> g) {
        const Trajectory& y = mz.trajectory(z);
        double m = objective.value_and_gradient(y, total);
        for (std::size_t j = 0; j < r; ++j) {
            const double gv = cons[j].objective.value_and_gradient(y, mz.work_);
            const double c = gv - cons[j].target;
            double weight = 0.0;
            if (cons[j].inequality) {
                const double t = std::max(0.0, lambda[j] + rho * c);
                m += (t * t - lambda[j] * lambda[j]) / (2.0 * rho);
                weight = t;
            } else {
                m += -lambda[j] * c + 0.5 * rho * c * c;
                weight = -lambda[j] + rho * c;
            }
            for (int i = 0; i < total.components(); ++i) {
                auto dst = total.component(i);
                const auto src = std::as_const(mz.work_).component(i);
                for (std::size_t k = 0; k < dst.size(); ++k) {
                    dst[k] += weight * src[k];
                }
            }
        }
        ctx.layout().gather(total, g);
        return m;
    };

    auto violation_of = [&](const std::vector<double>& vals) {
        double worst = 0.0;
        for (std::size_t j = 0; j < r; ++j) {
            const double c = vals[j] - cons[j].target;
            worst = std::max(worst, cons[j].inequality ? std::max(0.0, c) : std::abs(c));
        }
        return worst;
    };

    SolveResult out;
    std::vector<double> z = mz.start();
    std::vector<double> g(z.size());
    double previous = std::numeric_limits<double>::infinity();
    bool inner_ok = false;
    for (int outer = 0; outer < opts.al_outer_iters; ++outer) {
        const LbfgsResult inner = mz.run(merit, z);
        z = inner.z;
        inner_ok = inner.converged;
        out.iterations += inner.iterations;
        out.outer_iterations = outer + 1;

        const Trajectory& y = mz.trajectory(z);
        for (std::size_t j = 0; j < r; ++j) {
            values[j] = cons[j].objective.value(y);
        }
        const double violation = violation_of(values);
        for (std::size_t j = 0; j < r; ++j) {
            const double c = values[j] - cons[j].target;
            lambda[j] = cons[j].inequality ? std::max(0.0, lambda[j] + rho * c) : lambda[j] - rho * c;
        }
        // With the updated multipliers the Lagrangian gradient equals the merit gradient.
        merit(z, g);
        out.grad_norm = mz.projected_norm(z, g);
        out.constraint_violation = violation;
        if (violation <= opts.constraint_tol && out.grad_norm <= opts.grad_tol && inner_ok) {
            out.converged = true;
            break;
        }
        if (violation > opts.constraint_tol && violation > 0.25 * previous) {
            rho = std::min(rho * opts.al_penalty_growth, kPenaltyCap);
        }
        previous = violation;
    }
    out.trajectory = mz.trajectory(z);
    out.objective = objective.value(out.trajectory);
    out.multipliers = lambda;
    out.constraint_values = values;
    return out;
}

SolveResult solve(const ProblemSpec& problem, const SolveContext& ctx, const SolveOptions& opts) {
    if (problem.has_pointwise()) {
        throw PreconditionError("solve: pointwise constraints are verified, not solved");
    }
    return problem.constraints.empty() ? solve_basic(problem, ctx, opts) : solve_isoperimetric(problem, ctx, opts);
}

}  // namespace fracvar
