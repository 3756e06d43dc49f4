#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "fracvar/fracops.hpp"
#include "fracvar/problem.hpp"

namespace fracvar {

struct SolveOptions {
    double grad_tol = 1e-8;
    int max_iters = 5000;
    double al_penalty_init = 10.0;
    double al_penalty_growth = 4.0;
    int al_outer_iters = 20;
    double constraint_tol = 1e-8;
    /// Replace exact partials by central differences where the expression cannot be
    /// differentiated (mlf with a varying order).
    bool fd_fallback = false;

    void validate() const;
};

struct SolveResult {
    Trajectory trajectory;
    /// Isoperimetric multipliers. Equality constraints use F = L - lambda G; inequality
    /// constraints use F = L + lambda G with lambda >= 0.
    std::vector<double> multipliers;
    std::vector<double> constraint_values;
    double objective = 0.0;
    double constraint_violation = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    int outer_iterations = 0;
    bool converged = false;
};

/// Combined Caputo matrix of every component on one grid. Components with equal orders
/// share a matrix.
class OperatorSet {
public:
    OperatorSet(const Grid& grid, const FracOrders& orders);

    const Grid& grid() const noexcept { return grid_; }
    const FracOrders& orders() const noexcept { return orders_; }
    int components() const noexcept { return orders_.components(); }
    const OperatorMatrix& op(int i) const { return *ops_.at(static_cast<std::size_t>(i)); }
    std::shared_ptr<const OperatorMatrix> shared_op(int i) const { return ops_.at(static_cast<std::size_t>(i)); }

    /// v_i = op(i) y_i for every component.
    Trajectory apply(const Trajectory& y) const;

private:
    Grid grid_;
    FracOrders orders_;
    std::vector<std::shared_ptr<const OperatorMatrix>> ops_;
};

/// Which node values are optimization variables: interior nodes always, endpoints when
/// Free or UpperBounded. Variables are ordered by component, then node.
class FreeLayout {
public:
    FreeLayout(const Grid& grid, const BoundarySpec& boundary);

    int dimension() const noexcept { return static_cast<int>(entries_.size()); }
    int components() const noexcept { return components_; }
    const std::vector<int>& free_nodes(int comp) const { return nodes_.at(static_cast<std::size_t>(comp)); }

    std::vector<double> upper() const;
    /// Trapezoid weight of each variable's node.
    std::vector<double> scale() const;

    /// Straight line per component through the boundary data; a Free end takes the
    /// value of the opposite end.
    Trajectory initial() const;

    void scatter(std::span<const double> z, Trajectory& full) const;
    void gather(const Trajectory& full, std::span<double> z) const;

private:
    struct Entry {
        int comp;
        int node;
        double upper;
    };
    Grid grid_;
    BoundarySpec boundary_;
    int components_ = 0;
    std::vector<Entry> entries_;
    std::vector<std::vector<int>> nodes_;
};

/// J(y) = trapezoid sum of L(x_k, y_k, (M y)_k) with its exact gradient
/// dJ/dy_i = q .* L_{y_i} + M_i^T (q .* L_{v_i}).
class DiscreteObjective {
public:
    DiscreteObjective(LagrangianExpr lagrangian, std::shared_ptr<const OperatorSet> ops,
                      std::vector<double> params = {}, bool fd_fallback = false);

    const LagrangianExpr& lagrangian() const noexcept { return lagrangian_; }
    const OperatorSet& operators() const noexcept { return *ops_; }

    double value(const Trajectory& y) const;
    /// Writes dJ/dy for every node (free or not) into grad.
    double value_and_gradient(const Trajectory& y, Trajectory& grad) const;

    /// Integrand samples and slot partials along y (v computed here).
    struct Samples {
        std::vector<double> values;
        Trajectory dy;
        Trajectory dv;
    };
    Samples sample(const Trajectory& y, const Trajectory& v) const;

private:
    LagrangianExpr lagrangian_;
    std::shared_ptr<const OperatorSet> ops_;
    std::vector<double> params_;
    bool fd_fallback_;
};

DiscreteObjective discretize_objective(const ProblemSpec& problem, int objective_index, const Grid& grid);

/// Operators, variable layout and the factored metric for repeated solves of problems
/// that share interval, orders and boundary data. Safe to share across threads.
class SolveContext {
public:
    SolveContext(const ProblemSpec& problem, const Grid& grid);

    const Grid& grid() const noexcept { return ops_->grid(); }
    std::shared_ptr<const OperatorSet> operators() const noexcept { return ops_; }
    const FreeLayout& layout() const noexcept { return layout_; }

    /// out = P^{-1} in with P = blockdiag(M_F^T Q M_F + Q_F); factored on first use.
    void precondition(std::span<const double> in, std::span<double> out) const;

private:
    struct Block;
    void build() const;

    std::shared_ptr<const OperatorSet> ops_;
    FreeLayout layout_;
    mutable std::once_flag once_;
    mutable std::vector<std::shared_ptr<const Block>> blocks_;
};

/// Minimizes the single objective of an unconstrained problem.
SolveResult solve_basic(const ProblemSpec& problem, const Grid& grid, const SolveOptions& opts);
SolveResult solve_basic(const ProblemSpec& problem, const SolveContext& ctx, const SolveOptions& opts);

/// Augmented Lagrangian over isoperimetric constraints, inner solves as in solve_basic.
SolveResult solve_isoperimetric(const ProblemSpec& problem, const Grid& grid, const SolveOptions& opts);
SolveResult solve_isoperimetric(const ProblemSpec& problem, const SolveContext& ctx, const SolveOptions& opts);

/// Dispatches on the constraint list. Pointwise constraints are rejected.
SolveResult solve(const ProblemSpec& problem, const SolveContext& ctx, const SolveOptions& opts);

}  // namespace fracvar
