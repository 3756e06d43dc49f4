#pragma once

#include <vector>

#include "fracvar/solver.hpp"

namespace fracvar {

/// Nonnegative weights normalized to sum to one.
class WeightVector {
public:
    /// Throws PreconditionError on negative or non-finite entries or a zero sum.
    explicit WeightVector(std::vector<double> w);

    int size() const noexcept { return static_cast<int>(w_.size()); }
    double operator[](int i) const { return w_.at(static_cast<std::size_t>(i)); }
    const std::vector<double>& values() const noexcept { return w_; }
    bool strictly_positive() const;

    bool operator==(const WeightVector& other) const = default;

private:
    std::vector<double> w_;
};

/// d = 2: M weights w1 = k/(M-1), w2 = 1 - w1 (M = 1 gives (1, 0)). d >= 3: the simplex
/// lattice with resolution M - 1.
std::vector<WeightVector> weight_grid(int d, int m);

struct ParetoPoint {
    WeightVector weight;
    /// J^i recomputed from result.trajectory on the shared grid.
    std::vector<double> objectives;
    SolveResult result;
};

/// sum_i w_i L^i.
LagrangianExpr weighted_objective(const ProblemSpec& problem, const WeightVector& w);

/// J^i of a trajectory for every objective.
std::vector<double> objective_values(const ProblemSpec& problem, const SolveContext& ctx, const Trajectory& traj);

/// One solve per weight (in parallel), results in weight order.
std::vector<ParetoPoint> pareto_sweep(const ProblemSpec& problem, const std::vector<WeightVector>& weights,
                                      const Grid& grid, const SolveOptions& opts);
std::vector<ParetoPoint> pareto_sweep(const ProblemSpec& problem, const std::vector<WeightVector>& weights,
                                      const SolveContext& ctx, const SolveOptions& opts);

/// Removes points dominated within the additive tolerance; order is preserved.
std::vector<ParetoPoint> dominance_filter(const std::vector<ParetoPoint>& points, double tol = 1e-8);
/// Mask form: keep[i] is true when point i is not dominated.
std::vector<bool> nondominated_mask(const std::vector<std::vector<double>>& objectives, double tol = 1e-8);

struct EpsilonReport {
    bool improved = false;
    /// J^i(candidate) - J^i(witness) for the best exactly feasible witness (0 if none).
    double improvement = 0.0;
    /// The check reached an answer: the constrained solve converged or a bound was shown
    /// unattainable.
    bool converged = false;
    /// Some bound lies below the minimum of its objective, so no solve was attempted.
    bool unattainable = false;
    /// Objective values of the constrained solution (of the bound-breaking minimizer when
    /// unattainable).
    std::vector<double> objectives;
};

/// Minimizes J^i subject to J^j <= J^j(candidate), j != i. A witness counts only if it
/// satisfies every bound exactly and lowers J^i by more than 10 * constraint_tol. Each
/// J^j is first minimized alone; a bound below that minimum ends the check.
EpsilonReport epsilon_constraint_check(const ProblemSpec& problem, const ParetoPoint& candidate, int i,
                                       const Grid& grid, const SolveOptions& opts);
EpsilonReport epsilon_constraint_check(const ProblemSpec& problem, const ParetoPoint& candidate, int i,
                                       const SolveContext& ctx, const SolveOptions& opts);

}  // namespace fracvar
