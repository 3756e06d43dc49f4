#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fracvar/fracops.hpp"
#include "fracvar/problem.hpp"

namespace fracvar {

/// Per-node parameter values: each entry is either one constant or n+1 node samples.
using ParamSamples = std::vector<std::vector<double>>;

/// Node-wise Euler-Lagrange residual  dL/dy_i + D_dual,i (dL/dv_i)  for each component,
/// with v_i the combined Caputo derivative of y_i. Rows 0 and n are boundary rows where
/// the dual operator is singular; the window helpers below skip them.
Trajectory euler_lagrange_residual(const LagrangianExpr& lagrangian, const FracOrders& orders, const Trajectory& traj,
                                   const ParamSamples& params = {});
Trajectory euler_lagrange_residual(const ProblemSpec& problem, int objective_index, const Trajectory& traj);

/// max |r| over rows 1..n-1.
double interior_max_abs(const Trajectory& residual);
/// max |r| over nodes with lo <= x <= hi, excluding rows 0 and n.
double window_max_abs(const Trajectory& residual, double lo, double hi);

struct TransversalityReport {
    /// Boundary bracket at x = b, extrapolated linearly from nodes n-2 and n-1.
    double residual = 0.0;
    /// (y_l(b) - bound) * residual; 0 for a free endpoint.
    double complementarity = 0.0;
    /// max(0, y_l(b) - bound); 0 for a free endpoint.
    double feasibility = 0.0;
    /// The bracket evaluated at node n itself.
    double node_value = 0.0;
};

/// gamma_l I_right^{1-alpha_l} dL/dv_l - (1-gamma_l) I_left^{1-beta_l} dL/dv_l at x = b.
/// Component l must have a Free or UpperBounded right end.
TransversalityReport transversality_residual(const LagrangianExpr& lagrangian, const FracOrders& orders,
                                             const BoundarySpec& boundary, const Trajectory& traj, int component,
                                             const ParamSamples& params = {});
TransversalityReport transversality_residual(const ProblemSpec& problem, int objective_index, const Trajectory& traj,
                                             int component);

/// Integrand with its parameter values.
struct BoundExpr {
    LagrangianExpr expr;
    std::vector<double> params;

    /// eval at (x, y, v) with the bound parameters appended.
    double eval(double x, std::span<const double> y, std::span<const double> v) const;
    ParamSamples samples() const;
};

/// F = L - sum lambda_j G^j for equality constraints and F = L + sum lambda_j G^j for
/// inequality constraints (lambda_j >= 0), the multipliers occupying new parameter slots.
BoundExpr augment_isoperimetric(const ProblemSpec& problem, int objective_index, std::span<const double> multipliers);

struct MultiplierSet {
    /// One sampled function (n+1 values) per pointwise constraint.
    std::vector<std::vector<double>> functions;
    /// Slack samples for inequality constraints; empty vectors for equality ones.
    std::vector<std::vector<double>> slacks;
};

struct PointwiseReport {
    Trajectory el_residual;
    /// r rows of n+1 samples each.
    std::vector<std::vector<double>> constraint_residual;
    std::vector<std::vector<double>> complementarity;
};

/// Residuals of the multiplier system for pointwise constraints: the E-L residual of
/// F = L + sum lambda_j(x) G^j, the constraint values G^j (+ phi_j^2 for inequalities)
/// and lambda_j phi_j.
PointwiseReport pointwise_system_residual(const ProblemSpec& problem, const Trajectory& traj,
                                          const MultiplierSet& multipliers, int objective_index = 0);

struct ConvexityBox {
    double x_lo = 0.0;
    double x_hi = 1.0;
    std::vector<double> y_lo, y_hi, v_lo, v_hi;

    static ConvexityBox uniform(int n_components, double x_lo, double x_hi, double lo, double hi);
};

struct ConvexityReport {
    int violations = 0;
    /// Smallest f(P+D) - f(P) - grad f(P).D seen (negative when violated).
    double worst_gap = 0.0;
};

/// Samples pairs (P, P + D) in the box at a shared x and checks the joint-convexity
/// gradient inequality in (y, v) with slack 1e-9.
ConvexityReport convexity_certificate(const LagrangianExpr& expr, const ConvexityBox& box, int samples,
                                      std::uint64_t seed = 20240601, std::span<const double> params = {});

struct RegularityReport {
    std::vector<double> matrix;  // r x r, row major: a_kl = dG^k(y; h^l)
    std::vector<double> singular_values;
    int rank = 0;
};

/// Estimates a_kl = dG^k(y; h^l) for isoperimetric constraints with localized bump
/// variations h^l and reports the numerical rank (singular values > 1e-8 max).
RegularityReport regularity_diagnostic(const ProblemSpec& problem, const Trajectory& traj);

}  // namespace fracvar
