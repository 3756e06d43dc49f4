#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fracvar {

/// Returns f(z) and writes the gradient into g.
using ObjectiveFn = std::function<double(std::span<const double> z, std::span<double> g)>;

/// out = P^{-1} in for a fixed symmetric positive definite metric P.
using PreconditionerFn = std::function<void(std::span<const double> in, std::span<double> out)>;

struct LbfgsOptions {
    int max_iters = 5000;
    double grad_tol = 1e-8;
    int memory = 12;
    double armijo = 1e-4;
    int max_backtracks = 60;
};

struct LbfgsResult {
    std::vector<double> z;
    double value = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Projected limited-memory BFGS for min f(z) subject to z <= upper (componentwise,
/// +inf for unbounded entries), with backtracking Armijo search along the projection arc.
///
/// The gradient norm is max_k |pg_k| / scale_k where pg is the projected gradient, so a
/// caller can measure it in a grid-independent metric. Accepted iterates never increase f
/// by more than the evaluation noise allowance 1e-13 * (1 + |f|).
class ProjectedLbfgs {
public:
    ProjectedLbfgs(LbfgsOptions options, std::vector<double> upper, std::vector<double> scale,
                   PreconditionerFn precondition = {});

    LbfgsResult minimize(const ObjectiveFn& f, std::vector<double> z0) const;

    /// Called after every accepted step with (iteration, value).
    std::function<void(int, double)> on_accept;

private:
    double projected_norm(std::span<const double> z, std::span<const double> g) const;

    LbfgsOptions options_;
    std::vector<double> upper_;
    std::vector<double> scale_;
    PreconditionerFn precondition_;
};

}  // namespace fracvar
