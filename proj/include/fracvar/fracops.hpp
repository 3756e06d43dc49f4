#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "fracvar/grid.hpp"
#include "fracvar/kernels.hpp"

namespace fracvar {

enum class Side { Left, Right };

enum class OperatorKind {
    LeftRLI,
    RightRLI,
    LeftRLD,
    RightRLD,
    LeftCaputo,
    RightCaputo,
    CombinedCaputo,
    DualCombinedRL,
};

std::string_view to_string(OperatorKind kind);

/// Dense (n+1) x (n+1) matrix realising a discrete fractional operator on grid samples.
///
/// Rows carry their nonzero column range, so one-sided operators cost half a dense
/// product. Immutable after construction.
class OperatorMatrix {
public:
    OperatorKind kind() const noexcept { return kind_; }
    const Grid& grid() const noexcept { return grid_; }
    int size() const noexcept { return grid_.size(); }

    /// Orders the operator was built with. For integrals `alpha` holds mu; for the
    /// combined operators all three are meaningful.
    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }
    double gamma() const noexcept { return gamma_; }

    double operator()(int row, int col) const {
        return weights_[static_cast<std::size_t>(row) * static_cast<std::size_t>(size()) +
                        static_cast<std::size_t>(col)];
    }
    std::span<const double> row(int k) const;
    std::span<const double> weights() const noexcept { return weights_; }
    int row_begin(int k) const { return begin_[static_cast<std::size_t>(k)]; }
    int row_end(int k) const { return end_[static_cast<std::size_t>(k)]; }

    kernels::BandedView view() const noexcept { return {weights_, size(), begin_, end_}; }

    /// Row-range structure checks.
    bool is_lower_triangular() const;
    bool is_upper_triangular() const;

    /// Builds kind/grid/orders metadata around explicit weights (used by the combinators).
    static OperatorMatrix from_weights(OperatorKind kind, const Grid& grid, std::vector<double> weights,
                                       double alpha, double beta, double gamma);

private:
    void compute_row_ranges();

    OperatorKind kind_ = OperatorKind::LeftRLI;
    Grid grid_;
    double alpha_ = 0.0;
    double beta_ = 0.0;
    double gamma_ = 0.0;
    std::vector<double> weights_;
    std::vector<int> begin_;
    std::vector<int> end_;
};

/// Riemann-Liouville fractional integral of order mu in (0, 1] by product trapezoidal
/// weights (exact for piecewise-linear integrands). Row 0 (left) / row n (right) is zero.
OperatorMatrix rl_integral_matrix(const Grid& grid, double mu, Side side);

/// Caputo derivative of order alpha in (0, 1), L1 scheme. Rows sum to zero; row 0
/// (left) / row n (right) is zero.
OperatorMatrix caputo_matrix(const Grid& grid, double alpha, Side side);

/// Riemann-Liouville derivative of order alpha in (0, 1): a difference quotient
/// (central inside, one-sided at the ends) applied to the integral of order 1 - alpha.
/// The right-sided operator carries the leading minus sign.
OperatorMatrix rl_derivative_matrix(const Grid& grid, double alpha, Side side);

/// gamma * leftCaputo(alpha) + (1 - gamma) * rightCaputo(beta).
OperatorMatrix combined_caputo(const Grid& grid, double alpha, double beta, double gamma);

/// (1 - gamma) * leftRLD(beta) + gamma * rightRLD(alpha): the operator that appears after
/// integrating the combined Caputo operator by parts.
OperatorMatrix dual_combined_rl(const Grid& grid, double alpha, double beta, double gamma);

/// Matrix-vector product (OpenMP kernel).
std::vector<double> apply(const OperatorMatrix& op, std::span<const double> samples);
void apply(const OperatorMatrix& op, std::span<const double> samples, std::span<double> out);
/// Transposed product op^T * samples.
void apply_transpose(const OperatorMatrix& op, std::span<const double> samples, std::span<double> out);

/// Composite trapezoid rule.
double trapezoid_quadrature(const Grid& grid, std::span<const double> samples);

/// max_k |y(x_k)| + max_k |D y(x_k)| with D the combined operator per component and |.|
/// the Euclidean norm on R^N.
double norm_1inf(const Trajectory& traj, const FracOrders& orders);

/// Residual of the fractional integration-by-parts identity for the combined operator,
/// assembled from this module's matrices and quadrature:
/// |int g C f - boundary terms - int f D g| with C = combined_caputo and D = dual_combined_rl.
double check_integration_by_parts(std::span<const double> f, std::span<const double> g, double alpha,
                                  double beta, double gamma, const Grid& grid);

}  // namespace fracvar
