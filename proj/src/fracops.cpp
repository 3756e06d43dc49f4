#include "fracvar/fracops.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "fracvar/error.hpp"
#include "fracvar/specfun.hpp"

namespace fracvar {
namespace {

// (m+1)^p - 2 m^p + (m-1)^p, m >= 1.
double second_diff(double p, int m) {
    const double dm = m;
    if (m == 1) {
        return std::pow(2.0, p) - 2.0;
    }
    return std::pow(dm, p) * (std::expm1(p * std::log1p(1.0 / dm)) + std::expm1(p * std::log1p(-1.0 / dm)));
}

// (k-1)^(mu+1) - (k-mu-1) k^mu, k >= 1: weight of f_0 in row k of the product trapezoid rule.
double first_column_weight(double mu, int k) {
    const double dk = k;
    const double p = mu + 1.0;
    return std::pow(dk, p) * (std::expm1(p * std::log1p(-1.0 / dk)) + p / dk);
}

void require_order(double v, bool closed_right, const char* what) {
    const bool ok = closed_right ? (v > 0.0 && v <= 1.0) : (v > 0.0 && v < 1.0);
    if (!ok) {
        throw DomainError(fmt::format("{}: order must lie in (0, 1{}, got {}", what, closed_right ? "]" : ")", v));
    }
}

std::size_t idx(int n1, int k, int j) {
    return static_cast<std::size_t>(k) * static_cast<std::size_t>(n1) + static_cast<std::size_t>(j);
}

// R[k][j] = L[n-k][n-j]: the operator for the mirrored interval.
std::vector<double> reflect(const std::vector<double>& w, int n1) {
    std::vector<double> out(w.size());
    const int n = n1 - 1;
    kernels::parallel::fill_rows(n1, n1, out, [&](int k, std::span<double> row) {
        for (int j = 0; j < n1; ++j) {
            row[static_cast<std::size_t>(j)] = w[idx(n1, n - k, n - j)];
        }
    });
    return out;
}

std::vector<double> left_integral_weights(const Grid& grid, double mu) {
    const int n = grid.n();
    const int n1 = n + 1;
    const double scale = std::pow(grid.h(), mu) / gamma_fn(mu + 2.0);
    std::vector<double> d2(static_cast<std::size_t>(n1), 0.0);
    std::vector<double> first(static_cast<std::size_t>(n1), 0.0);
    for (int m = 1; m <= n; ++m) {
        d2[static_cast<std::size_t>(m)] = scale * second_diff(mu + 1.0, m);
        first[static_cast<std::size_t>(m)] = scale * first_column_weight(mu, m);
    }
    std::vector<double> w(static_cast<std::size_t>(n1) * static_cast<std::size_t>(n1), 0.0);
    kernels::parallel::fill_rows(n1, n1, w, [&](int k, std::span<double> row) {
        if (k == 0) {
            return;
        }
        row[0] = first[static_cast<std::size_t>(k)];
        for (int j = 1; j < k; ++j) {
            row[static_cast<std::size_t>(j)] = d2[static_cast<std::size_t>(k - j)];
        }
        row[static_cast<std::size_t>(k)] = scale;
    });
    return w;
}

std::vector<double> left_caputo_weights(const Grid& grid, double alpha) {
    const int n = grid.n();
    const int n1 = n + 1;
    const double p = 1.0 - alpha;
    const double scale = std::pow(grid.h(), -alpha) / gamma_fn(2.0 - alpha);
    std::vector<double> d2(static_cast<std::size_t>(n1), 0.0);
    for (int m = 1; m <= n; ++m) {
        d2[static_cast<std::size_t>(m)] = scale * second_diff(p, m);
    }
    std::vector<double> w(static_cast<std::size_t>(n1) * static_cast<std::size_t>(n1), 0.0);
    kernels::parallel::fill_rows(n1, n1, w, [&](int k, std::span<double> row) {
        if (k == 0) {
            return;
        }
        row[static_cast<std::size_t>(k)] = scale;
        for (int j = 1; j < k; ++j) {
            row[static_cast<std::size_t>(j)] = d2[static_cast<std::size_t>(k - j)];
        }
        // Column 0 closes the row so constants are annihilated; equal to -scale*b_{k-1}
        // in exact arithmetic. Compensated so the residual row sum is at rounding level.
        double sum = 0.0;
        double carry = 0.0;
        for (int j = k; j >= 1; --j) {
            const double v = row[static_cast<std::size_t>(j)];
            const double t = sum + v;
            carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
            sum = t;
        }
        row[0] = -(sum + carry);
    });
    return w;
}

std::vector<double> left_rl_derivative_weights(const Grid& grid, double alpha) {
    const int n = grid.n();
    const int n1 = n + 1;
    const std::vector<double> integral = left_integral_weights(grid, 1.0 - alpha);
    const double h = grid.h();
    std::vector<double> w(integral.size(), 0.0);
    kernels::parallel::fill_rows(n1, n1, w, [&](int k, std::span<double> row) {
        int lo = k - 1;
        int hi = k + 1;
        double inv = 0.5 / h;
        if (k == 0) {
            lo = 0;
            inv = 1.0 / h;
        } else if (k == n) {
            hi = n;
            inv = 1.0 / h;
        }
        for (int j = 0; j < n1; ++j) {
            row[static_cast<std::size_t>(j)] = (integral[idx(n1, hi, j)] - integral[idx(n1, lo, j)]) * inv;
        }
    });
    return w;
}

std::vector<double> affine_combination(double wl, const std::vector<double>* left, double wr,
                                       const std::vector<double>* right) {
    if (right == nullptr) {
        return *left;
    }
    if (left == nullptr) {
        return *right;
    }
    std::vector<double> out(left->size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = wl * (*left)[i] + wr * (*right)[i];
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    return kernels::serial::dot(a, b);
}

}  // namespace

std::string_view to_string(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::LeftRLI: return "LeftRLI";
        case OperatorKind::RightRLI: return "RightRLI";
        case OperatorKind::LeftRLD: return "LeftRLD";
        case OperatorKind::RightRLD: return "RightRLD";
        case OperatorKind::LeftCaputo: return "LeftCaputo";
        case OperatorKind::RightCaputo: return "RightCaputo";
        case OperatorKind::CombinedCaputo: return "CombinedCaputo";
        case OperatorKind::DualCombinedRL: return "DualCombinedRL";
    }
    return "?";
}

OperatorMatrix OperatorMatrix::from_weights(OperatorKind kind, const Grid& grid, std::vector<double> weights,
                                            double alpha, double beta, double gamma) {
    const auto n1 = static_cast<std::size_t>(grid.size());
    if (weights.size() != n1 * n1) {
        throw DimensionError("OperatorMatrix: weight count does not match the grid");
    }
    OperatorMatrix m;
    m.kind_ = kind;
    m.grid_ = grid;
    m.alpha_ = alpha;
    m.beta_ = beta;
    m.gamma_ = gamma;
    m.weights_ = std::move(weights);
    m.compute_row_ranges();
    return m;
}

void OperatorMatrix::compute_row_ranges() {
    const int n1 = size();
    begin_.assign(static_cast<std::size_t>(n1), 0);
    end_.assign(static_cast<std::size_t>(n1), 0);
    for (int k = 0; k < n1; ++k) {
        const double* row = weights_.data() + idx(n1, k, 0);
        int lo = 0;
        while (lo < n1 && row[lo] == 0.0) {
            ++lo;
        }
        int hi = n1;
        while (hi > lo && row[hi - 1] == 0.0) {
            --hi;
        }
        if (lo == n1) {
            lo = hi = 0;
        }
        begin_[static_cast<std::size_t>(k)] = lo;
        end_[static_cast<std::size_t>(k)] = hi;
    }
}

std::span<const double> OperatorMatrix::row(int k) const {
    if (k < 0 || k >= size()) {
        throw DimensionError("OperatorMatrix: row index out of range");
    }
    return std::span<const double>(weights_).subspan(idx(size(), k, 0), static_cast<std::size_t>(size()));
}

bool OperatorMatrix::is_lower_triangular() const {
    for (int k = 0; k < size(); ++k) {
        if (end_[static_cast<std::size_t>(k)] > k + 1) {
            return false;
        }
    }
    return true;
}

bool OperatorMatrix::is_upper_triangular() const {
    for (int k = 0; k < size(); ++k) {
        const auto kk = static_cast<std::size_t>(k);
        if (end_[kk] > begin_[kk] && begin_[kk] < k) {
            return false;
        }
    }
    return true;
}

OperatorMatrix rl_integral_matrix(const Grid& grid, double mu, Side side) {
    require_order(mu, true, "rl_integral_matrix");
    std::vector<double> w = left_integral_weights(grid, mu);
    if (side == Side::Right) {
        w = reflect(w, grid.size());
    }
    return OperatorMatrix::from_weights(side == Side::Left ? OperatorKind::LeftRLI : OperatorKind::RightRLI, grid,
                                        std::move(w), mu, mu, side == Side::Left ? 1.0 : 0.0);
}

OperatorMatrix caputo_matrix(const Grid& grid, double alpha, Side side) {
    require_order(alpha, false, "caputo_matrix");
    std::vector<double> w = left_caputo_weights(grid, alpha);
    if (side == Side::Right) {
        w = reflect(w, grid.size());
    }
    return OperatorMatrix::from_weights(side == Side::Left ? OperatorKind::LeftCaputo : OperatorKind::RightCaputo,
                                        grid, std::move(w), alpha, alpha, side == Side::Left ? 1.0 : 0.0);
}

OperatorMatrix rl_derivative_matrix(const Grid& grid, double alpha, Side side) {
    require_order(alpha, false, "rl_derivative_matrix");
    // The right operator -d/dx I_right is the mirror image of d/dx I_left.
    std::vector<double> w = left_rl_derivative_weights(grid, alpha);
    if (side == Side::Right) {
        w = reflect(w, grid.size());
    }
    return OperatorMatrix::from_weights(side == Side::Left ? OperatorKind::LeftRLD : OperatorKind::RightRLD, grid,
                                        std::move(w), alpha, alpha, side == Side::Left ? 1.0 : 0.0);
}

OperatorMatrix combined_caputo(const Grid& grid, double alpha, double beta, double gamma) {
    const FracOrders checked({ComponentOrders{alpha, beta, gamma}});
    const ComponentOrders& o = checked[0];
    std::vector<double> left;
    std::vector<double> right;
    if (o.gamma > 0.0) {
        left = left_caputo_weights(grid, o.alpha);
    }
    if (o.gamma < 1.0) {
        right = reflect(left_caputo_weights(grid, o.beta), grid.size());
    }
    auto w = affine_combination(o.gamma, o.gamma > 0.0 ? &left : nullptr, 1.0 - o.gamma,
                                o.gamma < 1.0 ? &right : nullptr);
    return OperatorMatrix::from_weights(OperatorKind::CombinedCaputo, grid, std::move(w), o.alpha, o.beta, o.gamma);
}

OperatorMatrix dual_combined_rl(const Grid& grid, double alpha, double beta, double gamma) {
    const FracOrders checked({ComponentOrders{alpha, beta, gamma}});
    const ComponentOrders& o = checked[0];
    std::vector<double> left;
    std::vector<double> right;
    if (o.gamma < 1.0) {
        left = left_rl_derivative_weights(grid, o.beta);
    }
    if (o.gamma > 0.0) {
        right = reflect(left_rl_derivative_weights(grid, o.alpha), grid.size());
    }
    auto w = affine_combination(1.0 - o.gamma, o.gamma < 1.0 ? &left : nullptr, o.gamma,
                                o.gamma > 0.0 ? &right : nullptr);
    return OperatorMatrix::from_weights(OperatorKind::DualCombinedRL, grid, std::move(w), o.alpha, o.beta, o.gamma);
}

std::vector<double> apply(const OperatorMatrix& op, std::span<const double> samples) {
    std::vector<double> out(static_cast<std::size_t>(op.size()));
    apply(op, samples, out);
    return out;
}

void apply(const OperatorMatrix& op, std::span<const double> samples, std::span<double> out) {
    kernels::parallel::matvec(op.view(), samples, out);
}

void apply_transpose(const OperatorMatrix& op, std::span<const double> samples, std::span<double> out) {
    kernels::parallel::matvec_transpose(op.view(), samples, out);
}

double trapezoid_quadrature(const Grid& grid, std::span<const double> samples) {
    if (static_cast<int>(samples.size()) != grid.size()) {
        throw DimensionError(fmt::format("trapezoid_quadrature: expected {} samples, got {}", grid.size(),
                                         samples.size()));
    }
    double interior = 0.0;
    for (std::size_t k = 1; k + 1 < samples.size(); ++k) {
        interior += samples[k];
    }
    return grid.h() * (0.5 * (samples.front() + samples.back()) + interior);
}

double norm_1inf(const Trajectory& traj, const FracOrders& orders) {
    if (orders.components() != traj.components()) {
        throw DimensionError("norm_1inf: orders and trajectory disagree on the component count");
    }
    const int m = traj.grid().size();
    std::vector<double> y2(static_cast<std::size_t>(m), 0.0);
    std::vector<double> v2(static_cast<std::size_t>(m), 0.0);
    std::vector<double> v(static_cast<std::size_t>(m));
    for (int i = 0; i < traj.components(); ++i) {
        const auto& o = orders[i];
        const OperatorMatrix op = combined_caputo(traj.grid(), o.alpha, o.beta, o.gamma);
        const auto y = traj.component(i);
        apply(op, y, v);
        for (std::size_t k = 0; k < y2.size(); ++k) {
            y2[k] += y[k] * y[k];
            v2[k] += v[k] * v[k];
        }
    }
    return std::sqrt(*std::max_element(y2.begin(), y2.end())) + std::sqrt(*std::max_element(v2.begin(), v2.end()));
}

double check_integration_by_parts(std::span<const double> f, std::span<const double> g, double alpha, double beta,
                                  double gamma, const Grid& grid) {
    const auto m = static_cast<std::size_t>(grid.size());
    if (f.size() != m || g.size() != m) {
        throw DimensionError("check_integration_by_parts: samples do not match the grid");
    }
    const OperatorMatrix caputo = combined_caputo(grid, alpha, beta, gamma);
    const OperatorMatrix dual = dual_combined_rl(grid, alpha, beta, gamma);
    const double gam = caputo.gamma();

    std::vector<double> cf = apply(caputo, f);
    std::vector<double> dg = apply(dual, g);
    for (std::size_t k = 0; k < m; ++k) {
        cf[k] *= g[k];
        dg[k] *= f[k];
    }
    const double lhs = trapezoid_quadrature(grid, cf);
    const double rhs = trapezoid_quadrature(grid, dg);

    const int n = grid.n();
    double boundary = 0.0;
    if (gam > 0.0) {
        const OperatorMatrix right_int = rl_integral_matrix(grid, 1.0 - caputo.alpha(), Side::Right);
        boundary += gam * (f[m - 1] * dot(right_int.row(n), g) - f[0] * dot(right_int.row(0), g));
    }
    if (gam < 1.0) {
        const OperatorMatrix left_int = rl_integral_matrix(grid, 1.0 - caputo.beta(), Side::Left);
        boundary += (1.0 - gam) * (-f[m - 1] * dot(left_int.row(n), g) + f[0] * dot(left_int.row(0), g));
    }
    return std::abs(lhs - boundary - rhs);
}

}  // namespace fracvar
