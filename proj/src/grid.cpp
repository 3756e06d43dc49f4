#include "fracvar/grid.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "fracvar/error.hpp"

namespace fracvar {

Grid make_grid(double a, double b, int n) {
    if (!(std::isfinite(a) && std::isfinite(b)) || !(b > a)) {
        throw PreconditionError(fmt::format("make_grid: need finite b > a, got [{}, {}]", a, b));
    }
    if (n < kMinGridCells) {
        throw PreconditionError(fmt::format("make_grid: need n >= {}, got {}", kMinGridCells, n));
    }
    Grid g;
    g.a_ = a;
    g.b_ = b;
    g.n_ = n;
    g.h_ = (b - a) / n;
    return g;
}

std::vector<double> Grid::nodes() const {
    std::vector<double> x(static_cast<std::size_t>(size()));
    for (int k = 0; k <= n_; ++k) {
        x[static_cast<std::size_t>(k)] = node(k);
    }
    return x;
}

std::vector<double> Grid::trapezoid_weights() const {
    std::vector<double> q(static_cast<std::size_t>(size()), h_);
    q.front() = 0.5 * h_;
    q.back() = 0.5 * h_;
    return q;
}

FracOrders::FracOrders(std::vector<ComponentOrders> per_component) : orders_(std::move(per_component)) {
    if (orders_.empty()) {
        throw PreconditionError("FracOrders: need at least one component");
    }
    for (auto& o : orders_) {
        if (!(o.alpha > 0.0 && o.alpha < 1.0) || !(o.beta > 0.0 && o.beta < 1.0)) {
            throw PreconditionError(
                fmt::format("FracOrders: alpha and beta must lie in (0, 1), got {} and {}", o.alpha, o.beta));
        }
        if (!(o.gamma >= -1e-12 && o.gamma <= 1.0 + 1e-12)) {
            throw PreconditionError(fmt::format("FracOrders: gamma must lie in [0, 1], got {}", o.gamma));
        }
        o.gamma = std::clamp(o.gamma, 0.0, 1.0);
    }
}

FracOrders FracOrders::uniform(int n_components, double alpha, double beta, double gamma) {
    return FracOrders(std::vector<ComponentOrders>(static_cast<std::size_t>(n_components),
                                                   ComponentOrders{alpha, beta, gamma}));
}

Trajectory::Trajectory(Grid grid, int components)
    : grid_(grid), components_(components),
      values_(static_cast<std::size_t>(components) * static_cast<std::size_t>(grid.size()), 0.0) {
    if (components < 1) {
        throw PreconditionError("Trajectory: need at least one component");
    }
}

Trajectory::Trajectory(Grid grid, int components, std::vector<double> values)
    : grid_(grid), components_(components), values_(std::move(values)) {
    if (components < 1) {
        throw PreconditionError("Trajectory: need at least one component");
    }
    if (values_.size() != static_cast<std::size_t>(components) * static_cast<std::size_t>(grid.size())) {
        throw DimensionError("Trajectory: value count does not match grid and components");
    }
}

std::span<double> Trajectory::component(int i) {
    if (i < 0 || i >= components_) {
        throw DimensionError("Trajectory: component index out of range");
    }
    const auto m = static_cast<std::size_t>(grid_.size());
    return std::span<double>(values_).subspan(static_cast<std::size_t>(i) * m, m);
}

std::span<const double> Trajectory::component(int i) const {
    if (i < 0 || i >= components_) {
        throw DimensionError("Trajectory: component index out of range");
    }
    const auto m = static_cast<std::size_t>(grid_.size());
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(i) * m, m);
}

void Trajectory::require_finite() const {
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw DomainError("Trajectory: non-finite sample");
        }
    }
}

}  // namespace fracvar
