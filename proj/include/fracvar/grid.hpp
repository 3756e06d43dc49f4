#pragma once

#include <span>
#include <vector>

namespace fracvar {

/// Uniform partition of [a, b] into n cells (n + 1 nodes).
class Grid {
public:
    Grid() = default;

    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    int n() const noexcept { return n_; }
    int size() const noexcept { return n_ + 1; }
    double h() const noexcept { return h_; }

    /// Node k; node(n) is exactly b.
    double node(int k) const noexcept { return k == n_ ? b_ : a_ + k * h_; }
    std::vector<double> nodes() const;

    /// Composite trapezoid weights: h/2 at the ends, h inside.
    std::vector<double> trapezoid_weights() const;

    bool operator==(const Grid& other) const noexcept {
        return a_ == other.a_ && b_ == other.b_ && n_ == other.n_;
    }

private:
    friend Grid make_grid(double a, double b, int n);
    double a_ = 0.0;
    double b_ = 1.0;
    int n_ = 8;
    double h_ = 0.125;
};

inline constexpr int kMinGridCells = 8;

/// Throws PreconditionError unless b > a and n >= 8.
Grid make_grid(double a, double b, int n);

/// Fractional orders of one trajectory component.
struct ComponentOrders {
    double alpha = 0.5;
    double beta = 0.5;
    double gamma = 1.0;
};

/// Per-component orders. alpha, beta in (0, 1) strictly; gamma in [0, 1], with values
/// within 1e-12 of the interval clamped onto it.
class FracOrders {
public:
    FracOrders() = default;
    explicit FracOrders(std::vector<ComponentOrders> per_component);
    /// The same orders for each of n components.
    static FracOrders uniform(int n_components, double alpha, double beta, double gamma);

    int components() const noexcept { return static_cast<int>(orders_.size()); }
    const ComponentOrders& operator[](int i) const { return orders_.at(static_cast<std::size_t>(i)); }

private:
    std::vector<ComponentOrders> orders_;
};

/// Samples of an N-component curve on a grid. Component i occupies a contiguous block.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(Grid grid, int components);
    Trajectory(Grid grid, int components, std::vector<double> values);

    const Grid& grid() const noexcept { return grid_; }
    int components() const noexcept { return components_; }

    std::span<double> component(int i);
    std::span<const double> component(int i) const;
    double& at(int node, int comp) { return component(comp)[static_cast<std::size_t>(node)]; }
    double at(int node, int comp) const { return component(comp)[static_cast<std::size_t>(node)]; }

    const std::vector<double>& values() const noexcept { return values_; }

    /// Throws DomainError on a non-finite entry.
    void require_finite() const;

private:
    Grid grid_;
    int components_ = 0;
    std::vector<double> values_;
};

}  // namespace fracvar
