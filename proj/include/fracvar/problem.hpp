#pragma once

#include <limits>
#include <string_view>
#include <vector>

#include "fracvar/expr.hpp"
#include "fracvar/grid.hpp"

namespace fracvar {

enum class EndKind { Fixed, Free, UpperBounded };

struct EndCondition {
    EndKind kind = EndKind::Free;
    double value = 0.0;

    static EndCondition fixed(double v) { return {EndKind::Fixed, v}; }
    static EndCondition free() { return {EndKind::Free, 0.0}; }
    static EndCondition upper_bounded(double v) { return {EndKind::UpperBounded, v}; }

    /// Upper bound imposed on the node value (+inf unless UpperBounded).
    double upper() const {
        return kind == EndKind::UpperBounded ? value : std::numeric_limits<double>::infinity();
    }
};

struct ComponentBoundary {
    EndCondition left;
    EndCondition right;
};

/// Endpoint conditions per component. Every component needs at least one endpoint that
/// is Fixed or UpperBounded.
class BoundarySpec {
public:
    BoundarySpec() = default;
    explicit BoundarySpec(std::vector<ComponentBoundary> components);

    int components() const noexcept { return static_cast<int>(components_.size()); }
    const ComponentBoundary& operator[](int i) const { return components_.at(static_cast<std::size_t>(i)); }

private:
    std::vector<ComponentBoundary> components_;
};

enum class ConstraintKind { IsoEq, IsoIneq, PointwiseEq, PointwiseIneq };

std::string_view to_string(ConstraintKind kind);
bool is_isoperimetric(ConstraintKind kind);
bool is_inequality(ConstraintKind kind);

/// Isoperimetric: int G = target (or <= target). Pointwise: G(x, y, v) = 0 (or <= 0);
/// target is ignored for pointwise kinds.
struct ConstraintSpec {
    ConstraintKind kind = ConstraintKind::IsoEq;
    LagrangianExpr integrand;
    double target = 0.0;
};

struct ProblemSpec {
    double a = 0.0;
    double b = 1.0;
    FracOrders orders;
    std::vector<LagrangianExpr> objectives;
    BoundarySpec boundary;
    std::vector<ConstraintSpec> constraints;

    int n_components() const { return orders.components(); }
    int n_objectives() const { return static_cast<int>(objectives.size()); }
    int n_constraints() const { return static_cast<int>(constraints.size()); }
    bool has_pointwise() const;
    bool has_isoperimetric() const;

    /// Checks shared signatures, component counts, pointwise r < N, finite targets.
    /// Throws PreconditionError / DimensionError.
    void validate() const;

    /// Copy with a single objective in place of the list.
    ProblemSpec with_objective(LagrangianExpr objective) const;
};

}  // namespace fracvar
