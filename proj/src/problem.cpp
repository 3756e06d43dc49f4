#include "fracvar/problem.hpp"

#include <fmt/format.h>

#include <cmath>

#include "fracvar/error.hpp"

namespace fracvar {

BoundarySpec::BoundarySpec(std::vector<ComponentBoundary> components) : components_(std::move(components)) {
    for (std::size_t i = 0; i < components_.size(); ++i) {
        const auto& c = components_[i];
        const bool anchored = c.left.kind != EndKind::Free || c.right.kind != EndKind::Free;
        if (!anchored) {
            throw PreconditionError(fmt::format("boundary: component {} has no fixed or bounded endpoint", i + 1));
        }
        for (const EndCondition* e : {&c.left, &c.right}) {
            if (e->kind != EndKind::Free && !std::isfinite(e->value)) {
                throw PreconditionError(fmt::format("boundary: component {} has a non-finite endpoint value", i + 1));
            }
        }
    }
}

std::string_view to_string(ConstraintKind kind) {
    switch (kind) {
        case ConstraintKind::IsoEq: return "iso_eq";
        case ConstraintKind::IsoIneq: return "iso_ineq";
        case ConstraintKind::PointwiseEq: return "pw_eq";
        case ConstraintKind::PointwiseIneq: return "pw_ineq";
    }
    return "?";
}

bool is_isoperimetric(ConstraintKind kind) {
    return kind == ConstraintKind::IsoEq || kind == ConstraintKind::IsoIneq;
}

bool is_inequality(ConstraintKind kind) {
    return kind == ConstraintKind::IsoIneq || kind == ConstraintKind::PointwiseIneq;
}

bool ProblemSpec::has_pointwise() const {
    for (const auto& c : constraints) {
        if (!is_isoperimetric(c.kind)) {
            return true;
        }
    }
    return false;
}

bool ProblemSpec::has_isoperimetric() const {
    for (const auto& c : constraints) {
        if (is_isoperimetric(c.kind)) {
            return true;
        }
    }
    return false;
}

void ProblemSpec::validate() const {
    if (!(b > a)) {
        throw PreconditionError(fmt::format("problem: interval needs b > a, got [{}, {}]", a, b));
    }
    if (objectives.empty()) {
        throw PreconditionError("problem: at least one objective is required");
    }
    const int n = n_components();
    if (n < 1) {
        throw PreconditionError("problem: no components");
    }
    if (boundary.components() != n) {
        throw DimensionError(
            fmt::format("problem: boundary lists {} components, orders list {}", boundary.components(), n));
    }
    const int params = objectives.front().n_params();
    auto check_signature = [&](const LagrangianExpr& e, std::string_view what) {
        if (e.n_components() != n) {
            throw DimensionError(fmt::format("problem: {} has {} components, expected {}", what, e.n_components(), n));
        }
        if (e.n_params() != params) {
            throw DimensionError(fmt::format("problem: {} has {} parameters, expected {}", what, e.n_params(), params));
        }
    };
    for (const auto& o : objectives) {
        check_signature(o, "objective");
    }
    int pointwise = 0;
    for (const auto& c : constraints) {
        check_signature(c.integrand, "constraint");
        if (is_isoperimetric(c.kind)) {
            if (!std::isfinite(c.target)) {
                throw PreconditionError("problem: isoperimetric target must be finite");
            }
        } else {
            ++pointwise;
        }
    }
    if (pointwise > 0 && pointwise >= n) {
        throw PreconditionError(
            fmt::format("problem: {} pointwise constraints need more than {} components", pointwise, n));
    }
}

ProblemSpec ProblemSpec::with_objective(LagrangianExpr objective) const {
    ProblemSpec out = *this;
    out.objectives.assign(1, std::move(objective));
    return out;
}

}  // namespace fracvar
