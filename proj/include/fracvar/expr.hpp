#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fracvar/error.hpp"

namespace fracvar {

/// Raised by partials() when a derivative is requested through a slot the rules do not
/// cover (the order argument of mlf).
class DifferentiationError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

namespace detail {
struct Node;
}

/// Integrand L(x, y1..yN, v1..vN, p1..pr) parsed from the expression language.
///
/// Argument vector layout is fixed: index 0 is x, then the N trajectory components,
/// then the N fractional derivatives, then the r parameters. Values are immutable and
/// cheap to copy; eval and partials are reentrant.
class LagrangianExpr {
public:
    /// Parses `src`. Grammar: numbers, x, yi, vi, pi (1-based, i <= N or r), the
    /// constant `pi`, + - * / ^ (right associative, binds tightest), unary minus,
    /// parentheses, and the functions sin cos exp ln sqrt abs gamma mlf(alpha, z).
    static LagrangianExpr parse(std::string_view src, int n_components, int n_params);

    /// Constant expression with the given signature.
    static LagrangianExpr constant(double value, int n_components, int n_params);

    int n_components() const noexcept { return n_components_; }
    int n_params() const noexcept { return n_params_; }
    int arity() const noexcept { return 1 + 2 * n_components_ + n_params_; }
    const std::string& source() const noexcept { return source_; }

    int slot_x() const noexcept { return 0; }
    int slot_y(int i) const noexcept { return 1 + i; }
    int slot_v(int i) const noexcept { return 1 + n_components_ + i; }
    int slot_p(int j) const noexcept { return 1 + 2 * n_components_ + j; }

    double eval(std::span<const double> args) const;

    /// Writes d/d(arg k) into `grad` (length arity()) and returns the value.
    double partials(std::span<const double> args, std::span<double> grad) const;
    std::vector<double> partials(std::span<const double> args) const;

    /// True when the tree references argument slot `slot`.
    bool depends_on(int slot) const;

    /// Fully parenthesised form that parses back to an equivalent tree.
    std::string print() const;

    /// Same tree with a wider parameter signature (n_params >= current).
    LagrangianExpr with_params(int n_params) const;

    /// sum_i weights[i] * terms[i]; all terms must share the signature.
    static LagrangianExpr weighted_sum(std::span<const LagrangianExpr> terms,
                                       std::span<const double> weights);

    /// base + sign * sum_j p_{first_param + j} * terms[j]. The result has
    /// max(base params, first_param + terms.size()) parameters.
    static LagrangianExpr parameter_combination(const LagrangianExpr& base,
                                                std::span<const LagrangianExpr> terms,
                                                double sign, int first_param = 0);

    struct Instr;

private:
    LagrangianExpr(std::shared_ptr<const detail::Node> root, int n_components, int n_params,
                   std::string source);
    void check_arity(std::span<const double> args) const;

    std::shared_ptr<const detail::Node> root_;
    std::shared_ptr<const std::vector<Instr>> tape_;
    std::vector<bool> uses_slot_;
    int n_components_ = 0;
    int n_params_ = 0;
    std::string source_;
};

}  // namespace fracvar
