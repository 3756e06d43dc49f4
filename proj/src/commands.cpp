#include "fracvar/commands.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>

#include "fracvar/csv.hpp"
#include "fracvar/error.hpp"
#include "fracvar/fracops.hpp"
#include "fracvar/pareto.hpp"
#include "fracvar/problem_file.hpp"
#include "fracvar/solver.hpp"
#include "fracvar/variational.hpp"

namespace fracvar {
namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

void put(std::ostream& os, const std::string& key, double value) {
    os << key << " = " << format_number(value) << '\n';
}

void put(std::ostream& os, const std::string& key, const std::string& value) {
    os << key << " = " << value << '\n';
}

LagrangianExpr chosen_objective(const ProblemSpec& p, const ObjectiveChoice& c) {
    if (!c.weights.empty() && c.objective != 0) {
        throw PreconditionError("--objective and --weights are mutually exclusive");
    }
    if (!c.weights.empty()) {
        if (static_cast<int>(c.weights.size()) != p.n_objectives()) {
            throw PreconditionError(
                fmt::format("{} weights given for {} objectives", c.weights.size(), p.n_objectives()));
        }
        const WeightVector w(c.weights);
        return LagrangianExpr::weighted_sum(p.objectives, w.values());
    }
    if (c.objective != 0) {
        if (c.objective < 1 || c.objective > p.n_objectives()) {
            throw PreconditionError(fmt::format("objective {} out of range 1..{}", c.objective, p.n_objectives()));
        }
        return p.objectives[sz(c.objective - 1)];
    }
    return p.objectives.front();
}

CsvTable trajectory_table(const Trajectory& y, const OperatorSet& ops) {
    const Trajectory v = ops.apply(y);
    CsvTable t;
    t.header.push_back("x");
    t.columns.push_back(y.grid().nodes());
    for (int i = 0; i < y.components(); ++i) {
        t.header.push_back(fmt::format("y{}", i + 1));
        const auto c = y.component(i);
        t.columns.emplace_back(c.begin(), c.end());
    }
    for (int i = 0; i < y.components(); ++i) {
        t.header.push_back(fmt::format("v{}", i + 1));
        const auto c = v.component(i);
        t.columns.emplace_back(c.begin(), c.end());
    }
    return t;
}

/// Residual checks on a trajectory for a single-objective problem.
class Checks {
public:
    Checks(std::ostream& os, double tol) : os_(os), tol_(tol) {}

    void check(const std::string& key, double value, double measure) {
        put(os_, key, value);
        if (!(measure <= tol_)) {
            failed_.push_back(key);
        }
    }
    void info(const std::string& key, double value) { put(os_, key, value); }
    bool passed() const { return failed_.empty(); }
    const std::vector<std::string>& failed() const { return failed_; }

private:
    std::ostream& os_;
    double tol_;
    std::vector<std::string> failed_;
};

BoundExpr augmented(const ProblemSpec& single, std::span<const double> lambda) {
    if (single.has_pointwise()) {
        return {single.objectives.front(), {}};
    }
    return augment_isoperimetric(single, 0, lambda);
}

void residual_report(const ProblemFile& pf, const ProblemSpec& single, const Trajectory& y,
                     const std::vector<double>& lambda, Checks& out) {
    const ProblemSpec& p = single;
    const Grid& grid = y.grid();
    const double lo = pf.run.window_lo;
    const double hi = pf.run.window_hi;

    const BoundExpr f = augmented(p, lambda);
    if (p.has_pointwise()) {
        MultiplierSet m;
        const auto v = OperatorSet(grid, p.orders).apply(y);
        std::vector<double> yk(sz(y.components())), vk(yk.size());
        for (int j = 0; j < p.n_constraints(); ++j) {
            const auto& c = p.constraints[sz(j)];
            m.functions.emplace_back(sz(grid.size()), lambda[sz(j)]);
            std::vector<double> slack;
            if (is_inequality(c.kind)) {
                const BoundExpr g{c.integrand, {}};
                for (int k = 0; k < grid.size(); ++k) {
                    for (int i = 0; i < y.components(); ++i) {
                        yk[sz(i)] = y.at(k, i);
                        vk[sz(i)] = v.at(k, i);
                    }
                    slack.push_back(std::sqrt(std::max(0.0, -g.eval(grid.node(k), yk, vk))));
                }
            }
            m.slacks.push_back(std::move(slack));
        }
        const PointwiseReport r = pointwise_system_residual(p, y, m, 0);
        out.check("el_residual_max", window_max_abs(r.el_residual, lo, hi), window_max_abs(r.el_residual, lo, hi));
        for (int j = 0; j < p.n_constraints(); ++j) {
            double worst = 0.0;
            double comp = 0.0;
            for (int k = 0; k < grid.size(); ++k) {
                worst = std::max(worst, std::abs(r.constraint_residual[sz(j)][sz(k)]));
                comp = std::max(comp, std::abs(r.complementarity[sz(j)][sz(k)]));
            }
            out.check(fmt::format("constraint.{}.residual", j + 1), worst, worst);
            out.check(fmt::format("constraint.{}.complementarity", j + 1), comp, comp);
        }
    } else {
        const Trajectory el = euler_lagrange_residual(f.expr, p.orders, y, f.samples());
        const double el_max = window_max_abs(el, lo, hi);
        out.check("el_residual_max", el_max, el_max);
        const auto ops = std::make_shared<const OperatorSet>(grid, p.orders);
        for (int j = 0; j < p.n_constraints(); ++j) {
            const auto& c = p.constraints[sz(j)];
            const double g = DiscreteObjective(c.integrand, ops).value(y);
            const double gap = g - c.target;
            out.info(fmt::format("constraint.{}.value", j + 1), g);
            const double res = is_inequality(c.kind) ? std::max(0.0, gap) : std::abs(gap);
            out.check(fmt::format("constraint.{}.residual", j + 1), res, res);
            if (is_inequality(c.kind)) {
                const double comp = lambda[sz(j)] * gap;
                out.check(fmt::format("constraint.{}.complementarity", j + 1), comp, std::abs(comp));
            }
        }
    }

    for (int l = 0; l < p.n_components(); ++l) {
        const auto& b = p.boundary[l];
        if (b.left.kind == EndKind::Fixed) {
            out.info(fmt::format("boundary.{}.left_gap", l + 1), y.at(0, l) - b.left.value);
        }
        if (b.right.kind == EndKind::Fixed) {
            out.info(fmt::format("boundary.{}.right_gap", l + 1), y.at(grid.n(), l) - b.right.value);
            continue;
        }
        const TransversalityReport t = transversality_residual(f.expr, p.orders, p.boundary, y, l, f.samples());
        const std::string key = fmt::format("transversality.{}", l + 1);
        if (b.right.kind == EndKind::Free) {
            out.check(key + ".residual", t.residual, std::abs(t.residual));
        } else {
            out.check(key + ".residual", t.residual, t.residual);
            out.check(key + ".complementarity", t.complementarity, std::abs(t.complementarity));
            out.check(key + ".feasibility", t.feasibility, t.feasibility);
        }
    }
}

int finish_check(const Checks& checks, std::ostream& report) {
    put(report, "verdict", checks.passed() ? "pass" : "fail");
    for (const auto& key : checks.failed()) {
        put(report, "failed", key);
    }
    return checks.passed() ? kExitOk : kExitCheckFailed;
}

std::vector<double> sample(const LagrangianExpr& f, const Grid& grid) {
    std::vector<double> out;
    for (int k = 0; k < grid.size(); ++k) {
        const double args[3] = {grid.node(k), 0.0, 0.0};
        const double v = f.eval(args);
        if (!std::isfinite(v)) {
            throw DomainError(fmt::format("f is not finite at x = {}", grid.node(k)));
        }
        out.push_back(v);
    }
    return out;
}

OperatorMatrix deriv_operator(const DerivArgs& args, const Grid& grid) {
    const std::string& op = args.op;
    if (op == "caputo_l") return caputo_matrix(grid, args.alpha, Side::Left);
    if (op == "caputo_r") return caputo_matrix(grid, args.alpha, Side::Right);
    if (op == "rl_l") return rl_derivative_matrix(grid, args.alpha, Side::Left);
    if (op == "rl_r") return rl_derivative_matrix(grid, args.alpha, Side::Right);
    if (op == "rli_l") return rl_integral_matrix(grid, args.alpha, Side::Left);
    if (op == "rli_r") return rl_integral_matrix(grid, args.alpha, Side::Right);
    if (op == "combined") {
        if (!(args.gamma >= 0.0 && args.gamma <= 1.0)) {
            throw DomainError(fmt::format("gamma must lie in [0, 1], got {}", args.gamma));
        }
        return combined_caputo(grid, args.alpha, args.beta, args.gamma);
    }
    throw PreconditionError(fmt::format("unknown operator '{}'", op));
}

Grid problem_grid(const ProblemFile& pf, int n_override) {
    return make_grid(pf.problem.a, pf.problem.b, n_override > 0 ? n_override : pf.run.n);
}

std::string stem_of(const std::string& csv_path) {
    const std::filesystem::path p(csv_path);
    return (p.parent_path() / p.stem()).string();
}

}  // namespace

int cmd_deriv(const DerivArgs& args, std::ostream& report) {
    const LagrangianExpr f = LagrangianExpr::parse(args.expr, 1, 0);
    if (f.depends_on(f.slot_y(0)) || f.depends_on(f.slot_v(0))) {
        throw PreconditionError("--expr must depend on x only");
    }
    const Grid grid = make_grid(args.a, args.b, args.n);
    const OperatorMatrix m = deriv_operator(args, grid);
    const std::vector<double> fs = sample(f, grid);
    CsvTable t{{"x", "f", "Df"}, {grid.nodes(), fs, fracvar::apply(m, fs)}};
    if (args.out.empty()) {
        report << to_csv(t);
    } else {
        write_csv(args.out, t);
    }
    return kExitOk;
}

int cmd_solve(const SolveArgs& args, std::ostream& report) {
    const ProblemFile pf = parse_problem_file(args.problem);
    const Grid grid = problem_grid(pf, args.n);
    const ProblemSpec single = pf.problem.with_objective(chosen_objective(pf.problem, args.choice));
    const SolveContext ctx(single, grid);
    const SolveResult r = solve(single, ctx, pf.run.solve);

    const std::string out = args.out.empty() ? pf.output_path() : args.out;
    write_csv(out, trajectory_table(r.trajectory, *ctx.operators()));

    put(report, "status", r.converged ? "converged" : "not_converged");
    put(report, "n", grid.n());
    put(report, "objective", r.objective);
    if (pf.problem.n_objectives() > 1) {
        const auto values = objective_values(pf.problem, ctx, r.trajectory);
        for (std::size_t i = 0; i < values.size(); ++i) {
            put(report, fmt::format("J{}", i + 1), values[i]);
        }
    }
    put(report, "grad_norm", r.grad_norm);
    put(report, "iterations", r.iterations);
    put(report, "outer_iterations", r.outer_iterations);
    if (single.n_constraints() > 0) {
        put(report, "constraint_violation", r.constraint_violation);
        for (std::size_t j = 0; j < r.multipliers.size(); ++j) {
            put(report, fmt::format("multiplier.{}", j + 1), r.multipliers[j]);
        }
    }
    Checks checks(report, pf.run.residual_tol);
    residual_report(pf, single, r.trajectory, r.multipliers, checks);
    put(report, "csv", out);
    return r.converged ? kExitOk : kExitNotConverged;
}

int cmd_pareto(const ParetoArgs& args, std::ostream& report) {
    const ProblemFile pf = parse_problem_file(args.problem);
    const ProblemSpec& p = pf.problem;
    const Grid grid = problem_grid(pf, args.n);
    const int m = args.weights_count > 0 ? args.weights_count : pf.run.weights;
    const auto weights = weight_grid(p.n_objectives(), m);
    const SolveContext ctx(p, grid);
    const auto points = pareto_sweep(p, weights, ctx, pf.run.solve);

    const int d = p.n_objectives();
    CsvTable t;
    for (int i = 0; i < d; ++i) {
        t.header.push_back(fmt::format("w{}", i + 1));
    }
    for (int i = 0; i < d; ++i) {
        t.header.push_back(fmt::format("J{}", i + 1));
    }
    t.header.push_back("converged");
    t.columns.assign(t.header.size(), {});
    int converged = 0;
    for (const auto& pt : points) {
        for (int i = 0; i < d; ++i) {
            t.columns[sz(i)].push_back(pt.weight[i]);
            t.columns[sz(d + i)].push_back(pt.objectives[sz(i)]);
        }
        t.columns[sz(2 * d)].push_back(pt.result.converged ? 1.0 : 0.0);
        converged += pt.result.converged ? 1 : 0;
    }

    int nondominated = 0;
    int ec_pass = 0;
    if (args.check) {
        std::vector<std::vector<double>> objs;
        for (const auto& pt : points) {
            objs.push_back(pt.objectives);
        }
        const auto keep = nondominated_mask(objs);
        std::vector<double> nd, ec;
        for (std::size_t k = 0; k < points.size(); ++k) {
            bool pass = true;
            for (int i = 0; i < d; ++i) {
                pass = pass && !epsilon_constraint_check(p, points[k], i, ctx, pf.run.solve).improved;
            }
            nd.push_back(keep[k] ? 1.0 : 0.0);
            ec.push_back(pass ? 1.0 : 0.0);
            nondominated += keep[k] ? 1 : 0;
            ec_pass += pass ? 1 : 0;
        }
        t.header.push_back("nondominated");
        t.columns.push_back(std::move(nd));
        t.header.push_back("ec_pass");
        t.columns.push_back(std::move(ec));
    }

    const std::string out = args.out.empty() ? pf.output_path() : args.out;
    write_csv(out, t);
    const std::string stem = stem_of(out);
    for (std::size_t k = 0; k < points.size(); ++k) {
        write_csv(fmt::format("{}_w{}.csv", stem, k + 1), trajectory_table(points[k].result.trajectory, *ctx.operators()));
    }

    put(report, "points", static_cast<double>(points.size()));
    put(report, "converged", converged);
    if (args.check) {
        put(report, "nondominated", nondominated);
        put(report, "ec_pass", ec_pass);
    }
    put(report, "csv", out);
    return converged == static_cast<int>(points.size()) ? kExitOk : kExitNotConverged;
}

int cmd_verify(const VerifyArgs& args, std::ostream& report) {
    const ProblemFile pf = parse_problem_file(args.problem);
    const ProblemSpec single = pf.problem.with_objective(chosen_objective(pf.problem, args.choice));
    const int n_comp = single.n_components();

    const CsvTable t = read_csv(args.trajectory);
    const int xcol = t.find("x");
    if (xcol < 0) {
        throw DimensionError("trajectory CSV has no x column");
    }
    if (t.rows() < 2) {
        throw DimensionError("trajectory CSV has too few rows");
    }
    const Grid grid = make_grid(single.a, single.b, static_cast<int>(t.rows()) - 1);
    const double slack = 1e-12 * std::max(1.0, std::abs(single.b - single.a));
    for (int k = 0; k < grid.size(); ++k) {
        if (std::abs(t.columns[sz(xcol)][sz(k)] - grid.node(k)) > slack * (1 + grid.n())) {
            throw DimensionError(fmt::format("trajectory x column does not match the uniform grid on [{}, {}] (row {})",
                                             single.a, single.b, k + 2));
        }
    }
    Trajectory y(grid, n_comp);
    for (int i = 0; i < n_comp; ++i) {
        int col = t.find(fmt::format("y{}", i + 1));
        if (col < 0 && n_comp == 1) {
            col = t.find("f");
        }
        if (col < 0) {
            throw DimensionError(fmt::format("trajectory CSV has no y{} column", i + 1));
        }
        std::copy(t.columns[sz(col)].begin(), t.columns[sz(col)].end(), y.component(i).begin());
    }
    y.require_finite();

    if (static_cast<int>(args.lambda.size()) != single.n_constraints()) {
        throw PreconditionError(
            fmt::format("--lambda needs {} values, got {}", single.n_constraints(), args.lambda.size()));
    }
    for (std::size_t j = 0; j < args.lambda.size(); ++j) {
        if (is_inequality(single.constraints[j].kind) && args.lambda[j] < 0.0) {
            throw PreconditionError(fmt::format("multiplier {} of an inequality constraint must be >= 0", j + 1));
        }
    }

    put(report, "n", grid.n());
    Checks checks(report, pf.run.residual_tol);
    residual_report(pf, single, y, args.lambda, checks);

    const BoundExpr f = augmented(single, args.lambda);
    const Trajectory v = OperatorSet(grid, single.orders).apply(y);
    const auto [ylo, yhi] = std::minmax_element(y.values().begin(), y.values().end());
    const auto [vlo, vhi] = std::minmax_element(v.values().begin(), v.values().end());
    const double lo = std::min(*ylo, *vlo);
    const double hi = std::max(*yhi, *vhi);
    const double pad = 0.1 * (hi - lo) + 1e-3;
    const auto box = ConvexityBox::uniform(n_comp, single.a, single.b, lo - pad, hi + pad);
    const ConvexityReport cx = convexity_certificate(f.expr, box, 2000, 20240601, f.params);
    put(report, "convexity.violations", cx.violations);
    put(report, "convexity.worst_gap", cx.worst_gap);
    return finish_check(checks, report);
}

int guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomain;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

}  // namespace fracvar
