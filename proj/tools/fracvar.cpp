// fracvar: fractional operators, variational solves, Pareto sweeps and residual checks.
#include <CLI11.hpp>

#include <iostream>

#include "fracvar/commands.hpp"

using namespace fracvar;

int main(int argc, char** argv) {
    CLI::App app{"Fractional variational calculus toolkit"};
    app.require_subcommand(1);

    DerivArgs deriv;
    auto* d = app.add_subcommand("deriv", "Apply a fractional operator to samples of f(x)");
    d->add_option("--expr", deriv.expr, "f(x)")->required();
    d->add_option("--op", deriv.op, "Operator")
        ->check(CLI::IsMember({"caputo_l", "caputo_r", "rl_l", "rl_r", "rli_l", "rli_r", "combined"}));
    d->add_option("--alpha", deriv.alpha, "Left order (integral order for rli_*)");
    d->add_option("--beta", deriv.beta, "Right order");
    d->add_option("--gamma", deriv.gamma, "Left weight of the combined operator");
    d->add_option("--a", deriv.a, "Interval start");
    d->add_option("--b", deriv.b, "Interval end");
    d->add_option("--n", deriv.n, "Grid cells");
    d->add_option("--out", deriv.out, "Output CSV (default: stdout)");

    SolveArgs solve;
    auto* s = app.add_subcommand("solve", "Minimize one objective of a problem file");
    s->add_option("problem", solve.problem, "Problem file")->required()->check(CLI::ExistingFile);
    s->add_option("--objective", solve.choice.objective, "Objective index (1-based)");
    s->add_option("--weights", solve.choice.weights, "Scalarization weights w1,..,wd")->delimiter(',');
    s->add_option("--n", solve.n, "Grid cells (overrides [run] n)");
    s->add_option("--out", solve.out, "Output CSV");

    ParetoArgs pareto;
    auto* p = app.add_subcommand("pareto", "Weighted-sum sweep over the objectives");
    p->add_option("problem", pareto.problem, "Problem file")->required()->check(CLI::ExistingFile);
    p->add_option("--weights-count", pareto.weights_count, "Number of weights M");
    p->add_flag("--check", pareto.check, "Dominance filter and epsilon-constraint checks");
    p->add_option("--n", pareto.n, "Grid cells (overrides [run] n)");
    p->add_option("--out", pareto.out, "Output CSV");

    VerifyArgs verify;
    auto* v = app.add_subcommand("verify", "Residual checks on a trajectory CSV");
    v->add_option("problem", verify.problem, "Problem file")->required()->check(CLI::ExistingFile);
    v->add_option("--trajectory", verify.trajectory, "Trajectory CSV")->required()->check(CLI::ExistingFile);
    v->add_option("--lambda", verify.lambda, "Multipliers l1,..,lr")->delimiter(',');
    v->add_option("--objective", verify.choice.objective, "Objective index (1-based)");
    v->add_option("--weights", verify.choice.weights, "Scalarization weights w1,..,wd")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    return guarded(
        [&] {
            if (*d) return cmd_deriv(deriv, std::cout);
            if (*s) return cmd_solve(solve, std::cout);
            if (*p) return cmd_pareto(pareto, std::cout);
            return cmd_verify(verify, std::cout);
        },
        std::cerr);
}
