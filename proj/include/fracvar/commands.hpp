#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace fracvar {

enum ExitCode : int {
    kExitOk = 0,
    kExitCheckFailed = 1,
    kExitUsage = 2,
    kExitDomain = 3,
    kExitNotConverged = 4,
};

struct DerivArgs {
    std::string expr;
    std::string op = "caputo_l";
    double alpha = 0.5;
    double beta = 0.5;
    double gamma = 1.0;
    double a = 0.0;
    double b = 1.0;
    int n = 512;
    /// Empty writes the CSV to the report stream.
    std::string out;
};

/// Objective selection shared by solve and verify: explicit weights, else objective k
/// (1-based), else objective 1.
struct ObjectiveChoice {
    int objective = 0;
    std::vector<double> weights;
};

struct SolveArgs {
    std::string problem;
    ObjectiveChoice choice;
    /// Overrides [run] n when positive.
    int n = 0;
    std::string out;
};

struct ParetoArgs {
    std::string problem;
    /// Overrides [run] weights when positive.
    int weights_count = 0;
    bool check = false;
    int n = 0;
    std::string out;
};

struct VerifyArgs {
    std::string problem;
    std::string trajectory;
    ObjectiveChoice choice;
    std::vector<double> lambda;
};

/// CSV x,f,Df of one operator applied to samples of f(x).
int cmd_deriv(const DerivArgs& args, std::ostream& report);
/// CSV x,y1..yN,v1..vN and a `key = value` report. 0 converged, 4 otherwise.
int cmd_solve(const SolveArgs& args, std::ostream& report);
/// CSV w1..wd,J1..Jd,converged[,nondominated,ec_pass] plus <stem>_w<k>.csv per weight.
/// 0 when every solve converged, 4 otherwise.
int cmd_pareto(const ParetoArgs& args, std::ostream& report);
/// Residual report for a trajectory CSV (columns x, y1..yN; `f` stands for y1).
/// 0 when every residual is within [run] residual_tol, 1 otherwise.
int cmd_verify(const VerifyArgs& args, std::ostream& report);

/// Runs body and maps exceptions to exit codes, printing one `error: ...` line.
int guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace fracvar
