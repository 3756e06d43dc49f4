#pragma once

#include <string>
#include <string_view>

#include "fracvar/problem.hpp"
#include "fracvar/solver.hpp"

namespace fracvar {

/// The [run] section.
struct RunSettings {
    int n = 512;
    /// Weight count M for pareto sweeps.
    int weights = 11;
    SolveOptions solve;
    /// Pass threshold for every residual checked by verify.
    double residual_tol = 1e-6;
    /// E-L residuals are measured over nodes in [window_lo, window_hi], endpoints excluded.
    double window_lo = 0.0;
    double window_hi = 1.0;
    /// Output CSV path; empty means "<problem stem>.csv".
    std::string out;
};

struct ProblemFile {
    ProblemSpec problem;
    RunSettings run;
    std::string path;

    /// run.out, or the problem file's stem with a .csv suffix.
    std::string output_path() const;
};

/// Line-oriented `key = value` pairs grouped under [interval], [orders], [objective.k],
/// [boundary], [constraint.j] and [run]. `#` starts a comment. Numeric values may be
/// constant expressions such as `exp(1) - 1`. Errors are ParseError with a line number
/// (0 for a missing section).
ProblemFile parse_problem_text(std::string_view text, std::string path = "<input>");
ProblemFile parse_problem_file(const std::string& path);

}  // namespace fracvar
