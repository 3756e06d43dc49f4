#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "fracvar/error.hpp"
#include "fracvar/pareto.hpp"
#include "fracvar/problem_file.hpp"

using namespace fracvar;

namespace {

ProblemSpec example2() {
    return parse_problem_file(std::string(FRACVAR_TEST_DATA) + "/example2.prob").problem;
}

double max_diff(const Trajectory& a, const Trajectory& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k) {
        m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
    }
    return m;
}

std::vector<std::vector<double>> kept(const std::vector<std::vector<double>>& pts) {
    const auto mask = nondominated_mask(pts);
    std::vector<std::vector<double>> out;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        if (mask[k]) {
            out.push_back(pts[k]);
        }
    }
    return out;
}

}  // namespace

TEST_SUITE("pareto") {
TEST_CASE("weight vectors") {
    CHECK(WeightVector({2.0, 2.0}) == WeightVector({0.5, 0.5}));
    CHECK(WeightVector({1.0, 0.0}).values() == std::vector<double>{1.0, 0.0});
    CHECK_FALSE(WeightVector({1.0, 0.0}).strictly_positive());
    CHECK(WeightVector({0.2, 0.8}).strictly_positive());
    CHECK_THROWS_AS(WeightVector({-0.1, 1.1}), PreconditionError);
    CHECK_THROWS_AS(WeightVector({0.0, 0.0}), PreconditionError);
    CHECK_THROWS_AS(WeightVector({NAN, 1.0}), PreconditionError);
}

TEST_CASE("weight grids") {
    const auto two = weight_grid(2, 5);
    REQUIRE(two.size() == 5);
    for (int k = 0; k < 5; ++k) {
        CHECK(two[static_cast<std::size_t>(k)][0] == doctest::Approx(k / 4.0));
    }
    const auto one = weight_grid(2, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == WeightVector({1.0, 0.0}));

    // Simplex lattice: C(m - 1 + d - 1, d - 1) points.
    CHECK(weight_grid(3, 3).size() == 6);
    CHECK(weight_grid(3, 5).size() == 15);
    CHECK(weight_grid(4, 3).size() == 10);
    for (const auto& w : weight_grid(3, 5)) {
        double s = 0.0;
        for (double v : w.values()) {
            CHECK(v >= 0.0);
            s += v;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("weighted objective is linear in the weights") {
    const ProblemSpec p = example2();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> wdist(0.0, 1.0);
    const LagrangianExpr unit = weighted_objective(p, WeightVector({1.0, 0.0}));
    for (int t = 0; t < 100; ++t) {
        const double w = wdist(rng);
        const LagrangianExpr e = weighted_objective(p, WeightVector({w, 1.0 - w}));
        const double args[] = {u(rng), u(rng), u(rng)};
        const double l1 = p.objectives[0].eval(args);
        const double l2 = p.objectives[1].eval(args);
        CHECK(e.eval(args) == doctest::Approx(w * l1 + (1.0 - w) * l2).epsilon(1e-14));
        CHECK(unit.eval(args) == l1);
    }
    CHECK_THROWS(weighted_objective(p, WeightVector({1.0, 1.0, 1.0})));
    CHECK_THROWS(weighted_objective(p.with_objective(p.objectives[0]), WeightVector({1.0})));
}

TEST_CASE("dominance filter") {
    const std::vector<std::vector<double>> pts = {{1, 2}, {2, 1}, {2, 2}};
    CHECK(nondominated_mask(pts) == std::vector<bool>{true, true, false});
    CHECK(nondominated_mask({{1, 1}, {1, 1}}) == std::vector<bool>{true, true});

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> cloud;
    for (int k = 0; k < 60; ++k) {
        cloud.push_back({u(rng), u(rng), u(rng)});
    }
    const auto once = kept(cloud);
    CHECK(kept(once) == once);
    auto shuffled = cloud;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto a = once;
    auto b = kept(shuffled);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
}

TEST_CASE("example 2 sweep traces a front") {
    const ProblemSpec p = example2();
    const Grid g = make_grid(0.0, 1.0, 128);
    const auto pts = pareto_sweep(p, weight_grid(2, 6), g, SolveOptions{});
    REQUIRE(pts.size() == 6);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        CHECK(pts[k].result.converged);
        if (k > 0) {
            CHECK(pts[k].objectives[0] <= pts[k - 1].objectives[0] + 1e-9);
            CHECK(pts[k].objectives[1] >= pts[k - 1].objectives[1] - 1e-9);
        }
    }
    CHECK(dominance_filter(pts).size() == pts.size());

    const auto alone = solve_basic(p.with_objective(p.objectives[0]), g, SolveOptions{});
    CHECK(max_diff(pts.back().result.trajectory, alone.trajectory) <= 1e-12);
}

TEST_CASE("identical objectives give one trajectory") {
    ProblemSpec p = example2();
    p.objectives[1] = p.objectives[0];
    const auto pts = pareto_sweep(p, weight_grid(2, 4), make_grid(0.0, 1.0, 64), SolveOptions{});
    for (const auto& pt : pts) {
        CHECK(max_diff(pt.result.trajectory, pts.front().result.trajectory) <= 1e-8);
    }
}

TEST_CASE("epsilon-constraint cross-check") {
    const ProblemSpec p = example2();
    const SolveContext ctx(p, make_grid(0.0, 1.0, 64));
    const auto pts = pareto_sweep(p, {WeightVector({0.5, 0.5})}, ctx, SolveOptions{});
    REQUIRE(pts.size() == 1);

    const EpsilonReport on_front = epsilon_constraint_check(p, pts[0], 0, ctx, SolveOptions{});
    CHECK(on_front.converged);
    CHECK_FALSE(on_front.improved);

    // The straight line through the boundary data is not a weighted-sum minimizer.
    ParetoPoint moved = pts[0];
    moved.result.trajectory = ctx.layout().initial();
    moved.objectives = objective_values(p, ctx, moved.result.trajectory);
    const EpsilonReport off_front = epsilon_constraint_check(p, moved, 0, ctx, SolveOptions{});
    CHECK(off_front.converged);
    CHECK(off_front.improved);
    CHECK(off_front.improvement > 1e-3);

    const ProblemSpec single = p.with_objective(p.objectives[0]);
    CHECK_THROWS_AS(epsilon_constraint_check(single, pts[0], 0, ctx, SolveOptions{}), PreconditionError);
}
}
