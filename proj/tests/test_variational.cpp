#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "fracvar/error.hpp"
#include "fracvar/problem_file.hpp"
#include "fracvar/solver.hpp"
#include "fracvar/specfun.hpp"
#include "fracvar/variational.hpp"

using namespace fracvar;

namespace {

Trajectory sampled(const Grid& g, double (*f)(double)) {
    Trajectory t(g, 1);
    for (int k = 0; k < g.size(); ++k) {
        t.at(k, 0) = f(g.node(k));
    }
    return t;
}

double ybar(double x) { return mittag_leffler(0.5, std::sqrt(x)); }

ProblemSpec quadratic_endpoint(EndCondition right) {
    ProblemSpec p;
    p.orders = FracOrders::uniform(1, 0.5, 0.5, 1.0);
    p.objectives.push_back(LagrangianExpr::parse("0.5 * v1^2 + 0.5 * (y1 - 1)^2", 1, 0));
    p.boundary = BoundarySpec({{EndCondition::fixed(0.0), right}});
    return p;
}

ProblemSpec two_component(const std::string& lagrangian) {
    ProblemSpec p;
    p.orders = FracOrders::uniform(2, 0.5, 0.5, 1.0);
    p.objectives.push_back(LagrangianExpr::parse(lagrangian, 2, 0));
    p.boundary = BoundarySpec({{EndCondition::fixed(0.0), EndCondition::fixed(0.0)},
                               {EndCondition::fixed(0.0), EndCondition::fixed(0.0)}});
    return p;
}

// max |residual - classical| over the window for L = v1^2 + y1^2 along y = x.
double classical_gap(double alpha, double gamma, double lo) {
    const Grid g = make_grid(0.0, 1.0, 1024);
    const Trajectory y = sampled(g, [](double x) { return x; });
    const auto r = euler_lagrange_residual(LagrangianExpr::parse("v1^2 + y1^2", 1, 0),
                                           FracOrders::uniform(1, alpha, alpha, gamma), y);
    double m = 0.0;
    for (int k = 1; k < g.n(); ++k) {
        const double x = g.node(k);
        if (x >= lo && x <= 1.0 - lo) {
            m = std::max(m, std::abs(r.at(k, 0) - 2.0 * x));
        }
    }
    return m;
}

}  // namespace

TEST_SUITE("variational") {
TEST_CASE("integrand without y or v has zero residual") {
    const Grid g = make_grid(0.0, 1.0, 64);
    const Trajectory y = sampled(g, [](double x) { return std::sin(3.0 * x); });
    const auto r = euler_lagrange_residual(LagrangianExpr::parse("x^2", 1, 0), FracOrders::uniform(1, 0.4, 0.7, 0.3), y);
    for (double v : r.values()) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("classical limit of the residual") {
    for (double gamma : {0.0, 1.0}) {
        CAPTURE(gamma);
        CHECK(classical_gap(0.999, gamma, 0.05) <= 5e-2);
        CHECK(classical_gap(0.999, gamma, 0.25) <= 1e-2);
        // The gap is a (1 - alpha) endpoint effect: it shrinks with alpha -> 1.
        CHECK(classical_gap(0.99, gamma, 0.1) >= 5.0 * classical_gap(0.999, gamma, 0.1));
    }
}

TEST_CASE("example 1 augmented residual at lambda = 1/2") {
    const ProblemFile pf = parse_problem_file(std::string(FRACVAR_TEST_DATA) + "/example1_iso.prob");
    const double half[] = {0.5};
    const BoundExpr f = augment_isoperimetric(pf.problem, 0, half);
    double prev = 1e300;
    for (int n : {1024, 2048, 4096}) {
        const Grid g = make_grid(0.0, 1.0, n);
        const auto r = euler_lagrange_residual(f.expr, pf.problem.orders, sampled(g, ybar), f.samples());
        const double w = window_max_abs(r, 0.05, 0.95);
        CAPTURE(n);
        CHECK(w < prev);
        prev = w;
    }
    CHECK(prev <= 1e-3);

    // F = ybar v1 - v1^2 / 2 at a few points.
    for (double x : {0.1, 0.5, 0.9}) {
        for (double v : {-1.0, 0.3, 2.0}) {
            const double y[] = {0.7};
            const double vv[] = {v};
            CHECK(f.eval(x, y, vv) == doctest::Approx(ybar(x) * v - 0.5 * v * v).epsilon(1e-13));
        }
    }
}

TEST_CASE("augmentation with zero and signed multipliers") {
    ProblemSpec p;
    p.orders = FracOrders::uniform(1, 0.5, 0.5, 1.0);
    p.objectives.push_back(LagrangianExpr::parse("v1^2 + x * y1", 1, 0));
    p.boundary = BoundarySpec({{EndCondition::fixed(0.0), EndCondition::fixed(1.0)}});
    p.constraints.push_back({ConstraintKind::IsoEq, LagrangianExpr::parse("sin(y1) * v1", 1, 0), 1.0});
    p.constraints.push_back({ConstraintKind::IsoEq, LagrangianExpr::parse("y1^2 + exp(v1)", 1, 0), 2.0});

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const double zero[] = {0.0, 0.0};
    const double signs[] = {1.0, -1.0};
    const BoundExpr f0 = augment_isoperimetric(p, 0, zero);
    const BoundExpr f1 = augment_isoperimetric(p, 0, signs);
    for (int t = 0; t < 100; ++t) {
        const double x = u(rng);
        const double y[] = {u(rng)};
        const double v[] = {u(rng)};
        const double args[] = {x, y[0], v[0]};
        const double l = p.objectives[0].eval(args);
        const double g1 = p.constraints[0].integrand.eval(args);
        const double g2 = p.constraints[1].integrand.eval(args);
        CHECK(std::abs(f0.eval(x, y, v) - l) <= 1e-15 * (1.0 + std::abs(l)));
        CHECK(f1.eval(x, y, v) == doctest::Approx(l - g1 + g2).epsilon(1e-14));
    }

    const Grid g = make_grid(0.0, 1.0, 128);
    const Trajectory y = sampled(g, [](double x) { return x * x; });
    const auto r0 = euler_lagrange_residual(f0.expr, p.orders, y, f0.samples());
    const auto r = euler_lagrange_residual(p.objectives[0], p.orders, y);
    double m = 0.0;
    for (std::size_t k = 0; k < r.values().size(); ++k) {
        m = std::max(m, std::abs(r0.values()[k] - r.values()[k]));
    }
    CHECK(m <= 1e-15);

    p.constraints.push_back({ConstraintKind::PointwiseEq, LagrangianExpr::parse("y1", 1, 0), 0.0});
    const double three[] = {0.0, 0.0, 0.0};
    CHECK_THROWS(augment_isoperimetric(p, 0, three));
}

TEST_CASE("transversality at a free endpoint vanishes under refinement") {
    const ProblemSpec p = quadratic_endpoint(EndCondition::free());
    double prev = 0.0;
    for (int n : {256, 512}) {
        const SolveResult s = solve_basic(p, make_grid(0.0, 1.0, n), SolveOptions{});
        REQUIRE(s.converged);
        const auto t = transversality_residual(p, 0, s.trajectory, 0);
        CHECK(t.complementarity == 0.0);
        CHECK(t.feasibility == 0.0);
        if (prev > 0.0) {
            CHECK(std::abs(t.residual) <= 0.55 * prev);
        }
        prev = std::abs(t.residual);
    }
    CHECK(prev <= 1e-3);
}

TEST_CASE("transversality at an upper-bounded endpoint") {
    SUBCASE("bound not reached") {
        const ProblemSpec p = quadratic_endpoint(EndCondition::upper_bounded(5.0));
        double prev = 0.0;
        for (int n : {256, 512}) {
            const SolveResult s = solve_basic(p, make_grid(0.0, 1.0, n), SolveOptions{});
            REQUIRE(s.converged);
            CHECK(s.trajectory.at(n, 0) < 5.0);
            const auto t = transversality_residual(p, 0, s.trajectory, 0);
            CHECK(t.feasibility == 0.0);
            if (prev > 0.0) {
                CHECK(std::abs(t.complementarity) <= 0.55 * prev);
            }
            prev = std::abs(t.complementarity);
        }
        CHECK(prev <= 2e-3);
    }
    SUBCASE("bound active") {
        const ProblemSpec p = quadratic_endpoint(EndCondition::upper_bounded(0.2));
        const SolveResult s = solve_basic(p, make_grid(0.0, 1.0, 512), SolveOptions{});
        REQUIRE(s.converged);
        CHECK(s.trajectory.at(512, 0) == doctest::Approx(0.2).epsilon(1e-12));
        const auto t = transversality_residual(p, 0, s.trajectory, 0);
        CHECK(t.residual <= 1e-6);
        CHECK(t.complementarity >= 0.0);
        CHECK(t.feasibility == 0.0);
    }
    SUBCASE("fixed end is rejected") {
        const ProblemSpec p = quadratic_endpoint(EndCondition::fixed(1.0));
        const Grid g = make_grid(0.0, 1.0, 32);
        CHECK_THROWS_AS(transversality_residual(p, 0, sampled(g, [](double x) { return x; }), 0), PreconditionError);
    }
}

TEST_CASE("pointwise system: inactive multiplier") {
    ProblemSpec p = two_component("v1^2 + v2^2");
    p.constraints.push_back({ConstraintKind::PointwiseEq, LagrangianExpr::parse("v1 - v2", 2, 0), 0.0});
    const Grid g = make_grid(0.0, 1.0, 64);
    Trajectory y(g, 2);
    for (int k = 0; k < g.size(); ++k) {
        const double x = g.node(k);
        y.at(k, 0) = y.at(k, 1) = x * (1.0 - x);
    }
    MultiplierSet m;
    m.functions.assign(1, std::vector<double>(static_cast<std::size_t>(g.size()), 0.0));
    const PointwiseReport rep = pointwise_system_residual(p, y, m);
    for (double c : rep.constraint_residual[0]) {
        CHECK(c == 0.0);
    }
    const auto plain = euler_lagrange_residual(p, 0, y);
    CHECK(rep.el_residual.values() == plain.values());
}

TEST_CASE("pointwise system: slack inequality") {
    ProblemSpec p = two_component("v1^2 + v2^2");
    p.constraints.push_back({ConstraintKind::PointwiseIneq, LagrangianExpr::parse("y1 - 1", 2, 0), 0.0});
    const Grid g = make_grid(0.0, 1.0, 64);
    Trajectory y(g, 2);
    MultiplierSet m;
    m.functions.assign(1, std::vector<double>(static_cast<std::size_t>(g.size()), 0.0));
    m.slacks.assign(1, std::vector<double>(static_cast<std::size_t>(g.size())));
    for (int k = 0; k < g.size(); ++k) {
        const double x = g.node(k);
        y.at(k, 0) = 0.5 * std::sin(3.0 * x) * x * (1.0 - x);
        m.slacks[0][static_cast<std::size_t>(k)] = std::sqrt(1.0 - y.at(k, 0));
    }
    const PointwiseReport rep = pointwise_system_residual(p, y, m);
    for (std::size_t k = 0; k < rep.complementarity[0].size(); ++k) {
        CHECK(rep.complementarity[0][k] == 0.0);
        CHECK(std::abs(rep.constraint_residual[0][k]) <= 1e-15);
    }

    m.slacks.clear();
    CHECK_THROWS_AS(pointwise_system_residual(p, y, m), DimensionError);
}

TEST_CASE("pointwise system against a penalty solve") {
    // min int (y1-1)^2/2 + (y2+1)^2/2 subject to y1 = y2: y = 0 with lambda = 1.
    const double mu = 1e4;
    const ProblemSpec penalized = two_component("0.5 * (y1 - 1)^2 + 0.5 * (y2 + 1)^2 + 10000 * (y1 - y2)^2");
    const Grid g = make_grid(0.0, 1.0, 16);
    SolveOptions opts;
    opts.grad_tol = 1e-12;
    const SolveResult s = solve_basic(penalized, g, opts);
    REQUIRE(s.converged);

    ProblemSpec p = two_component("0.5 * (y1 - 1)^2 + 0.5 * (y2 + 1)^2");
    p.constraints.push_back({ConstraintKind::PointwiseEq, LagrangianExpr::parse("y1 - y2", 2, 0), 0.0});
    MultiplierSet m;
    m.functions.emplace_back();
    for (int k = 0; k < g.size(); ++k) {
        m.functions[0].push_back(2.0 * mu * (s.trajectory.at(k, 0) - s.trajectory.at(k, 1)));
    }
    const PointwiseReport rep = pointwise_system_residual(p, s.trajectory, m);
    for (int k = 1; k < g.n(); ++k) {
        CHECK(std::abs(rep.el_residual.at(k, 0)) <= 1e-6);
        CHECK(std::abs(rep.el_residual.at(k, 1)) <= 1e-6);
        CHECK(m.functions[0][static_cast<std::size_t>(k)] == doctest::Approx(1.0).epsilon(1e-3));
        CHECK(std::abs(rep.constraint_residual[0][static_cast<std::size_t>(k)]) <= 1e-4);
    }

    m.functions[0].assign(static_cast<std::size_t>(g.size()), 0.5);
    const PointwiseReport off = pointwise_system_residual(p, s.trajectory, m);
    CHECK(std::abs(off.el_residual.at(8, 0)) >= 0.4);
}

TEST_CASE("pointwise system preconditions") {
    ProblemSpec p;
    p.orders = FracOrders::uniform(1, 0.5, 0.5, 1.0);
    p.objectives.push_back(LagrangianExpr::parse("v1^2", 1, 0));
    p.boundary = BoundarySpec({{EndCondition::fixed(0.0), EndCondition::fixed(1.0)}});
    p.constraints.push_back({ConstraintKind::PointwiseEq, LagrangianExpr::parse("y1", 1, 0), 0.0});
    const Grid g = make_grid(0.0, 1.0, 16);
    MultiplierSet m;
    m.functions.assign(1, std::vector<double>(17, 0.0));
    CHECK_THROWS(pointwise_system_residual(p, Trajectory(g, 1), m));
}

TEST_CASE("convexity certificate") {
    const auto box = ConvexityBox::uniform(1, 0.0, 1.0, -3.0, 3.0);
    CHECK(convexity_certificate(LagrangianExpr::parse("v1^2", 1, 0), box, 2000).violations == 0);
    const auto bilinear = convexity_certificate(LagrangianExpr::parse("y1 * v1", 1, 0), box, 10000);
    CHECK(bilinear.violations > 0);
    CHECK(bilinear.worst_gap < 0.0);
    CHECK(convexity_certificate(LagrangianExpr::parse("-v1^2", 1, 0), box, 1000).violations > 0);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coef(0.0, 5.0);
    std::uniform_real_distribution<double> shift(-5.0, 5.0);
    for (int t = 0; t < 25; ++t) {
        const LagrangianExpr e = LagrangianExpr::parse("p1 * v1^2 + p2 * y1^2 + p3", 1, 3);
        const double params[] = {coef(rng), coef(rng), shift(rng)};
        CHECK(convexity_certificate(e, box, 500, 100 + static_cast<std::uint64_t>(t), params).violations == 0);
    }
}

TEST_CASE("regularity rank of isoperimetric constraints") {
    ProblemSpec p;
    p.orders = FracOrders::uniform(1, 0.5, 0.5, 1.0);
    p.objectives.push_back(LagrangianExpr::parse("v1^2", 1, 0));
    p.boundary = BoundarySpec({{EndCondition::fixed(0.0), EndCondition::fixed(1.0)}});
    p.constraints.push_back({ConstraintKind::IsoEq, LagrangianExpr::parse("v1^2", 1, 0), 1.0});
    p.constraints.push_back({ConstraintKind::IsoEq, LagrangianExpr::parse("y1", 1, 0), 0.5});
    const Grid g = make_grid(0.0, 1.0, 128);
    const Trajectory y = sampled(g, [](double x) { return x * x; });
    const auto full = regularity_diagnostic(p, y);
    CHECK(full.rank == 2);
    CHECK(full.matrix.size() == 4);

    p.constraints[1] = {ConstraintKind::IsoEq, LagrangianExpr::parse("2 * v1^2", 1, 0), 2.0};
    CHECK(regularity_diagnostic(p, y).rank == 1);
}
}
