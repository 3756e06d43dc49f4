#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "fracvar/error.hpp"
#include "fracvar/expr.hpp"

using namespace fracvar;

namespace {

/// Random expressions over two components and one parameter whose operations stay
/// inside their domains for arguments in [-1, 1].
class ExprGen {
public:
    explicit ExprGen(std::uint64_t seed) : rng_(seed) {}

    std::string make(int depth) {
        if (depth == 0 || pick(4) == 0) {
            return leaf();
        }
        const std::string a = make(depth - 1);
        const std::string b = make(depth - 1);
        switch (pick(12)) {
            case 0: return "(" + a + " + " + b + ")";
            case 1: return "(" + a + " - " + b + ")";
            case 2: return "(" + a + " * " + b + ")";
            case 3: return "(" + a + " / (2 + cos(" + b + ")))";
            case 4: return "(" + a + ")^2";
            case 5: return "(1 + (" + a + ")^2)^0.5";
            case 6: return "sin(" + a + ")";
            case 7: return "exp(0.3 * " + a + ")";
            case 8: return "ln(2 + sin(" + a + "))";
            case 9: return "sqrt(1 + (" + a + ")^2)";
            case 10: return "gamma(1.5 + 0.5 * sin(" + a + "))";
            default: return "mlf(0.6, 0.5 * sin(" + a + "))";
        }
    }

private:
    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

    std::string leaf() {
        static const char* names[] = {"x", "y1", "y2", "v1", "v2", "p1", "-y1", "abs(v2)"};
        if (pick(5) == 0) {
            return std::to_string(std::uniform_real_distribution<double>(-2.0, 2.0)(rng_));
        }
        std::string s = names[pick(8)];
        // abs is not differentiable at 0; keep its argument away from the kink.
        return s == "abs(v2)" ? "abs(v2 + 3)" : s;
    }

    std::mt19937_64 rng_;
};

std::vector<double> random_args(std::mt19937_64& rng, int arity) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> a(static_cast<std::size_t>(arity));
    for (auto& v : a) {
        v = u(rng);
    }
    a[0] = 0.1 + 0.45 * (a[0] + 1.0);
    return a;
}

}  // namespace

TEST_SUITE("expr") {
TEST_CASE("arity follows the signature") {
    CHECK(LagrangianExpr::parse("v1^2", 1, 0).arity() == 3);
    CHECK(LagrangianExpr::parse("y1*v1 - p1*v1^2", 1, 1).arity() == 4);
    CHECK(LagrangianExpr::parse("v2", 3, 2).arity() == 9);
}

TEST_CASE("evaluation") {
    const auto e = LagrangianExpr::parse("0.5*(v1 - exp(x))^2", 1, 0);
    CHECK(e.eval(std::vector<double>{0.0, 0.0, 1.0}) == 0.0);
    CHECK(LagrangianExpr::parse("v1^2", 1, 0).eval(std::vector<double>{0.3, 7.0, 2.0}) == 4.0);
    CHECK(LagrangianExpr::parse("mlf(1, x)", 1, 0).eval(std::vector<double>{1.0, 0.0, 0.0}) ==
          doctest::Approx(2.7182818285).epsilon(1e-10));
    CHECK(LagrangianExpr::parse("gamma(x)", 1, 0).eval(std::vector<double>{5.0, 0.0, 0.0}) ==
          doctest::Approx(24.0).epsilon(1e-14));
    CHECK(LagrangianExpr::parse("2^3^2", 1, 0).eval(std::vector<double>{0, 0, 0}) == 512.0);
    CHECK(LagrangianExpr::parse("-2^2", 1, 0).eval(std::vector<double>{0, 0, 0}) == -4.0);
    CHECK(LagrangianExpr::parse("1 - 2 - 3", 1, 0).eval(std::vector<double>{0, 0, 0}) == -4.0);
    CHECK(LagrangianExpr::parse("pi", 1, 0).eval(std::vector<double>{0, 0, 0}) == doctest::Approx(M_PI));
}

TEST_CASE("partials of simple integrands") {
    const auto sq = LagrangianExpr::parse("v1^2", 1, 0);
    CHECK(sq.partials(std::vector<double>{0.2, 1.0, 3.0})[2] == 6.0);
    const auto bil = LagrangianExpr::parse("y1*v1", 1, 0);
    const auto g = bil.partials(std::vector<double>{0.2, 2.0, 5.0});
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 5.0);
    CHECK(g[2] == 2.0);
}

TEST_CASE("partials match central differences on random expressions") {
    ExprGen gen(2024);
    std::mt19937_64 rng(99);
    int checked = 0;
    for (int t = 0; t < 200; ++t) {
        const auto e = LagrangianExpr::parse(gen.make(4), 2, 1);
        const auto args = random_args(rng, e.arity());
        const auto grad = e.partials(args);
        for (int k = 0; k < e.arity(); ++k) {
            auto up = args;
            auto dn = args;
            const double h = 1e-6;
            up[static_cast<std::size_t>(k)] += h;
            dn[static_cast<std::size_t>(k)] -= h;
            const double fd = (e.eval(up) - e.eval(dn)) / (2 * h);
            const double g = grad[static_cast<std::size_t>(k)];
            INFO(e.source(), " slot ", k);
            CHECK(std::abs(g - fd) <= 1e-5 * (1 + std::abs(g)));
            ++checked;
        }
    }
    CHECK(checked == 200 * 6);
}

TEST_CASE("print then parse preserves values") {
    ExprGen gen(5);
    std::mt19937_64 rng(6);
    for (int t = 0; t < 50; ++t) {
        const auto e = LagrangianExpr::parse(gen.make(4), 2, 1);
        const auto back = LagrangianExpr::parse(e.print(), 2, 1);
        CHECK(back.print() == e.print());
        const auto args = random_args(rng, e.arity());
        CHECK(std::abs(back.eval(args) - e.eval(args)) <= 1e-15 * (1 + std::abs(e.eval(args))));
    }
}

TEST_CASE("syntax errors carry a column") {
    try {
        (void)LagrangianExpr::parse("v1 + * 2", 1, 0);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.column() == 6);
    }
    CHECK_THROWS_AS(LagrangianExpr::parse("", 1, 0), ParseError);
    CHECK_THROWS_AS(LagrangianExpr::parse("(v1", 1, 0), ParseError);
    CHECK_THROWS_AS(LagrangianExpr::parse("v2", 1, 0), ParseError);
    CHECK_THROWS_AS(LagrangianExpr::parse("p1", 1, 0), ParseError);
    CHECK_THROWS_AS(LagrangianExpr::parse("foo(x)", 1, 0), ParseError);
    CHECK_THROWS_AS(LagrangianExpr::parse("mlf(0.5)", 1, 0), ParseError);
    CHECK_THROWS_AS(LagrangianExpr::parse("sin(x, y1)", 1, 0), ParseError);
}

TEST_CASE("evaluation errors") {
    const auto e = LagrangianExpr::parse("ln(y1) + sqrt(v1)", 1, 0);
    CHECK_THROWS_AS(e.eval(std::vector<double>{0.0, 1.0}), DimensionError);
    CHECK_THROWS_AS(e.eval(std::vector<double>{0.0, -1.0, 1.0}), DomainError);
    CHECK_THROWS_AS(e.eval(std::vector<double>{0.0, 1.0, -1.0}), DomainError);
    CHECK_THROWS_AS(LagrangianExpr::parse("y1^0.5", 1, 0).eval(std::vector<double>{0.0, -2.0, 0.0}), DomainError);
}

TEST_CASE("mlf is not differentiated in its order") {
    const auto ok = LagrangianExpr::parse("mlf(0.5, y1)", 1, 0);
    const auto g = ok.partials(std::vector<double>{0.0, 1.0, 0.0});
    CHECK(g[1] == doctest::Approx(11.146339328620079507).epsilon(1e-12));
    const auto bad = LagrangianExpr::parse("mlf(0.5 + 0.1*y1, 1)", 1, 0);
    CHECK_THROWS_AS(bad.partials(std::vector<double>{0.0, 1.0, 0.0}), DifferentiationError);
}

TEST_CASE("depends_on reports referenced slots") {
    const auto e = LagrangianExpr::parse("x^2 + v2", 2, 0);
    CHECK(e.depends_on(e.slot_x()));
    CHECK(e.depends_on(e.slot_v(1)));
    CHECK_FALSE(e.depends_on(e.slot_y(0)));
    CHECK_FALSE(e.depends_on(e.slot_v(0)));
}

TEST_CASE("weighted sums and parameter combinations") {
    const std::vector<LagrangianExpr> terms{LagrangianExpr::parse("v1^2", 1, 0),
                                            LagrangianExpr::parse("y1^2", 1, 0)};
    const std::vector<double> w{0.25, 0.75};
    const auto s = LagrangianExpr::weighted_sum(terms, w);
    const std::vector<double> args{0.3, 2.0, -3.0};
    CHECK(s.eval(args) == doctest::Approx(0.25 * 9 + 0.75 * 4).epsilon(1e-15));

    const auto f = LagrangianExpr::parameter_combination(terms[0], terms, -1.0);
    CHECK(f.n_params() == 2);
    const std::vector<double> a2{0.3, 2.0, -3.0, 1.0, -1.0};
    CHECK(f.eval(a2) == doctest::Approx(9.0 - 9.0 + 4.0).epsilon(1e-15));
    CHECK_THROWS_AS(LagrangianExpr::weighted_sum(terms, std::vector<double>{1.0}), DimensionError);
}
}
