#include <doctest.h>

#include "evolab/error.hpp"
#include "evolab/expr.hpp"
#include "random_expr.hpp"

#include <cmath>
#include <vector>

using namespace evolab;

namespace {

double at(std::string_view src, int dim, double t, std::vector<double> x)
{
    return eval(parse(src, dim), t, x);
}

const Variable x1 = Variable::space(1);
const Variable x2 = Variable::space(2);
const Variable tv = Variable::time();

}  // namespace

TEST_SUITE("expr") {

TEST_CASE("parse and evaluate basic forms")
{
    CHECK(at("2*(1+x1^2)", 1, 0.0, {1.0}) == 4.0);
    CHECK(at("r^2", 2, 5.0, {3.0, 4.0}) == 25.0);
    CHECK(at("exp(-t)*r", 3, 0.0, {2.0, 3.0, 6.0}) == 7.0);
    CHECK(at("  1 +\t2 * 3 ", 1, 0.0, {0.0}) == 7.0);
    CHECK(at("max(x1, 2) - min(t, 1)", 1, 3.0, {0.5}) == 1.0);
    CHECK(at("1.5e2 + .5 + 2.", 1, 0.0, {0.0}) == 152.5);
    CHECK(at("2E-1", 1, 0.0, {0.0}) == 0.2);
}

TEST_CASE("precedence and associativity")
{
    CHECK(at("-2^2", 1, 0, {0}) == -4.0);
    CHECK(at("2^3^2", 1, 0, {0}) == 512.0);
    CHECK(at("2^-1", 1, 0, {0}) == 0.5);
    CHECK(at("8/4/2", 1, 0, {0}) == 1.0);
    CHECK(at("1-2-3", 1, 0, {0}) == -4.0);
    CHECK(at("--3", 1, 0, {0}) == 3.0);
    CHECK(at("2*-3", 1, 0, {0}) == -6.0);
}

TEST_CASE("parse errors carry offsets")
{
    CHECK_THROWS_AS(parse("x2+1", 1), ParseError);
    try {
        parse("1 + * 2", 1);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 4);
    }
    CHECK_THROWS_AS(parse("foo(1)", 1), ParseError);
    CHECK_THROWS_AS(parse("sin(1, 2)", 1), ParseError);
    CHECK_THROWS_AS(parse("max(1)", 1), ParseError);
    CHECK_THROWS_AS(parse("(1+2", 1), ParseError);
    CHECK_THROWS_AS(parse("", 1), ParseError);
    CHECK_THROWS_AS(parse("x0", 1), ParseError);
    CHECK_THROWS_AS(parse("t(2)", 1), ParseError);
    CHECK_THROWS_AS(parse("1 2", 1), ParseError);
}

TEST_CASE("domain errors name the node")
{
    CHECK_THROWS_AS(at("1/x1", 1, 0, {0.0}), DomainError);
    CHECK_THROWS_AS(at("log(x1)", 1, 0, {0.0}), DomainError);
    CHECK_THROWS_AS(at("sqrt(x1)", 1, 0, {-1.0}), DomainError);
    CHECK_THROWS_AS(at("x1^(-1)", 1, 0, {0.0}), DomainError);
    CHECK_THROWS_AS(at("x1^0.5", 1, 0, {-1.0}), DomainError);
    try {
        at("2 + log(x1 - 1)", 1, 0, {1.0});
        FAIL("expected a domain error");
    } catch (const DomainError& e) {
        CHECK(e.node() == "log(x1-1)");
    }
}

TEST_CASE("program matches recursive evaluation")
{
    const Expr e = parse("sin(x1)*exp(-t) + max(x2, r)^3 / (1 + x1^2) - sqrt(2 + cos(t*x2))", 2);
    const Program p(e);
    for (double t : {0.0, 0.3, 1.7}) {
        for (double a : {-1.2, 0.0, 0.8}) {
            std::vector<double> x{a, 0.5 - a};
            CHECK(p(t, x) == eval(e, t, x));
        }
    }
    CHECK(Program(parse("3*2", 1)).constant());
    CHECK_FALSE(Program(parse("t", 1)).constant());
    CHECK_THROWS_AS(Program(parse("1/x1", 1))(0.0, std::vector<double>{0.0}), DomainError);
}

TEST_CASE("power uses squaring for small integer exponents")
{
    CHECK(power(3.0, 2.0) == 9.0);
    CHECK(power(2.0, -3.0) == 0.125);
    CHECK(power(-2.0, 3.0) == -8.0);
    CHECK(power(7.0, 0.0) == 1.0);
    CHECK(power(2.0, 0.5) == std::pow(2.0, 0.5));
    const double x = 1.0 + 1e-3;
    CHECK(power(x, 2.0) == x * x);
}

TEST_CASE("derivative examples")
{
    CHECK(print(diff(parse("x1^2", 1), x1)) == "2*x1");
    CHECK(print(diff(parse("sin(x1)*x2", 2), x2)) == "sin(x1)");
    CHECK(print(diff(parse("exp(-t)*x1", 1), tv)) == "-exp(-t)*x1");
    CHECK(print(diff(parse("3", 1), x1)) == "0");
    CHECK(print(diff(parse("x1 + 5", 1), x1)) == "1");
}

TEST_CASE("derivative refuses unsupported forms")
{
    CHECK_THROWS_AS(diff(parse("r^2", 2), x1), UnsupportedForm);
    CHECK_THROWS_AS(diff(parse("2^x1", 1), x1), UnsupportedForm);
    CHECK_THROWS_AS(diff(parse("x1^t", 1), x1), UnsupportedForm);
    CHECK_NOTHROW(diff(parse("x1^(2*3)", 1), x1));
    CHECK_THROWS_AS(diff(parse("x1", 1), Variable::radius()), UnsupportedForm);
}

TEST_CASE("radius expansion")
{
    const Expr e = expand_radius(parse("r^2 + r + r^4", 2), 2);
    CHECK_FALSE(contains_radius(e));
    std::vector<double> x{3.0, 4.0};
    CHECK(eval(e, 0.0, x) == 25.0 + 5.0 + 625.0);
    // r^2 stays polynomial, so its derivative exists at the origin
    const Expr d = diff(expand_radius(parse("r^2", 2), 2), x1);
    CHECK(eval(d, 0.0, std::vector<double>{0.0, 0.0}) == 0.0);
    CHECK(print(expand_radius(parse("r", 3), 3)) == "sqrt(x1^2+x2^2+x3^2)");
}

TEST_CASE("max and min derivatives away from ties")
{
    const Expr e = parse("max(x1, x2^2)", 2);
    const Expr d1 = diff(e, x1);
    CHECK(eval(d1, 0, std::vector<double>{2.0, 1.0}) == doctest::Approx(1.0));
    CHECK(eval(d1, 0, std::vector<double>{0.5, 1.0}) == doctest::Approx(0.0));
    const Expr m = diff(parse("min(x1, x2^2)", 2), x2);
    CHECK(eval(m, 0, std::vector<double>{2.0, 1.0}) == doctest::Approx(2.0));
    CHECK_THROWS_AS(eval(d1, 0, std::vector<double>{1.0, 1.0}), DomainError);
}

TEST_CASE("derivatives agree with central differences on random expressions")
{
    testing::ExprGenerator gen(12345, 2);
    int checked = 0;
    while (checked < 200) {
        const auto re = gen.next(3);
        const auto pt = testing::smooth_point(gen, re);
        if (!pt) {
            continue;
        }
        const auto& [t, x] = *pt;
        for (Variable v : {x1, x2, tv}) {
            const double exact = eval(diff(re.expr, v), t, x);
            const double fd = testing::central_difference(re.expr, v, t, x, 1e-5);
            INFO(print(re.expr), " d/d", to_string(v));
            CHECK(std::abs(exact - fd) <= 1e-6 * (1.0 + std::abs(fd)));
        }
        ++checked;
    }
}

TEST_CASE("print round-trips exactly")
{
    testing::ExprGenerator gen(777, 3);
    for (int k = 0; k < 100; ++k) {
        const Expr e = gen.next(4).expr;
        const Expr back = parse(print(e), 3);
        CHECK(print(parse(print(back), 3)) == print(back));
        for (int p = 0; p < 50; ++p) {
            auto [t, x] = gen.point();
            double a = 0;
            double b = 0;
            bool ea = false;
            bool eb = false;
            try { a = eval(e, t, x); } catch (const DomainError&) { ea = true; }
            try { b = eval(back, t, x); } catch (const DomainError&) { eb = true; }
            CHECK(ea == eb);
            if (!ea && !eb && !std::isnan(a)) {
                CHECK(a == b);
            }
        }
    }
    CHECK(print(parse("-2^2", 1)) == "-2^2");
    CHECK(print(parse("(-2)^2", 1)) == "(-2)^2");
    CHECK(print(parse("(1-2)-(3-4)", 1)) == "1-2-(3-4)");
    CHECK(print(parse("0.1 + 1e-7 + 123456789", 1)) == "0.1+1e-07+123456789");
    CHECK(print(Expr::constant(-0.5) * Expr::variable(x1)) == "(-0.5)*x1");
}

TEST_CASE("derivative is linear")
{
    testing::ExprGenerator gen(4242, 2);
    for (int k = 0; k < 50; ++k) {
        const Expr a = gen.next(3).expr;
        const Expr b = gen.next(3).expr;
        const Expr sum = diff(a + b, x1);
        const Expr da = diff(a, x1);
        const Expr db = diff(b, x1);
        auto [t, x] = gen.point();
        try {
            const double lhs = eval(sum, t, x);
            CHECK(lhs == eval(da, t, x) + eval(db, t, x));
        } catch (const DomainError&) {
        }
    }
}

}
