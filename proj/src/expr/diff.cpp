#include "evolab/error.hpp"
#include "evolab/expr.hpp"

namespace evolab {

namespace {

bool is_value(const Expr& e, double v)
{
    return e.node().kind == ExprNode::Kind::Constant && e.node().value == v;
}

bool is_literal(const Expr& e) { return e.node().kind == ExprNode::Kind::Constant; }

Expr lit(double v) { return Expr::constant(v); }

Expr s_neg(const Expr& a)
{
    if (is_literal(a)) {
        return lit(-a.node().value);
    }
    return -a;
}

Expr s_add(const Expr& a, const Expr& b)
{
    if (is_value(a, 0.0)) return b;
    if (is_value(b, 0.0)) return a;
    if (is_literal(a) && is_literal(b)) return lit(a.node().value + b.node().value);
    return a + b;
}

Expr s_sub(const Expr& a, const Expr& b)
{
    if (is_value(b, 0.0)) return a;
    if (is_value(a, 0.0)) return s_neg(b);
    if (is_literal(a) && is_literal(b)) return lit(a.node().value - b.node().value);
    return a - b;
}

Expr s_mul(const Expr& a, const Expr& b)
{
    if (is_value(a, 0.0) || is_value(b, 0.0)) return lit(0.0);
    if (is_value(a, 1.0)) return b;
    if (is_value(b, 1.0)) return a;
    if (is_literal(a) && is_literal(b)) return lit(a.node().value * b.node().value);
    if (is_value(a, -1.0)) return s_neg(b);
    if (is_value(b, -1.0)) return s_neg(a);
    return a * b;
}

Expr s_div(const Expr& a, const Expr& b)
{
    if (is_value(a, 0.0)) return lit(0.0);
    if (is_value(b, 1.0)) return a;
    if (is_literal(a) && is_literal(b) && b.node().value != 0.0) {
        return lit(a.node().value / b.node().value);
    }
    return a / b;
}

Expr s_pow(const Expr& a, const Expr& b)
{
    if (is_value(b, 1.0)) return a;
    if (is_value(b, 0.0)) return lit(1.0);
    return pow(a, b);
}

Expr d(const Expr& e, Variable v)
{
    const ExprNode& n = e.node();
    switch (n.kind) {
    case ExprNode::Kind::Constant:
        return lit(0.0);
    case ExprNode::Kind::Variable:
        if (n.var.kind == Variable::Kind::Radius) {
            throw UnsupportedForm("cannot differentiate `r`; expand it into coordinates first");
        }
        return lit(n.var == v ? 1.0 : 0.0);
    case ExprNode::Kind::Unary: {
        const Expr& u = n.lhs;
        const Expr du = d(u, v);
        switch (n.unary_op) {
        case UnaryOp::Neg: return s_neg(du);
        case UnaryOp::Sin: return s_mul(Expr::unary(UnaryOp::Cos, u), du);
        case UnaryOp::Cos: return s_mul(s_neg(Expr::unary(UnaryOp::Sin, u)), du);
        case UnaryOp::Exp: return s_mul(e, du);
        case UnaryOp::Log: return s_div(du, u);
        case UnaryOp::Sqrt: return s_div(du, s_mul(lit(2.0), e));
        case UnaryOp::Abs: return s_mul(du, s_div(u, e));
        }
        break;
    }
    case ExprNode::Kind::Binary: {
        const Expr& a = n.lhs;
        const Expr& b = n.rhs;
        if (n.binary_op == BinaryOp::Pow) {
            if (!is_constant(b)) {
                throw UnsupportedForm("exponent must not depend on variables: " + print(e));
            }
            const Expr da = d(a, v);
            if (is_value(da, 0.0)) {
                return lit(0.0);
            }
            const Expr lowered = is_literal(b) ? lit(b.node().value - 1.0) : b - lit(1.0);
            return s_mul(s_mul(b, s_pow(a, lowered)), da);
        }
        const Expr da = d(a, v);
        const Expr db = d(b, v);
        switch (n.binary_op) {
        case BinaryOp::Add: return s_add(da, db);
        case BinaryOp::Sub: return s_sub(da, db);
        case BinaryOp::Mul: return s_add(s_mul(da, b), s_mul(a, db));
        case BinaryOp::Div:
            return s_div(s_sub(s_mul(da, b), s_mul(a, db)), pow(b, lit(2.0)));
        case BinaryOp::Pow: break;
        }
        break;
    }
    case ExprNode::Kind::Call: {
        // max(a,b) = (a+b+|a-b|)/2, min(a,b) = (a+b-|a-b|)/2
        const Expr& a = n.lhs;
        const Expr& b = n.rhs;
        const Expr da = d(a, v);
        const Expr db = d(b, v);
        const Expr gap = a - b;
        const Expr kink = s_mul(s_sub(da, db), s_div(gap, Expr::unary(UnaryOp::Abs, gap)));
        const Expr sum = n.call_op == CallOp::Max ? s_add(s_add(da, db), kink)
                                                  : s_sub(s_add(da, db), kink);
        return s_div(sum, lit(2.0));
    }
    }
    return lit(0.0);
}

}  // namespace

Expr diff(const Expr& e, Variable var)
{
    if (var.kind == Variable::Kind::Radius) {
        throw UnsupportedForm("differentiation with respect to `r` is not defined");
    }
    return d(e, var);
}

}  // namespace evolab
