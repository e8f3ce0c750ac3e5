#include "evolab/expr.hpp"

#include "evolab/error.hpp"
#include "expr_detail.hpp"

#include <algorithm>
#include <cmath>

namespace evolab {

std::string to_string(const Variable& v)
{
    switch (v.kind) {
    case Variable::Kind::Time: return "t";
    case Variable::Kind::Radius: return "r";
    case Variable::Kind::Space: return "x" + std::to_string(v.index);
    }
    return "?";
}

Expr Expr::constant(double v)
{
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Constant;
    n->value = v;
    return Expr(std::move(n));
}

Expr Expr::variable(Variable v)
{
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Variable;
    n->var = v;
    return Expr(std::move(n));
}

Expr Expr::unary(UnaryOp op, Expr arg)
{
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Unary;
    n->unary_op = op;
    n->lhs = std::move(arg);
    return Expr(std::move(n));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs)
{
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Binary;
    n->binary_op = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return Expr(std::move(n));
}

Expr Expr::call(CallOp op, Expr a, Expr b)
{
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Call;
    n->call_op = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return Expr(std::move(n));
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Div, a, b); }
Expr operator-(const Expr& a) { return Expr::unary(UnaryOp::Neg, a); }
Expr pow(const Expr& base, const Expr& exponent) { return Expr::binary(BinaryOp::Pow, base, exponent); }

double power(double base, double exponent)
{
    if (exponent == std::trunc(exponent) && std::fabs(exponent) <= 16.0) {
        auto n = static_cast<unsigned>(std::fabs(exponent));
        double result = 1.0;
        double b = base;
        while (n != 0) {
            if (n & 1u) {
                result *= b;
            }
            b *= b;
            n >>= 1u;
        }
        return exponent < 0 ? 1.0 / result : result;
    }
    return std::pow(base, exponent);
}

namespace detail {

double apply_unary(UnaryOp op, double a, const ExprNode& node)
{
    switch (op) {
    case UnaryOp::Neg: return -a;
    case UnaryOp::Sin: return std::sin(a);
    case UnaryOp::Cos: return std::cos(a);
    case UnaryOp::Exp: return std::exp(a);
    case UnaryOp::Log:
        if (!(a > 0.0)) {
            throw DomainError("log of non-positive value", print_node(node));
        }
        return std::log(a);
    case UnaryOp::Sqrt:
        if (a < 0.0 || std::isnan(a)) {
            throw DomainError("sqrt of negative value", print_node(node));
        }
        return std::sqrt(a);
    case UnaryOp::Abs: return std::fabs(a);
    }
    return 0.0;
}

double apply_binary(BinaryOp op, double a, double b, const ExprNode& node)
{
    switch (op) {
    case BinaryOp::Add: return a + b;
    case BinaryOp::Sub: return a - b;
    case BinaryOp::Mul: return a * b;
    case BinaryOp::Div:
        if (b == 0.0) {
            throw DomainError("division by zero", print_node(node));
        }
        return a / b;
    case BinaryOp::Pow:
        if (a == 0.0 && b < 0.0) {
            throw DomainError("zero raised to a negative power", print_node(node));
        }
        if (a < 0.0 && b != std::trunc(b)) {
            throw DomainError("negative base with non-integer exponent", print_node(node));
        }
        return power(a, b);
    }
    return 0.0;
}

double radius_of(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x) {
        s += v * v;
    }
    return std::sqrt(s);
}

}  // namespace detail

namespace {

double eval_node(const ExprNode& n, double t, std::span<const double> x)
{
    switch (n.kind) {
    case ExprNode::Kind::Constant:
        return n.value;
    case ExprNode::Kind::Variable:
        switch (n.var.kind) {
        case Variable::Kind::Time: return t;
        case Variable::Kind::Radius: return detail::radius_of(x);
        case Variable::Kind::Space: return x[static_cast<std::size_t>(n.var.index - 1)];
        }
        return 0.0;
    case ExprNode::Kind::Unary:
        return detail::apply_unary(n.unary_op, eval_node(n.lhs.node(), t, x), n);
    case ExprNode::Kind::Binary: {
        const double a = eval_node(n.lhs.node(), t, x);
        const double b = eval_node(n.rhs.node(), t, x);
        return detail::apply_binary(n.binary_op, a, b, n);
    }
    case ExprNode::Kind::Call: {
        const double a = eval_node(n.lhs.node(), t, x);
        const double b = eval_node(n.rhs.node(), t, x);
        return n.call_op == CallOp::Min ? std::min(a, b) : std::max(a, b);
    }
    }
    return 0.0;
}

template <typename Fn>
void visit(const ExprNode& n, Fn&& fn)
{
    fn(n);
    if (n.lhs.valid()) {
        visit(n.lhs.node(), fn);
    }
    if (n.rhs.valid()) {
        visit(n.rhs.node(), fn);
    }
}

}  // namespace

double eval(const Expr& e, double t, std::span<const double> x)
{
    if (static_cast<int>(x.size()) < max_space_index(e)) {
        throw std::invalid_argument("eval: point has fewer coordinates than the expression uses");
    }
    return eval_node(e.node(), t, x);
}

bool contains_radius(const Expr& e) { return depends_on(e, Variable::radius()); }

bool depends_on(const Expr& e, Variable v)
{
    bool found = false;
    visit(e.node(), [&](const ExprNode& n) {
        if (n.kind == ExprNode::Kind::Variable && n.var == v) {
            found = true;
        }
    });
    return found;
}

bool is_constant(const Expr& e)
{
    bool found = false;
    visit(e.node(), [&](const ExprNode& n) {
        if (n.kind == ExprNode::Kind::Variable) {
            found = true;
        }
    });
    return !found;
}

int max_space_index(const Expr& e)
{
    int m = 0;
    visit(e.node(), [&](const ExprNode& n) {
        if (n.kind == ExprNode::Kind::Variable && n.var.kind == Variable::Kind::Space) {
            m = std::max(m, n.var.index);
        }
    });
    return m;
}

std::size_t node_count(const Expr& e)
{
    std::size_t c = 0;
    visit(e.node(), [&](const ExprNode&) { ++c; });
    return c;
}

Expr expand_radius(const Expr& e, int dim)
{
    const ExprNode& n = e.node();
    auto sum_sq = [dim] {
        Expr s;
        for (int i = 1; i <= dim; ++i) {
            Expr term = pow(Expr::variable(Variable::space(i)), Expr::constant(2.0));
            s = s.valid() ? s + term : term;
        }
        return s;
    };
    switch (n.kind) {
    case ExprNode::Kind::Constant:
        return e;
    case ExprNode::Kind::Variable:
        if (n.var.kind == Variable::Kind::Radius) {
            return Expr::unary(UnaryOp::Sqrt, sum_sq());
        }
        return e;
    case ExprNode::Kind::Unary:
        return Expr::unary(n.unary_op, expand_radius(n.lhs, dim));
    case ExprNode::Kind::Binary: {
        const ExprNode& base = n.lhs.node();
        const ExprNode& ex = n.rhs.node();
        if (n.binary_op == BinaryOp::Pow && base.kind == ExprNode::Kind::Variable
            && base.var.kind == Variable::Kind::Radius && ex.kind == ExprNode::Kind::Constant
            && std::fmod(ex.value, 2.0) == 0.0) {
            const double half = ex.value / 2.0;
            if (half == 1.0) {
                return sum_sq();
            }
            return pow(sum_sq(), Expr::constant(half));
        }
        return Expr::binary(n.binary_op, expand_radius(n.lhs, dim), expand_radius(n.rhs, dim));
    }
    case ExprNode::Kind::Call:
        return Expr::call(n.call_op, expand_radius(n.lhs, dim), expand_radius(n.rhs, dim));
    }
    return e;
}

// ---------------------------------------------------------------------------
// Program

Program::Program(const Expr& e)
    : source_(e)
{
    emit(e.node(), 1);
    dim_needed_ = max_space_index(e);
}

void Program::emit(const ExprNode& n, int depth)
{
    max_stack_ = std::max(max_stack_, depth);
    switch (n.kind) {
    case ExprNode::Kind::Constant:
        code_.push_back({Op::Const, 0, n.value, &n});
        return;
    case ExprNode::Kind::Variable:
        constant_ = false;
        switch (n.var.kind) {
        case Variable::Kind::Time: code_.push_back({Op::Time, 0, 0.0, &n}); return;
        case Variable::Kind::Radius: code_.push_back({Op::Radius, 0, 0.0, &n}); return;
        case Variable::Kind::Space: code_.push_back({Op::Space, n.var.index - 1, 0.0, &n}); return;
        }
        return;
    case ExprNode::Kind::Unary: {
        emit(n.lhs.node(), depth);
        static constexpr Op table[] = {Op::Neg, Op::Sin, Op::Cos, Op::Exp, Op::Log, Op::Sqrt, Op::Abs};
        code_.push_back({table[static_cast<int>(n.unary_op)], 0, 0.0, &n});
        return;
    }
    case ExprNode::Kind::Binary: {
        emit(n.lhs.node(), depth);
        emit(n.rhs.node(), depth + 1);
        static constexpr Op table[] = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow};
        code_.push_back({table[static_cast<int>(n.binary_op)], 0, 0.0, &n});
        return;
    }
    case ExprNode::Kind::Call:
        emit(n.lhs.node(), depth);
        emit(n.rhs.node(), depth + 1);
        code_.push_back({n.call_op == CallOp::Min ? Op::Min : Op::Max, 0, 0.0, &n});
        return;
    }
}

void Program::fail(const Instr& in, const char* what) const
{
    throw DomainError(what, detail::print_node(*in.node));
}

double Program::operator()(double t, std::span<const double> x) const
{
    if (static_cast<int>(x.size()) < dim_needed_) {
        throw std::invalid_argument("Program: point has fewer coordinates than the expression uses");
    }
    constexpr int inline_capacity = 32;
    double inline_stack[inline_capacity] = {};
    std::vector<double> heap;
    double* stack = inline_stack;
    if (max_stack_ > inline_capacity) {
        heap.resize(static_cast<std::size_t>(max_stack_));
        stack = heap.data();
    }
    int sp = 0;
    for (const Instr& in : code_) {
        switch (in.op) {
        case Op::Const: stack[sp++] = in.value; break;
        case Op::Time: stack[sp++] = t; break;
        case Op::Space: stack[sp++] = x[static_cast<std::size_t>(in.index)]; break;
        case Op::Radius: stack[sp++] = detail::radius_of(x); break;
        case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
        case Op::Sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
        case Op::Cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
        case Op::Exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
        case Op::Abs: stack[sp - 1] = std::fabs(stack[sp - 1]); break;
        case Op::Log:
            if (!(stack[sp - 1] > 0.0)) {
                fail(in, "log of non-positive value");
            }
            stack[sp - 1] = std::log(stack[sp - 1]);
            break;
        case Op::Sqrt:
            if (stack[sp - 1] < 0.0 || std::isnan(stack[sp - 1])) {
                fail(in, "sqrt of negative value");
            }
            stack[sp - 1] = std::sqrt(stack[sp - 1]);
            break;
        case Op::Add: --sp; stack[sp - 1] = stack[sp - 1] + stack[sp]; break;
        case Op::Sub: --sp; stack[sp - 1] = stack[sp - 1] - stack[sp]; break;
        case Op::Mul: --sp; stack[sp - 1] = stack[sp - 1] * stack[sp]; break;
        case Op::Div:
            --sp;
            if (stack[sp] == 0.0) {
                fail(in, "division by zero");
            }
            stack[sp - 1] = stack[sp - 1] / stack[sp];
            break;
        case Op::Pow:
            --sp;
            stack[sp - 1] = detail::apply_binary(BinaryOp::Pow, stack[sp - 1], stack[sp], *in.node);
            break;
        case Op::Min: --sp; stack[sp - 1] = std::min(stack[sp - 1], stack[sp]); break;
        case Op::Max: --sp; stack[sp - 1] = std::max(stack[sp - 1], stack[sp]); break;
        }
    }
    return stack[0];
}

}  // namespace evolab
