#include "evolab/expr.hpp"
#include "expr_detail.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace evolab {

namespace {

// Binding strength of the printed form; higher binds tighter.
enum Prec : int { Sum = 1, Product = 2, Negation = 3, Power = 4, Atom = 5 };

int precedence(const ExprNode& n)
{
    switch (n.kind) {
    case ExprNode::Kind::Constant:
    case ExprNode::Kind::Variable:
    case ExprNode::Kind::Call:
        return Atom;
    case ExprNode::Kind::Unary:
        return n.unary_op == UnaryOp::Neg ? Negation : Atom;
    case ExprNode::Kind::Binary:
        switch (n.binary_op) {
        case BinaryOp::Add:
        case BinaryOp::Sub: return Sum;
        case BinaryOp::Mul:
        case BinaryOp::Div: return Product;
        case BinaryOp::Pow: return Power;
        }
    }
    return Atom;
}

void number(std::string& out, double v)
{
    std::array<char, 64> buf{};
    const bool negative = std::signbit(v);
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), std::fabs(v));
    (void)ec;
    if (negative) {
        out += "(-";
        out.append(buf.data(), ptr);
        out += ')';
    } else {
        out.append(buf.data(), ptr);
    }
}

void emit(std::string& out, const ExprNode& n);

void emit_wrapped(std::string& out, const ExprNode& n, bool wrap)
{
    if (wrap) {
        out += '(';
    }
    emit(out, n);
    if (wrap) {
        out += ')';
    }
}

void emit(std::string& out, const ExprNode& n)
{
    switch (n.kind) {
    case ExprNode::Kind::Constant:
        number(out, n.value);
        return;
    case ExprNode::Kind::Variable:
        out += to_string(n.var);
        return;
    case ExprNode::Kind::Unary: {
        static constexpr const char* names[] = {"-", "sin", "cos", "exp", "log", "sqrt", "abs"};
        if (n.unary_op == UnaryOp::Neg) {
            out += '-';
            emit_wrapped(out, n.lhs.node(), precedence(n.lhs.node()) < Negation);
            return;
        }
        out += names[static_cast<int>(n.unary_op)];
        emit_wrapped(out, n.lhs.node(), true);
        return;
    }
    case ExprNode::Kind::Binary: {
        const ExprNode& a = n.lhs.node();
        const ExprNode& b = n.rhs.node();
        if (n.binary_op == BinaryOp::Pow) {
            emit_wrapped(out, a, precedence(a) < Atom);
            out += '^';
            emit_wrapped(out, b, precedence(b) < Negation);
            return;
        }
        static constexpr char symbols[] = {'+', '-', '*', '/'};
        const int p = precedence(n);
        emit_wrapped(out, a, precedence(a) < p);
        out += symbols[static_cast<int>(n.binary_op)];
        emit_wrapped(out, b, precedence(b) <= p);
        return;
    }
    case ExprNode::Kind::Call:
        out += n.call_op == CallOp::Min ? "min(" : "max(";
        emit(out, n.lhs.node());
        out += ',';
        emit(out, n.rhs.node());
        out += ')';
        return;
    }
}

}  // namespace

std::string detail::print_node(const ExprNode& n)
{
    std::string out;
    emit(out, n);
    return out;
}

std::string print(const Expr& e)
{
    return detail::print_node(e.node());
}

}  // namespace evolab
