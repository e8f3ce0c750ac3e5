#pragma once

/// Scalar coefficient expressions of (t, x1..xd).
///
/// Grammar (whitespace-insensitive):
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | power
///   power  := atom ('^' factor)?
///   atom   := number | ident | ident '(' expr (',' expr)? ')' | '(' expr ')'
///
/// Identifiers: `t`, `x1`..`xd`, `r` (= |x|), unary functions
/// sin cos exp log sqrt abs, binary functions min max.
///
/// Expr values are immutable and share structure; copying is cheap.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evolab {

/// A variable an expression may depend on.
struct Variable {
    enum class Kind : std::uint8_t { Time, Space, Radius };

    Kind kind = Kind::Time;
    int index = 0;  // 1-based for Space, 0 otherwise

    static constexpr Variable time() { return {Kind::Time, 0}; }
    static constexpr Variable space(int i) { return {Kind::Space, i}; }
    static constexpr Variable radius() { return {Kind::Radius, 0}; }

    friend constexpr bool operator==(const Variable&, const Variable&) = default;
};

std::string to_string(const Variable& v);

enum class UnaryOp : std::uint8_t { Neg, Sin, Cos, Exp, Log, Sqrt, Abs };
enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div, Pow };
enum class CallOp : std::uint8_t { Min, Max };

struct ExprNode;

class Expr {
public:
    Expr() = default;

    static Expr constant(double v);
    static Expr variable(Variable v);
    static Expr unary(UnaryOp op, Expr arg);
    static Expr binary(BinaryOp op, Expr lhs, Expr rhs);
    static Expr call(CallOp op, Expr a, Expr b);

    bool valid() const noexcept { return node_ != nullptr; }
    const ExprNode& node() const { return *node_; }
    const ExprNode* get() const noexcept { return node_.get(); }

private:
    explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
    std::shared_ptr<const ExprNode> node_;
};

struct ExprNode {
    enum class Kind : std::uint8_t { Constant, Variable, Unary, Binary, Call };

    Kind kind = Kind::Constant;
    double value = 0.0;
    Variable var{};
    UnaryOp unary_op = UnaryOp::Neg;
    BinaryOp binary_op = BinaryOp::Add;
    CallOp call_op = CallOp::Min;
    Expr lhs;  // operand of Unary, left of Binary/Call
    Expr rhs;  // right of Binary/Call
};

// Plain structural builders; no simplification.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, const Expr& exponent);

/// Parse `source` for a spatial dimension `dim`.
/// Throws ParseError (syntax, unknown identifier, arity, or x_i with i > dim).
Expr parse(std::string_view source, int dim);

/// Recursive evaluation. `x` must hold at least max_space_index(e) entries.
/// Throws DomainError naming the offending node.
double eval(const Expr& e, double t, std::span<const double> x);

/// Exact symbolic derivative. Requires no `r` node (see expand_radius) and
/// constant exponents on every `^`; otherwise throws UnsupportedForm.
/// Folds 0*e, 1*e, e+0, e-0 and constant-only subtrees.
Expr diff(const Expr& e, Variable var);

/// Print in the parse grammar; parse(print(e)) evaluates bit-identically to e.
std::string print(const Expr& e);

/// Replace every `r` by sqrt(x1^2+..+xd^2). `r^k` with an even integer k is
/// rewritten to (x1^2+..+xd^2)^(k/2) so that it stays differentiable at 0.
Expr expand_radius(const Expr& e, int dim);

bool contains_radius(const Expr& e);
bool depends_on(const Expr& e, Variable v);
/// True when the expression has no variables at all.
bool is_constant(const Expr& e);
/// Largest i among the x_i occurring in e, 0 when none.
int max_space_index(const Expr& e);
/// Number of nodes (for diagnostics and test generators).
std::size_t node_count(const Expr& e);

/// `a^b` used by every evaluation path: integer exponents up to 16 in
/// magnitude go through repeated squaring, the rest through std::pow.
double power(double base, double exponent);

/// Flat postfix program for hot loops; evaluates exactly like eval().
class Program {
public:
    Program() = default;
    explicit Program(const Expr& e);

    double operator()(double t, std::span<const double> x) const;

    bool constant() const noexcept { return constant_; }
    const Expr& source() const noexcept { return source_; }

private:
    enum class Op : std::uint8_t {
        Const, Time, Space, Radius,
        Neg, Sin, Cos, Exp, Log, Sqrt, Abs,
        Add, Sub, Mul, Div, Pow, Min, Max
    };
    struct Instr {
        Op op;
        int index;
        double value;
        const ExprNode* node;
    };

    void emit(const ExprNode& n, int depth);
    [[noreturn]] void fail(const Instr& in, const char* what) const;

    Expr source_;
    std::vector<Instr> code_;
    int max_stack_ = 0;
    int dim_needed_ = 0;
    bool constant_ = true;
};

}  // namespace evolab
