#include "evolab/error.hpp"
#include "evolab/expr.hpp"

#include <cctype>
#include <charconv>
#include <optional>

namespace evolab {

namespace {

class Parser {
public:
    Parser(std::string_view src, int dim)
        : src_(src)
        , dim_(dim)
    {}

    Expr run()
    {
        Expr e = expr();
        skip_ws();
        if (pos_ != src_.size()) {
            throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
        }
        return e;
    }

private:
    void skip_ws()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) {
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
    }

    Expr expr()
    {
        Expr lhs = term();
        for (;;) {
            if (accept('+')) {
                lhs = lhs + term();
            } else if (accept('-')) {
                lhs = lhs - term();
            } else {
                return lhs;
            }
        }
    }

    Expr term()
    {
        Expr lhs = factor();
        for (;;) {
            if (accept('*')) {
                lhs = lhs * factor();
            } else if (accept('/')) {
                lhs = lhs / factor();
            } else {
                return lhs;
            }
        }
    }

    Expr factor()
    {
        if (accept('-')) {
            return -factor();
        }
        return power();
    }

    Expr power()
    {
        Expr base = atom();
        if (accept('^')) {
            return pow(base, factor());
        }
        return base;
    }

    Expr atom()
    {
        skip_ws();
        if (pos_ >= src_.size()) {
            throw ParseError("unexpected end of input", pos_);
        }
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return number();
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            return identifier();
        }
        if (accept('(')) {
            Expr inner = expr();
            expect(')');
            return inner;
        }
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    Expr number()
    {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t mantissa = digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            mantissa += digits();
        }
        if (mantissa == 0) {
            throw ParseError("malformed number", start);
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) {
                ++pos_;
            }
            if (digits() == 0) {
                pos_ = save;
            }
        }
        std::string_view text = src_.substr(start, pos_ - start);
        // from_chars rejects a leading '+' in the exponent only on some libraries
        std::string buf(text);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(buf.data(), buf.data() + buf.size(), v);
        if (ec != std::errc() || ptr != buf.data() + buf.size()) {
            throw ParseError("malformed number", start);
        }
        return Expr::constant(v);
    }

    Expr identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < src_.size()
               && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        const std::string_view name = src_.substr(start, pos_ - start);

        if (auto op = unary_function(name)) {
            expect('(');
            Expr arg = expr();
            if (accept(',')) {
                throw ParseError(std::string(name) + " takes one argument", pos_ - 1);
            }
            expect(')');
            return Expr::unary(*op, arg);
        }
        if (name == "min" || name == "max") {
            expect('(');
            Expr a = expr();
            if (!accept(',')) {
                throw ParseError(std::string(name) + " takes two arguments", pos_);
            }
            Expr b = expr();
            expect(')');
            return Expr::call(name == "min" ? CallOp::Min : CallOp::Max, a, b);
        }

        Expr var;
        if (name == "t") {
            var = Expr::variable(Variable::time());
        } else if (name == "r") {
            var = Expr::variable(Variable::radius());
        } else if (name.size() >= 2 && name[0] == 'x') {
            int index = 0;
            auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
            if (ec != std::errc() || ptr != name.data() + name.size() || name[1] == '0') {
                throw ParseError("unknown identifier '" + std::string(name) + "'", start);
            }
            if (index > dim_) {
                throw ParseError("coordinate '" + std::string(name) + "' exceeds dimension "
                                     + std::to_string(dim_),
                                 start);
            }
            var = Expr::variable(Variable::space(index));
        } else {
            throw ParseError("unknown identifier '" + std::string(name) + "'", start);
        }
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == '(') {
            throw ParseError("'" + std::string(name) + "' is not a function", start);
        }
        return var;
    }

    static std::optional<UnaryOp> unary_function(std::string_view name)
    {
        if (name == "sin") return UnaryOp::Sin;
        if (name == "cos") return UnaryOp::Cos;
        if (name == "exp") return UnaryOp::Exp;
        if (name == "log") return UnaryOp::Log;
        if (name == "sqrt") return UnaryOp::Sqrt;
        if (name == "abs") return UnaryOp::Abs;
        return std::nullopt;
    }

    std::string_view src_;
    int dim_;
    std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view source, int dim)
{
    return Parser(source, dim).run();
}

}  // namespace evolab
