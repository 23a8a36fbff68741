#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "atv/errors.hpp"

namespace atv {

/// Closed-form scalar field on R^N, parsed from a small grammar:
///   numbers, x y z (or x1 x2 x3), pi, e, + - * / ^, sin cos exp, parentheses.
/// Exponents must be constant. Derivatives are built symbolically.
class Expression {
  public:
    enum class Kind { constant, variable, add, sub, mul, div, neg, pow, sin, cos, exp };

    Expression() : Expression(constant(0.0)) {}

    static Expression parse(std::string_view text);
    static Expression constant(double v) { return Expression(std::make_shared<Node>(Node{Kind::constant, v, 0, {}, {}})); }
    static Expression variable(std::size_t k) { return Expression(std::make_shared<Node>(Node{Kind::variable, 0.0, k, {}, {}})); }

    double operator()(std::span<const double> x) const { return eval(*node_, x); }
    double operator()(double x) const { return eval(*node_, std::span<const double>(&x, 1)); }

    /// Partial derivative with respect to coordinate k.
    Expression derivative(std::size_t k) const { return Expression(diff(node_, k)); }

    bool is_constant() const { return constant_node(*node_); }
    /// Highest coordinate index referenced plus one.
    std::size_t arity() const { return arity_of(*node_); }
    const std::string& source() const { return source_; }

  private:
    struct Node;
    using Ptr = std::shared_ptr<const Node>;
    struct Node {
        Kind kind;
        double value;
        std::size_t var;
        Ptr a;
        Ptr b;
    };

    explicit Expression(Ptr p) : node_(std::move(p)) {}

    static Ptr make(Kind k, Ptr a, Ptr b = {}) {
        // Light folding keeps derivative trees small.
        const bool ca = a && a->kind == Kind::constant;
        const bool cb = b && b->kind == Kind::constant;
        switch (k) {
            case Kind::add:
                if (ca && a->value == 0.0) return b;
                if (cb && b->value == 0.0) return a;
                if (ca && cb) return lit(a->value + b->value);
                break;
            case Kind::sub:
                if (cb && b->value == 0.0) return a;
                if (ca && cb) return lit(a->value - b->value);
                break;
            case Kind::mul:
                if ((ca && a->value == 0.0) || (cb && b->value == 0.0)) return lit(0.0);
                if (ca && a->value == 1.0) return b;
                if (cb && b->value == 1.0) return a;
                if (ca && cb) return lit(a->value * b->value);
                break;
            case Kind::div:
                if (ca && a->value == 0.0) return lit(0.0);
                if (cb && b->value == 1.0) return a;
                break;
            case Kind::neg:
                if (ca) return lit(-a->value);
                break;
            default:
                break;
        }
        return std::make_shared<Node>(Node{k, 0.0, 0, std::move(a), std::move(b)});
    }
    static Ptr lit(double v) { return std::make_shared<Node>(Node{Kind::constant, v, 0, {}, {}}); }

    static double eval(const Node& n, std::span<const double> x) {
        switch (n.kind) {
            case Kind::constant: return n.value;
            case Kind::variable:
                if (n.var >= x.size()) throw PreconditionError("expression uses a coordinate beyond the domain dimension");
                return x[n.var];
            case Kind::add: return eval(*n.a, x) + eval(*n.b, x);
            case Kind::sub: return eval(*n.a, x) - eval(*n.b, x);
            case Kind::mul: return eval(*n.a, x) * eval(*n.b, x);
            case Kind::div: return eval(*n.a, x) / eval(*n.b, x);
            case Kind::neg: return -eval(*n.a, x);
            case Kind::pow: return std::pow(eval(*n.a, x), eval(*n.b, x));
            case Kind::sin: return std::sin(eval(*n.a, x));
            case Kind::cos: return std::cos(eval(*n.a, x));
            case Kind::exp: return std::exp(eval(*n.a, x));
        }
        return 0.0;
    }

    static bool constant_node(const Node& n) {
        if (n.kind == Kind::variable) return false;
        if (n.kind == Kind::constant) return true;
        return (!n.a || constant_node(*n.a)) && (!n.b || constant_node(*n.b));
    }

    static std::size_t arity_of(const Node& n) {
        if (n.kind == Kind::variable) return n.var + 1;
        std::size_t r = 0;
        if (n.a) r = std::max(r, arity_of(*n.a));
        if (n.b) r = std::max(r, arity_of(*n.b));
        return r;
    }

    static Ptr diff(const Ptr& p, std::size_t k) {
        const Node& n = *p;
        switch (n.kind) {
            case Kind::constant: return lit(0.0);
            case Kind::variable: return lit(n.var == k ? 1.0 : 0.0);
            case Kind::add: return make(Kind::add, diff(n.a, k), diff(n.b, k));
            case Kind::sub: return make(Kind::sub, diff(n.a, k), diff(n.b, k));
            case Kind::neg: return make(Kind::neg, diff(n.a, k));
            case Kind::mul:
                return make(Kind::add, make(Kind::mul, diff(n.a, k), n.b), make(Kind::mul, n.a, diff(n.b, k)));
            case Kind::div:
                return make(Kind::div,
                            make(Kind::sub, make(Kind::mul, diff(n.a, k), n.b), make(Kind::mul, n.a, diff(n.b, k))),
                            make(Kind::mul, n.b, n.b));
            case Kind::pow: {
                // Exponent is constant by construction.
                const Ptr reduced = make(Kind::sub, n.b, lit(1.0));
                return make(Kind::mul, make(Kind::mul, n.b, make(Kind::pow, n.a, reduced)), diff(n.a, k));
            }
            case Kind::sin: return make(Kind::mul, make(Kind::cos, n.a), diff(n.a, k));
            case Kind::cos: return make(Kind::mul, make(Kind::neg, make(Kind::sin, n.a)), diff(n.a, k));
            case Kind::exp: return make(Kind::mul, p, diff(n.a, k));
        }
        return lit(0.0);
    }

    class Parser;

    Ptr node_;
    std::string source_;
};

class Expression::Parser {
  public:
    explicit Parser(std::string_view s) : s_(s) {}

    Ptr run() {
        Ptr e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

  private:
    [[noreturn]] void fail(const std::string& what) const {
        throw PreconditionError("expression '" + std::string(s_) + "': " + what + " at offset " + std::to_string(pos_));
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Ptr expr() {
        Ptr lhs = term();
        while (true) {
            if (eat('+')) lhs = make(Kind::add, lhs, term());
            else if (eat('-')) lhs = make(Kind::sub, lhs, term());
            else return lhs;
        }
    }
    Ptr term() {
        Ptr lhs = unary();
        while (true) {
            if (eat('*')) lhs = make(Kind::mul, lhs, unary());
            else if (eat('/')) lhs = make(Kind::div, lhs, unary());
            else return lhs;
        }
    }
    Ptr unary() {
        if (eat('-')) return make(Kind::neg, unary());
        if (eat('+')) return unary();
        return power();
    }
    Ptr power() {
        Ptr base = primary();
        if (eat('^')) {
            Ptr ex = unary();
            if (!constant_node(*ex)) fail("exponent must be constant");
            return make(Kind::pow, base, lit(eval(*ex, {})));
        }
        return base;
    }
    Ptr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(std::string(s_.substr(pos_)), &used);
            } catch (const std::exception&) {
                fail("bad number");
            }
            pos_ += used;
            return lit(v);
        }
        if (eat('(')) {
            Ptr e = expr();
            if (!eat(')')) fail("missing ')'");
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            const std::string_view name = s_.substr(start, pos_ - start);
            if (name == "pi") return lit(std::numbers::pi);
            if (name == "e") return lit(std::numbers::e);
            if (name == "x" || name == "x1") return variable_node(0);
            if (name == "y" || name == "x2") return variable_node(1);
            if (name == "z" || name == "x3") return variable_node(2);
            Kind fn;
            if (name == "sin") fn = Kind::sin;
            else if (name == "cos") fn = Kind::cos;
            else if (name == "exp") fn = Kind::exp;
            else fail("unknown identifier '" + std::string(name) + "'");
            if (!eat('(')) fail("expected '(' after function name");
            Ptr arg = expr();
            if (!eat(')')) fail("missing ')'");
            return make(fn, arg);
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }
    static Ptr variable_node(std::size_t k) { return std::make_shared<Node>(Node{Kind::variable, 0.0, k, {}, {}}); }

    std::string_view s_;
    std::size_t pos_ = 0;
};

inline Expression Expression::parse(std::string_view text) {
    Expression e(Parser(text).run());
    e.source_ = std::string(text);
    return e;
}

/// Gradient and Laplacian helpers used for closed-form references.
inline double laplacian_at(const Expression& u, std::span<const double> x) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += u.derivative(k).derivative(k)(x);
    return s;
}

/// div(rho grad u) = rho * Laplacian(u) + grad(rho) . grad(u).
inline double weighted_laplacian_at(const Expression& u, const Expression& rho, std::span<const double> x) {
    double s = rho(x) * laplacian_at(u, x);
    for (std::size_t k = 0; k < x.size(); ++k) s += rho.derivative(k)(x) * u.derivative(k)(x);
    return s;
}

}  // namespace atv
