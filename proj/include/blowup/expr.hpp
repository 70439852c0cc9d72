#pragma once

// Tiny arithmetic expression language for user-supplied h(r), f(r,s), g(r,s).
// Grammar (standard precedence, ^ right-associative and tighter than unary -):
//   sum   := prod (('+'|'-') prod)*
//   prod  := unary (('*'|'/') unary)*
//   unary := '-' unary | pow
//   pow   := atom ('^' unary)?
//   atom  := number | name | name '(' sum ')' | '(' sum ')'
// Named constants: e, pi. Functions: exp, log, sqrt, abs, sin, cos.
// No implicit multiplication.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blowup/errors.hpp"

namespace blowup {

class Expr {
public:
    enum class Kind { Number, Variable, Neg, Exp, Log, Sqrt, Abs, Sin, Cos,
                      Add, Sub, Mul, Div, Pow };

    Expr() = default;

    static Expr parse(std::string_view text, const std::vector<std::string>& vars) {
        if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
            throw SyntaxError(0, "empty expression");
        Parser p{text, vars, {}};
        int root = p.sum();
        p.skip_ws();
        if (p.pos != text.size())
            throw SyntaxError(p.pos, std::string("unexpected '") + text[p.pos] + "'");
        Expr e;
        e.nodes_ = std::move(p.nodes);
        e.root_ = root;
        e.vars_ = vars;
        return e;
    }

    // Fast path: values aligned with the declared variable order.
    double eval(std::span<const double> values) const {
        return eval_node(root_, values);
    }

    double eval(const std::map<std::string, double>& bindings) const {
        std::vector<double> values(vars_.size());
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            auto it = bindings.find(vars_[i]);
            if (it == bindings.end()) {
                if (uses_variable(i)) throw MissingBinding(vars_[i]);
                values[i] = 0.0;
            } else {
                values[i] = it->second;
            }
        }
        return eval(values);
    }

    const std::vector<std::string>& variables() const { return vars_; }

    bool uses_variable(std::size_t index) const {
        for (const Node& n : nodes_)
            if (n.kind == Kind::Variable && n.var == static_cast<int>(index)) return true;
        return false;
    }

    std::string to_string() const { return print_node(root_, 0); }

private:
    struct Node {
        Kind kind;
        double num = 0.0;
        int var = -1;
        int a = -1, b = -1;
    };

    std::vector<Node> nodes_;
    int root_ = -1;
    std::vector<std::string> vars_;

    static double checked(double v, const char* what) {
        if (!std::isfinite(v)) throw DomainError(std::string("non-finite result in ") + what);
        return v;
    }

    double eval_node(int idx, std::span<const double> values) const {
        const Node& n = nodes_[static_cast<std::size_t>(idx)];
        switch (n.kind) {
            case Kind::Number: return n.num;
            case Kind::Variable: return values[static_cast<std::size_t>(n.var)];
            case Kind::Neg: return -eval_node(n.a, values);
            case Kind::Exp: return checked(std::exp(eval_node(n.a, values)), "exp");
            case Kind::Log: {
                double x = eval_node(n.a, values);
                if (x <= 0.0) throw DomainError("log of non-positive value");
                return checked(std::log(x), "log");
            }
            case Kind::Sqrt: {
                double x = eval_node(n.a, values);
                if (x < 0.0) throw DomainError("sqrt of negative value");
                return std::sqrt(x);
            }
            case Kind::Abs: return std::fabs(eval_node(n.a, values));
            case Kind::Sin: return std::sin(eval_node(n.a, values));
            case Kind::Cos: return std::cos(eval_node(n.a, values));
            case Kind::Add: return checked(eval_node(n.a, values) + eval_node(n.b, values), "+");
            case Kind::Sub: return checked(eval_node(n.a, values) - eval_node(n.b, values), "-");
            case Kind::Mul: return checked(eval_node(n.a, values) * eval_node(n.b, values), "*");
            case Kind::Div: {
                double den = eval_node(n.b, values);
                if (den == 0.0) throw DomainError("division by zero");
                return checked(eval_node(n.a, values) / den, "/");
            }
            case Kind::Pow: {
                double x = eval_node(n.a, values);
                double y = eval_node(n.b, values);
                if (x == 0.0 && y < 0.0) throw DomainError("0 raised to a negative power");
                if (x < 0.0 && y != std::floor(y))
                    throw DomainError("negative base with non-integer exponent");
                return checked(std::pow(x, y), "^");
            }
        }
        throw EvalError("corrupt expression node");
    }

    // Precedence levels for printing: 0 add, 1 mul, 2 unary, 3 pow, 4 atom.
    std::string print_node(int idx, int parent_level) const {
        const Node& n = nodes_[static_cast<std::size_t>(idx)];
        std::string s;
        int level = 4;
        switch (n.kind) {
            case Kind::Number: {
                char buf[40];
                std::snprintf(buf, sizeof buf, "%.17g", n.num);
                s = buf;
                if (n.num < 0) level = 2;
                break;
            }
            case Kind::Variable: s = vars_[static_cast<std::size_t>(n.var)]; break;
            case Kind::Neg: s = "-" + print_node(n.a, 2); level = 2; break;
            case Kind::Exp: s = "exp(" + print_node(n.a, 0) + ")"; break;
            case Kind::Log: s = "log(" + print_node(n.a, 0) + ")"; break;
            case Kind::Sqrt: s = "sqrt(" + print_node(n.a, 0) + ")"; break;
            case Kind::Abs: s = "abs(" + print_node(n.a, 0) + ")"; break;
            case Kind::Sin: s = "sin(" + print_node(n.a, 0) + ")"; break;
            case Kind::Cos: s = "cos(" + print_node(n.a, 0) + ")"; break;
            case Kind::Add: s = print_node(n.a, 0) + " + " + print_node(n.b, 1); level = 0; break;
            case Kind::Sub: s = print_node(n.a, 0) + " - " + print_node(n.b, 1); level = 0; break;
            case Kind::Mul: s = print_node(n.a, 1) + "*" + print_node(n.b, 2); level = 1; break;
            case Kind::Div: s = print_node(n.a, 1) + "/" + print_node(n.b, 2); level = 1; break;
            case Kind::Pow: s = print_node(n.a, 4) + "^" + print_node(n.b, 2); level = 3; break;
        }
        if (level < parent_level) return "(" + s + ")";
        return s;
    }

    struct Parser {
        std::string_view text;
        const std::vector<std::string>& vars;
        std::vector<Node> nodes;
        std::size_t pos = 0;

        void skip_ws() {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        }

        bool accept(char c) {
            skip_ws();
            if (pos < text.size() && text[pos] == c) { ++pos; return true; }
            return false;
        }

        int make(Node n) {
            nodes.push_back(n);
            return static_cast<int>(nodes.size()) - 1;
        }

        int sum() {
            int lhs = prod();
            for (;;) {
                if (accept('+')) lhs = make({Kind::Add, 0, -1, lhs, prod()});
                else if (accept('-')) lhs = make({Kind::Sub, 0, -1, lhs, prod()});
                else return lhs;
            }
        }

        int prod() {
            int lhs = unary();
            for (;;) {
                if (accept('*')) lhs = make({Kind::Mul, 0, -1, lhs, unary()});
                else if (accept('/')) lhs = make({Kind::Div, 0, -1, lhs, unary()});
                else return lhs;
            }
        }

        int unary() {
            if (accept('-')) return make({Kind::Neg, 0, -1, unary(), -1});
            return power();
        }

        int power() {
            int base = atom();
            if (accept('^')) return make({Kind::Pow, 0, -1, base, unary()});
            return base;
        }

        int atom() {
            skip_ws();
            if (pos >= text.size()) throw SyntaxError(pos, "unexpected end of expression");
            char c = text[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
            if (c == '(') {
                ++pos;
                int inner = sum();
                if (!accept(')')) throw SyntaxError(pos, "expected ')'");
                return inner;
            }
            throw SyntaxError(pos, std::string("unexpected '") + c + "'");
        }

        int number() {
            const char* begin = text.data() + pos;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end == begin) throw SyntaxError(pos, "malformed number");
            pos += static_cast<std::size_t>(end - begin);
            return make({Kind::Number, v, -1, -1, -1});
        }

        int identifier() {
            std::size_t start = pos;
            while (pos < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
                ++pos;
            std::string name(text.substr(start, pos - start));
            skip_ws();
            if (pos < text.size() && text[pos] == '(') {
                ++pos;
                int arg = sum();
                if (!accept(')')) throw SyntaxError(pos, "expected ')'");
                Kind k;
                if (name == "exp") k = Kind::Exp;
                else if (name == "log") k = Kind::Log;
                else if (name == "sqrt") k = Kind::Sqrt;
                else if (name == "abs") k = Kind::Abs;
                else if (name == "sin") k = Kind::Sin;
                else if (name == "cos") k = Kind::Cos;
                else throw SyntaxError(start, "unknown function '" + name + "'");
                return make({k, 0, -1, arg, -1});
            }
            if (name == "e") return make({Kind::Number, std::exp(1.0), -1, -1, -1});
            if (name == "pi") return make({Kind::Number, std::acos(-1.0), -1, -1, -1});
            for (std::size_t i = 0; i < vars.size(); ++i)
                if (vars[i] == name)
                    return make({Kind::Variable, 0, static_cast<int>(i), -1, -1});
            throw UnknownVariable(name);
        }
    };
};

// Central difference d(expr)/d(var) at `point`; O(step^2) for smooth expressions.
inline double derivative_estimate(const Expr& ast, const std::string& var,
                                  std::map<std::string, double> point, double step) {
    if (step <= 0.0) throw Precondition("derivative step must be positive");
    auto it = point.find(var);
    if (it == point.end()) throw MissingBinding(var);
    double x = it->second;
    it->second = x + step;
    double fp = ast.eval(point);
    it->second = x - step;
    double fm = ast.eval(point);
    return (fp - fm) / (2.0 * step);
}

}  // namespace blowup
