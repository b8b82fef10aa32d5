#include "supctrl/expression.hpp"

#include <cctype>
#include <charconv>
#include <string>
#include <utility>

#include "supctrl/errors.hpp"

namespace supctrl {

struct Expression::Node {
    enum class Op { constant, variable, add, sub, mul, div, pow, neg, exp, log, sqrt };
    Op op = Op::constant;
    double value = 0.0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

NodePtr make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr, double value = 0.0) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    n->value = value;
    return n;
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr parse() {
        auto node = expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return node;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("expression column " + std::to_string(pos_ + 1) + ": " + what + " in '" +
                          std::string(text_) + "'");
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        auto lhs = term();
        for (;;) {
            if (accept('+')) {
                lhs = make(Op::add, lhs, term());
            } else if (accept('-')) {
                lhs = make(Op::sub, lhs, term());
            } else {
                return lhs;
            }
        }
    }

    NodePtr term() {
        auto lhs = unary();
        for (;;) {
            if (accept('*')) {
                lhs = make(Op::mul, lhs, unary());
            } else if (accept('/')) {
                lhs = make(Op::div, lhs, unary());
            } else {
                return lhs;
            }
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Op::neg, unary());
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        auto base = primary();
        if (accept('^')) return make(Op::pow, base, unary());
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (accept('(')) {
            auto inner = expr();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            const std::string_view ident = text_.substr(start, pos_ - start);
            if (ident == "x") return make(Op::variable);
            Op fn;
            if (ident == "exp") {
                fn = Op::exp;
            } else if (ident == "log") {
                fn = Op::log;
            } else if (ident == "sqrt") {
                fn = Op::sqrt;
            } else {
                pos_ = start;
                fail("unknown identifier '" + std::string(ident) + "'");
            }
            if (!accept('(')) fail("expected '(' after " + std::string(ident));
            auto arg = expr();
            if (!accept(')')) fail("expected ')'");
            return make(fn, arg);
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    NodePtr number() {
        const char* first = text_.data() + pos_;
        const char* last = text_.data() + text_.size();
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc()) fail("malformed number");
        pos_ += static_cast<std::size_t>(ptr - first);
        return make(Op::constant, nullptr, nullptr, v);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

Jet eval_node(const Expression::Node& n, const Jet& x) {
    switch (n.op) {
        case Op::constant: return Jet::constant(n.value);
        case Op::variable: return x;
        case Op::add: return eval_node(*n.lhs, x) + eval_node(*n.rhs, x);
        case Op::sub: return eval_node(*n.lhs, x) - eval_node(*n.rhs, x);
        case Op::mul: return eval_node(*n.lhs, x) * eval_node(*n.rhs, x);
        case Op::div: return eval_node(*n.lhs, x) / eval_node(*n.rhs, x);
        case Op::pow: return pow(eval_node(*n.lhs, x), eval_node(*n.rhs, x));
        case Op::neg: return -eval_node(*n.lhs, x);
        case Op::exp: return exp(eval_node(*n.lhs, x));
        case Op::log: return log(eval_node(*n.lhs, x));
        case Op::sqrt: return sqrt(eval_node(*n.lhs, x));
    }
    return {};
}

}  // namespace

Expression Expression::parse(std::string_view text) {
    Expression e;
    e.root_ = Parser(text).parse();
    e.text_ = std::string(text);
    return e;
}

Jet Expression::eval(const Jet& x) const { return eval_node(*root_, x); }

}  // namespace supctrl
