#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "supctrl/jet.hpp"

namespace supctrl {

/// Arithmetic expression in the single variable `x`.
///
/// Grammar (whitespace ignored):
///
///     expr    := term  (('+' | '-') term)*
///     term    := unary (('*' | '/') unary)*
///     unary   := '-' unary | power
///     power   := primary ('^' unary)?          right associative
///     primary := number | 'x' | func '(' expr ')' | '(' expr ')'
///     func    := exp | log | sqrt
///
/// Evaluation runs on `Jet`, so every parsed expression carries exact first
/// to third derivatives.
class Expression {
public:
    /// Throws ConfigError with the offending column on malformed input.
    static Expression parse(std::string_view text);

    Jet eval(const Jet& x) const;
    Jet eval(double x) const { return eval(Jet::variable(x)); }
    double value(double x) const { return eval(Jet::constant(x)).f; }

    const std::string& text() const noexcept { return text_; }

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

}  // namespace supctrl
