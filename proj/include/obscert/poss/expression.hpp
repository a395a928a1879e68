#pragma once

#include <span>
#include <string>
#include <vector>

#include "obscert/common.hpp"

namespace obscert::poss {

/// Scalar arithmetic expression over named variables, compiled to postfix.
///
/// Grammar: + - * / with the usual precedence, unary minus, `^` with an
/// integer literal exponent, parentheses, and the functions sin, cos, exp,
/// abs, min(a, b), max(a, b).
class Expression {
public:
    Expression() = default;

    /// Throws ParseError on malformed text or names not in `variables`.
    static Expression parse(const std::string& text, const std::vector<std::string>& variables);
    static Expression constant(double v);

    /// `values` follows the order of the variable list given to parse().
    /// Throws NumericError on division by zero.
    double eval(std::span<const double> values) const;

    const std::string& text() const { return text_; }

    enum class Code { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp, Abs, Min, Max };
    struct Instr {
        Code code;
        double value = 0.0;
        int index = 0;
    };

private:
    std::string text_;
    std::vector<Instr> program_;
    std::size_t max_stack_ = 0;

    friend class ExpressionCompiler;
};

/// Vector-valued map made of one expression per output component.
class VectorMap {
public:
    VectorMap() = default;
    VectorMap(std::vector<Expression> components, std::size_t arity)
        : components_(std::move(components)), arity_(arity) {}

    std::size_t size() const { return components_.size(); }
    std::size_t arity() const { return arity_; }
    const std::vector<Expression>& components() const { return components_; }

    /// Writes size() values to `out`.
    void eval(std::span<const double> in, std::span<double> out) const;

private:
    std::vector<Expression> components_;
    std::size_t arity_ = 0;
};

}  // namespace obscert::poss
