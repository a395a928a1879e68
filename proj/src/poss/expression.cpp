#include "obscert/poss/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

namespace obscert::poss {

using Code = Expression::Code;

class ExpressionCompiler {
public:
    ExpressionCompiler(const std::string& text, const std::vector<std::string>& vars) : src_(text), vars_(vars) {}

    Expression run() {
        expr();
        skip_space();
        if (i_ != src_.size()) fail("unexpected character '" + std::string(1, src_[i_]) + "'");
        Expression e;
        e.text_ = src_;
        e.program_ = std::move(prog_);
        e.max_stack_ = max_depth_;
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("expression '" + src_ + "': " + msg + " at position " + std::to_string(i_), i_);
    }

    void skip_space() {
        while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
    }

    bool accept(char c) {
        skip_space();
        if (i_ < src_.size() && src_[i_] == c) {
            ++i_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    void emit(Code c, double v = 0.0, int idx = 0) {
        prog_.push_back({c, v, idx});
        switch (c) {
            case Code::Const:
            case Code::Var: ++depth_; break;
            case Code::Add:
            case Code::Sub:
            case Code::Mul:
            case Code::Div:
            case Code::Min:
            case Code::Max: --depth_; break;
            default: break;
        }
        max_depth_ = std::max(max_depth_, depth_);
    }

    void expr() {
        term();
        for (;;) {
            if (accept('+')) {
                term();
                emit(Code::Add);
            } else if (accept('-')) {
                term();
                emit(Code::Sub);
            } else {
                return;
            }
        }
    }

    void term() {
        unary();
        for (;;) {
            if (accept('*')) {
                unary();
                emit(Code::Mul);
            } else if (accept('/')) {
                unary();
                emit(Code::Div);
            } else {
                return;
            }
        }
    }

    void unary() {
        if (accept('-')) {
            unary();
            emit(Code::Neg);
            return;
        }
        if (accept('+')) {
            unary();
            return;
        }
        power();
    }

    void power() {
        primary();
        if (accept('^')) {
            skip_space();
            const bool neg = accept('-');
            skip_space();
            const std::size_t start = i_;
            while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) ++i_;
            if (start == i_) fail("exponent must be an integer literal");
            int n = 0;
            std::from_chars(src_.data() + start, src_.data() + i_, n);
            emit(Code::Pow, 0.0, neg ? -n : n);
        }
    }

    void primary() {
        skip_space();
        if (i_ >= src_.size()) fail("unexpected end of input");
        const char c = src_[i_];
        if (c == '(') {
            ++i_;
            expr();
            expect(')');
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            double v = 0.0;
            auto res = std::from_chars(src_.data() + i_, src_.data() + src_.size(), v);
            if (res.ec != std::errc()) fail("bad number");
            i_ = static_cast<std::size_t>(res.ptr - src_.data());
            emit(Code::Const, v);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = i_;
            while (i_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_')) ++i_;
            const std::string name = src_.substr(start, i_ - start);
            static const std::pair<const char*, Code> unary_fns[] = {
                {"sin", Code::Sin}, {"cos", Code::Cos}, {"exp", Code::Exp}, {"abs", Code::Abs}};
            for (const auto& [fn, code] : unary_fns) {
                if (name == fn) {
                    expect('(');
                    expr();
                    expect(')');
                    emit(code);
                    return;
                }
            }
            if (name == "min" || name == "max") {
                expect('(');
                expr();
                expect(',');
                expr();
                expect(')');
                emit(name == "min" ? Code::Min : Code::Max);
                return;
            }
            auto it = std::find(vars_.begin(), vars_.end(), name);
            if (it == vars_.end()) {
                i_ = start;
                fail("unknown variable '" + name + "'");
            }
            emit(Code::Var, 0.0, static_cast<int>(it - vars_.begin()));
            return;
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    const std::string& src_;
    const std::vector<std::string>& vars_;
    std::size_t i_ = 0;
    std::vector<Expression::Instr> prog_;
    std::size_t depth_ = 0;
    std::size_t max_depth_ = 0;
};

Expression Expression::parse(const std::string& text, const std::vector<std::string>& variables) {
    return ExpressionCompiler(text, variables).run();
}

Expression Expression::constant(double v) {
    Expression e;
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    e.text_.assign(buf, res.ptr);
    e.program_.push_back({Code::Const, v, 0});
    e.max_stack_ = 1;
    return e;
}

double Expression::eval(std::span<const double> values) const {
    if (program_.empty()) return 0.0;
    // Small fixed buffer covers every expression in practice.
    double small[32];
    std::vector<double> big;
    double* stack = small;
    if (max_stack_ > 32) {
        big.resize(max_stack_);
        stack = big.data();
    }
    std::size_t sp = 0;
    for (const Instr& in : program_) {
        switch (in.code) {
            case Code::Const: stack[sp++] = in.value; break;
            case Code::Var: stack[sp++] = values[static_cast<std::size_t>(in.index)]; break;
            case Code::Add: --sp; stack[sp - 1] += stack[sp]; break;
            case Code::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
            case Code::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
            case Code::Div:
                --sp;
                if (stack[sp] == 0.0) throw NumericError("division by zero in '" + text_ + "'");
                stack[sp - 1] /= stack[sp];
                break;
            case Code::Neg: stack[sp - 1] = -stack[sp - 1]; break;
            case Code::Pow: {
                const double b = stack[sp - 1];
                int n = in.index;
                if (n < 0 && b == 0.0) throw NumericError("division by zero in '" + text_ + "'");
                double r = 1.0;
                double base = n < 0 ? 1.0 / b : b;
                for (unsigned k = static_cast<unsigned>(n < 0 ? -n : n); k; k >>= 1) {
                    if (k & 1u) r *= base;
                    base *= base;
                }
                stack[sp - 1] = r;
                break;
            }
            case Code::Sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
            case Code::Cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
            case Code::Exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
            case Code::Abs: stack[sp - 1] = std::fabs(stack[sp - 1]); break;
            case Code::Min: --sp; stack[sp - 1] = std::min(stack[sp - 1], stack[sp]); break;
            case Code::Max: --sp; stack[sp - 1] = std::max(stack[sp - 1], stack[sp]); break;
        }
    }
    return stack[0];
}

void VectorMap::eval(std::span<const double> in, std::span<double> out) const {
    for (std::size_t i = 0; i < components_.size(); ++i) out[i] = components_[i].eval(in);
}

}  // namespace obscert::poss
