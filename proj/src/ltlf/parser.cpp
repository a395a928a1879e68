#include <cctype>
#include <charconv>

#include "obscert/ltlf/formula.hpp"

namespace obscert::ltlf {

namespace {

enum class Tok { Ident, Number, LParen, RParen, Not, And, Or, Implies, Dot, End };

struct Token {
    Tok kind;
    std::string text;
    double value = 0.0;
    std::size_t pos = 0;
};

class Lexer {
public:
    explicit Lexer(const std::string& s) : src_(s) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
            if (i_ >= src_.size()) {
                out.push_back({Tok::End, "", 0.0, i_});
                return out;
            }
            const std::size_t start = i_;
            const char c = src_[i_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                while (i_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_')) ++i_;
                out.push_back({Tok::Ident, src_.substr(start, i_ - start), 0.0, start});
            } else if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && next_is_digit()) ||
                       ((c == '-' || c == '+') && next_is_digit())) {
                double v = 0.0;
                const char* first = src_.data() + i_ + (c == '+' ? 1 : 0);
                auto res = std::from_chars(first, src_.data() + src_.size(), v);
                if (res.ec != std::errc()) throw ParseError("malformed number", start);
                i_ = static_cast<std::size_t>(res.ptr - src_.data());
                out.push_back({Tok::Number, src_.substr(start, i_ - start), v, start});
            } else if (c == '-' && i_ + 1 < src_.size() && src_[i_ + 1] == '>') {
                i_ += 2;
                out.push_back({Tok::Implies, "->", 0.0, start});
            } else {
                ++i_;
                switch (c) {
                    case '(': out.push_back({Tok::LParen, "(", 0.0, start}); break;
                    case ')': out.push_back({Tok::RParen, ")", 0.0, start}); break;
                    case '!': out.push_back({Tok::Not, "!", 0.0, start}); break;
                    case '&': out.push_back({Tok::And, "&", 0.0, start}); break;
                    case '|': out.push_back({Tok::Or, "|", 0.0, start}); break;
                    case '.': out.push_back({Tok::Dot, ".", 0.0, start}); break;
                    default: throw ParseError(std::string("unexpected character '") + c + "'", start);
                }
            }
        }
    }

private:
    bool next_is_digit() const {
        return i_ + 1 < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[i_ + 1])) || src_[i_ + 1] == '.');
    }

    const std::string& src_;
    std::size_t i_ = 0;
};

bool is_quantifier(const Token& t) {
    return t.kind == Tok::Ident && (t.text == "forall" || t.text == "exists");
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    HyperFormula hyper() {
        if (!is_quantifier(peek()))
            throw ParseError("missing quantifier: expected 'forall s2.' or 'exists s2.'", peek().pos);
        HyperFormula h;
        h.quantifier = take().text == "forall" ? Quantifier::Forall : Quantifier::Exists;
        const Token var = take();
        if (var.kind != Tok::Ident || var.text != "s2")
            throw ParseError("quantifier must bind the trace variable s2", var.pos);
        expect(Tok::Dot, "'.' after quantified variable");
        if (is_quantifier(peek())) throw ParseError("duplicate quantifier", peek().pos);
        h.body = body();
        return h;
    }

    Formula body() {
        Formula f = implication();
        if (peek().kind != Tok::End) throw ParseError("unexpected token '" + peek().text + "'", peek().pos);
        return f;
    }

private:
    const Token& peek() const { return toks_[k_]; }
    Token take() { return toks_[k_ < toks_.size() - 1 ? k_++ : k_]; }

    void expect(Tok kind, const char* what) {
        if (peek().kind != kind) throw ParseError(std::string("expected ") + what, peek().pos);
        take();
    }

    bool at_keyword(const char* kw) const { return peek().kind == Tok::Ident && peek().text == kw; }

    Formula implication() {
        Formula lhs = disjunction();
        if (peek().kind == Tok::Implies) {
            take();
            return Formula::implication(lhs, implication());
        }
        return lhs;
    }

    Formula disjunction() {
        Formula f = conjunction();
        while (peek().kind == Tok::Or) {
            take();
            f = Formula::disjunction(f, conjunction());
        }
        return f;
    }

    Formula conjunction() {
        Formula f = until();
        while (peek().kind == Tok::And) {
            take();
            f = Formula::conjunction(f, until());
        }
        return f;
    }

    Formula until() {
        Formula lhs = unary();
        if (at_keyword("U")) {
            take();
            return Formula::until(lhs, until());
        }
        return lhs;
    }

    Formula unary() {
        if (peek().kind == Tok::Not) {
            take();
            return Formula::negation(unary());
        }
        if (at_keyword("X")) return take(), Formula::next(unary());
        if (at_keyword("F")) return take(), Formula::eventually(unary());
        if (at_keyword("G")) return take(), Formula::always(unary());
        return primary();
    }

    double threshold_argument(const std::string& name) {
        expect(Tok::LParen, ("'(' after " + name).c_str());
        const Token num = take();
        if (num.kind != Tok::Number) throw ParseError("expected numeric threshold for " + name, num.pos);
        if (num.value < 0.0) throw ParseError(name + " threshold must be nonnegative", num.pos);
        expect(Tok::RParen, "')'");
        return num.value;
    }

    Formula primary() {
        const Token t = peek();
        if (t.kind == Tok::LParen) {
            take();
            Formula f = implication();
            expect(Tok::RParen, "')'");
            return f;
        }
        if (t.kind != Tok::Ident) {
            if (t.kind == Tok::End) throw ParseError("unexpected end of formula", t.pos);
            throw ParseError("unexpected token '" + t.text + "'", t.pos);
        }
        take();
        if (t.text == "true") return Formula::top();
        if (t.text == "false") return Formula::bottom();
        if (t.text == "sec1") return Formula::atom(AtomicPredicate::sec_first());
        if (t.text == "nonsec2") return Formula::atom(AtomicPredicate::nonsec_second());
        if (t.text == "out_close") return Formula::atom(AtomicPredicate::out_close(threshold_argument(t.text)));
        if (t.text == "state_close") return Formula::atom(AtomicPredicate::state_close(threshold_argument(t.text)));
        if (t.text == "forall" || t.text == "exists") throw ParseError("nested quantifier", t.pos);
        throw ParseError("unknown atom '" + t.text + "'", t.pos);
    }

    std::vector<Token> toks_;
    std::size_t k_ = 0;
};

}  // namespace

HyperFormula parse(const std::string& text) { return Parser(Lexer(text).run()).hyper(); }

Formula parse_body(const std::string& text) {
    auto toks = Lexer(text).run();
    if (!toks.empty() && is_quantifier(toks.front()))
        throw ParseError("quantifier not allowed in a formula body", toks.front().pos);
    return Parser(std::move(toks)).body();
}

}  // namespace obscert::ltlf
