#pragma once

// The modeling language: a small declarative surface over the node
// builders. A model is a list of statements,
//
//     let d1 = {1: 1/6, 2: 1/6, 3: 1/6, 4: 1/6, 5: 1/6, 6: 1/6}
//     let d  = d1 + d1
//     query d1 given (d <= 4)
//
// compiled to the same DAG the C++ API builds: every reference to a
// defined name shares one node (so dependencies are tracked), while every
// distribution literal is a fresh independent leaf. Weights are exact
// rationals; decimal literals like 0.20 become 1/5 with no rounding.
//
// Expression grammar, loosest to tightest binding:
//
//     expr    := or ["given" (or | "[" expr {"," expr} "]")]
//     or      := and {"or" and}
//     and     := not {"and" not}
//     not     := "not" not | cmp
//     cmp     := sum {("=="|"!="|"<"|"<="|">"|">=") sum | "in" valueSet}
//     sum     := term {("+"|"-") term}
//     term    := unary {("*"|"/") unary}
//     unary   := "-" unary | postfix
//     postfix := primary {"[" INTEGER "]"}
//     primary := NUMBER | "true" | "false" | STRING | word
//              | pmf literal | "bern" "(" weight ")"
//              | "table" "(" expr ")" "{" value ":" expr {"," ...} "}"
//              | "mix" "{" expr {"," expr} "}"
//              | "<" expr {"," expr} ">" | "(" expr ")"
//              | word "(" expr {"," expr} ")"
//
// A bare word is a reference when a `let` has already bound it, a symbol
// constant otherwise; naming a definition before its `let` runs is an
// error rather than a silent symbol. Values inside pmf literals, table
// keys and `in` sets are literals only: numbers, booleans, symbols, and
// tuples of those. `%` starts a comment that runs to the end of the line.

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "statues/engine.hpp"
#include "statues/pex.hpp"

namespace statues::dsl {

// ---------------------------------------------------------------------------
// Diagnostics

struct Diagnostic {
    std::string message;
    int line = 0;  // 1-based; 0 when no position applies
    int col = 0;
};

inline std::string format_diag(const Diagnostic& d) {
    if (d.line == 0) return d.message;
    return std::to_string(d.line) + ":" + std::to_string(d.col) + ": " + d.message;
}

class DslError : public std::runtime_error {
public:
    explicit DslError(Diagnostic d) : std::runtime_error(format_diag(d)), diag_(std::move(d)) {}
    const Diagnostic& diag() const { return diag_; }

private:
    Diagnostic diag_;
};

// ---------------------------------------------------------------------------
// Lexer

enum class Tok {
    End, Ident, Number, String,
    KwLet, KwQuery, KwGiven, KwTable, KwMix, KwBern, KwTrue, KwFalse,
    KwIn, KwAnd, KwOr, KwNot,
    Assign, Plus, Minus, Star, Slash,
    EqEq, NotEq, Lt, Le, Gt, Ge,
    LParen, RParen, LBrace, RBrace, LBracket, RBracket,
    Comma, Colon,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;  // identifier spelling, number lexeme, or string body
    int line = 1;
    int col = 1;
};

namespace detail {

inline const std::map<std::string_view, Tok>& keyword_table() {
    static const std::map<std::string_view, Tok> kw = {
        {"let", Tok::KwLet},     {"query", Tok::KwQuery}, {"given", Tok::KwGiven},
        {"table", Tok::KwTable}, {"mix", Tok::KwMix},     {"bern", Tok::KwBern},
        {"true", Tok::KwTrue},   {"false", Tok::KwFalse}, {"in", Tok::KwIn},
        {"and", Tok::KwAnd},     {"or", Tok::KwOr},       {"not", Tok::KwNot},
    };
    return kw;
}

inline std::vector<Token> lex(std::string_view src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (src[i + k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        i += n;
    };
    auto push = [&](Tok kind, std::string text, int l, int c) {
        out.push_back(Token{kind, std::move(text), l, c});
    };
    while (i < src.size()) {
        char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '%') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        int l = line, co = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) ||
                                      src[j] == '_'))
                ++j;
            std::string word(src.substr(i, j - i));
            advance(j - i);
            const auto& kw = keyword_table();
            auto it = kw.find(word);
            push(it != kw.end() ? it->second : Tok::Ident, std::move(word), l, co);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            if (j < src.size() && src[j] == '.' && j + 1 < src.size() &&
                std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
                ++j;
                while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            }
            std::string lexeme(src.substr(i, j - i));
            advance(j - i);
            push(Tok::Number, std::move(lexeme), l, co);
            continue;
        }
        if (c == '"') {
            std::string body;
            std::size_t j = i + 1;
            bool closed = false;
            while (j < src.size()) {
                if (src[j] == '\\' && j + 1 < src.size()) {
                    body += src[j + 1];
                    j += 2;
                    continue;
                }
                if (src[j] == '"') {
                    closed = true;
                    ++j;
                    break;
                }
                body += src[j];
                ++j;
            }
            if (!closed) throw DslError({"unterminated string literal", l, co});
            advance(j - i);
            push(Tok::String, std::move(body), l, co);
            continue;
        }
        auto two = [&](char a, char b) {
            return c == a && i + 1 < src.size() && src[i + 1] == b;
        };
        if (two('=', '=')) { advance(2); push(Tok::EqEq, "==", l, co); continue; }
        if (two('!', '=')) { advance(2); push(Tok::NotEq, "!=", l, co); continue; }
        if (two('<', '=')) { advance(2); push(Tok::Le, "<=", l, co); continue; }
        if (two('>', '=')) { advance(2); push(Tok::Ge, ">=", l, co); continue; }
        Tok kind;
        switch (c) {
        case '=': kind = Tok::Assign; break;
        case '+': kind = Tok::Plus; break;
        case '-': kind = Tok::Minus; break;
        case '*': kind = Tok::Star; break;
        case '/': kind = Tok::Slash; break;
        case '<': kind = Tok::Lt; break;
        case '>': kind = Tok::Gt; break;
        case '(': kind = Tok::LParen; break;
        case ')': kind = Tok::RParen; break;
        case '{': kind = Tok::LBrace; break;
        case '}': kind = Tok::RBrace; break;
        case '[': kind = Tok::LBracket; break;
        case ']': kind = Tok::RBracket; break;
        case ',': kind = Tok::Comma; break;
        case ':': kind = Tok::Colon; break;
        default:
            throw DslError({std::string("unexpected character '") + c + "'", l, co});
        }
        advance(1);
        push(kind, std::string(1, c), l, co);
    }
    out.push_back(Token{Tok::End, "", line, col});
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Syntax tree

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

// A literal outcome: number, boolean, symbol, or tuple of literals.
struct ValueLit {
    Value value = Value::boolean(false);
    int line = 0, col = 0;
};

struct NumberLit { Rational value; };
struct BoolLit { bool value = false; };
struct SymbolLit { std::string name; bool quoted = false; };
struct WordRef { std::string name; };  // resolved at compile time
struct PmfEntry {
    ValueLit value;
    Rational weight;
    int wline = 0, wcol = 0;
};
struct PmfLit { std::vector<PmfEntry> entries; };
struct BernLit { Rational p; };
struct CallExpr { std::string fn; std::vector<ExprPtr> args; };
struct UnaryExpr { std::string op; ExprPtr operand; };           // "-" | "not"
struct BinaryExpr { std::string op; ExprPtr lhs, rhs; };
struct InSetExpr { ExprPtr item; std::vector<ValueLit> candidates; };
struct IndexExpr { ExprPtr base; long long index = 0; };
struct GivenExpr { ExprPtr target; std::vector<ExprPtr> conditions; bool bracketed = false; };
struct TableExpr { ExprPtr selector; std::vector<std::pair<ValueLit, ExprPtr>> branches; };
struct MixExpr { std::vector<ExprPtr> alternatives; };
struct TupleExpr { std::vector<ExprPtr> items; };

struct Expr {
    std::variant<NumberLit, BoolLit, SymbolLit, WordRef, PmfLit, BernLit, CallExpr, UnaryExpr,
                 BinaryExpr, InSetExpr, IndexExpr, GivenExpr, TableExpr, MixExpr, TupleExpr>
        node;
    int line = 0, col = 0;
};

struct Stmt {
    enum class Kind { Let, Query } kind = Kind::Query;
    std::string name;  // Let only
    ExprPtr expr;
    int line = 0, col = 0;
};

struct Model {
    std::vector<Stmt> statements;
};

// ---------------------------------------------------------------------------
// Parser

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view src) : toks_(lex(src)) {}

    Model parse_model() {
        Model m;
        while (!at(Tok::End)) m.statements.push_back(parse_stmt());
        return m;
    }

    ExprPtr parse_single_expression() {
        ExprPtr e = parse_expr();
        if (!at(Tok::End))
            throw DslError({"unexpected input after expression: '" + peek().text + "'",
                            peek().line, peek().col});
        return e;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    // Nonzero while parsing tuple literal items: a bare '>' then closes the
    // tuple instead of comparing. Any bracketing construct resets it.
    int tuple_depth_ = 0;

    struct DepthGuard {
        int& depth;
        int saved;
        DepthGuard(int& d, int v) : depth(d), saved(d) { d = v; }
        ~DepthGuard() { depth = saved; }
    };

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t i = pos_ + ahead;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    bool at(Tok k) const { return peek().kind == k; }
    Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    Token expect(Tok k, const char* what) {
        if (!at(k))
            throw DslError({std::string("expected ") + what + ", found '" +
                                (peek().kind == Tok::End ? "end of input" : peek().text) + "'",
                            peek().line, peek().col});
        return take();
    }

    static Rational number_of(const Token& t) {
        auto q = parse_plain_number(t.text);
        if (!q) throw DslError({"malformed number '" + t.text + "'", t.line, t.col});
        return *q;
    }

    template <typename T>
    ExprPtr mk(T node, const Token& t) {
        auto e = std::make_unique<Expr>();
        e->node = std::move(node);
        e->line = t.line;
        e->col = t.col;
        return e;
    }
    template <typename T>
    ExprPtr mk_pos(T node, int line, int col) {
        auto e = std::make_unique<Expr>();
        e->node = std::move(node);
        e->line = line;
        e->col = col;
        return e;
    }

    Stmt parse_stmt() {
        if (at(Tok::KwLet)) {
            Token kw = take();
            Token name = expect(Tok::Ident, "a name after 'let'");
            expect(Tok::Assign, "'=' after the definition name");
            Stmt s;
            s.kind = Stmt::Kind::Let;
            s.name = name.text;
            s.expr = parse_expr();
            s.line = kw.line;
            s.col = kw.col;
            return s;
        }
        if (at(Tok::KwQuery)) {
            Token kw = take();
            Stmt s;
            s.kind = Stmt::Kind::Query;
            s.expr = parse_expr();
            s.line = kw.line;
            s.col = kw.col;
            return s;
        }
        throw DslError({"expected 'let' or 'query', found '" +
                            (peek().kind == Tok::End ? "end of input" : peek().text) + "'",
                        peek().line, peek().col});
    }

    ExprPtr parse_expr() {
        ExprPtr target = parse_or();
        if (!at(Tok::KwGiven)) return target;
        take();
        int line = target->line, col = target->col;
        GivenExpr g;
        g.target = std::move(target);
        if (at(Tok::LBracket)) {
            g.bracketed = true;
            take();
            DepthGuard guard(tuple_depth_, 0);
            g.conditions.push_back(parse_expr());
            while (at(Tok::Comma)) {
                take();
                g.conditions.push_back(parse_expr());
            }
            expect(Tok::RBracket, "']' closing the condition list");
        } else {
            g.conditions.push_back(parse_or());
        }
        return mk_pos(std::move(g), line, col);
    }

    ExprPtr parse_or() {
        ExprPtr lhs = parse_and();
        while (at(Tok::KwOr)) {
            take();
            int line = lhs->line, col = lhs->col;
            ExprPtr rhs = parse_and();
            lhs = mk_pos(BinaryExpr{"or", std::move(lhs), std::move(rhs)}, line, col);
        }
        return lhs;
    }

    ExprPtr parse_and() {
        ExprPtr lhs = parse_not();
        while (at(Tok::KwAnd)) {
            take();
            int line = lhs->line, col = lhs->col;
            ExprPtr rhs = parse_not();
            lhs = mk_pos(BinaryExpr{"and", std::move(lhs), std::move(rhs)}, line, col);
        }
        return lhs;
    }

    ExprPtr parse_not() {
        if (at(Tok::KwNot)) {
            Token t = take();
            return mk(UnaryExpr{"not", parse_not()}, t);
        }
        return parse_cmp();
    }

    ExprPtr parse_cmp() {
        ExprPtr lhs = parse_sum();
        for (;;) {
            std::string op;
            switch (peek().kind) {
            case Tok::EqEq: op = "=="; break;
            case Tok::NotEq: op = "!="; break;
            case Tok::Lt: op = "<"; break;
            case Tok::Le: op = "<="; break;
            case Tok::Gt:
                if (tuple_depth_ > 0) return lhs;
                op = ">";
                break;
            case Tok::Ge: op = ">="; break;
            case Tok::KwIn: {
                take();
                int line = lhs->line, col = lhs->col;
                InSetExpr e;
                e.item = std::move(lhs);
                expect(Tok::LBrace, "'{' starting the value set");
                e.candidates.push_back(parse_value());
                while (at(Tok::Comma)) {
                    take();
                    e.candidates.push_back(parse_value());
                }
                expect(Tok::RBrace, "'}' closing the value set");
                lhs = mk_pos(std::move(e), line, col);
                continue;
            }
            default:
                return lhs;
            }
            take();
            int line = lhs->line, col = lhs->col;
            ExprPtr rhs = parse_sum();
            lhs = mk_pos(BinaryExpr{op, std::move(lhs), std::move(rhs)}, line, col);
        }
    }

    ExprPtr parse_sum() {
        ExprPtr lhs = parse_term();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            std::string op = take().text;
            int line = lhs->line, col = lhs->col;
            ExprPtr rhs = parse_term();
            lhs = mk_pos(BinaryExpr{op, std::move(lhs), std::move(rhs)}, line, col);
        }
        return lhs;
    }

    ExprPtr parse_term() {
        ExprPtr lhs = parse_unary();
        while (at(Tok::Star) || at(Tok::Slash)) {
            std::string op = take().text;
            int line = lhs->line, col = lhs->col;
            ExprPtr rhs = parse_unary();
            lhs = mk_pos(BinaryExpr{op, std::move(lhs), std::move(rhs)}, line, col);
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (at(Tok::Minus)) {
            Token t = take();
            return mk(UnaryExpr{"-", parse_unary()}, t);
        }
        return parse_postfix();
    }

    ExprPtr parse_postfix() {
        ExprPtr base = parse_primary();
        while (at(Tok::LBracket)) {
            take();
            Token idx = expect(Tok::Number, "a component position");
            Rational q = number_of(idx);
            if (!is_integer(q) || q < 1)
                throw DslError({"component position must be a positive integer", idx.line,
                                idx.col});
            expect(Tok::RBracket, "']' after the component position");
            int line = base->line, col = base->col;
            IndexExpr e;
            e.base = std::move(base);
            e.index = numerator(q).convert_to<long long>();
            base = mk_pos(std::move(e), line, col);
        }
        return base;
    }

    // Literal values for pmf entries, table keys and membership sets.
    ValueLit parse_value() {
        const Token& t = peek();
        ValueLit v;
        v.line = t.line;
        v.col = t.col;
        switch (t.kind) {
        case Tok::Minus: {
            take();
            Token num = expect(Tok::Number, "a number after '-'");
            v.value = Value::number(-number_of(num));
            return v;
        }
        case Tok::Number: {
            Token num = take();
            Rational q = number_of(num);
            if (at(Tok::Slash)) {
                take();
                Token den = expect(Tok::Number, "a denominator");
                Rational d = number_of(den);
                if (d == 0) throw DslError({"zero denominator", den.line, den.col});
                q /= d;
            }
            v.value = Value::number(std::move(q));
            return v;
        }
        case Tok::KwTrue:
            take();
            v.value = Value::boolean(true);
            return v;
        case Tok::KwFalse:
            take();
            v.value = Value::boolean(false);
            return v;
        case Tok::Ident:
            v.value = Value::symbol(take().text);
            return v;
        case Tok::String:
            v.value = Value::symbol(take().text);
            return v;
        case Tok::Lt: {
            take();
            std::vector<Value> items;
            items.push_back(parse_value().value);
            while (at(Tok::Comma)) {
                take();
                items.push_back(parse_value().value);
            }
            expect(Tok::Gt, "'>' closing the tuple value");
            v.value = Value::tuple(std::move(items));
            return v;
        }
        default:
            throw DslError({"expected a value, found '" +
                                (t.kind == Tok::End ? "end of input" : t.text) + "'",
                            t.line, t.col});
        }
    }

    // Weights: NUMBER or NUMBER "/" NUMBER, both exact.
    Rational parse_weight(int* line = nullptr, int* col = nullptr) {
        Token num = expect(Tok::Number, "a weight");
        if (line) *line = num.line;
        if (col) *col = num.col;
        Rational q = number_of(num);
        if (at(Tok::Slash)) {
            take();
            Token den = expect(Tok::Number, "a denominator");
            Rational d = number_of(den);
            if (d == 0) throw DslError({"zero denominator", den.line, den.col});
            q /= d;
        }
        return q;
    }

    ExprPtr parse_primary() {
        const Token t = peek();
        switch (t.kind) {
        case Tok::Number: {
            take();
            return mk(NumberLit{number_of(t)}, t);
        }
        case Tok::KwTrue:
            take();
            return mk(BoolLit{true}, t);
        case Tok::KwFalse:
            take();
            return mk(BoolLit{false}, t);
        case Tok::String:
            take();
            return mk(SymbolLit{t.text, true}, t);
        case Tok::Ident: {
            take();
            if (at(Tok::LParen)) {
                take();
                DepthGuard guard(tuple_depth_, 0);
                CallExpr call;
                call.fn = t.text;
                call.args.push_back(parse_expr());
                while (at(Tok::Comma)) {
                    take();
                    call.args.push_back(parse_expr());
                }
                expect(Tok::RParen, "')' closing the argument list");
                return mk(std::move(call), t);
            }
            return mk(WordRef{t.text}, t);
        }
        case Tok::LParen: {
            take();
            DepthGuard guard(tuple_depth_, 0);
            ExprPtr inner = parse_expr();
            expect(Tok::RParen, "')'");
            return inner;
        }
        case Tok::Lt: {
            take();
            DepthGuard guard(tuple_depth_, tuple_depth_ + 1);
            TupleExpr tup;
            tup.items.push_back(parse_expr());
            while (at(Tok::Comma)) {
                take();
                tup.items.push_back(parse_expr());
            }
            expect(Tok::Gt, "'>' closing the tuple");
            return mk(std::move(tup), t);
        }
        case Tok::LBrace: {
            take();
            PmfLit pmf;
            for (;;) {
                PmfEntry entry;
                entry.value = parse_value();
                expect(Tok::Colon, "':' between value and weight");
                entry.weight = parse_weight(&entry.wline, &entry.wcol);
                pmf.entries.push_back(std::move(entry));
                if (!at(Tok::Comma)) break;
                take();
            }
            expect(Tok::RBrace, "'}' closing the distribution");
            return mk(std::move(pmf), t);
        }
        case Tok::KwBern: {
            take();
            expect(Tok::LParen, "'(' after 'bern'");
            int wl = 0, wc = 0;
            Rational p = parse_weight(&wl, &wc);
            if (p < 0 || p > 1)
                throw DslError({"bern weight must be between 0 and 1", wl, wc});
            expect(Tok::RParen, "')'");
            return mk(BernLit{std::move(p)}, t);
        }
        case Tok::KwTable: {
            take();
            expect(Tok::LParen, "'(' after 'table'");
            DepthGuard guard(tuple_depth_, 0);
            TableExpr tbl;
            tbl.selector = parse_expr();
            expect(Tok::RParen, "')' after the selector");
            expect(Tok::LBrace, "'{' starting the branches");
            for (;;) {
                ValueLit key = parse_value();
                expect(Tok::Colon, "':' between key and branch");
                tbl.branches.emplace_back(std::move(key), parse_expr());
                if (!at(Tok::Comma)) break;
                take();
            }
            expect(Tok::RBrace, "'}' closing the table");
            return mk(std::move(tbl), t);
        }
        case Tok::KwMix: {
            take();
            expect(Tok::LBrace, "'{' after 'mix'");
            DepthGuard guard(tuple_depth_, 0);
            MixExpr m;
            m.alternatives.push_back(parse_expr());
            while (at(Tok::Comma)) {
                take();
                m.alternatives.push_back(parse_expr());
            }
            expect(Tok::RBrace, "'}' closing the mixture");
            return mk(std::move(m), t);
        }
        default:
            throw DslError({"expected an expression, found '" +
                                (t.kind == Tok::End ? "end of input" : t.text) + "'",
                            t.line, t.col});
        }
    }
};

} // namespace detail

inline Model parse_model(std::string_view src) { return detail::Parser(src).parse_model(); }

inline ExprPtr parse_expression(std::string_view src) {
    return detail::Parser(src).parse_single_expression();
}

// ---------------------------------------------------------------------------
// Pretty-printer. Output reparses to a structurally identical tree; parens
// appear only where precedence demands them.

namespace detail {

struct PrecedenceVisitor {
    int operator()(const GivenExpr&) const { return 0; }
    int operator()(const BinaryExpr& b) const {
        if (b.op == "or") return 1;
        if (b.op == "and") return 2;
        if (b.op == "==" || b.op == "!=" || b.op == "<" || b.op == "<=" || b.op == ">" ||
            b.op == ">=")
            return 4;
        if (b.op == "+" || b.op == "-") return 5;
        return 6;  // * /
    }
    int operator()(const InSetExpr&) const { return 4; }
    int operator()(const UnaryExpr& u) const { return u.op == "not" ? 3 : 7; }
    int operator()(const IndexExpr&) const { return 8; }
    template <typename T>
    int operator()(const T&) const { return 9; }
};

inline int precedence_of(const Expr& e) { return std::visit(PrecedenceVisitor{}, e.node); }

inline void print_expr(const Expr& e, int min_prec, std::string& out);

inline void print_weight(const Rational& q, std::string& out) { out += format_fraction(q); }

inline void print_value(const Value& v, std::string& out) { out += to_text(v); }

inline void print_expr(const Expr& e, int min_prec, std::string& out) {
    int prec = precedence_of(e);
    bool parens = prec < min_prec;
    if (parens) out += '(';
    struct V {
        std::string& out;
        void operator()(const NumberLit& n) const { out += format_fraction(n.value); }
        void operator()(const BoolLit& b) const { out += b.value ? "true" : "false"; }
        void operator()(const SymbolLit& s) const {
            // Always quoted: a bare spelling would reparse as a word
            // reference instead of an explicit symbol literal.
            out += '"';
            for (char ch : s.name) {
                if (ch == '"' || ch == '\\') out += '\\';
                out += ch;
            }
            out += '"';
        }
        void operator()(const WordRef& w) const { out += w.name; }
        void operator()(const PmfLit& p) const {
            out += '{';
            for (std::size_t i = 0; i < p.entries.size(); ++i) {
                if (i) out += ", ";
                print_value(p.entries[i].value.value, out);
                out += ": ";
                print_weight(p.entries[i].weight, out);
            }
            out += '}';
        }
        void operator()(const BernLit& b) const {
            out += "bern(";
            print_weight(b.p, out);
            out += ')';
        }
        void operator()(const CallExpr& c) const {
            out += c.fn;
            out += '(';
            for (std::size_t i = 0; i < c.args.size(); ++i) {
                if (i) out += ", ";
                print_expr(*c.args[i], 0, out);
            }
            out += ')';
        }
        void operator()(const UnaryExpr& u) const {
            if (u.op == "not") {
                out += "not ";
                print_expr(*u.operand, 3, out);
            } else {
                out += '-';
                print_expr(*u.operand, 7, out);
            }
        }
        void operator()(const BinaryExpr& b) const {
            int prec = b.op == "or"    ? 1
                       : b.op == "and" ? 2
                       : (b.op == "+" || b.op == "-")
                           ? 5
                       : (b.op == "*" || b.op == "/") ? 6
                                                      : 4;
            print_expr(*b.lhs, prec, out);
            out += ' ';
            out += b.op;
            out += ' ';
            print_expr(*b.rhs, prec + 1, out);
        }
        void operator()(const InSetExpr& s) const {
            print_expr(*s.item, 5, out);
            out += " in {";
            for (std::size_t i = 0; i < s.candidates.size(); ++i) {
                if (i) out += ", ";
                print_value(s.candidates[i].value, out);
            }
            out += '}';
        }
        void operator()(const IndexExpr& ix) const {
            print_expr(*ix.base, 8, out);
            out += '[';
            out += std::to_string(ix.index);
            out += ']';
        }
        void operator()(const GivenExpr& g) const {
            print_expr(*g.target, 1, out);
            out += " given ";
            if (g.bracketed) {
                out += '[';
                for (std::size_t i = 0; i < g.conditions.size(); ++i) {
                    if (i) out += ", ";
                    print_expr(*g.conditions[i], 0, out);
                }
                out += ']';
            } else {
                print_expr(*g.conditions.front(), 1, out);
            }
        }
        void operator()(const TableExpr& t) const {
            out += "table(";
            print_expr(*t.selector, 0, out);
            out += ") {";
            for (std::size_t i = 0; i < t.branches.size(); ++i) {
                if (i) out += ',';
                out += ' ';
                print_value(t.branches[i].first.value, out);
                out += ": ";
                print_expr(*t.branches[i].second, 0, out);
            }
            out += " }";
        }
        void operator()(const MixExpr& m) const {
            out += "mix {";
            for (std::size_t i = 0; i < m.alternatives.size(); ++i) {
                if (i) out += ',';
                out += ' ';
                print_expr(*m.alternatives[i], 0, out);
            }
            out += " }";
        }
        void operator()(const TupleExpr& t) const {
            out += '<';
            for (std::size_t i = 0; i < t.items.size(); ++i) {
                if (i) out += ", ";
                print_expr(*t.items[i], 0, out);
            }
            out += '>';
        }
    };
    std::visit(V{out}, e.node);
    if (parens) out += ')';
}

} // namespace detail

inline std::string print_expression(const Expr& e) {
    std::string out;
    detail::print_expr(e, 0, out);
    return out;
}

inline std::string print_model(const Model& m) {
    std::string out;
    for (const Stmt& s : m.statements) {
        if (s.kind == Stmt::Kind::Let) {
            out += "let " + s.name + " = " + print_expression(*s.expr) + "\n";
        } else {
            out += "query " + print_expression(*s.expr) + "\n";
        }
    }
    return out;
}

// Structural equality, ignoring source positions. Used to validate that
// pretty-printed output reparses to the same tree.
inline bool same_tree(const Expr& a, const Expr& b);

namespace detail {

inline bool same_values(const std::vector<ValueLit>& a, const std::vector<ValueLit>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(a[i].value == b[i].value)) return false;
    return true;
}

inline bool same_trees(const std::vector<ExprPtr>& a, const std::vector<ExprPtr>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same_tree(*a[i], *b[i])) return false;
    return true;
}

} // namespace detail

inline bool same_tree(const Expr& a, const Expr& b) {
    if (a.node.index() != b.node.index()) return false;
    struct V {
        const Expr& other;
        bool operator()(const NumberLit& n) const {
            return std::get<NumberLit>(other.node).value == n.value;
        }
        bool operator()(const BoolLit& x) const {
            return std::get<BoolLit>(other.node).value == x.value;
        }
        bool operator()(const SymbolLit& s) const {
            return std::get<SymbolLit>(other.node).name == s.name;
        }
        bool operator()(const WordRef& w) const {
            return std::get<WordRef>(other.node).name == w.name;
        }
        bool operator()(const PmfLit& p) const {
            const auto& q = std::get<PmfLit>(other.node);
            if (p.entries.size() != q.entries.size()) return false;
            for (std::size_t i = 0; i < p.entries.size(); ++i) {
                if (!(p.entries[i].value.value == q.entries[i].value.value)) return false;
                if (p.entries[i].weight != q.entries[i].weight) return false;
            }
            return true;
        }
        bool operator()(const BernLit& x) const {
            return std::get<BernLit>(other.node).p == x.p;
        }
        bool operator()(const CallExpr& c) const {
            const auto& d = std::get<CallExpr>(other.node);
            return c.fn == d.fn && detail::same_trees(c.args, d.args);
        }
        bool operator()(const UnaryExpr& u) const {
            const auto& w = std::get<UnaryExpr>(other.node);
            return u.op == w.op && same_tree(*u.operand, *w.operand);
        }
        bool operator()(const BinaryExpr& x) const {
            const auto& y = std::get<BinaryExpr>(other.node);
            return x.op == y.op && same_tree(*x.lhs, *y.lhs) && same_tree(*x.rhs, *y.rhs);
        }
        bool operator()(const InSetExpr& s) const {
            const auto& u = std::get<InSetExpr>(other.node);
            return same_tree(*s.item, *u.item) && detail::same_values(s.candidates, u.candidates);
        }
        bool operator()(const IndexExpr& ix) const {
            const auto& iy = std::get<IndexExpr>(other.node);
            return ix.index == iy.index && same_tree(*ix.base, *iy.base);
        }
        bool operator()(const GivenExpr& g) const {
            const auto& h = std::get<GivenExpr>(other.node);
            return g.bracketed == h.bracketed && same_tree(*g.target, *h.target) &&
                   detail::same_trees(g.conditions, h.conditions);
        }
        bool operator()(const TableExpr& t) const {
            const auto& u = std::get<TableExpr>(other.node);
            if (!same_tree(*t.selector, *u.selector)) return false;
            if (t.branches.size() != u.branches.size()) return false;
            for (std::size_t i = 0; i < t.branches.size(); ++i) {
                if (!(t.branches[i].first.value == u.branches[i].first.value)) return false;
                if (!same_tree(*t.branches[i].second, *u.branches[i].second)) return false;
            }
            return true;
        }
        bool operator()(const MixExpr& m) const {
            return detail::same_trees(m.alternatives,
                                      std::get<MixExpr>(other.node).alternatives);
        }
        bool operator()(const TupleExpr& t) const {
            return detail::same_trees(t.items, std::get<TupleExpr>(other.node).items);
        }
    };
    return std::visit(V{b}, a.node);
}

// ---------------------------------------------------------------------------
// Compiler

struct CompiledQuery {
    std::string source;  // pretty-printed form of the query expression
    int line = 0, col = 0;
    NodePtr node;
};

struct CompiledModel {
    std::vector<std::pair<std::string, NodePtr>> definitions;  // file order
    std::vector<CompiledQuery> queries;
    NameMap names;
};

namespace detail {

class Compiler {
public:
    // declared: every name a `let` binds anywhere in the file, so that a
    // use ahead of its definition is flagged instead of read as a symbol.
    Compiler(const std::map<std::string, NodePtr>* scope,
             const std::vector<std::string>* declared)
        : scope_(scope), declared_(declared) {}

    NodePtr compile(const Expr& e) {
        struct V {
            Compiler& c;
            const Expr& e;
            NodePtr operator()(const NumberLit& n) const {
                return certain(Value::number(n.value));
            }
            NodePtr operator()(const BoolLit& b) const {
                return certain(Value::boolean(b.value));
            }
            NodePtr operator()(const SymbolLit& s) const {
                return certain(Value::symbol(s.name));
            }
            NodePtr operator()(const WordRef& w) const { return c.resolve(w.name, e); }
            NodePtr operator()(const PmfLit& p) const {
                std::vector<Pmf::Entry> entries;
                for (const auto& en : p.entries) {
                    if (en.weight < 0)
                        throw DslError({"negative weight", en.wline, en.wcol});
                    entries.emplace_back(en.value.value, en.weight);
                }
                try {
                    return elementary(std::move(entries));
                } catch (const std::exception& ex) {
                    throw DslError({ex.what(), e.line, e.col});
                }
            }
            NodePtr operator()(const BernLit& b) const {
                std::vector<Pmf::Entry> entries{{Value::boolean(true), b.p},
                                                {Value::boolean(false), Prob(1) - b.p}};
                return elementary(std::move(entries));
            }
            NodePtr operator()(const CallExpr& call) const {
                const PureFnPtr* fn = find_builtin(call.fn);
                if (!fn) {
                    std::string msg = "unknown function '" + call.fn + "'";
                    if (c.scope_ && c.scope_->count(call.fn))
                        msg = "'" + call.fn + "' names a model variable, not a function";
                    throw DslError({std::move(msg), e.line, e.col});
                }
                if (static_cast<std::size_t>((*fn)->arity) != call.args.size())
                    throw DslError({"'" + call.fn + "' takes " +
                                        std::to_string((*fn)->arity) + " argument(s), got " +
                                        std::to_string(call.args.size()),
                                    e.line, e.col});
                std::vector<NodePtr> args;
                for (const auto& a : call.args) args.push_back(c.compile(*a));
                return func(*fn, std::move(args));
            }
            NodePtr operator()(const UnaryExpr& u) const {
                const char* name = u.op == "not" ? "not" : "neg";
                return func(*find_builtin(name), {c.compile(*u.operand)});
            }
            NodePtr operator()(const BinaryExpr& b) const {
                static const std::map<std::string, const char*> ops = {
                    {"+", "add"}, {"-", "sub"},  {"*", "mul"},  {"/", "div"},
                    {"==", "eq"}, {"!=", "ne"},  {"<", "lt"},   {"<=", "le"},
                    {">", "gt"},  {">=", "ge"},  {"and", "and"}, {"or", "or"},
                };
                return func(*find_builtin(ops.at(b.op)),
                            {c.compile(*b.lhs), c.compile(*b.rhs)});
            }
            NodePtr operator()(const InSetExpr& s) const {
                std::vector<Value> items;
                for (const auto& v : s.candidates) items.push_back(v.value);
                return func(*find_builtin("in_set"),
                            {c.compile(*s.item), certain(Value::tuple(std::move(items)))});
            }
            NodePtr operator()(const IndexExpr& ix) const {
                return func(*find_builtin("extract"),
                            {c.compile(*ix.base), certain(Value::number(ix.index))});
            }
            NodePtr operator()(const GivenExpr& g) const {
                NodePtr target = c.compile(*g.target);
                if (!g.bracketed && g.conditions.size() == 1)
                    return given(std::move(target), c.compile(*g.conditions.front()));
                std::vector<NodePtr> conds;
                for (const auto& cd : g.conditions) conds.push_back(c.compile(*cd));
                return multi_given(std::move(target), std::move(conds));
            }
            NodePtr operator()(const TableExpr& t) const {
                NodePtr selector = c.compile(*t.selector);
                std::vector<std::pair<Value, NodePtr>> branches;
                for (const auto& [key, branch] : t.branches) {
                    for (const auto& [prev, _] : branches)
                        if (prev == key.value)
                            throw DslError({"duplicate table key " + to_text(key.value),
                                            key.line, key.col});
                    branches.emplace_back(key.value, c.compile(*branch));
                }
                return table(std::move(selector), std::move(branches));
            }
            NodePtr operator()(const MixExpr& m) const {
                std::vector<NodePtr> alts;
                for (const auto& a : m.alternatives) alts.push_back(c.compile(*a));
                return mixture(std::move(alts));
            }
            NodePtr operator()(const TupleExpr& t) const {
                std::vector<NodePtr> items;
                for (const auto& it : t.items) items.push_back(c.compile(*it));
                return tuple_of(std::move(items));
            }
        };
        return std::visit(V{*this, e}, e.node);
    }

private:
    const std::map<std::string, NodePtr>* scope_;
    const std::vector<std::string>* declared_;

    NodePtr resolve(const std::string& name, const Expr& at) {
        if (scope_) {
            auto it = scope_->find(name);
            if (it != scope_->end()) return it->second;
        }
        if (declared_ &&
            std::find(declared_->begin(), declared_->end(), name) != declared_->end())
            throw DslError({"use of '" + name + "' before its definition", at.line, at.col});
        return certain(Value::symbol(name));
    }
};

} // namespace detail

inline CompiledModel compile_model(const Model& m) {
    CompiledModel out;
    std::vector<std::string> declared;
    for (const Stmt& s : m.statements) {
        if (s.kind != Stmt::Kind::Let) continue;
        if (std::find(declared.begin(), declared.end(), s.name) != declared.end())
            throw DslError({"duplicate definition of '" + s.name + "'", s.line, s.col});
        declared.push_back(s.name);
    }
    std::map<std::string, NodePtr> scope;
    for (const Stmt& s : m.statements) {
        detail::Compiler compiler(&scope, &declared);
        NodePtr node = compiler.compile(*s.expr);
        if (s.kind == Stmt::Kind::Let) {
            scope.emplace(s.name, node);
            out.definitions.emplace_back(s.name, node);
            out.names.emplace(node->id, s.name);
        } else {
            out.queries.push_back(
                CompiledQuery{print_expression(*s.expr), s.line, s.col, std::move(node)});
        }
    }
    return out;
}

// Compile one expression in the scope of an already compiled model, as the
// CLI's --query flag does. Unknown words become symbols; the model's names
// resolve to their shared nodes.
inline CompiledQuery compile_query(std::string_view text, const CompiledModel& model) {
    ExprPtr e = parse_expression(text);
    std::map<std::string, NodePtr> scope;
    std::vector<std::string> declared;
    for (const auto& [name, node] : model.definitions) {
        scope.emplace(name, node);
        declared.push_back(name);
    }
    detail::Compiler compiler(&scope, &declared);
    NodePtr node = compiler.compile(*e);
    return CompiledQuery{print_expression(*e), e->line, e->col, std::move(node)};
}

// Parse + compile in one step.
inline CompiledModel compile_text(std::string_view src) {
    return compile_model(parse_model(src));
}

} // namespace statues::dsl
