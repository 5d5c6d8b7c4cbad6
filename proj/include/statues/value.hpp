#pragma once

#include "statues/rational.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace statues {

struct PureFn;
using PureFnPtr = std::shared_ptr<const PureFn>;

// A finite discrete outcome. One of: boolean, exact rational, symbol (a bare
// text label like `sunny`), tuple of values, or a function value (used by
// multi-functional nodes whose "which function" is itself random).
//
// Values are compared structurally, except function values which compare by
// identity of the underlying function object. A total order exists across
// all tags so that supports, table keys and rendered output are
// deterministic: false < true < numbers < symbols < tuples < functions.
class Value {
public:
    using Tuple = std::vector<Value>;

    struct Symbol {
        std::string name;
        bool operator==(const Symbol& o) const { return name == o.name; }
    };

    Value() : rep_(false) {}

    static Value boolean(bool b) { return Value(Rep(b)); }
    static Value number(Rational q) { return Value(Rep(std::move(q))); }
    static Value number(long long n) { return Value(Rep(Rational(n))); }
    static Value symbol(std::string name) { return Value(Rep(Symbol{std::move(name)})); }
    static Value tuple(Tuple items) { return Value(Rep(std::move(items))); }
    static Value function(PureFnPtr fn) {
        if (!fn) throw std::invalid_argument("Value::function: null function");
        return Value(Rep(std::move(fn)));
    }

    bool is_bool() const { return std::holds_alternative<bool>(rep_); }
    bool is_number() const { return std::holds_alternative<Rational>(rep_); }
    bool is_symbol() const { return std::holds_alternative<Symbol>(rep_); }
    bool is_tuple() const { return std::holds_alternative<Tuple>(rep_); }
    bool is_function() const { return std::holds_alternative<PureFnPtr>(rep_); }

    bool as_bool() const { return get<bool>("boolean"); }
    const Rational& as_number() const { return get<Rational>("number"); }
    const std::string& as_symbol() const { return get<Symbol>("symbol").name; }
    const Tuple& as_tuple() const { return get<Tuple>("tuple"); }
    const PureFnPtr& as_function() const { return get<PureFnPtr>("function"); }

    bool operator==(const Value& o) const;
    bool operator!=(const Value& o) const { return !(*this == o); }
    bool operator<(const Value& o) const { return compare(o) < 0; }

    // Three-way structural comparison implementing the total order above.
    int compare(const Value& o) const;

private:
    using Rep = std::variant<bool, Rational, Symbol, Tuple, PureFnPtr>;
    explicit Value(Rep rep) : rep_(std::move(rep)) {}

    template <typename T>
    const T& get(const char* what) const {
        if (auto* p = std::get_if<T>(&rep_)) return *p;
        throw std::invalid_argument(std::string("Value: not a ") + what);
    }

    Rep rep_;
};

// A deterministic pure function over values. `body` receives exactly `arity`
// arguments and either returns a value or throws FunctionError. Identity is
// the object itself: two PureFns are the same function only if they are the
// same allocation, which is what function-value equality keys on. `seq`
// breaks ordering ties deterministically for a fixed construction order.
struct PureFn {
    std::string name;
    int arity;
    std::uint64_t seq;
    std::function<Value(std::span<const Value>)> body;
};

inline PureFnPtr make_pure_fn(std::string name, int arity,
                              std::function<Value(std::span<const Value>)> body) {
    if (arity < 1) throw std::invalid_argument("make_pure_fn: arity must be >= 1");
    if (!body) throw std::invalid_argument("make_pure_fn: missing body");
    static std::atomic<std::uint64_t> next_seq{1};
    auto fn = std::make_shared<PureFn>();
    fn->name = std::move(name);
    fn->arity = arity;
    fn->seq = next_seq.fetch_add(1, std::memory_order_relaxed);
    fn->body = std::move(body);
    return fn;
}

inline int Value::compare(const Value& o) const {
    if (rep_.index() != o.rep_.index())
        return rep_.index() < o.rep_.index() ? -1 : 1;
    switch (rep_.index()) {
    case 0: {
        bool a = std::get<bool>(rep_), b = std::get<bool>(o.rep_);
        return a == b ? 0 : (!a ? -1 : 1);
    }
    case 1: {
        const auto& a = std::get<Rational>(rep_);
        const auto& b = std::get<Rational>(o.rep_);
        return a == b ? 0 : (a < b ? -1 : 1);
    }
    case 2: {
        int c = std::get<Symbol>(rep_).name.compare(std::get<Symbol>(o.rep_).name);
        return c == 0 ? 0 : (c < 0 ? -1 : 1);
    }
    case 3: {
        const auto& a = std::get<Tuple>(rep_);
        const auto& b = std::get<Tuple>(o.rep_);
        for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
            int c = a[i].compare(b[i]);
            if (c != 0) return c;
        }
        return a.size() == b.size() ? 0 : (a.size() < b.size() ? -1 : 1);
    }
    default: {
        const auto& a = std::get<PureFnPtr>(rep_);
        const auto& b = std::get<PureFnPtr>(o.rep_);
        if (a == b) return 0;
        int c = a->name.compare(b->name);
        if (c != 0) return c < 0 ? -1 : 1;
        return a->seq < b->seq ? -1 : 1;
    }
    }
}

inline bool Value::operator==(const Value& o) const {
    return compare(o) == 0;
}

namespace detail {

inline bool symbol_needs_quotes(std::string_view s) {
    if (s.empty()) return true;
    if (!(s[0] == '_' || (s[0] >= 'a' && s[0] <= 'z') || (s[0] >= 'A' && s[0] <= 'Z')))
        return true;
    for (char c : s) {
        bool word = c == '_' || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9');
        if (!word) return true;
    }
    // Words the model language claims for itself.
    static constexpr std::string_view reserved[] = {
        "let", "query", "given", "table", "mix", "true", "false", "in", "not", "and", "or",
    };
    for (auto r : reserved)
        if (s == r) return true;
    return false;
}

} // namespace detail

// Text form of a value, matching the model language's literal syntax so that
// rendered results can be pasted back into a model: `true`, `7`, `2/3`,
// `sunny`, `"odd label"`, `<1, tail>`.
inline std::string to_text(const Value& v) {
    if (v.is_bool()) return v.as_bool() ? "true" : "false";
    if (v.is_number()) return format_fraction(v.as_number());
    if (v.is_symbol()) {
        const std::string& s = v.as_symbol();
        if (!detail::symbol_needs_quotes(s)) return s;
        std::string out = "\"";
        for (char c : s) {
            if (c == '"' || c == '\\') out += '\\';
            out += c;
        }
        out += '"';
        return out;
    }
    if (v.is_tuple()) {
        std::string out = "<";
        const auto& items = v.as_tuple();
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i) out += ", ";
            out += to_text(items[i]);
        }
        out += '>';
        return out;
    }
    return "fn:" + v.as_function()->name;
}

} // namespace statues
