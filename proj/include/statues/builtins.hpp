#pragma once

#include "statues/errors.hpp"
#include "statues/value.hpp"

#include <map>
#include <span>
#include <string>
#include <string_view>

// Built-in pure functions. Everything works on exact values and either
// returns an exact value or throws FunctionError; there is no rounding
// anywhere. Arithmetic and comparisons want numbers, the logical connectives
// want booleans, eq/ne accept anything.

namespace statues {
namespace detail {

inline const Rational& want_number(const Value& v, const char* fn) {
    if (!v.is_number())
        throw FunctionError(std::string(fn) + ": expected a number, got " + to_text(v));
    return v.as_number();
}

inline bool want_bool(const Value& v, const char* fn) {
    if (!v.is_bool())
        throw FunctionError(std::string(fn) + ": expected a boolean, got " + to_text(v));
    return v.as_bool();
}

} // namespace detail

namespace builtins {

inline const PureFnPtr& add() {
    static const PureFnPtr fn = make_pure_fn("add", 2, [](std::span<const Value> a) {
        return Value::number(detail::want_number(a[0], "add") + detail::want_number(a[1], "add"));
    });
    return fn;
}

inline const PureFnPtr& sub() {
    static const PureFnPtr fn = make_pure_fn("sub", 2, [](std::span<const Value> a) {
        return Value::number(detail::want_number(a[0], "sub") - detail::want_number(a[1], "sub"));
    });
    return fn;
}

inline const PureFnPtr& mul() {
    static const PureFnPtr fn = make_pure_fn("mul", 2, [](std::span<const Value> a) {
        return Value::number(detail::want_number(a[0], "mul") * detail::want_number(a[1], "mul"));
    });
    return fn;
}

inline const PureFnPtr& div() {
    static const PureFnPtr fn = make_pure_fn("div", 2, [](std::span<const Value> a) {
        const Rational& d = detail::want_number(a[1], "div");
        if (d == 0) throw FunctionError("div: division by zero");
        return Value::number(detail::want_number(a[0], "div") / d);
    });
    return fn;
}

inline const PureFnPtr& neg() {
    static const PureFnPtr fn = make_pure_fn("neg", 1, [](std::span<const Value> a) {
        return Value::number(-detail::want_number(a[0], "neg"));
    });
    return fn;
}

inline const PureFnPtr& abs() {
    static const PureFnPtr fn = make_pure_fn("abs", 1, [](std::span<const Value> a) {
        const Rational& q = detail::want_number(a[0], "abs");
        return Value::number(q < 0 ? Rational(-q) : q);
    });
    return fn;
}

inline const PureFnPtr& min() {
    static const PureFnPtr fn = make_pure_fn("min", 2, [](std::span<const Value> a) {
        const Rational& x = detail::want_number(a[0], "min");
        const Rational& y = detail::want_number(a[1], "min");
        return Value::number(x < y ? x : y);
    });
    return fn;
}

inline const PureFnPtr& max() {
    static const PureFnPtr fn = make_pure_fn("max", 2, [](std::span<const Value> a) {
        const Rational& x = detail::want_number(a[0], "max");
        const Rational& y = detail::want_number(a[1], "max");
        return Value::number(x < y ? y : x);
    });
    return fn;
}

inline const PureFnPtr& pow() {
    static const PureFnPtr fn = make_pure_fn("pow", 2, [](std::span<const Value> a) {
        const Rational& base = detail::want_number(a[0], "pow");
        const Rational& e = detail::want_number(a[1], "pow");
        if (!is_integer(e)) throw FunctionError("pow: exponent must be an integer");
        BigInt n = numerator(e);
        if (n < -65536 || n > 65536) throw FunctionError("pow: exponent out of range");
        long long exp = n.convert_to<long long>();
        if (exp < 0 && base == 0) throw FunctionError("pow: zero to a negative power");
        return Value::number(pow_integer(base, exp));
    });
    return fn;
}

inline const PureFnPtr& sqrt() {
    static const PureFnPtr fn = make_pure_fn("sqrt", 1, [](std::span<const Value> a) {
        const Rational& q = detail::want_number(a[0], "sqrt");
        if (q < 0) throw FunctionError("sqrt: negative operand");
        auto root = exact_sqrt(q);
        if (!root) throw FunctionError("sqrt: " + format_fraction(q) + " has no exact square root");
        return Value::number(*root);
    });
    return fn;
}

inline const PureFnPtr& eq() {
    static const PureFnPtr fn = make_pure_fn("eq", 2, [](std::span<const Value> a) {
        return Value::boolean(a[0] == a[1]);
    });
    return fn;
}

inline const PureFnPtr& ne() {
    static const PureFnPtr fn = make_pure_fn("ne", 2, [](std::span<const Value> a) {
        return Value::boolean(a[0] != a[1]);
    });
    return fn;
}

inline const PureFnPtr& lt() {
    static const PureFnPtr fn = make_pure_fn("lt", 2, [](std::span<const Value> a) {
        return Value::boolean(detail::want_number(a[0], "lt") < detail::want_number(a[1], "lt"));
    });
    return fn;
}

inline const PureFnPtr& le() {
    static const PureFnPtr fn = make_pure_fn("le", 2, [](std::span<const Value> a) {
        return Value::boolean(detail::want_number(a[0], "le") <= detail::want_number(a[1], "le"));
    });
    return fn;
}

inline const PureFnPtr& gt() {
    static const PureFnPtr fn = make_pure_fn("gt", 2, [](std::span<const Value> a) {
        return Value::boolean(detail::want_number(a[0], "gt") > detail::want_number(a[1], "gt"));
    });
    return fn;
}

inline const PureFnPtr& ge() {
    static const PureFnPtr fn = make_pure_fn("ge", 2, [](std::span<const Value> a) {
        return Value::boolean(detail::want_number(a[0], "ge") >= detail::want_number(a[1], "ge"));
    });
    return fn;
}

inline const PureFnPtr& logical_and() {
    static const PureFnPtr fn = make_pure_fn("and", 2, [](std::span<const Value> a) {
        bool x = detail::want_bool(a[0], "and");
        bool y = detail::want_bool(a[1], "and");
        return Value::boolean(x && y);
    });
    return fn;
}

inline const PureFnPtr& logical_or() {
    static const PureFnPtr fn = make_pure_fn("or", 2, [](std::span<const Value> a) {
        bool x = detail::want_bool(a[0], "or");
        bool y = detail::want_bool(a[1], "or");
        return Value::boolean(x || y);
    });
    return fn;
}

inline const PureFnPtr& logical_not() {
    static const PureFnPtr fn = make_pure_fn("not", 1, [](std::span<const Value> a) {
        return Value::boolean(!detail::want_bool(a[0], "not"));
    });
    return fn;
}

inline const PureFnPtr& implies() {
    static const PureFnPtr fn = make_pure_fn("implies", 2, [](std::span<const Value> a) {
        bool x = detail::want_bool(a[0], "implies");
        bool y = detail::want_bool(a[1], "implies");
        return Value::boolean(!x || y);
    });
    return fn;
}

inline const PureFnPtr& iff() {
    static const PureFnPtr fn = make_pure_fn("iff", 2, [](std::span<const Value> a) {
        bool x = detail::want_bool(a[0], "iff");
        bool y = detail::want_bool(a[1], "iff");
        return Value::boolean(x == y);
    });
    return fn;
}

// 1-based tuple component access.
inline const PureFnPtr& extract() {
    static const PureFnPtr fn = make_pure_fn("extract", 2, [](std::span<const Value> a) {
        if (!a[0].is_tuple())
            throw FunctionError("extract: expected a tuple, got " + to_text(a[0]));
        const Rational& i = detail::want_number(a[1], "extract");
        const auto& items = a[0].as_tuple();
        if (!is_integer(i) || i < 1 || i > Rational(static_cast<long long>(items.size())))
            throw FunctionError("extract: index " + format_fraction(i) + " out of range for " +
                                to_text(a[0]));
        return items[numerator(i).convert_to<std::size_t>() - 1];
    });
    return fn;
}

// Membership of the first argument in the tuple given as second argument.
inline const PureFnPtr& in_set() {
    static const PureFnPtr fn = make_pure_fn("in_set", 2, [](std::span<const Value> a) {
        if (!a[1].is_tuple())
            throw FunctionError("in_set: expected a tuple of candidates, got " + to_text(a[1]));
        for (const auto& candidate : a[1].as_tuple())
            if (a[0] == candidate) return Value::boolean(true);
        return Value::boolean(false);
    });
    return fn;
}

} // namespace builtins

// Lookup by the name the model language uses; nullptr when unknown.
inline const PureFnPtr* find_builtin(std::string_view name) {
    static const std::map<std::string, PureFnPtr, std::less<>> table = {
        {"add", builtins::add()},       {"sub", builtins::sub()},
        {"mul", builtins::mul()},       {"div", builtins::div()},
        {"neg", builtins::neg()},       {"abs", builtins::abs()},
        {"min", builtins::min()},       {"max", builtins::max()},
        {"pow", builtins::pow()},       {"sqrt", builtins::sqrt()},
        {"eq", builtins::eq()},         {"ne", builtins::ne()},
        {"lt", builtins::lt()},         {"le", builtins::le()},
        {"gt", builtins::gt()},         {"ge", builtins::ge()},
        {"and", builtins::logical_and()}, {"or", builtins::logical_or()},
        {"not", builtins::logical_not()}, {"implies", builtins::implies()},
        {"iff", builtins::iff()},       {"extract", builtins::extract()},
        {"in_set", builtins::in_set()},
    };
    auto it = table.find(name);
    return it == table.end() ? nullptr : &it->second;
}

// Invoke f on the value an argument node produced. Multi-argument functions
// receive one tuple value and get unpacked here; the packing side lives in
// func() / multi_func().
inline Value apply_pure_fn(const PureFn& f, const Value& arg) {
    if (f.arity == 1) return f.body(std::span<const Value>(&arg, 1));
    if (!arg.is_tuple() || arg.as_tuple().size() != static_cast<std::size_t>(f.arity))
        throw FunctionError(f.name + ": expected a " + std::to_string(f.arity) +
                            "-tuple argument, got " + to_text(arg));
    const auto& items = arg.as_tuple();
    return f.body(std::span<const Value>(items.data(), items.size()));
}

} // namespace statues
