#pragma once

#include "statues/builtins.hpp"
#include "statues/pex.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace statues {

// ---------------------------------------------------------------------------
// Exact marginalization by lazy atom enumeration.
//
// An atom is one weighted value (v, p) produced while walking a query's DAG.
// Enumerating a node visits its pmf entries, children left to right,
// conditions before targets, selectors before branches; that order is part
// of the contract and is what makes result pmfs and traces reproducible.
//
// Referential consistency comes from the binding environment: while a node's
// enumeration has yielded some value and the consumer is still processing
// it, the node is bound to that value, and any other appearance of the same
// node inside the consumer's nested enumerations collapses to the single
// atom (bound value, 1). The environment lives on the query, never on the
// nodes, so concurrent queries over a shared DAG do not see each other.
// ---------------------------------------------------------------------------

struct Atom {
    Value value;
    Prob weight;
};

// Per-query map from node id to the currently bound value.
class BindingEnv {
public:
    const Value* find(NodeId id) const {
        auto it = bound_.find(id);
        return it == bound_.end() ? nullptr : &it->second;
    }
    void bind(NodeId id, Value v) { bound_.insert_or_assign(id, std::move(v)); }
    void unbind(NodeId id) { bound_.erase(id); }
    std::size_t size() const { return bound_.size(); }
    bool empty() const { return bound_.empty(); }

private:
    std::unordered_map<NodeId, Value> bound_;
};

// One step of an instrumented query. Yield events carry the consuming edge
// (parent node and child slot; parent 0 means the query root consumer).
// Rebinding a node to its next value is recorded as Unbind followed by Bind,
// so per node the Bind and Unbind counts balance exactly and replaying the
// events reconstructs the bound values at any step.
struct TraceEvent {
    enum class Kind { Bind, Unbind, Yield, SkipFalseCondition };

    Kind kind;
    std::size_t step = 0;
    NodeId node = 0;
    std::optional<Value> value;  // Bind: bound value; Yield/Skip: atom value
    std::optional<Prob> weight;  // Yield/Skip: atom weight
    NodeId parent = 0;           // Yield only
    int slot = -1;               // Yield: child slot; Skip: the false condition's slot
};

struct EngineOptions {
    // When set, nodes whose binding can never be consulted (single parent
    // edge, or a one-value domain) are enumerated without touching the
    // environment. Results are identical; only trace events differ.
    bool skip_redundant_bindings = false;
};

namespace detail {

// Non-owning callable for pushing atoms down the enumeration stack without
// std::function allocations on the hot path.
struct AtomSink {
    void* ctx;
    void (*call)(void*, const Value&, const Prob&);
    void operator()(const Value& v, const Prob& p) const { call(ctx, v, p); }
};

template <typename F>
AtomSink make_sink(F& f) {
    return AtomSink{&f, [](void* ctx, const Value& v, const Prob& p) {
                        (*static_cast<F*>(ctx))(v, p);
                    }};
}

struct QueryCtx {
    BindingEnv& env;
    std::vector<TraceEvent>* trace = nullptr;
    const std::unordered_set<NodeId>* unbound_ok = nullptr;

    void push(TraceEvent ev) {
        ev.step = trace->size();
        trace->push_back(std::move(ev));
    }
    void record_bind(NodeId node, const Value& v) {
        if (!trace) return;
        TraceEvent ev;
        ev.kind = TraceEvent::Kind::Bind;
        ev.node = node;
        ev.value = v;
        push(std::move(ev));
    }
    void record_unbind(NodeId node) {
        if (!trace) return;
        TraceEvent ev;
        ev.kind = TraceEvent::Kind::Unbind;
        ev.node = node;
        push(std::move(ev));
    }
    void record_yield(NodeId node, const Value& v, const Prob& p, NodeId parent, int slot) {
        if (!trace) return;
        TraceEvent ev;
        ev.kind = TraceEvent::Kind::Yield;
        ev.node = node;
        ev.value = v;
        ev.weight = p;
        ev.parent = parent;
        ev.slot = slot;
        push(std::move(ev));
    }
    void record_skip(NodeId node, const Value& v, const Prob& p, int condition_index) {
        if (!trace) return;
        TraceEvent ev;
        ev.kind = TraceEvent::Kind::SkipFalseCondition;
        ev.node = node;
        ev.value = v;
        ev.weight = p;
        ev.slot = condition_index;
        push(std::move(ev));
    }
};

// Owns one node's binding for the duration of its enumeration. The value is
// rewritten before every yield and released when the enumeration ends,
// whether it ends by exhaustion or by an error unwinding past it.
class BindFrame {
public:
    BindFrame(QueryCtx& q, NodeId id) : q_(q), id_(id) {}
    BindFrame(const BindFrame&) = delete;
    BindFrame& operator=(const BindFrame&) = delete;

    void rebind(const Value& v) {
        if (bound_) q_.record_unbind(id_);
        q_.env.bind(id_, v);
        bound_ = true;
        q_.record_bind(id_, v);
    }

    ~BindFrame() {
        if (bound_) {
            q_.env.unbind(id_);
            q_.record_unbind(id_);
        }
    }

private:
    QueryCtx& q_;
    NodeId id_;
    bool bound_ = false;
};

void gen_atoms(const NodePtr& d, QueryCtx& q, NodeId parent, int slot, AtomSink out);

// Kind-specific enumeration, unaware of bindings for d itself (gen_atoms
// handles those); children are enumerated through gen_atoms, so nested
// bindings work the usual way.
inline void gen_atoms_by_type(const PexNode& d, QueryCtx& q, AtomSink out) {
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;

            if constexpr (std::is_same_v<K, Elementary>) {
                for (const auto& [v, p] : k.dist.entries()) out(v, p);

            } else if constexpr (std::is_same_v<K, TupleNode>) {
                std::vector<Value> acc(k.items.size());
                auto rec = [&](auto&& self, std::size_t i, const Prob& p) -> void {
                    if (i == k.items.size()) {
                        out(Value::tuple(acc), p);
                        return;
                    }
                    auto inner = [&](const Value& v, const Prob& vp) {
                        acc[i] = v;
                        self(self, i + 1, Prob(p * vp));
                    };
                    gen_atoms(k.items[i], q, d.id, static_cast<int>(i), make_sink(inner));
                };
                rec(rec, 0, Prob(1));

            } else if constexpr (std::is_same_v<K, Functional>) {
                auto relay = [&](const Value& v, const Prob& p) {
                    out(apply_pure_fn(*k.fn, v), p);
                };
                gen_atoms(k.arg, q, d.id, 0, make_sink(relay));

            } else if constexpr (std::is_same_v<K, Conditional>) {
                auto on_condition = [&](const Value& cv, const Prob& cp) {
                    if (!cv.is_bool())
                        throw NonBooleanCondition("condition produced " + to_text(cv));
                    if (!cv.as_bool()) {
                        q.record_skip(d.id, cv, cp, 1);
                        return;
                    }
                    auto on_target = [&](const Value& tv, const Prob& tp) {
                        out(tv, Prob(cp * tp));
                    };
                    gen_atoms(k.target, q, d.id, 0, make_sink(on_target));
                };
                gen_atoms(k.condition, q, d.id, 1, make_sink(on_condition));

            } else if constexpr (std::is_same_v<K, TableNode>) {
                auto on_selector = [&](const Value& sv, const Prob& sp) {
                    auto it = k.branches.find(sv);
                    if (it == k.branches.end())
                        throw MissingTableEntry("no table branch for selector value " +
                                                to_text(sv));
                    int slot = 1 + static_cast<int>(std::distance(k.branches.begin(), it));
                    auto on_branch = [&](const Value& bv, const Prob& bp) {
                        out(bv, Prob(sp * bp));
                    };
                    gen_atoms(it->second, q, d.id, slot, make_sink(on_branch));
                };
                gen_atoms(k.selector, q, d.id, 0, make_sink(on_selector));

            } else if constexpr (std::is_same_v<K, MultiConditional>) {
                auto rec = [&](auto&& self, std::size_t i, const Prob& p) -> void {
                    if (i == k.conditions.size()) {
                        auto on_target = [&](const Value& tv, const Prob& tp) {
                            out(tv, Prob(p * tp));
                        };
                        gen_atoms(k.target, q, d.id, 0, make_sink(on_target));
                        return;
                    }
                    auto on_condition = [&](const Value& cv, const Prob& cp) {
                        if (!cv.is_bool())
                            throw NonBooleanCondition("condition produced " + to_text(cv));
                        if (!cv.as_bool()) {
                            q.record_skip(d.id, cv, cp, 1 + static_cast<int>(i));
                            return;
                        }
                        self(self, i + 1, Prob(p * cp));
                    };
                    gen_atoms(k.conditions[i], q, d.id, 1 + static_cast<int>(i),
                              make_sink(on_condition));
                };
                rec(rec, 0, Prob(1));

            } else if constexpr (std::is_same_v<K, MultiFunctional>) {
                auto on_fn = [&](const Value& fv, const Prob& fp) {
                    if (!fv.is_function())
                        throw NonFunctionValue("function position produced " + to_text(fv));
                    const PureFn& f = *fv.as_function();
                    if (f.arity != k.arity)
                        throw NonFunctionValue("function " + f.name + " takes " +
                                               std::to_string(f.arity) + " arguments, node expects " +
                                               std::to_string(k.arity));
                    auto on_arg = [&](const Value& av, const Prob& ap) {
                        out(apply_pure_fn(f, av), Prob(fp * ap));
                    };
                    gen_atoms(k.arg, q, d.id, 1, make_sink(on_arg));
                };
                gen_atoms(k.fn_node, q, d.id, 0, make_sink(on_fn));

            } else {
                static_assert(std::is_same_v<K, Mixture>);
                for (std::size_t i = 0; i < k.alternatives.size(); ++i) {
                    auto relay = [&](const Value& v, const Prob& p) { out(v, p); };
                    gen_atoms(k.alternatives[i], q, d.id, static_cast<int>(i),
                              make_sink(relay));
                }
            }
        },
        d.kind);
}

inline void gen_atoms(const NodePtr& d, QueryCtx& q, NodeId parent, int slot, AtomSink out) {
    // A bound node has already chosen its value somewhere up the stack (or
    // was observed): it contributes that value with certainty, nothing else.
    if (const Value* bound = q.env.find(d->id)) {
        Prob one(1);
        q.record_yield(d->id, *bound, one, parent, slot);
        out(*bound, one);
        return;
    }

    if (q.unbound_ok && q.unbound_ok->count(d->id) != 0) {
        auto relay = [&](const Value& v, const Prob& p) {
            q.record_yield(d->id, v, p, parent, slot);
            out(v, p);
        };
        gen_atoms_by_type(*d, q, make_sink(relay));
        return;
    }

    BindFrame frame(q, d->id);
    auto relay = [&](const Value& v, const Prob& p) {
        frame.rebind(v);
        q.record_yield(d->id, v, p, parent, slot);
        out(v, p);
    };
    gen_atoms_by_type(*d, q, make_sink(relay));
}

// Nodes whose bindings the skip-redundant-bindings option may elide: nodes
// with at most one incoming edge in the query DAG, and elementary nodes with
// a one-value domain (their bound atom equals their only atom).
inline std::unordered_set<NodeId> redundant_binding_nodes(const NodePtr& root) {
    std::unordered_map<NodeId, int> refs;
    refs[root->id] += 1;
    auto nodes = reachable_nodes(root);
    for (const auto& n : nodes)
        for (const auto& c : children_of(*n)) refs[c->id] += 1;
    std::unordered_set<NodeId> out;
    for (const auto& n : nodes) {
        const auto* elem = std::get_if<Elementary>(&n->kind);
        if ((elem && elem->dist.size() == 1) || refs[n->id] <= 1) out.insert(n->id);
    }
    return out;
}

inline Pmf run_query(const NodePtr& root, QueryCtx& q) {
    Condenser acc;
    auto sink = [&](const Value& v, const Prob& p) { acc.add(v, p); };
    gen_atoms(root, q, 0, -1, make_sink(sink));
    if (acc.empty())
        throw EmptyDistribution("query produced no atoms: the evidence is impossible");
    return std::move(acc).normalize();
}

} // namespace detail

// Enumerate d's atoms into `consume` under the caller's environment. The
// usual binding windows apply: d is bound to each value while `consume`
// (and anything it triggers) runs, and is unbound again when the stream
// ends. A pre-bound d yields exactly one atom (bound value, 1).
inline void enumerate_atoms(const NodePtr& d, BindingEnv& env,
                            const std::function<void(const Atom&)>& consume) {
    if (!d) throw std::invalid_argument("enumerate_atoms: null node");
    detail::QueryCtx q{env};
    auto sink = [&](const Value& v, const Prob& p) { consume(Atom{v, p}); };
    detail::gen_atoms(d, q, 0, -1, detail::make_sink(sink));
}

// Exact marginal distribution of root. Atoms are condensed in first-yield
// order and normalized; a query with no surviving atoms (impossible
// evidence) raises EmptyDistribution.
inline Pmf marg(const NodePtr& root, const EngineOptions& opts = {}) {
    if (!root) throw std::invalid_argument("marg: null root");
    BindingEnv env;
    std::unordered_set<NodeId> skip;
    detail::QueryCtx q{env};
    if (opts.skip_redundant_bindings) {
        skip = detail::redundant_binding_nodes(root);
        q.unbound_ok = &skip;
    }
    return detail::run_query(root, q);
}

// marg with instrumentation appended to `events`. Events already recorded
// stay in place when the query throws, which is what makes environment
// hygiene checkable on error paths too.
inline Pmf marg_traced_into(const NodePtr& root, std::vector<TraceEvent>& events,
                            const EngineOptions& opts = {}) {
    if (!root) throw std::invalid_argument("marg: null root");
    BindingEnv env;
    std::unordered_set<NodeId> skip;
    detail::QueryCtx q{env, &events};
    if (opts.skip_redundant_bindings) {
        skip = detail::redundant_binding_nodes(root);
        q.unbound_ok = &skip;
    }
    return detail::run_query(root, q);
}

struct TraceResult {
    Pmf pmf;
    std::vector<TraceEvent> events;
};

inline TraceResult marg_traced(const NodePtr& root, const EngineOptions& opts = {}) {
    std::vector<TraceEvent> events;
    Pmf pmf = marg_traced_into(root, events, opts);
    return TraceResult{std::move(pmf), std::move(events)};
}

// Observed evidence: each elementary node is pinned to one value of its
// domain before the query runs, so its enumeration is the single certain
// atom. Equivalent to conditioning on the conjunction of equalities, without
// paying for the equality nodes.
using Observations = std::vector<std::pair<NodePtr, Value>>;

inline Pmf marg_with_observations(const NodePtr& root, const Observations& obs,
                                  const EngineOptions& opts = {}) {
    if (!root) throw std::invalid_argument("marg: null root");
    BindingEnv env;
    for (const auto& [node, value] : obs) {
        if (!node) throw std::invalid_argument("marg_with_observations: null node");
        const auto* elem = std::get_if<Elementary>(&node->kind);
        if (!elem)
            throw std::invalid_argument(
                "marg_with_observations: observed node is not elementary");
        if (env.find(node->id))
            throw std::invalid_argument(
                "marg_with_observations: node observed twice");
        if (!elem->dist.contains(value))
            throw UnknownObservationValue("observed value " + to_text(value) +
                                          " is outside the node's domain");
        env.bind(node->id, value);
    }
    std::unordered_set<NodeId> skip;
    detail::QueryCtx q{env};
    if (opts.skip_redundant_bindings) {
        skip = detail::redundant_binding_nodes(root);
        q.unbound_ok = &skip;
    }
    return detail::run_query(root, q);
}

} // namespace statues
