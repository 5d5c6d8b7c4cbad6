#pragma once

#include "statues/builtins.hpp"
#include "statues/pex.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace statues {

// ---------------------------------------------------------------------------
// Possible-worlds reference evaluator.
//
// This is the slow, obviously-correct counterpart to marg(): materialize
// every combination of (a) one domain value per reachable elementary node
// and (b) one chosen alternative per reachable mixture node, evaluate the
// root once per world bottom-up, and tally mass per result value. There is
// no laziness, no pruning and no binding environment here on purpose; it
// shares only the value/function layer with the engine, so the two can
// cross-check each other.
// ---------------------------------------------------------------------------

struct OracleOptions {
    std::uint64_t world_cap = 10'000'000;
};

namespace detail {

struct WorldSpace {
    // Dimensions in first-visit order. Elementary dims choose a pmf entry
    // carrying its probability; mixture dims choose an alternative index
    // with weight 1 while the evaluation reaches the mixture, matching the
    // engine's rule that every alternative contributes its atoms at full
    // mass. A mixture a given world never evaluates collapses to a single
    // effective choice instead (see the weighting loop in oracle_marg).
    std::vector<const PexNode*> dims;
    std::unordered_map<NodeId, std::size_t> dim_of;
};

inline std::size_t world_dim_size(const PexNode& n) {
    if (const auto* e = std::get_if<Elementary>(&n.kind)) return e->dist.size();
    return std::get<Mixture>(n.kind).alternatives.size();
}

inline void collect_world_dims(const PexNode& n, WorldSpace& space,
                               std::unordered_map<NodeId, bool>& seen) {
    if (!seen.emplace(n.id, true).second) return;
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Elementary>) {
                space.dim_of.emplace(n.id, space.dims.size());
                space.dims.push_back(&n);
            } else if constexpr (std::is_same_v<K, TupleNode>) {
                for (const auto& c : k.items) collect_world_dims(*c, space, seen);
            } else if constexpr (std::is_same_v<K, Functional>) {
                collect_world_dims(*k.arg, space, seen);
            } else if constexpr (std::is_same_v<K, Conditional>) {
                collect_world_dims(*k.target, space, seen);
                collect_world_dims(*k.condition, space, seen);
            } else if constexpr (std::is_same_v<K, TableNode>) {
                collect_world_dims(*k.selector, space, seen);
                for (const auto& [key, node] : k.branches)
                    collect_world_dims(*node, space, seen);
            } else if constexpr (std::is_same_v<K, MultiConditional>) {
                collect_world_dims(*k.target, space, seen);
                for (const auto& c : k.conditions) collect_world_dims(*c, space, seen);
            } else if constexpr (std::is_same_v<K, MultiFunctional>) {
                collect_world_dims(*k.fn_node, space, seen);
                collect_world_dims(*k.arg, space, seen);
            } else {
                static_assert(std::is_same_v<K, Mixture>);
                space.dim_of.emplace(n.id, space.dims.size());
                space.dims.push_back(&n);
                for (const auto& a : k.alternatives) collect_world_dims(*a, space, seen);
            }
        },
        n.kind);
}

// Evaluates nodes in one fixed world. Each node is computed at most once
// per world; nullopt means the world is discarded by some false condition.
struct WorldEval {
    const WorldSpace& space;
    const std::vector<std::size_t>& choice;
    std::unordered_map<NodeId, std::optional<Value>> cache;

    std::optional<Value> eval(const PexNode& n) {
        if (auto it = cache.find(n.id); it != cache.end()) return it->second;
        std::optional<Value> out = compute(n);
        cache.emplace(n.id, out);
        return out;
    }

    std::optional<Value> compute(const PexNode& n) {
        return std::visit(
            [&](const auto& k) -> std::optional<Value> {
                using K = std::decay_t<decltype(k)>;

                if constexpr (std::is_same_v<K, Elementary>) {
                    return k.dist.entries()[choice[space.dim_of.at(n.id)]].first;

                } else if constexpr (std::is_same_v<K, TupleNode>) {
                    std::vector<Value> items;
                    items.reserve(k.items.size());
                    for (const auto& c : k.items) {
                        auto v = eval(*c);
                        if (!v) return std::nullopt;
                        items.push_back(std::move(*v));
                    }
                    return Value::tuple(std::move(items));

                } else if constexpr (std::is_same_v<K, Functional>) {
                    auto v = eval(*k.arg);
                    if (!v) return std::nullopt;
                    return apply_pure_fn(*k.fn, *v);

                } else if constexpr (std::is_same_v<K, Conditional>) {
                    auto cv = eval(*k.condition);
                    if (!cv) return std::nullopt;
                    if (!cv->is_bool())
                        throw NonBooleanCondition("condition produced " + to_text(*cv));
                    if (!cv->as_bool()) return std::nullopt;
                    return eval(*k.target);

                } else if constexpr (std::is_same_v<K, TableNode>) {
                    auto sv = eval(*k.selector);
                    if (!sv) return std::nullopt;
                    auto it = k.branches.find(*sv);
                    if (it == k.branches.end())
                        throw MissingTableEntry("no table branch for selector value " +
                                                to_text(*sv));
                    return eval(*it->second);

                } else if constexpr (std::is_same_v<K, MultiConditional>) {
                    for (const auto& c : k.conditions) {
                        auto cv = eval(*c);
                        if (!cv) return std::nullopt;
                        if (!cv->is_bool())
                            throw NonBooleanCondition("condition produced " + to_text(*cv));
                        if (!cv->as_bool()) return std::nullopt;
                    }
                    return eval(*k.target);

                } else if constexpr (std::is_same_v<K, MultiFunctional>) {
                    auto fv = eval(*k.fn_node);
                    if (!fv) return std::nullopt;
                    if (!fv->is_function())
                        throw NonFunctionValue("function position produced " + to_text(*fv));
                    const PureFn& f = *fv->as_function();
                    if (f.arity != k.arity)
                        throw NonFunctionValue("function " + f.name + " takes " +
                                               std::to_string(f.arity) +
                                               " arguments, node expects " +
                                               std::to_string(k.arity));
                    auto av = eval(*k.arg);
                    if (!av) return std::nullopt;
                    return apply_pure_fn(f, *av);

                } else {
                    static_assert(std::is_same_v<K, Mixture>);
                    return eval(*k.alternatives[choice[space.dim_of.at(n.id)]]);
                }
            },
            n.kind);
    }
};

} // namespace detail

// Exact marginal of root by full world enumeration. Agrees with marg() on
// every model, impossible-evidence EmptyDistribution cases included, and
// throws CapExceeded instead of attempting more worlds than the cap.
inline Pmf oracle_marg(const NodePtr& root, const OracleOptions& opts = {}) {
    if (!root) throw std::invalid_argument("oracle_marg: null root");

    detail::WorldSpace space;
    std::unordered_map<NodeId, bool> seen;
    detail::collect_world_dims(*root, space, seen);

    BigInt count = 1;
    for (const auto* dim : space.dims) {
        count *= detail::world_dim_size(*dim);
        if (count > opts.world_cap)
            throw CapExceeded("world enumeration needs more than " +
                              std::to_string(opts.world_cap) + " worlds");
    }

    Condenser acc;
    std::vector<std::size_t> choice(space.dims.size(), 0);
    while (true) {
        detail::WorldEval eval{space, choice, {}};
        if (auto v = eval.eval(*root)) {
            Prob weight(1);
            for (std::size_t i = 0; i < space.dims.size(); ++i) {
                if (const auto* e = std::get_if<Elementary>(&space.dims[i]->kind)) {
                    weight *= e->dist.entries()[choice[i]].second;
                } else if (eval.cache.find(space.dims[i]->id) == eval.cache.end()) {
                    // A mixture this world's evaluation never reached must not
                    // inflate the surviving branch: its index values collapse
                    // into one effective choice.
                    weight /= detail::world_dim_size(*space.dims[i]);
                }
            }
            acc.add(*v, weight);
        }

        // Mixed-radix increment, last dimension fastest.
        bool advanced = false;
        for (std::size_t i = space.dims.size(); i > 0 && !advanced;) {
            --i;
            if (++choice[i] < detail::world_dim_size(*space.dims[i]))
                advanced = true;
            else
                choice[i] = 0;
        }
        if (!advanced) break;
    }

    if (acc.empty())
        throw EmptyDistribution("query produced no atoms: the evidence is impossible");
    return std::move(acc).normalize();
}

// Probability the world enumeration assigns to a boolean event being true;
// exact 0 when no surviving world makes it true.
inline Prob oracle_joint_prob(const NodePtr& event, const OracleOptions& opts = {}) {
    Pmf pmf = oracle_marg(event, opts);
    for (const auto& [v, p] : pmf.entries())
        if (!v.is_bool())
            throw NonBooleanCondition("event produced non-boolean value " + to_text(v));
    return prob_of(pmf, Value::boolean(true));
}

} // namespace statues
