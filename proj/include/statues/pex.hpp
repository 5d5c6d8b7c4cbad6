#pragma once

#include "statues/pmf.hpp"

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

namespace statues {

// ---------------------------------------------------------------------------
// P-expression DAG.
//
// A random variable is an immutable node in a directed acyclic graph. Node
// identity (not structure) is what makes two uses of the same variable refer
// to the same random source: building the same pmf literal twice gives two
// independent variables, while reusing one handle twice makes both
// occurrences move together. Ids come from a process-wide counter, so a
// node's children always have strictly smaller ids than the node itself.
// ---------------------------------------------------------------------------

using NodeId = std::uint64_t;

struct PexNode;
using NodePtr = std::shared_ptr<const PexNode>;

// Leaf with an explicit distribution.
struct Elementary {
    Pmf dist;
};

// Ordered aggregation of n >= 1 variables into tuple values.
struct TupleNode {
    std::vector<NodePtr> items;
};

// Deterministic function of one argument node. Functions of several
// arguments are represented as a function over one tuple node; `fn->arity`
// tells evaluation whether the argument value is to be unpacked.
struct Functional {
    PureFnPtr fn;
    NodePtr arg;
};

// `target given condition`: relays the target's atoms only while the
// boolean condition holds.
struct Conditional {
    NodePtr target;
    NodePtr condition;
};

// Chooses a branch variable by the selector's value. Branch order never
// affects results; the ordered map just keeps iteration deterministic.
struct TableNode {
    NodePtr selector;
    std::map<Value, NodePtr> branches;
};

// `target given [c1, ..., cn]` without building an explicit conjunction:
// conditions nest in the given order and a false one prunes everything
// beneath it.
struct MultiConditional {
    NodePtr target;
    std::vector<NodePtr> conditions;
};

// Applies a *random* function: fn_node's values must be function values of
// the recorded arity. As with Functional, several arguments are packed into
// one tuple node.
struct MultiFunctional {
    NodePtr fn_node;
    NodePtr arg;
    int arity;
};

// Concatenates the alternatives' atom streams, weights untouched; the
// root-level normalization turns that into an even latent choice between
// the alternatives.
struct Mixture {
    std::vector<NodePtr> alternatives;
};

struct PexNode {
    NodeId id;
    std::variant<Elementary, TupleNode, Functional, Conditional, TableNode,
                 MultiConditional, MultiFunctional, Mixture>
        kind;
};

// Display names for nodes (from `let` bindings and the like). Purely
// cosmetic; never part of node identity.
using NameMap = std::map<NodeId, std::string>;

namespace detail {

inline NodeId next_node_id() {
    static std::atomic<NodeId> counter{0};
    return counter.fetch_add(1, std::memory_order_relaxed) + 1;
}

template <typename Kind>
NodePtr make_node(Kind kind) {
    return std::make_shared<const PexNode>(PexNode{next_node_id(), std::move(kind)});
}

inline void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

} // namespace detail

// -- constructors -----------------------------------------------------------

// Fresh elementary variable. The weighted entries go through condense, so
// duplicates merge, zeros drop and weights normalize; InvalidPmf propagates.
// Every call creates an independent variable even for identical literals.
inline NodePtr elementary(std::vector<Pmf::Entry> weighted) {
    return detail::make_node(Elementary{condense(std::move(weighted))});
}

// Degenerate variable that is always v.
inline NodePtr certain(Value v) {
    return detail::make_node(Elementary{condense({{std::move(v), Prob(1)}})});
}

inline NodePtr tuple_of(std::vector<NodePtr> items) {
    detail::require(!items.empty(), "tuple_of: needs at least one item");
    for (const auto& n : items) detail::require(n != nullptr, "tuple_of: null item");
    return detail::make_node(TupleNode{std::move(items)});
}

inline NodePtr func(PureFnPtr fn, std::vector<NodePtr> args) {
    detail::require(fn != nullptr, "func: null function");
    detail::require(static_cast<std::size_t>(fn->arity) == args.size(),
                    "func: argument count does not match function arity");
    for (const auto& n : args) detail::require(n != nullptr, "func: null argument");
    NodePtr arg = args.size() == 1 ? std::move(args[0]) : tuple_of(std::move(args));
    return detail::make_node(Functional{std::move(fn), std::move(arg)});
}

inline NodePtr given(NodePtr target, NodePtr condition) {
    detail::require(target != nullptr && condition != nullptr, "given: null operand");
    return detail::make_node(Conditional{std::move(target), std::move(condition)});
}

inline NodePtr table(NodePtr selector, std::vector<std::pair<Value, NodePtr>> branches) {
    detail::require(selector != nullptr, "table: null selector");
    detail::require(!branches.empty(), "table: needs at least one branch");
    std::map<Value, NodePtr> map;
    for (auto& [key, node] : branches) {
        detail::require(node != nullptr, "table: null branch");
        bool fresh = map.emplace(std::move(key), std::move(node)).second;
        detail::require(fresh, "table: duplicate branch key");
    }
    return detail::make_node(TableNode{std::move(selector), std::move(map)});
}

inline NodePtr multi_given(NodePtr target, std::vector<NodePtr> conditions) {
    detail::require(target != nullptr, "multi_given: null target");
    for (const auto& n : conditions)
        detail::require(n != nullptr, "multi_given: null condition");
    return detail::make_node(MultiConditional{std::move(target), std::move(conditions)});
}

inline NodePtr multi_func(NodePtr fn_node, std::vector<NodePtr> args) {
    detail::require(fn_node != nullptr, "multi_func: null function node");
    detail::require(!args.empty(), "multi_func: needs at least one argument");
    for (const auto& n : args) detail::require(n != nullptr, "multi_func: null argument");
    int arity = static_cast<int>(args.size());
    NodePtr arg = args.size() == 1 ? std::move(args[0]) : tuple_of(std::move(args));
    return detail::make_node(MultiFunctional{std::move(fn_node), std::move(arg), arity});
}

inline NodePtr mixture(std::vector<NodePtr> alternatives) {
    detail::require(!alternatives.empty(), "mixture: needs at least one alternative");
    for (const auto& n : alternatives)
        detail::require(n != nullptr, "mixture: null alternative");
    return detail::make_node(Mixture{std::move(alternatives)});
}

// -- structural helpers -----------------------------------------------------

// Children in structural order (the order used for traversals below).
inline std::vector<NodePtr> children_of(const PexNode& node) {
    std::vector<NodePtr> out;
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Elementary>) {
            } else if constexpr (std::is_same_v<K, TupleNode>) {
                out = k.items;
            } else if constexpr (std::is_same_v<K, Functional>) {
                out = {k.arg};
            } else if constexpr (std::is_same_v<K, Conditional>) {
                out = {k.target, k.condition};
            } else if constexpr (std::is_same_v<K, TableNode>) {
                out.push_back(k.selector);
                for (const auto& [key, node] : k.branches) out.push_back(node);
            } else if constexpr (std::is_same_v<K, MultiConditional>) {
                out.push_back(k.target);
                for (const auto& c : k.conditions) out.push_back(c);
            } else if constexpr (std::is_same_v<K, MultiFunctional>) {
                out = {k.fn_node, k.arg};
            } else {
                out = k.alternatives;
            }
        },
        node.kind);
    return out;
}

inline std::vector<NodePtr> children_of(const NodePtr& node) {
    detail::require(node != nullptr, "children_of: null node");
    return children_of(*node);
}

// Diagnostic nesting depth: 0 for elementary nodes, otherwise 1 + the
// deepest child. Memoized per call, so shared subgraphs cost once.
inline int level(const NodePtr& root) {
    detail::require(root != nullptr, "level: null node");
    std::unordered_map<NodeId, int> memo;
    auto rec = [&](auto&& self, const NodePtr& n) -> int {
        if (auto it = memo.find(n->id); it != memo.end()) return it->second;
        int out = 0;
        if (!std::holds_alternative<Elementary>(n->kind)) {
            for (const auto& c : children_of(*n)) {
                int d = self(self, c);
                if (d + 1 > out) out = d + 1;
            }
        }
        memo.emplace(n->id, out);
        return out;
    };
    return rec(rec, root);
}

// Every node reachable from root (root included), first-visit preorder over
// the structural child order, deduplicated by id.
inline std::vector<NodePtr> reachable_nodes(const NodePtr& root) {
    detail::require(root != nullptr, "reachable_nodes: null node");
    std::vector<NodePtr> out;
    std::unordered_set<NodeId> seen;
    auto rec = [&](auto&& self, const NodePtr& n) -> void {
        if (!seen.insert(n->id).second) return;
        out.push_back(n);
        for (const auto& c : children_of(*n)) self(self, c);
    };
    rec(rec, root);
    return out;
}

// The elementary leaves reachable from root, in first-visit order. This is
// what defines the possible-worlds enumeration of the oracle, so it includes
// every leaf, certainties too.
inline std::vector<NodePtr> reachable_elementaries(const NodePtr& root) {
    std::vector<NodePtr> out;
    for (const auto& n : reachable_nodes(root))
        if (std::holds_alternative<Elementary>(n->kind)) out.push_back(n);
    return out;
}

} // namespace statues
