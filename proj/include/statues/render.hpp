#pragma once

// Text rendering for query results and enumeration traces.
//
// Values print in the same syntax the model language uses (booleans,
// fractions, bare symbols, <a, b> tuples), so CLI output can be pasted
// back into a model file. The trace renderer replays the engine's event
// stream into a step table: one row per root atom (or per skipped false
// condition), one column per generator edge, plus the currently bound
// value of every multi-valued leaf.

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "statues/engine.hpp"
#include "statues/pex.hpp"

namespace statues {

enum class ProbStyle { Fraction, Decimal };

inline std::string render_value(const Value& v) { return to_text(v); }

inline std::string render_prob(const Prob& p, ProbStyle style, unsigned digits = 17) {
    if (style == ProbStyle::Fraction) return format_fraction(p);
    return format_decimal(p, digits);
}

// "{0: 1/4, 1: 7/12, 2: 1/6}" in insertion order.
inline std::string render_pmf(const Pmf& pmf, ProbStyle style = ProbStyle::Fraction,
                              unsigned digits = 17) {
    std::string out = "{";
    bool first = true;
    for (const auto& [v, p] : pmf.entries()) {
        if (!first) out += ", ";
        first = false;
        out += render_value(v);
        out += ": ";
        out += render_prob(p, style, digits);
    }
    out += '}';
    return out;
}

namespace detail {

inline std::string fallback_label(const PexNode& n) {
    struct V {
        std::string operator()(const Elementary&) const { return "pmf"; }
        std::string operator()(const TupleNode&) const { return "tuple"; }
        std::string operator()(const Functional& f) const { return f.fn->name; }
        std::string operator()(const Conditional&) const { return "given"; }
        std::string operator()(const TableNode&) const { return "table"; }
        std::string operator()(const MultiConditional&) const { return "given"; }
        std::string operator()(const MultiFunctional&) const { return "apply"; }
        std::string operator()(const Mixture&) const { return "mix"; }
    };
    return std::visit(V{}, n.kind);
}

inline std::string node_label(NodeId id, const NameMap& names,
                              const std::map<NodeId, const PexNode*>& by_id) {
    if (auto it = names.find(id); it != names.end()) return it->second;
    if (auto it = by_id.find(id); it != by_id.end()) return fallback_label(*it->second);
    return "?";
}

inline bool is_singleton_leaf(const PexNode& n) {
    const auto* e = std::get_if<Elementary>(&n.kind);
    return e && e->dist.entries().size() <= 1;
}

} // namespace detail

// One rendered atom cell, or "-" when the edge carried nothing this step.
struct TraceTable {
    std::vector<std::string> headers;            // first header is blank (row labels)
    std::vector<std::vector<std::string>> rows;  // each row starts with "#k"
};

// Rebuild the paper-style step table from a trace. A step spans the work
// needed to surface one root atom or to abandon one false condition. Edge
// cells show the atom the child yielded to that parent during the step;
// an atom from an earlier step is repeated while its producer still holds
// it (leaf loops keep their value bound across inner iterations), and all
// other cells collapse to "-".
inline TraceTable build_trace_table(const std::vector<TraceEvent>& events, const NodePtr& root,
                                    const NameMap& names) {
    using Kind = TraceEvent::Kind;

    std::map<NodeId, const PexNode*> by_id;
    std::vector<NodeId> leaf_cols;  // multi-valued leaves, first-visit order
    for (const NodePtr& n : reachable_nodes(root)) {
        by_id[n->id] = n.get();
        if (const auto* e = std::get_if<Elementary>(&n->kind); e && e->dist.entries().size() > 1)
            leaf_cols.push_back(n->id);
    }

    // Edge columns keyed by (child, parent, slot), in first-yield order.
    // The root edge (parent 0) always renders last; edges out of constant
    // leaves carry a single unchanging atom and are dropped.
    struct EdgeKey {
        NodeId child;
        NodeId parent;
        int slot;
        bool operator<(const EdgeKey& o) const {
            return std::tie(child, parent, slot) < std::tie(o.child, o.parent, o.slot);
        }
    };
    std::vector<EdgeKey> edge_cols;
    bool has_root_col = false;
    for (const auto& ev : events) {
        if (ev.kind != Kind::Yield) continue;
        if (ev.parent == 0) {
            has_root_col = true;
            continue;
        }
        if (auto it = by_id.find(ev.node);
            it != by_id.end() && detail::is_singleton_leaf(*it->second))
            continue;
        EdgeKey key{ev.node, ev.parent, ev.slot};
        if (std::find_if(edge_cols.begin(), edge_cols.end(), [&](const EdgeKey& k) {
                return !(k < key) && !(key < k);
            }) == edge_cols.end())
            edge_cols.push_back(key);
    }

    // Row boundaries: root yields and skips.
    std::vector<std::size_t> bounds;
    for (std::size_t i = 0; i < events.size(); ++i) {
        if ((events[i].kind == Kind::Yield && events[i].parent == 0) ||
            events[i].kind == Kind::SkipFalseCondition)
            bounds.push_back(i);
    }

    TraceTable table;
    table.headers.push_back("");
    for (NodeId id : leaf_cols) table.headers.push_back(detail::node_label(id, names, by_id));
    for (const auto& e : edge_cols)
        table.headers.push_back(detail::node_label(e.child, names, by_id) + "->" +
                                detail::node_label(e.parent, names, by_id));
    if (has_root_col)
        table.headers.push_back(detail::node_label(root->id, names, by_id) + "->");

    auto atom_text = [](const TraceEvent& ev) {
        return "(" + render_value(*ev.value) + ", " + format_fraction(*ev.weight) + ")";
    };

    std::map<NodeId, Value> env;       // replayed binding state
    std::size_t cursor = 0;            // next event to replay
    struct Held {
        std::size_t at = 0;
        bool live = false;             // producer still holds this atom
        std::string text;
    };
    std::map<EdgeKey, Held> last_on_edge;

    std::size_t prev_bound = 0;        // one past the previous row's boundary
    for (std::size_t r = 0; r < bounds.size(); ++r) {
        std::size_t b = bounds[r];
        // Replay events up to and including the boundary.
        for (; cursor <= b; ++cursor) {
            const auto& ev = events[cursor];
            switch (ev.kind) {
            case Kind::Bind:
                env.insert_or_assign(ev.node, *ev.value);
                break;
            case Kind::Unbind: {
                env.erase(ev.node);
                // The producer's loop moved on; nothing it yielded is held.
                for (auto& [key, held] : last_on_edge)
                    if (key.child == ev.node) held.live = false;
                break;
            }
            case Kind::Yield: {
                if (ev.parent == 0) break;
                EdgeKey key{ev.node, ev.parent, ev.slot};
                bool bound_just_before =
                    cursor > 0 && events[cursor - 1].kind == Kind::Bind &&
                    events[cursor - 1].node == ev.node;
                last_on_edge[key] = Held{cursor, bound_just_before, atom_text(ev)};
                break;
            }
            case Kind::SkipFalseCondition:
                break;
            }
        }

        std::vector<std::string> row;
        row.push_back("#" + std::to_string(r + 1));
        for (NodeId id : leaf_cols) {
            auto it = env.find(id);
            row.push_back(it == env.end() ? "-" : render_value(it->second));
        }
        for (const auto& key : edge_cols) {
            auto it = last_on_edge.find(key);
            if (it == last_on_edge.end()) {
                row.push_back("-");
            } else if (it->second.at >= prev_bound) {
                row.push_back(it->second.text);  // yielded during this step
            } else if (it->second.live) {
                row.push_back(it->second.text);  // still held by its loop
            } else {
                row.push_back("-");
            }
        }
        if (has_root_col) {
            const auto& ev = events[b];
            bool is_root_yield = ev.kind == Kind::Yield && ev.parent == 0;
            row.push_back(is_root_yield ? atom_text(ev) : "-");
        }
        table.rows.push_back(std::move(row));
        prev_bound = b + 1;
    }
    return table;
}

// Fixed-width text form: padded columns joined by " | ", dashed rule
// under the header.
inline std::string render_trace_table(const TraceTable& table) {
    std::vector<std::size_t> width(table.headers.size(), 0);
    for (std::size_t c = 0; c < table.headers.size(); ++c)
        width[c] = table.headers[c].size();
    for (const auto& row : table.rows)
        for (std::size_t c = 0; c < row.size() && c < width.size(); ++c)
            width[c] = std::max(width[c], row[c].size());

    auto emit_row = [&](const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t c = 0; c < width.size(); ++c) {
            if (c) line += " | ";
            std::string cell = c < cells.size() ? cells[c] : "";
            cell.resize(width[c], ' ');
            line += cell;
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        line += '\n';
        return line;
    };

    std::string out = emit_row(table.headers);
    std::string rule;
    for (std::size_t c = 0; c < width.size(); ++c) {
        if (c) rule += "-+-";
        rule += std::string(width[c], '-');
    }
    out += rule + "\n";
    for (const auto& row : table.rows) out += emit_row(row);
    return out;
}

// Full trace report: run the query, render the step table and the final
// normalized distribution.
inline std::string render_trace(const NodePtr& root, const NameMap& names,
                                const EngineOptions& opts = {}) {
    TraceResult tr = marg_traced(root, opts);
    std::string out = render_trace_table(build_trace_table(tr.events, root, names));
    out += "\nresult: " + render_pmf(tr.pmf) + "\n";
    return out;
}

} // namespace statues
