#pragma once

#include "statues/errors.hpp"
#include "statues/value.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace statues {

class Pmf;

// Streaming accumulator behind condense() and the marginalization loops.
// Keeps first-occurrence order of values, merges duplicate values, rejects
// negative weights and finally normalizes. Zero-weight entries are dropped.
class Condenser {
public:
    void add(const Value& v, const Prob& p) {
        if (p < 0) throw InvalidPmf("negative weight for value " + to_text(v));
        if (p == 0) return;
        auto [it, inserted] = index_.try_emplace(v, entries_.size());
        if (inserted)
            entries_.emplace_back(v, p);
        else
            entries_[it->second].second += p;
        total_ += p;
    }

    bool empty() const { return entries_.empty(); }
    const Prob& total() const { return total_; }

    // Defined after Pmf.
    Pmf normalize() &&;

private:
    std::vector<std::pair<Value, Prob>> entries_;
    std::map<Value, std::size_t> index_;
    Prob total_ = 0;
};

// A probability mass function over finitely many distinct values. Entries
// are kept in insertion order (the order the mass was first produced in),
// every weight is strictly positive and the weights sum to exactly 1.
//
// Equality is order-sensitive, matching the deterministic enumeration
// contract; use same_distribution() to compare supports regardless of order.
class Pmf {
public:
    using Entry = std::pair<Value, Prob>;

    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    bool contains(const Value& v) const {
        for (const auto& [val, p] : entries_)
            if (val == v) return true;
        return false;
    }

    bool operator==(const Pmf& o) const { return entries_ == o.entries_; }
    bool operator!=(const Pmf& o) const { return !(*this == o); }

private:
    friend class Condenser;
    friend Pmf condense(std::vector<Entry> weighted);
    explicit Pmf(std::vector<Entry> entries) : entries_(std::move(entries)) {}

    std::vector<Entry> entries_;
};

inline Pmf Condenser::normalize() && {
    if (entries_.empty()) throw InvalidPmf("no mass to condense");
    if (total_ != 1)
        for (auto& [v, p] : entries_) p /= total_;
    std::vector<Pmf::Entry> out;
    out.swap(entries_);
    return Pmf(std::move(out));
}

// Merge a weighted value sequence into a normalized pmf. First-occurrence
// order is preserved; duplicate values merge; zero weights drop out; a
// negative weight or an empty result raises InvalidPmf.
inline Pmf condense(std::vector<Pmf::Entry> weighted) {
    Condenser c;
    for (auto& [v, p] : weighted) c.add(v, p);
    return std::move(c).normalize();
}

// Probability of v under the pmf; exact 0 for values outside the support.
inline Prob prob_of(const Pmf& pmf, const Value& v) {
    for (const auto& [val, p] : pmf.entries())
        if (val == v) return p;
    return Prob(0);
}

// Support-and-weights equality ignoring entry order.
inline bool same_distribution(const Pmf& a, const Pmf& b) {
    if (a.size() != b.size()) return false;
    for (const auto& [v, p] : a.entries())
        if (prob_of(b, v) != p) return false;
    return true;
}

} // namespace statues
