// Property suites over seeded random models: the recursive engine against
// the brute-force possible-worlds evaluator, algebraic identities that hold
// because shared nodes move together, and the equivalence of the three ways
// of stating conjunctive evidence.

#include "catch2/catch_amalgamated.hpp"

#include "support/build.hpp"
#include "support/random_models.hpp"

#include <array>
#include <optional>

using namespace statues;
using tst::GenNode;
using tst::ModelGen;

namespace {

std::optional<Pmf> engine_result(const NodePtr& root, const EngineOptions& opts = {}) {
    try {
        return marg(root, opts);
    } catch (const EmptyDistribution&) {
        return std::nullopt;
    }
}

std::optional<Pmf> oracle_result(const NodePtr& root) {
    try {
        return oracle_marg(root);
    } catch (const EmptyDistribution&) {
        return std::nullopt;
    }
}

} // namespace

TEST_CASE("random models: engine agrees with the possible-worlds evaluator",
          "[property]") {
    std::array<std::size_t, 8> kinds_seen{};
    std::size_t populated = 0;
    std::size_t empties = 0;

    for (std::uint32_t i = 0; i < 1000; ++i) {
        CAPTURE(i);
        ModelGen gen(0xA11CE000u + i);
        NodePtr root = gen.root();
        for (const auto& n : reachable_nodes(root)) kinds_seen[n->kind.index()]++;

        std::optional<Pmf> eng = engine_result(root);
        std::optional<Pmf> brute = oracle_result(root);
        REQUIRE(eng.has_value() == brute.has_value());

        EngineOptions lean;
        lean.skip_redundant_bindings = true;
        std::optional<Pmf> lean_eng = engine_result(root, lean);
        REQUIRE(lean_eng.has_value() == eng.has_value());

        if (eng) {
            REQUIRE(same_distribution(*eng, *brute));
            // The binding optimization must not even reorder entries.
            REQUIRE(*lean_eng == *eng);
            ++populated;
        } else {
            ++empties;
        }
    }

    // Every node kind has to show up somewhere in the corpus.
    for (std::size_t k = 0; k < kinds_seen.size(); ++k) {
        CAPTURE(k);
        CHECK(kinds_seen[k] > 0);
    }
    // Mostly real distributions, with impossible evidence still represented.
    CHECK(populated >= 500);
    CHECK(empties >= 20);
}

TEST_CASE("random models: shared-node identities hold as certainties", "[property]") {
    for (std::uint32_t i = 0; i < 100; ++i) {
        CAPTURE(i);
        ModelGen::Config cfg;
        cfg.allow_conditionals = false; // identities are about totals, not evidence
        ModelGen gen(0xBEEF0000u + i, cfg);
        NodePtr x = gen.pick_tagged(GenNode::Tag::Num).node;
        NodePtr y = gen.pick_tagged(GenNode::Tag::Num).node;

        // X - X is certainly zero.
        REQUIRE(tst::pmf_is(marg(func(builtins::sub(), {x, x})),
                            {{tst::num(0), tst::rat(1)}}));

        // X + X has exactly the distribution of 2 * X.
        REQUIRE(same_distribution(
            marg(func(builtins::add(), {x, x})),
            marg(func(builtins::mul(), {certain(tst::num(2)), x}))));

        // (X + Y) < (Y + X) is certainly false.
        NodePtr xy = func(builtins::add(), {x, y});
        NodePtr yx = func(builtins::add(), {y, x});
        REQUIRE(tst::pmf_is(marg(func(builtins::lt(), {xy, yx})),
                            {{tst::ff(), tst::rat(1)}}));

        // (X + Y)^2 - (X^2 + Y^2) - 2XY is certainly zero.
        NodePtr square = func(builtins::mul(), {xy, xy});
        NodePtr sum_sq = func(builtins::add(), {func(builtins::mul(), {x, x}),
                                                func(builtins::mul(), {y, y})});
        NodePtr cross = func(builtins::mul(),
                             {certain(tst::num(2)), func(builtins::mul(), {x, y})});
        NodePtr residue =
            func(builtins::sub(), {func(builtins::sub(), {square, sum_sq}), cross});
        REQUIRE(tst::pmf_is(marg(residue), {{tst::num(0), tst::rat(1)}}));
    }
}

TEST_CASE("random models: condition lists match one conjoined condition", "[property]") {
    std::size_t populated = 0;
    for (std::uint32_t i = 0; i < 100; ++i) {
        CAPTURE(i);
        ModelGen gen(0x5EED0000u + i);
        NodePtr target = gen.pick_any().node;
        int k = gen.pick_int(1, 3);
        std::vector<NodePtr> conds;
        for (int j = 0; j < k; ++j) conds.push_back(gen.fresh_condition());

        NodePtr folded = conds[0];
        for (int j = 1; j < k; ++j)
            folded = func(builtins::logical_and(), {folded, conds[j]});

        std::optional<Pmf> listed = engine_result(multi_given(target, conds));
        std::optional<Pmf> conjoined = engine_result(given(target, folded));
        REQUIRE(listed.has_value() == conjoined.has_value());
        if (listed) {
            REQUIRE(same_distribution(*listed, *conjoined));
            ++populated;
        }
    }
    CHECK(populated >= 25);
}

TEST_CASE("random models: observations match conditioning on equalities", "[property]") {
    std::size_t tested = 0;
    std::size_t populated = 0;
    for (std::uint32_t i = 0; i < 100; ++i) {
        CAPTURE(i);
        ModelGen gen(0x0B5E0000u + i);
        NodePtr root = gen.root();

        std::vector<NodePtr> candidates;
        for (const auto& e : reachable_elementaries(root))
            if (std::get<Elementary>(e->kind).dist.size() > 1) candidates.push_back(e);
        if (candidates.empty()) continue;
        ++tested;

        std::shuffle(candidates.begin(), candidates.end(), gen.rng());
        int k = std::min<int>(gen.pick_int(1, 2), static_cast<int>(candidates.size()));

        Observations obs;
        NodePtr folded;
        for (int j = 0; j < k; ++j) {
            const Pmf& dist = std::get<Elementary>(candidates[j]->kind).dist;
            Value v = dist.entries()[static_cast<std::size_t>(gen.pick_int(
                                         0, static_cast<int>(dist.size()) - 1))]
                          .first;
            obs.emplace_back(candidates[j], v);
            NodePtr equality = func(builtins::eq(), {candidates[j], certain(v)});
            folded = folded ? func(builtins::logical_and(), {folded, equality})
                            : equality;
        }

        std::optional<Pmf> observed;
        try {
            observed = marg_with_observations(root, obs);
        } catch (const EmptyDistribution&) {
        }
        std::optional<Pmf> conditioned = engine_result(given(root, folded));
        REQUIRE(observed.has_value() == conditioned.has_value());
        if (observed) {
            REQUIRE(same_distribution(*observed, *conditioned));
            ++populated;
        }
    }
    CHECK(tested >= 60);
    CHECK(populated >= 25);
}
