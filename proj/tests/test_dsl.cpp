// Model language: lexing, parsing, precedence, printing, compiling, and
// the shipped example corpus.

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "statues/dsl.hpp"
#include "statues/oracle.hpp"
#include "statues/render.hpp"

#include "support/build.hpp"

using namespace statues;
using tst::ff;
using tst::num;
using tst::rat;
using tst::sym;
using tst::tt;
using tst::tup;

namespace {

Pmf run_one(const std::string& src) {
    auto model = dsl::compile_text(src);
    REQUIRE(model.queries.size() == 1);
    return marg(model.queries.front().node);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string models_dir() { return STATUES_MODELS_DIR; }

dsl::Diagnostic diag_of(const std::string& src) {
    try {
        dsl::compile_text(src);
    } catch (const dsl::DslError& e) {
        return e.diag();
    }
    FAIL("expected a diagnostic for: " << src);
    return {};
}

} // namespace

TEST_CASE("numbers, fractions and decimals are exact", "[dsl]") {
    CHECK(run_one("query 3") == condense({{num(3), rat(1)}}));
    CHECK(run_one("let x = {0.2: 1} query x") == condense({{num(1, 5), rat(1)}}));
    CHECK(run_one("let x = {1: 0.25, 2: 0.75} query x") ==
          condense({{num(1), rat(1, 4)}, {num(2), rat(3, 4)}}));
    CHECK(run_one("let x = {1: 1/3, 2: 2/3} query x") ==
          condense({{num(1), rat(1, 3)}, {num(2), rat(2, 3)}}));
    CHECK(run_one("let x = {-1: 1/2, 1: 1/2} query x * x") ==
          condense({{num(1), rat(1)}}));
    // 0.20 and 2/10 and 1/5 are one value.
    CHECK(run_one("let x = {0.20: 1/2, 2/10: 1/2} query x") ==
          condense({{num(1, 5), rat(1)}}));
}

TEST_CASE("weights renormalize and zero-weight entries drop", "[dsl]") {
    CHECK(run_one("let x = {1: 2, 2: 2} query x") ==
          condense({{num(1), rat(1, 2)}, {num(2), rat(1, 2)}}));
    CHECK(run_one("let x = {1: 0, 2: 3} query x") == condense({{num(2), rat(1)}}));
}

TEST_CASE("bern is shorthand for a boolean pmf", "[dsl]") {
    CHECK(run_one("query bern(0.25)") ==
          run_one("query {true: 1/4, false: 3/4}"));
    CHECK(run_one("query bern(1/4)") == run_one("query bern(0.25)"));
    CHECK(run_one("query bern(0)") == condense({{ff(), rat(1)}}));
    CHECK(run_one("query bern(1)") == condense({{tt(), rat(1)}}));
}

TEST_CASE("operator precedence matches arithmetic convention", "[dsl]") {
    CHECK(run_one("query 1 + 2 * 3") == condense({{num(7), rat(1)}}));
    CHECK(run_one("query (1 + 2) * 3") == condense({{num(9), rat(1)}}));
    CHECK(run_one("query 2 * 3 - 4 / 2") == condense({{num(4), rat(1)}}));
    CHECK(run_one("query -2 * 3") == condense({{num(-6), rat(1)}}));
    CHECK(run_one("query 1 - -1") == condense({{num(2), rat(1)}}));
    CHECK(run_one("query not true or true") == condense({{tt(), rat(1)}}));
    CHECK(run_one("query not (true or true)") == condense({{ff(), rat(1)}}));
    CHECK(run_one("query 1 + 1 == 2 and 2 < 3") == condense({{tt(), rat(1)}}));
    CHECK(run_one("query <10, 20, 30>[2]") == condense({{num(20), rat(1)}}));
    CHECK(run_one("query -<10, 20>[1]") == condense({{num(-10), rat(1)}}));
}

TEST_CASE("comparisons, membership and symbols", "[dsl]") {
    CHECK(run_one("query 2 in {1, 2, 3}") == condense({{tt(), rat(1)}}));
    CHECK(run_one("query 5 in {1, 2, 3}") == condense({{ff(), rat(1)}}));
    CHECK(run_one("query RED == RED") == condense({{tt(), rat(1)}}));
    CHECK(run_one("query \"RED\" == RED") == condense({{tt(), rat(1)}}));
    CHECK(run_one("query \"two words\" != RED") == condense({{tt(), rat(1)}}));
    CHECK(run_one("query <1, RED> == <1, RED>") == condense({{tt(), rat(1)}}));
    CHECK(run_one("query RED in {RED, BLUE}") == condense({{tt(), rat(1)}}));
}

TEST_CASE("builtin calls check arity and existence", "[dsl]") {
    CHECK(run_one("query max(3, min(9, 7))") == condense({{num(7), rat(1)}}));
    CHECK(run_one("query abs(-4)") == condense({{num(4), rat(1)}}));
    CHECK(run_one("query sqrt(9)") == condense({{num(3), rat(1)}}));
    CHECK(run_one("query pow(2, 10)") == condense({{num(1024), rat(1)}}));
    CHECK(diag_of("query foo(1)").message == "unknown function 'foo'");
    CHECK(diag_of("query abs(1, 2)").message == "'abs' takes 1 argument(s), got 2");
    CHECK(diag_of("let x = 1 query x(2)").message ==
          "'x' names a model variable, not a function");
}

TEST_CASE("identifiers share one node; literals are independent", "[dsl]") {
    // Shared: x + x doubles one draw, so odd sums never appear.
    CHECK(run_one("let x = {0: 1/2, 1: 1/2} query x + x") ==
          condense({{num(0), rat(1, 2)}, {num(2), rat(1, 2)}}));
    // Independent: two literals convolve.
    CHECK(run_one("query {0: 1/2, 1: 1/2} + {0: 1/2, 1: 1/2}") ==
          condense({{num(0), rat(1, 4)}, {num(1), rat(1, 2)}, {num(2), rat(1, 4)}}));
    // Aliases share too.
    CHECK(run_one("let x = {0: 1/2, 1: 1/2} let y = x query x - y") ==
          condense({{num(0), rat(1)}}));
}

TEST_CASE("each pmf literal compiles to exactly one fresh leaf", "[dsl]") {
    auto model = dsl::compile_text(
        "let a = {0: 1/2, 1: 1/2}\n"
        "let b = a + {0: 1/2, 1: 1/2}\n"
        "query b + a");
    REQUIRE(model.queries.size() == 1);
    std::size_t leaves = 0;
    for (const auto& n : reachable_nodes(model.queries.front().node))
        if (std::holds_alternative<Elementary>(n->kind)) ++leaves;
    CHECK(leaves == 2);  // one per literal; references add none
}

TEST_CASE("given forms: single, parenthesized, and condition lists", "[dsl]") {
    const char* base = "let d1 = {1: 1/2, 2: 1/2} let d2 = {1: 1/2, 2: 1/2} ";
    Pmf single = run_one(std::string(base) + "query d1 given (d1 + d2 == 3)");
    Pmf listed = run_one(std::string(base) + "query d1 given [d1 + d2 == 3]");
    Pmf conj = run_one(std::string(base) + "query d1 given [d1 + d2 == 3, d2 == 1]");
    CHECK(same_distribution(single, listed));
    CHECK(conj == condense({{num(2), rat(1)}}));

    // `given` binds loosest: target is the whole sum on its left.
    Pmf loose = run_one(std::string(base) + "query d1 + d2 given d2 == 1");
    CHECK(same_distribution(loose, condense({{num(2), rat(1, 2)}, {num(3), rat(1, 2)}})));
}

TEST_CASE("tables key on literal values and reject duplicates", "[dsl]") {
    CHECK(run_one("let c = {heads: 1/2, tails: 1/2}"
                  " query table(c) { heads: 1, tails: 0 }") ==
          condense({{num(1), rat(1, 2)}, {num(0), rat(1, 2)}}));
    CHECK(diag_of("let c = bern(0.5) query table(c) { true: 1, true: 2 }").message ==
          "duplicate table key true");
    // Keys are literals, not references: `one` here is the symbol, so the
    // selector value never matches the numeric branch key.
    auto m = dsl::compile_text("let one = 1 let c = {one: 1} query table(c) { 1: 9 }");
    CHECK_THROWS_AS(marg(m.queries.at(0).node), MissingTableEntry);
}

TEST_CASE("mix pools alternatives, including guarded ones", "[dsl]") {
    CHECK(run_one("query mix { 1, 2 }") ==
          condense({{num(1), rat(1, 2)}, {num(2), rat(1, 2)}}));
    // A guarded alternative renormalizes inside its branch first.
    Pmf g = run_one(
        "let x = {1: 1/2, 2: 1/2}"
        " query mix { x given (x == 1), x given (x == 2) }");
    CHECK(same_distribution(g, condense({{num(1), rat(1, 2)}, {num(2), rat(1, 2)}})));
}

TEST_CASE("diagnostics carry positions and name the problem", "[dsl]") {
    auto ubd = diag_of("let x = x + 1");
    CHECK(ubd.message == "use of 'x' before its definition");
    CHECK(ubd.line == 1);
    CHECK(ubd.col == 9);

    auto fwd = diag_of("query y\nlet y = 1");
    CHECK(fwd.message == "use of 'y' before its definition");
    CHECK(fwd.line == 1);

    auto dup = diag_of("let a = 1\nlet a = 2");
    CHECK(dup.message == "duplicate definition of 'a'");
    CHECK(dup.line == 2);
    CHECK(dup.col == 1);

    // Weights are unsigned fractions by grammar, so a minus never reaches
    // the compile-time negative-weight guard.
    CHECK(diag_of("let b = {true: -1/2}").message == "expected a weight, found '-'");
    CHECK(diag_of("let b = {true: 0, false: 0} query b").message ==
          "no mass to condense");

    CHECK_THROWS_AS(dsl::parse_model("let = 3"), dsl::DslError);
    CHECK_THROWS_AS(dsl::parse_model("query (1 + "), dsl::DslError);
    CHECK_THROWS_AS(dsl::parse_model("query {1: }"), dsl::DslError);
    CHECK_THROWS_AS(dsl::parse_model("query \"unterminated"), dsl::DslError);
    CHECK_THROWS_AS(dsl::parse_model("query bern(3/2)"), dsl::DslError);
    CHECK_THROWS_AS(dsl::parse_model("query x ? 3"), dsl::DslError);
    CHECK_THROWS_AS(dsl::parse_model("query x given y given z"), dsl::DslError);
}

TEST_CASE("unknown bare words become symbols only when never defined", "[dsl]") {
    // CONSERVATIVE is no definition, so it is a symbol constant.
    CHECK(run_one("let s = {CONSERVATIVE: 1} query s == CONSERVATIVE") ==
          condense({{tt(), rat(1)}}));
}

TEST_CASE("pretty-printed models reparse to the same tree", "[dsl]") {
    const char* sources[] = {
        "query 1 + 2 * 3",
        "query (1 + 2) * 3",
        "query -x[2] + <a, b>[1]",
        "query not a and b or c",
        "query a given [b == 1, c != 2]",
        "query (d1 > 3) given (d2 == d)",
        "query x in {2, 3, 12} or abs(d1 - d2) >= 5",
        "query mix { a given c, bern(0.5), {L: 1/2, R: 1/2} }",
        "query table(<x, y>) { <true, 1>: {L: 1/2, R: 1/2}, <false, 2>: \"odd one\" }",
        "let w = {sunny: 0.2, rainy: 0.8} query table(w) { sunny: 1, rainy: 0 }",
        "query a - b - c",
        "query a - (b - c)",
        "query a / b / c",
        "query (a given b) given c",
        "query \"quoted symbol\" == plain",
        "query <1, <2, 3>, true>",
        "query x == y in {true}",
    };
    for (const char* src : sources) {
        CAPTURE(src);
        dsl::Model m1 = dsl::parse_model(src);
        std::string printed = dsl::print_model(m1);
        CAPTURE(printed);
        dsl::Model m2 = dsl::parse_model(printed);
        REQUIRE(m1.statements.size() == m2.statements.size());
        for (std::size_t i = 0; i < m1.statements.size(); ++i) {
            CHECK(m1.statements[i].kind == m2.statements[i].kind);
            CHECK(m1.statements[i].name == m2.statements[i].name);
            CHECK(dsl::same_tree(*m1.statements[i].expr, *m2.statements[i].expr));
        }
        // Printing is a fixed point after one pass.
        CHECK(dsl::print_model(m2) == printed);
    }
}

TEST_CASE("every shipped model pretty-prints and reparses cleanly", "[dsl]") {
    const char* files[] = {"ex1.prob",  "ex2.prob",     "ex3.prob",    "coin.prob",
                           "dice.prob", "joint_mood.prob", "rsg.prob", "rsg_measure.prob",
                           "weather.prob", "jobs.prob",  "bad.prob"};
    for (const char* f : files) {
        CAPTURE(f);
        dsl::Model m1 = dsl::parse_model(read_file(models_dir() + "/" + f));
        std::string printed = dsl::print_model(m1);
        dsl::Model m2 = dsl::parse_model(printed);
        REQUIRE(m1.statements.size() == m2.statements.size());
        for (std::size_t i = 0; i < m1.statements.size(); ++i)
            CHECK(dsl::same_tree(*m1.statements[i].expr, *m2.statements[i].expr));
        // Compiles too, and queries agree with the exhaustive check.
        auto compiled = dsl::compile_model(m1);
        for (const auto& q : compiled.queries) {
            CAPTURE(q.source);
            std::optional<Pmf> engine, brute;
            try {
                engine = marg(q.node);
            } catch (const EmptyDistribution&) {}
            try {
                brute = oracle_marg(q.node);
            } catch (const EmptyDistribution&) {}
            CHECK(engine.has_value() == brute.has_value());
            if (engine && brute) CHECK(same_distribution(*engine, *brute));
        }
    }
}

TEST_CASE("corpus models reproduce their documented results", "[dsl]") {
    SECTION("sum of two binary variables") {
        auto m = dsl::compile_text(read_file(models_dir() + "/ex1.prob"));
        CHECK(marg(m.queries.at(0).node) ==
              condense({{num(0), rat(1, 4)}, {num(1), rat(7, 12)}, {num(2), rat(1, 6)}}));
    }
    SECTION("doubled variable") {
        auto m = dsl::compile_text(read_file(models_dir() + "/ex2.prob"));
        CHECK(marg(m.queries.at(0).node) ==
              condense({{num(0), rat(1, 3)}, {num(2), rat(2, 3)}}));
    }
    SECTION("conditioned variable") {
        auto m = dsl::compile_text(read_file(models_dir() + "/ex3.prob"));
        CHECK(marg(m.queries.at(0).node) ==
              condense({{num(0), rat(2, 5)}, {num(1), rat(3, 5)}}));
    }
    SECTION("matching biased coins") {
        auto m = dsl::compile_text(read_file(models_dir() + "/coin.prob"));
        CHECK(prob_of(marg(m.queries.at(0).node), tt()) == rat(5, 8));
    }
    SECTION("dice queries") {
        auto m = dsl::compile_text(read_file(models_dir() + "/dice.prob"));
        REQUIRE(m.queries.size() == 4);
        CHECK(marg(m.queries.at(0).node) ==
              condense({{num(6), rat(1, 2)}, {num(7), rat(1, 2)}}));
        CHECK(marg(m.queries.at(1).node) ==
              condense({{num(1), rat(2, 3)}, {num(2), rat(1, 3)}}));
        CHECK(marg(m.queries.at(2).node) ==
              condense({{tup({num(1), num(1), num(2)}), rat(1, 3)},
                        {tup({num(1), num(2), num(3)}), rat(1, 3)},
                        {tup({num(2), num(1), num(3)}), rat(1, 3)}}));
        CHECK(marg(m.queries.at(3).node) ==
              condense({{num(1), rat(1, 2)}, {num(2), rat(1, 6)}, {num(6), rat(1, 3)}}));
    }
    SECTION("joint weather and mood") {
        auto m = dsl::compile_text(read_file(models_dir() + "/joint_mood.prob"));
        REQUIRE(m.queries.size() == 4);
        CHECK(marg(m.queries.at(0).node) ==
              condense({{sym("rainy"), rat(3, 10)}, {sym("sunny"), rat(7, 10)}}));
        CHECK(marg(m.queries.at(1).node) ==
              condense({{sym("sad"), rat(1, 4)}, {sym("happy"), rat(3, 4)}}));
        // Dependence survives extraction: joint 0.65 != 0.7 * 0.75.
        CHECK(prob_of(marg(m.queries.at(2).node), tt()) == rat(13, 20));
    }
    SECTION("grass network with a sensor") {
        auto m = dsl::compile_text(read_file(models_dir() + "/rsg_measure.prob"));
        REQUIRE(m.queries.size() == 8);
        CHECK(prob_of(marg(m.queries.at(0).node), tt()) == rat(161, 500));
        CHECK(prob_of(marg(m.queries.at(1).node), tt()) == rat(99, 50000));
        CHECK(prob_of(marg(m.queries.at(2).node), tt()) == rat(8019, 10000));
        CHECK(prob_of(marg(m.queries.at(3).node), tt()) == rat(891, 2491));
        CHECK(prob_of(marg(m.queries.at(4).node), tt()) == rat(1));
        CHECK(marg(m.queries.at(5).node).entries().size() == 7);
        CHECK(prob_of(marg(m.queries.at(7).node), tt()) == rat(219200, 243067));
    }
    SECTION("weather chain") {
        auto m = dsl::compile_text(read_file(models_dir() + "/weather.prob"));
        CHECK(prob_of(marg(m.queries.at(0).node), sym("sunny")) == rat(33, 50));
        CHECK(prob_of(marg(m.queries.at(1).node), sym("sunny")) == rat(399, 500));
        CHECK(prob_of(marg(m.queries.at(2).node), sym("sunny")) == rat(4197, 5000));
    }
    SECTION("job scheduling") {
        auto m = dsl::compile_text(read_file(models_dir() + "/jobs.prob"));
        REQUIRE(m.queries.size() == 4);
        CHECK(marg(m.queries.at(0).node) ==
              condense({{num(5), rat(9, 200)}, {num(7), rat(53, 125)},
                        {num(8), rat(29, 250)}, {num(9), rat(1, 100)},
                        {num(6), rat(81, 200)}}));
        CHECK(same_distribution(marg(m.queries.at(1).node),
                                condense({{num(5), rat(1, 20)}, {num(6), rat(9, 20)},
                                          {num(7), rat(9, 20)}, {num(8), rat(1, 20)}})));
        CHECK(marg(m.queries.at(2).node) == condense({{sym("DISRUPTIVE"), rat(1)}}));
    }
    SECTION("impossible evidence") {
        auto m = dsl::compile_text(read_file(models_dir() + "/bad.prob"));
        CHECK_THROWS_AS(marg(m.queries.at(0).node), EmptyDistribution);
    }
}

TEST_CASE("compiling a query expression reuses the model's nodes", "[dsl]") {
    auto model = dsl::compile_text(read_file(models_dir() + "/rsg.prob"));
    CHECK(model.queries.empty());
    auto q = dsl::compile_query("rain given grass_wet", model);
    CHECK(prob_of(marg(q.node), tt()) == rat(891, 2491));
    CHECK(q.source == "rain given grass_wet");
    // Undefined words in a query are symbols, as in the file syntax.
    auto s = dsl::compile_query("rain == wet", model);
    CHECK(prob_of(marg(s.node), tt()) == rat(0));
}

TEST_CASE("rendering values, probabilities and distributions", "[dsl]") {
    CHECK(render_value(num(3)) == "3");
    CHECK(render_value(num(1, 3)) == "1/3");
    CHECK(render_value(tt()) == "true");
    CHECK(render_value(sym("RED")) == "RED");
    CHECK(render_value(tup({num(1), sym("a")})) == "<1, a>");
    CHECK(render_prob(rat(1, 4), ProbStyle::Fraction) == "1/4");
    CHECK(render_prob(rat(1, 4), ProbStyle::Decimal, 4) == "0.2500");
    CHECK(render_prob(rat(891, 2491), ProbStyle::Decimal, 17) == "0.35768767563227619");
    CHECK(render_prob(rat(219200, 243067), ProbStyle::Decimal, 16) == "0.9018089662521033");
    Pmf pmf = condense({{num(0), rat(1, 4)}, {num(1), rat(7, 12)}, {num(2), rat(1, 6)}});
    CHECK(render_pmf(pmf) == "{0: 1/4, 1: 7/12, 2: 1/6}");
    CHECK(render_pmf(pmf, ProbStyle::Decimal, 4) == "{0: 0.2500, 1: 0.5833, 2: 0.1667}");
}

TEST_CASE("trace rendering matches the documented step tables", "[dsl]") {
    auto model = dsl::compile_text(read_file(models_dir() + "/ex3.prob"));
    std::string text = render_trace(model.queries.at(0).node, model.names);
    // Row 4 abandons a false condition: the condition edge carries
    // (false, 1/6) while the target and root columns stay empty.
    CHECK(text.find("(false, 1/6) | -      | -") != std::string::npos);
    CHECK(text.find("result: {0: 2/5, 1: 3/5}") != std::string::npos);

    // The held outer atom repeats across inner steps.
    auto ex1 = dsl::compile_text(read_file(models_dir() + "/ex1.prob"));
    std::string t1 = render_trace(ex1.queries.at(0).node, ex1.names);
    CHECK(t1.find("#2 | 0  | 1  | (0, 1/3)") != std::string::npos);
}
