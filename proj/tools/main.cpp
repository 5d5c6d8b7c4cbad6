// Command-line front end: run queries from a model file, check a model
// without running it, or trace one query's enumeration step by step.
//
// Exit codes: 0 success, 1 evaluation error (for example impossible
// evidence), 2 parse or compile diagnostics, 3 oracle cross-check mismatch.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "statues/dsl.hpp"
#include "statues/oracle.hpp"
#include "statues/render.hpp"

namespace {

using namespace statues;

struct CliConfig {
    std::string path;
    std::string query_text;  // replaces the file's queries when set
    std::string format = "fraction";
    unsigned digits = 17;
    bool oracle = false;
    bool skip_binding = false;
};

int exit_worst(int a, int b) { return std::max(a, b); }

std::optional<std::string> read_source(const std::string& path, std::string& err) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        err = "cannot read '" + path + "'";
        return std::nullopt;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void print_diag(const std::string& path, const dsl::Diagnostic& d) {
    std::cerr << path << ":" << dsl::format_diag(d) << "\n";
}

// Compile the model plus the optional replacement query.
// Returns false (exit 2) on any diagnostic.
bool compile_input(const CliConfig& cfg, dsl::CompiledModel& model,
                   std::vector<dsl::CompiledQuery>& queries) {
    std::string err;
    auto src = read_source(cfg.path, err);
    if (!src) {
        std::cerr << err << "\n";
        return false;
    }
    try {
        model = dsl::compile_text(*src);
    } catch (const dsl::DslError& e) {
        print_diag(cfg.path, e.diag());
        return false;
    }
    if (!cfg.query_text.empty()) {
        try {
            queries.push_back(dsl::compile_query(cfg.query_text, model));
        } catch (const dsl::DslError& e) {
            print_diag("<query>", e.diag());
            return false;
        }
    } else {
        queries = model.queries;
    }
    return true;
}

// A boolean-valued distribution prints as the probability of true; other
// supports print as the whole pmf. Matches what a reader expects from
// "what are the odds that ...?" queries.
bool boolean_support(const Pmf& pmf) {
    for (const auto& [v, p] : pmf.entries())
        if (!v.is_bool()) return false;
    return !pmf.entries().empty();
}

std::string render_result(const Pmf& pmf, const CliConfig& cfg) {
    ProbStyle style = cfg.format == "float" ? ProbStyle::Decimal : ProbStyle::Fraction;
    if (boolean_support(pmf))
        return render_prob(prob_of(pmf, Value::boolean(true)), style, cfg.digits);
    return render_pmf(pmf, style, cfg.digits);
}

int cmd_run(const CliConfig& cfg) {
    dsl::CompiledModel model;
    std::vector<dsl::CompiledQuery> queries;
    if (!compile_input(cfg, model, queries)) return 2;

    EngineOptions opts;
    opts.skip_redundant_bindings = cfg.skip_binding;

    int status = 0;
    nlohmann::ordered_json doc;
    doc["queries"] = nlohmann::ordered_json::array();

    for (const auto& q : queries) {
        std::optional<Pmf> pmf;
        try {
            pmf = marg(q.node, opts);
        } catch (const EmptyDistribution&) {
            std::cerr << "error: empty distribution (impossible condition) in query '"
                      << q.source << "'\n";
            status = exit_worst(status, 1);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << " in query '" << q.source << "'\n";
            status = exit_worst(status, 1);
        }

        if (cfg.oracle) {
            std::optional<Pmf> brute;
            try {
                brute = oracle_marg(q.node);
            } catch (const EmptyDistribution&) {
            } catch (const std::exception& e) {
                std::cerr << "oracle error: " << e.what() << " in query '" << q.source
                          << "'\n";
                status = exit_worst(status, 3);
            }
            bool both_empty = !pmf && !brute;
            bool agree = both_empty ||
                         (pmf && brute && same_distribution(*pmf, *brute));
            if (!agree) {
                std::cerr << "oracle mismatch in query '" << q.source << "'\n";
                status = exit_worst(status, 3);
            }
        }

        if (!pmf) continue;
        if (cfg.format == "json") {
            nlohmann::ordered_json entry;
            entry["source"] = q.source;
            entry["pmf"] = nlohmann::ordered_json::array();
            for (const auto& [v, p] : pmf->entries()) {
                nlohmann::ordered_json cell;
                cell["value"] = render_value(v);
                cell["prob_fraction"] = format_fraction(p);
                cell["prob_float"] = to_double(p);
                entry["pmf"].push_back(std::move(cell));
            }
            doc["queries"].push_back(std::move(entry));
        } else {
            std::cout << render_result(*pmf, cfg) << "\n";
        }
    }

    if (cfg.format == "json") std::cout << doc.dump(2) << "\n";
    return status;
}

int cmd_check(const CliConfig& cfg) {
    dsl::CompiledModel model;
    std::vector<dsl::CompiledQuery> queries;
    if (!compile_input(cfg, model, queries)) return 2;
    std::cout << model.definitions.size() << " definitions, " << model.queries.size()
              << " queries\n";
    return 0;
}

int cmd_trace(const CliConfig& cfg) {
    dsl::CompiledModel model;
    std::vector<dsl::CompiledQuery> queries;
    if (!compile_input(cfg, model, queries)) return 2;
    if (queries.size() != 1) {
        std::cerr << "trace needs exactly one query, found " << queries.size()
                  << " (use --query to pick one)\n";
        return 2;
    }
    EngineOptions opts;
    opts.skip_redundant_bindings = cfg.skip_binding;
    try {
        std::cout << render_trace(queries.front().node, model.names, opts);
    } catch (const EmptyDistribution&) {
        std::cerr << "error: empty distribution (impossible condition) in query '"
                  << queries.front().source << "'\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << " in query '" << queries.front().source
                  << "'\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact inference over discrete probabilistic models"};
    app.require_subcommand(1);

    CliConfig cfg;
    auto add_common = [&](CLI::App* sub, bool with_formats) {
        sub->add_option("model", cfg.path, "model file, or - for stdin")->required();
        sub->add_option("--query", cfg.query_text,
                        "expression to evaluate instead of the file's queries");
        sub->add_flag("--skip-binding", cfg.skip_binding,
                      "skip provably redundant environment bindings");
        if (with_formats) {
            sub->add_option("--format", cfg.format, "fraction, float, or json")
                ->check(CLI::IsMember({"fraction", "float", "json"}))
                ->capture_default_str();
            sub->add_option("--digits", cfg.digits, "decimal digits for float output")
                ->check(CLI::Range(1u, 1000000u))
                ->capture_default_str();
            sub->add_flag("--oracle", cfg.oracle,
                          "cross-check each result against exhaustive enumeration");
        }
    };

    CLI::App* run = app.add_subcommand("run", "evaluate the model's queries");
    add_common(run, true);
    CLI::App* check = app.add_subcommand("check", "parse and compile only");
    add_common(check, false);
    CLI::App* trace = app.add_subcommand("trace", "step table for one query");
    add_common(trace, false);

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(cfg);
    if (check->parsed()) return cmd_check(cfg);
    return cmd_trace(cfg);
}
