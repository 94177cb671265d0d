// Command-line driver for the studies and the correctness suite.
//
//   dap_cli error-study --mode double,decimal:100 --sizes 4,8,16 --trials 10
//   dap_cli tlr-study --algorithm cholesky --density 0.3
//   dap_cli golden
//   dap_cli trace --nodes 4 --sizes 16
//
// Every flag can also come from DAP_<FLAG> (DAP_TRIALS, DAP_LEAF_SIZE, ...).

#include "dap/errors.hpp"
#include "dap/experiments.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <sstream>

using namespace dap;

namespace {

struct Common {
    std::vector<std::string> modes{"double"};
    int digits = 100;
    std::vector<std::size_t> sizes;
    int trials = 100;
    std::uint64_t seed = 1;
    std::size_t nodes = 1;
    std::size_t leaf = 0;
    double density = 1.0;
    std::string latency = "constant";
    std::string out = "-";
    std::string format = "table";
    std::string algorithm = "cholesky";
    int steps = 2;
    bool digit_search = false;
};

ScalarMode mode_from(const std::string& text, int digits)
{
    if (text == "decimal")
        return ScalarMode::fixed_decimal(digits);
    return ScalarMode::parse(text);
}

void add_out(CLI::App* app, Common& c)
{
    app->add_option("--out", c.out, "output file, - for stdout")->envname("DAP_OUT");
    app->add_option("--format", c.format, "table or json")->envname("DAP_FORMAT");
}

void add_sim(CLI::App* app, Common& c)
{
    app->add_option("--nodes", c.nodes, "simulated nodes (first point of a series)")->envname("DAP_NODES");
    app->add_option("--leaf-size", c.leaf, "leaf block size")->envname("DAP_LEAF_SIZE");
    app->add_option("--seed", c.seed, "seed")->envname("DAP_SEED");
    app->add_option("--density", c.density, "nonzero fraction of the inputs")->envname("DAP_DENSITY");
    app->add_option("--latency-model", c.latency, "zero, constant or random")->envname("DAP_LATENCY_MODEL");
    app->add_option("--algorithm", c.algorithm, "cholesky, multiply or inverse")->envname("DAP_ALGORITHM");
    app->add_option("--mode", c.modes, "double, decimal[:digits] or rational")->delimiter(',')->envname("DAP_MODE");
    app->add_option("--digits", c.digits, "digits for a bare decimal mode")->envname("DAP_DIGITS");
}

int error_study(const Common& c)
{
    std::vector<std::size_t> sizes = c.sizes.empty() ? std::vector<std::size_t>{4, 8, 16, 32, 64} : c.sizes;
    std::size_t leaf = c.leaf ? c.leaf : 8;
    if (c.digit_search) {
        std::ostringstream text;
        for (std::size_t n : sizes)
            text << "size " << n << ": " << exp::min_digits_for(n, c.trials, c.seed, 10, 2000, leaf)
                 << " digits keep every error below 1\n";
        exp::write_output(c.out, text.str());
        return 0;
    }
    std::vector<exp::ErrorStudyReport> reports;
    for (const auto& m : c.modes)
        reports.push_back(exp::run_error_study(mode_from(m, c.digits), sizes, c.trials, c.seed, leaf));
    exp::emit_report(reports, exp::parse_report_format(c.format), c.out);
    return 0;
}

int tlr_study(const Common& c)
{
    exp::TlrOptions o;
    o.algorithm = exp::parse_tlr_algorithm(c.algorithm);
    o.base_size = c.sizes.empty() ? 64 : c.sizes.front();
    o.base_cores = c.nodes;
    o.steps = c.steps;
    o.density = c.density;
    o.mode = mode_from(c.modes.front(), c.digits);
    o.leaf_size = c.leaf ? c.leaf : 16;
    o.seed = c.seed;
    o.latency.kind = net::parse_latency_kind(c.latency);
    o.latency.seed = c.seed;
    exp::TlrReport r = exp::run_tlr_study(o);
    exp::emit_report(r, exp::parse_report_format(c.format), c.out);
    bool ok = true;
    for (double t : r.tlr)
        ok = ok && t > 1 && t < 2;
    if (!ok)
        std::cerr << "tlr outside (1, 2)\n";
    return ok ? 0 : 1;
}

int golden(const Common& c)
{
    exp::GoldenReport r = exp::run_golden_suite();
    exp::emit_report(r, exp::parse_report_format(c.format), c.out);
    return r.ok() ? 0 : 1;
}

int trace(const Common& c)
{
    std::size_t n = c.sizes.empty() ? 16 : c.sizes.front();
    ScalarMode mode = mode_from(c.modes.front(), c.digits);
    rt::RuntimeOptions o;
    o.nodes = c.nodes;
    o.leaf_size = c.leaf ? c.leaf : 4;
    o.seed = c.seed;
    o.latency.kind = net::parse_latency_kind(c.latency);
    o.latency.seed = c.seed;
    o.trace = true;
    o.audit = true;
    rt::JobResult r = rt::submit(exp::tlr_job(exp::parse_tlr_algorithm(c.algorithm), n, c.density, mode, c.seed), o);
    std::ostringstream text;
    text << "# time\tnode\tevent\tPAD\tlevel\tdetail\n";
    for (const auto& line : r.trace)
        text << line << "\n";
    text << "# finished at " << r.stats.sim_time << " simulated-us, " << r.stats.net.sent << " messages, audit "
         << (r.audit.ok() ? "clean" : "violated") << "\n";
    exp::write_output(c.out, text.str());
    return r.audit.ok() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"distributed block-recursive matrix studies"};
    app.require_subcommand(1);
    Common c;

    auto* es = app.add_subcommand("error-study", "error accumulation of the Cholesky factorization");
    es->add_option("--mode", c.modes, "double, decimal[:digits] or rational; comma separated")
        ->delimiter(',')
        ->envname("DAP_MODE");
    es->add_option("--digits", c.digits, "digits for a bare decimal mode")->envname("DAP_DIGITS");
    es->add_option("--sizes", c.sizes, "matrix sizes")->delimiter(',')->envname("DAP_SIZES");
    es->add_option("--trials", c.trials, "trials per size")->envname("DAP_TRIALS");
    es->add_option("--seed", c.seed, "seed")->envname("DAP_SEED");
    es->add_option("--leaf-size", c.leaf, "leaf block size")->envname("DAP_LEAF_SIZE");
    es->add_flag("--digit-search", c.digit_search, "find the digits that keep every error below 1");
    add_out(es, c);

    auto* ts = app.add_subcommand("tlr-study", "transmission loss ratio on the simulated cluster");
    add_sim(ts, c);
    ts->add_option("--sizes", c.sizes, "base matrix size")->delimiter(',')->envname("DAP_SIZES");
    ts->add_option("--steps", c.steps, "size doublings; nodes grow 8x per doubling")->envname("DAP_STEPS");
    add_out(ts, c);

    auto* gs = app.add_subcommand("golden", "correctness suite");
    add_out(gs, c);

    auto* tr = app.add_subcommand("trace", "run one job and print the event trace");
    add_sim(tr, c);
    tr->add_option("--sizes", c.sizes, "matrix size")->delimiter(',')->envname("DAP_SIZES");
    add_out(tr, c);

    CLI11_PARSE(app, argc, argv);
    try {
        if (es->parsed())
            return error_study(c);
        if (ts->parsed())
            return tlr_study(c);
        if (gs->parsed())
            return golden(c);
        return trace(c);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
