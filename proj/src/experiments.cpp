#include "dap/experiments.hpp"

#include "dap/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace dap::exp {

using json = nlohmann::json;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b)
{
    return net::mix64(seed ^ net::mix64(a ^ net::mix64(b + 0x5bd1e995)));
}

bool breakdown(Errc c)
{
    return c == Errc::NotPositiveDefinite || c == Errc::NegativeOperand || c == Errc::ZeroDiagonal ||
        c == Errc::DivisionByZero || c == Errc::RationalNotPerfectSquare;
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// JSON has no infinities
json num(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v < 0 ? "-inf" : "inf";
    return v;
}

double num(const json& j)
{
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (s == "nan")
            return std::numeric_limits<double>::quiet_NaN();
        if (s == "-inf")
            return kNegInf;
        if (s == "inf")
            return -kNegInf;
        fail(Errc::ParseError, "bad number '" + s + "'");
    }
    return j.get<double>();
}

template <class F>
auto parse_json(std::string_view text, F&& body)
{
    try {
        return body(json::parse(text));
    } catch (const json::exception& e) {
        fail(Errc::ParseError, std::string("report: ") + e.what());
    }
}

std::string pad(const std::string& s, std::size_t w)
{
    return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' ');
}

// no trailing blanks, so reports diff cleanly
std::string trim_lines(const std::string& text)
{
    std::string out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        line.erase(line.find_last_not_of(' ') + 1);
        out += line + "\n";
    }
    return out;
}

void require_pow2(std::size_t n, const char* what)
{
    if (!is_power_of_two(n))
        fail(Errc::NotPowerOfTwo, std::string(what) + " " + std::to_string(n) + " is not a power of two");
}

} // namespace

// ---------------------------------------------------------------------------
// error accumulation

BlockMatrix error_study_factor(std::uint64_t seed, std::size_t n, int trial, const ScalarMode& mode)
{
    return random_lower_triangular(derive(seed, n, static_cast<std::uint64_t>(trial)), n, mode, 1, 9);
}

double trial_log10_error(std::uint64_t seed, std::size_t n, int trial, const ScalarMode& mode, std::size_t leaf_size)
{
    BlockMatrix l = error_study_factor(seed, n, trial, mode);
    BlockMatrix a = naive_multiply(l, transpose(l));
    BlockMatrix s = sub(cholesky(a, LeafConfig{leaf_size}).L, l);
    double worst = kNegInf;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            Scalar e = s.at(i, j);
            if (mode.kind() == ScalarKind::Double && !std::isfinite(e.to_double()))
                return std::numeric_limits<double>::quiet_NaN();
            if (!e.is_zero())
                worst = std::max(worst, e.log10_abs());
        }
    return worst;
}

ErrorStudyReport run_error_study(
    const ScalarMode& mode, const std::vector<std::size_t>& sizes, int trials, std::uint64_t seed, std::size_t leaf_size)
{
    if (trials < 1)
        fail(Errc::InvalidArgument, "trials must be positive");
    validate_leaf(LeafConfig{leaf_size});
    ErrorStudyReport rep{mode, trials, seed, leaf_size, {}};
    for (std::size_t n : sizes) {
        require_pow2(n, "size");
        std::vector<double> logs;
        ErrorStudyRow row;
        row.size = n;
        for (int t = 0; t < trials; ++t) {
            double e;
            try {
                e = trial_log10_error(seed, n, t, mode, leaf_size);
            } catch (const Error& err) {
                if (!breakdown(err.code()))
                    throw;
                ++row.failed;
                continue;
            }
            if (std::isnan(e)) {
                ++row.failed;
                continue;
            }
            logs.push_back(e);
        }
        row.trials = static_cast<int>(logs.size());
        if (logs.empty()) {
            row.log10_mean = row.log10_max = std::numeric_limits<double>::quiet_NaN();
        } else {
            double top = *std::max_element(logs.begin(), logs.end());
            row.log10_max = top;
            if (std::isinf(top)) {
                row.log10_mean = kNegInf;
            } else {
                // mean in log space; decimal errors underflow a double
                double sum = 0;
                for (double e : logs)
                    sum += std::pow(10.0, e - top);
                row.log10_mean = top + std::log10(sum / static_cast<double>(logs.size()));
            }
        }
        rep.rows.push_back(row);
    }
    return rep;
}

int min_digits_for(std::size_t size, int trials, std::uint64_t seed, int step, int max_digits, std::size_t leaf_size)
{
    if (step < 1 || max_digits < step)
        fail(Errc::InvalidArgument, "bad digit grid");
    auto ok = [&](int digits) {
        ErrorStudyReport r = run_error_study(ScalarMode::fixed_decimal(digits), {size}, trials, seed, leaf_size);
        const ErrorStudyRow& row = r.rows.front();
        return row.failed == 0 && row.log10_max < 0;
    };
    int bad = 0;
    int good = step;
    while (!ok(good)) {
        bad = good;
        good *= 2;
        if (good > max_digits) {
            good = max_digits / step * step;
            if (good <= bad || !ok(good))
                return 0;
            break;
        }
    }
    // grid points: bad < d <= good
    while (good - bad > step) {
        int mid = (bad / step + good / step) / 2 * step;
        if (mid <= bad)
            mid = bad + step;
        if (ok(mid))
            good = mid;
        else
            bad = mid;
    }
    return good;
}

// ---------------------------------------------------------------------------
// transmission loss ratio

const char* to_string(TlrAlgorithm a)
{
    switch (a) {
    case TlrAlgorithm::Cholesky:
        return "cholesky";
    case TlrAlgorithm::Multiply:
        return "multiply";
    case TlrAlgorithm::Inverse:
        return "inverse";
    }
    return "?";
}

TlrAlgorithm parse_tlr_algorithm(std::string_view text)
{
    for (auto a : {TlrAlgorithm::Cholesky, TlrAlgorithm::Multiply, TlrAlgorithm::Inverse})
        if (text == to_string(a))
            return a;
    fail(Errc::InvalidArgument, "unknown algorithm '" + std::string(text) + "'");
}

BlockMatrix random_dominant_spd(std::uint64_t seed, std::size_t n, double density, const ScalarMode& mode)
{
    BlockMatrix s = random_sparse(seed, n, density, mode, 1, 9);
    // off-diagonal row sums stay below 9(n-1)
    Scalar diag = Scalar::from_int(static_cast<long>(9 * n), mode);
    std::vector<Scalar> v;
    v.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j)
                v.push_back(diag + s.at(i, i));
            else
                v.push_back(i > j ? s.at(i, j) : s.at(j, i));
        }
    return BlockMatrix::from_scalars(n, mode, v).to_quadtree();
}

rt::JobHandle tlr_job(TlrAlgorithm algorithm, std::size_t size, double density, const ScalarMode& mode, std::uint64_t seed)
{
    rt::JobHandle job;
    switch (algorithm) {
    case TlrAlgorithm::Cholesky:
        job.type = DropType::Cholesky;
        job.inputs = {random_dominant_spd(seed, size, density, mode)};
        break;
    case TlrAlgorithm::Multiply:
        job.type = DropType::Multiply;
        job.inputs = {random_sparse(seed, size, density, mode), random_sparse(seed + 1, size, density, mode)};
        break;
    case TlrAlgorithm::Inverse:
        job.type = DropType::InvertLower;
        job.inputs = {random_sparse_lower_triangular(seed, size, density, mode)};
        break;
    }
    return job;
}

TlrReport run_tlr_study(const TlrOptions& o)
{
    require_pow2(o.base_size, "base size");
    if (o.base_cores < 1 || o.steps < 1)
        fail(Errc::InvalidArgument, "need at least one core and one step");
    TlrReport rep;
    rep.algorithm = o.algorithm;
    rep.density = o.density;
    rep.mode = o.mode;
    rep.leaf_size = o.leaf_size;
    rep.seed = o.seed;
    std::size_t cores = o.base_cores;
    std::size_t size = o.base_size;
    for (int s = 0; s <= o.steps; ++s, cores *= 8, size *= 2) {
        rt::RuntimeOptions ro;
        ro.nodes = cores;
        ro.leaf_size = o.leaf_size;
        ro.seed = o.seed;
        ro.latency = o.latency;
        ro.cost = o.cost;
        rt::JobResult r = rt::submit(tlr_job(o.algorithm, size, o.density, o.mode, derive(o.seed, size, 0)), ro);
        rep.series.push_back(TlrPoint{cores, size, r.stats.sim_time, r.stats.ops, r.stats.drops_sent});
    }
    for (std::size_t i = 1; i < rep.series.size(); ++i) {
        double k = rep.series[i].time / rep.series[i - 1].time;
        rep.k.push_back(k);
        rep.tlr.push_back(std::cbrt(k));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// correctness suite

BlockMatrix golden_a()
{
    return BlockMatrix::from_ints(4, ScalarMode::rational(),
        {16, 24, 28, 4, 24, 72, 42, 42, 28, 42, 85, 13, 4, 42, 13, 74});
}

BlockMatrix golden_l()
{
    return BlockMatrix::from_ints(4, ScalarMode::rational(), {4, 0, 0, 0, 6, 6, 0, 0, 7, 0, 6, 0, 1, 6, 1, 6});
}

BlockMatrix golden_l_inv()
{
    const ScalarMode q = ScalarMode::rational();
    std::vector<Scalar> v;
    for (const char* s : {"1/4", "0", "0", "0", "-1/4", "1/6", "0", "0", "-7/24", "0", "1/6", "0", "37/144", "-1/6",
             "-1/36", "1/6"})
        v.push_back(Scalar::parse(s, q));
    return BlockMatrix::from_scalars(4, q, v);
}

BlockMatrix forward_substitution_inverse(const BlockMatrix& l)
{
    const std::size_t n = l.size();
    const ScalarMode mode = l.mode();
    std::vector<Scalar> x(n * n, Scalar::zero(mode));
    for (std::size_t col = 0; col < n; ++col)
        for (std::size_t i = col; i < n; ++i) {
            Scalar s = i == col ? Scalar::one(mode) : Scalar::zero(mode);
            for (std::size_t k = col; k < i; ++k)
                s = s - l.at(i, k) * x[k * n + col];
            x[i * n + col] = s / l.at(i, i);
        }
    return BlockMatrix::from_scalars(n, mode, x);
}

bool GoldenReport::ok() const
{
    return std::all_of(checks.begin(), checks.end(), [](const GoldenCheck& c) { return c.passed; });
}

namespace {

// body returns an empty string on success, else what went wrong
template <class F>
void run_check(GoldenReport& rep, const std::string& name, F&& body)
{
    GoldenCheck c{name, false, ""};
    try {
        c.detail = body();
        c.passed = c.detail.empty();
    } catch (const std::exception& e) {
        c.detail = std::string("threw: ") + e.what();
    }
    rep.checks.push_back(std::move(c));
}

} // namespace

GoldenReport run_golden_suite()
{
    GoldenReport rep;
    const ScalarMode q = ScalarMode::rational();
    const ScalarMode d = ScalarMode::double_precision();

    run_check(rep, "golden-cholesky-4x4", [] {
        CholeskyResult r = cholesky(golden_a(), LeafConfig{1});
        if (!(r.L == golden_l()))
            return std::string("L differs");
        if (!(r.L_inv == golden_l_inv()))
            return std::string("L_inv differs");
        return std::string();
    });

    run_check(rep, "golden-cholesky-4x4-cluster", [] {
        rt::RuntimeOptions o;
        o.nodes = 4;
        o.leaf_size = 1;
        o.audit = true;
        rt::JobResult r = rt::submit(rt::JobHandle{DropType::Cholesky, {golden_a()}}, o);
        if (!(r.outputs.at(0) == golden_l()) || !(r.outputs.at(1) == golden_l_inv()))
            return std::string("outputs differ");
        if (!r.audit.ok())
            return "audit: " + r.audit.messages.front();
        return std::string();
    });

    run_check(rep, "multiply-identity", [&] {
        for (std::size_t n = 2; n <= 32; n *= 2) {
            BlockMatrix a = random_sparse(n, n, 1.0, q, -9, 9);
            BlockMatrix i = BlockMatrix::identity(n, q);
            if (!(multiply(a, i, LeafConfig{2}) == a) || !(multiply(i, a, LeafConfig{2}) == a))
                return "size " + std::to_string(n);
        }
        return std::string();
    });

    run_check(rep, "multiply-vs-naive", [&] {
        for (std::size_t n = 2; n <= 32; n *= 2)
            for (std::uint64_t s = 0; s < 4; ++s) {
                BlockMatrix a = random_sparse(100 + s, n, 0.7, q, -9, 9);
                BlockMatrix b = random_sparse(200 + s, n, 0.7, q, -9, 9);
                if (!(multiply(a, b, LeafConfig{4}) == naive_multiply(a, b)))
                    return "size " + std::to_string(n) + " seed " + std::to_string(s);
            }
        return std::string();
    });

    run_check(rep, "inverse-vs-forward-substitution", [&] {
        BlockMatrix l = random_lower_triangular(16, 16, q, 1, 9);
        BlockMatrix inv = invert_lower_triangular(l, LeafConfig{2});
        if (!(inv == forward_substitution_inverse(l)))
            return std::string("inverse differs");
        if (!(naive_multiply(l, inv) == BlockMatrix::identity(16, q)))
            return std::string("L * L^-1 != I");
        return std::string();
    });

    run_check(rep, "cholesky-reconstructs", [&] {
        for (std::size_t n = 2; n <= 16; n *= 2) {
            SpdPair p = random_spd(n, n, q);
            CholeskyResult r = cholesky(p.A, LeafConfig{2});
            if (!(naive_multiply(r.L, transpose(r.L)) == p.A) || !(r.L == p.L))
                return "size " + std::to_string(n);
        }
        return std::string();
    });

    const BlockMatrix big = random_dominant_spd(32, 32, 1.0, d);
    rt::JobHandle big_job{DropType::Cholesky, {big}};
    const graph::Blocks expect = [&] {
        CholeskyResult r = cholesky(big, LeafConfig{4});
        return graph::Blocks{r.L, r.L_inv};
    }();

    run_check(rep, "node-count-invariance", [&] {
        for (std::size_t nodes : {1, 2, 4, 8, 13})
            for (std::uint64_t seed : {0, 3}) {
                rt::RuntimeOptions o;
                o.nodes = nodes;
                o.leaf_size = 4;
                o.seed = seed;
                o.audit = true;
                rt::JobResult r = rt::submit(big_job, o);
                if (r.outputs != expect)
                    return std::to_string(nodes) + " nodes: outputs differ";
                if (!r.audit.ok())
                    return std::to_string(nodes) + " nodes: " + r.audit.messages.front();
            }
        return std::string();
    });

    run_check(rep, "fault-injection", [&] {
        rt::RuntimeOptions base;
        base.nodes = 4;
        base.leaf_size = 4;
        double t_end = rt::submit(big_job, base).stats.sim_time;
        for (int i = 1; i <= 5; ++i) {
            rt::RuntimeOptions o = base;
            o.audit = true;
            o.failures = {rt::FailurePlan{1 + i % 3, t_end * i / 6.0, true}};
            rt::JobResult r = rt::submit(big_job, o);
            if (r.outputs != expect)
                return "failure " + std::to_string(i) + ": outputs differ";
            if (!r.audit.ok())
                return "failure " + std::to_string(i) + ": " + r.audit.messages.front();
        }
        return std::string();
    });

    return rep;
}

// ---------------------------------------------------------------------------
// reports

ReportFormat parse_report_format(std::string_view text)
{
    if (text == "table" || text == "table-text" || text == "text")
        return ReportFormat::TableText;
    if (text == "json")
        return ReportFormat::Json;
    fail(Errc::InvalidArgument, "unknown format '" + std::string(text) + "'");
}

namespace {

std::string mode_tag(const ScalarMode& m)
{
    switch (m.kind()) {
    case ScalarKind::Double:
        return "D";
    case ScalarKind::FixedDecimal:
        return std::to_string(m.digits());
    case ScalarKind::Rational:
        return "Q";
    }
    return "?";
}

std::string error_cell(const ScalarMode& m, double lg)
{
    if (std::isnan(lg))
        return "n/a";
    if (std::isinf(lg))
        return m.kind() == ScalarKind::Double ? "0" : "-inf";
    if (m.kind() == ScalarKind::Double)
        return fmt("%.2g", std::pow(10.0, lg));
    return fmt("%.1f", lg);
}

constexpr std::size_t kLabel = 10;
constexpr std::size_t kCell = 10;

} // namespace

std::string render_table(const std::vector<ErrorStudyReport>& reports)
{
    std::set<std::size_t> sizes;
    for (const auto& r : reports)
        for (const auto& row : r.rows)
            sizes.insert(row.size);
    std::ostringstream out;
    out << pad("size", kLabel);
    for (std::size_t n : sizes)
        out << pad(std::to_string(n), kCell);
    out << "\n";
    for (const auto& r : reports) {
        std::map<std::size_t, const ErrorStudyRow*> by;
        bool any_failed = false;
        for (const auto& row : r.rows) {
            by[row.size] = &row;
            any_failed |= row.failed > 0;
        }
        auto line = [&](const std::string& label, auto cell) {
            out << pad(label, kLabel);
            for (std::size_t n : sizes)
                out << pad(by.count(n) ? cell(*by[n]) : "-", kCell);
            out << "\n";
        };
        std::string tag = mode_tag(r.mode);
        line("M_" + tag, [&](const ErrorStudyRow& row) { return error_cell(r.mode, row.log10_max); });
        line("cp_" + tag, [&](const ErrorStudyRow& row) { return error_cell(r.mode, row.log10_mean); });
        if (any_failed)
            line("failed_" + tag, [](const ErrorStudyRow& row) { return std::to_string(row.failed); });
    }
    for (const auto& r : reports)
        out << "# " << mode_tag(r.mode) << ": mode " << r.mode.to_string() << ", trials " << r.trials << ", seed "
            << r.seed << ", leaf " << r.leaf_size
            << (r.mode.kind() == ScalarKind::Double ? ", max|S|" : ", log10 max|S|") << "\n";
    return trim_lines(out.str());
}

std::string render_table(const TlrReport& r)
{
    std::ostringstream out;
    out << "# " << to_string(r.algorithm) << ", density " << fmt("%g", r.density * 100) << "%, mode "
        << r.mode.to_string() << ", LS " << r.leaf_size << ", seed " << r.seed << ", time in " << r.time_unit << "\n";
    auto line = [&](const std::string& label, auto point, auto between) {
        out << pad(label, kLabel);
        for (std::size_t i = 0; i < r.series.size(); ++i) {
            out << pad(point(i), kCell);
            if (i + 1 < r.series.size())
                out << pad(between(i), kCell);
        }
        out << "\n";
    };
    auto blank = [](std::size_t) { return std::string(); };
    line("#cores", [&](std::size_t i) { return std::to_string(r.series[i].cores); }, blank);
    line("size", [&](std::size_t i) { return std::to_string(r.series[i].size); }, blank);
    line("", [](std::size_t) { return std::string(); }, [](std::size_t) { return std::string("TLR"); });
    line("time", [&](std::size_t i) { return fmt("%.1f", r.series[i].time); },
        [&](std::size_t i) { return i < r.tlr.size() ? fmt("%.3f", r.tlr[i]) : std::string(); });
    line("k", blank, [&](std::size_t i) { return i < r.k.size() ? fmt("%.3f", r.k[i]) : std::string(); });
    return trim_lines(out.str());
}

std::string render_table(const GoldenReport& r)
{
    std::ostringstream out;
    for (const auto& c : r.checks) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name;
        if (!c.detail.empty())
            out << ": " << c.detail;
        out << "\n";
    }
    out << (r.ok() ? "all checks passed" : "some checks failed") << "\n";
    return out.str();
}

std::string to_json(const std::vector<ErrorStudyReport>& reports)
{
    json arr = json::array();
    for (const auto& r : reports) {
        json rows = json::array();
        for (const auto& row : r.rows)
            rows.push_back({{"size", row.size}, {"trials", row.trials}, {"failed", row.failed},
                {"log10_mean_max_error", num(row.log10_mean)}, {"log10_max_max_error", num(row.log10_max)}});
        arr.push_back({{"kind", "error-study"}, {"mode", r.mode.to_string()}, {"trials", r.trials}, {"seed", r.seed},
            {"leaf_size", r.leaf_size}, {"rows", rows}});
    }
    return arr.dump(2) + "\n";
}

std::vector<ErrorStudyReport> parse_error_reports(std::string_view text)
{
    return parse_json(text, [](const json& arr) {
        std::vector<ErrorStudyReport> out;
        for (const auto& j : arr) {
            ErrorStudyReport r;
            r.mode = ScalarMode::parse(j.at("mode").get<std::string>());
            r.trials = j.at("trials").get<int>();
            r.seed = j.at("seed").get<std::uint64_t>();
            r.leaf_size = j.at("leaf_size").get<std::size_t>();
            for (const auto& row : j.at("rows"))
                r.rows.push_back(ErrorStudyRow{row.at("size").get<std::size_t>(), row.at("trials").get<int>(),
                    row.at("failed").get<int>(), num(row.at("log10_mean_max_error")),
                    num(row.at("log10_max_max_error"))});
            out.push_back(std::move(r));
        }
        return out;
    });
}

std::string to_json(const TlrReport& r)
{
    json series = json::array();
    for (const auto& p : r.series)
        series.push_back(
            {{"cores", p.cores}, {"size", p.size}, {"time", num(p.time)}, {"ops", p.ops}, {"drops_sent", p.drops_sent}});
    json k = json::array(), tlr = json::array();
    for (double v : r.k)
        k.push_back(num(v));
    for (double v : r.tlr)
        tlr.push_back(num(v));
    json j = {{"kind", "tlr-study"}, {"algorithm", to_string(r.algorithm)}, {"density", r.density},
        {"mode", r.mode.to_string()}, {"leaf_size", r.leaf_size}, {"seed", r.seed}, {"time_unit", r.time_unit},
        {"series", series}, {"k", k}, {"tlr", tlr}};
    return j.dump(2) + "\n";
}

TlrReport parse_tlr_report(std::string_view text)
{
    return parse_json(text, [](const json& j) {
        TlrReport r;
        r.algorithm = parse_tlr_algorithm(j.at("algorithm").get<std::string>());
        r.density = j.at("density").get<double>();
        r.mode = ScalarMode::parse(j.at("mode").get<std::string>());
        r.leaf_size = j.at("leaf_size").get<std::size_t>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.time_unit = j.at("time_unit").get<std::string>();
        for (const auto& p : j.at("series"))
            r.series.push_back(TlrPoint{p.at("cores").get<std::size_t>(), p.at("size").get<std::size_t>(),
                num(p.at("time")), p.at("ops").get<std::uint64_t>(), p.at("drops_sent").get<std::uint64_t>()});
        for (const auto& v : j.at("k"))
            r.k.push_back(num(v));
        for (const auto& v : j.at("tlr"))
            r.tlr.push_back(num(v));
        return r;
    });
}

std::string to_json(const GoldenReport& r)
{
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    return json{{"kind", "golden"}, {"ok", r.ok()}, {"checks", checks}}.dump(2) + "\n";
}

GoldenReport parse_golden_report(std::string_view text)
{
    return parse_json(text, [](const json& j) {
        GoldenReport r;
        for (const auto& c : j.at("checks"))
            r.checks.push_back(
                GoldenCheck{c.at("name").get<std::string>(), c.at("passed").get<bool>(), c.at("detail").get<std::string>()});
        return r;
    });
}

void write_output(const std::string& path, const std::string& text)
{
    if (path == "-") {
        std::cout << text << std::flush;
        if (!std::cout)
            fail(Errc::IoError, "cannot write to stdout");
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        fail(Errc::IoError, "cannot open '" + path + "' for writing");
    f << text;
    f.flush();
    if (!f)
        fail(Errc::IoError, "write to '" + path + "' failed");
}

} // namespace dap::exp
