#include "dap/scalar.hpp"

#include "dap/errors.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace dap {

namespace {

constexpr int kSqrtGuardDigits = 10;

// half-even rounding of n/d, d > 0
mpz_class round_div(const mpz_class& n, const mpz_class& d)
{
    mpz_class q, r;
    mpz_tdiv_qr(q.get_mpz_t(), r.get_mpz_t(), n.get_mpz_t(), d.get_mpz_t());
    if (r == 0)
        return q;
    mpz_class twice = abs(r) * 2;
    int c = cmp(twice, d);
    if (c > 0 || (c == 0 && mpz_odd_p(q.get_mpz_t()))) {
        if (sgn(n) < 0)
            q -= 1;
        else
            q += 1;
    }
    return q;
}

void require_same_digits(const Decimal& x, const Decimal& y)
{
    if (x.digits() != y.digits())
        fail(Errc::ModeMismatch,
            "decimal:" + std::to_string(x.digits()) + " vs decimal:" + std::to_string(y.digits()));
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
        s.remove_suffix(1);
    return s;
}

bool all_digits(std::string_view s)
{
    if (s.empty())
        return false;
    for (char c : s)
        if (c < '0' || c > '9')
            return false;
    return true;
}

} // namespace

const mpz_class& pow10(int exponent)
{
    if (exponent < 0)
        fail(Errc::InvalidArgument, "negative power of ten");
    thread_local std::unordered_map<int, mpz_class> cache;
    auto it = cache.find(exponent);
    if (it != cache.end())
        return it->second;
    mpz_class v;
    mpz_ui_pow_ui(v.get_mpz_t(), 10, static_cast<unsigned long>(exponent));
    return cache.emplace(exponent, std::move(v)).first->second;
}

// ---------------------------------------------------------------------------
// ScalarMode

ScalarMode ScalarMode::fixed_decimal(int digits)
{
    if (digits < 1)
        fail(Errc::InvalidArgument, "decimal digits must be >= 1");
    return ScalarMode(ScalarKind::FixedDecimal, digits);
}

std::string ScalarMode::to_string() const
{
    switch (kind_) {
    case ScalarKind::Double: return "double";
    case ScalarKind::FixedDecimal: return "decimal:" + std::to_string(digits_);
    case ScalarKind::Rational: return "rational";
    }
    return "double";
}

ScalarMode ScalarMode::parse(std::string_view text)
{
    text = trim(text);
    if (text == "double")
        return double_precision();
    if (text == "rational")
        return rational();
    constexpr std::string_view prefix = "decimal:";
    if (text.substr(0, prefix.size()) == prefix) {
        auto rest = text.substr(prefix.size());
        if (!all_digits(rest) || rest.size() > 6)
            fail(Errc::ParseError, "bad decimal digit count: " + std::string(text));
        return fixed_decimal(std::stoi(std::string(rest)));
    }
    fail(Errc::ParseError, "unknown scalar mode: " + std::string(text));
}

// ---------------------------------------------------------------------------
// text helpers

std::string format_double(double v)
{
    if (v == 0.0)
        return "0";
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text)
{
    text = trim(text);
    if (!text.empty() && text.front() == '+')
        text.remove_prefix(1);
    if (text.find('/') != std::string_view::npos)
        return parse_rational(text).get_d();
    double v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        fail(Errc::ParseError, "bad number: " + std::string(text));
    return v;
}

std::string format_rational(const Rational& q)
{
    return q.get_str();
}

// "p/q" or [+-]ddd[.ddd][e[+-]ddd], converted exactly
Rational parse_rational(std::string_view text)
{
    text = trim(text);
    if (text.empty())
        fail(Errc::ParseError, "empty number");
    auto slash = text.find('/');
    if (slash != std::string_view::npos) {
        auto num = text.substr(0, slash);
        auto den = text.substr(slash + 1);
        bool neg = !num.empty() && (num.front() == '-' || num.front() == '+');
        auto num_digits = neg ? num.substr(1) : num;
        if (!all_digits(num_digits) || !all_digits(den))
            fail(Errc::ParseError, "bad rational: " + std::string(text));
        mpz_class d{std::string(den), 10};
        if (d == 0)
            fail(Errc::DivisionByZero, "zero denominator: " + std::string(text));
        Rational q{mpz_class(std::string(num_digits), 10), d};
        q.canonicalize();
        if (num.front() == '-')
            q = -q;
        return q;
    }

    bool negative = false;
    std::string_view s = text;
    if (s.front() == '-' || s.front() == '+') {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    long exponent = 0;
    auto epos = s.find_first_of("eE");
    if (epos != std::string_view::npos) {
        auto e = s.substr(epos + 1);
        bool eneg = false;
        if (!e.empty() && (e.front() == '-' || e.front() == '+')) {
            eneg = e.front() == '-';
            e.remove_prefix(1);
        }
        if (!all_digits(e) || e.size() > 6)
            fail(Errc::ParseError, "bad exponent: " + std::string(text));
        exponent = std::stol(std::string(e));
        if (eneg)
            exponent = -exponent;
        s = s.substr(0, epos);
    }
    std::string mant;
    auto dot = s.find('.');
    if (dot != std::string_view::npos) {
        auto ip = s.substr(0, dot);
        auto fp = s.substr(dot + 1);
        if ((ip.empty() && fp.empty()) || (!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp)))
            fail(Errc::ParseError, "bad number: " + std::string(text));
        mant = std::string(ip) + std::string(fp);
        exponent -= static_cast<long>(fp.size());
    } else {
        if (!all_digits(s))
            fail(Errc::ParseError, "bad number: " + std::string(text));
        mant = std::string(s);
    }
    if (std::labs(exponent) > 100000)
        fail(Errc::ParseError, "exponent out of range: " + std::string(text));
    Rational q{mpz_class(mant, 10)};
    if (exponent > 0)
        q *= pow10(static_cast<int>(exponent));
    else if (exponent < 0)
        q /= pow10(static_cast<int>(-exponent));
    q.canonicalize();
    return negative ? Rational(-q) : q;
}

// ---------------------------------------------------------------------------
// Decimal

Decimal Decimal::zero(int digits)
{
    return from_mantissa(0, digits);
}

Decimal Decimal::from_int(long value, int digits)
{
    return from_mantissa(mpz_class(value) * pow10(digits), digits);
}

Decimal Decimal::from_mantissa(mpz_class mantissa, int digits)
{
    if (digits < 1)
        fail(Errc::InvalidArgument, "decimal digits must be >= 1");
    return Decimal(std::move(mantissa), digits);
}

Decimal Decimal::from_rational(const Rational& value, int digits)
{
    mpz_class n = value.get_num() * pow10(digits);
    return from_mantissa(round_div(n, value.get_den()), digits);
}

Decimal Decimal::parse(std::string_view text, int digits)
{
    return from_rational(parse_rational(text), digits);
}

Rational Decimal::to_rational() const
{
    Rational q(mant_, pow10(digits_));
    q.canonicalize();
    return q;
}

double Decimal::to_double() const
{
    return to_rational().get_d();
}

double Decimal::log10_abs() const
{
    if (mant_ == 0)
        return -std::numeric_limits<double>::infinity();
    long exp2 = 0;
    double m = mpz_get_d_2exp(&exp2, mant_.get_mpz_t());
    return std::log10(std::fabs(m)) + static_cast<double>(exp2) * std::log10(2.0) - digits_;
}

std::string Decimal::to_string() const
{
    mpz_class a = abs(mant_);
    std::string s = a.get_str();
    if (s.size() <= static_cast<std::size_t>(digits_))
        s.insert(0, static_cast<std::size_t>(digits_) + 1 - s.size(), '0');
    std::string ip = s.substr(0, s.size() - static_cast<std::size_t>(digits_));
    std::string fp = s.substr(s.size() - static_cast<std::size_t>(digits_));
    while (!fp.empty() && fp.back() == '0')
        fp.pop_back();
    std::string out = mant_ < 0 ? "-" : "";
    out += ip;
    if (!fp.empty())
        out += "." + fp;
    return out;
}

Decimal Decimal::operator-() const
{
    return Decimal(-mant_, digits_);
}

Decimal operator+(const Decimal& x, const Decimal& y)
{
    require_same_digits(x, y);
    return Decimal(x.mant_ + y.mant_, x.digits_);
}

Decimal operator-(const Decimal& x, const Decimal& y)
{
    require_same_digits(x, y);
    return Decimal(x.mant_ - y.mant_, x.digits_);
}

Decimal operator*(const Decimal& x, const Decimal& y)
{
    require_same_digits(x, y);
    mpz_class p = x.mant_ * y.mant_;
    return Decimal(round_div(p, pow10(x.digits_)), x.digits_);
}

Decimal operator/(const Decimal& x, const Decimal& y)
{
    require_same_digits(x, y);
    if (y.mant_ == 0)
        fail(Errc::DivisionByZero, "decimal division by zero");
    mpz_class n = x.mant_ * pow10(x.digits_);
    mpz_class d = y.mant_;
    if (d < 0) {
        n = -n;
        d = -d;
    }
    return Decimal(round_div(n, d), x.digits_);
}

bool operator==(const Decimal& x, const Decimal& y)
{
    return x.digits_ == y.digits_ && x.mant_ == y.mant_;
}

std::strong_ordering operator<=>(const Decimal& x, const Decimal& y)
{
    require_same_digits(x, y);
    int c = cmp(x.mant_, y.mant_);
    if (c < 0)
        return std::strong_ordering::less;
    if (c > 0)
        return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

Decimal sqrt(const Decimal& x)
{
    if (x.sign() < 0)
        fail(Errc::NegativeOperand, "sqrt of negative decimal " + x.to_string());
    const int d = x.digits();
    if (x.is_zero())
        return Decimal::zero(d);

    // Y = sqrt(x) * 10^w with w = d + guard, as an integer root of N
    const int w = d + kSqrtGuardDigits;
    mpz_class n = x.mantissa() * pow10(2 * w - d);

    // decimal exponent: number of integer digits of x (may be <= 0)
    long k = static_cast<long>(mpz_sizeinbase(x.mantissa().get_mpz_t(), 10));
    if (x.mantissa() < pow10(static_cast<int>(k - 1)))
        --k;
    long e = k - d;
    long half = e >= 0 ? (e + 1) / 2 : -((-e) / 2);
    long start = half + w;
    mpz_class y = start >= 0 ? pow10(static_cast<int>(start)) : mpz_class(1);

    const mpz_class& guard = pow10(kSqrtGuardDigits);
    mpz_class prev = round_div(y, guard);
    for (int iter = 0; iter < 10000; ++iter) {
        mpz_class q;
        mpz_fdiv_q(q.get_mpz_t(), n.get_mpz_t(), y.get_mpz_t());
        mpz_class next = (y + q) / 2;
        if (next == 0)
            next = 1;
        mpz_class rounded = round_div(next, guard);
        y = next;
        if (rounded == prev)
            return Decimal::from_mantissa(rounded, d);
        prev = rounded;
    }
    return Decimal::from_mantissa(prev, d);
}

Rational sqrt_exact(const Rational& x)
{
    if (sgn(x) < 0)
        fail(Errc::NegativeOperand, "sqrt of negative rational " + x.get_str());
    const mpz_class& num = x.get_num();
    const mpz_class& den = x.get_den();
    if (!mpz_perfect_square_p(num.get_mpz_t()) || !mpz_perfect_square_p(den.get_mpz_t()))
        fail(Errc::RationalNotPerfectSquare, x.get_str() + " has no rational square root");
    mpz_class rn, rd;
    mpz_sqrt(rn.get_mpz_t(), num.get_mpz_t());
    mpz_sqrt(rd.get_mpz_t(), den.get_mpz_t());
    Rational r(rn, rd);
    r.canonicalize();
    return r;
}

// ---------------------------------------------------------------------------
// Scalar

Scalar::Scalar(Rational v)
{
    v.canonicalize();
    value_ = std::move(v);
}

Scalar Scalar::zero(const ScalarMode& mode)
{
    return from_int(0, mode);
}

Scalar Scalar::one(const ScalarMode& mode)
{
    return from_int(1, mode);
}

Scalar Scalar::from_int(long value, const ScalarMode& mode)
{
    switch (mode.kind()) {
    case ScalarKind::Double: return Scalar(static_cast<double>(value));
    case ScalarKind::FixedDecimal: return Scalar(Decimal::from_int(value, mode.digits()));
    case ScalarKind::Rational: return Scalar(Rational(value));
    }
    return Scalar();
}

Scalar Scalar::parse(std::string_view text, const ScalarMode& mode)
{
    switch (mode.kind()) {
    case ScalarKind::Double: return Scalar(parse_double(text));
    case ScalarKind::FixedDecimal: return Scalar(Decimal::parse(text, mode.digits()));
    case ScalarKind::Rational: return Scalar(parse_rational(text));
    }
    return Scalar();
}

ScalarMode Scalar::mode() const
{
    switch (value_.index()) {
    case 0: return ScalarMode::double_precision();
    case 1: return ScalarMode::fixed_decimal(std::get<1>(value_).digits());
    default: return ScalarMode::rational();
    }
}

bool Scalar::is_zero() const
{
    return sign() == 0;
}

int Scalar::sign() const
{
    switch (value_.index()) {
    case 0: {
        double v = std::get<0>(value_);
        return v > 0 ? 1 : (v < 0 ? -1 : 0);
    }
    case 1: return std::get<1>(value_).sign();
    default: return sgn(std::get<2>(value_));
    }
}

double Scalar::to_double() const
{
    switch (value_.index()) {
    case 0: return std::get<0>(value_);
    case 1: return std::get<1>(value_).to_double();
    default: return std::get<2>(value_).get_d();
    }
}

double Scalar::log10_abs() const
{
    switch (value_.index()) {
    case 0: return std::log10(std::fabs(std::get<0>(value_)));
    case 1: return std::get<1>(value_).log10_abs();
    default: {
        const Rational& q = std::get<2>(value_);
        if (q == 0)
            return -std::numeric_limits<double>::infinity();
        long en = 0, ed = 0;
        double mn = mpz_get_d_2exp(&en, q.get_num_mpz_t());
        double md = mpz_get_d_2exp(&ed, q.get_den_mpz_t());
        return std::log10(std::fabs(mn) / md) + static_cast<double>(en - ed) * std::log10(2.0);
    }
    }
}

std::string Scalar::to_string() const
{
    switch (value_.index()) {
    case 0: return format_double(std::get<0>(value_));
    case 1: return std::get<1>(value_).to_string();
    default: return format_rational(std::get<2>(value_));
    }
}

namespace {

void require_same_mode(const Scalar& x, const Scalar& y)
{
    if (x.value().index() != y.value().index())
        fail(Errc::ModeMismatch, x.mode().to_string() + " vs " + y.mode().to_string());
    if (x.value().index() == 1)
        require_same_digits(std::get<1>(x.value()), std::get<1>(y.value()));
}

} // namespace

Scalar Scalar::operator-() const
{
    switch (value_.index()) {
    case 0: return Scalar(-std::get<0>(value_));
    case 1: return Scalar(-std::get<1>(value_));
    default: return Scalar(Rational(-std::get<2>(value_)));
    }
}

Scalar operator+(const Scalar& x, const Scalar& y)
{
    require_same_mode(x, y);
    switch (x.value_.index()) {
    case 0: return Scalar(std::get<0>(x.value_) + std::get<0>(y.value_));
    case 1: return Scalar(std::get<1>(x.value_) + std::get<1>(y.value_));
    default: return Scalar(Rational(std::get<2>(x.value_) + std::get<2>(y.value_)));
    }
}

Scalar operator-(const Scalar& x, const Scalar& y)
{
    require_same_mode(x, y);
    switch (x.value_.index()) {
    case 0: return Scalar(std::get<0>(x.value_) - std::get<0>(y.value_));
    case 1: return Scalar(std::get<1>(x.value_) - std::get<1>(y.value_));
    default: return Scalar(Rational(std::get<2>(x.value_) - std::get<2>(y.value_)));
    }
}

Scalar operator*(const Scalar& x, const Scalar& y)
{
    require_same_mode(x, y);
    switch (x.value_.index()) {
    case 0: return Scalar(std::get<0>(x.value_) * std::get<0>(y.value_));
    case 1: return Scalar(std::get<1>(x.value_) * std::get<1>(y.value_));
    default: return Scalar(Rational(std::get<2>(x.value_) * std::get<2>(y.value_)));
    }
}

Scalar operator/(const Scalar& x, const Scalar& y)
{
    require_same_mode(x, y);
    if (y.is_zero())
        fail(Errc::DivisionByZero, "division by zero");
    switch (x.value_.index()) {
    case 0: return Scalar(std::get<0>(x.value_) / std::get<0>(y.value_));
    case 1: return Scalar(std::get<1>(x.value_) / std::get<1>(y.value_));
    default: return Scalar(Rational(std::get<2>(x.value_) / std::get<2>(y.value_)));
    }
}

bool operator==(const Scalar& x, const Scalar& y)
{
    if (x.value_.index() != y.value_.index())
        return false;
    switch (x.value_.index()) {
    case 0: return std::get<0>(x.value_) == std::get<0>(y.value_);
    case 1: return std::get<1>(x.value_) == std::get<1>(y.value_);
    default: return std::get<2>(x.value_) == std::get<2>(y.value_);
    }
}

Scalar scalar_arith(ArithOp op, const Scalar& x, const Scalar& y)
{
    switch (op) {
    case ArithOp::Add: return x + y;
    case ArithOp::Sub: return x - y;
    case ArithOp::Mul: return x * y;
    case ArithOp::Div: return x / y;
    case ArithOp::Neg: return -x;
    }
    return x;
}

Scalar sqrt(const Scalar& x)
{
    switch (x.value().index()) {
    case 0: {
        double v = std::get<0>(x.value());
        if (v < 0)
            fail(Errc::NegativeOperand, "sqrt of negative value " + format_double(v));
        return Scalar(std::sqrt(v));
    }
    case 1: return Scalar(sqrt(std::get<1>(x.value())));
    default: return Scalar(sqrt_exact(std::get<2>(x.value())));
    }
}

Scalar abs(const Scalar& x)
{
    return x.sign() < 0 ? -x : x;
}

int compare(const Scalar& x, const Scalar& y)
{
    require_same_mode(x, y);
    switch (x.value().index()) {
    case 0: {
        double a = std::get<0>(x.value()), b = std::get<0>(y.value());
        return a < b ? -1 : (a > b ? 1 : 0);
    }
    case 1: {
        auto c = std::get<1>(x.value()) <=> std::get<1>(y.value());
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    default: {
        int c = cmp(std::get<2>(x.value()), std::get<2>(y.value()));
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    }
}

} // namespace dap
