#pragma once
//
// Scalar arithmetic in three modes: IEEE double, fixed-digit decimal
// (round-half-even after every operation) and exact rationals.
//

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

namespace dap {

enum class ScalarKind : std::uint8_t { Double = 0, FixedDecimal = 1, Rational = 2 };

class ScalarMode {
public:
    ScalarMode() = default;

    static ScalarMode double_precision() { return ScalarMode(ScalarKind::Double, 0); }
    static ScalarMode fixed_decimal(int digits);
    static ScalarMode rational() { return ScalarMode(ScalarKind::Rational, 0); }

    ScalarKind kind() const noexcept { return kind_; }

    // number of decimal digits kept in the fractional part (FixedDecimal only)
    int digits() const noexcept { return digits_; }

    // "double", "decimal:<digits>", "rational"
    std::string to_string() const;
    static ScalarMode parse(std::string_view text);

    friend bool operator==(const ScalarMode&, const ScalarMode&) = default;

private:
    ScalarMode(ScalarKind kind, int digits) : kind_(kind), digits_(digits) {}

    ScalarKind kind_ = ScalarKind::Double;
    int digits_ = 0;
};

using Rational = mpq_class;

//
// value = mantissa / 10^digits, mantissa an arbitrary-size integer
//
class Decimal {
public:
    Decimal() = default;

    static Decimal zero(int digits);
    static Decimal from_int(long value, int digits);
    static Decimal from_mantissa(mpz_class mantissa, int digits);
    // correctly rounded (half-even) conversion of an exact rational
    static Decimal from_rational(const Rational& value, int digits);
    // accepts [+-]ddd[.ddd][e[+-]ddd] and p/q
    static Decimal parse(std::string_view text, int digits);

    const mpz_class& mantissa() const noexcept { return mant_; }
    int digits() const noexcept { return digits_; }

    bool is_zero() const noexcept { return mant_ == 0; }
    int sign() const noexcept { return sgn(mant_); }

    Rational to_rational() const;
    double to_double() const;
    double log10_abs() const;
    std::string to_string() const;

    Decimal operator-() const;
    friend Decimal operator+(const Decimal& x, const Decimal& y);
    friend Decimal operator-(const Decimal& x, const Decimal& y);
    friend Decimal operator*(const Decimal& x, const Decimal& y);
    friend Decimal operator/(const Decimal& x, const Decimal& y);

    friend bool operator==(const Decimal& x, const Decimal& y);
    friend std::strong_ordering operator<=>(const Decimal& x, const Decimal& y);

private:
    Decimal(mpz_class mantissa, int digits) : mant_(std::move(mantissa)), digits_(digits) {}

    mpz_class mant_ = 0;
    int digits_ = 1;
};

// Newton iteration from 10^ceil(e/2), stopping once two successive iterates
// agree after rounding to the working digit count.
Decimal sqrt(const Decimal& x);

// Exact root; throws RationalNotPerfectSquare if the root is irrational.
Rational sqrt_exact(const Rational& x);

const mpz_class& pow10(int exponent);

//
// Mode-tagged scalar value.  Mixing modes in one operation throws
// ModeMismatch.
//
class Scalar {
public:
    using Value = std::variant<double, Decimal, Rational>;

    Scalar() : value_(0.0) {}
    explicit Scalar(double v) : value_(v) {}
    explicit Scalar(Decimal v) : value_(std::move(v)) {}
    explicit Scalar(Rational v);

    static Scalar zero(const ScalarMode& mode);
    static Scalar one(const ScalarMode& mode);
    static Scalar from_int(long value, const ScalarMode& mode);
    static Scalar parse(std::string_view text, const ScalarMode& mode);

    ScalarMode mode() const;
    const Value& value() const noexcept { return value_; }

    bool is_zero() const;
    int sign() const;
    double to_double() const;
    // log10 of |x|, computed without leaving the mode (safe for 1e-480)
    double log10_abs() const;
    std::string to_string() const;

    Scalar operator-() const;
    friend Scalar operator+(const Scalar& x, const Scalar& y);
    friend Scalar operator-(const Scalar& x, const Scalar& y);
    friend Scalar operator*(const Scalar& x, const Scalar& y);
    friend Scalar operator/(const Scalar& x, const Scalar& y);

    // same mode and equal value; -0.0 == 0.0
    friend bool operator==(const Scalar& x, const Scalar& y);

private:
    Value value_;
};

enum class ArithOp { Add, Sub, Mul, Div, Neg };

Scalar scalar_arith(ArithOp op, const Scalar& x, const Scalar& y);
Scalar sqrt(const Scalar& x);
Scalar abs(const Scalar& x);
// -1, 0, 1; throws ModeMismatch
int compare(const Scalar& x, const Scalar& y);

// shared text helpers
std::string format_double(double v);
double parse_double(std::string_view text);
std::string format_rational(const Rational& q);
Rational parse_rational(std::string_view text);

} // namespace dap
