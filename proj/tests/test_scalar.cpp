#include <doctest.h>

#include "dap/errors.hpp"
#include "dap/scalar.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace dap;
using dap::testing::code_of;

namespace {

Scalar q(long p, long d = 1)
{
    return Scalar(Rational(p, d));
}

Scalar dec(const char* text, int digits)
{
    return Scalar::parse(text, ScalarMode::fixed_decimal(digits));
}

// schoolbook long division of num/den to `digits` fractional digits, one
// digit at a time, then half-even on the next digit and remainder
mpz_class long_division_oracle(long num, long den, int digits)
{
    mpz_class quotient = num / den;
    long rem = num % den;
    for (int i = 0; i < digits; ++i) {
        rem *= 10;
        quotient = quotient * 10 + rem / den;
        rem %= den;
    }
    long twice = 2 * rem;
    if (twice > den || (twice == den && mpz_odd_p(quotient.get_mpz_t())))
        quotient += 1;
    return quotient;
}

} // namespace

TEST_SUITE("scalar")
{
    TEST_CASE("rational product from the worked example")
    {
        CHECK(q(1, 4) * q(28) == q(7));
        CHECK((q(1, 4) * q(28)).to_string() == "7");
    }

    TEST_CASE("additive identity in every mode")
    {
        std::mt19937_64 rng(11);
        std::uniform_int_distribution<long> pick(-100000, 100000);
        for (int i = 0; i < 50; ++i) {
            long a = pick(rng), b = pick(rng) | 1;
            Scalar r = q(a, b);
            CHECK(r + Scalar::zero(ScalarMode::rational()) == r);
            Scalar x(static_cast<double>(a) / static_cast<double>(b));
            CHECK(x + Scalar(0.0) == x);
            Scalar d = Scalar(Decimal::from_rational(Rational(a, b), 40));
            CHECK(d + Scalar::zero(ScalarMode::fixed_decimal(40)) == d);
        }
    }

    TEST_CASE("decimal 1/3 matches long division and 3*(1/3) is within 1e-98 of 1")
    {
        const auto mode = ScalarMode::fixed_decimal(100);
        Scalar third = Scalar::one(mode) / Scalar::from_int(3, mode);
        CHECK(std::get<Decimal>(third.value()).mantissa() == long_division_oracle(1, 3, 100));
        Scalar back = third * Scalar::from_int(3, mode);
        Scalar diff = abs(back - Scalar::one(mode));
        CHECK(compare(diff, dec("1e-98", 100)) <= 0);

        // a few more quotients against the same oracle
        const long pairs[][2] = {{2, 7}, {-22, 7}, {1, 8}, {5, 16}, {999, 13}};
        for (auto& p : pairs) {
            Scalar r = Scalar::from_int(p[0], mode) / Scalar::from_int(p[1], mode);
            mpz_class expect = p[0] < 0 ? mpz_class(-long_division_oracle(-p[0], p[1], 100))
                                        : long_division_oracle(p[0], p[1], 100);
            CHECK(std::get<Decimal>(r.value()).mantissa() == expect);
        }
    }

    TEST_CASE("half-even rounding on ties")
    {
        // 0.5 at one digit: 0.25 -> 0.2, 0.35 -> 0.4, -0.25 -> -0.2
        CHECK(dec("0.25", 1).to_string() == "0.2");
        CHECK(dec("0.35", 1).to_string() == "0.4");
        CHECK(dec("-0.25", 1).to_string() == "-0.2");
        CHECK((dec("0.5", 1) * dec("0.5", 1)).to_string() == "0.2");
        CHECK((dec("0.5", 1) * dec("0.7", 1)).to_string() == "0.4");
    }

    TEST_CASE("sqrt examples")
    {
        CHECK(sqrt(q(16)) == q(4));
        CHECK(sqrt(Scalar(16.0)) == Scalar(4.0));
        CHECK(sqrt(dec("16", 30)) == dec("4", 30));
        CHECK(sqrt(q(1)) == q(1));
        CHECK(sqrt(Scalar(1.0)) == Scalar(1.0));
        CHECK(sqrt(dec("1", 7)) == dec("1", 7));
        CHECK(sqrt(q(1, 16)) == q(1, 4));
        CHECK(sqrt(dec("0", 5)).is_zero());
    }

    TEST_CASE("decimal sqrt(2) at 100 digits matches integer square root of 2e200")
    {
        mpz_class n = 2 * pow10(200);
        mpz_class s;
        mpz_sqrt(s.get_mpz_t(), n.get_mpz_t());
        // round to nearest: compare (2s+1)^2 with 4n
        mpz_class t = 2 * s + 1;
        if (t * t < 4 * n)
            s += 1;
        Scalar r = sqrt(dec("2", 100));
        CHECK(std::get<Decimal>(r.value()).mantissa() == s);
        CHECK(r.to_string().substr(0, 22) == "1.41421356237309504880");
    }

    TEST_CASE("decimal sqrt over a wide exponent range is correctly rounded")
    {
        const char* inputs[] = {"1e-20", "3e-7", "0.0004", "0.5", "2", "99", "12345.678", "1e30", "7e51"};
        for (int d : {5, 30, 100}) {
            for (const char* in : inputs) {
                Decimal x = Decimal::parse(in, d);
                if (x.is_zero())
                    continue;
                Decimal r = sqrt(x);
                // oracle: isqrt of mantissa * 10^d gives floor(sqrt(x) * 10^d)
                mpz_class n = x.mantissa() * pow10(d);
                mpz_class s;
                mpz_sqrt(s.get_mpz_t(), n.get_mpz_t());
                mpz_class t = 2 * s + 1;
                if (t * t < 4 * n)
                    s += 1;
                CHECK_MESSAGE(r.mantissa() == s, in << " at " << d);
            }
        }
    }

    TEST_CASE("abs and compare")
    {
        CHECK(abs(q(-1, 6)) == q(1, 6));
        CHECK(compare(q(0), q(0)) == 0);
        CHECK(compare(Scalar(0.0), Scalar(-0.0)) == 0);
        CHECK(compare(dec("-1.5", 3), dec("1.25", 3)) < 0);
        CHECK(compare(q(7, 3), q(2)) > 0);
    }

    TEST_CASE("max |S| over a 4x4 error matrix picks the smallest exponent")
    {
        const auto mode = ScalarMode::fixed_decimal(120);
        std::mt19937_64 rng(5);
        std::uniform_int_distribution<int> kpick(1, 110);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<int> ks;
            std::vector<Scalar> entries;
            for (int i = 0; i < 16; ++i) {
                int k = kpick(rng);
                ks.push_back(k);
                std::string text = std::string(i % 2 ? "-" : "") + "1e-" + std::to_string(k);
                entries.push_back(Scalar::parse(text, mode));
            }
            Scalar best = abs(entries[0]);
            for (auto& e : entries)
                if (compare(abs(e), best) > 0)
                    best = abs(e);
            int kmin = 1000;
            for (int k : ks)
                kmin = std::min(kmin, k);
            CHECK(best == Scalar::parse("1e-" + std::to_string(kmin), mode));
            CHECK(best.log10_abs() == doctest::Approx(-kmin));
        }
    }

    TEST_CASE("contract violations raise typed errors")
    {
        CHECK(code_of([] { (void)(Scalar(1.0) + q(1)); }) == Errc::ModeMismatch);
        CHECK(code_of([] { (void)(dec("1", 5) * dec("1", 6)); }) == Errc::ModeMismatch);
        CHECK(code_of([] { (void)compare(Scalar(1.0), dec("1", 3)); }) == Errc::ModeMismatch);
        CHECK(code_of([] { (void)(q(1) / q(0)); }) == Errc::DivisionByZero);
        CHECK(code_of([] { (void)(Scalar(1.0) / Scalar(0.0)); }) == Errc::DivisionByZero);
        CHECK(code_of([] { (void)(dec("1", 4) / dec("0.00001", 4)); }) == Errc::DivisionByZero);
        CHECK(code_of([] { (void)sqrt(q(-4)); }) == Errc::NegativeOperand);
        CHECK(code_of([] { (void)sqrt(Scalar(-1.0)); }) == Errc::NegativeOperand);
        CHECK(code_of([] { (void)sqrt(dec("-2", 10)); }) == Errc::NegativeOperand);
        CHECK(code_of([] { (void)sqrt(q(2)); }) == Errc::RationalNotPerfectSquare);
        CHECK(code_of([] { (void)sqrt(q(4, 3)); }) == Errc::RationalNotPerfectSquare);
        CHECK(code_of([] { (void)ScalarMode::parse("decimal:0"); }) == Errc::InvalidArgument);
        CHECK(code_of([] { (void)ScalarMode::parse("quad"); }) == Errc::ParseError);
        CHECK(code_of([] { (void)parse_rational("1/x"); }) == Errc::ParseError);
        CHECK(code_of([] { (void)parse_rational("3/0"); }) == Errc::DivisionByZero);
        CHECK(code_of([] { (void)parse_double("1.5.2"); }) == Errc::ParseError);
    }

    TEST_CASE("rational field axioms hold exactly")
    {
        std::mt19937_64 rng(2024);
        std::uniform_int_distribution<long> num(-50, 50), den(1, 30);
        for (int i = 0; i < 500; ++i) {
            Scalar x = q(num(rng), den(rng)), y = q(num(rng), den(rng)), z = q(num(rng), den(rng));
            CHECK((x + y) + z == x + (y + z));
            CHECK((x * y) * z == x * (y * z));
            CHECK(x * (y + z) == x * y + x * z);
            if (!x.is_zero())
                CHECK(x * (q(1) / x) == q(1));
            Rational r = std::get<Rational>((x * y).value());
            CHECK(r.get_den() > 0);
            CHECK(gcd(r.get_num(), r.get_den()) == 1);
        }
    }

    TEST_CASE("fixed decimal single operations stay within the rounding bound")
    {
        std::mt19937_64 rng(77);
        std::uniform_int_distribution<long> mant(-1000000, 1000000);
        for (int d : {3, 10, 100, 500}) {
            const auto mode = ScalarMode::fixed_decimal(d);
            Rational ulp_half = Rational(1, 2) / Rational(pow10(d));
            for (int i = 0; i < 200; ++i) {
                // operands of magnitude <= 1e3, exactly representable at 3 digits
                Rational a(mant(rng), 1000), b(mant(rng), 1000);
                if (b == 0)
                    b = 1;
                Scalar x(Decimal::from_rational(a, d)), y(Decimal::from_rational(b, d));
                const std::pair<ArithOp, Rational> cases[] = {
                    {ArithOp::Add, a + b}, {ArithOp::Sub, a - b}, {ArithOp::Mul, a * b}, {ArithOp::Div, a / b}};
                for (auto& [op, exact] : cases) {
                    Rational got = std::get<Decimal>(scalar_arith(op, x, y).value()).to_rational();
                    Rational err = abs(got - exact);
                    CHECK(err <= ulp_half);
                    if (abs(exact) >= Rational(1, 20))
                        CHECK(err <= abs(exact) * 10 / Rational(pow10(d)));
                }
            }
        }
    }

    TEST_CASE("sqrt squared reproduces the operand")
    {
        std::mt19937_64 rng(91);
        std::uniform_int_distribution<long> pick(1, 1000000);
        for (int i = 0; i < 200; ++i) {
            Rational r(pick(rng), pick(rng));
            r.canonicalize();
            Scalar sq(Rational(r * r));
            CHECK(sqrt(sq) == Scalar(r));
            CHECK(sqrt(sq) * sqrt(sq) == sq);
        }
        for (int d : {5, 20, 100}) {
            const auto mode = ScalarMode::fixed_decimal(d);
            Rational ulp(1, pow10(d));
            for (int i = 0; i < 100; ++i) {
                // x in (0, 1]: two ulps, as stated
                Scalar x(Decimal::from_rational(Rational(pick(rng), 1000000), d));
                Scalar s = sqrt(x);
                Rational err = abs(std::get<Decimal>((s * s - x).value()).to_rational());
                CHECK(err <= 2 * ulp);
                // x up to 1e3: the product rounding scales with the root, (2s+1) ulps
                Scalar big(Decimal::from_rational(Rational(pick(rng), 1000), d));
                Scalar sb = sqrt(big);
                Rational errb = abs(std::get<Decimal>((sb * sb - big).value()).to_rational());
                Rational bound = (2 * std::get<Decimal>(sb.value()).to_rational() + 1) * ulp;
                CHECK(errb <= bound);
            }
            (void)mode;
        }
    }

    TEST_CASE("text round trips")
    {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-1e6, 1e6);
        for (int i = 0; i < 100; ++i) {
            double v = u(rng) / (i + 1);
            CHECK(Scalar::parse(Scalar(v).to_string(), ScalarMode::double_precision()) == Scalar(v));
            Scalar d(Decimal::from_rational(Rational(static_cast<long>(v * 1000), 7), 60));
            CHECK(Scalar::parse(d.to_string(), d.mode()) == d);
            Scalar r = q(static_cast<long>(v), 97);
            CHECK(Scalar::parse(r.to_string(), r.mode()) == r);
        }
        CHECK(Scalar(-0.0).to_string() == "0");
        CHECK(dec("-0.001", 3).to_string() == "-0.001");
        CHECK(dec("12.5000", 8).to_string() == "12.5");
        CHECK(q(-7, 24).to_string() == "-7/24");
        CHECK(parse_rational("-2.5e-1") == Rational(-1, 4));
        CHECK(parse_rational("37/144") == Rational(37, 144));
        CHECK(parse_rational("+4") == Rational(4));
        CHECK(parse_rational("0.035") == Rational(7, 200));
        CHECK(parse_rational("010/08") == Rational(5, 4));
        CHECK(ScalarMode::parse("decimal:500") == ScalarMode::fixed_decimal(500));
        CHECK(ScalarMode::parse("rational").to_string() == "rational");
        CHECK(ScalarMode::fixed_decimal(100).to_string() == "decimal:100");
    }

    TEST_CASE("log10 of tiny decimals does not underflow")
    {
        Scalar tiny = dec("3e-480", 500);
        CHECK(tiny.to_double() == 0.0);
        CHECK(tiny.log10_abs() == doctest::Approx(std::log10(3.0) - 480));
        CHECK(std::isinf(dec("0", 5).log10_abs()));
        CHECK(q(1, 1000).log10_abs() == doctest::Approx(-3));
    }
}
