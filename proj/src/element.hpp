#pragma once
// Per-element helpers shared by the dense code paths.  T is one of
// double, Decimal, Rational.

#include "dap/errors.hpp"
#include "dap/matrix.hpp"
#include "dap/scalar.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace dap::detail {

inline bool elem_is_zero(double v) { return v == 0.0; }
inline bool elem_is_zero(const Decimal& v) { return v.is_zero(); }
inline bool elem_is_zero(const Rational& v) { return sgn(v) == 0; }

inline int elem_sign(double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }
inline int elem_sign(const Decimal& v) { return v.sign(); }
inline int elem_sign(const Rational& v) { return sgn(v); }

template <class T>
T elem_from_int(long v, const ScalarMode& mode);

template <>
inline double elem_from_int<double>(long v, const ScalarMode&)
{
    return static_cast<double>(v);
}

template <>
inline Decimal elem_from_int<Decimal>(long v, const ScalarMode& mode)
{
    return Decimal::from_int(v, mode.digits());
}

template <>
inline Rational elem_from_int<Rational>(long v, const ScalarMode&)
{
    return Rational(v);
}

inline std::string elem_to_string(double v) { return format_double(v); }
inline std::string elem_to_string(const Decimal& v) { return v.to_string(); }
inline std::string elem_to_string(const Rational& v) { return format_rational(v); }

inline Scalar elem_to_scalar(double v) { return Scalar(v); }
inline Scalar elem_to_scalar(const Decimal& v) { return Scalar(v); }
inline Scalar elem_to_scalar(const Rational& v) { return Scalar(v); }

template <class T>
const T& elem_from_scalar(const Scalar& s)
{
    if (!std::holds_alternative<T>(s.value()))
        fail(Errc::ModeMismatch, "element of mode " + s.mode().to_string());
    return std::get<T>(s.value());
}

inline double elem_sqrt(double v)
{
    return std::sqrt(v);
}
inline Decimal elem_sqrt(const Decimal& v) { return sqrt(v); }
inline Rational elem_sqrt(const Rational& v) { return sqrt_exact(v); }

template <class T>
std::vector<T> zero_vector(std::size_t count, const ScalarMode& mode)
{
    return std::vector<T>(count, elem_from_int<T>(0, mode));
}

inline DenseData make_dense_zero(std::size_t count, const ScalarMode& mode)
{
    switch (mode.kind()) {
    case ScalarKind::Double: return zero_vector<double>(count, mode);
    case ScalarKind::FixedDecimal: return zero_vector<Decimal>(count, mode);
    case ScalarKind::Rational: return zero_vector<Rational>(count, mode);
    }
    return {};
}

// calls f(tag) with a value-initialized T matching the mode
template <class F>
decltype(auto) dispatch_mode(const ScalarMode& mode, F&& f)
{
    switch (mode.kind()) {
    case ScalarKind::FixedDecimal: return f(Decimal{});
    case ScalarKind::Rational: return f(Rational{});
    case ScalarKind::Double: break;
    }
    return f(double{});
}

} // namespace dap::detail
