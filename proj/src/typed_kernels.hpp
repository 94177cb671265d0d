#pragma once
// Dense kernels on row-major arrays of one element type.  The recursive
// routines mirror the block formulas exactly, so running them on a whole
// block gives the same values as unrolling the block into drops.

#include "element.hpp"

#include <cstdint>
#include <vector>

namespace dap::detail {

inline thread_local std::uint64_t kernel_ops = 0;

template <class T>
struct Dense {
    std::size_t n = 0;
    std::vector<T> v;

    T& at(std::size_t i, std::size_t j) { return v[i * n + j]; }
    const T& at(std::size_t i, std::size_t j) const { return v[i * n + j]; }
};

template <class T>
Dense<T> dense_zeros(std::size_t n, const T& zero)
{
    return Dense<T>{n, std::vector<T>(n * n, zero)};
}

// quadrant k of an even-sized matrix: 0=a, 1=b (top right), 2=c, 3=d
template <class T>
Dense<T> quadrant(const Dense<T>& m, int k)
{
    std::size_t h = m.n / 2;
    std::size_t r0 = (k / 2) * h, c0 = (k % 2) * h;
    Dense<T> out{h, {}};
    out.v.reserve(h * h);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < h; ++j)
            out.v.push_back(m.at(r0 + i, c0 + j));
    return out;
}

template <class T>
Dense<T> assemble(const Dense<T>& a, const Dense<T>& b, const Dense<T>& c, const Dense<T>& d)
{
    std::size_t h = a.n;
    Dense<T> out{2 * h, {}};
    out.v.reserve(4 * h * h);
    for (std::size_t i = 0; i < 2 * h; ++i) {
        const Dense<T>& left = i < h ? a : c;
        const Dense<T>& right = i < h ? b : d;
        std::size_t r = i < h ? i : i - h;
        for (std::size_t j = 0; j < h; ++j)
            out.v.push_back(left.at(r, j));
        for (std::size_t j = 0; j < h; ++j)
            out.v.push_back(right.at(r, j));
    }
    return out;
}

template <class T>
Dense<T> dense_transpose(const Dense<T>& m)
{
    Dense<T> out = m;
    for (std::size_t i = 0; i < m.n; ++i)
        for (std::size_t j = 0; j < m.n; ++j)
            out.at(j, i) = m.at(i, j);
    return out;
}

template <class T>
Dense<T> dense_neg(Dense<T> m)
{
    for (auto& x : m.v)
        if (!elem_is_zero(x))
            x = -x;
    return m;
}

// x - y, or x + y when sign > 0
template <class T>
Dense<T> dense_combine(Dense<T> x, const Dense<T>& y, int sign)
{
    for (std::size_t i = 0; i < x.v.size(); ++i) {
        if (elem_is_zero(y.v[i]))
            continue;
        if (sign > 0)
            x.v[i] = x.v[i] + y.v[i];
        else
            x.v[i] = x.v[i] - y.v[i];
    }
    return x;
}

// products summed in a balanced tree over k (n is a power of two); zero
// products are skipped, which matches the empty-block shortcut above the leaf
template <class T>
Dense<T> dense_mul(const Dense<T>& a, const Dense<T>& b, const T& zero)
{
    const std::size_t n = a.n;
    Dense<T> out = dense_zeros(n, zero);
    std::vector<T> terms(n, zero);
    std::vector<char> live(n);
    std::uint64_t ops = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            bool any = false;
            for (std::size_t k = 0; k < n; ++k) {
                const T& x = a.at(i, k);
                const T& y = b.at(k, j);
                live[k] = !elem_is_zero(x) && !elem_is_zero(y);
                if (live[k]) {
                    terms[k] = x * y;
                    ++ops;
                    any = true;
                }
            }
            if (!any)
                continue;
            for (std::size_t s = 1; s < n; s *= 2) {
                for (std::size_t k = 0; k + s < n; k += 2 * s) {
                    if (!live[k + s])
                        continue;
                    if (live[k])
                        terms[k] = terms[k] + terms[k + s];
                    else
                        terms[k] = terms[k + s];
                    live[k] = 1;
                }
            }
            if (live[0])
                out.at(i, j) = terms[0];
        }
    }
    kernel_ops += ops;
    return out;
}

template <class T>
T elem_one_like(const T& zero);

template <>
inline double elem_one_like<double>(const double&)
{
    return 1.0;
}
template <>
inline Decimal elem_one_like<Decimal>(const Decimal& zero)
{
    return Decimal::from_int(1, zero.digits());
}
template <>
inline Rational elem_one_like<Rational>(const Rational&)
{
    return Rational(1);
}

template <class T>
bool elem_positive(const T& x)
{
    return elem_sign(x) > 0;
}
template <>
inline bool elem_positive<double>(const double& x)
{
    return x > 0.0; // false for NaN
}

template <class T>
Dense<T> dense_invert_lower(const Dense<T>& m, const T& zero)
{
    if (m.n == 1) {
        if (elem_is_zero(m.v[0]))
            fail(Errc::ZeroDiagonal, "zero diagonal entry");
        ++kernel_ops;
        return Dense<T>{1, {T(elem_one_like(zero) / m.v[0])}};
    }
    Dense<T> a = quadrant(m, 0), c = quadrant(m, 2), d = quadrant(m, 3);
    Dense<T> x = dense_invert_lower(a, zero);
    Dense<T> k = dense_invert_lower(d, zero);
    Dense<T> t = dense_mul(c, x, zero);
    Dense<T> z = dense_neg(dense_mul(k, t, zero));
    return assemble(x, dense_zeros(a.n, zero), z, k);
}

template <class T>
struct DenseCholesky {
    Dense<T> L;
    Dense<T> L_inv;
};

template <class T>
DenseCholesky<T> dense_cholesky(const Dense<T>& m, const T& zero)
{
    if (m.n == 1) {
        if (!elem_positive(m.v[0]))
            fail(Errc::NotPositiveDefinite, "non-positive pivot " + elem_to_string(m.v[0]));
        T a = elem_sqrt(m.v[0]);
        kernel_ops += 2;
        T a1 = T(elem_one_like(zero) / a);
        return {Dense<T>{1, {a}}, Dense<T>{1, {a1}}};
    }
    Dense<T> alpha = quadrant(m, 0), beta = quadrant(m, 1), gamma = quadrant(m, 3);
    auto [a, a1] = dense_cholesky(alpha, zero);
    Dense<T> bt = dense_mul(a1, beta, zero);
    Dense<T> b = dense_transpose(bt);
    Dense<T> delta = dense_combine(std::move(gamma), dense_mul(b, bt, zero), -1);
    auto [c, c1] = dense_cholesky(delta, zero);
    Dense<T> t = dense_mul(b, a1, zero);
    Dense<T> z = dense_neg(dense_mul(c1, t, zero));
    Dense<T> zeros = dense_zeros(a.n, zero);
    return {assemble(a, zeros, b, c), assemble(a1, zeros, z, c1)};
}

// classical right-looking block algorithm; only the lower triangle of m is read
template <class T>
Dense<T> dense_panel_cholesky(Dense<T> m, std::size_t nb, const T& zero)
{
    const std::size_t n = m.n;
    Dense<T> L = dense_zeros(n, zero);
    auto dot = [&](std::size_t i, std::size_t j, std::size_t k0, std::size_t k1) {
        T s = zero;
        for (std::size_t k = k0; k < k1; ++k)
            s = s + L.at(i, k) * L.at(j, k);
        return s;
    };
    for (std::size_t j0 = 0; j0 < n; j0 += nb) {
        std::size_t j1 = std::min(n, j0 + nb);
        // unblocked factorization of the diagonal block
        for (std::size_t j = j0; j < j1; ++j) {
            T s = m.at(j, j) - dot(j, j, j0, j);
            if (!elem_positive(s))
                fail(Errc::NotPositiveDefinite, "non-positive pivot " + elem_to_string(s));
            L.at(j, j) = elem_sqrt(s);
            for (std::size_t i = j + 1; i < j1; ++i)
                L.at(i, j) = (m.at(i, j) - dot(i, j, j0, j)) / L.at(j, j);
        }
        // panel below the diagonal block
        for (std::size_t i = j1; i < n; ++i)
            for (std::size_t j = j0; j < j1; ++j)
                L.at(i, j) = (m.at(i, j) - dot(i, j, j0, j)) / L.at(j, j);
        // trailing update
        for (std::size_t i = j1; i < n; ++i)
            for (std::size_t j = j1; j <= i; ++j)
                m.at(i, j) = m.at(i, j) - dot(i, j, j0, j1);
    }
    return L;
}

} // namespace dap::detail
