#include "dap/kernels.hpp"

#include "dap/errors.hpp"
#include "typed_kernels.hpp"

namespace dap {

using detail::Dense;
using graph::Arc;
using graph::ArcsTable;
using graph::Blocks;

std::uint64_t op_count() noexcept { return detail::kernel_ops; }
void reset_op_count() noexcept { detail::kernel_ops = 0; }

void validate_leaf(const LeafConfig& cfg)
{
    if (!is_power_of_two(cfg.leaf_size))
        fail(Errc::InvalidArgument, "leaf size " + std::to_string(cfg.leaf_size) + " is not a power of two");
}

namespace {

template <class T>
Dense<T> to_typed(const BlockMatrix& m)
{
    DenseData d = m.dense_data();
    return Dense<T>{m.size(), std::move(std::get<std::vector<T>>(d))};
}

template <class T>
BlockMatrix from_typed(Dense<T> d, const ScalarMode& mode)
{
    std::size_t n = d.n;
    return BlockMatrix::from_dense(n, mode, DenseData(std::move(d.v)));
}

void check_pair(const BlockMatrix& a, const BlockMatrix& b)
{
    if (a.size() != b.size())
        fail(Errc::SizeMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    if (!(a.mode() == b.mode()))
        fail(Errc::ModeMismatch, a.mode().to_string() + " vs " + b.mode().to_string());
}

BlockMatrix leaf_multiply(const BlockMatrix& a, const BlockMatrix& b)
{
    return detail::dispatch_mode(a.mode(), [&](auto tag) {
        using T = decltype(tag);
        T zero = detail::elem_from_int<T>(0, a.mode());
        return from_typed(detail::dense_mul(to_typed<T>(a), to_typed<T>(b), zero), a.mode());
    });
}

BlockMatrix mul_rec(const BlockMatrix& a, const BlockMatrix& b, std::size_t leaf)
{
    if (a.is_zero() || b.is_zero())
        return BlockMatrix::zero(a.size(), a.mode());
    if (a.size() <= leaf)
        return leaf_multiply(a, b);
    QuadSplit x = split_quad(a), y = split_quad(b);
    BlockMatrix w1 = add(mul_rec(x.a, y.a, leaf), mul_rec(x.b, y.c, leaf));
    BlockMatrix w2 = add(mul_rec(x.a, y.b, leaf), mul_rec(x.b, y.d, leaf));
    BlockMatrix w3 = add(mul_rec(x.c, y.a, leaf), mul_rec(x.d, y.c, leaf));
    BlockMatrix w4 = add(mul_rec(x.c, y.b, leaf), mul_rec(x.d, y.d, leaf));
    return join_quad(w1, w2, w3, w4);
}

BlockMatrix inv_rec(const BlockMatrix& m, std::size_t leaf)
{
    if (m.size() <= leaf) {
        return detail::dispatch_mode(m.mode(), [&](auto tag) {
            using T = decltype(tag);
            T zero = detail::elem_from_int<T>(0, m.mode());
            return from_typed(detail::dense_invert_lower(to_typed<T>(m), zero), m.mode());
        });
    }
    QuadSplit q = split_quad(m);
    BlockMatrix x = inv_rec(q.a, leaf);
    BlockMatrix k = inv_rec(q.d, leaf);
    BlockMatrix t = mul_rec(q.c, x, leaf);
    BlockMatrix z = neg(mul_rec(k, t, leaf));
    return join_quad(x, BlockMatrix::zero(x.size(), m.mode()), z, k);
}

CholeskyResult chol_rec(const BlockMatrix& m, std::size_t leaf)
{
    if (m.size() <= leaf) {
        return detail::dispatch_mode(m.mode(), [&](auto tag) {
            using T = decltype(tag);
            T zero = detail::elem_from_int<T>(0, m.mode());
            auto r = detail::dense_cholesky(to_typed<T>(m), zero);
            return CholeskyResult{from_typed(std::move(r.L), m.mode()), from_typed(std::move(r.L_inv), m.mode())};
        });
    }
    QuadSplit q = split_quad(m);
    CholeskyResult top = chol_rec(q.a, leaf);
    BlockMatrix bt = mul_rec(top.L_inv, q.b, leaf);
    BlockMatrix b = transpose(bt);
    BlockMatrix delta = sub(q.d, mul_rec(b, bt, leaf));
    CholeskyResult bottom = chol_rec(delta, leaf);
    BlockMatrix t = mul_rec(b, top.L_inv, leaf);
    BlockMatrix z = neg(mul_rec(bottom.L_inv, t, leaf));
    BlockMatrix zero = BlockMatrix::zero(q.a.size(), m.mode());
    return {join_quad(top.L, zero, b, bottom.L), join_quad(top.L_inv, zero, z, bottom.L_inv)};
}

} // namespace

BlockMatrix multiply(const BlockMatrix& a, const BlockMatrix& b, const LeafConfig& cfg)
{
    validate_leaf(cfg);
    check_pair(a, b);
    return mul_rec(a, b, cfg.leaf_size);
}

BlockMatrix multiply_accumulate(
    const BlockMatrix& a, const BlockMatrix& b, const BlockMatrix& c, int sign, const LeafConfig& cfg)
{
    if (sign != 1 && sign != -1)
        fail(Errc::InvalidArgument, "sign must be +1 or -1");
    check_pair(a, c);
    BlockMatrix p = multiply(a, b, cfg);
    return sign > 0 ? add(c, p) : sub(c, p);
}

BlockMatrix invert_lower_triangular(const BlockMatrix& a, const LeafConfig& cfg)
{
    validate_leaf(cfg);
    if (!is_lower_triangular(a))
        fail(Errc::NotLowerTriangular, "matrix has entries above the diagonal");
    return inv_rec(a, cfg.leaf_size);
}

CholeskyResult cholesky(const BlockMatrix& a, const LeafConfig& cfg)
{
    validate_leaf(cfg);
    if (!is_symmetric(a))
        fail(Errc::NotSymmetric, "cholesky input is not symmetric");
    return chol_rec(a, cfg.leaf_size);
}

CholeskyResult cholesky_base(const BlockMatrix& a)
{
    if (a.size() == 1)
        return chol_rec(a, 1);
    if (a.size() != 2)
        fail(Errc::InvalidArgument, "closed form needs a 1x1 or 2x2 block");
    if (!is_symmetric(a))
        fail(Errc::NotSymmetric, "cholesky input is not symmetric");
    return detail::dispatch_mode(a.mode(), [&](auto tag) {
        using T = decltype(tag);
        const ScalarMode& mode = a.mode();
        Dense<T> m = to_typed<T>(a);
        T zero = detail::elem_from_int<T>(0, mode);
        T one = detail::elem_one_like(zero);
        const T& alpha = m.at(0, 0);
        const T& beta = m.at(1, 0);
        const T& gamma = m.at(1, 1);
        if (!detail::elem_positive(alpha))
            fail(Errc::NotPositiveDefinite, "non-positive pivot " + detail::elem_to_string(alpha));
        T ra = detail::elem_sqrt(alpha);
        T rb = T(beta / ra);
        T d = T((alpha * gamma - beta * beta) / alpha);
        if (!detail::elem_positive(d))
            fail(Errc::NotPositiveDefinite, "non-positive pivot " + detail::elem_to_string(d));
        T rc = detail::elem_sqrt(d);
        detail::kernel_ops += 9;
        Dense<T> L{2, {ra, zero, rb, rc}};
        T z = T(-(rb / (ra * rc)));
        Dense<T> Li{2, {T(one / ra), zero, z, T(one / rc)}};
        return CholeskyResult{from_typed(std::move(L), mode), from_typed(std::move(Li), mode)};
    });
}

BlockMatrix cholesky_panel_oracle(const BlockMatrix& a, std::size_t nb)
{
    if (nb < 1)
        fail(Errc::InvalidArgument, "panel width must be positive");
    if (!is_symmetric(a))
        fail(Errc::NotSymmetric, "cholesky input is not symmetric");
    return detail::dispatch_mode(a.mode(), [&](auto tag) {
        using T = decltype(tag);
        T zero = detail::elem_from_int<T>(0, a.mode());
        return from_typed(detail::dense_panel_cholesky(to_typed<T>(a), nb, zero), a.mode());
    });
}

// ---------------------------------------------------------------------------
// drop types

const char* to_string(DropType t)
{
    switch (t) {
    case DropType::Multiply: return "Multiply";
    case DropType::MultiplyAdd: return "MultiplyAdd";
    case DropType::MultiplySub: return "MultiplySub";
    case DropType::MultiplyNeg: return "MultiplyNeg";
    case DropType::TransMultiply: return "TransMultiply";
    case DropType::TransMultiplySub: return "TransMultiplySub";
    case DropType::InvertLower: return "InvertLower";
    case DropType::Cholesky: return "Cholesky";
    }
    return "?";
}

namespace {

bool any_zero(const Blocks& main) { return main[0].is_zero() || main[1].is_zero(); }

Blocks leaf_mul(const Blocks& m, std::size_t leaf) { return {mul_rec(m[0], m[1], leaf)}; }
Blocks leaf_mulneg(const Blocks& m, std::size_t leaf) { return {neg(mul_rec(m[0], m[1], leaf))}; }
Blocks leaf_tmul(const Blocks& m, std::size_t leaf) { return {mul_rec(transpose(m[0]), m[1], leaf)}; }
Blocks leaf_inv(const Blocks& m, std::size_t leaf) { return {inv_rec(m[0], leaf)}; }
Blocks leaf_chol(const Blocks& m, std::size_t leaf)
{
    CholeskyResult r = chol_rec(m[0], leaf);
    return {r.L, r.L_inv};
}

Blocks finish_add(Blocks p, const Blocks& add_in) { return {add(add_in[0], p[0])}; }
Blocks finish_sub(Blocks p, const Blocks& add_in) { return {sub(add_in[0], p[0])}; }

Blocks mul_in(const Blocks& m)
{
    QuadSplit x = split_quad(m[0]), y = split_quad(m[1]);
    return {x.a, x.b, x.c, x.d, y.a, y.b, y.c, y.d};
}
Blocks tmul_in(const Blocks& m) { return mul_in({transpose(m[0]), m[1]}); }

BlockMatrix joined(const Blocks& w) { return join_quad(w[0], w[1], w[2], w[3]); }
Blocks mul_out(const Blocks& w) { return {joined(w)}; }
Blocks muladd_out(const Blocks& w) { return {add(w[4], joined(w))}; }
Blocks mulsub_out(const Blocks& w) { return {sub(w[4], joined(w))}; }
Blocks mulneg_out(const Blocks& w) { return {neg(joined(w))}; }

Blocks inv_in(const Blocks& m)
{
    QuadSplit q = split_quad(m[0]);
    return {q.a, q.c, q.d};
}
// (x, z, k)
Blocks inv_out(const Blocks& w)
{
    return {join_quad(w[0], BlockMatrix::zero(w[0].size(), w[0].mode()), w[1], w[2])};
}

Blocks chol_in(const Blocks& m)
{
    QuadSplit q = split_quad(m[0]);
    return {q.a, q.b, q.d};
}
// (a, bt, c, a1, z, c1)
Blocks chol_out(const Blocks& w)
{
    BlockMatrix zero = BlockMatrix::zero(w[0].size(), w[0].mode());
    return {join_quad(w[0], zero, transpose(w[1]), w[2]), join_quad(w[3], zero, w[4], w[5])};
}

ArcsTable multiply_arcs(bool accumulate)
{
    ArcsTable t;
    t.rows.resize(10);
    t.rows[0] = {{1, 0, 0}, {1, 4, 1}, {2, 0, 0}, {2, 5, 1}, {3, 2, 0}, {3, 4, 1}, {4, 2, 0}, {4, 5, 1},
        {5, 1, 0}, {5, 6, 1}, {6, 1, 0}, {6, 7, 1}, {7, 3, 0}, {7, 6, 1}, {8, 3, 0}, {8, 7, 1}};
    if (accumulate)
        t.rows[0].push_back({9, 8, 4});
    // a*l feeds b*n as its accumulator, and so on
    for (int k = 1; k <= 4; ++k)
        t.rows[static_cast<std::size_t>(k)] = {{k + 4, 0, 2}};
    for (int k = 5; k <= 8; ++k)
        t.rows[static_cast<std::size_t>(k)] = {{9, 0, k - 5}};
    return t;
}

ArcsTable inverse_arcs()
{
    ArcsTable t;
    t.rows = {
        {{1, 0, 0}, {2, 2, 0}, {3, 1, 0}},
        {{3, 0, 1}, {5, 0, 0}},
        {{4, 0, 0}, {5, 0, 2}},
        {{4, 0, 1}},
        {{5, 0, 1}},
        {},
    };
    return t;
}

ArcsTable cholesky_arcs()
{
    ArcsTable t;
    t.rows = {
        {{1, 0, 0}, {2, 1, 1}, {3, 2, 2}},
        {{7, 0, 0}, {2, 1, 0}, {5, 1, 1}, {7, 1, 3}},
        {{3, 0, 0}, {3, 0, 1}, {5, 0, 0}, {7, 0, 1}},
        {{4, 0, 0}},
        {{7, 0, 2}, {6, 1, 0}, {7, 1, 5}},
        {{6, 0, 1}},
        {{7, 0, 4}},
        {},
    };
    return t;
}

const std::vector<graph::DropTypeId> kMultiplyDrops{0, 0, 0, 0, 1, 1, 1, 1};

graph::Catalog build_catalog()
{
    graph::Catalog cat;
    auto reg = [&](DropType t, int main, int additional, int outputs, graph::LeafMainFn leaf, graph::FinishFn fin,
                   graph::TrivialFn trivial) {
        graph::DropTypeInfo info{to_string(t), main, additional, outputs, leaf, fin, trivial};
        if (cat.register_drop_type(info) != id_of(t))
            fail(Errc::InvalidArgument, "drop type registered out of order");
    };
    reg(DropType::Multiply, 2, 0, 1, leaf_mul, nullptr, any_zero);
    reg(DropType::MultiplyAdd, 2, 1, 1, leaf_mul, finish_add, any_zero);
    reg(DropType::MultiplySub, 2, 1, 1, leaf_mul, finish_sub, any_zero);
    reg(DropType::MultiplyNeg, 2, 0, 1, leaf_mulneg, nullptr, any_zero);
    reg(DropType::TransMultiply, 2, 0, 1, leaf_tmul, nullptr, any_zero);
    reg(DropType::TransMultiplySub, 2, 1, 1, leaf_tmul, finish_sub, any_zero);
    reg(DropType::InvertLower, 1, 0, 1, leaf_inv, nullptr, nullptr);
    reg(DropType::Cholesky, 1, 0, 2, leaf_chol, nullptr, nullptr);

    auto mul_amine = [&](const char* name, bool acc, graph::InputFn in, graph::OutputFn out) {
        return cat.register_amine_type(graph::AmineType{
            name, multiply_arcs(acc), kMultiplyDrops, 8, acc ? 1 : 0, acc ? 5 : 4, in, out});
    };
    cat.set_unroll(id_of(DropType::Multiply), mul_amine("multiply", false, mul_in, mul_out));
    cat.set_unroll(id_of(DropType::MultiplyAdd), mul_amine("multiply-add", true, mul_in, muladd_out));
    cat.set_unroll(id_of(DropType::MultiplySub), mul_amine("multiply-sub", true, mul_in, mulsub_out));
    cat.set_unroll(id_of(DropType::MultiplyNeg), mul_amine("multiply-neg", false, mul_in, mulneg_out));
    cat.set_unroll(id_of(DropType::TransMultiply), mul_amine("trans-multiply", false, tmul_in, mul_out));
    cat.set_unroll(id_of(DropType::TransMultiplySub), mul_amine("trans-multiply-sub", true, tmul_in, mulsub_out));

    Topology inv = amine_topology(Algorithm::TriangularInverse);
    cat.set_unroll(id_of(DropType::InvertLower),
        cat.register_amine_type(graph::AmineType{"invert-lower", inv.arcs, inv.drop_types, 3, 0, 3, inv_in, inv_out}));
    Topology chol = amine_topology(Algorithm::Cholesky);
    cat.set_unroll(id_of(DropType::Cholesky),
        cat.register_amine_type(graph::AmineType{"cholesky", chol.arcs, chol.drop_types, 3, 0, 6, chol_in, chol_out}));
    return cat;
}

} // namespace

Topology amine_topology(Algorithm alg)
{
    switch (alg) {
    case Algorithm::Multiply: return {multiply_arcs(false), kMultiplyDrops};
    case Algorithm::TriangularInverse:
        return {inverse_arcs(),
            {id_of(DropType::InvertLower), id_of(DropType::InvertLower), id_of(DropType::Multiply),
                id_of(DropType::MultiplyNeg)}};
    case Algorithm::Cholesky:
        return {cholesky_arcs(),
            {id_of(DropType::Cholesky), id_of(DropType::Multiply), id_of(DropType::TransMultiplySub),
                id_of(DropType::Cholesky), id_of(DropType::TransMultiply), id_of(DropType::MultiplyNeg)}};
    }
    fail(Errc::InvalidArgument, "unknown algorithm");
}

const graph::Catalog& standard_catalog()
{
    static const graph::Catalog catalog = build_catalog();
    return catalog;
}

} // namespace dap
