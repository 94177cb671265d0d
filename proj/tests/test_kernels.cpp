#include <doctest.h>

#include "dap/errors.hpp"
#include "dap/kernels.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace dap;
using namespace dap::testing;

namespace {

const ScalarMode kQ = ScalarMode::rational();
const ScalarMode kD = ScalarMode::double_precision();

BlockMatrix q_ints(std::size_t n, std::vector<long> v) { return BlockMatrix::from_ints(n, kQ, std::move(v)); }

BlockMatrix golden_a() { return q_ints(4, {16, 24, 28, 4, 24, 72, 42, 42, 28, 42, 85, 13, 4, 42, 13, 74}); }
BlockMatrix golden_l() { return q_ints(4, {4, 0, 0, 0, 6, 6, 0, 0, 7, 0, 6, 0, 1, 6, 1, 6}); }

BlockMatrix golden_l_inv()
{
    std::vector<Scalar> v;
    for (const char* s : {"1/4", "0", "0", "0", "-1/4", "1/6", "0", "0", "-7/24", "0", "1/6", "0", "37/144", "-1/6",
             "-1/36", "1/6"})
        v.push_back(Scalar::parse(s, kQ));
    return BlockMatrix::from_scalars(4, kQ, v);
}

BlockMatrix q_frac(std::size_t n, std::vector<const char*> v)
{
    std::vector<Scalar> s;
    for (const char* x : v)
        s.push_back(Scalar::parse(x, kQ));
    return BlockMatrix::from_scalars(n, kQ, s);
}

// identical doubles, sign of zero aside
bool same_bits(const BlockMatrix& x, const BlockMatrix& y)
{
    if (x.mode().kind() != ScalarKind::Double)
        return x == y;
    auto dx = std::get<std::vector<double>>(x.dense_data());
    auto dy = std::get<std::vector<double>>(y.dense_data());
    if (dx.size() != dy.size())
        return false;
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (!(dx[i] == dy[i]))
            return false;
    return true;
}

} // namespace

TEST_SUITE("kernels")
{
    TEST_CASE("multiply of the golden inverse block by beta")
    {
        BlockMatrix a1 = q_frac(2, {"1/4", "0", "-1/4", "1/6"});
        BlockMatrix beta = q_ints(2, {28, 4, 42, 42});
        CHECK(multiply(a1, beta, {1}) == q_ints(2, {7, 1, 0, 6}));
    }

    TEST_CASE("multiply by identity")
    {
        BlockMatrix a = random_spd(5, 16, kD).A;
        for (std::size_t leaf : {1, 4, 16})
            CHECK(multiply(a, BlockMatrix::identity(16, kD), {leaf}) == a);
    }

    TEST_CASE("recursive multiply equals the naive oracle in Rational")
    {
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            BlockMatrix a = random_sparse(seed, 16, 0.7, kQ, -9, 9).densified();
            BlockMatrix b = random_sparse(seed + 100, 16, 0.7, kQ, -9, 9).densified();
            QMat want = q_multiply(to_q(a), to_q(b));
            for (std::size_t leaf : {1, 2, 8, 16})
                CHECK(to_q(multiply(a, b, {leaf})) == want);
        }
    }

    TEST_CASE("multiply-accumulate on the golden delta")
    {
        BlockMatrix bt = q_ints(2, {7, 1, 0, 6});
        BlockMatrix gamma = q_ints(2, {85, 13, 13, 74});
        CHECK(multiply_accumulate(transpose(bt), bt, gamma, -1, {1}) == q_ints(2, {36, 6, 6, 37}));
    }

    TEST_CASE("multiply-accumulate with a zero operand returns the accumulator")
    {
        BlockMatrix a = random_spd(2, 8, kD).A;
        BlockMatrix c = random_spd(3, 8, kD).A;
        CHECK(multiply_accumulate(a, BlockMatrix::zero(8, kD), c, 1, {2}) == c);
        CHECK(multiply_accumulate(BlockMatrix::zero(8, kD), a, c, -1, {2}) == c);
    }

    TEST_CASE("multiply-accumulate equals multiply then add")
    {
        Rng rng(11);
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<Scalar> va, vb, vc;
            for (int i = 0; i < 64; ++i) {
                va.emplace_back(rng.uniform01() * 2 - 1);
                vb.emplace_back(rng.uniform01() * 2 - 1);
                vc.emplace_back(rng.uniform01() * 2 - 1);
            }
            auto a = BlockMatrix::from_scalars(8, kD, va);
            auto b = BlockMatrix::from_scalars(8, kD, vb);
            auto c = BlockMatrix::from_scalars(8, kD, vc);
            CHECK(same_bits(multiply_accumulate(a, b, c, 1, {2}), add(c, multiply(a, b, {2}))));
            CHECK(same_bits(multiply_accumulate(a, b, c, -1, {4}), sub(c, multiply(a, b, {4}))));
        }
    }

    TEST_CASE("inverse of the golden factor")
    {
        for (std::size_t leaf : {1, 2, 4})
            CHECK(invert_lower_triangular(golden_l(), {leaf}) == golden_l_inv());
        CHECK(invert_lower_triangular(BlockMatrix::identity(8, kQ)) == BlockMatrix::identity(8, kQ));
    }

    TEST_CASE("inverse of random triangular matrices is exact")
    {
        for (std::uint64_t seed = 1; seed <= 6; ++seed) {
            BlockMatrix l = random_lower_triangular(seed, 8, kQ);
            BlockMatrix x = invert_lower_triangular(l, {2});
            CHECK(to_q(x) == q_invert_lower(to_q(l)));
            CHECK(to_q(multiply(l, x)) == q_identity(8));
        }
    }

    TEST_CASE("cholesky of the golden matrix")
    {
        for (std::size_t leaf : {1, 2, 4}) {
            CholeskyResult r = cholesky(golden_a(), {leaf});
            CHECK(r.L == golden_l());
            CHECK(r.L_inv == golden_l_inv());
        }
        CholeskyResult id = cholesky(BlockMatrix::identity(8, kQ));
        CHECK(id.L == BlockMatrix::identity(8, kQ));
        CHECK(id.L_inv == BlockMatrix::identity(8, kQ));
    }

    TEST_CASE("cholesky of random SPD matrices reconstructs A")
    {
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            SpdPair p = random_spd(seed, 16, kQ);
            CholeskyResult r = cholesky(p.A, {4});
            QMat l = to_q(r.L);
            CHECK(l == q_cholesky(to_q(p.A)));
            CHECK(q_multiply(l, q_transpose(l)) == to_q(p.A));
            CHECK(q_multiply(l, to_q(r.L_inv)) == q_identity(16));
            CHECK(is_lower_triangular(r.L));
            CHECK(is_lower_triangular(r.L_inv));
        }
    }

    TEST_CASE("double reconstruction stays within n * 2^-40 relative per entry")
    {
        for (std::size_t n : {8, 16, 32, 64}) {
            SpdPair p = random_spd(n, n, kD);
            CholeskyResult r = cholesky(p.A, {8});
            QMat a = to_q(p.A);
            QMat l = to_q(r.L);
            QMat llt = q_multiply(l, q_transpose(l));
            QMat li = to_q(r.L_inv);
            QMat lli = q_multiply(l, li);
            // identity entries are measured against the |L| |L^-1| scale
            QMat abs_l = l, abs_li = li;
            for (auto& x : abs_l.v)
                x = abs(x);
            for (auto& x : abs_li.v)
                x = abs(x);
            QMat scale = q_multiply(abs_l, abs_li);
            QMat id = q_identity(n);
            double bound = static_cast<double>(n) * std::ldexp(1.0, -40);
            double worst = 0, worst_id = 0;
            for (std::size_t i = 0; i < a.v.size(); ++i) {
                worst = std::max(worst, std::abs(Rational((llt.v[i] - a.v[i]) / a.v[i]).get_d()));
                if (sgn(scale.v[i]) != 0)
                    worst_id = std::max(worst_id, std::abs(Rational((lli.v[i] - id.v[i]) / scale.v[i]).get_d()));
            }
            CHECK(worst <= bound);
            CHECK(worst_id <= bound);
        }
    }

    TEST_CASE("base cases")
    {
        CholeskyResult r = cholesky_base(q_ints(2, {16, 24, 24, 72}));
        CHECK(r.L == q_ints(2, {4, 0, 6, 6}));
        CHECK(r.L_inv == q_frac(2, {"1/4", "0", "-1/4", "1/6"}));
        CholeskyResult one = cholesky_base(q_ints(1, {1}));
        CHECK(one.L == q_ints(1, {1}));
        CHECK(one.L_inv == q_ints(1, {1}));
    }

    TEST_CASE("2x2 closed form matches the recursive path")
    {
        Rng rng(3);
        for (int trial = 0; trial < 50; ++trial) {
            long a = rng.uniform_int(1, 9), b = rng.uniform_int(-9, 9), c = rng.uniform_int(1, 9);
            BlockMatrix l = q_ints(2, {a, 0, b, c});
            BlockMatrix m = naive_multiply(l, transpose(l));
            CholeskyResult closed = cholesky_base(m);
            CholeskyResult rec = cholesky(m, {1});
            CHECK(closed.L == rec.L);
            CHECK(closed.L_inv == rec.L_inv);
        }
    }

    TEST_CASE("panel oracle")
    {
        for (std::size_t nb : {1, 2, 3, 4})
            CHECK(cholesky_panel_oracle(golden_a(), nb) == golden_l());
        CHECK(cholesky_panel_oracle(q_ints(2, {4, 0, 0, 9}), 1) == q_ints(2, {2, 0, 0, 3}));
    }

    TEST_CASE("panel oracle is exact in double for integer factors")
    {
        // every intermediate is an integer product or an exact quotient
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            SpdPair p = random_spd(seed, 32, kD);
            for (std::size_t nb : {4, 8, 12})
                CHECK(cholesky_panel_oracle(p.A, nb) == p.L);
        }
    }

    TEST_CASE("panel oracle and block recursion agree on well-conditioned input")
    {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            // diagonally dominant SPD: B + B^T + 2n I with B uniform in [0, 1)
            Rng rng(seed);
            std::vector<double> v(32 * 32);
            for (std::size_t i = 0; i < 32; ++i)
                for (std::size_t j = 0; j <= i; ++j)
                    v[i * 32 + j] = v[j * 32 + i] = i == j ? 64.0 + rng.uniform01() : rng.uniform01();
            BlockMatrix a = BlockMatrix::from_dense(32, kD, v);
            BlockMatrix rec = cholesky(a, {8}).L;
            BlockMatrix pan = cholesky_panel_oracle(a, 8);
            double worst = 0;
            for (std::size_t i = 0; i < 32; ++i) {
                for (std::size_t j = 0; j <= i; ++j) {
                    double x = rec.at(i, j).to_double(), y = pan.at(i, j).to_double();
                    double scale = std::max(std::abs(x), std::abs(y));
                    if (scale > 0)
                        worst = std::max(worst, std::abs(x - y) / scale);
                }
            }
            CHECK(worst <= 1e-8);
        }
    }

    TEST_CASE("contract errors")
    {
        BlockMatrix a4 = golden_a();
        CHECK(code_of([&] { multiply(a4, BlockMatrix::identity(8, kQ)); }) == Errc::SizeMismatch);
        CHECK(code_of([&] { multiply(a4, BlockMatrix::identity(4, kD)); }) == Errc::ModeMismatch);
        CHECK(code_of([&] { multiply(a4, a4, {3}); }) == Errc::InvalidArgument);
        CHECK(code_of([&] { multiply_accumulate(a4, a4, a4, 2); }) == Errc::InvalidArgument);
        CHECK(code_of([&] { invert_lower_triangular(a4); }) == Errc::NotLowerTriangular);
        CHECK(code_of([&] { invert_lower_triangular(q_ints(2, {1, 0, 3, 0})); }) == Errc::ZeroDiagonal);
        CHECK(code_of([&] { cholesky(golden_l()); }) == Errc::NotSymmetric);
        CHECK(code_of([&] { cholesky(q_ints(2, {1, 2, 2, 1})); }) == Errc::NotPositiveDefinite);
        CHECK(code_of([&] { cholesky(q_ints(2, {-4, 0, 0, 1})); }) == Errc::NotPositiveDefinite);
        CHECK(code_of([&] { cholesky(q_ints(2, {2, 0, 0, 1})); }) == Errc::RationalNotPerfectSquare);
        CHECK(code_of([&] { cholesky_base(q_ints(2, {1, 2, 2, 1})); }) == Errc::NotPositiveDefinite);
        CHECK(code_of([&] { cholesky_base(golden_a()); }) == Errc::InvalidArgument);
        CHECK(code_of([&] { cholesky_panel_oracle(q_ints(2, {1, 2, 2, 1}), 1); }) == Errc::NotPositiveDefinite);
        BlockMatrix nan = BlockMatrix::from_dense(1, kD, std::vector<double>{std::nan("")});
        CHECK(code_of([&] { cholesky_base(nan); }) == Errc::NotPositiveDefinite);
    }

    TEST_CASE("results do not depend on the leaf size")
    {
        const ScalarMode dec = ScalarMode::fixed_decimal(30);
        for (const ScalarMode& mode : {kD, dec}) {
            SpdPair p = random_spd(77, 32, mode);
            BlockMatrix l = random_lower_triangular(78, 32, mode);
            BlockMatrix b = random_spd(79, 32, mode).A;
            CholeskyResult base = cholesky(p.A, {1});
            BlockMatrix inv = invert_lower_triangular(l, {1});
            BlockMatrix prod = multiply(l, b, {1});
            for (std::size_t leaf : {2, 4, 8, 16, 32}) {
                CholeskyResult r = cholesky(p.A, {leaf});
                CHECK(same_bits(r.L, base.L));
                CHECK(same_bits(r.L_inv, base.L_inv));
                CHECK(same_bits(invert_lower_triangular(l, {leaf}), inv));
                CHECK(same_bits(multiply(l, b, {leaf}), prod));
            }
        }
    }

    TEST_CASE("quadtree inputs give the same results as dense copies")
    {
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            for (const ScalarMode& mode : {kD, kQ}) {
                BlockMatrix x = random_sparse(seed, 32, 0.3, mode);
                BlockMatrix y = random_sparse(seed + 9, 32, 0.3, mode);
                CHECK(same_bits(multiply(x, y, {4}), multiply(x.densified(), y.densified(), {4})));
                BlockMatrix l = random_sparse_lower_triangular(seed, 32, 0.3, mode);
                CHECK(same_bits(invert_lower_triangular(l, {4}), invert_lower_triangular(l.densified(), {4})));
            }
            SpdPair p = random_sparse_spd(seed, 32, 0.3, kQ);
            CholeskyResult sparse = cholesky(p.A, {4});
            CholeskyResult dense = cholesky(p.A.densified(), {4});
            CHECK(sparse.L == dense.L);
            CHECK(sparse.L_inv == dense.L_inv);
            CHECK(sparse.L == p.L);
        }
    }

    TEST_CASE("padded 3x3 factorization")
    {
        RectMatrix m = parse_matrix_text("3 3 rational\n4 2 6\n2 10 6\n6 6 14\n");
        BlockMatrix padded = embed(m, 4, PadScheme::IdentityPad);
        CholeskyResult r = cholesky(padded, {2});
        RectMatrix l = extract(r.L, 3, 3);
        CHECK(l == parse_matrix_text("3 3 rational\n2 0 0\n1 3 0\n3 1 2\n"));
        CHECK(r.L.at(3, 3) == Scalar::one(kQ));
    }

    TEST_CASE("op counter counts scalar multiplications")
    {
        reset_op_count();
        multiply(BlockMatrix::identity(8, kD), random_spd(1, 8, kD).A, {8});
        // one nonzero per row of the identity
        CHECK(op_count() == 64);
        reset_op_count();
        multiply(BlockMatrix::zero(8, kD), random_spd(1, 8, kD).A, {8});
        CHECK(op_count() == 0);
    }
}
