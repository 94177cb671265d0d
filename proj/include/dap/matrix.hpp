#pragma once
//
// Square power-of-two block matrices.  A matrix is immutable and stored
// either as a dense row-major array, as a quadtree node with four children,
// or as an empty subtree (all zeros, no storage).
//

#include "dap/scalar.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace dap {

using DenseData = std::variant<std::vector<double>, std::vector<Decimal>, std::vector<Rational>>;

enum class StorageKind : std::uint8_t { Zero, Dense, Quad };

inline constexpr std::size_t kDefaultDensifyThreshold = 16;

bool is_power_of_two(std::size_t n) noexcept;

class BlockMatrix {
public:
    // 1x1 zero in double mode
    BlockMatrix();

    static BlockMatrix zero(std::size_t n, const ScalarMode& mode);
    static BlockMatrix dense_zero(std::size_t n, const ScalarMode& mode);
    static BlockMatrix identity(std::size_t n, const ScalarMode& mode);
    // row-major; element type must agree with mode
    static BlockMatrix from_dense(std::size_t n, const ScalarMode& mode, DenseData data);
    static BlockMatrix from_scalars(std::size_t n, const ScalarMode& mode, const std::vector<Scalar>& values);
    static BlockMatrix from_ints(std::size_t n, const ScalarMode& mode, const std::vector<long>& values);
    // quadtree node that keeps its shape even when every child is dense;
    // all-zero dense children become empty subtrees
    static BlockMatrix make_quad(BlockMatrix a, BlockMatrix b, BlockMatrix c, BlockMatrix d);

    std::size_t size() const noexcept;
    const ScalarMode& mode() const noexcept;
    StorageKind storage() const noexcept;

    // Dense storage only
    const DenseData& dense() const;
    // Quad storage only; 0=a (top-left), 1=b, 2=c, 3=d
    const BlockMatrix& child(int k) const;

    Scalar at(std::size_t i, std::size_t j) const;

    // row-major copy regardless of storage
    DenseData dense_data() const;
    BlockMatrix densified() const;
    // leaves of side <= threshold are dense, all-zero leaves become empty subtrees
    BlockMatrix to_quadtree(std::size_t threshold = kDefaultDensifyThreshold) const;

    bool is_zero() const;
    std::size_t nonzeros() const;

    // "n n mode" header, then one row per line
    std::string to_text() const;

    // logical (elementwise) equality; storage may differ
    friend bool operator==(const BlockMatrix& x, const BlockMatrix& y);

    struct Node;

private:
    explicit BlockMatrix(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    std::shared_ptr<const Node> node_;
};

struct QuadSplit {
    BlockMatrix a, b, c, d;
};

QuadSplit split_quad(const BlockMatrix& m);
// all children empty -> empty; all dense -> dense; otherwise a quadtree node
BlockMatrix join_quad(BlockMatrix a, BlockMatrix b, BlockMatrix c, BlockMatrix d);
BlockMatrix join_quad(const QuadSplit& q);

// zero block shaped like proto: dense zeros for dense proto, empty otherwise
BlockMatrix zeros_like(const BlockMatrix& proto);

enum class ElementOp { Add, Sub, Neg };

BlockMatrix elementwise(ElementOp op, const BlockMatrix& x, const BlockMatrix* y = nullptr);
BlockMatrix add(const BlockMatrix& x, const BlockMatrix& y);
BlockMatrix sub(const BlockMatrix& x, const BlockMatrix& y);
BlockMatrix neg(const BlockMatrix& x);
BlockMatrix transpose(const BlockMatrix& x);

double density(const BlockMatrix& x);

bool is_lower_triangular(const BlockMatrix& x);
bool is_symmetric(const BlockMatrix& x);

// ---------------------------------------------------------------------------
// rectangular matrices at the edges (input files, embedding, extraction)

struct RectMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    ScalarMode mode;
    std::vector<Scalar> data; // row-major

    const Scalar& at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    std::string to_text() const;
    friend bool operator==(const RectMatrix&, const RectMatrix&) = default;
};

RectMatrix parse_matrix_text(std::string_view text);
BlockMatrix parse_block_matrix(std::string_view text);

enum class PadScheme { ZeroPad, IdentityPad };

BlockMatrix embed(const RectMatrix& x, std::size_t target_size, PadScheme scheme);
RectMatrix extract(const BlockMatrix& x, std::size_t rows, std::size_t cols);
RectMatrix to_rect(const BlockMatrix& x);

// ---------------------------------------------------------------------------
// seeded generators

// mt19937_64 with rejection-sampled bounded integers, so draws do not depend
// on the standard library's distribution implementation
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t next() { return engine_(); }
    // uniform in [lo, hi]
    long uniform_int(long lo, long hi);
    // uniform in [0, 1) with 53 random bits
    double uniform01();

private:
    std::mt19937_64 engine_;
};

BlockMatrix random_lower_triangular(std::uint64_t seed, std::size_t n, const ScalarMode& mode, long lo = 1,
    long hi = 9);

struct SpdPair {
    BlockMatrix L;
    BlockMatrix A;
};

// A = L * L^T from random_lower_triangular
SpdPair random_spd(std::uint64_t seed, std::size_t n, const ScalarMode& mode, long lo = 1, long hi = 9);

// each entry nonzero with probability `density`, values uniform in [lo, hi];
// stored as a quadtree
BlockMatrix random_sparse(std::uint64_t seed, std::size_t n, double density, const ScalarMode& mode, long lo = 1,
    long hi = 9);

// sparse strictly-lower part, full nonzero diagonal
BlockMatrix random_sparse_lower_triangular(std::uint64_t seed, std::size_t n, double density,
    const ScalarMode& mode, long lo = 1, long hi = 9);

SpdPair random_sparse_spd(std::uint64_t seed, std::size_t n, double density, const ScalarMode& mode, long lo = 1,
    long hi = 9);

// plain triple loop in the matrix mode; used by the generators and as a
// reference in tests
BlockMatrix naive_multiply(const BlockMatrix& x, const BlockMatrix& y);

} // namespace dap
