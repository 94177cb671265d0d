#pragma once
//
// Block-recursive multiplication, lower-triangular inversion and Cholesky
// factorization.  Each algorithm exists as a plain recursive function and
// as an amine topology registered in the standard catalog.
//
// Dense kernels sum products in a balanced binary tree over the inner index,
// so the quad recursion and the leaf kernel associate sums identically and
// the results do not depend on the leaf size.
//

#include "dap/matrix.hpp"
#include "dap/task_graph.hpp"

#include <cstdint>

namespace dap {

struct LeafConfig {
    std::size_t leaf_size = 8;
};

// throws InvalidArgument unless leaf_size is a power of two
void validate_leaf(const LeafConfig& cfg);

struct CholeskyResult {
    BlockMatrix L;
    BlockMatrix L_inv;
};

BlockMatrix multiply(const BlockMatrix& a, const BlockMatrix& b, const LeafConfig& cfg = {});
// c + sign * (a * b), sign is +1 or -1
BlockMatrix multiply_accumulate(
    const BlockMatrix& a, const BlockMatrix& b, const BlockMatrix& c, int sign, const LeafConfig& cfg = {});
BlockMatrix invert_lower_triangular(const BlockMatrix& a, const LeafConfig& cfg = {});
CholeskyResult cholesky(const BlockMatrix& a, const LeafConfig& cfg = {});
// closed forms for 1x1 and 2x2 inputs
CholeskyResult cholesky_base(const BlockMatrix& a);
// standard right-looking block algorithm with panel width nb, scalar
// Cholesky on the diagonal blocks; returns L only
BlockMatrix cholesky_panel_oracle(const BlockMatrix& a, std::size_t nb);

// ---------------------------------------------------------------------------
// drop types and topologies

// values equal the ids in standard_catalog()
enum class DropType : graph::DropTypeId {
    Multiply = 0,
    MultiplyAdd = 1,
    MultiplySub = 2,
    MultiplyNeg = 3,
    TransMultiply = 4, // x^T * y
    TransMultiplySub = 5, // c - x^T * y
    InvertLower = 6,
    Cholesky = 7,
};

inline graph::DropTypeId id_of(DropType t) { return static_cast<graph::DropTypeId>(t); }
const char* to_string(DropType t);

enum class Algorithm { Multiply, TriangularInverse, Cholesky };

struct Topology {
    graph::ArcsTable arcs;
    std::vector<graph::DropTypeId> drop_types;
};

Topology amine_topology(Algorithm alg);

// drop types 0..7 with their amine types; built once
const graph::Catalog& standard_catalog();

// scalar multiplications and divisions performed by kernels on this thread
std::uint64_t op_count() noexcept;
void reset_op_count() noexcept;

} // namespace dap
