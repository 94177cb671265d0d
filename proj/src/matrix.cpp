#include "dap/matrix.hpp"

#include "dap/errors.hpp"
#include "element.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace dap {

using namespace detail;

struct BlockMatrix::Node {
    StorageKind kind = StorageKind::Zero;
    std::size_t n = 1;
    ScalarMode mode;
    DenseData dense;
    std::vector<BlockMatrix> kids; // four entries for Quad, empty otherwise
};

bool is_power_of_two(std::size_t n) noexcept
{
    return n != 0 && (n & (n - 1)) == 0;
}

namespace {

void require_size(std::size_t n)
{
    if (!is_power_of_two(n))
        fail(Errc::NotPowerOfTwo, "matrix side " + std::to_string(n) + " is not a power of two");
}

void require_conformant(const BlockMatrix& x, const BlockMatrix& y)
{
    if (x.size() != y.size())
        fail(Errc::SizeMismatch, std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    if (!(x.mode() == y.mode()))
        fail(Errc::ModeMismatch, x.mode().to_string() + " vs " + y.mode().to_string());
}

bool dense_matches_mode(const DenseData& data, const ScalarMode& mode)
{
    switch (mode.kind()) {
    case ScalarKind::Double: return std::holds_alternative<std::vector<double>>(data);
    case ScalarKind::Rational: return std::holds_alternative<std::vector<Rational>>(data);
    case ScalarKind::FixedDecimal: {
        auto* v = std::get_if<std::vector<Decimal>>(&data);
        return v && std::all_of(v->begin(), v->end(), [&](const Decimal& e) { return e.digits() == mode.digits(); });
    }
    }
    return false;
}

template <class T>
void write_into(const BlockMatrix& m, std::vector<T>& out, std::size_t stride, std::size_t r0, std::size_t c0)
{
    const std::size_t n = m.size();
    switch (m.storage()) {
    case StorageKind::Zero: return; // out is zero-initialized
    case StorageKind::Dense: {
        const auto& src = std::get<std::vector<T>>(m.dense());
        for (std::size_t i = 0; i < n; ++i)
            std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(i * n), n,
                out.begin() + static_cast<std::ptrdiff_t>((r0 + i) * stride + c0));
        return;
    }
    case StorageKind::Quad: {
        const std::size_t h = n / 2;
        write_into<T>(m.child(0), out, stride, r0, c0);
        write_into<T>(m.child(1), out, stride, r0, c0 + h);
        write_into<T>(m.child(2), out, stride, r0 + h, c0);
        write_into<T>(m.child(3), out, stride, r0 + h, c0 + h);
        return;
    }
    }
}

template <class T>
std::vector<T> sub_block(const std::vector<T>& src, std::size_t n, std::size_t r0, std::size_t c0, std::size_t h)
{
    std::vector<T> out;
    out.reserve(h * h);
    for (std::size_t i = 0; i < h; ++i) {
        auto row = src.begin() + static_cast<std::ptrdiff_t>((r0 + i) * n + c0);
        out.insert(out.end(), row, row + static_cast<std::ptrdiff_t>(h));
    }
    return out;
}

template <class T>
bool all_zero(const std::vector<T>& v)
{
    return std::all_of(v.begin(), v.end(), [](const T& e) { return elem_is_zero(e); });
}

BlockMatrix drop_zero_leaf(const BlockMatrix& m)
{
    if (m.storage() == StorageKind::Dense && m.is_zero())
        return BlockMatrix::zero(m.size(), m.mode());
    return m;
}

} // namespace

// ---------------------------------------------------------------------------

BlockMatrix::BlockMatrix()
    : node_(std::make_shared<Node>())
{
}

BlockMatrix BlockMatrix::zero(std::size_t n, const ScalarMode& mode)
{
    require_size(n);
    auto node = std::make_shared<Node>();
    node->kind = StorageKind::Zero;
    node->n = n;
    node->mode = mode;
    return BlockMatrix(std::move(node));
}

BlockMatrix BlockMatrix::dense_zero(std::size_t n, const ScalarMode& mode)
{
    require_size(n);
    return from_dense(n, mode, make_dense_zero(n * n, mode));
}

BlockMatrix BlockMatrix::identity(std::size_t n, const ScalarMode& mode)
{
    require_size(n);
    DenseData data = make_dense_zero(n * n, mode);
    std::visit(
        [&](auto& v) {
            using T = typename std::decay_t<decltype(v)>::value_type;
            for (std::size_t i = 0; i < n; ++i)
                v[i * n + i] = elem_from_int<T>(1, mode);
        },
        data);
    return from_dense(n, mode, std::move(data));
}

BlockMatrix BlockMatrix::from_dense(std::size_t n, const ScalarMode& mode, DenseData data)
{
    require_size(n);
    std::size_t count = std::visit([](auto& v) { return v.size(); }, data);
    if (count != n * n)
        fail(Errc::SizeMismatch, "dense data has " + std::to_string(count) + " entries for side " + std::to_string(n));
    if (!dense_matches_mode(data, mode))
        fail(Errc::ModeMismatch, "dense data does not match mode " + mode.to_string());
    auto node = std::make_shared<Node>();
    node->kind = StorageKind::Dense;
    node->n = n;
    node->mode = mode;
    node->dense = std::move(data);
    return BlockMatrix(std::move(node));
}

BlockMatrix BlockMatrix::from_scalars(std::size_t n, const ScalarMode& mode, const std::vector<Scalar>& values)
{
    if (values.size() != n * n)
        fail(Errc::SizeMismatch, "expected " + std::to_string(n * n) + " values");
    DenseData data = dispatch_mode(mode, [&](auto tag) -> DenseData {
        using T = decltype(tag);
        std::vector<T> v;
        v.reserve(values.size());
        for (const auto& s : values) {
            if (!(s.mode() == mode))
                fail(Errc::ModeMismatch, s.mode().to_string() + " entry in " + mode.to_string() + " matrix");
            v.push_back(elem_from_scalar<T>(s));
        }
        return v;
    });
    return from_dense(n, mode, std::move(data));
}

BlockMatrix BlockMatrix::from_ints(std::size_t n, const ScalarMode& mode, const std::vector<long>& values)
{
    if (values.size() != n * n)
        fail(Errc::SizeMismatch, "expected " + std::to_string(n * n) + " values");
    DenseData data = dispatch_mode(mode, [&](auto tag) -> DenseData {
        using T = decltype(tag);
        std::vector<T> v;
        v.reserve(values.size());
        for (long x : values)
            v.push_back(elem_from_int<T>(x, mode));
        return v;
    });
    return from_dense(n, mode, std::move(data));
}

std::size_t BlockMatrix::size() const noexcept
{
    return node_->n;
}

const ScalarMode& BlockMatrix::mode() const noexcept
{
    return node_->mode;
}

StorageKind BlockMatrix::storage() const noexcept
{
    return node_->kind;
}

const DenseData& BlockMatrix::dense() const
{
    if (node_->kind != StorageKind::Dense)
        fail(Errc::InvalidArgument, "matrix is not dense");
    return node_->dense;
}

const BlockMatrix& BlockMatrix::child(int k) const
{
    if (node_->kind != StorageKind::Quad || k < 0 || k > 3)
        fail(Errc::InvalidArgument, "matrix is not a quadtree node");
    return node_->kids[static_cast<std::size_t>(k)];
}

Scalar BlockMatrix::at(std::size_t i, std::size_t j) const
{
    if (i >= size() || j >= size())
        fail(Errc::InvalidArgument, "index out of range");
    const BlockMatrix* m = this;
    while (m->storage() == StorageKind::Quad) {
        std::size_t h = m->size() / 2;
        int k = (i >= h ? 2 : 0) + (j >= h ? 1 : 0);
        i %= h;
        j %= h;
        m = &m->child(k);
    }
    if (m->storage() == StorageKind::Zero)
        return Scalar::zero(mode());
    std::size_t n = m->size();
    return std::visit([&](const auto& v) { return elem_to_scalar(v[i * n + j]); }, m->dense());
}

DenseData BlockMatrix::dense_data() const
{
    if (storage() == StorageKind::Dense)
        return node_->dense;
    DenseData out = make_dense_zero(size() * size(), mode());
    std::visit(
        [&](auto& v) {
            using T = typename std::decay_t<decltype(v)>::value_type;
            write_into<T>(*this, v, size(), 0, 0);
        },
        out);
    return out;
}

BlockMatrix BlockMatrix::densified() const
{
    if (storage() == StorageKind::Dense)
        return *this;
    return from_dense(size(), mode(), dense_data());
}

BlockMatrix BlockMatrix::to_quadtree(std::size_t threshold) const
{
    if (threshold == 0)
        threshold = 1;
    if (is_zero())
        return zero(size(), mode());
    if (size() <= threshold)
        return densified();
    QuadSplit q = split_quad(*this);
    return make_quad(q.a.to_quadtree(threshold), q.b.to_quadtree(threshold), q.c.to_quadtree(threshold),
        q.d.to_quadtree(threshold));
}

bool BlockMatrix::is_zero() const
{
    switch (storage()) {
    case StorageKind::Zero: return true;
    case StorageKind::Dense: return std::visit([](const auto& v) { return all_zero(v); }, node_->dense);
    case StorageKind::Quad:
        return std::all_of(node_->kids.begin(), node_->kids.end(), [](const BlockMatrix& k) { return k.is_zero(); });
    }
    return true;
}

std::size_t BlockMatrix::nonzeros() const
{
    switch (storage()) {
    case StorageKind::Zero: return 0;
    case StorageKind::Dense:
        return std::visit(
            [](const auto& v) {
                return static_cast<std::size_t>(
                    std::count_if(v.begin(), v.end(), [](const auto& e) { return !elem_is_zero(e); }));
            },
            node_->dense);
    case StorageKind::Quad: {
        std::size_t total = 0;
        for (const auto& k : node_->kids)
            total += k.nonzeros();
        return total;
    }
    }
    return 0;
}

std::string BlockMatrix::to_text() const
{
    return to_rect(*this).to_text();
}

bool operator==(const BlockMatrix& x, const BlockMatrix& y)
{
    if (x.size() != y.size() || !(x.mode() == y.mode()))
        return false;
    if (x.node_ == y.node_)
        return true;
    if (x.storage() == StorageKind::Zero || y.storage() == StorageKind::Zero)
        return x.is_zero() && y.is_zero();
    if (x.storage() == StorageKind::Quad && y.storage() == StorageKind::Quad) {
        for (int k = 0; k < 4; ++k)
            if (!(x.child(k) == y.child(k)))
                return false;
        return true;
    }
    return x.dense_data() == y.dense_data();
}

// ---------------------------------------------------------------------------
// split / join

QuadSplit split_quad(const BlockMatrix& m)
{
    const std::size_t n = m.size();
    if (n < 2)
        fail(Errc::SizeOne, "cannot split a 1x1 matrix");
    const std::size_t h = n / 2;
    switch (m.storage()) {
    case StorageKind::Zero: {
        auto z = BlockMatrix::zero(h, m.mode());
        return {z, z, z, z};
    }
    case StorageKind::Quad: return {m.child(0), m.child(1), m.child(2), m.child(3)};
    case StorageKind::Dense: break;
    }
    return std::visit(
        [&](const auto& v) {
            auto part = [&](std::size_t r0, std::size_t c0) {
                return BlockMatrix::from_dense(h, m.mode(), sub_block(v, n, r0, c0, h));
            };
            return QuadSplit{part(0, 0), part(0, h), part(h, 0), part(h, h)};
        },
        m.dense());
}

namespace {

void require_quad_children(const BlockMatrix& a, const BlockMatrix& b, const BlockMatrix& c, const BlockMatrix& d)
{
    for (const BlockMatrix* k : {&b, &c, &d})
        if (k->size() != a.size())
            fail(Errc::SizeMismatch, "quadrants of different sizes");
        else if (!(k->mode() == a.mode()))
            fail(Errc::ModeMismatch, "quadrants of different modes");
}

} // namespace

BlockMatrix BlockMatrix::make_quad(BlockMatrix a, BlockMatrix b, BlockMatrix c, BlockMatrix d)
{
    require_quad_children(a, b, c, d);
    a = drop_zero_leaf(a);
    b = drop_zero_leaf(b);
    c = drop_zero_leaf(c);
    d = drop_zero_leaf(d);
    const std::size_t n = 2 * a.size();
    if (a.storage() == StorageKind::Zero && b.storage() == StorageKind::Zero && c.storage() == StorageKind::Zero &&
        d.storage() == StorageKind::Zero)
        return zero(n, a.mode());
    auto node = std::make_shared<Node>();
    node->kind = StorageKind::Quad;
    node->n = n;
    node->mode = a.mode();
    node->kids = {std::move(a), std::move(b), std::move(c), std::move(d)};
    return BlockMatrix(std::move(node));
}

BlockMatrix join_quad(BlockMatrix a, BlockMatrix b, BlockMatrix c, BlockMatrix d)
{
    require_quad_children(a, b, c, d);
    const std::size_t h = a.size();
    const std::size_t n = 2 * h;
    const std::array<const BlockMatrix*, 4> kids{&a, &b, &c, &d};
    bool all_zero_kids = std::all_of(kids.begin(), kids.end(), [](auto* k) { return k->storage() == StorageKind::Zero; });
    if (all_zero_kids)
        return BlockMatrix::zero(n, a.mode());
    bool all_dense = std::all_of(kids.begin(), kids.end(), [](auto* k) { return k->storage() == StorageKind::Dense; });
    if (all_dense) {
        DenseData out = make_dense_zero(n * n, a.mode());
        std::visit(
            [&](auto& v) {
                using T = typename std::decay_t<decltype(v)>::value_type;
                write_into<T>(a, v, n, 0, 0);
                write_into<T>(b, v, n, 0, h);
                write_into<T>(c, v, n, h, 0);
                write_into<T>(d, v, n, h, h);
            },
            out);
        return BlockMatrix::from_dense(n, a.mode(), std::move(out));
    }
    return BlockMatrix::make_quad(std::move(a), std::move(b), std::move(c), std::move(d));
}

BlockMatrix join_quad(const QuadSplit& q)
{
    return join_quad(q.a, q.b, q.c, q.d);
}

BlockMatrix zeros_like(const BlockMatrix& proto)
{
    if (proto.storage() == StorageKind::Dense)
        return BlockMatrix::dense_zero(proto.size(), proto.mode());
    return BlockMatrix::zero(proto.size(), proto.mode());
}

// ---------------------------------------------------------------------------
// elementwise and transpose

namespace {

template <class T>
std::vector<T> dense_binary(ElementOp op, const std::vector<T>& x, const std::vector<T>& y)
{
    std::vector<T> out;
    out.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out.push_back(op == ElementOp::Add ? T(x[i] + y[i]) : T(x[i] - y[i]));
    return out;
}

template <class T>
std::vector<T> dense_neg(const std::vector<T>& x)
{
    std::vector<T> out;
    out.reserve(x.size());
    for (const auto& e : x)
        out.push_back(T(-e));
    return out;
}

BlockMatrix neg_impl(const BlockMatrix& x)
{
    switch (x.storage()) {
    case StorageKind::Zero: return x;
    case StorageKind::Dense:
        return BlockMatrix::from_dense(
            x.size(), x.mode(), std::visit([](const auto& v) -> DenseData { return dense_neg(v); }, x.dense()));
    case StorageKind::Quad: break;
    }
    return BlockMatrix::make_quad(neg_impl(x.child(0)), neg_impl(x.child(1)), neg_impl(x.child(2)), neg_impl(x.child(3)));
}

BlockMatrix binary_impl(ElementOp op, const BlockMatrix& x, const BlockMatrix& y)
{
    if (y.storage() == StorageKind::Zero)
        return x;
    if (x.storage() == StorageKind::Zero)
        return op == ElementOp::Add ? y : neg_impl(y);
    if (x.storage() == StorageKind::Dense && y.storage() == StorageKind::Dense) {
        DenseData out = std::visit(
            [&](const auto& xv) -> DenseData {
                using V = std::decay_t<decltype(xv)>;
                return dense_binary(op, xv, std::get<V>(y.dense()));
            },
            x.dense());
        return BlockMatrix::from_dense(x.size(), x.mode(), std::move(out));
    }
    QuadSplit qx = split_quad(x), qy = split_quad(y);
    return BlockMatrix::make_quad(binary_impl(op, qx.a, qy.a), binary_impl(op, qx.b, qy.b), binary_impl(op, qx.c, qy.c),
        binary_impl(op, qx.d, qy.d));
}

template <class T>
std::vector<T> dense_transpose(const std::vector<T>& v, std::size_t n)
{
    std::vector<T> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out.push_back(v[j * n + i]);
    return out;
}

} // namespace

BlockMatrix elementwise(ElementOp op, const BlockMatrix& x, const BlockMatrix* y)
{
    if (op == ElementOp::Neg)
        return neg_impl(x);
    if (y == nullptr)
        fail(Errc::InvalidArgument, "binary elementwise operation needs two operands");
    require_conformant(x, *y);
    return binary_impl(op, x, *y);
}

BlockMatrix add(const BlockMatrix& x, const BlockMatrix& y)
{
    return elementwise(ElementOp::Add, x, &y);
}

BlockMatrix sub(const BlockMatrix& x, const BlockMatrix& y)
{
    return elementwise(ElementOp::Sub, x, &y);
}

BlockMatrix neg(const BlockMatrix& x)
{
    return elementwise(ElementOp::Neg, x);
}

BlockMatrix transpose(const BlockMatrix& x)
{
    switch (x.storage()) {
    case StorageKind::Zero: return x;
    case StorageKind::Dense:
        return BlockMatrix::from_dense(x.size(), x.mode(),
            std::visit([&](const auto& v) -> DenseData { return dense_transpose(v, x.size()); }, x.dense()));
    case StorageKind::Quad: break;
    }
    return BlockMatrix::make_quad(
        transpose(x.child(0)), transpose(x.child(2)), transpose(x.child(1)), transpose(x.child(3)));
}

double density(const BlockMatrix& x)
{
    const double n = static_cast<double>(x.size());
    return static_cast<double>(x.nonzeros()) / (n * n);
}

bool is_lower_triangular(const BlockMatrix& x)
{
    switch (x.storage()) {
    case StorageKind::Zero: return true;
    case StorageKind::Quad:
        return x.child(1).is_zero() && is_lower_triangular(x.child(0)) && is_lower_triangular(x.child(3));
    case StorageKind::Dense: break;
    }
    const std::size_t n = x.size();
    return std::visit(
        [&](const auto& v) {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    if (!elem_is_zero(v[i * n + j]))
                        return false;
            return true;
        },
        x.dense());
}

bool is_symmetric(const BlockMatrix& x)
{
    return x == transpose(x);
}

// ---------------------------------------------------------------------------
// text form

std::string RectMatrix::to_text() const
{
    std::string out = std::to_string(rows) + " " + std::to_string(cols) + " " + mode.to_string() + "\n";
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (j)
                out += ' ';
            out += at(i, j).to_string();
        }
        out += '\n';
    }
    return out;
}

RectMatrix parse_matrix_text(std::string_view text)
{
    std::istringstream in{std::string(text)};
    std::string header;
    while (std::getline(in, header))
        if (header.find_first_not_of(" \t\r") != std::string::npos)
            break;
    std::istringstream hs(header);
    long long rows = -1, cols = -1;
    std::string mode_text, extra;
    if (!(hs >> rows >> cols >> mode_text) || (hs >> extra) || rows <= 0 || cols <= 0 || rows > 1 << 20 ||
        cols > 1 << 20)
        fail(Errc::ParseError, "bad matrix header: '" + header + "'");
    RectMatrix m;
    m.rows = static_cast<std::size_t>(rows);
    m.cols = static_cast<std::size_t>(cols);
    m.mode = ScalarMode::parse(mode_text);
    m.data.reserve(m.rows * m.cols);
    std::string line;
    std::size_t row = 0;
    while (row < m.rows && std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::istringstream ls(line);
        std::string tok;
        std::size_t count = 0;
        while (ls >> tok) {
            m.data.push_back(Scalar::parse(tok, m.mode));
            ++count;
        }
        if (count != m.cols)
            fail(Errc::ParseError, "row " + std::to_string(row) + " has " + std::to_string(count) + " entries, expected " +
                    std::to_string(m.cols));
        ++row;
    }
    if (row != m.rows)
        fail(Errc::ParseError, "expected " + std::to_string(m.rows) + " rows, got " + std::to_string(row));
    while (std::getline(in, line))
        if (line.find_first_not_of(" \t\r") != std::string::npos)
            fail(Errc::ParseError, "trailing content after matrix");
    return m;
}

BlockMatrix parse_block_matrix(std::string_view text)
{
    RectMatrix r = parse_matrix_text(text);
    if (r.rows != r.cols)
        fail(Errc::SizeMismatch, "block matrix must be square");
    return BlockMatrix::from_scalars(r.rows, r.mode, r.data);
}

// ---------------------------------------------------------------------------
// embed / extract

BlockMatrix embed(const RectMatrix& x, std::size_t target_size, PadScheme scheme)
{
    if (target_size < std::max(x.rows, x.cols))
        fail(Errc::TargetTooSmall,
            std::to_string(x.rows) + "x" + std::to_string(x.cols) + " into " + std::to_string(target_size));
    require_size(target_size);
    std::vector<Scalar> values(target_size * target_size, Scalar::zero(x.mode));
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j)
            values[i * target_size + j] = x.at(i, j);
    if (scheme == PadScheme::IdentityPad)
        for (std::size_t i = 0; i < target_size; ++i)
            if (i >= x.rows || i >= x.cols)
                values[i * target_size + i] = Scalar::one(x.mode);
    return BlockMatrix::from_scalars(target_size, x.mode, values);
}

RectMatrix extract(const BlockMatrix& x, std::size_t rows, std::size_t cols)
{
    if (rows > x.size() || cols > x.size())
        fail(Errc::SizeMismatch, "extract region exceeds matrix");
    RectMatrix r;
    r.rows = rows;
    r.cols = cols;
    r.mode = x.mode();
    r.data.reserve(rows * cols);
    DenseData d = x.dense_data();
    std::visit(
        [&](const auto& v) {
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < cols; ++j)
                    r.data.push_back(elem_to_scalar(v[i * x.size() + j]));
        },
        d);
    return r;
}

RectMatrix to_rect(const BlockMatrix& x)
{
    return extract(x, x.size(), x.size());
}

// ---------------------------------------------------------------------------
// generators

long Rng::uniform_int(long lo, long hi)
{
    if (hi < lo)
        fail(Errc::InvalidArgument, "empty integer range");
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    if (range == 0)
        return lo + static_cast<long>(next());
    const std::uint64_t threshold = (0 - range) % range;
    for (;;) {
        std::uint64_t r = next();
        if (r >= threshold)
            return lo + static_cast<long>(r % range);
    }
}

double Rng::uniform01()
{
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

namespace {

void require_density(double density)
{
    if (!(density > 0.0 && density <= 1.0))
        fail(Errc::BadDensity, "density must be in (0, 1], got " + std::to_string(density));
}

template <class F>
BlockMatrix generate_ints(std::size_t n, const ScalarMode& mode, F&& entry)
{
    require_size(n);
    std::vector<long> values(n * n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            values[i * n + j] = entry(i, j);
    return BlockMatrix::from_ints(n, mode, values);
}

long nonzero_draw(Rng& rng, long lo, long hi)
{
    if (lo == 0 && hi == 0)
        fail(Errc::InvalidArgument, "value range contains only zero");
    for (;;) {
        long v = rng.uniform_int(lo, hi);
        if (v != 0)
            return v;
    }
}

} // namespace

BlockMatrix random_lower_triangular(std::uint64_t seed, std::size_t n, const ScalarMode& mode, long lo, long hi)
{
    Rng rng(seed);
    return generate_ints(n, mode, [&](std::size_t i, std::size_t j) { return j <= i ? nonzero_draw(rng, lo, hi) : 0L; });
}

SpdPair random_spd(std::uint64_t seed, std::size_t n, const ScalarMode& mode, long lo, long hi)
{
    BlockMatrix L = random_lower_triangular(seed, n, mode, lo, hi);
    return {L, naive_multiply(L, transpose(L))};
}

BlockMatrix random_sparse(std::uint64_t seed, std::size_t n, double density, const ScalarMode& mode, long lo, long hi)
{
    require_density(density);
    Rng rng(seed);
    return generate_ints(n, mode, [&](std::size_t, std::size_t) {
        return rng.uniform01() < density ? nonzero_draw(rng, lo, hi) : 0L;
    }).to_quadtree();
}

BlockMatrix random_sparse_lower_triangular(std::uint64_t seed, std::size_t n, double density, const ScalarMode& mode,
    long lo, long hi)
{
    require_density(density);
    Rng rng(seed);
    return generate_ints(n, mode, [&](std::size_t i, std::size_t j) {
        if (j > i)
            return 0L;
        if (j == i)
            return nonzero_draw(rng, lo, hi);
        return rng.uniform01() < density ? nonzero_draw(rng, lo, hi) : 0L;
    }).to_quadtree();
}

SpdPair random_sparse_spd(std::uint64_t seed, std::size_t n, double density, const ScalarMode& mode, long lo, long hi)
{
    BlockMatrix L = random_sparse_lower_triangular(seed, n, density, mode, lo, hi);
    return {L, naive_multiply(L, transpose(L)).to_quadtree()};
}

BlockMatrix naive_multiply(const BlockMatrix& x, const BlockMatrix& y)
{
    require_conformant(x, y);
    const std::size_t n = x.size();
    DenseData xd = x.dense_data(), yd = y.dense_data();
    DenseData out = std::visit(
        [&](const auto& xv) -> DenseData {
            using V = std::decay_t<decltype(xv)>;
            using T = typename V::value_type;
            const auto& yv = std::get<V>(yd);
            V res = zero_vector<T>(n * n, x.mode());
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    T acc = elem_from_int<T>(0, x.mode());
                    for (std::size_t k = 0; k < n; ++k)
                        acc = acc + xv[i * n + k] * yv[k * n + j];
                    res[i * n + j] = acc;
                }
            return res;
        },
        xd);
    return BlockMatrix::from_dense(n, x.mode(), std::move(out));
}

} // namespace dap
