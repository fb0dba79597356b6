#pragma once

/// @brief Uniform Cartesian grids in one or two dimensions and nodal fields on them.
///
/// Nodes are stored row-major with the last axis fastest. One-dimensional grids
/// use the same two-component point type with the second coordinate pinned to 0,
/// so Euclidean distances need no special casing.

#include "fbflow/errors.hpp"
#include "fbflow/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace fbflow {

using Point = std::array<double, 2>;

inline double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(const Point& a) { return std::hypot(a[0], a[1]); }
inline Point operator+(const Point& a, const Point& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Point operator-(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Point operator*(double s, const Point& a) { return {s * a[0], s * a[1]}; }

/// Multi-index of a node or a cell. In 1D the second index is always 0.
struct Index {
    std::size_t i = 0;
    std::size_t j = 0;
    friend bool operator==(const Index&, const Index&) = default;
};

class Grid {
public:
    Grid() = default;

    static Grid line(double origin, double extent, std::size_t n) {
        return Grid(1, {origin, 0.0}, {extent, 0.0}, {n, 1});
    }

    static Grid rect(Point origin, Point extent, std::array<std::size_t, 2> n) {
        return Grid(2, origin, extent, n);
    }

    int dim() const { return dim_; }
    const Point& origin() const { return origin_; }
    const Point& extent() const { return extent_; }
    const Point& h() const { return h_; }
    const std::array<std::size_t, 2>& n() const { return n_; }

    std::size_t node_count() const { return n_[0] * n_[1]; }
    std::size_t cells(int axis) const { return dim_ == 1 && axis == 1 ? 1 : n_[axis] - 1; }
    std::size_t cell_count() const { return cells(0) * cells(1); }
    double cell_volume() const { return dim_ == 1 ? h_[0] : h_[0] * h_[1]; }
    double measure() const { return dim_ == 1 ? extent_[0] : extent_[0] * extent_[1]; }
    double min_h() const { return dim_ == 1 ? h_[0] : std::min(h_[0], h_[1]); }

    std::size_t node_id(std::size_t i, std::size_t j = 0) const { return i * n_[1] + j; }
    Index node_index(std::size_t id) const { return {id / n_[1], id % n_[1]}; }
    std::size_t cell_id(const Index& c) const { return c.i * cells(1) + c.j; }
    Index cell_index(std::size_t id) const { return {id / cells(1), id % cells(1)}; }

    Point node(std::size_t i, std::size_t j = 0) const {
        return {origin_[0] + static_cast<double>(i) * h_[0],
                dim_ == 1 ? 0.0 : origin_[1] + static_cast<double>(j) * h_[1]};
    }
    Point node(const Index& k) const { return node(k.i, k.j); }

    Point cell_center(const Index& c) const {
        return {origin_[0] + (static_cast<double>(c.i) + 0.5) * h_[0],
                dim_ == 1 ? 0.0 : origin_[1] + (static_cast<double>(c.j) + 0.5) * h_[1]};
    }

    bool is_boundary(std::size_t i, std::size_t j = 0) const {
        if (i == 0 || i + 1 == n_[0]) return true;
        return dim_ == 2 && (j == 0 || j + 1 == n_[1]);
    }
    bool is_boundary_id(std::size_t id) const {
        const Index k = node_index(id);
        return is_boundary(k.i, k.j);
    }

    bool contains(const Point& x, double slack = 0.0) const {
        for (int a = 0; a < dim_; ++a) {
            if (x[a] < origin_[a] - slack || x[a] > origin_[a] + extent_[a] + slack) return false;
        }
        return true;
    }

    /// Cell containing x (clamped to the grid).
    Index locate_cell(const Point& x) const {
        Index c;
        auto axis_cell = [&](int a) {
            const double s = std::floor((x[a] - origin_[a]) / h_[a]);
            const double hi = static_cast<double>(cells(a) - 1);
            return static_cast<std::size_t>(std::clamp(s, 0.0, hi));
        };
        c.i = axis_cell(0);
        if (dim_ == 2) c.j = axis_cell(1);
        return c;
    }

    /// Node nearest to x (clamped to the grid).
    Index nearest_node(const Point& x) const {
        Index k;
        auto axis_node = [&](int a) {
            const double s = std::round((x[a] - origin_[a]) / h_[a]);
            return static_cast<std::size_t>(std::clamp(s, 0.0, static_cast<double>(n_[a] - 1)));
        };
        k.i = axis_node(0);
        if (dim_ == 2) k.j = axis_node(1);
        return k;
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.dim_ == b.dim_ && a.origin_ == b.origin_ && a.extent_ == b.extent_ && a.n_ == b.n_;
    }

private:
    Grid(int dim, Point origin, Point extent, std::array<std::size_t, 2> n)
        : dim_(dim), origin_(origin), extent_(extent), n_(n) {
        if (dim != 1 && dim != 2) throw ContractError("grid dimension must be 1 or 2");
        for (int a = 0; a < dim; ++a) {
            if (n[a] < 2) throw ContractError("grid needs at least 2 nodes per axis");
            if (!(extent[a] > 0.0) || !std::isfinite(extent[a]))
                throw ContractError("grid extent must be positive and finite");
            if (!std::isfinite(origin[a])) throw ContractError("grid origin must be finite");
            h_[a] = extent[a] / static_cast<double>(n[a] - 1);
        }
        if (dim == 1) {
            n_[1] = 1;
            origin_[1] = extent_[1] = 0.0;
            h_[1] = 1.0;
        }
    }

    int dim_ = 1;
    Point origin_{0.0, 0.0};
    Point extent_{1.0, 0.0};
    std::array<std::size_t, 2> n_{2, 1};
    Point h_{1.0, 1.0};
};

/// Nodal real values on a grid.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(Grid grid, double value = 0.0)
        : grid_(std::move(grid)), values_(grid_.node_count(), value) {}
    ScalarField(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_.node_count())
            throw ContractError("field length does not match the grid node count");
    }

    template <class Fn>
    static ScalarField sample(const Grid& grid, Fn&& fn) {
        ScalarField u(grid);
        for (std::size_t id = 0; id < grid.node_count(); ++id) u.values_[id] = fn(grid.node(grid.node_index(id)));
        return u;
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double& operator[](std::size_t id) { return values_[id]; }
    double operator[](std::size_t id) const { return values_[id]; }
    double& at(std::size_t i, std::size_t j = 0) { return values_[grid_.node_id(i, j)]; }
    double at(std::size_t i, std::size_t j = 0) const { return values_[grid_.node_id(i, j)]; }

    /// Corner average over a cell.
    double cell_average(const Index& c) const {
        if (grid_.dim() == 1) return 0.5 * (at(c.i) + at(c.i + 1));
        return 0.25 * (at(c.i, c.j) + at(c.i + 1, c.j) + at(c.i, c.j + 1) + at(c.i + 1, c.j + 1));
    }

    /// All cell averages, indexed by Grid::cell_id.
    std::vector<double> cell_averages() const {
        std::vector<double> out(grid_.cell_count());
        for (std::size_t c = 0; c < out.size(); ++c) out[c] = cell_average(grid_.cell_index(c));
        return out;
    }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }
    double max() const { return *std::max_element(values_.begin(), values_.end()); }
    double min() const { return *std::min_element(values_.begin(), values_.end()); }
    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Bilinear (linear in 1D) interpolation; x is clamped to the grid.
    double interpolate(const Point& x) const {
        const Index c = grid_.locate_cell(x);
        const Point x0 = grid_.node(c);
        const double s = std::clamp((x[0] - x0[0]) / grid_.h()[0], 0.0, 1.0);
        if (grid_.dim() == 1) return (1.0 - s) * at(c.i) + s * at(c.i + 1);
        const double t = std::clamp((x[1] - x0[1]) / grid_.h()[1], 0.0, 1.0);
        return (1.0 - s) * (1.0 - t) * at(c.i, c.j) + s * (1.0 - t) * at(c.i + 1, c.j) +
               (1.0 - s) * t * at(c.i, c.j + 1) + s * t * at(c.i + 1, c.j + 1);
    }

    friend bool operator==(const ScalarField&, const ScalarField&) = default;

private:
    Grid grid_;
    std::vector<double> values_;
};

/// Variable exponent p(x) with validated bounds.
///
/// The lower floor 1.05 keeps the dual exponent p/(p-1) at or below 21.
class ExponentField {
public:
    static constexpr double kFloor = 1.05;

    ExponentField() = default;
    explicit ExponentField(ScalarField p) : base_(std::move(p)) {
        if (!base_.all_finite()) throw ContractError("exponent field has non-finite values");
        p_min_ = base_.min();
        p_max_ = base_.max();
        if (p_min_ < kFloor)
            throw ContractError("exponent violates the lower bound 1 < p_min (floor 1.05): p_min = " +
                                std::to_string(p_min_));
        const Grid& g = base_.grid();
        for (std::size_t i = 0; i < g.n()[0]; ++i) {
            for (std::size_t j = 0; j < g.n()[1]; ++j) {
                if (i + 1 < g.n()[0])
                    L_ = std::max(L_, std::abs(base_.at(i + 1, j) - base_.at(i, j)) / g.h()[0]);
                if (g.dim() == 2 && j + 1 < g.n()[1])
                    L_ = std::max(L_, std::abs(base_.at(i, j + 1) - base_.at(i, j)) / g.h()[1]);
            }
        }
    }

    static ExponentField constant(const Grid& grid, double p) { return ExponentField(ScalarField(grid, p)); }

    const ScalarField& field() const { return base_; }
    const Grid& grid() const { return base_.grid(); }
    double operator[](std::size_t id) const { return base_[id]; }
    double p_min() const { return p_min_; }
    double p_max() const { return p_max_; }
    double lipschitz() const { return L_; }
    bool is_constant() const { return p_min_ == p_max_; }

private:
    ScalarField base_;
    double p_min_ = 2.0;
    double p_max_ = 2.0;
    double L_ = 0.0;
};

/// Ball center and the dyadic radius ladder r, r/2, r/4, ...
struct ScanWindow {
    Point center{};
    std::vector<double> radii;

    static ScanWindow dyadic(const Grid& grid, Point center, double r_max, std::size_t count) {
        ScanWindow w{center, {}};
        double r = r_max;
        for (std::size_t k = 0; k < count; ++k, r *= 0.5) w.radii.push_back(r);
        w.validate(grid);
        return w;
    }

    /// Largest radius whose ball stays inside the grid box.
    static double room(const Grid& grid, const Point& center) {
        double room = std::numeric_limits<double>::infinity();
        for (int a = 0; a < grid.dim(); ++a) {
            room = std::min(room, center[a] - grid.origin()[a]);
            room = std::min(room, grid.origin()[a] + grid.extent()[a] - center[a]);
        }
        return room;
    }

    void validate(const Grid& grid) const {
        if (radii.empty()) throw ContractError("scan window needs at least one radius");
        for (std::size_t k = 0; k < radii.size(); ++k) {
            if (!(radii[k] > 0.0)) throw ContractError("scan radii must be positive");
            if (k > 0 && !(radii[k] < radii[k - 1])) throw ContractError("scan radii must be strictly decreasing");
        }
        if (radii.front() > room(grid, center) + 1e-12)
            throw PreconditionError("scan window exits the grid");
    }
};

/// Discrete gradient at the cell center: edge difference in 1D, average of the
/// two parallel edge differences per axis in 2D.
inline Point cell_gradient(const ScalarField& u, const Index& cell) {
    const Grid& g = u.grid();
    if (cell.i + 1 >= g.n()[0] || (g.dim() == 2 && cell.j + 1 >= g.n()[1]) || (g.dim() == 1 && cell.j != 0))
        throw IndexError("cell index out of range");
    const Point& h = g.h();
    if (g.dim() == 1) return {(u.at(cell.i + 1) - u.at(cell.i)) / h[0], 0.0};
    const double a = u.at(cell.i, cell.j), b = u.at(cell.i + 1, cell.j);
    const double c = u.at(cell.i, cell.j + 1), d = u.at(cell.i + 1, cell.j + 1);
    return {0.5 * ((b - a) + (d - c)) / h[0], 0.5 * ((c - a) + (d - b)) / h[1]};
}

/// One-point cell quadrature: sum over cells of g(cell) * cell volume.
template <class CellFn>
double integrate_cells(CellFn&& g, const Grid& grid, Workers workers = {}) {
    const double s = parallel_sum(grid.cell_count(), workers, [&](std::size_t c) { return g(grid.cell_index(c)); });
    return s * grid.cell_volume();
}

struct BallSample {
    Point x;
    double value;
    std::size_t node;
};

/// Nodes with |x - center| <= r. Empty if the ball misses the grid.
inline std::vector<BallSample> ball_values(const ScalarField& u, const Point& center, double r) {
    const Grid& g = u.grid();
    std::vector<BallSample> out;
    std::array<std::size_t, 2> lo{0, 0}, hi{0, 0};
    for (int a = 0; a < 2; ++a) {
        if (a == 1 && g.dim() == 1) break;
        const double l = std::ceil((center[a] - r - g.origin()[a]) / g.h()[a] - 1e-9);
        const double u_ = std::floor((center[a] + r - g.origin()[a]) / g.h()[a] + 1e-9);
        const double top = static_cast<double>(g.n()[a] - 1);
        if (u_ < 0.0 || l > top) return out;
        lo[a] = static_cast<std::size_t>(std::max(0.0, l));
        hi[a] = static_cast<std::size_t>(std::min(top, u_));
    }
    const double r2 = r * r;
    for (std::size_t i = lo[0]; i <= hi[0]; ++i) {
        for (std::size_t j = lo[1]; j <= hi[1]; ++j) {
            const Point x = g.node(i, j);
            const Point d = x - center;
            if (dot(d, d) <= r2 * (1.0 + 1e-12)) out.push_back({x, u.at(i, j), g.node_id(i, j)});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Field files: "dim n1 [n2]", origin line, extent line, then one value per line.

inline void write_field(std::ostream& os, const ScalarField& u) {
    const Grid& g = u.grid();
    os << g.dim() << ' ' << g.n()[0];
    if (g.dim() == 2) os << ' ' << g.n()[1];
    os << '\n' << std::setprecision(17);
    os << g.origin()[0];
    if (g.dim() == 2) os << ' ' << g.origin()[1];
    os << '\n' << g.extent()[0];
    if (g.dim() == 2) os << ' ' << g.extent()[1];
    os << '\n';
    for (double v : u.values()) os << v << '\n';
}

inline ScalarField read_field(std::istream& is) {
    auto fail = [](const std::string& what) { throw ContractError("field file: " + what); };
    int dim = 0;
    if (!(is >> dim) || (dim != 1 && dim != 2)) fail("bad dimension header");
    std::array<std::size_t, 2> n{1, 1};
    Point origin{0, 0}, extent{0, 0};
    for (int a = 0; a < dim; ++a)
        if (!(is >> n[a])) fail("bad node counts");
    for (int a = 0; a < dim; ++a)
        if (!(is >> origin[a])) fail("bad origin");
    for (int a = 0; a < dim; ++a)
        if (!(is >> extent[a])) fail("bad extent");
    const Grid g = dim == 1 ? Grid::line(origin[0], extent[0], n[0]) : Grid::rect(origin, extent, n);
    std::vector<double> values(g.node_count());
    for (auto& v : values) {
        std::string tok;
        if (!(is >> tok)) fail("too few values");
        try {
            v = std::stod(tok);
        } catch (const std::exception&) {
            fail("unparsable value '" + tok + "'");
        }
    }
    std::string extra;
    if (is >> extra) fail("trailing data after values");
    return ScalarField(g, std::move(values));
}

inline void save_field(const std::string& path, const ScalarField& u) {
    std::ofstream os(path);
    if (!os) throw ContractError("cannot open '" + path + "' for writing");
    write_field(os, u);
}

inline ScalarField load_field(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ContractError("cannot open field file '" + path + "'");
    return read_field(is);
}

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (!(a == b)) throw ContractError(std::string(what) + ": fields live on different grids");
}

} // namespace fbflow
