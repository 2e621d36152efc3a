#include "lqswitch/regime_field.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace lqswitch {

namespace {

constexpr double kNodeSnap = 1e-9; // relative snap distance for node-exact eval

} // namespace

Grid::Grid(double horizon, int n_steps, double e_max)
    : horizon_(horizon), n_steps_(n_steps),
      e_max_(e_max < 0.0 ? horizon : e_max) {
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
        throw std::invalid_argument("Grid: horizon must be positive and finite");
    if (n_steps_ < 1)
        throw std::invalid_argument("Grid: n_steps must be >= 1");
    if (e_max_ < horizon_ - 1e-12)
        throw std::invalid_argument("Grid: e_max must be >= horizon");
    // Top elapsed node covers e_max: smallest m with m*step >= e_max.
    m_top_ = static_cast<int>(std::ceil(e_max_ / step() - kNodeSnap));
}

bool Grid::operator==(const Grid& other) const {
    return horizon_ == other.horizon_ && n_steps_ == other.n_steps_ &&
           m_top_ == other.m_top_;
}

RegimeField::RegimeField(const Grid& grid, int dim, int n_marks)
    : grid_(grid), dim_(dim), n_marks_(n_marks) {
    if (dim < 1) throw std::invalid_argument("RegimeField: dim must be >= 1");
    if (n_marks < 1) throw std::invalid_argument("RegimeField: n_marks must be >= 1");
    data_.assign(static_cast<std::size_t>(grid.n_time_nodes()) *
                     grid.n_elapsed_nodes() * n_marks * dim * dim,
                 0.0);
}

RegimeField RegimeField::constant(const Grid& grid, int n_marks, const Matrix& value) {
    RegimeField f(grid, static_cast<int>(value.rows()), n_marks);
    for (int k = 0; k < grid.n_time_nodes(); ++k)
        for (int m = 0; m < grid.n_elapsed_nodes(); ++m)
            for (int i = 0; i < n_marks; ++i) f.set_node(k, m, i, value);
    return f;
}

RegimeField RegimeField::from_function(
    const Grid& grid, int dim, int n_marks,
    const std::function<Matrix(double, double, int)>& fn) {
    RegimeField f(grid, dim, n_marks);
    for (int k = 0; k < grid.n_time_nodes(); ++k)
        for (int m = 0; m < grid.n_elapsed_nodes(); ++m)
            for (int i = 0; i < n_marks; ++i)
                f.set_node(k, m, i, fn(grid.time_node(k), grid.elapsed_node(m), i));
    return f;
}

std::size_t RegimeField::offset(int k, int m, int mark) const {
    return ((static_cast<std::size_t>(k) * grid_.n_elapsed_nodes() + m) * n_marks_ +
            mark) *
           dim_ * dim_;
}

Eigen::Map<const Matrix> RegimeField::node(int k, int m, int mark) const {
    if (k < 0 || k >= grid_.n_time_nodes() || m < 0 || m >= grid_.n_elapsed_nodes() ||
        mark < 0 || mark >= n_marks_)
        throw std::out_of_range("RegimeField::node: index out of range");
    return {data_.data() + offset(k, m, mark), dim_, dim_};
}

void RegimeField::set_node(int k, int m, int mark, const Matrix& value) {
    if (value.rows() != dim_ || value.cols() != dim_)
        throw std::invalid_argument("RegimeField::set_node: wrong matrix size");
    if (k < 0 || k >= grid_.n_time_nodes() || m < 0 || m >= grid_.n_elapsed_nodes() ||
        mark < 0 || mark >= n_marks_)
        throw std::out_of_range("RegimeField::set_node: index out of range");
    Eigen::Map<Matrix>(data_.data() + offset(k, m, mark), dim_, dim_) = value;
}

Matrix RegimeField::eval(double t, double e, int mark) const {
    const double dt = grid_.step();
    if (mark < 0 || mark >= n_marks_)
        throw std::out_of_range("RegimeField::eval: mark out of range");
    if (!(t >= -kNodeSnap * dt) || t > grid_.horizon() + kNodeSnap * dt)
        throw std::out_of_range("RegimeField::eval: t outside [0, horizon]");
    if (!(e >= -kNodeSnap * dt) || e > grid_.e_max() + (1.0 + kNodeSnap) * dt)
        throw std::out_of_range("RegimeField::eval: e outside [0, e_max]");

    auto locate = [&](double x, int top) {
        double u = x / dt;
        int idx = static_cast<int>(std::floor(u + kNodeSnap));
        idx = std::max(0, std::min(idx, top));
        double frac = u - idx;
        if (frac < kNodeSnap || idx == top) frac = 0.0;
        return std::pair<int, double>{idx, frac};
    };

    const auto [k, ft] = locate(t, grid_.n_steps());
    const auto [m, fe] = locate(e, grid_.elapsed_top());

    Matrix out = (1.0 - ft) * (1.0 - fe) * node(k, m, mark);
    if (ft > 0.0) out += ft * (1.0 - fe) * node(k + 1, m, mark);
    if (fe > 0.0) out += (1.0 - ft) * fe * node(k, m + 1, mark);
    if (ft > 0.0 && fe > 0.0) out += ft * fe * node(k + 1, m + 1, mark);
    return symmetrized(out);
}

double RegimeField::max_node_norm() const {
    double worst = 0.0;
    for (int k = 0; k < grid_.n_time_nodes(); ++k)
        worst = std::max(worst, max_slice_norm(k));
    return worst;
}

double RegimeField::max_slice_norm(int k) const {
    double worst = 0.0;
    for (int m = 0; m < grid_.n_elapsed_nodes(); ++m)
        for (int i = 0; i < n_marks_; ++i)
            worst = std::max(worst, spectral_norm(node(k, m, i)));
    return worst;
}

double RegimeField::max_asymmetry() const {
    double worst = 0.0;
    for (int k = 0; k < grid_.n_time_nodes(); ++k)
        for (int m = 0; m < grid_.n_elapsed_nodes(); ++m)
            for (int i = 0; i < n_marks_; ++i)
                worst = std::max(worst, asymmetry(node(k, m, i)));
    return worst;
}

bool RegimeField::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double psd_floor(const RegimeField& field) {
    double floor = std::numeric_limits<double>::infinity();
    for (int k = 0; k < field.grid().n_time_nodes(); ++k)
        for (int m = 0; m < field.grid().n_elapsed_nodes(); ++m)
            for (int i = 0; i < field.n_marks(); ++i)
                floor = std::min(floor, min_eigenvalue(field.node(k, m, i)));
    return floor;
}

double field_distance(const RegimeField& a, const RegimeField& b) {
    if (!(a.grid() == b.grid()) || a.dim() != b.dim() || a.n_marks() != b.n_marks())
        throw std::invalid_argument("field_distance: mismatched fields");
    double worst = 0.0;
    for (int k = 0; k < a.grid().n_time_nodes(); ++k)
        for (int m = 0; m < a.grid().n_elapsed_nodes(); ++m)
            for (int i = 0; i < a.n_marks(); ++i)
                worst = std::max(worst, spectral_norm(a.node(k, m, i) - b.node(k, m, i)));
    return worst;
}

void write_field_csv(const RegimeField& field,
                     const std::vector<std::string>& mark_names,
                     std::ostream& out) {
    const int n = field.dim();
    out << "t,e,mark";
    for (int r = 0; r < n; ++r)
        for (int c = r; c < n; ++c) out << ",p_" << (r + 1) << (c + 1);
    out << "\n";
    char buf[40];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (int k = 0; k < field.grid().n_time_nodes(); ++k)
        for (int m = 0; m < field.grid().n_elapsed_nodes(); ++m)
            for (int i = 0; i < field.n_marks(); ++i) {
                out << fmt(field.grid().time_node(k)) << ','
                    << fmt(field.grid().elapsed_node(m)) << ','
                    << (i < static_cast<int>(mark_names.size())
                            ? mark_names[i]
                            : std::to_string(i));
                const auto mat = field.node(k, m, i);
                for (int r = 0; r < n; ++r)
                    for (int c = r; c < n; ++c) out << ',' << fmt(mat(r, c));
                out << "\n";
            }
}

void CoefficientSet::validate_at(double t, double e, int mark) const {
    if (n < 1 || k < 1 || d < 0)
        throw std::invalid_argument("CoefficientSet: bad dimensions");
    if (static_cast<int>(C.size()) != d)
        throw std::invalid_argument("CoefficientSet: C must have d entries");
    auto check = [&](const Matrix& m, int rows, int cols, double bound,
                     const char* name) {
        if (m.rows() != rows || m.cols() != cols)
            throw std::invalid_argument(std::string("CoefficientSet: ") + name +
                                        " has wrong dimensions");
        if (operator_norm(m) > bound * (1.0 + 1e-9) + 1e-12)
            throw std::invalid_argument(std::string("CoefficientSet: ") + name +
                                        " exceeds its declared bound");
    };
    check(A(t, e, mark), n, n, bounds.M_A, "A");
    check(B(t, e, mark), n, k, bounds.M_B, "B");
    for (int j = 0; j < d; ++j) check(C[j](t, e, mark), n, n, bounds.M_C, "C");
    const Matrix s = S(t, e, mark);
    check(s, n, n, bounds.M_S, "S");
    if (asymmetry(s) > 1e-10)
        throw std::invalid_argument("CoefficientSet: S is not symmetric");
    if (min_eigenvalue(symmetrized(s)) < -1e-10)
        throw std::invalid_argument("CoefficientSet: S is not positive semidefinite");
    const Matrix g = G(e, mark);
    check(g, n, n, bounds.M_G, "G");
    if (asymmetry(g) > 1e-10)
        throw std::invalid_argument("CoefficientSet: G is not symmetric");
    if (min_eigenvalue(symmetrized(g)) < -1e-10)
        throw std::invalid_argument("CoefficientSet: G is not positive semidefinite");
}

double gronwall_constant(const CoefficientBounds& bounds, int d, double duration) {
    return std::exp((2.0 * bounds.M_A + d * bounds.M_C * bounds.M_C) *
                    std::max(0.0, duration));
}

} // namespace lqswitch
