#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "lqswitch/matrix_ops.hpp"

namespace lqswitch {

/// Node layout for fields p(t, e, i). Time and elapsed axes share one step
/// so the transport direction t - e = const maps node to node; that keeps
/// the backward characteristic sweep free of interpolation error.
class Grid {
  public:
    /// e_max < 0 selects the default truncation horizon (== horizon).
    /// Callers with a nonzero initial elapsed time should pass
    /// horizon + initial_elapsed.
    Grid(double horizon, int n_steps, double e_max = -1.0);

    double horizon() const { return horizon_; }
    int n_steps() const { return n_steps_; }
    double e_max() const { return e_max_; }
    double step() const { return horizon_ / n_steps_; }

    int n_time_nodes() const { return n_steps_ + 1; }
    int n_elapsed_nodes() const { return m_top_ + 1; }
    int elapsed_top() const { return m_top_; } ///< last elapsed node index

    double time_node(int k) const { return k * step(); }
    double elapsed_node(int m) const { return m * step(); }

    bool operator==(const Grid& other) const;

  private:
    double horizon_;
    int n_steps_;
    double e_max_;
    int m_top_;
};

/// A symmetric-matrix-valued function on the (time x elapsed x mark) grid.
/// Values are written once by a solver pass (or a builder) and read-only
/// afterwards; evaluation is reentrant.
class RegimeField {
  public:
    RegimeField(const Grid& grid, int dim, int n_marks); // zero matrices

    static RegimeField constant(const Grid& grid, int n_marks, const Matrix& value);
    static RegimeField from_function(
        const Grid& grid, int dim, int n_marks,
        const std::function<Matrix(double t, double e, int mark)>& fn);

    const Grid& grid() const { return grid_; }
    int dim() const { return dim_; }
    int n_marks() const { return n_marks_; }

    Eigen::Map<const Matrix> node(int k, int m, int mark) const;
    void set_node(int k, int m, int mark, const Matrix& value);

    /// Bilinear interpolation in (t, e) at fixed mark; exact at nodes;
    /// result symmetrized. Throws std::out_of_range off the domain
    /// [0, horizon] x [0, e_max] x marks.
    Matrix eval(double t, double e, int mark) const;

    double max_node_norm() const;          ///< max operator norm over nodes
    double max_slice_norm(int k) const;    ///< same, one time slice
    double max_asymmetry() const;
    bool all_finite() const;

  private:
    std::size_t offset(int k, int m, int mark) const;

    Grid grid_;
    int dim_;
    int n_marks_;
    std::vector<double> data_;
};

/// Global minimum eigenvalue over all nodes. Callers compare against -tol;
/// positivity is checked, never enforced by projection.
double psd_floor(const RegimeField& field);

/// Sup over nodes of the operator-norm difference. Requires matching grid,
/// dimension and mark count (throws std::invalid_argument otherwise).
double field_distance(const RegimeField& a, const RegimeField& b);

/// CSV export: header t,e,mark,p_11,p_12,...; one row per (t_k, e_m, i) with
/// the upper triangle in row-major order.
void write_field_csv(const RegimeField& field,
                     const std::vector<std::string>& mark_names,
                     std::ostream& out);

/// Problem coefficient evaluated at (t, e, i).
using MatrixFn = std::function<Matrix(double t, double e, int mark)>;
/// Terminal-type coefficient evaluated at (e, i).
using TerminalFn = std::function<Matrix(double e, int mark)>;

struct CoefficientBounds {
    double M_A = 0.0;
    double M_B = 0.0;
    double M_C = 0.0;
    double M_G = 0.0;
    double M_S = 0.0;
};

/// The problem data: state drift A (n x n), control gain B (n x k), noise
/// loadings C_1..C_d (n x n), running weight S (PSD n x n), terminal weight
/// G (PSD n x n), all deterministic functions of (t, e, i), with declared
/// sup-norm bounds.
struct CoefficientSet {
    int n = 0; ///< state dimension
    int k = 0; ///< control dimension
    int d = 0; ///< Brownian dimension (number of C components)

    MatrixFn A;
    MatrixFn B;
    std::vector<MatrixFn> C;
    MatrixFn S;
    TerminalFn G;

    CoefficientBounds bounds;

    /// True when A, B, C, S, G depend on the mark only; solvers may then
    /// evaluate each coefficient once per mark instead of once per node.
    bool stationary = false;

    /// Checks dimensions, declared norm bounds, and symmetry/PSD of S and G
    /// at one sampled argument. Throws std::invalid_argument with the
    /// offending coefficient named.
    void validate_at(double t, double e, int mark) const;
};

/// exp((2 M_A + d M_C^2) * duration): the explicit growth constant used in
/// place of the abstract bounds. Valid upper bound for the linear flow and
/// tight when A is scalar and C = 0.
double gronwall_constant(const CoefficientBounds& bounds, int d, double duration);

} // namespace lqswitch
