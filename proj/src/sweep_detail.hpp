#pragma once

// Internal machinery of the backward characteristic sweep shared by the
// Lyapunov and Riccati solvers. Not installed.
//
// The grid couples the time and elapsed axes with one step, so the backward
// pull is node-to-node: p(k, m) reads p(k+1, m+1) and the reset row
// p(k+1, 0, .). To keep that pull inside the grid for every public node, the
// working planes carry m_public + n_steps elapsed rows; at time index k only
// rows 0..m_public + k are meaningful and rows above are never read.

#include <functional>
#include <vector>

#include "lqswitch/matrix_ops.hpp"
#include "lqswitch/mpp.hpp"
#include "lqswitch/regime_field.hpp"

namespace lqswitch::detail {

using MatMap = Eigen::Map<Matrix>;
using ConstMatMap = Eigen::Map<const Matrix>;

/// One time slice of the working field over (elapsed row, mark).
class PlaneBuffer {
  public:
    PlaneBuffer() = default;
    PlaneBuffer(int rows, int n_marks, int dim)
        : rows_(rows), n_marks_(n_marks), dim_(dim),
          v_(static_cast<std::size_t>(rows) * n_marks * dim * dim, 0.0) {}

    MatMap at(int m, int i) {
        return {v_.data() + offset(m, i), dim_, dim_};
    }
    ConstMatMap at(int m, int i) const {
        return {v_.data() + offset(m, i), dim_, dim_};
    }
    int rows() const { return rows_; }

  private:
    std::size_t offset(int m, int i) const {
        return (static_cast<std::size_t>(m) * n_marks_ + i) *
               static_cast<std::size_t>(dim_) * dim_;
    }
    int rows_ = 0, n_marks_ = 0, dim_ = 0;
    std::vector<double> v_;
};

/// Source term at the right endpoint of a backward step. k_next/m_next are
/// the global node indices of that endpoint, p_right the field value there.
using SourceFn = std::function<void(int k_next, int m_next, double te, double ee,
                                    int mark, const ConstMatMap& p_right,
                                    Matrix& out)>;

class SweepEngine {
  public:
    /// Throws std::invalid_argument when the explicit-scheme stability
    /// condition dt (2 M_A + d M_C^2 + 2 lambda_max) < 1 fails.
    SweepEngine(const CoefficientSet& coeffs, const SwitchingLaw& law,
                const Grid& grid);

    int m_public() const { return m_public_; }
    int m_alloc() const { return m_alloc_; }
    int n_marks() const { return n_marks_; }
    int row_top(int k) const { return std::min(m_public_ + k, m_alloc_); }
    PlaneBuffer make_plane() const {
        return {m_alloc_ + 1, n_marks_, dim_};
    }

    /// Fills rows 0..m_alloc of a plane from a terminal-type function H(e, i).
    void fill_terminal(PlaneBuffer& plane,
                       const std::function<Matrix(double, int)>& terminal) const;

    /// One backward step: computes plane k = k_next - 1 over rows
    /// 0..row_top(k_next - 1) from plane k_next. Entries are symmetrized.
    void step(int k_next, const PlaneBuffer& next, PlaneBuffer& cur,
              const SourceFn& source);

    /// Copies the public rows of a plane into time slice k of a field.
    void store_slice(const PlaneBuffer& plane, int k, RegimeField& field) const;

  private:
    const CoefficientSet& coeffs_;
    const SwitchingLaw& law_;
    Grid grid_;
    int dim_, n_marks_, m_public_, m_alloc_;
    bool stationary_;

    std::vector<Matrix> a_cache_;              // per mark
    std::vector<std::vector<Matrix>> c_cache_; // per mark, per component

    // per-step scratch (the sweep is sequential)
    Matrix drift_, tmp_, csum_, reset_, src_, acc_;
};

/// Full backward sweep over [0, horizon]; returns the public field.
RegimeField sweep_full(SweepEngine& engine, const Grid& grid,
                       const CoefficientSet& coeffs,
                       const std::function<Matrix(double, int)>& terminal,
                       const SourceFn& source);

} // namespace lqswitch::detail
