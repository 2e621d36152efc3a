#pragma once

#include <cstdint>

#include "lqswitch/dynamics.hpp"
#include "lqswitch/mpp.hpp"
#include "lqswitch/regime_field.hpp"

namespace lqswitch {

/// The linear backward equation: terminal datum H(e, i), symmetric source
/// L(t, e, i), dynamics (A, C) and switching law shared with the control
/// problem. Explicit sup-norm bounds on H and L feed the growth estimate.
struct LyapunovProblem {
    CoefficientSet coeffs;
    SwitchingLaw law;
    TerminalFn terminal;       ///< H(e, i), symmetric
    MatrixFn source;           ///< L(t, e, i), symmetric
    double terminal_bound = 0; ///< sup-norm bound for H
    double source_bound = 0;   ///< sup-norm bound for L
};

/// Solution triple in regime-field form. With coefficients that are
/// deterministic in (t, e, i) the field itself is deterministic, so the
/// Brownian martingale component is identically zero and the jump component
/// is the reset increment U(t, e, i, j) = P(t, 0, j) - P(t, e, i).
struct LyapunovSolution {
    RegimeField P;
    int brownian_dim = 0; ///< number of (identically zero) martingale components

    Matrix jump_field(double t, double e, int mark, int target) const {
        return P.eval(t, 0.0, target) - P.eval(t, e, mark);
    }
    Matrix martingale_component(double, double, int) const {
        return Matrix::Zero(P.dim(), P.dim());
    }
};

/// Backward sweep along the characteristics t - e = const:
///   p(t_k, e_m, i) = p(t_{k+1}, e_{m+1}, i)
///     + dt * [ A'p + pA + sum_j C_j' p C_j + L
///              + lambda * ( sum_j kernel_j * p(t_{k+1}, 0, j) - p(t_{k+1}, e_{m+1}, i) ) ]
/// with every coefficient evaluated at the right endpoint (t_{k+1}, e_{m+1}, i)
/// and the result symmetrized. Internally the elapsed axis is extended by one
/// row per remaining time step so the pull from (k+1, m+1) never leaves the
/// grid; the returned field covers [0, horizon] x [0, e_max].
/// Preconditions: dt * (2 M_A + d M_C^2 + 2 lambda_max) < 1 (explicit-scheme
/// stability; throws std::invalid_argument otherwise).
LyapunovSolution solve_lyapunov(const LyapunovProblem& prob, const Grid& grid);

struct ResidualEstimate {
    double residual = 0.0;
    double std_error = 0.0;
    int n_paths = 0;
};

/// Monte-Carlo check of the representation
///   <P(t0, e0, i0) x, x> = E[ <H X_T, X_T> + int_t^T ( <L X, X> - 2 <P B u, X> ) ds ]
/// for a bounded open-loop control u. Returns the difference of the path
/// estimate from the field value, with its standard error.
ResidualEstimate verify_representation(const LyapunovSolution& sol,
                                       const LyapunovProblem& prob, double t0,
                                       const Vector& x, const OpenLoopFn& u,
                                       double control_bound, int n_paths,
                                       double dt_sim, std::uint64_t seed,
                                       unsigned threads = 0);

struct SupBoundReport {
    bool pass = false;
    double worst_ratio = 0.0; ///< max over time slices of |P| / bound(t)
    double worst_time = 0.0;
    double bound_at_start = 0.0;
};

/// Per-time-slice check of max |P(t)| <= K(t) (|H| + (T - t) M_L) with
/// K(t) = exp((2 M_A + d M_C^2)(T - t)).
SupBoundReport sup_bound_check(const LyapunovSolution& sol,
                               const LyapunovProblem& prob);

} // namespace lqswitch
