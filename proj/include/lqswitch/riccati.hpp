#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lqswitch/lyapunov.hpp"

namespace lqswitch {

enum class RiccatiBackend { direct, picard };

/// Per-window record of the fixed-point iteration.
struct WindowDiagnostics {
    int index = 0;
    double t_left = 0.0;
    double t_right = 0.0;
    int iterations = 0;
    std::vector<double> distances;          ///< successive iterate distances
    std::vector<double> contraction_ratios; ///< distances[l] / distances[l-1]
    double max_norm = 0.0;                  ///< max node norm of the converged window
};

struct RiccatiSolution {
    RegimeField P;
    int brownian_dim = 0;
    RiccatiBackend backend = RiccatiBackend::direct;
    std::vector<WindowDiagnostics> diagnostics; ///< empty for the direct backend

    Matrix jump_field(double t, double e, int mark, int target) const {
        return P.eval(t, 0.0, target) - P.eval(t, e, mark);
    }
};

/// Direct backend: the Lyapunov backward sweep with the quadratic source
/// S - p B B' p evaluated at the right endpoint of each step. Checks the
/// positivity and a-priori-norm invariants after the sweep and throws
/// std::runtime_error if either fails beyond the scheme tolerance.
/// Preconditions: the Lyapunov stability condition plus
/// dt * 2 M_B^2 * K_bound < 1 with K_bound the a priori norm bound.
RiccatiSolution solve_riccati_direct(const CoefficientSet& coeffs,
                                     const SwitchingLaw& law, const Grid& grid);

/// Largest window length delta (a multiple of the grid step, at most the
/// horizon) in the contraction regime for terminal data of norm at most R:
///   K * [R + delta (r^2 M_B^2 + M_S)] <= r   with r = 2 K R + 1,
///   4 K0 r^2 M_B^4 delta <= 1/2,
/// where K = gronwall_constant over the horizon and K0 = 2 max(1, T) K^2
/// stands in for the squared-estimate constant. Throws std::runtime_error
/// when no multiple of the step qualifies (grid too coarse).
double step_size_delta(double terminal_norm_bound, const CoefficientSet& coeffs,
                       const Grid& grid);

/// The paper-construction backend: covers [0, T] backwards by windows of
/// length step_size_delta(R) with R the a priori bound, and on each window
/// iterates P -> solve_lyapunov(L = S - P B B' P) to the fixed point.
/// Stops a window when the iterate distance drops below tol; throws
/// std::runtime_error when max_iter is exceeded or an iterate leaves the
/// ball of radius r.
RiccatiSolution solve_riccati_picard(const CoefficientSet& coeffs,
                                     const SwitchingLaw& law, const Grid& grid,
                                     double tol, int max_iter);

struct AprioriReport {
    double psd_floor_value = 0.0;
    double psd_tolerance = 0.0; ///< 10 dt (M_G + T M_S) K
    double max_norm = 0.0;
    double norm_bound = 0.0;    ///< K (M_G + T M_S)
    bool positivity_pass = false;
    bool norm_pass = false;

    bool pass() const { return positivity_pass && norm_pass; }
};

/// Report-only positivity and a priori norm check of a solution.
AprioriReport apriori_checks(const RiccatiSolution& sol, const CoefficientSet& coeffs);

/// Closed-loop simulation with the feedback synthesized from sol.P.
inline SamplePath simulate_closed_loop(const CoefficientSet& coeffs,
                                       const SwitchingLaw& law,
                                       const RiccatiSolution& sol, double t0,
                                       const Vector& x, double dt_sim,
                                       double horizon, std::uint64_t seed) {
    return simulate_closed_loop(coeffs, law, sol.P, t0, x, dt_sim, horizon, seed);
}

} // namespace lqswitch
