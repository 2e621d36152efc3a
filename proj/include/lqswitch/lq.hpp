#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lqswitch/riccati.hpp"

namespace lqswitch {

/// Monte-Carlo estimate of the quadratic cost
///   J = E[ int (<S X, X> + |u|^2) ds + <G X_T, X_T> ].
/// The running state cost integrates by trapezoid on the simulation nodes
/// (jump nodes included); the control energy by the exact rectangle rule for
/// the piecewise-constant per-step control.
struct CostEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int n_paths = 0;
    double running_cost_mean = 0.0;
    double terminal_cost_mean = 0.0;
    double control_energy_mean = 0.0;
};

CostEstimate estimate_cost(const CoefficientSet& coeffs, const SwitchingLaw& law,
                           const ControlSpec& control, double t0, const Vector& x,
                           int n_paths, double dt_sim, double horizon,
                           std::uint64_t seed, unsigned threads = 0);

/// The quadratic form <P(t, e, i) x, x>: the optimal cost from the extended
/// state (t, e, i, x).
double value(const RiccatiSolution& sol, double t, double e, int mark,
             const Vector& x);

/// Monte-Carlo residual of the decomposition
///   <P x, x> = J(t0, x, u) - E int |u + B'P X|^2 ds,
/// with the cost and the penalty accumulated on the same paths. For the
/// feedback control the penalty integrand is zero to round-off step by step.
ResidualEstimate fundamental_relation_residual(const RiccatiSolution& sol,
                                               const CoefficientSet& coeffs,
                                               const SwitchingLaw& law, double t0,
                                               const Vector& x,
                                               const ControlSpec& control,
                                               int n_paths, double dt_sim,
                                               double horizon, std::uint64_t seed,
                                               unsigned threads = 0);

struct OptimalityRow {
    std::string label;
    CostEstimate cost;
    double excess_over_feedback = 0.0; ///< alt mean - feedback mean
    double excess_se = 0.0;            ///< SE of the per-path cost difference
    bool dominated = true;             ///< feedback <= alt within 3 excess_se
};

struct OptimalityReport {
    CostEstimate feedback_cost;
    double value_at_start = 0.0;
    double value_gap = 0.0; ///< feedback mean - value
    bool value_check_pass = false;
    std::vector<OptimalityRow> rows;

    bool pass() const;
};

/// Feedback policy vs each perturbed policy under common random numbers
/// (identical jump sequences and Brownian increments per path index), plus
/// the value-function check |feedback cost - <P x, x>| <= 3 SE.
OptimalityReport optimality_experiment(
    const CoefficientSet& coeffs, const SwitchingLaw& law, const RiccatiSolution& sol,
    double t0, const Vector& x,
    const std::vector<std::pair<std::string, ControlSpec>>& perturbations,
    int n_paths, double dt_sim, double horizon, std::uint64_t seed,
    unsigned threads = 0);

} // namespace lqswitch
