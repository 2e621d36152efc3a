#include "lqswitch/lyapunov.hpp"

#include <cmath>
#include <stdexcept>

#include "lqswitch/parallel.hpp"
#include "lqswitch/rng.hpp"
#include "sweep_detail.hpp"

namespace lqswitch {

LyapunovSolution solve_lyapunov(const LyapunovProblem& prob, const Grid& grid) {
    if (!prob.terminal) throw std::invalid_argument("solve_lyapunov: terminal missing");
    if (!prob.source) throw std::invalid_argument("solve_lyapunov: source missing");

    detail::SweepEngine engine(prob.coeffs, prob.law, grid);

    const bool stationary = prob.coeffs.stationary;
    std::vector<Matrix> source_cache;
    if (stationary) {
        source_cache.reserve(prob.law.mark_count());
        for (int i = 0; i < prob.law.mark_count(); ++i)
            source_cache.push_back(symmetrized(prob.source(0.0, 0.0, i)));
    }

    detail::SourceFn source = [&](int, int, double te, double ee, int i,
                                  const detail::ConstMatMap&, Matrix& out) {
        if (stationary)
            out = source_cache[i];
        else
            out = prob.source(te, ee, i);
    };

    LyapunovSolution sol{detail::sweep_full(engine, grid, prob.coeffs,
                                            prob.terminal, source),
                         prob.coeffs.d};
    return sol;
}

ResidualEstimate verify_representation(const LyapunovSolution& sol,
                                       const LyapunovProblem& prob, double t0,
                                       const Vector& x, const OpenLoopFn& u,
                                       double control_bound, int n_paths,
                                       double dt_sim, std::uint64_t seed,
                                       unsigned threads) {
    const double horizon = sol.P.grid().horizon();
    const ControlSpec control =
        u ? ControlSpec::make_open_loop(u, control_bound) : ControlSpec::zero();

    std::vector<double> functionals(n_paths);
    parallel_for(
        static_cast<std::size_t>(n_paths),
        [&](std::size_t p) {
            const SamplePath path =
                simulate_state(prob.coeffs, prob.law, control, t0, x, dt_sim,
                               horizon, derived_seed(seed, p));
            // Left-endpoint (predictable) quadrature of
            //   <L X, X> - 2 <P B u, X>.
            double integral = 0.0;
            for (std::size_t l = 0; l + 1 < path.n_nodes(); ++l) {
                const double dt = path.times[l + 1] - path.times[l];
                const double t = path.times[l];
                const double e = path.elapsed[l];
                const int i = path.marks[l];
                const Vector& xs = path.state[l];
                const Matrix ls = prob.source(t, e, i);
                double val = xs.dot(ls * xs);
                if (control.kind != ControlSpec::Kind::zero) {
                    const Matrix ps = sol.P.eval(t, e, i);
                    const Matrix bs = prob.coeffs.B(t, e, i);
                    val -= 2.0 * xs.dot(ps * (bs * path.control[l]));
                }
                integral += dt * val;
            }
            const std::size_t last = path.n_nodes() - 1;
            const Matrix h = prob.terminal(path.elapsed[last], path.marks[last]);
            functionals[p] = path.state[last].dot(h * path.state[last]) + integral;
        },
        threads);

    double mean = 0.0;
    for (double f : functionals) mean += f;
    mean /= n_paths;
    double var = 0.0;
    for (double f : functionals) var += (f - mean) * (f - mean);
    const double se =
        n_paths > 1 ? std::sqrt(var / (static_cast<double>(n_paths) * (n_paths - 1)))
                    : 0.0;

    const auto [e0, i0] = elapsed_and_mark(JumpSequence{}, prob.law, t0);
    const Matrix p0 = sol.P.eval(t0, e0, i0);
    return {mean - x.dot(p0 * x), se, n_paths};
}

SupBoundReport sup_bound_check(const LyapunovSolution& sol,
                               const LyapunovProblem& prob) {
    const Grid& grid = sol.P.grid();
    const double T = grid.horizon();
    SupBoundReport report;
    report.worst_ratio = 0.0;
    for (int k = 0; k < grid.n_time_nodes(); ++k) {
        const double t = grid.time_node(k);
        const double bound =
            gronwall_constant(prob.coeffs.bounds, prob.coeffs.d, T - t) *
            (prob.terminal_bound + (T - t) * prob.source_bound);
        if (k == 0) report.bound_at_start = bound;
        const double norm = sol.P.max_slice_norm(k);
        const double ratio = norm / std::max(bound, 1e-300);
        if (ratio > report.worst_ratio) {
            report.worst_ratio = ratio;
            report.worst_time = t;
        }
    }
    report.pass = report.worst_ratio <= 1.0 + 1e-9;
    return report;
}

} // namespace lqswitch
