#include "lqswitch/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "lqswitch/parallel.hpp"
#include "lqswitch/rng.hpp"

namespace lqswitch {

ControlSpec ControlSpec::zero() {
    return {};
}

ControlSpec ControlSpec::make_open_loop(OpenLoopFn u, double bound) {
    ControlSpec c;
    c.kind = Kind::open_loop;
    c.open_loop = std::move(u);
    c.bound = bound;
    return c;
}

ControlSpec ControlSpec::feedback(const RegimeField& p) {
    ControlSpec c;
    c.kind = Kind::feedback;
    c.feedback_field = &p;
    return c;
}

ControlSpec ControlSpec::feedback_with_offset(const RegimeField& p, OpenLoopFn offset,
                                              double bound) {
    ControlSpec c;
    c.kind = Kind::feedback;
    c.feedback_field = &p;
    c.open_loop = std::move(offset);
    c.bound = bound;
    return c;
}

namespace {

// Merge the uniform grid with the jump times; a jump landing within a
// round-off ulp of a grid node replaces it, so jump times are node values
// exactly and the regime comparison below can use ==.
std::vector<double> build_nodes(double t0, double horizon, double dt_sim,
                                const JumpSequence& jumps) {
    std::vector<double> nodes;
    const int n_uniform = static_cast<int>(std::ceil((horizon - t0) / dt_sim - 1e-9));
    nodes.reserve(static_cast<std::size_t>(n_uniform) + jumps.size() + 2);
    for (int l = 0; l < n_uniform; ++l) nodes.push_back(t0 + l * dt_sim);
    nodes.push_back(horizon);
    for (double tj : jumps.times)
        if (tj > t0 && tj < horizon) nodes.push_back(tj);
    std::sort(nodes.begin(), nodes.end());
    const double eps = 1e-12 * std::max(1.0, horizon);
    std::vector<double> merged;
    merged.reserve(nodes.size());
    for (double t : nodes) {
        if (!merged.empty() && t - merged.back() < eps) {
            // Prefer the jump-time value so later equality tests are exact.
            if (std::binary_search(jumps.times.begin(), jumps.times.end(), t))
                merged.back() = t;
            continue;
        }
        merged.push_back(t);
    }
    return merged;
}

} // namespace

SamplePath simulate_state(const CoefficientSet& coeffs, const SwitchingLaw& law,
                          const ControlSpec& control, double t0, const Vector& x,
                          double dt_sim, double horizon, std::uint64_t seed) {
    if (!(dt_sim > 0.0))
        throw std::invalid_argument("simulate_state: dt_sim must be > 0");
    if (!(horizon > t0))
        throw std::invalid_argument("simulate_state: horizon must exceed t0");
    if (x.size() != coeffs.n)
        throw std::invalid_argument("simulate_state: state dimension mismatch");
    if (control.kind == ControlSpec::Kind::feedback && !control.feedback_field)
        throw std::invalid_argument("simulate_state: feedback field missing");

    SamplePath path;
    path.jumps = simulate_switching(law, t0, horizon, derived_seed(seed, 1));
    path.times = build_nodes(t0, horizon, dt_sim, path.jumps);

    const std::size_t n_nodes = path.times.size();
    path.elapsed.resize(n_nodes);
    path.marks.resize(n_nodes);
    path.state.reserve(n_nodes);
    path.control.reserve(n_nodes - 1);
    path.brownian.reserve(n_nodes - 1);

    // Regime coordinates per node, right-continuous at jumps.
    {
        std::size_t jn = 0;
        double last_jump = -law.initial_elapsed;
        int mark = law.initial_mark;
        for (std::size_t l = 0; l < n_nodes; ++l) {
            const double t = path.times[l];
            while (jn < path.jumps.size() && path.jumps.times[jn] <= t) {
                last_jump = path.jumps.times[jn];
                mark = path.jumps.marks[jn];
                ++jn;
            }
            path.elapsed[l] = t - last_jump;
            path.marks[l] = mark;
        }
    }

    std::mt19937_64 rng(derived_seed(seed, 2));
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Per-mark coefficient cache for the stationary case; the Monte-Carlo
    // loops would otherwise spend most of their time in coefficient closures.
    std::vector<Matrix> a_cache, b_cache;
    std::vector<std::vector<Matrix>> c_cache;
    if (coeffs.stationary) {
        for (int i = 0; i < law.mark_count(); ++i) {
            a_cache.push_back(coeffs.A(0.0, 0.0, i));
            b_cache.push_back(coeffs.B(0.0, 0.0, i));
            std::vector<Matrix> ci;
            for (int j = 0; j < coeffs.d; ++j) ci.push_back(coeffs.C[j](0.0, 0.0, i));
            c_cache.push_back(std::move(ci));
        }
    }

    Vector xs = x;
    path.state.push_back(xs);
    Vector u(coeffs.k);
    Vector dw(coeffs.d);
    Vector incr(coeffs.n);
    Matrix a_local, b_local;
    std::vector<Matrix> c_local;

    for (std::size_t l = 0; l + 1 < n_nodes; ++l) {
        const double t = path.times[l];
        const double e = path.elapsed[l];
        const int i = path.marks[l];
        const double dt = path.times[l + 1] - path.times[l];
        const double sqrt_dt = std::sqrt(dt);

        const Matrix* a;
        const Matrix* b;
        const std::vector<Matrix>* cs;
        if (coeffs.stationary) {
            a = &a_cache[i];
            b = &b_cache[i];
            cs = &c_cache[i];
        } else {
            a_local = coeffs.A(t, e, i);
            b_local = coeffs.B(t, e, i);
            c_local.clear();
            for (int j = 0; j < coeffs.d; ++j) c_local.push_back(coeffs.C[j](t, e, i));
            a = &a_local;
            b = &b_local;
            cs = &c_local;
        }

        switch (control.kind) {
            case ControlSpec::Kind::zero:
                u.setZero();
                break;
            case ControlSpec::Kind::open_loop:
                u = control.open_loop(t, e, i);
                break;
            case ControlSpec::Kind::feedback:
                u.noalias() = -b->transpose() *
                              (control.feedback_field->eval(t, e, i) * xs);
                if (control.open_loop) u += control.open_loop(t, e, i);
                break;
        }

        for (int j = 0; j < coeffs.d; ++j) dw(j) = sqrt_dt * gauss(rng);

        incr.noalias() = (*a) * xs;
        incr.noalias() += (*b) * u;
        incr *= dt;
        for (int j = 0; j < coeffs.d; ++j)
            incr.noalias() += dw(j) * ((*cs)[j] * xs);

        xs += incr;
        if (!xs.allFinite())
            throw std::runtime_error(
                "simulate_state: state blew up (step too coarse?)");

        path.control.push_back(u);
        path.brownian.push_back(dw);
        path.state.push_back(xs);
    }
    return path;
}

SamplePath simulate_closed_loop(const CoefficientSet& coeffs, const SwitchingLaw& law,
                                const RegimeField& p, double t0, const Vector& x,
                                double dt_sim, double horizon, std::uint64_t seed) {
    return simulate_state(coeffs, law, ControlSpec::feedback(p), t0, x, dt_sim,
                          horizon, seed);
}

double moment_bound_constant(const CoefficientSet& coeffs, double duration) {
    const auto& b = coeffs.bounds;
    const double T = std::max(0.0, duration);
    const double gamma = 2.0 * b.M_A + coeffs.d * b.M_C * b.M_C + 1.0;
    const double grow = std::exp(gamma * T);
    const double mb2 = b.M_B * b.M_B;
    return (4.0 + 8.0 * T * (T * b.M_A * b.M_A + coeffs.d * b.M_C * b.M_C) * grow) *
               std::max(1.0, mb2) +
           8.0 * T * mb2;
}

MomentCheckResult moment_check(const CoefficientSet& coeffs, const SwitchingLaw& law,
                               const ControlSpec& control, double t0, const Vector& x,
                               int n_paths, double dt_sim, double horizon,
                               std::uint64_t seed, unsigned threads) {
    if (n_paths < 1)
        throw std::invalid_argument("moment_check: n_paths must be >= 1");

    std::vector<double> sup_sq(n_paths), energy(n_paths);
    parallel_for(
        static_cast<std::size_t>(n_paths),
        [&](std::size_t p) {
            const SamplePath path = simulate_state(coeffs, law, control, t0, x,
                                                   dt_sim, horizon,
                                                   derived_seed(seed, p));
            double sup = 0.0;
            for (const Vector& xs : path.state)
                sup = std::max(sup, xs.squaredNorm());
            double en = 0.0;
            for (std::size_t l = 0; l + 1 < path.n_nodes(); ++l)
                en += (path.times[l + 1] - path.times[l]) *
                      path.control[l].squaredNorm();
            sup_sq[p] = sup;
            energy[p] = en;
        },
        threads);

    MomentCheckResult res;
    for (int p = 0; p < n_paths; ++p) {
        res.empirical += sup_sq[p];
        res.control_energy += energy[p];
    }
    res.empirical /= n_paths;
    res.control_energy /= n_paths;
    res.bound_constant = moment_bound_constant(coeffs, horizon - t0);
    res.bound = res.bound_constant * (x.squaredNorm() + res.control_energy);
    res.pass = res.empirical <= res.bound;
    return res;
}

} // namespace lqswitch
