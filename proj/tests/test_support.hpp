#pragma once

// Shared instance builders and independent oracles for the test suites.
// Everything in here is test-only and must stay independent of the solver
// code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "lqswitch/lq.hpp"
#include "lqswitch/lyapunov.hpp"
#include "lqswitch/mpp.hpp"
#include "lqswitch/regime_field.hpp"
#include "lqswitch/riccati.hpp"

namespace lqtest {

using lqswitch::CoefficientSet;
using lqswitch::Matrix;
using lqswitch::SwitchingLaw;
using lqswitch::Vector;

inline Matrix scalar(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return m;
}

/// Law with zero hazard (no switches ever); one mark.
inline SwitchingLaw no_switching() {
    SwitchingLaw law;
    law.marks = {"only"};
    law.hazard = [](double, double, int) { return 0.0; };
    law.hazard_bound = 0.0;
    law.kernel = [](double, double, int) { return std::vector<double>{1.0}; };
    return law;
}

/// Constant per-mark hazard with a uniform-over-others kernel: a Markov chain.
inline SwitchingLaw markov_law(std::vector<double> rates, int initial_mark = 0,
                               double initial_elapsed = 0.0) {
    SwitchingLaw law;
    const int m = static_cast<int>(rates.size());
    for (int i = 0; i < m; ++i) law.marks.push_back("m" + std::to_string(i));
    law.initial_mark = initial_mark;
    law.initial_elapsed = initial_elapsed;
    double bound = 0.0;
    for (double r : rates) bound = std::max(bound, r);
    law.hazard_bound = bound;
    law.hazard = [rates](double, double, int i) { return rates[i]; };
    law.kernel = [m](double, double, int i) {
        std::vector<double> row(m, 0.0);
        if (m == 1)
            row[0] = 1.0;
        else
            for (int j = 0; j < m; ++j)
                if (j != i) row[j] = 1.0 / (m - 1);
        return row;
    };
    return law;
}

/// Elapsed-dependent hazard lambda(e) = min(slope*e, cap), 2 marks swapping.
inline SwitchingLaw elapsed_law(double slope, double cap, int n_marks = 2) {
    SwitchingLaw law;
    for (int i = 0; i < n_marks; ++i) law.marks.push_back("m" + std::to_string(i));
    law.hazard_bound = cap;
    law.hazard = [slope, cap](double, double e, int) {
        return std::min(slope * e, cap);
    };
    law.kernel = [n_marks](double, double, int i) {
        std::vector<double> row(n_marks, 0.0);
        if (n_marks == 1)
            row[0] = 1.0;
        else
            for (int j = 0; j < n_marks; ++j)
                if (j != i) row[j] = 1.0 / (n_marks - 1);
        return row;
    };
    return law;
}

/// Scalar per-mark constants a_i, b_i, c_i, s_i, g_i (any of the vectors may
/// have size 1 to share the value across marks).
struct ScalarPerMark {
    std::vector<double> a, b, c, s, g;
    int d = 1;

    double get(const std::vector<double>& v, int i) const {
        return v.size() == 1 ? v[0] : v[static_cast<std::size_t>(i)];
    }
};

inline CoefficientSet scalar_coeffs(const ScalarPerMark& p) {
    CoefficientSet cs;
    cs.n = 1;
    cs.k = 1;
    cs.d = p.d;
    cs.A = [p](double, double, int i) { return scalar(p.get(p.a, i)); };
    cs.B = [p](double, double, int i) { return scalar(p.get(p.b, i)); };
    for (int j = 0; j < p.d; ++j)
        cs.C.push_back([p](double, double, int i) { return scalar(p.get(p.c, i)); });
    cs.S = [p](double, double, int i) { return scalar(p.get(p.s, i)); };
    cs.G = [p](double e, int i) {
        (void)e;
        return scalar(p.get(p.g, i));
    };
    auto maxabs = [](const std::vector<double>& v) {
        double worst = 0.0;
        for (double x : v) worst = std::max(worst, std::abs(x));
        return worst;
    };
    cs.bounds = {maxabs(p.a), maxabs(p.b), maxabs(p.c), maxabs(p.g), maxabs(p.s)};
    cs.stationary = true;
    return cs;
}

/// The analytic benchmark: n = k = 1, A = 0, B = 1, C = 0, S = 0, G = 1,
/// no switching, T = 1. Riccati solution P(t) = 1 / (1 + (T - t)).
inline CoefficientSet benchmark_coeffs() {
    return scalar_coeffs({{0.0}, {1.0}, {0.0}, {0.0}, {1.0}, 1});
}

inline double benchmark_p(double t, double T = 1.0) {
    return 1.0 / (1.0 + (T - t));
}

/// Classical RK4 for a small ODE system dy/ds = f(s, y); used as the
/// independent oracle for mark-coupled scalar equations.
inline std::vector<double> rk4_integrate(
    const std::function<std::vector<double>(double, const std::vector<double>&)>& f,
    std::vector<double> y, double s0, double s1, int n_steps) {
    const double h = (s1 - s0) / n_steps;
    auto axpy = [](const std::vector<double>& base, double w,
                   const std::vector<double>& dir) {
        std::vector<double> out(base.size());
        for (std::size_t i = 0; i < base.size(); ++i) out[i] = base[i] + w * dir[i];
        return out;
    };
    for (int step = 0; step < n_steps; ++step) {
        const double s = s0 + step * h;
        const auto k1 = f(s, y);
        const auto k2 = f(s + 0.5 * h, axpy(y, 0.5 * h, k1));
        const auto k3 = f(s + 0.5 * h, axpy(y, 0.5 * h, k2));
        const auto k4 = f(s + h, axpy(y, h, k3));
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return y;
}

/// Backward-time oracle for the mark-coupled scalar Riccati system under a
/// constant-rate Markov law with uniform-over-others kernel:
///   -dp_i/dt = 2 a_i p_i + d c_i^2 p_i + s_i - b_i^2 p_i^2
///              + rate_i (mean_{j != i} p_j - p_i),  p_i(T) = g_i.
/// Returns p(t=t_eval). Fields are elapsed-independent for this law, so the
/// scalar system is exact. Integrated by RK4 in reversed time.
inline std::vector<double> markov_riccati_oracle(const ScalarPerMark& par,
                                                 const std::vector<double>& rates,
                                                 double T, double t_eval,
                                                 int n_steps = 20000) {
    const int m = static_cast<int>(rates.size());
    std::vector<double> terminal(m);
    for (int i = 0; i < m; ++i) terminal[i] = par.get(par.g, i);
    // tau = T - t; dp/dtau = rhs
    auto rhs = [&](double, const std::vector<double>& p) {
        std::vector<double> out(m);
        for (int i = 0; i < m; ++i) {
            double coupling = 0.0;
            if (m > 1) {
                for (int j = 0; j < m; ++j)
                    if (j != i) coupling += p[j];
                coupling = coupling / (m - 1) - p[i];
            }
            const double a = par.get(par.a, i);
            const double b = par.get(par.b, i);
            const double c = par.get(par.c, i);
            const double s = par.get(par.s, i);
            out[i] = 2.0 * a * p[i] + par.d * c * c * p[i] + s - b * b * p[i] * p[i] +
                     rates[i] * coupling;
        }
        return out;
    };
    return rk4_integrate(rhs, terminal, 0.0, T - t_eval, n_steps);
}

/// Same linear system with source (Lyapunov): -dp_i/dt = 2 a_i p_i
///   + d c_i^2 p_i + l_i + rate_i (mean_{j!=i} p_j - p_i), p_i(T) = h_i.
inline std::vector<double> markov_lyapunov_oracle(
    const std::vector<double>& a, const std::vector<double>& c, int d,
    const std::vector<double>& l, const std::vector<double>& h,
    const std::vector<double>& rates, double T, double t_eval,
    int n_steps = 20000) {
    const int m = static_cast<int>(rates.size());
    auto rhs = [&](double, const std::vector<double>& p) {
        std::vector<double> out(m);
        for (int i = 0; i < m; ++i) {
            double coupling = 0.0;
            if (m > 1) {
                for (int j = 0; j < m; ++j)
                    if (j != i) coupling += p[j];
                coupling = coupling / (m - 1) - p[i];
            }
            out[i] = 2.0 * a[i] * p[i] + d * c[i] * c[i] * p[i] + l[i] +
                     rates[i] * coupling;
        }
        return out;
    };
    return rk4_integrate(rhs, h, 0.0, T - t_eval, n_steps);
}

/// One-sample Kolmogorov-Smirnov statistic against a CDF.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs((i + 1) / n - f));
        d = std::max(d, std::abs(f - i / n));
    }
    return d;
}

/// Asymptotic KS critical value at level alpha = 0.01.
inline double ks_critical_001(std::size_t n) {
    return 1.6276 / std::sqrt(static_cast<double>(n));
}

} // namespace lqtest
