#include "lqswitch/mpp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "lqswitch/parallel.hpp"
#include "lqswitch/rng.hpp"

namespace lqswitch {

namespace {

constexpr double kProbTol = 1e-12;

void check_kernel_row(const std::vector<double>& phi, int n_marks) {
    if (static_cast<int>(phi.size()) != n_marks)
        throw std::runtime_error("kernel returned a vector of wrong size");
    double sum = 0.0;
    for (double p : phi) {
        if (!(p >= -kProbTol))
            throw std::runtime_error("kernel entry negative beyond tolerance");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProbTol)
        throw std::runtime_error("kernel row does not sum to 1 within 1e-12");
}

int draw_mark(const std::vector<double>& phi, double u01) {
    double acc = 0.0;
    const int m = static_cast<int>(phi.size());
    for (int j = 0; j < m; ++j) {
        acc += std::max(0.0, phi[j]);
        if (u01 <= acc) return j;
    }
    return m - 1;
}

} // namespace

void SwitchingLaw::validate() const {
    if (marks.empty())
        throw std::invalid_argument("SwitchingLaw: empty mark set");
    if (initial_mark < 0 || initial_mark >= mark_count())
        throw std::invalid_argument("SwitchingLaw: initial_mark out of range");
    if (!(initial_elapsed >= 0.0))
        throw std::invalid_argument("SwitchingLaw: initial_elapsed must be >= 0");
    if (!(hazard_bound >= 0.0) || !std::isfinite(hazard_bound))
        throw std::invalid_argument("SwitchingLaw: hazard_bound must be finite and >= 0");
    if (!hazard)
        throw std::invalid_argument("SwitchingLaw: hazard function missing");
    if (!kernel)
        throw std::invalid_argument("SwitchingLaw: kernel function missing");
}

JumpSequence simulate_switching(const SwitchingLaw& law, double horizon,
                                std::uint64_t seed) {
    return simulate_switching(law, 0.0, horizon, seed);
}

JumpSequence simulate_switching(const SwitchingLaw& law, double t_begin,
                                double t_end, std::uint64_t seed) {
    law.validate();
    if (!(t_end > t_begin))
        throw std::invalid_argument("simulate_switching: empty time interval");

    JumpSequence seq;
    if (law.hazard_bound == 0.0) return seq; // dominated by a zero-rate stream

    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> exp_gap(law.hazard_bound);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    double t = t_begin;
    // One global elapsed clock: the initial sojourn started at -initial_elapsed,
    // so with no jump yet the elapsed time at s is s + initial_elapsed.
    double last_jump = -law.initial_elapsed;
    int mark = law.initial_mark;

    while (true) {
        const double t_cand = t + exp_gap(rng);
        if (t_cand > t_end) break;
        t = t_cand;
        const double e = t - last_jump;
        const double lam = law.hazard(t, e, mark);
        if (!(lam >= 0.0) || !std::isfinite(lam))
            throw std::runtime_error("simulate_switching: hazard returned a bad value");
        if (lam > law.hazard_bound * (1.0 + 1e-12))
            throw std::runtime_error(
                "simulate_switching: hazard exceeds hazard_bound (model misspecified)");
        if (unif(rng) * law.hazard_bound < lam) {
            auto phi = law.kernel(t, e, mark);
            check_kernel_row(phi, law.mark_count());
            mark = draw_mark(phi, unif(rng));
            seq.times.push_back(t);
            seq.marks.push_back(mark);
            last_jump = t;
        }
    }
    return seq;
}

std::pair<double, int> elapsed_and_mark(const JumpSequence& seq,
                                        const SwitchingLaw& law, double t) {
    if (!(t >= 0.0))
        throw std::invalid_argument("elapsed_and_mark: t must be >= 0");
    // Last jump at or before t (right continuity at jump times).
    const auto it = std::upper_bound(seq.times.begin(), seq.times.end(), t);
    if (it == seq.times.begin())
        return {t + law.initial_elapsed, law.initial_mark};
    const std::size_t idx = static_cast<std::size_t>(it - seq.times.begin()) - 1;
    return {t - seq.times[idx], seq.marks[idx]};
}

namespace {

// Composite Simpson over one inter-jump segment; the integrand is smooth
// there apart from hazard caps, whose kink error is far below the MC noise.
double simpson_segment(double a, double b, double base_h,
                       const std::function<double(double)>& f) {
    if (b <= a) return 0.0;
    int n_sub = static_cast<int>(std::ceil((b - a) / base_h));
    n_sub = std::max(2, n_sub + (n_sub % 2)); // even count
    const double h = (b - a) / n_sub;
    double acc = f(a) + f(b);
    for (int j = 1; j < n_sub; ++j)
        acc += f(a + j * h) * (j % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

} // namespace

CompensatorCheckResult compensator_check(const SwitchingLaw& law, double horizon,
                                         const PredictableFn& test_fn, int n_paths,
                                         std::uint64_t seed, int quad_resolution,
                                         unsigned threads) {
    law.validate();
    if (n_paths < 100)
        throw std::invalid_argument("compensator_check: n_paths must be >= 100");
    if (!(horizon > 0.0))
        throw std::invalid_argument("compensator_check: horizon must be > 0");

    const int n_marks = law.mark_count();
    const double base_h = horizon / std::max(8, quad_resolution);

    std::vector<double> lhs_vals(n_paths), rhs_vals(n_paths);

    parallel_for(
        static_cast<std::size_t>(n_paths),
        [&](std::size_t p) {
            const JumpSequence seq =
                simulate_switching(law, horizon, derived_seed(seed, p));

            // Realized side: H at the pre-jump state, target = realized mark.
            double lhs = 0.0;
            double prev_jump = -law.initial_elapsed;
            int mark = law.initial_mark;
            for (std::size_t n = 0; n < seq.size(); ++n) {
                const double tn = seq.times[n];
                lhs += test_fn(tn, tn - prev_jump, mark, seq.marks[n]);
                prev_jump = tn;
                mark = seq.marks[n];
            }

            // Intensity side: integrate sum_j H phi_j lambda between jumps.
            double rhs = 0.0;
            prev_jump = -law.initial_elapsed;
            mark = law.initial_mark;
            std::size_t n = 0;
            double seg_start = 0.0;
            while (seg_start < horizon) {
                const double seg_end =
                    (n < seq.size()) ? std::min(seq.times[n], horizon) : horizon;
                const double base = prev_jump;
                const int i = mark;
                rhs += simpson_segment(seg_start, seg_end, base_h, [&](double s) {
                    const double e = s - base;
                    const double lam = law.hazard(s, e, i);
                    if (lam == 0.0) return 0.0;
                    const auto phi = law.kernel(s, e, i);
                    double acc = 0.0;
                    for (int j = 0; j < n_marks; ++j)
                        acc += test_fn(s, e, i, j) * phi[j];
                    return acc * lam;
                });
                if (n >= seq.size() || seq.times[n] >= horizon) break;
                prev_jump = seq.times[n];
                mark = seq.marks[n];
                seg_start = seq.times[n];
                ++n;
            }

            lhs_vals[p] = lhs;
            rhs_vals[p] = rhs;
        },
        threads);

    CompensatorCheckResult res;
    res.n_paths = n_paths;
    double sl = 0, sr = 0;
    for (int p = 0; p < n_paths; ++p) {
        sl += lhs_vals[p];
        sr += rhs_vals[p];
    }
    res.lhs = sl / n_paths;
    res.rhs = sr / n_paths;
    double vl = 0, vr = 0, vd = 0;
    for (int p = 0; p < n_paths; ++p) {
        const double dl = lhs_vals[p] - res.lhs;
        const double dr = rhs_vals[p] - res.rhs;
        vl += dl * dl;
        vr += dr * dr;
        const double dd = (lhs_vals[p] - rhs_vals[p]) - (res.lhs - res.rhs);
        vd += dd * dd;
    }
    const double denom = static_cast<double>(n_paths) * (n_paths - 1);
    res.se_lhs = std::sqrt(vl / denom);
    res.se_rhs = std::sqrt(vr / denom);
    res.se_diff = std::sqrt(vd / denom);
    return res;
}

} // namespace lqswitch
