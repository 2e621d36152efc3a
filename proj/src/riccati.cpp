#include "lqswitch/riccati.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sweep_detail.hpp"

namespace lqswitch {

namespace {

struct RiccatiConstants {
    double K = 1.0;        // growth constant over the horizon
    double K_bound = 0.0;  // a priori norm bound K (M_G + T M_S)
    double tol_psd = 0.0;  // 10 dt (M_G + T M_S) K
};

RiccatiConstants riccati_constants(const CoefficientSet& coeffs, const Grid& grid) {
    RiccatiConstants c;
    const double scale =
        coeffs.bounds.M_G + grid.horizon() * coeffs.bounds.M_S;
    c.K = gronwall_constant(coeffs.bounds, coeffs.d, grid.horizon());
    c.K_bound = c.K * scale;
    c.tol_psd = 10.0 * grid.step() * scale * c.K;
    return c;
}

void check_invariants(const RegimeField& p, const RiccatiConstants& c,
                      const char* backend) {
    if (!p.all_finite())
        throw std::runtime_error(std::string(backend) + ": non-finite field values");
    const double floor = psd_floor(p);
    if (floor < -c.tol_psd - 1e-12)
        throw std::runtime_error(std::string(backend) +
                                 ": positivity breach beyond scheme tolerance "
                                 "(min eigenvalue " +
                                 std::to_string(floor) + ")");
    const double norm = p.max_node_norm();
    if (norm > c.K_bound * (1.0 + 1e-9) + 1e-12)
        throw std::runtime_error(std::string(backend) +
                                 ": a priori norm bound breached (max norm " +
                                 std::to_string(norm) + ")");
}

// Per-mark caches of S and B B' for the quadratic source. For
// non-stationary coefficients the entries are evaluated per node instead.
struct QuadSource {
    const CoefficientSet& coeffs;
    bool stationary;
    std::vector<Matrix> s_cache;
    std::vector<Matrix> bbt_cache;
    Matrix s_local, b_local, bbt_local, pb;

    explicit QuadSource(const CoefficientSet& cs, int n_marks)
        : coeffs(cs), stationary(cs.stationary) {
        if (stationary) {
            s_cache.reserve(n_marks);
            bbt_cache.reserve(n_marks);
            for (int i = 0; i < n_marks; ++i) {
                s_cache.push_back(symmetrized(cs.S(0.0, 0.0, i)));
                const Matrix b = cs.B(0.0, 0.0, i);
                bbt_cache.push_back(b * b.transpose());
            }
        }
        pb.resize(cs.n, cs.n);
    }

    // out = S - p Q p with Q = B B', everything at (te, ee, i)
    void eval(double te, double ee, int i, const detail::ConstMatMap& p,
              Matrix& out) {
        const Matrix* s = nullptr;
        const Matrix* bbt = nullptr;
        if (stationary) {
            s = &s_cache[i];
            bbt = &bbt_cache[i];
        } else {
            s_local = coeffs.S(te, ee, i);
            b_local = coeffs.B(te, ee, i);
            bbt_local.noalias() = b_local * b_local.transpose();
            s = &s_local;
            bbt = &bbt_local;
        }
        pb.noalias() = p * (*bbt);
        out = *s;
        out.noalias() -= pb * p;
    }
};

} // namespace

RiccatiSolution solve_riccati_direct(const CoefficientSet& coeffs,
                                     const SwitchingLaw& law, const Grid& grid) {
    const RiccatiConstants consts = riccati_constants(coeffs, grid);
    const double quad_stability =
        grid.step() * 2.0 * coeffs.bounds.M_B * coeffs.bounds.M_B * consts.K_bound;
    if (!(quad_stability < 1.0))
        throw std::invalid_argument(
            "solve_riccati_direct: quadratic-term stability violated, need "
            "dt*2*M_B^2*K_bound < 1");

    detail::SweepEngine engine(coeffs, law, grid);
    QuadSource quad(coeffs, law.mark_count());

    detail::SourceFn source = [&](int, int, double te, double ee, int i,
                                  const detail::ConstMatMap& p_right, Matrix& out) {
        quad.eval(te, ee, i, p_right, out);
    };

    RiccatiSolution sol{detail::sweep_full(engine, grid, coeffs, coeffs.G, source),
                        coeffs.d, RiccatiBackend::direct, {}};
    check_invariants(sol.P, consts, "solve_riccati_direct");
    return sol;
}

double step_size_delta(double terminal_norm_bound, const CoefficientSet& coeffs,
                       const Grid& grid) {
    if (!(terminal_norm_bound >= 0.0))
        throw std::invalid_argument("step_size_delta: R must be >= 0");
    const double T = grid.horizon();
    const double dt = grid.step();
    const double K = gronwall_constant(coeffs.bounds, coeffs.d, T);
    const double K0 = 2.0 * std::max(1.0, T) * K * K;
    const double R = terminal_norm_bound;
    const double r = 2.0 * K * R + 1.0;
    const double mb2 = coeffs.bounds.M_B * coeffs.bounds.M_B;

    double cap = T;
    const double denom1 = r * r * mb2 + coeffs.bounds.M_S;
    if (denom1 > 0.0) cap = std::min(cap, (r - K * R) / (K * denom1));
    if (mb2 > 0.0) cap = std::min(cap, 1.0 / (8.0 * K0 * r * r * mb2 * mb2));

    const int steps = static_cast<int>(std::floor(cap / dt + 1e-12));
    if (steps < 1)
        throw std::runtime_error(
            "step_size_delta: no admissible window of at least one grid step; "
            "the grid is too coarse for the contraction regime");
    return steps * dt;
}

namespace {

double cube_distance(const std::vector<detail::PlaneBuffer>& a,
                     const std::vector<detail::PlaneBuffer>& b, int k_left,
                     const detail::SweepEngine& engine, int n_marks) {
    double worst = 0.0;
    for (std::size_t w = 0; w < a.size(); ++w) {
        const int top = engine.row_top(k_left + static_cast<int>(w));
        for (int m = 0; m <= top; ++m)
            for (int i = 0; i < n_marks; ++i)
                worst = std::max(worst, spectral_norm(a[w].at(m, i) - b[w].at(m, i)));
    }
    return worst;
}

double cube_max_norm(const std::vector<detail::PlaneBuffer>& cube, int k_left,
                     const detail::SweepEngine& engine, int n_marks) {
    double worst = 0.0;
    for (std::size_t w = 0; w < cube.size(); ++w) {
        const int top = engine.row_top(k_left + static_cast<int>(w));
        for (int m = 0; m <= top; ++m)
            for (int i = 0; i < n_marks; ++i)
                worst = std::max(worst, spectral_norm(cube[w].at(m, i)));
    }
    return worst;
}

} // namespace

RiccatiSolution solve_riccati_picard(const CoefficientSet& coeffs,
                                     const SwitchingLaw& law, const Grid& grid,
                                     double tol, int max_iter) {
    if (!(tol > 0.0))
        throw std::invalid_argument("solve_riccati_picard: tol must be > 0");
    if (max_iter < 1)
        throw std::invalid_argument("solve_riccati_picard: max_iter must be >= 1");

    const RiccatiConstants consts = riccati_constants(coeffs, grid);
    const double K = consts.K;
    const double R = consts.K_bound; // a priori bound doubles as the terminal bound
    const double r = 2.0 * K * R + 1.0;
    const double delta = step_size_delta(R, coeffs, grid);
    const int window_steps =
        std::max(1, static_cast<int>(std::llround(delta / grid.step())));
    const bool quad_absent = coeffs.bounds.M_B == 0.0; // Gamma independent of P

    detail::SweepEngine engine(coeffs, law, grid);
    QuadSource quad(coeffs, law.mark_count());
    const int n_marks = law.mark_count();
    const int n_steps = grid.n_steps();

    RiccatiSolution sol{RegimeField(grid, coeffs.n, n_marks), coeffs.d,
                        RiccatiBackend::picard, {}};

    detail::PlaneBuffer right_edge = engine.make_plane();
    engine.fill_terminal(right_edge, coeffs.G);
    engine.store_slice(right_edge, n_steps, sol.P);

    int k_right = n_steps;
    int window_index = 0;
    while (k_right > 0) {
        const int k_left = std::max(0, k_right - window_steps);
        const int width = k_right - k_left;

        std::vector<detail::PlaneBuffer> old_cube(width + 1), new_cube(width + 1);
        for (int w = 0; w <= width; ++w) {
            old_cube[w] = right_edge; // constant-in-time initial iterate
            new_cube[w] = engine.make_plane();
        }
        new_cube[width] = right_edge;

        WindowDiagnostics diag;
        diag.index = window_index;
        diag.t_left = grid.time_node(k_left);
        diag.t_right = grid.time_node(k_right);

        detail::SourceFn source = [&](int k_next, int m_next, double te, double ee,
                                      int i, const detail::ConstMatMap&,
                                      Matrix& out) {
            quad.eval(te, ee, i,
                      std::as_const(old_cube)[k_next - k_left].at(m_next, i), out);
        };

        bool converged = false;
        for (int it = 1; it <= max_iter; ++it) {
            for (int k = k_right - 1; k >= k_left; --k)
                engine.step(k + 1, new_cube[k + 1 - k_left], new_cube[k - k_left],
                            source);

            const double dist =
                cube_distance(old_cube, new_cube, k_left, engine, n_marks);
            diag.distances.push_back(dist);
            if (diag.distances.size() >= 2) {
                const double prev = diag.distances[diag.distances.size() - 2];
                if (prev > 0.0) diag.contraction_ratios.push_back(dist / prev);
            }

            const double norm = cube_max_norm(new_cube, k_left, engine, n_marks);
            if (norm > r * (1.0 + 1e-9) + 1e-12)
                throw std::runtime_error(
                    "solve_riccati_picard: iterate escaped the contraction ball "
                    "(norm " +
                    std::to_string(norm) + " > r " + std::to_string(r) + ")");
            diag.max_norm = norm;

            std::swap(old_cube, new_cube);
            diag.iterations = it;
            if (quad_absent || dist < tol) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw std::runtime_error(
                "solve_riccati_picard: max_iter exceeded in window " +
                std::to_string(window_index));

        for (int k = k_left; k < k_right; ++k)
            engine.store_slice(old_cube[k - k_left], k, sol.P);
        right_edge = std::move(old_cube[0]);

        sol.diagnostics.push_back(std::move(diag));
        k_right = k_left;
        ++window_index;
    }

    check_invariants(sol.P, consts, "solve_riccati_picard");
    return sol;
}

AprioriReport apriori_checks(const RiccatiSolution& sol,
                             const CoefficientSet& coeffs) {
    const RiccatiConstants consts = riccati_constants(coeffs, sol.P.grid());
    AprioriReport report;
    report.psd_floor_value = psd_floor(sol.P);
    report.psd_tolerance = consts.tol_psd;
    report.max_norm = sol.P.max_node_norm();
    report.norm_bound = consts.K_bound;
    report.positivity_pass = report.psd_floor_value >= -consts.tol_psd - 1e-12;
    report.norm_pass = report.max_norm <= consts.K_bound * (1.0 + 1e-9) + 1e-12;
    return report;
}

} // namespace lqswitch
