#include "sweep_detail.hpp"

#include <stdexcept>

namespace lqswitch::detail {

SweepEngine::SweepEngine(const CoefficientSet& coeffs, const SwitchingLaw& law,
                         const Grid& grid)
    : coeffs_(coeffs), law_(law), grid_(grid), dim_(coeffs.n),
      n_marks_(law.mark_count()), m_public_(grid.elapsed_top()),
      m_alloc_(grid.elapsed_top() + grid.n_steps()),
      stationary_(coeffs.stationary) {
    law_.validate();
    const auto& b = coeffs_.bounds;
    const double stability =
        grid_.step() * (2.0 * b.M_A + coeffs_.d * b.M_C * b.M_C +
                        2.0 * law_.hazard_bound);
    if (!(stability < 1.0))
        throw std::invalid_argument(
            "sweep: explicit-scheme stability violated, need "
            "dt*(2*M_A + d*M_C^2 + 2*hazard_bound) < 1");

    if (stationary_) {
        a_cache_.reserve(n_marks_);
        c_cache_.reserve(n_marks_);
        for (int i = 0; i < n_marks_; ++i) {
            a_cache_.push_back(coeffs_.A(0.0, 0.0, i));
            std::vector<Matrix> ci;
            ci.reserve(coeffs_.d);
            for (int j = 0; j < coeffs_.d; ++j)
                ci.push_back(coeffs_.C[j](0.0, 0.0, i));
            c_cache_.push_back(std::move(ci));
        }
    }

    drift_.resize(dim_, dim_);
    tmp_.resize(dim_, dim_);
    csum_.resize(dim_, dim_);
    reset_.resize(dim_, dim_);
    src_.resize(dim_, dim_);
    acc_.resize(dim_, dim_);
}

void SweepEngine::fill_terminal(
    PlaneBuffer& plane, const std::function<Matrix(double, int)>& terminal) const {
    const double dt = grid_.step();
    for (int m = 0; m <= m_alloc_; ++m)
        for (int i = 0; i < n_marks_; ++i)
            plane.at(m, i) = symmetrized(terminal(m * dt, i));
}

void SweepEngine::step(int k_next, const PlaneBuffer& next, PlaneBuffer& cur,
                       const SourceFn& source) {
    const double dt = grid_.step();
    const double te = k_next * dt;
    const int top = row_top(k_next - 1);

    for (int i = 0; i < n_marks_; ++i) {
        const Matrix* a_ptr = stationary_ ? &a_cache_[i] : nullptr;
        const std::vector<Matrix>* c_ptr = stationary_ ? &c_cache_[i] : nullptr;
        Matrix a_local;
        std::vector<Matrix> c_local;

        for (int m = 0; m <= top; ++m) {
            const double ee = (m + 1) * dt;
            const ConstMatMap p_right = next.at(m + 1, i);

            if (!stationary_) {
                a_local = coeffs_.A(te, ee, i);
                c_local.clear();
                for (int j = 0; j < coeffs_.d; ++j)
                    c_local.push_back(coeffs_.C[j](te, ee, i));
                a_ptr = &a_local;
                c_ptr = &c_local;
            }

            acc_ = p_right;
            drift_.noalias() = a_ptr->transpose() * p_right;
            acc_ += dt * drift_;
            acc_ += dt * drift_.transpose();
            for (int j = 0; j < coeffs_.d; ++j) {
                const Matrix& cj = (*c_ptr)[j];
                tmp_.noalias() = cj.transpose() * p_right;
                csum_.noalias() = tmp_ * cj;
                acc_ += dt * csum_;
            }

            source(k_next, m + 1, te, ee, i, p_right, src_);
            acc_ += dt * src_;

            const double lam = law_.hazard(te, ee, i);
            if (lam > 0.0) {
                const auto phi = law_.kernel(te, ee, i);
                reset_.setZero();
                for (int j = 0; j < n_marks_; ++j)
                    if (phi[j] != 0.0) reset_ += phi[j] * next.at(0, j);
                acc_ += (dt * lam) * (reset_ - p_right);
            }

            cur.at(m, i) = 0.5 * (acc_ + acc_.transpose());
        }
    }
}

void SweepEngine::store_slice(const PlaneBuffer& plane, int k,
                              RegimeField& field) const {
    for (int m = 0; m <= m_public_; ++m)
        for (int i = 0; i < n_marks_; ++i) field.set_node(k, m, i, plane.at(m, i));
}

RegimeField sweep_full(SweepEngine& engine, const Grid& grid,
                       const CoefficientSet& coeffs,
                       const std::function<Matrix(double, int)>& terminal,
                       const SourceFn& source) {
    RegimeField field(grid, coeffs.n, engine.n_marks());
    PlaneBuffer next = engine.make_plane();
    PlaneBuffer cur = engine.make_plane();
    engine.fill_terminal(next, terminal);
    engine.store_slice(next, grid.n_steps(), field);
    for (int k = grid.n_steps() - 1; k >= 0; --k) {
        engine.step(k + 1, next, cur, source);
        engine.store_slice(cur, k, field);
        std::swap(next, cur);
    }
    if (!field.all_finite())
        throw std::runtime_error("sweep: non-finite field values (unstable step?)");
    return field;
}

} // namespace lqswitch::detail
