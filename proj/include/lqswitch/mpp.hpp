#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace lqswitch {

/// Jump intensity lambda(t, e, i): calendar time, time since the last switch,
/// current mark index.
using HazardFn = std::function<double(double t, double e, int mark)>;

/// Post-jump mark distribution phi(t, e, i): probability vector over marks.
using KernelFn = std::function<std::vector<double>(double t, double e, int mark)>;

/// The switching mechanism: a finite mark set with an elapsed-time-dependent
/// hazard and a mark transition kernel. The elapsed-time dependence is what
/// makes the mark process non-Markovian on its own; the pair (elapsed, mark)
/// is Markov. The induced compensator is absolutely continuous by
/// construction, so jump times are totally inaccessible.
struct SwitchingLaw {
    std::vector<std::string> marks; ///< display names; indices 0..m-1 are used everywhere else
    int initial_mark = 0;
    double initial_elapsed = 0.0;   ///< time already spent in initial_mark at t = 0
    HazardFn hazard;
    double hazard_bound = 0.0;      ///< lambda_max dominating the hazard (thinning envelope)
    KernelFn kernel;

    int mark_count() const { return static_cast<int>(marks.size()); }

    /// Structural checks: nonempty mark set, valid initial mark,
    /// nonnegative bound and initial elapsed, callbacks present.
    /// Throws std::invalid_argument on violation.
    void validate() const;
};

/// Realized switch times and post-switch marks on a bounded horizon.
struct JumpSequence {
    std::vector<double> times; ///< strictly increasing, in (t_begin, t_end]
    std::vector<int> marks;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
};

/// Exact simulation by thinning: candidate times from a homogeneous
/// rate-hazard_bound stream, accepted with probability lambda/lambda_max.
/// Throws std::runtime_error if a hazard evaluation exceeds hazard_bound.
JumpSequence simulate_switching(const SwitchingLaw& law, double horizon,
                                std::uint64_t seed);

/// Same, restricted to (t_begin, t_end]; the elapsed clock at t_begin is
/// t_begin + law.initial_elapsed (no switch has happened before t_begin).
JumpSequence simulate_switching(const SwitchingLaw& law, double t_begin,
                                double t_end, std::uint64_t seed);

/// (e_t, I_t): time since the last switch at or before t, and the mark then
/// installed. Right-continuous: at a jump time the post-jump values are
/// returned, i.e. (0, new mark).
std::pair<double, int> elapsed_and_mark(const JumpSequence& seq,
                                        const SwitchingLaw& law, double t);

/// Bounded predictable test function H(t, e, i, j): evaluated at the pre-jump
/// state (e, i) and a candidate target mark j.
using PredictableFn = std::function<double(double t, double e, int mark, int target)>;

struct CompensatorCheckResult {
    double lhs = 0.0;     ///< mean of the sum of H over realized jumps
    double rhs = 0.0;     ///< mean of the integral of H against the intensity
    double se_lhs = 0.0;
    double se_rhs = 0.0;
    double se_diff = 0.0; ///< standard error of the per-path difference (shared paths)
    int n_paths = 0;
};

/// Monte-Carlo check of the defining identity of the compensator:
/// E sum_n H(T_n, e_{T_n-}, I_{T_n-}, xi_n)
///   = E int_0^T sum_j H(s, e_s, I_s, j) phi_j(s, e_s, I_s) lambda(s, e_s, I_s) ds.
/// Both sides are estimated on the same paths; the right side is integrated
/// segment-wise by composite Simpson between jumps (quad_resolution
/// subintervals across the horizon sets the base step).
CompensatorCheckResult compensator_check(const SwitchingLaw& law, double horizon,
                                         const PredictableFn& test_fn, int n_paths,
                                         std::uint64_t seed,
                                         int quad_resolution = 128,
                                         unsigned threads = 0);

} // namespace lqswitch
