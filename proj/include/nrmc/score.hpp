#ifndef NRMC_SCORE_HPP
#define NRMC_SCORE_HPP

#include "nrmc/graph.hpp"

namespace nrmc {

// J = w_pop * J_pop + w_compact * compact_scale * J_c. The Gibbs target is
// pi(xi) proportional to exp(-J(xi)); all ratio arithmetic elsewhere stays in
// log space.
struct ScoreSpec {
    enum class PopMode { HardBounds, SquaredDeviation };
    enum class CompactMode { CutEdgeCount, SharedBoundaryLength };

    double w_pop = 1.0;
    double w_compact = 1.0;
    PopMode pop_mode = PopMode::HardBounds;
    double pop_min = 0.0;
    double pop_max = std::numeric_limits<double>::infinity();
    double pop_target = 0.0; // squared-deviation mode only; not calibrated
    CompactMode compact_mode = CompactMode::CutEdgeCount;
    double compact_scale = 1.0;
};

// +infinity iff a hard population bound is violated.
double total_score(const Plan& plan, const ScoreSpec& spec);

// J(F_f(plan)) - J(plan), touching only the two districts the flip modifies.
// Requires the flip to stay inside hard bounds (callers filter through the
// validity spec first).
double score_delta(const Plan& plan, Flip f, const ScoreSpec& spec);

} // namespace nrmc

#endif
