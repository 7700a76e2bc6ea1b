#include "nrmc/score.hpp"

#include <cmath>
#include <stdexcept>

namespace nrmc {

namespace {

double pop_term(const Plan& plan, const ScoreSpec& spec) {
    switch (spec.pop_mode) {
    case ScoreSpec::PopMode::HardBounds:
        for (int d = 0; d < plan.district_count(); ++d) {
            const double p = plan.district_pop(d);
            if (p < spec.pop_min || p > spec.pop_max)
                return std::numeric_limits<double>::infinity();
        }
        return 0.0;
    case ScoreSpec::PopMode::SquaredDeviation: {
        double s = 0.0;
        for (int d = 0; d < plan.district_count(); ++d) {
            const double dev = plan.district_pop(d) - spec.pop_target;
            s += dev * dev;
        }
        return s;
    }
    }
    return 0.0;
}

double compact_term(const Plan& plan, const ScoreSpec& spec) {
    switch (spec.compact_mode) {
    case ScoreSpec::CompactMode::CutEdgeCount:
        return static_cast<double>(plan.cut_edge_count());
    case ScoreSpec::CompactMode::SharedBoundaryLength:
        return plan.cut_boundary_length();
    }
    return 0.0;
}

} // namespace

double total_score(const Plan& plan, const ScoreSpec& spec) {
    const double jp = pop_term(plan, spec);
    if (std::isinf(jp)) return jp;
    return spec.w_pop * jp + spec.w_compact * spec.compact_scale * compact_term(plan, spec);
}

double score_delta(const Plan& plan, Flip f, const ScoreSpec& spec) {
    const PrecinctGraph& g = plan.graph();
    const int to = plan.label(f.u);
    const int from = plan.label(f.v);
    if (to == from) throw std::invalid_argument("score_delta: flip endpoints share a label");

    double delta = 0.0;
    const auto& vx = g.vertex(f.v);

    switch (spec.pop_mode) {
    case ScoreSpec::PopMode::HardBounds: {
        const double pf = plan.district_pop(from) - vx.pop;
        const double pt = plan.district_pop(to) + vx.pop;
        if (pf < spec.pop_min || pf > spec.pop_max || pt < spec.pop_min || pt > spec.pop_max)
            return std::numeric_limits<double>::infinity();
        break;
    }
    case ScoreSpec::PopMode::SquaredDeviation: {
        const double pf = plan.district_pop(from), pt = plan.district_pop(to);
        const double a = pf - vx.pop - spec.pop_target, b = pt + vx.pop - spec.pop_target;
        const double a0 = pf - spec.pop_target, b0 = pt - spec.pop_target;
        delta += spec.w_pop * (a * a + b * b - a0 * a0 - b0 * b0);
        break;
    }
    }

    // Edges incident to v: ties to the old label become cut, ties to the new
    // label heal, all others are unchanged.
    const auto nbs = g.neighbors(f.v);
    const auto shr = g.neighbor_shared(f.v);
    double dcompact = 0.0;
    for (size_t i = 0; i < nbs.size(); ++i) {
        const int lw = plan.label(nbs[i]);
        const double unit =
            spec.compact_mode == ScoreSpec::CompactMode::CutEdgeCount ? 1.0 : shr[i];
        if (lw == from) dcompact += unit;
        else if (lw == to) dcompact -= unit;
    }
    delta += spec.w_compact * spec.compact_scale * dcompact;
    return delta;
}

} // namespace nrmc
