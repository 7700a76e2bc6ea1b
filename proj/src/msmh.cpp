#include "nrmc/msmh.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nrmc {

std::string FlowFamily::flow_name(int flow) const {
    return "flow-" + std::to_string(flow);
}

double msmh_log_ratio(const FlowDecomposition& fwd, const FlowDecomposition& bwd, int flow,
                      int theta, double beta, bool simplified) {
    const double j = fwd.nbhd.j_current;
    const double jp = bwd.nbhd.j_current;
    double log_r = (1.0 - beta) * (j - jp) + fwd.log_z_oriented(flow, theta) -
                   bwd.log_z_oriented(flow, -theta);
    if (!simplified) {
        log_r += bwd.log_flow_weight[static_cast<size_t>(flow)] -
                 fwd.log_flow_weight[static_cast<size_t>(flow)];
    }
    return log_r;
}

int find_reverse(const FlowDecomposition& bwd, int flow, int dir, int v, int old_label) {
    for (int idx : bwd.oriented(flow, dir)) {
        const Neighbor& nb = bwd.nbhd.items[static_cast<size_t>(idx)];
        if (nb.flip.v == v && nb.new_label == old_label) return idx;
    }
    return -1;
}

namespace {

int sample_flow(const FlowDecomposition& dec, PhiloxRng& rng) {
    int best = -1;
    double best_key = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < dec.log_flow_weight.size(); ++i) {
        if (std::isinf(dec.log_flow_weight[i]) && dec.log_flow_weight[i] < 0) continue;
        const double key = dec.log_flow_weight[i] + rng.gumbel();
        if (best < 0 || key > best_key) {
            best = static_cast<int>(i);
            best_key = key;
        }
    }
    return best;
}

} // namespace

MsmhResult msmh_step(ExtendedState& state, const FlowFamily& family, double beta, PhiloxRng& rng) {
    MsmhResult res;
    const FlowDecomposition fwd = family.decompose(state.plan, beta);

    const int flow = sample_flow(fwd, rng);
    if (flow < 0) {
        res.event = MsmhResult::Event::Frozen;
        return res;
    }
    res.flow = flow;
    const int theta = state.theta[static_cast<size_t>(flow)];

    const auto& oriented = fwd.oriented(flow, theta);
    if (oriented.empty()) {
        state.theta[static_cast<size_t>(flow)] = static_cast<std::int8_t>(-theta);
        res.event = MsmhResult::Event::ForcedFlip;
        res.momentum_flips = 1;
        return res;
    }

    const int pick = sample_tempered(fwd.nbhd.log_g, oriented, rng);
    const Neighbor& nb = fwd.nbhd.items[static_cast<size_t>(pick)];

    Plan trial = state.plan;
    trial.apply_flip(nb.flip);
    const FlowDecomposition bwd = family.decompose(trial, beta);

    if (find_reverse(bwd, flow, -theta, nb.flip.v, nb.old_label) < 0) {
        throw std::runtime_error(
            "skewed-backward proposal missing for flip (" + std::to_string(nb.flip.u) + "," +
            std::to_string(nb.flip.v) + ") in " + family.flow_name(flow) +
            ": weight condition C2 violated");
    }

    res.log_ratio = msmh_log_ratio(fwd, bwd, flow, theta, beta, family.simplified_ratio());
    if (std::log(rng.uniform()) < res.log_ratio) {
        // Newly activated flows get freshly resampled momenta.
        for (int i = 0; i < family.flow_count(); ++i) {
            const double before = fwd.log_flow_weight[static_cast<size_t>(i)];
            const double after = bwd.log_flow_weight[static_cast<size_t>(i)];
            const bool was_active = !(std::isinf(before) && before < 0);
            const bool now_active = !(std::isinf(after) && after < 0);
            if (!was_active && now_active)
                state.theta[static_cast<size_t>(i)] = rng.below(2) ? std::int8_t{1} : std::int8_t{-1};
        }
        state.plan = std::move(trial);
        res.event = MsmhResult::Event::Accepted;
        res.flip = nb.flip;
    } else {
        state.theta[static_cast<size_t>(flow)] = static_cast<std::int8_t>(-theta);
        res.event = MsmhResult::Event::Rejected;
        res.momentum_flips = 1;
    }
    return res;
}

MsmhResult lazy_step(ExtendedState& state, const FlowFamily& family, double beta, double epsilon,
                     double lazy_hold, PhiloxRng& rng) {
    if (epsilon + lazy_hold > 0.0) {
        const double u = rng.uniform();
        if (u < lazy_hold) {
            MsmhResult res;
            res.event = MsmhResult::Event::LazyHold;
            return res;
        }
        if (u < lazy_hold + epsilon) {
            const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(family.flow_count())));
            state.theta[static_cast<size_t>(i)] =
                static_cast<std::int8_t>(-state.theta[static_cast<size_t>(i)]);
            MsmhResult res;
            res.event = MsmhResult::Event::LazyFlip;
            res.flow = i;
            res.momentum_flips = 1;
            return res;
        }
    }
    return msmh_step(state, family, beta, rng);
}

WeightConditionReport verify_weight_conditions(const FlowFamily& family,
                                               const std::vector<std::vector<int>>& plans,
                                               const PrecinctGraph& graph, int num_districts,
                                               double beta) {
    WeightConditionReport report;
    for (const auto& labels : plans) {
        Plan plan(graph, labels, num_districts);
        const FlowDecomposition dec = family.decompose(plan, beta);
        ++report.plans_checked;

        double lse = log_sum_exp(dec.log_flow_weight);
        bool any_active = !(std::isinf(lse) && lse < 0);
        if (any_active && std::abs(lse) > 1e-12)
            report.violations.push_back("weights of plan " + std::to_string(plan.fingerprint()) +
                                        " do not sum to 1 (log sum " + std::to_string(lse) + ")");

        for (int i = 0; i < family.flow_count(); ++i) {
            const double w = dec.log_flow_weight[static_cast<size_t>(i)];
            const bool positive = !(std::isinf(w) && w < 0);
            if (positive != family.member(plan, i)) {
                report.violations.push_back("C1' violated for " + family.flow_name(i) +
                                            " on plan " + std::to_string(plan.fingerprint()));
            }
            for (int dir : {+1, -1}) {
                for (int idx : dec.oriented(i, dir)) {
                    const Neighbor& nb = dec.nbhd.items[static_cast<size_t>(idx)];
                    Plan next = plan;
                    next.apply_flip(nb.flip);
                    const FlowDecomposition dec2 = family.decompose(next, beta);
                    ++report.transitions_checked;
                    if (find_reverse(dec2, i, -dir, nb.flip.v, nb.old_label) < 0) {
                        report.violations.push_back(
                            "C2 violated for " + family.flow_name(i) + ": flip (" +
                            std::to_string(nb.flip.u) + "," + std::to_string(nb.flip.v) +
                            ") has no skewed-backward counterpart");
                    }
                }
            }
        }
    }
    return report;
}

} // namespace nrmc
