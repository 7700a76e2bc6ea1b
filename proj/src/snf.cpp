#include "nrmc/snf.hpp"

#include <algorithm>
#include <cmath>

namespace nrmc {

double log_sum_exp(std::span<const double> values) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : values) m = std::max(m, v);
    if (std::isinf(m) && m < 0) return m;
    double s = 0.0;
    for (double v : values) s += std::exp(v - m);
    return m + std::log(s);
}

double local_partition_function(std::span<const double> scores_j, double beta) {
    double m = -std::numeric_limits<double>::infinity();
    for (double j : scores_j) m = std::max(m, -beta * j);
    if (std::isinf(m) && m < 0) return m;
    double s = 0.0;
    for (double j : scores_j) s += std::exp(-beta * j - m);
    return m + std::log(s);
}

WeightedNeighborhood weighted_neighborhood(const Plan& plan, const ValiditySpec& validity,
                                           const ScoreSpec& spec, double beta) {
    WeightedNeighborhood out;
    out.j_current = total_score(plan, spec);
    out.items = valid_neighborhood(plan, validity);
    out.delta_j.reserve(out.items.size());
    out.log_g.reserve(out.items.size());
    for (const Neighbor& nb : out.items) {
        const double dj = score_delta(plan, nb.flip, spec);
        out.delta_j.push_back(dj);
        out.log_g.push_back(-beta * (out.j_current + dj));
    }
    out.log_z = log_sum_exp(out.log_g);
    return out;
}

int sample_tempered(std::span<const double> log_g, std::span<const int> subset, PhiloxRng& rng) {
    int best = -1;
    double best_key = -std::numeric_limits<double>::infinity();
    for (int idx : subset) {
        const double key = log_g[static_cast<size_t>(idx)] + rng.gumbel();
        if (best < 0 || key > best_key) {
            best = idx;
            best_key = key;
        }
    }
    return best;
}

int sample_tempered(const WeightedNeighborhood& nbhd, PhiloxRng& rng) {
    int best = -1;
    double best_key = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < nbhd.log_g.size(); ++i) {
        const double key = nbhd.log_g[i] + rng.gumbel();
        if (best < 0 || key > best_key) {
            best = static_cast<int>(i);
            best_key = key;
        }
    }
    return best;
}

StepResult snf_mh_step(Plan& plan, double beta, const ScoreSpec& spec,
                       const ValiditySpec& validity, PhiloxRng& rng) {
    StepResult res;
    const WeightedNeighborhood fwd = weighted_neighborhood(plan, validity, spec, beta);
    if (fwd.items.empty()) {
        res.frozen = true;
        return res;
    }
    const int pick = sample_tempered(fwd, rng);
    const Neighbor& nb = fwd.items[static_cast<size_t>(pick)];

    Plan trial = plan;
    trial.apply_flip(nb.flip);
    const WeightedNeighborhood bwd = weighted_neighborhood(trial, validity, spec, beta);

    const double dj = fwd.delta_j[static_cast<size_t>(pick)];
    res.log_ratio = -(1.0 - beta) * dj + fwd.log_z - bwd.log_z;
    if (std::log(rng.uniform()) < res.log_ratio) {
        plan = std::move(trial);
        res.accepted = true;
        res.flip = nb.flip;
    }
    return res;
}

} // namespace nrmc
