#ifndef NRMC_SNF_HPP
#define NRMC_SNF_HPP

#include "nrmc/graph.hpp"
#include "nrmc/rng.hpp"
#include "nrmc/score.hpp"

#include <span>
#include <vector>

namespace nrmc {

// N(xi) with tempered log-weights: log_g[i] = -beta * J(plan_i) for each
// member, log_z = log sum exp(log_g). Empty neighborhoods carry
// log_z = -infinity (Z = 0 sentinel).
struct WeightedNeighborhood {
    std::vector<Neighbor> items;
    std::vector<double> delta_j; // J(plan_i) - J(plan)
    std::vector<double> log_g;   // -beta * J(plan_i)
    double log_z = -std::numeric_limits<double>::infinity();
    double j_current = 0.0;      // J(plan)
};

// log sum_i exp(values[i]); empty input gives -infinity.
double log_sum_exp(std::span<const double> values);

// log Z over a designated subset of neighbor scores, from absolute J values.
double local_partition_function(std::span<const double> scores_j, double beta);

WeightedNeighborhood weighted_neighborhood(const Plan& plan, const ValiditySpec& validity,
                                           const ScoreSpec& spec, double beta);

// Exact categorical draw with probability proportional to exp(log_g[i]),
// via the Gumbel-max construction over the given index subset.
int sample_tempered(std::span<const double> log_g, std::span<const int> subset, PhiloxRng& rng);
int sample_tempered(const WeightedNeighborhood& nbhd, PhiloxRng& rng);

struct StepResult {
    bool accepted = false;
    bool forced_flip = false; // empty oriented neighborhood, momentum reversed
    bool frozen = false;      // no proposal available at all
    int flow = -1;
    double log_ratio = 0.0;
    Flip flip{}; // the applied move; valid only when accepted
};

// Reversible tempered single-node-flip Metropolis-Hastings step. Proposes
// from the tempered law on N(xi), accepts with
// min(1, exp((1-beta)(J-J') + log Z(xi) - log Z(xi'))); the plan is mutated
// only on acceptance.
StepResult snf_mh_step(Plan& plan, double beta, const ScoreSpec& spec,
                       const ValiditySpec& validity, PhiloxRng& rng);

} // namespace nrmc

#endif
