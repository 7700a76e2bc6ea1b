#ifndef NRMC_MSMH_HPP
#define NRMC_MSMH_HPP

#include "nrmc/graph.hpp"
#include "nrmc/rng.hpp"
#include "nrmc/score.hpp"
#include "nrmc/snf.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nrmc {

// Lifted chain state: a plan plus one momentum in {-1,+1} per flow. The
// extended target is pi(xi, theta) = 2^-n * pi(xi), uniform over momenta.
struct ExtendedState {
    Plan plan;
    std::vector<std::int8_t> theta;
};

// Everything a flow family knows about one plan: the shared neighborhood
// N(xi) with tempered weights, per-flow selection weights, and the split of
// N(xi) into positively and negatively oriented proposal sets per flow.
struct FlowDecomposition {
    WeightedNeighborhood nbhd;
    std::vector<double> log_flow_weight;  // log w~_i(xi); -inf when inactive
    std::vector<std::vector<int>> pos;    // indices into nbhd.items, per flow
    std::vector<std::vector<int>> neg;
    std::vector<double> log_z_pos;        // log Z_i^+(xi)
    std::vector<double> log_z_neg;

    const std::vector<int>& oriented(int flow, int dir) const {
        return dir > 0 ? pos[static_cast<size_t>(flow)] : neg[static_cast<size_t>(flow)];
    }
    double log_z_oriented(int flow, int dir) const {
        return dir > 0 ? log_z_pos[static_cast<size_t>(flow)] : log_z_neg[static_cast<size_t>(flow)];
    }
};

// A family of flows over the single-flip state graph. Immutable and
// shareable; per-chain mutable state lives in ExtendedState.
class FlowFamily {
public:
    virtual ~FlowFamily() = default;
    virtual int flow_count() const = 0;
    // Membership predicate for V_i, declared independently of the weights so
    // condition C1' is a real check rather than a tautology.
    virtual bool member(const Plan& plan, int flow) const = 0;
    virtual FlowDecomposition decompose(const Plan& plan, double beta) const = 0;
    // When true the acceptance ratio omits the w~_i(xi')/w~_i(xi) factor.
    virtual bool simplified_ratio() const { return false; }
    virtual std::string flow_name(int flow) const;
};

struct MsmhResult {
    enum class Event { Accepted, Rejected, ForcedFlip, Frozen, LazyHold, LazyFlip };
    Event event = Event::Frozen;
    int flow = -1;
    double log_ratio = 0.0;
    int momentum_flips = 0;
    Flip flip{}; // the applied move; valid only when Accepted
};

// Acceptance log-ratio shared between the runtime step and the exact kernel
// builder, so both agree to the bit. fwd/bwd are decompositions of the
// current plan and the proposal; theta is the selected flow's momentum.
double msmh_log_ratio(const FlowDecomposition& fwd, const FlowDecomposition& bwd, int flow,
                      int theta, double beta, bool simplified);

// Index into bwd.nbhd.items of the move returning vertex v to old_label,
// searched within the oriented set (flow, dir); -1 if absent.
int find_reverse(const FlowDecomposition& bwd, int flow, int dir, int v, int old_label);

// One step of the mixed skew Metropolis-Hastings chain: sample a flow from
// w~(xi), propose from the tempered law on N_i^theta(xi), accept with
// min(1, r_i); rejection and empty oriented neighborhoods flip exactly the
// selected flow's momentum. A missing skewed-backward proposal (condition C2
// violation) raises an error naming the offending pair. States with no
// active flow at all are held unchanged.
MsmhResult msmh_step(ExtendedState& state, const FlowFamily& family, double beta, PhiloxRng& rng);

// Three-way mixture: hold with probability lazy_hold, flip one uniformly
// chosen momentum with probability epsilon, otherwise run the inner step.
// With epsilon = lazy_hold = 0 no extra randomness is consumed and the
// trajectory matches msmh_step exactly.
MsmhResult lazy_step(ExtendedState& state, const FlowFamily& family, double beta, double epsilon,
                     double lazy_hold, PhiloxRng& rng);

struct WeightConditionReport {
    std::vector<std::string> violations;
    int plans_checked = 0;
    std::int64_t transitions_checked = 0;
    bool ok() const { return violations.empty(); }
};

// Enumerated check of the weight conditions: C1' (positive weight iff
// membership), weight normalization, and C2 (forward proposal present iff
// the skewed-backward proposal is present). C3 holds structurally because
// weights depend only on the plan.
WeightConditionReport verify_weight_conditions(const FlowFamily& family,
                                               const std::vector<std::vector<int>>& plans,
                                               const PrecinctGraph& graph, int num_districts,
                                               double beta);

} // namespace nrmc

#endif
