#ifndef NRMC_ORACLE_HPP
#define NRMC_ORACLE_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nrmc/msmh.hpp"
#include "nrmc/score.hpp"

namespace nrmc {

// Every valid labeling of a small graph, in lexicographic label order.
struct EnumeratedSpace {
    const PrecinctGraph* graph = nullptr;
    int num_districts = 0;
    ValiditySpec validity;
    std::vector<std::vector<int>> labelings;
    std::map<std::vector<int>, int> index;

    int size() const { return static_cast<int>(labelings.size()); }
    // -1 when the labeling is not a valid plan of this space.
    int index_of(const std::vector<int>& labels) const;
    Plan plan(int i) const;
};

// Exhaustive odometer scan over num_districts^n candidate labelings.
// Throws when the candidate count exceeds the cap.
EnumeratedSpace enumerate_plans(const PrecinctGraph& graph, int num_districts,
                                const ValiditySpec& validity,
                                std::uint64_t candidate_cap = std::uint64_t{1} << 24);

// Row-sparse stochastic matrix over a finite state space.
class KernelMatrix {
public:
    KernelMatrix() = default;
    explicit KernelMatrix(int n) : rows_(static_cast<size_t>(n)) {}

    int size() const { return static_cast<int>(rows_.size()); }
    void add(int row, int col, double p);
    // Sorts each row by column and merges duplicate entries.
    void compress();
    double at(int row, int col) const;
    double row_sum(int row) const;
    std::span<const std::pair<int, double>> row(int r) const {
        return rows_[static_cast<size_t>(r)];
    }

private:
    std::vector<std::vector<std::pair<int, double>>> rows_;
};

// Plan-space tempered single-node-flip chain and its target distribution.
struct SnfKernel {
    KernelMatrix kernel;
    std::vector<double> pi; // proportional to exp(-J), normalized
};

SnfKernel build_snf_kernel(const EnumeratedSpace& space, const ScoreSpec& score,
                           double beta);

// Lifted state space of a flow family over an enumerated plan space: one
// momentum bit per ACTIVE flow of each plan, so a plan with no active flow
// carries exactly one bare state. Bit k of a state's momentum word is the
// momentum of the k-th active flow (ascending flow id), +1 when set.
struct LiftedSpace {
    std::vector<std::vector<int>> active; // ascending flow ids, per plan
    std::vector<int> offset;              // state of bits=0 per plan; back() = count

    int state_count() const { return offset.back(); }
    int plan_of(int state) const;
    int bits_of(int state) const;
    int state(int plan, int bits) const { return offset[static_cast<size_t>(plan)] + bits; }
    // Position of flow in active[plan], -1 when inactive.
    int bit_index(int plan, int flow) const;
    // Involutions on the momentum fiber. flip_flow requires the flow active.
    int flip_flow(int state, int flow) const;
    int flip_all(int state) const;
};

// One exhaustive transition kernel of a lifted flow-family chain, with the
// conditional per-flow kernels needed by the balance checks.
struct LiftedKernel {
    LiftedSpace space;
    std::vector<FlowDecomposition> dec;   // per plan, at the build beta
    std::vector<KernelMatrix> per_flow;   // kernel given flow selected
    KernelMatrix inner;                   // one full step
    KernelMatrix kernel;                  // inner with the lazy wrap applied
    std::vector<double> pi;               // lifted target
    std::vector<double> pi_plan;          // plan marginal
    int flow_count = 0;
    double epsilon = 0.0;
    double lazy_hold = 0.0;
};

LiftedKernel build_kernel_matrix(const EnumeratedSpace& space, const FlowFamily& family,
                                 const ScoreSpec& score, double beta, double epsilon = 0.0,
                                 double lazy_hold = 0.0, int state_cap = 20000);

struct InvarianceReport {
    double max_row_sum_error = 0.0;      // max_x |sum_y K(x,y) - 1|
    double max_stationarity_error = 0.0; // max_y |sum_x pi(x)K(x,y) - pi(y)|
    double residual() const;
};

InvarianceReport check_invariance(const KernelMatrix& kernel, std::span<const double> pi);

// max |pi(x)K(x,y) - pi(y)K(y,x)|
double detailed_balance_residual(const KernelMatrix& kernel, std::span<const double> pi);

// max |pi(x)K(x,y) - pi(y)K(S(y),S(x))| for the momentum reversal S that
// negates every active momentum. pi is constant along fibers, so pi(S(y)) is
// written pi(y).
double skew_balance_residual(const LiftedKernel& lk);

// Per-flow condition, max over flows i and transitions of
// |w_i(x) pi(x) P_i(x,y) - w_i(y) pi(y) P_i(S_i(y), S_i(x))|.
double mixed_skew_balance_residual(const LiftedKernel& lk);

struct IrreducibilityReport {
    bool irreducible = false;
    int scc_count = 0;
    std::vector<int> component; // per state
    // When reducible: certificate pair with no path witness_from -> witness_to.
    int witness_from = -1;
    int witness_to = -1;
};

IrreducibilityReport check_irreducible(const KernelMatrix& kernel);

// Trap sets: strongly connected components with no transition leaving them.
// Every state has outgoing mass (rows are stochastic), so each returned set
// can be entered but never left.
std::vector<std::vector<int>> find_non_escapable_circuits(const KernelMatrix& kernel);

// Independent reference for the above: scans every nonempty state subset and
// keeps the closed, mutually reachable ones. Practical only for tiny spaces.
std::vector<std::vector<int>> closed_classes_brute_force(const KernelMatrix& kernel,
                                                         int max_states = 20);

double total_variation(std::span<const double> p, std::span<const double> q);

} // namespace nrmc

#endif
