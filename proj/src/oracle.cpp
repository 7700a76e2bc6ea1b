#include "nrmc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nrmc {

int EnumeratedSpace::index_of(const std::vector<int>& labels) const {
    const auto it = index.find(labels);
    return it == index.end() ? -1 : it->second;
}

Plan EnumeratedSpace::plan(int i) const {
    return Plan(*graph, labelings[static_cast<size_t>(i)], num_districts);
}

EnumeratedSpace enumerate_plans(const PrecinctGraph& graph, int num_districts,
                                const ValiditySpec& validity, std::uint64_t candidate_cap) {
    if (num_districts < 1) throw std::invalid_argument("need at least one district");
    const int n = graph.vertex_count();
    std::uint64_t candidates = 1;
    for (int i = 0; i < n; ++i) {
        if (candidates > candidate_cap / static_cast<std::uint64_t>(num_districts))
            throw std::runtime_error("plan enumeration exceeds the candidate cap");
        candidates *= static_cast<std::uint64_t>(num_districts);
    }

    EnumeratedSpace space;
    space.graph = &graph;
    space.num_districts = num_districts;
    space.validity = validity;

    std::vector<int> labels(static_cast<size_t>(n), 0);
    std::vector<char> present(static_cast<size_t>(num_districts));
    while (true) {
        std::fill(present.begin(), present.end(), 0);
        for (int l : labels) present[static_cast<size_t>(l)] = 1;
        if (std::find(present.begin(), present.end(), 0) == present.end()) {
            Plan plan(graph, labels, num_districts);
            if (is_valid(plan, validity)) {
                space.index.emplace(labels, space.size());
                space.labelings.push_back(labels);
            }
        }
        int i = n - 1;
        while (i >= 0 && ++labels[static_cast<size_t>(i)] == num_districts)
            labels[static_cast<size_t>(i--)] = 0;
        if (i < 0) break;
    }
    return space;
}

void KernelMatrix::add(int row, int col, double p) {
    if (p == 0.0) return;
    rows_[static_cast<size_t>(row)].emplace_back(col, p);
}

void KernelMatrix::compress() {
    for (auto& row : rows_) {
        std::sort(row.begin(), row.end());
        size_t out = 0;
        for (size_t i = 0; i < row.size();) {
            size_t j = i;
            double sum = 0.0;
            while (j < row.size() && row[j].first == row[i].first) sum += row[j++].second;
            row[out++] = {row[i].first, sum};
            i = j;
        }
        row.resize(out);
        row.shrink_to_fit();
    }
}

double KernelMatrix::at(int row, int col) const {
    const auto& r = rows_[static_cast<size_t>(row)];
    const auto it = std::lower_bound(r.begin(), r.end(), std::pair<int, double>{col, 0.0},
                                     [](const auto& a, const auto& b) { return a.first < b.first; });
    return (it != r.end() && it->first == col) ? it->second : 0.0;
}

double KernelMatrix::row_sum(int row) const {
    double s = 0.0;
    for (const auto& [c, p] : rows_[static_cast<size_t>(row)]) s += p;
    return s;
}

namespace {

// pi proportional to exp(-j), shifted by the minimum for stability.
std::vector<double> normalized_target(const std::vector<double>& j) {
    double jmin = std::numeric_limits<double>::infinity();
    for (double v : j) jmin = std::min(jmin, v);
    if (std::isinf(jmin)) throw std::runtime_error("target distribution has no finite-score plan");
    std::vector<double> pi(j.size());
    double z = 0.0;
    for (size_t i = 0; i < j.size(); ++i) {
        pi[i] = std::isinf(j[i]) ? 0.0 : std::exp(-(j[i] - jmin));
        z += pi[i];
    }
    for (double& p : pi) p /= z;
    return pi;
}

} // namespace

SnfKernel build_snf_kernel(const EnumeratedSpace& space, const ScoreSpec& score, double beta) {
    const int count = space.size();
    std::vector<WeightedNeighborhood> nbhd;
    nbhd.reserve(static_cast<size_t>(count));
    std::vector<double> j(static_cast<size_t>(count));
    for (int p = 0; p < count; ++p) {
        const Plan plan = space.plan(p);
        nbhd.push_back(weighted_neighborhood(plan, space.validity, score, beta));
        j[static_cast<size_t>(p)] = nbhd.back().j_current;
    }

    SnfKernel out;
    out.kernel = KernelMatrix(count);
    for (int p = 0; p < count; ++p) {
        const WeightedNeighborhood& nb = nbhd[static_cast<size_t>(p)];
        if (nb.items.empty()) {
            out.kernel.add(p, p, 1.0);
            continue;
        }
        double self = 0.0;
        for (size_t k = 0; k < nb.items.size(); ++k) {
            const Neighbor& item = nb.items[k];
            const double prop = std::exp(nb.log_g[k] - nb.log_z);
            std::vector<int> labels2 = space.labelings[static_cast<size_t>(p)];
            labels2[static_cast<size_t>(item.flip.v)] = item.new_label;
            const int p2 = space.index_of(labels2);
            if (p2 < 0) throw std::logic_error("valid move left the enumerated space");
            const double log_r = -(1.0 - beta) * nb.delta_j[k] + nb.log_z -
                                 nbhd[static_cast<size_t>(p2)].log_z;
            const double a = std::min(1.0, std::exp(log_r));
            out.kernel.add(p, p2, prop * a);
            self += prop * (1.0 - a);
        }
        out.kernel.add(p, p, self);
    }
    out.kernel.compress();
    out.pi = normalized_target(j);
    return out;
}

int LiftedSpace::plan_of(int state) const {
    const auto it = std::upper_bound(offset.begin(), offset.end(), state);
    return static_cast<int>(it - offset.begin()) - 1;
}

int LiftedSpace::bits_of(int state) const {
    return state - offset[static_cast<size_t>(plan_of(state))];
}

int LiftedSpace::bit_index(int plan, int flow) const {
    const auto& a = active[static_cast<size_t>(plan)];
    const auto it = std::lower_bound(a.begin(), a.end(), flow);
    return (it != a.end() && *it == flow) ? static_cast<int>(it - a.begin()) : -1;
}

int LiftedSpace::flip_flow(int state, int flow) const {
    const int p = plan_of(state);
    const int bi = bit_index(p, flow);
    if (bi < 0) throw std::logic_error("momentum flip of an inactive flow");
    return offset[static_cast<size_t>(p)] + ((state - offset[static_cast<size_t>(p)]) ^ (1 << bi));
}

int LiftedSpace::flip_all(int state) const {
    const int p = plan_of(state);
    const int mask = (1 << active[static_cast<size_t>(p)].size()) - 1;
    return offset[static_cast<size_t>(p)] + ((state - offset[static_cast<size_t>(p)]) ^ mask);
}

namespace {

bool flow_active(const FlowDecomposition& dec, int flow) {
    const double w = dec.log_flow_weight[static_cast<size_t>(flow)];
    return !(std::isinf(w) && w < 0.0);
}

} // namespace

LiftedKernel build_kernel_matrix(const EnumeratedSpace& space, const FlowFamily& family,
                                 const ScoreSpec& score, double beta, double epsilon,
                                 double lazy_hold, int state_cap) {
    const int count = space.size();
    const int nf = family.flow_count();

    LiftedKernel lk;
    lk.flow_count = nf;
    lk.epsilon = epsilon;
    lk.lazy_hold = lazy_hold;
    lk.dec.reserve(static_cast<size_t>(count));
    std::vector<double> j(static_cast<size_t>(count));
    for (int p = 0; p < count; ++p) {
        lk.dec.push_back(family.decompose(space.plan(p), beta));
        j[static_cast<size_t>(p)] = lk.dec.back().nbhd.j_current;
    }

    lk.space.active.resize(static_cast<size_t>(count));
    lk.space.offset.resize(static_cast<size_t>(count) + 1);
    int states = 0;
    for (int p = 0; p < count; ++p) {
        lk.space.offset[static_cast<size_t>(p)] = states;
        auto& act = lk.space.active[static_cast<size_t>(p)];
        for (int i = 0; i < nf; ++i)
            if (flow_active(lk.dec[static_cast<size_t>(p)], i)) act.push_back(i);
        if (act.size() > 20) throw std::runtime_error("momentum fiber too large to enumerate");
        states += 1 << act.size();
        if (states > state_cap) throw std::runtime_error("lifted state space exceeds the cap");
    }
    lk.space.offset[static_cast<size_t>(count)] = states;

    lk.pi_plan = normalized_target(j);
    lk.pi.resize(static_cast<size_t>(states));
    for (int p = 0; p < count; ++p) {
        const int fiber = 1 << lk.space.active[static_cast<size_t>(p)].size();
        for (int bits = 0; bits < fiber; ++bits)
            lk.pi[static_cast<size_t>(lk.space.state(p, bits))] =
                lk.pi_plan[static_cast<size_t>(p)] / fiber;
    }

    lk.per_flow.assign(static_cast<size_t>(nf), KernelMatrix(states));
    for (int p = 0; p < count; ++p) {
        const FlowDecomposition& dec = lk.dec[static_cast<size_t>(p)];
        const auto& act = lk.space.active[static_cast<size_t>(p)];
        const int fiber = 1 << act.size();
        for (int bi = 0; bi < static_cast<int>(act.size()); ++bi) {
            const int e = act[static_cast<size_t>(bi)];
            KernelMatrix& pf = lk.per_flow[static_cast<size_t>(e)];
            for (int bits = 0; bits < fiber; ++bits) {
                const int s = lk.space.state(p, bits);
                const int flipped = lk.space.state(p, bits ^ (1 << bi));
                const int theta = (bits >> bi) & 1 ? +1 : -1;
                const auto& oriented = dec.oriented(e, theta);
                if (oriented.empty()) {
                    pf.add(s, flipped, 1.0); // forced momentum reversal
                    continue;
                }
                double self = 0.0;
                for (int k : oriented) {
                    const Neighbor& nb = dec.nbhd.items[static_cast<size_t>(k)];
                    const double prop =
                        std::exp(dec.nbhd.log_g[static_cast<size_t>(k)] -
                                 dec.log_z_oriented(e, theta));
                    std::vector<int> labels2 = space.labelings[static_cast<size_t>(p)];
                    labels2[static_cast<size_t>(nb.flip.v)] = nb.new_label;
                    const int p2 = space.index_of(labels2);
                    if (p2 < 0) throw std::logic_error("valid move left the enumerated space");
                    const FlowDecomposition& dec2 = lk.dec[static_cast<size_t>(p2)];
                    if (find_reverse(dec2, e, -theta, nb.flip.v, nb.old_label) < 0)
                        throw std::runtime_error("weight condition C2 violated in " +
                                                 family.flow_name(e));
                    const double a = std::min(
                        1.0, std::exp(msmh_log_ratio(dec, dec2, e, theta, beta,
                                                     family.simplified_ratio())));
                    if (a > 0.0) {
                        // Flows active in both plans keep their momenta; newly
                        // active ones are born uniform.
                        const auto& act2 = lk.space.active[static_cast<size_t>(p2)];
                        int base = 0;
                        std::vector<int> fresh;
                        for (int b2 = 0; b2 < static_cast<int>(act2.size()); ++b2) {
                            const int f2 = act2[static_cast<size_t>(b2)];
                            const int b1 = lk.space.bit_index(p, f2);
                            if (b1 < 0)
                                fresh.push_back(b2);
                            else if ((bits >> b1) & 1)
                                base |= 1 << b2;
                        }
                        const double mass = std::ldexp(prop * a, -static_cast<int>(fresh.size()));
                        for (int m = 0; m < (1 << fresh.size()); ++m) {
                            int bits2 = base;
                            for (size_t fi = 0; fi < fresh.size(); ++fi)
                                if ((m >> fi) & 1) bits2 |= 1 << fresh[fi];
                            pf.add(s, lk.space.state(p2, bits2), mass);
                        }
                    }
                    self += prop * (1.0 - a);
                }
                pf.add(s, flipped, self);
            }
        }
    }
    for (auto& pf : lk.per_flow) pf.compress();

    lk.inner = KernelMatrix(states);
    for (int p = 0; p < count; ++p) {
        const auto& act = lk.space.active[static_cast<size_t>(p)];
        const int fiber = 1 << act.size();
        for (int bits = 0; bits < fiber; ++bits) {
            const int s = lk.space.state(p, bits);
            if (act.empty()) {
                lk.inner.add(s, s, 1.0); // frozen plan
                continue;
            }
            for (int e : act) {
                const double w =
                    std::exp(lk.dec[static_cast<size_t>(p)].log_flow_weight[static_cast<size_t>(e)]);
                for (const auto& [col, pr] : lk.per_flow[static_cast<size_t>(e)].row(s))
                    lk.inner.add(s, col, w * pr);
            }
        }
    }
    lk.inner.compress();

    if (epsilon == 0.0 && lazy_hold == 0.0) {
        lk.kernel = lk.inner;
    } else {
        lk.kernel = KernelMatrix(states);
        const double rest = 1.0 - epsilon - lazy_hold;
        for (int s = 0; s < states; ++s) {
            if (lazy_hold > 0.0) lk.kernel.add(s, s, lazy_hold);
            if (epsilon > 0.0) {
                const int p = lk.space.plan_of(s);
                for (int i = 0; i < nf; ++i) {
                    const int t = lk.space.bit_index(p, i) >= 0 ? lk.space.flip_flow(s, i) : s;
                    lk.kernel.add(s, t, epsilon / nf);
                }
            }
            for (const auto& [col, pr] : lk.inner.row(s)) lk.kernel.add(s, col, rest * pr);
        }
        lk.kernel.compress();
    }
    return lk;
}

double InvarianceReport::residual() const {
    return std::max(max_row_sum_error, max_stationarity_error);
}

InvarianceReport check_invariance(const KernelMatrix& kernel, std::span<const double> pi) {
    InvarianceReport rep;
    std::vector<double> mass(pi.size(), 0.0);
    for (int s = 0; s < kernel.size(); ++s) {
        rep.max_row_sum_error =
            std::max(rep.max_row_sum_error, std::abs(kernel.row_sum(s) - 1.0));
        for (const auto& [col, p] : kernel.row(s))
            mass[static_cast<size_t>(col)] += pi[static_cast<size_t>(s)] * p;
    }
    for (size_t s = 0; s < pi.size(); ++s)
        rep.max_stationarity_error = std::max(rep.max_stationarity_error, std::abs(mass[s] - pi[s]));
    return rep;
}

double detailed_balance_residual(const KernelMatrix& kernel, std::span<const double> pi) {
    double worst = 0.0;
    for (int s = 0; s < kernel.size(); ++s)
        for (const auto& [t, p] : kernel.row(s))
            worst = std::max(worst, std::abs(pi[static_cast<size_t>(s)] * p -
                                             pi[static_cast<size_t>(t)] * kernel.at(t, s)));
    return worst;
}

double skew_balance_residual(const LiftedKernel& lk) {
    double worst = 0.0;
    for (int s = 0; s < lk.kernel.size(); ++s) {
        for (const auto& [t, p] : lk.kernel.row(s)) {
            const double lhs = lk.pi[static_cast<size_t>(s)] * p;
            const double rhs = lk.pi[static_cast<size_t>(t)] *
                               lk.kernel.at(lk.space.flip_all(t), lk.space.flip_all(s));
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    }
    return worst;
}

double mixed_skew_balance_residual(const LiftedKernel& lk) {
    double worst = 0.0;
    for (int e = 0; e < lk.flow_count; ++e) {
        const KernelMatrix& pf = lk.per_flow[static_cast<size_t>(e)];
        for (int s = 0; s < pf.size(); ++s) {
            const auto row = pf.row(s);
            if (row.empty()) continue;
            const int p = lk.space.plan_of(s);
            const double ws =
                std::exp(lk.dec[static_cast<size_t>(p)].log_flow_weight[static_cast<size_t>(e)]);
            for (const auto& [t, pr] : row) {
                const int p2 = lk.space.plan_of(t);
                const double wt =
                    std::exp(lk.dec[static_cast<size_t>(p2)].log_flow_weight[static_cast<size_t>(e)]);
                const double lhs = ws * lk.pi[static_cast<size_t>(s)] * pr;
                const double rhs = wt * lk.pi[static_cast<size_t>(t)] *
                                   pf.at(lk.space.flip_flow(t, e), lk.space.flip_flow(s, e));
                worst = std::max(worst, std::abs(lhs - rhs));
            }
        }
    }
    return worst;
}

namespace {

// Iterative Tarjan over the positive-probability transition graph.
std::pair<int, std::vector<int>> strongly_connected_components(const KernelMatrix& kernel) {
    const int n = kernel.size();
    std::vector<int> comp(static_cast<size_t>(n), -1);
    std::vector<int> low(static_cast<size_t>(n), 0), num(static_cast<size_t>(n), -1);
    std::vector<int> stack, call_state, call_edge;
    std::vector<char> on_stack(static_cast<size_t>(n), 0);
    int next_num = 0, comp_count = 0;

    for (int root = 0; root < n; ++root) {
        if (num[static_cast<size_t>(root)] >= 0) continue;
        call_state.push_back(root);
        call_edge.push_back(0);
        while (!call_state.empty()) {
            const int v = call_state.back();
            int& ei = call_edge.back();
            if (ei == 0) {
                num[static_cast<size_t>(v)] = low[static_cast<size_t>(v)] = next_num++;
                stack.push_back(v);
                on_stack[static_cast<size_t>(v)] = 1;
            }
            const auto row = kernel.row(v);
            bool descended = false;
            while (ei < static_cast<int>(row.size())) {
                const int w = row[static_cast<size_t>(ei)].first;
                ++ei;
                if (num[static_cast<size_t>(w)] < 0) {
                    call_state.push_back(w);
                    call_edge.push_back(0);
                    descended = true;
                    break;
                }
                if (on_stack[static_cast<size_t>(w)])
                    low[static_cast<size_t>(v)] =
                        std::min(low[static_cast<size_t>(v)], num[static_cast<size_t>(w)]);
            }
            if (descended) continue;
            if (low[static_cast<size_t>(v)] == num[static_cast<size_t>(v)]) {
                while (true) {
                    const int w = stack.back();
                    stack.pop_back();
                    on_stack[static_cast<size_t>(w)] = 0;
                    comp[static_cast<size_t>(w)] = comp_count;
                    if (w == v) break;
                }
                ++comp_count;
            }
            call_state.pop_back();
            call_edge.pop_back();
            if (!call_state.empty()) {
                const int parent = call_state.back();
                low[static_cast<size_t>(parent)] =
                    std::min(low[static_cast<size_t>(parent)], low[static_cast<size_t>(v)]);
            }
        }
    }
    return {comp_count, comp};
}

} // namespace

IrreducibilityReport check_irreducible(const KernelMatrix& kernel) {
    IrreducibilityReport rep;
    auto [comp_count, comp] = strongly_connected_components(kernel);
    rep.scc_count = comp_count;
    rep.component = std::move(comp);
    rep.irreducible = comp_count <= 1;
    if (rep.irreducible) return rep;

    // Reachability over components from state 0's component. An unreached
    // component certifies one direction; otherwise any other component cannot
    // reach back (it would merge with state 0's).
    const int n = kernel.size();
    std::vector<char> reached(static_cast<size_t>(rep.scc_count), 0);
    std::vector<char> visited(static_cast<size_t>(n), 0);
    std::vector<int> queue{0};
    visited[0] = 1;
    reached[static_cast<size_t>(rep.component[0])] = 1;
    while (!queue.empty()) {
        const int v = queue.back();
        queue.pop_back();
        for (const auto& [w, p] : kernel.row(v)) {
            if (visited[static_cast<size_t>(w)]) continue;
            visited[static_cast<size_t>(w)] = 1;
            reached[static_cast<size_t>(rep.component[w])] = 1;
            queue.push_back(w);
        }
    }
    for (int s = 0; s < n; ++s) {
        if (!reached[static_cast<size_t>(rep.component[s])]) {
            rep.witness_from = 0;
            rep.witness_to = s;
            return rep;
        }
    }
    for (int s = 0; s < n; ++s) {
        if (rep.component[s] != rep.component[0]) {
            rep.witness_from = s;
            rep.witness_to = 0;
            return rep;
        }
    }
    return rep;
}

std::vector<std::vector<int>> find_non_escapable_circuits(const KernelMatrix& kernel) {
    const int n = kernel.size();
    auto [comp_count, comp] = strongly_connected_components(kernel);
    std::vector<char> has_exit(static_cast<size_t>(comp_count), 0);
    for (int s = 0; s < n; ++s)
        for (const auto& [t, p] : kernel.row(s))
            if (comp[static_cast<size_t>(s)] != comp[static_cast<size_t>(t)])
                has_exit[static_cast<size_t>(comp[static_cast<size_t>(s)])] = 1;
    std::vector<std::vector<int>> circuits(static_cast<size_t>(comp_count));
    for (int s = 0; s < n; ++s)
        if (!has_exit[static_cast<size_t>(comp[static_cast<size_t>(s)])])
            circuits[static_cast<size_t>(comp[static_cast<size_t>(s)])].push_back(s);
    std::vector<std::vector<int>> out;
    for (auto& c : circuits)
        if (!c.empty()) out.push_back(std::move(c));
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<int>> closed_classes_brute_force(const KernelMatrix& kernel,
                                                         int max_states) {
    const int n = kernel.size();
    if (n > max_states || n > 25)
        throw std::invalid_argument("state space too large for subset enumeration");
    std::vector<std::vector<int>> out;
    for (std::uint32_t set = 1; set < (1u << n); ++set) {
        bool closed = true;
        for (int s = 0; s < n && closed; ++s) {
            if (!((set >> s) & 1)) continue;
            for (const auto& [t, p] : kernel.row(s))
                if (!((set >> t) & 1)) {
                    closed = false;
                    break;
                }
        }
        if (!closed) continue;
        // Mutual reachability inside the subset.
        std::vector<int> members;
        for (int s = 0; s < n; ++s)
            if ((set >> s) & 1) members.push_back(s);
        bool strongly = true;
        for (int src : members) {
            std::uint32_t seen = 1u << src;
            std::vector<int> queue{src};
            while (!queue.empty()) {
                const int v = queue.back();
                queue.pop_back();
                for (const auto& [w, p] : kernel.row(v)) {
                    if (!((set >> w) & 1) || ((seen >> w) & 1)) continue;
                    seen |= 1u << w;
                    queue.push_back(w);
                }
            }
            if (seen != set) {
                strongly = false;
                break;
            }
        }
        if (strongly) out.push_back(std::move(members));
    }
    std::sort(out.begin(), out.end());
    return out;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
    double s = 0.0;
    for (size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

} // namespace nrmc
