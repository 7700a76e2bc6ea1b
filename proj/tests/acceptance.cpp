// Acceptance gate. Each criterion prints exactly one PASS or FAIL line with
// its measured numbers; the process exits nonzero when any executed criterion
// fails. The full-size reproduction (criterion 6) runs only with --long.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "nrmc/experiment.hpp"
#include "nrmc/oracle.hpp"

using namespace nrmc;

namespace {

constexpr double kExactTol = 1e-12;        // criteria 1, 2, 3, 7
constexpr double kTvBound = 0.05;          // criterion 4
constexpr double kScaledGap = 1.5;         // criterion 5: com vs plain flip
constexpr double kDeviationBound = 0.02;   // criterion 6a
constexpr double kRatioLow = 2.0;          // criterion 6b window for com/snf
constexpr double kRatioHigh = 6.0;
constexpr double kGThreshold = 0.1;        // criterion 6c
constexpr std::int64_t kGDeadline = 50000; // steps

constexpr double kBudget1 = 120.0;  // seconds
constexpr double kBudget4 = 300.0;
constexpr double kBudget5 = 1800.0;

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s (%s)\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

std::string fmt(const char* pattern, ...) {
    va_list args;
    va_start(args, pattern);
    char buf[512];
    std::vsnprintf(buf, sizeof buf, pattern, args);
    va_end(args);
    return buf;
}

ScoreSpec boundary_score(double lo, double hi) {
    ScoreSpec s;
    s.pop_min = lo;
    s.pop_max = hi;
    return s; // J = population penalty + cut edge count
}

ValiditySpec pop_bounds(double lo, double hi) {
    ValiditySpec v;
    v.pop_min = lo;
    v.pop_max = hi;
    return v;
}

VectorField centered_vortex(double cx, double cy) {
    VectorField f;
    f.kind = VectorField::Kind::Vortex;
    f.center = {cx, cy};
    f.unit_speed = true;
    return f;
}

// The enumerated space and every plan built from it hold pointers into the
// graph, so the graph lives on the heap at a stable address.
struct Instance {
    std::unique_ptr<PrecinctGraph> graph;
    EnumeratedSpace space;
    ScoreSpec score;
    ValiditySpec validity;
    VectorField field;
    int num_districts = 2;
};

Instance make_instance(int side, double lo, double hi, int districts) {
    Instance inst{std::make_unique<PrecinctGraph>(PrecinctGraph::lattice(side, side))};
    inst.score = boundary_score(lo, hi);
    inst.validity = pop_bounds(lo, hi);
    inst.field = centered_vortex((side - 1) / 2.0, (side - 1) / 2.0);
    inst.num_districts = districts;
    inst.space = enumerate_plans(*inst.graph, districts, inst.validity,
                                 std::uint64_t{1} << 26);
    return inst;
}

// Shared experiment configuration for the 10x10 reproduction runs.
ExperimentConfig grid_config(Method m, std::int64_t steps, int chains, std::uint64_t seed) {
    auto c = ExperimentConfig::from_json_text(R"({
        "graph": {"lattice": [10, 10]},
        "score": {"pop_min": 45, "pop_max": 55},
        "field": {"kind": "vortex", "center": [4.5, 4.5], "unit_speed": true,
                  "clockwise": false},
        "beta": 0.5,
        "steps": 1,
        "seed": 1
    })");
    c.method = m;
    c.steps = steps;
    c.chains = chains;
    c.seed = seed;
    c.snapshot_stride = 1000;
    c.g_max_lag = 0;
    c.g_points = 2;
    c.n_boot = 1;
    return c;
}

// ---- criterion 1: exact balance residuals on both enumerable instances ----

void criterion_exactness(const Instance& small, const Instance& big) {
    Timer timer;
    double worst = 0.0;
    const auto fold = [&worst](double r) { worst = std::max(worst, r); };

    for (const Instance* inst : {&small, &big}) {
        const auto plain = build_snf_kernel(inst->space, inst->score, 0.0);
        const auto tempered = build_snf_kernel(inst->space, inst->score, 0.5);
        fold(detailed_balance_residual(plain.kernel, plain.pi));
        fold(detailed_balance_residual(tempered.kernel, tempered.pi));
        fold(check_invariance(plain.kernel, plain.pi).residual());
        fold(check_invariance(tempered.kernel, tempered.pi).residual());

        const ComFamily com(inst->validity, inst->score, inst->field);
        const auto lifted = build_kernel_matrix(inst->space, com, inst->score, 0.5);
        fold(skew_balance_residual(lifted));
        fold(check_invariance(lifted.kernel, lifted.pi).residual());

        const D2dFamily pairs(inst->validity, inst->score, inst->num_districts);
        const auto paired = build_kernel_matrix(inst->space, pairs, inst->score, 0.5);
        fold(mixed_skew_balance_residual(paired));
        fold(check_invariance(paired.kernel, paired.pi).residual());
    }

    const double secs = timer.seconds();
    report(1, worst <= kExactTol && secs < kBudget1,
           fmt("max balance residual %.3g over both instances, %.1fs", worst, secs));
}

// ---- criterion 2: closed-form acceptance ratios at the temperature limits ----

// Absolute neighbor scores J(xi') for a subset of neighborhood items.
std::vector<double> subset_scores(const FlowDecomposition& dec, const std::vector<int>& idx) {
    std::vector<double> scores;
    scores.reserve(idx.size());
    for (int i : idx)
        scores.push_back(dec.nbhd.j_current + dec.nbhd.delta_j[static_cast<size_t>(i)]);
    return scores;
}

std::vector<double> all_scores(const FlowDecomposition& dec) {
    std::vector<double> scores;
    scores.reserve(dec.nbhd.items.size());
    for (size_t i = 0; i < dec.nbhd.items.size(); ++i)
        scores.push_back(dec.nbhd.j_current + dec.nbhd.delta_j[i]);
    return scores;
}

// Plain tempered flip kernel against q * min(1, r) with both factors
// recomputed from absolute scores: r = Z/Z' at beta 1, e^{-dJ}|N|/|N'| at 0.
double snf_ratio_gap(const Instance& inst, double beta) {
    const int n = inst.space.size();
    std::vector<double> j(static_cast<size_t>(n)), log_z(static_cast<size_t>(n));
    std::vector<WeightedNeighborhood> nbhd(static_cast<size_t>(n));
    for (int p = 0; p < n; ++p) {
        const Plan plan = inst.space.plan(p);
        j[static_cast<size_t>(p)] = total_score(plan, inst.score);
        nbhd[static_cast<size_t>(p)] =
            weighted_neighborhood(plan, inst.validity, inst.score, beta);
        std::vector<double> scores;
        for (size_t i = 0; i < nbhd[static_cast<size_t>(p)].items.size(); ++i)
            scores.push_back(j[static_cast<size_t>(p)] +
                             nbhd[static_cast<size_t>(p)].delta_j[i]);
        log_z[static_cast<size_t>(p)] = local_partition_function(scores, beta);
    }

    const auto snf = build_snf_kernel(inst.space, inst.score, beta);
    double worst = 0.0;
    std::vector<int> labels;
    for (int p = 0; p < n; ++p) {
        const auto& nb = nbhd[static_cast<size_t>(p)];
        for (size_t i = 0; i < nb.items.size(); ++i) {
            labels = inst.space.labelings[static_cast<size_t>(p)];
            labels[static_cast<size_t>(nb.items[i].flip.v)] = nb.items[i].new_label;
            const int q = inst.space.index_of(labels);
            const double log_prop =
                -beta * j[static_cast<size_t>(q)] - log_z[static_cast<size_t>(p)];
            const double log_r =
                (1.0 - beta) * (j[static_cast<size_t>(p)] - j[static_cast<size_t>(q)]) +
                log_z[static_cast<size_t>(p)] - log_z[static_cast<size_t>(q)];
            const double expected = std::exp(log_prop) * std::min(1.0, std::exp(log_r));
            worst = std::max(worst, std::abs(snf.kernel.at(p, q) - expected));
        }
    }
    return worst;
}

// Lifted acceptance against the factored partition-function form
//   log r = (1-beta)(J-J') + [log Z_e^t - log Z_e^-t'] + [log Z_e' - log Z_e]
//           + [log Z - log Z'],
// which reduces to the displayed three-factor ratio at beta 1 and to the
// neighborhood-count form at beta 0.
double lifted_ratio_gap(const Instance& inst, const FlowFamily& family, double beta) {
    const int n = inst.space.size();
    std::vector<FlowDecomposition> dec(static_cast<size_t>(n));
    std::vector<double> j(static_cast<size_t>(n));
    for (int p = 0; p < n; ++p) {
        const Plan plan = inst.space.plan(p);
        dec[static_cast<size_t>(p)] = family.decompose(plan, beta);
        j[static_cast<size_t>(p)] = total_score(plan, inst.score);
    }

    double worst = 0.0;
    std::vector<int> labels;
    for (int p = 0; p < n; ++p) {
        const auto& fwd = dec[static_cast<size_t>(p)];
        for (int e = 0; e < family.flow_count(); ++e) {
            for (int dir : {+1, -1}) {
                for (int i : fwd.oriented(e, dir)) {
                    const auto& item = fwd.nbhd.items[static_cast<size_t>(i)];
                    labels = inst.space.labelings[static_cast<size_t>(p)];
                    labels[static_cast<size_t>(item.flip.v)] = item.new_label;
                    const int q = inst.space.index_of(labels);
                    const auto& bwd = dec[static_cast<size_t>(q)];

                    const double got = msmh_log_ratio(fwd, bwd, e, dir, beta, false);

                    auto pair_fwd = fwd.pos[static_cast<size_t>(e)];
                    pair_fwd.insert(pair_fwd.end(), fwd.neg[static_cast<size_t>(e)].begin(),
                                    fwd.neg[static_cast<size_t>(e)].end());
                    auto pair_bwd = bwd.pos[static_cast<size_t>(e)];
                    pair_bwd.insert(pair_bwd.end(), bwd.neg[static_cast<size_t>(e)].begin(),
                                    bwd.neg[static_cast<size_t>(e)].end());
                    const double expected =
                        (1.0 - beta) * (j[static_cast<size_t>(p)] - j[static_cast<size_t>(q)]) +
                        local_partition_function(subset_scores(fwd, fwd.oriented(e, dir)), beta) -
                        local_partition_function(subset_scores(bwd, bwd.oriented(e, -dir)), beta) +
                        local_partition_function(subset_scores(bwd, pair_bwd), beta) -
                        local_partition_function(subset_scores(fwd, pair_fwd), beta) +
                        local_partition_function(all_scores(fwd), beta) -
                        local_partition_function(all_scores(bwd), beta);
                    worst = std::max(worst, std::abs(got - expected));
                }
            }
        }
    }
    return worst;
}

void criterion_ratio_identities(const Instance& big) {
    Timer timer;
    // Multi-pair identity needs at least three districts.
    const auto multi = make_instance(3, 2, 4, 3);

    double worst = 0.0;
    for (double beta : {1.0, 0.0}) {
        worst = std::max(worst, snf_ratio_gap(big, beta));
        const ComFamily com(big.validity, big.score, big.field);
        worst = std::max(worst, lifted_ratio_gap(big, com, beta));
        const D2dFamily pairs(big.validity, big.score, big.num_districts);
        worst = std::max(worst, lifted_ratio_gap(big, pairs, beta));
        const D2dFamily triple(multi.validity, multi.score, multi.num_districts);
        worst = std::max(worst, lifted_ratio_gap(multi, triple, beta));
    }

    report(2, worst <= kExactTol,
           fmt("max ratio gap %.3g over all enumerated transitions at beta 1 and 0, %.1fs",
               worst, timer.seconds()));
}

// ---- criterion 3: the simplified pair ratio is reported, the full one ships ----

void criterion_variant_arbitration(const Instance& big) {
    Timer timer;
    // With two districts the single pair weight is identically one and the
    // variants coincide, so the arbitration is run on a three-district
    // instance as well, where the dropped weight factor has a real effect.
    const auto multi = make_instance(3, 2, 4, 3);

    double cut_inv = 0.0, full_inv = 0.0, full_skew = 0.0;
    std::string detail;
    for (const Instance* inst : {&big, &multi}) {
        const D2dFamily simplified(inst->validity, inst->score, inst->num_districts, true);
        const auto cut = build_kernel_matrix(inst->space, simplified, inst->score, 0.5);
        const double inv = check_invariance(cut.kernel, cut.pi).residual();
        cut_inv = std::max(cut_inv, inv);
        detail += fmt("simplified invariance %.3g (%d districts), ", inv,
                      inst->num_districts);

        const D2dFamily full(inst->validity, inst->score, inst->num_districts, false);
        const auto kept = build_kernel_matrix(inst->space, full, inst->score, 0.5);
        full_inv = std::max(full_inv, check_invariance(kept.kernel, kept.pi).residual());
        full_skew = std::max(full_skew, mixed_skew_balance_residual(kept));
    }

    report(3, full_inv <= kExactTol && full_skew <= kExactTol,
           fmt("%sfull variant: invariance %.3g, mixed skew %.3g, %.1fs", detail.c_str(),
               full_inv, full_skew, timer.seconds()));
}

// ---- criterion 4: long-run plan marginals against the exact target ----

void criterion_ergodic_sampling(const Instance& big) {
    Timer timer;
    const auto target = build_snf_kernel(big.space, big.score, 1.0);
    const std::int64_t steps = 1000000;
    const int n = big.space.size();

    std::vector<int> start_labels(16);
    for (int v = 0; v < 16; ++v) start_labels[static_cast<size_t>(v)] = v / 4 < 2 ? 1 : 0;

    std::string detail;
    bool ok = true;
    int stream = 0;
    for (Method m : {Method::Snf, Method::SnfTempered, Method::ComFlow, Method::D2dFlow}) {
        PhiloxRng rng(44, static_cast<std::uint64_t>(stream++));
        std::vector<std::int64_t> visits(static_cast<size_t>(n), 0);
        const double beta = m == Method::Snf ? 0.0 : 0.5;

        if (m == Method::Snf || m == Method::SnfTempered) {
            Plan plan(*big.graph, start_labels, 2);
            for (std::int64_t t = 0; t < steps; ++t) {
                snf_mh_step(plan, beta, big.score, big.validity, rng);
                ++visits[static_cast<size_t>(big.space.index_of(plan.labels()))];
            }
        } else {
            const ComFamily com(big.validity, big.score, big.field);
            const D2dFamily pairs(big.validity, big.score, big.num_districts);
            const FlowFamily& family =
                m == Method::ComFlow ? static_cast<const FlowFamily&>(com)
                                     : static_cast<const FlowFamily&>(pairs);
            ExtendedState st{Plan(*big.graph, start_labels, 2),
                             std::vector<std::int8_t>(
                                 static_cast<size_t>(family.flow_count()), 1)};
            for (std::int64_t t = 0; t < steps; ++t) {
                msmh_step(st, family, beta, rng);
                ++visits[static_cast<size_t>(big.space.index_of(st.plan.labels()))];
            }
        }

        std::vector<double> empirical(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i)
            empirical[static_cast<size_t>(i)] =
                static_cast<double>(visits[static_cast<size_t>(i)]) /
                static_cast<double>(steps);
        const double tv = total_variation(empirical, target.pi);
        ok = ok && tv <= kTvBound;
        detail += fmt("%s %.4f ", method_to_string(m).c_str(), tv);
    }

    const double secs = timer.seconds();
    report(4, ok && secs < kBudget4,
           fmt("plan-marginal total variation per method: %s%.1fs", detail.c_str(), secs));
}

// ---- criterion 5: scaled grid reproduction of the transition-count gap ----

void criterion_scaled_reproduction() {
    Timer timer;
    const auto com = run_experiment(grid_config(Method::ComFlow, 1000000, 2, 2026));
    const auto snf = run_experiment(grid_config(Method::Snf, 1000000, 2, 2026));
    const std::int64_t com_total = com.transitions.total();
    const std::int64_t snf_total = snf.transitions.total();
    const double ratio = snf_total > 0
                             ? static_cast<double>(com_total) / static_cast<double>(snf_total)
                             : std::numeric_limits<double>::infinity();
    const double secs = timer.seconds();
    report(5,
           com_total >= static_cast<std::int64_t>(kScaledGap * static_cast<double>(snf_total)) &&
               snf_total > 0 && secs < kBudget5,
           fmt("metastable transitions com %lld vs snf %lld (ratio %.2f), %.1fs",
               static_cast<long long>(com_total), static_cast<long long>(snf_total), ratio,
               secs));
}

// ---- criterion 6: full-size reproduction (only with --long) ----

std::int64_t crossing_step(const std::vector<GPoint>& curve, double threshold) {
    for (const auto& pt : curve)
        if (pt.g <= threshold) return pt.lag;
    return std::numeric_limits<std::int64_t>::max();
}

void criterion_full_reproduction() {
    Timer timer;
    struct Row {
        Method method;
        double max_dev = 0.0;
        std::int64_t transitions = 0;
        std::int64_t g_cross = 0;
    };
    std::vector<Row> rows;

    for (Method m : {Method::Snf, Method::SnfTempered, Method::ComFlow, Method::D2dFlow}) {
        auto cfg = grid_config(m, 10000000, 10, 77);
        cfg.snapshot_stride = 100;
        cfg.g_max_lag = 100000;
        cfg.g_points = 51;
        cfg.n_boot = 200;
        const auto result = run_experiment(cfg);
        Row row{m};
        for (int v = 0; v < 100; ++v)
            row.max_dev = std::max(row.max_dev, std::abs(result.occupancy.occupancy(v) - 0.5));
        row.transitions = result.transitions.total();
        row.g_cross = crossing_step(result.g_curve, kGThreshold);
        rows.push_back(row);
        std::printf("  %-12s max dev %.4f, transitions %lld, G<=%.1f at %lld steps\n",
                    method_to_string(m).c_str(), row.max_dev,
                    static_cast<long long>(row.transitions), kGThreshold,
                    static_cast<long long>(row.g_cross));
        std::fflush(stdout);
    }

    const Row& snf = rows[0];
    const Row& snft = rows[1];
    const Row& com = rows[2];
    const Row& d2d = rows[3];

    bool ok = true;
    for (const Row& r : rows) ok = ok && r.max_dev <= kDeviationBound;
    ok = ok && com.transitions > snft.transitions && com.transitions > d2d.transitions &&
         snft.transitions > snf.transitions && d2d.transitions > snf.transitions;
    const double ratio = static_cast<double>(com.transitions) /
                         static_cast<double>(std::max<std::int64_t>(snf.transitions, 1));
    ok = ok && ratio >= kRatioLow && ratio <= kRatioHigh;
    for (const Row& r : rows) ok = ok && r.g_cross <= kGDeadline;
    ok = ok && com.g_cross < snf.g_cross;

    report(6, ok,
           fmt("deviations<=%.2f, ordering com>mid>snf with com/snf %.2f, decorrelation "
               "within %lld steps, %.0fs",
               kDeviationBound, ratio, static_cast<long long>(kGDeadline), timer.seconds()));
}

// ---- criterion 7: overlap statistic identity on real chain snapshots ----

void criterion_overlap_identity() {
    Timer timer;
    auto cfg = ExperimentConfig::from_json_text(R"({
        "graph": {"lattice": [4, 4]},
        "score": {"pop_min": 6, "pop_max": 10},
        "field": {"kind": "vortex", "center": [1.5, 1.5], "unit_speed": true,
                  "clockwise": false},
        "method": "com-flow",
        "beta": 0.5,
        "steps": 20000,
        "seed": 7,
        "snapshot_stride": 10,
        "g_max_lag": 0,
        "g_points": 2,
        "n_boot": 1
    })");
    const auto result = run_experiment(cfg);
    const auto& snaps = result.chains[0].snapshots;

    double worst = 0.0;
    std::vector<int> a, b;
    for (std::int64_t lag : {0, 1, 2, 5, 10, 50, 100, 200}) {
        for (size_t s = 0; s + static_cast<size_t>(lag) < snaps.size(); ++s) {
            const PackedLabels& x = snaps[s];
            const PackedLabels& y = snaps[s + static_cast<size_t>(lag)];
            x.unpack(a);
            y.unpack(b);
            worst = std::max(worst, std::abs(g_pair_hamming(x, y) - g_pair_matrix(a, b, 2)));
        }
    }

    // Independent random labelings cover the space away from chain samples.
    PhiloxRng rng(70, 0);
    for (int trial = 0; trial < 50; ++trial) {
        a.resize(100);
        b.resize(100);
        for (int& l : a) l = static_cast<int>(rng.below(2));
        for (int& l : b) l = static_cast<int>(rng.below(2));
        worst = std::max(worst,
                         std::abs(g_pair_hamming(PackedLabels(a, 2), PackedLabels(b, 2)) -
                                  g_pair_matrix(a, b, 2)));
    }

    report(7, worst <= kExactTol,
           fmt("max gap %.3g between matrix and Hamming forms, %.1fs", worst,
               timer.seconds()));
}

// ---- criterion 8: sink components against the exhaustive trap scan ----

void criterion_circuit_analyzer() {
    Timer timer;
    PhiloxRng rng(8, 0);
    int checked = 0;
    bool ok = true;
    for (int trial = 0; trial < 200 && ok; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(7));
        KernelMatrix k(n);
        for (int s = 0; s < n; ++s) {
            const int degree = 1 + static_cast<int>(rng.below(3));
            std::vector<int> targets(static_cast<size_t>(degree));
            std::vector<double> mass(static_cast<size_t>(degree));
            double total = 0.0;
            for (int i = 0; i < degree; ++i) {
                targets[static_cast<size_t>(i)] = static_cast<int>(rng.below(
                    static_cast<std::uint64_t>(n)));
                mass[static_cast<size_t>(i)] = rng.uniform();
                total += mass[static_cast<size_t>(i)];
            }
            for (int i = 0; i < degree; ++i)
                k.add(s, targets[static_cast<size_t>(i)],
                      mass[static_cast<size_t>(i)] / total);
        }
        k.compress();
        ok = find_non_escapable_circuits(k) == closed_classes_brute_force(k);
        ++checked;
    }
    report(8, ok, fmt("%d random digraphs up to 8 states, %.1fs", checked, timer.seconds()));
}

// ---- criterion 9: early-mixing ordering of the occupancy deviation ----

void criterion_early_mixing() {
    Timer timer;
    std::string detail;
    double dev[4] = {0, 0, 0, 0};
    int idx = 0;
    for (Method m : {Method::Snf, Method::SnfTempered, Method::D2dFlow, Method::ComFlow}) {
        const auto result = run_experiment(grid_config(m, 25000, 1, 9));
        for (int v = 0; v < 100; ++v)
            dev[idx] = std::max(dev[idx], std::abs(result.occupancy.occupancy(v) - 0.5));
        detail += fmt("%s %.3f ", method_to_string(m).c_str(), dev[idx]);
        ++idx;
    }
    const bool ok = dev[3] < dev[0] && dev[3] < dev[1] && dev[3] < dev[2];
    report(9, ok, fmt("max occupancy deviation after 25k steps: %s%.1fs", detail.c_str(),
                      timer.seconds()));
}

} // namespace

int main(int argc, char** argv) {
    bool long_run = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--long") == 0) {
            long_run = true;
        } else {
            std::fprintf(stderr, "usage: %s [--long]\n", argv[0]);
            return 2;
        }
    }

    Timer total;
    const auto guarded = [](int id, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            report(id, false, std::string("exception: ") + e.what());
        }
    };

    const auto small = make_instance(2, 2, 2, 2);
    const auto big = make_instance(4, 6, 10, 2);

    guarded(1, [&] { criterion_exactness(small, big); });
    guarded(2, [&] { criterion_ratio_identities(big); });
    guarded(3, [&] { criterion_variant_arbitration(big); });
    guarded(4, [&] { criterion_ergodic_sampling(big); });
    guarded(5, [&] { criterion_scaled_reproduction(); });
    if (long_run)
        guarded(6, [&] { criterion_full_reproduction(); });
    else
        std::printf("criterion 6: SKIPPED (pass --long to run the full-size job)\n");
    guarded(7, [&] { criterion_overlap_identity(); });
    guarded(8, [&] { criterion_circuit_analyzer(); });
    guarded(9, [&] { criterion_early_mixing(); });

    const int executed = long_run ? 9 : 8;
    std::printf("acceptance: %d of %d executed criteria passed, %.0fs total\n",
                executed - failures, executed, total.seconds());
    return failures == 0 ? 0 : 1;
}
