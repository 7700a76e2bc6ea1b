#ifndef NRMC_DIAGNOSTICS_HPP
#define NRMC_DIAGNOSTICS_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "nrmc/graph.hpp"
#include "nrmc/rng.hpp"

namespace nrmc {

// Per-vertex fraction of time spent in district 1. Mergeable across chains.
class OccupancyAccumulator {
public:
    explicit OccupancyAccumulator(int vertex_count);

    void record(const Plan& plan);
    void merge(const OccupancyAccumulator& other);

    std::int64_t steps() const { return steps_; }
    int vertex_count() const { return static_cast<int>(in_first_.size()); }
    double occupancy(int v) const;
    // Signed log-scale deviation from the symmetric value 1/2.
    double display(int v) const;

    std::span<const std::int64_t> raw_counts() const { return in_first_; }
    void restore(std::span<const std::int64_t> counts, std::int64_t steps);

private:
    std::vector<std::int64_t> in_first_;
    std::int64_t steps_ = 0;
};

// Quadrant classification of a two-district plan on a square grid, by which
// side district 1 occupies: N=0, E=1, S=2, W=3, -1 when no side is settled.
// Rows and columns within `band` of the grid center are ignored; the N
// metastate has district 1 covering every high-row vertex outside the band
// and district 2 covering every low-row vertex, and so on by compass symmetry.
// North is the +y side.
int classify_metastable(const Plan& plan, int band = 3);

// Transitions between settled metastates: a transition is counted when the
// chain, last seen in one metastate, is next seen in a different one.
// Unclassified steps in between do not reset the origin.
struct TransitionCounts {
    std::array<std::array<std::int64_t, 4>, 4> count{};
    int last = -1;

    void observe(int metastate);
    std::int64_t total() const;
    void merge(const TransitionCounts& other);
};

TransitionCounts count_transitions(std::span<const int> metastates);

// Label vector in a compact form: one bit per vertex for two districts,
// one byte per vertex otherwise.
class PackedLabels {
public:
    PackedLabels() = default;
    PackedLabels(std::span<const int> labels, int num_districts);

    int size() const { return size_; }
    int num_districts() const { return num_districts_; }
    int label(int v) const;
    std::span<const std::uint64_t> words() const { return words_; }
    std::span<const std::uint8_t> bytes() const { return bytes_; }
    void unpack(std::vector<int>& out) const;

    static PackedLabels from_words(int size, std::vector<std::uint64_t> words);
    static PackedLabels from_bytes(int num_districts, std::vector<std::uint8_t> bytes);

    friend int hamming(const PackedLabels& a, const PackedLabels& b);

private:
    int size_ = 0;
    int num_districts_ = 0;
    std::vector<std::uint64_t> words_; // two districts: one bit per vertex
    std::vector<std::uint8_t> bytes_;  // otherwise
};

int hamming(std::span<const int> a, std::span<const int> b);
int hamming(const PackedLabels& a, const PackedLabels& b);

// Plan-overlap statistic of a snapshot pair, 1 at identity, 0 in expectation
// for independent uniform labelings.
double g_pair_hamming(const PackedLabels& a, const PackedLabels& b);
// Reference form of the same quantity via centered indicator matrices:
// trace((phi_a - E)(phi_b - E)^T) normalized by its value at zero distance.
double g_pair_matrix(std::span<const int> a, std::span<const int> b, int num_districts);

struct GPoint {
    std::int64_t lag = 0; // in snapshot units
    double g = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

// Decorrelation curve over snapshot lags, bootstrapped: per chain, n_boot
// start points drawn uniformly with replacement from the first
// (length - max lag) snapshots; the band is a 3-sigma normal interval on the
// pooled mean.
std::vector<GPoint> estimate_G(const std::vector<std::vector<PackedLabels>>& chains,
                               std::span<const std::int64_t> lags, int n_boot, PhiloxRng& rng);

} // namespace nrmc

#endif
