#include "nrmc/diagnostics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace nrmc {

OccupancyAccumulator::OccupancyAccumulator(int vertex_count)
    : in_first_(static_cast<size_t>(vertex_count), 0) {}

void OccupancyAccumulator::record(const Plan& plan) {
    for (int v = 0; v < plan.size(); ++v)
        if (plan.label(v) == 0) ++in_first_[static_cast<size_t>(v)];
    ++steps_;
}

void OccupancyAccumulator::merge(const OccupancyAccumulator& other) {
    if (other.in_first_.size() != in_first_.size())
        throw std::invalid_argument("occupancy merge size mismatch");
    for (size_t v = 0; v < in_first_.size(); ++v) in_first_[v] += other.in_first_[v];
    steps_ += other.steps_;
}

double OccupancyAccumulator::occupancy(int v) const {
    return steps_ == 0 ? 0.0
                       : static_cast<double>(in_first_[static_cast<size_t>(v)]) /
                             static_cast<double>(steps_);
}

double OccupancyAccumulator::display(int v) const {
    const double dev = occupancy(v) - 0.5;
    const double mag = std::log1p(std::abs(dev));
    return dev < 0.0 ? -mag : mag;
}

void OccupancyAccumulator::restore(std::span<const std::int64_t> counts, std::int64_t steps) {
    if (counts.size() != in_first_.size())
        throw std::invalid_argument("occupancy restore size mismatch");
    std::copy(counts.begin(), counts.end(), in_first_.begin());
    steps_ = steps;
}

int classify_metastable(const Plan& plan, int band) {
    if (plan.district_count() != 2) return -1;
    const PrecinctGraph& g = plan.graph();
    int width = 0, height = 0;
    for (int v = 0; v < g.vertex_count(); ++v) {
        width = std::max(width, static_cast<int>(std::lround(g.vertex(v).centroid.x)) + 1);
        height = std::max(height, static_cast<int>(std::lround(g.vertex(v).centroid.y)) + 1);
    }
    const double mid_col = (width - 1) / 2.0;
    const double mid_row = (height - 1) / 2.0;

    // 0 = all label 0 in the zone, 1 = all label 1, -1 = mixed or empty.
    int lo_row = -1, hi_row = -1, lo_col = -1, hi_col = -1;
    const auto fold = [](int& zone, int label) {
        if (zone == -1)
            zone = label;
        else if (zone != label)
            zone = 2;
    };
    for (int v = 0; v < g.vertex_count(); ++v) {
        const int col = static_cast<int>(std::lround(g.vertex(v).centroid.x));
        const int row = static_cast<int>(std::lround(g.vertex(v).centroid.y));
        const int label = plan.label(v);
        if (mid_row - row > band) fold(lo_row, label);
        if (row - mid_row > band) fold(hi_row, label);
        if (mid_col - col > band) fold(lo_col, label);
        if (col - mid_col > band) fold(hi_col, label);
    }
    if (hi_row == 0 && lo_row == 1) return 0; // N: district 1 on the +y side
    if (hi_col == 0 && lo_col == 1) return 1; // E
    if (hi_row == 1 && lo_row == 0) return 2; // S
    if (hi_col == 1 && lo_col == 0) return 3; // W
    return -1;
}

void TransitionCounts::observe(int metastate) {
    if (metastate < 0) return;
    if (last >= 0 && metastate != last)
        ++count[static_cast<size_t>(last)][static_cast<size_t>(metastate)];
    last = metastate;
}

std::int64_t TransitionCounts::total() const {
    std::int64_t t = 0;
    for (const auto& row : count)
        for (std::int64_t c : row) t += c;
    return t;
}

void TransitionCounts::merge(const TransitionCounts& other) {
    for (size_t i = 0; i < 4; ++i)
        for (size_t j = 0; j < 4; ++j) count[i][j] += other.count[i][j];
}

TransitionCounts count_transitions(std::span<const int> metastates) {
    TransitionCounts t;
    for (int m : metastates) t.observe(m);
    return t;
}

PackedLabels::PackedLabels(std::span<const int> labels, int num_districts)
    : size_(static_cast<int>(labels.size())), num_districts_(num_districts) {
    if (num_districts == 2) {
        words_.assign((labels.size() + 63) / 64, 0);
        for (size_t v = 0; v < labels.size(); ++v)
            if (labels[v]) words_[v / 64] |= std::uint64_t{1} << (v % 64);
    } else {
        bytes_.reserve(labels.size());
        for (int l : labels) bytes_.push_back(static_cast<std::uint8_t>(l));
    }
}

PackedLabels PackedLabels::from_words(int size, std::vector<std::uint64_t> words) {
    if (words.size() != (static_cast<size_t>(size) + 63) / 64)
        throw std::invalid_argument("packed labels word count mismatch");
    PackedLabels p;
    p.size_ = size;
    p.num_districts_ = 2;
    p.words_ = std::move(words);
    return p;
}

PackedLabels PackedLabels::from_bytes(int num_districts, std::vector<std::uint8_t> bytes) {
    PackedLabels p;
    p.size_ = static_cast<int>(bytes.size());
    p.num_districts_ = num_districts;
    p.bytes_ = std::move(bytes);
    return p;
}

int PackedLabels::label(int v) const {
    if (num_districts_ == 2)
        return static_cast<int>((words_[static_cast<size_t>(v) / 64] >> (v % 64)) & 1u);
    return bytes_[static_cast<size_t>(v)];
}

void PackedLabels::unpack(std::vector<int>& out) const {
    out.resize(static_cast<size_t>(size_));
    for (int v = 0; v < size_; ++v) out[static_cast<size_t>(v)] = label(v);
}

int hamming(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw std::invalid_argument("hamming size mismatch");
    int h = 0;
    for (size_t i = 0; i < a.size(); ++i) h += a[i] != b[i];
    return h;
}

int hamming(const PackedLabels& a, const PackedLabels& b) {
    if (a.size_ != b.size_ || a.num_districts_ != b.num_districts_)
        throw std::invalid_argument("hamming shape mismatch");
    int h = 0;
    if (a.num_districts_ == 2) {
        for (size_t w = 0; w < a.words_.size(); ++w)
            h += std::popcount(a.words_[w] ^ b.words_[w]);
    } else {
        for (size_t v = 0; v < a.bytes_.size(); ++v) h += a.bytes_[v] != b.bytes_[v];
    }
    return h;
}

double g_pair_hamming(const PackedLabels& a, const PackedLabels& b) {
    const int n = a.size();
    const int d = a.num_districts();
    if (d < 2) throw std::invalid_argument("overlap needs at least two districts");
    return 1.0 - static_cast<double>(d) * hamming(a, b) /
                     (static_cast<double>(n) * (d - 1));
}

double g_pair_matrix(std::span<const int> a, std::span<const int> b, int num_districts) {
    const size_t n = a.size();
    const double e = 1.0 / num_districts;
    double trace = 0.0;
    for (size_t v = 0; v < n; ++v) {
        for (int k = 0; k < num_districts; ++k) {
            const double pa = (a[v] == k ? 1.0 : 0.0) - e;
            const double pb = (b[v] == k ? 1.0 : 0.0) - e;
            trace += pa * pb;
        }
    }
    const double at_zero = static_cast<double>(n) * (num_districts - 1) / num_districts;
    return trace / at_zero;
}

std::vector<GPoint> estimate_G(const std::vector<std::vector<PackedLabels>>& chains,
                               std::span<const std::int64_t> lags, int n_boot, PhiloxRng& rng) {
    std::int64_t max_lag = 0;
    for (std::int64_t l : lags) max_lag = std::max(max_lag, l);
    std::vector<GPoint> out(lags.size());
    for (size_t i = 0; i < lags.size(); ++i) out[i].lag = lags[i];

    std::vector<double> sum(lags.size(), 0.0), sum_sq(lags.size(), 0.0);
    std::int64_t draws = 0;
    for (const auto& chain : chains) {
        const std::int64_t usable = static_cast<std::int64_t>(chain.size()) - max_lag;
        if (usable < 1)
            throw std::invalid_argument("chain shorter than the largest requested lag");
        for (int k = 0; k < n_boot; ++k) {
            const auto start = static_cast<size_t>(rng.below(static_cast<std::uint64_t>(usable)));
            for (size_t i = 0; i < lags.size(); ++i) {
                const double g =
                    g_pair_hamming(chain[start], chain[start + static_cast<size_t>(lags[i])]);
                sum[i] += g;
                sum_sq[i] += g * g;
            }
            ++draws;
        }
    }
    for (size_t i = 0; i < lags.size(); ++i) {
        const double mean = sum[i] / static_cast<double>(draws);
        double var = sum_sq[i] / static_cast<double>(draws) - mean * mean;
        var = std::max(var, 0.0);
        const double half = 3.0 * std::sqrt(var / static_cast<double>(draws));
        out[i].g = mean;
        out[i].ci_low = mean - half;
        out[i].ci_high = mean + half;
    }
    return out;
}

} // namespace nrmc
