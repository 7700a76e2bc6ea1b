#ifndef NRMC_EXPERIMENT_HPP
#define NRMC_EXPERIMENT_HPP

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nrmc/diagnostics.hpp"
#include "nrmc/flows.hpp"

namespace nrmc {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Method { Snf, SnfTempered, ComFlow, D2dFlow };

Method method_from_string(const std::string& name);
std::string method_to_string(Method m);

struct ExperimentConfig {
    // Instance: either an explicit graph file or a generated grid.
    std::string graph_file;
    int lattice_width = 0;
    int lattice_height = 0;
    int num_districts = 2;
    std::string initial_plan_file; // empty: horizontal row-band split

    ScoreSpec score;
    ValiditySpec validity;

    Method method = Method::ComFlow;
    double beta = 0.5;
    double epsilon = 0.0;
    double lazy_hold = 0.0;
    bool d2d_simplified = false;
    VectorField field;
    std::uint64_t orientation_salt = 0;

    std::int64_t steps = 0;
    int chains = 1;
    std::uint64_t seed = 0;
    int threads = 0; // 0: one per chain
    std::string out_dir;

    int snapshot_stride = 10;
    int metastable_band = 3;
    std::int64_t g_max_lag = 50000; // in steps
    int g_points = 51;
    int n_boot = 200;
    std::int64_t checkpoint_interval = 0; // steps between synchronized checkpoints

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_json_file(const std::string& path);
    std::string to_json_text() const;

    // Everything that must agree between a checkpoint and the config resuming
    // from it. Run length, output location, and scheduling knobs are free.
    std::uint64_t resume_hash() const;
    void validate() const;
};

struct ChainResult {
    std::int64_t steps = 0;
    std::int64_t accepted = 0;
    std::int64_t forced_flips = 0;
    std::int64_t frozen = 0;
    std::int64_t lazy_holds = 0;
    std::int64_t lazy_flips = 0;
    std::array<std::int64_t, 4> metastate_steps{};
    TransitionCounts transitions;
    OccupancyAccumulator occupancy;
    std::vector<PackedLabels> snapshots; // state at steps 0, stride, 2*stride, ...
    std::vector<int> labels;
    std::vector<std::int8_t> theta;
    std::uint64_t rng_position = 0;

    explicit ChainResult(int vertex_count) : occupancy(vertex_count) {}
    double acceptance_rate() const;
};

struct ExperimentResult {
    std::vector<ChainResult> chains;
    OccupancyAccumulator occupancy; // merged over chains
    TransitionCounts transitions;   // merged over chains
    std::vector<GPoint> g_curve;    // lag converted to steps
    double wall_seconds = 0.0;

    explicit ExperimentResult(int vertex_count) : occupancy(vertex_count) {}
};

// Runs config.chains independent chains (chain k uses RNG stream k of
// config.seed), writes occupancy.csv, transitions.csv, g_curve.csv,
// chains.csv, manifest.json, and checkpoint.bin into config.out_dir.
// `resume` continues from out_dir/checkpoint.bin, which must carry the same
// resume_hash and at most config.steps completed steps.
ExperimentResult run_experiment(const ExperimentConfig& config, bool resume = false);

// Checkpoint round-trip, exposed for tests. Restores into `into` (which must
// match vertex and flow counts) and returns per-chain completed step counts.
void write_checkpoint(const std::string& path, const ExperimentConfig& config,
                      const std::vector<ChainResult>& chains);
std::vector<ChainResult> read_checkpoint(const std::string& path,
                                         const ExperimentConfig& config, int vertex_count,
                                         int flow_count);

} // namespace nrmc

#endif
