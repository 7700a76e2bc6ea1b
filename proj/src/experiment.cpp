#include "nrmc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#ifndef NRMC_BUILD_ID
#define NRMC_BUILD_ID "unknown"
#endif

namespace nrmc {

namespace {

using nlohmann::json;

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end())
            throw ConfigError("unknown key \"" + key + "\" in " + where);
    }
}

std::uint64_t fnv64(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

json field_to_json(const VectorField& f) {
    json j;
    if (f.kind == VectorField::Kind::Vortex) {
        j["kind"] = "vortex";
        j["center"] = {f.center.x, f.center.y};
        j["unit_speed"] = f.unit_speed;
        j["clockwise"] = f.clockwise;
    } else {
        j["kind"] = "constant";
        j["direction"] = {f.direction.x, f.direction.y};
    }
    return j;
}

json score_to_json(const ScoreSpec& s) {
    json j;
    j["w_pop"] = s.w_pop;
    j["w_compact"] = s.w_compact;
    j["pop_mode"] = s.pop_mode == ScoreSpec::PopMode::HardBounds ? "hard" : "squared";
    j["pop_min"] = s.pop_min;
    j["pop_max"] = s.pop_max;
    j["pop_target"] = s.pop_target;
    j["compact_mode"] = s.compact_mode == ScoreSpec::CompactMode::CutEdgeCount
                            ? "cut_edges"
                            : "shared_boundary";
    j["compact_scale"] = s.compact_scale;
    return j;
}

ScoreSpec score_from_json(const json& j) {
    require_keys(j,
                 {"w_pop", "w_compact", "pop_mode", "pop_min", "pop_max", "pop_target",
                  "compact_mode", "compact_scale"},
                 "score");
    ScoreSpec s;
    s.w_pop = j.value("w_pop", s.w_pop);
    s.w_compact = j.value("w_compact", s.w_compact);
    const std::string pop_mode = j.value("pop_mode", "hard");
    if (pop_mode == "hard")
        s.pop_mode = ScoreSpec::PopMode::HardBounds;
    else if (pop_mode == "squared")
        s.pop_mode = ScoreSpec::PopMode::SquaredDeviation;
    else
        throw ConfigError("score.pop_mode must be \"hard\" or \"squared\"");
    s.pop_min = j.value("pop_min", s.pop_min);
    s.pop_max = j.value("pop_max", s.pop_max);
    s.pop_target = j.value("pop_target", s.pop_target);
    const std::string compact = j.value("compact_mode", "cut_edges");
    if (compact == "cut_edges")
        s.compact_mode = ScoreSpec::CompactMode::CutEdgeCount;
    else if (compact == "shared_boundary")
        s.compact_mode = ScoreSpec::CompactMode::SharedBoundaryLength;
    else
        throw ConfigError("score.compact_mode must be \"cut_edges\" or \"shared_boundary\"");
    s.compact_scale = j.value("compact_scale", s.compact_scale);
    return s;
}

json validity_to_json(const ValiditySpec& v) {
    json j;
    j["pop_min"] = v.pop_min;
    j["pop_max"] = v.pop_max;
    j["require_connected"] = v.require_connected;
    j["require_simply_connected"] = v.require_simply_connected;
    return j;
}

ValiditySpec validity_from_json(const json& j) {
    require_keys(j, {"pop_min", "pop_max", "require_connected", "require_simply_connected"},
                 "validity");
    ValiditySpec v;
    v.pop_min = j.value("pop_min", v.pop_min);
    v.pop_max = j.value("pop_max", v.pop_max);
    v.require_connected = j.value("require_connected", v.require_connected);
    v.require_simply_connected = j.value("require_simply_connected", v.require_simply_connected);
    return v;
}

} // namespace

Method method_from_string(const std::string& name) {
    if (name == "snf") return Method::Snf;
    if (name == "snf-tempered") return Method::SnfTempered;
    if (name == "com-flow") return Method::ComFlow;
    if (name == "d2d-flow") return Method::D2dFlow;
    throw ConfigError("unknown method \"" + name +
                      "\" (expected snf, snf-tempered, com-flow, or d2d-flow)");
}

std::string method_to_string(Method m) {
    switch (m) {
    case Method::Snf: return "snf";
    case Method::SnfTempered: return "snf-tempered";
    case Method::ComFlow: return "com-flow";
    case Method::D2dFlow: return "d2d-flow";
    }
    return "?";
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    require_keys(j,
                 {"graph", "districts", "initial_plan", "score", "validity", "method", "beta",
                  "epsilon", "lazy_hold", "d2d_simplified", "field", "orientation_salt", "steps",
                  "chains", "seed", "threads", "out", "snapshot_stride", "metastable_band",
                  "g_max_lag", "g_points", "n_boot", "checkpoint_interval"},
                 "config");

    ExperimentConfig c;
    if (!j.contains("graph")) throw ConfigError("config needs a \"graph\" entry");
    const json& g = j["graph"];
    require_keys(g, {"file", "lattice"}, "graph");
    if (g.contains("file") == g.contains("lattice"))
        throw ConfigError("graph must give exactly one of \"file\" or \"lattice\"");
    if (g.contains("file")) {
        c.graph_file = g["file"].get<std::string>();
    } else {
        const json& dims = g["lattice"];
        if (!dims.is_array() || dims.size() != 2)
            throw ConfigError("graph.lattice must be [width, height]");
        c.lattice_width = dims[0].get<int>();
        c.lattice_height = dims[1].get<int>();
    }
    c.num_districts = j.value("districts", c.num_districts);
    c.initial_plan_file = j.value("initial_plan", c.initial_plan_file);
    if (j.contains("score")) c.score = score_from_json(j["score"]);
    if (j.contains("validity")) {
        c.validity = validity_from_json(j["validity"]);
    } else if (c.score.pop_mode == ScoreSpec::PopMode::HardBounds) {
        c.validity.pop_min = c.score.pop_min;
        c.validity.pop_max = c.score.pop_max;
    }
    if (j.contains("method")) c.method = method_from_string(j["method"].get<std::string>());
    c.beta = j.value("beta", c.beta);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.lazy_hold = j.value("lazy_hold", c.lazy_hold);
    c.d2d_simplified = j.value("d2d_simplified", c.d2d_simplified);
    if (j.contains("field")) {
        try {
            c.field = VectorField::from_json_text(j["field"].dump());
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
    c.orientation_salt = j.value("orientation_salt", c.orientation_salt);
    c.steps = j.value("steps", c.steps);
    c.chains = j.value("chains", c.chains);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.out_dir = j.value("out", c.out_dir);
    c.snapshot_stride = j.value("snapshot_stride", c.snapshot_stride);
    c.metastable_band = j.value("metastable_band", c.metastable_band);
    c.g_max_lag = j.value("g_max_lag", c.g_max_lag);
    c.g_points = j.value("g_points", c.g_points);
    c.n_boot = j.value("n_boot", c.n_boot);
    c.checkpoint_interval = j.value("checkpoint_interval", c.checkpoint_interval);
    return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string ExperimentConfig::to_json_text() const {
    json j;
    if (!graph_file.empty())
        j["graph"]["file"] = graph_file;
    else
        j["graph"]["lattice"] = {lattice_width, lattice_height};
    j["districts"] = num_districts;
    if (!initial_plan_file.empty()) j["initial_plan"] = initial_plan_file;
    j["score"] = score_to_json(score);
    j["validity"] = validity_to_json(validity);
    j["method"] = method_to_string(method);
    j["beta"] = beta;
    j["epsilon"] = epsilon;
    j["lazy_hold"] = lazy_hold;
    j["d2d_simplified"] = d2d_simplified;
    j["field"] = field_to_json(field);
    j["orientation_salt"] = orientation_salt;
    j["steps"] = steps;
    j["chains"] = chains;
    j["seed"] = seed;
    j["threads"] = threads;
    j["out"] = out_dir;
    j["snapshot_stride"] = snapshot_stride;
    j["metastable_band"] = metastable_band;
    j["g_max_lag"] = g_max_lag;
    j["g_points"] = g_points;
    j["n_boot"] = n_boot;
    j["checkpoint_interval"] = checkpoint_interval;
    return j.dump(2);
}

std::uint64_t ExperimentConfig::resume_hash() const {
    json j;
    if (!graph_file.empty())
        j["graph_file"] = graph_file;
    else
        j["lattice"] = {lattice_width, lattice_height};
    j["districts"] = num_districts;
    j["initial_plan"] = initial_plan_file;
    j["score"] = score_to_json(score);
    j["validity"] = validity_to_json(validity);
    j["method"] = method_to_string(method);
    j["beta"] = beta;
    j["epsilon"] = epsilon;
    j["lazy_hold"] = lazy_hold;
    j["d2d_simplified"] = d2d_simplified;
    j["field"] = field_to_json(field);
    j["orientation_salt"] = orientation_salt;
    j["chains"] = chains;
    j["seed"] = seed;
    j["snapshot_stride"] = snapshot_stride;
    j["metastable_band"] = metastable_band;
    return fnv64(j.dump());
}

void ExperimentConfig::validate() const {
    if (graph_file.empty() && (lattice_width < 1 || lattice_height < 1))
        throw ConfigError("config needs a graph file or positive lattice dimensions");
    if (num_districts < 2) throw ConfigError("districts must be at least 2");
    if (steps < 1) throw ConfigError("steps must be positive");
    if (chains < 1) throw ConfigError("chains must be positive");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
    if (epsilon < 0.0 || lazy_hold < 0.0 || epsilon + lazy_hold > 1.0)
        throw ConfigError("epsilon and lazy_hold must be nonnegative with sum at most 1");
    if ((method == Method::Snf || method == Method::SnfTempered) &&
        (epsilon != 0.0 || lazy_hold != 0.0))
        throw ConfigError("epsilon and lazy_hold need flow momenta; not valid with " +
                          method_to_string(method));
    if (score.w_pop < 0.0 || score.w_compact < 0.0)
        throw ConfigError("score weights must be nonnegative");
    if (score.pop_mode == ScoreSpec::PopMode::HardBounds && score.pop_min > score.pop_max)
        throw ConfigError("score.pop_min exceeds score.pop_max");
    if (snapshot_stride < 1) throw ConfigError("snapshot_stride must be positive");
    if (metastable_band < 0) throw ConfigError("metastable_band must be nonnegative");
    if (g_max_lag < 0) throw ConfigError("g_max_lag must be nonnegative");
    if (g_points < 2) throw ConfigError("g_points must be at least 2");
    if (n_boot < 1) throw ConfigError("n_boot must be positive");
    if (threads < 0) throw ConfigError("threads must be nonnegative");
    if (checkpoint_interval < 0) throw ConfigError("checkpoint_interval must be nonnegative");
    if (checkpoint_interval > 0 && threads != 0 && threads < chains)
        throw ConfigError("periodic checkpoints synchronize all chains; threads must be 0 or "
                          ">= chains");
}

double ChainResult::acceptance_rate() const {
    return steps == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(steps);
}

namespace {

struct Instance {
    PrecinctGraph graph;
    std::vector<int> initial_labels;
    std::unique_ptr<FlowFamily> family; // null for the reversible methods
    int flow_count = 0;
    double step_beta = 0.0; // proposal temper actually used
};

std::vector<int> row_band_labels(const PrecinctGraph& g, int districts) {
    int max_row = 0;
    for (int v = 0; v < g.vertex_count(); ++v)
        max_row = std::max(max_row, static_cast<int>(std::lround(g.vertex(v).centroid.y)));
    std::vector<int> labels(static_cast<size_t>(g.vertex_count()));
    for (int v = 0; v < g.vertex_count(); ++v) {
        const int row = static_cast<int>(std::lround(g.vertex(v).centroid.y));
        // District 1 takes the top rows (largest y).
        labels[static_cast<size_t>(v)] =
            std::min(districts - 1, (max_row - row) * districts / (max_row + 1));
    }
    return labels;
}

Instance build_instance(const ExperimentConfig& c) {
    Instance inst{c.graph_file.empty()
                      ? PrecinctGraph::lattice(c.lattice_width, c.lattice_height)
                      : PrecinctGraph::from_json_file(c.graph_file)};
    if (c.initial_plan_file.empty()) {
        inst.initial_labels = row_band_labels(inst.graph, c.num_districts);
    } else {
        std::ifstream in(c.initial_plan_file);
        if (!in) throw ConfigError("cannot open initial plan " + c.initial_plan_file);
        std::ostringstream buf;
        buf << in.rdbuf();
        inst.initial_labels =
            load_plan_csv(inst.graph, buf.str(), c.num_districts).labels();
    }
    Plan initial(inst.graph, inst.initial_labels, c.num_districts);
    if (!is_valid(initial, c.validity)) throw ConfigError("initial plan is not a valid plan");
    if (std::isinf(total_score(initial, c.score)))
        throw ConfigError("initial plan has infinite score");

    switch (c.method) {
    case Method::Snf:
        inst.step_beta = 0.0;
        break;
    case Method::SnfTempered:
        inst.step_beta = c.beta;
        break;
    case Method::ComFlow:
        inst.family = std::make_unique<ComFamily>(c.validity, c.score, c.field,
                                                  c.orientation_salt);
        inst.step_beta = c.beta;
        break;
    case Method::D2dFlow:
        inst.family = std::make_unique<D2dFamily>(c.validity, c.score, c.num_districts,
                                                  c.d2d_simplified);
        inst.step_beta = c.beta;
        break;
    }
    inst.flow_count = inst.family ? inst.family->flow_count() : 0;
    return inst;
}

// ---- checkpoint serialization ----

constexpr char kCheckpointMagic[8] = {'N', 'R', 'M', 'C', 'K', 'P', 'T', '1'};

template <typename T> void write_pod(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T> T read_pod(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("truncated checkpoint");
    return value;
}

void write_checkpoint_stream(std::ostream& out, const ExperimentConfig& config,
                             const std::vector<ChainResult>& chains) {
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_pod<std::uint32_t>(out, 1);
    write_pod<std::uint64_t>(out, config.resume_hash());
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(chains.size()));
    const int n = chains.empty() ? 0 : chains.front().occupancy.vertex_count();
    const int nf = chains.empty() ? 0 : static_cast<int>(chains.front().theta.size());
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(n));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(nf));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(config.num_districts));
    for (const ChainResult& c : chains) {
        write_pod<std::int64_t>(out, c.steps);
        write_pod<std::uint64_t>(out, c.rng_position);
        for (int l : c.labels) write_pod<std::int32_t>(out, l);
        for (std::int8_t t : c.theta) write_pod<std::int8_t>(out, t);
        for (std::int64_t v : c.occupancy.raw_counts()) write_pod<std::int64_t>(out, v);
        write_pod<std::int64_t>(out, c.occupancy.steps());
        write_pod<std::int64_t>(out, c.accepted);
        write_pod<std::int64_t>(out, c.forced_flips);
        write_pod<std::int64_t>(out, c.frozen);
        write_pod<std::int64_t>(out, c.lazy_holds);
        write_pod<std::int64_t>(out, c.lazy_flips);
        for (std::int64_t v : c.metastate_steps) write_pod<std::int64_t>(out, v);
        for (const auto& row : c.transitions.count)
            for (std::int64_t v : row) write_pod<std::int64_t>(out, v);
        write_pod<std::int32_t>(out, c.transitions.last);
        write_pod<std::int64_t>(out, static_cast<std::int64_t>(c.snapshots.size()));
        for (const PackedLabels& p : c.snapshots) {
            if (config.num_districts == 2) {
                for (std::uint64_t w : p.words()) write_pod<std::uint64_t>(out, w);
            } else {
                for (std::uint8_t b : p.bytes()) write_pod<std::uint8_t>(out, b);
            }
        }
    }
}

} // namespace

void write_checkpoint(const std::string& path, const ExperimentConfig& config,
                      const std::vector<ChainResult>& chains) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write checkpoint " + tmp);
        write_checkpoint_stream(out, config, chains);
        if (!out) throw std::runtime_error("checkpoint write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

std::vector<ChainResult> read_checkpoint(const std::string& path,
                                         const ExperimentConfig& config, int vertex_count,
                                         int flow_count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(magic, magic + 8, kCheckpointMagic))
        throw ConfigError("not a checkpoint file: " + path);
    if (read_pod<std::uint32_t>(in) != 1) throw ConfigError("unsupported checkpoint version");
    if (read_pod<std::uint64_t>(in) != config.resume_hash())
        throw ConfigError("checkpoint was produced by a different configuration");
    const auto chains = read_pod<std::uint32_t>(in);
    if (chains != static_cast<std::uint32_t>(config.chains))
        throw ConfigError("checkpoint chain count differs from configuration");
    if (read_pod<std::uint32_t>(in) != static_cast<std::uint32_t>(vertex_count) ||
        read_pod<std::uint32_t>(in) != static_cast<std::uint32_t>(flow_count) ||
        read_pod<std::uint32_t>(in) != static_cast<std::uint32_t>(config.num_districts))
        throw ConfigError("checkpoint shape differs from configuration");

    std::vector<ChainResult> out;
    out.reserve(chains);
    const size_t words = (static_cast<size_t>(vertex_count) + 63) / 64;
    for (std::uint32_t ci = 0; ci < chains; ++ci) {
        ChainResult c(vertex_count);
        c.steps = read_pod<std::int64_t>(in);
        c.rng_position = read_pod<std::uint64_t>(in);
        c.labels.resize(static_cast<size_t>(vertex_count));
        for (int& l : c.labels) l = read_pod<std::int32_t>(in);
        c.theta.resize(static_cast<size_t>(flow_count));
        for (std::int8_t& t : c.theta) t = read_pod<std::int8_t>(in);
        std::vector<std::int64_t> counts(static_cast<size_t>(vertex_count));
        for (std::int64_t& v : counts) v = read_pod<std::int64_t>(in);
        c.occupancy.restore(counts, read_pod<std::int64_t>(in));
        c.accepted = read_pod<std::int64_t>(in);
        c.forced_flips = read_pod<std::int64_t>(in);
        c.frozen = read_pod<std::int64_t>(in);
        c.lazy_holds = read_pod<std::int64_t>(in);
        c.lazy_flips = read_pod<std::int64_t>(in);
        for (std::int64_t& v : c.metastate_steps) v = read_pod<std::int64_t>(in);
        for (auto& row : c.transitions.count)
            for (std::int64_t& v : row) v = read_pod<std::int64_t>(in);
        c.transitions.last = read_pod<std::int32_t>(in);
        const auto snap_count = read_pod<std::int64_t>(in);
        c.snapshots.reserve(static_cast<size_t>(snap_count));
        for (std::int64_t s = 0; s < snap_count; ++s) {
            if (config.num_districts == 2) {
                std::vector<std::uint64_t> w(words);
                for (std::uint64_t& x : w) x = read_pod<std::uint64_t>(in);
                c.snapshots.push_back(PackedLabels::from_words(vertex_count, std::move(w)));
            } else {
                std::vector<std::uint8_t> b(static_cast<size_t>(vertex_count));
                for (std::uint8_t& x : b) x = read_pod<std::uint8_t>(in);
                c.snapshots.push_back(
                    PackedLabels::from_bytes(config.num_districts, std::move(b)));
            }
        }
        out.push_back(std::move(c));
    }
    return out;
}

namespace {

// ---- chain loop ----

struct ChainBarrier {
    std::barrier<std::function<void()>> barrier;
    ChainBarrier(int count, std::function<void()> fn) : barrier(count, std::move(fn)) {}
};

void run_chain(const ExperimentConfig& c, const Instance& inst, ChainResult& out, int chain,
               ChainBarrier* sync) {
    const PrecinctGraph& graph = inst.graph;
    const int n = graph.vertex_count();
    const bool msmh = inst.family != nullptr;

    PhiloxRng rng(c.seed, static_cast<std::uint64_t>(chain));
    ExtendedState st{Plan(graph, inst.initial_labels, c.num_districts), {}};
    const bool fresh = out.steps == 0;
    if (fresh) {
        if (msmh) {
            out.theta.resize(static_cast<size_t>(inst.flow_count));
            for (auto& t : out.theta) t = rng.below(2) ? std::int8_t{1} : std::int8_t{-1};
        }
        out.labels = inst.initial_labels;
    } else {
        rng.seek(out.rng_position);
        st.plan = Plan(graph, out.labels, c.num_districts);
    }
    st.theta = out.theta;

    // Occupancy is tracked per label run: a vertex contributes only when its
    // run closes (on flip) or at a flush.
    std::vector<std::int64_t> in_first(out.occupancy.raw_counts().begin(),
                                       out.occupancy.raw_counts().end());
    std::vector<std::int64_t> since(static_cast<size_t>(n), out.steps + 1);
    std::vector<int> run_label = st.plan.labels();

    if (fresh) {
        out.snapshots.emplace_back(st.plan.labels(), c.num_districts);
        out.transitions.observe(classify_metastable(st.plan, c.metastable_band));
    }

    const auto flush = [&](std::int64_t through) {
        for (int v = 0; v < n; ++v) {
            if (run_label[static_cast<size_t>(v)] == 0 &&
                since[static_cast<size_t>(v)] <= through)
                in_first[static_cast<size_t>(v)] += through - since[static_cast<size_t>(v)] + 1;
            since[static_cast<size_t>(v)] = through + 1;
        }
    };
    const auto sync_out = [&](std::int64_t t) {
        out.steps = t;
        out.labels = st.plan.labels();
        out.theta = st.theta;
        out.rng_position = rng.position();
        out.occupancy.restore(in_first, t);
    };
    const auto on_flip = [&](Flip f, std::int64_t t) {
        const auto v = static_cast<size_t>(f.v);
        if (run_label[v] == 0) in_first[v] += t - since[v];
        since[v] = t;
        run_label[v] = st.plan.label(f.v);
    };

    std::int64_t t = out.steps;
    try {
        while (t < c.steps) {
            ++t;
            if (msmh) {
                const MsmhResult r =
                    lazy_step(st, *inst.family, inst.step_beta, c.epsilon, c.lazy_hold, rng);
                switch (r.event) {
                case MsmhResult::Event::Accepted:
                    ++out.accepted;
                    on_flip(r.flip, t);
                    break;
                case MsmhResult::Event::ForcedFlip: ++out.forced_flips; break;
                case MsmhResult::Event::Frozen: ++out.frozen; break;
                case MsmhResult::Event::LazyHold: ++out.lazy_holds; break;
                case MsmhResult::Event::LazyFlip: ++out.lazy_flips; break;
                case MsmhResult::Event::Rejected: break;
                }
            } else {
                const StepResult r =
                    snf_mh_step(st.plan, inst.step_beta, c.score, c.validity, rng);
                if (r.accepted) {
                    ++out.accepted;
                    on_flip(r.flip, t);
                } else if (r.frozen) {
                    ++out.frozen;
                }
            }
            if (t % c.snapshot_stride == 0)
                out.snapshots.emplace_back(st.plan.labels(), c.num_districts);
            const int m = classify_metastable(st.plan, c.metastable_band);
            if (m >= 0) ++out.metastate_steps[static_cast<size_t>(m)];
            out.transitions.observe(m);
            if (sync && t % c.checkpoint_interval == 0 && t < c.steps) {
                flush(t);
                sync_out(t);
                sync->barrier.arrive_and_wait();
            }
        }
        flush(c.steps);
        sync_out(c.steps);
        if (sync) sync->barrier.arrive_and_drop();
    } catch (...) {
        // Steps are transactional, so the state at the last completed step is
        // intact; preserve it for the failure checkpoint before re-raising.
        flush(t - 1);
        sync_out(t - 1);
        if (sync) sync->barrier.arrive_and_drop();
        throw;
    }
}

// ---- output files ----

void write_text_file(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << text;
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_outputs(const ExperimentConfig& c, const ExperimentResult& res) {
    const std::filesystem::path dir(c.out_dir);
    std::filesystem::create_directories(dir);

    std::ostringstream occ;
    occ << "vertex_id,f,display_value\n";
    for (int v = 0; v < res.occupancy.vertex_count(); ++v)
        occ << v << ',' << format_double(res.occupancy.occupancy(v)) << ','
            << format_double(res.occupancy.display(v)) << '\n';
    write_text_file((dir / "occupancy.csv").string(), occ.str());

    static constexpr const char* kSides[4] = {"N", "E", "S", "W"};
    std::ostringstream tr;
    tr << "from,to,count\n";
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (i != j)
                tr << kSides[i] << ',' << kSides[j] << ','
                   << res.transitions.count[static_cast<size_t>(i)][static_cast<size_t>(j)]
                   << '\n';
    write_text_file((dir / "transitions.csv").string(), tr.str());

    std::ostringstream gc;
    gc << "t,G,ci_low,ci_high\n";
    for (const GPoint& p : res.g_curve)
        gc << p.lag << ',' << format_double(p.g) << ',' << format_double(p.ci_low) << ','
           << format_double(p.ci_high) << '\n';
    write_text_file((dir / "g_curve.csv").string(), gc.str());

    std::ostringstream ch;
    ch << "chain,steps,acceptance_rate,forced_flips,freq_N,freq_E,freq_S,freq_W\n";
    for (size_t k = 0; k < res.chains.size(); ++k) {
        const ChainResult& cr = res.chains[k];
        ch << k << ',' << cr.steps << ',' << format_double(cr.acceptance_rate()) << ','
           << cr.forced_flips;
        for (int m = 0; m < 4; ++m) {
            const double f = cr.steps == 0
                                 ? 0.0
                                 : static_cast<double>(cr.metastate_steps[static_cast<size_t>(m)]) /
                                       static_cast<double>(cr.steps);
            ch << ',' << format_double(f);
        }
        ch << '\n';
    }
    write_text_file((dir / "chains.csv").string(), ch.str());

    json manifest;
    manifest["config"] = json::parse(c.to_json_text());
    manifest["build"] = NRMC_BUILD_ID;
    manifest["wall_seconds"] = res.wall_seconds;
    for (size_t k = 0; k < res.chains.size(); ++k) {
        manifest["chains"].push_back({{"index", k},
                                      {"seed", c.seed},
                                      {"stream", k},
                                      {"steps", res.chains[k].steps},
                                      {"acceptance_rate", res.chains[k].acceptance_rate()}});
    }
    write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, bool resume) {
    config.validate();
    const Instance inst = build_instance(config);
    const int n = inst.graph.vertex_count();
    const auto t0 = std::chrono::steady_clock::now();

    const std::string checkpoint_path =
        config.out_dir.empty() ? std::string()
                               : (std::filesystem::path(config.out_dir) / "checkpoint.bin").string();

    std::vector<ChainResult> chains;
    if (resume) {
        if (checkpoint_path.empty())
            throw ConfigError("resume needs an output directory with a checkpoint");
        chains = read_checkpoint(checkpoint_path, config, n, inst.flow_count);
        for (const ChainResult& c : chains)
            if (c.steps > config.steps)
                throw ConfigError("checkpoint is already past the requested step count");
    } else {
        chains.reserve(static_cast<size_t>(config.chains));
        for (int k = 0; k < config.chains; ++k) chains.emplace_back(n);
    }

    std::unique_ptr<ChainBarrier> sync;
    std::mutex checkpoint_mutex;
    if (config.checkpoint_interval > 0 && !checkpoint_path.empty()) {
        sync = std::make_unique<ChainBarrier>(config.chains, [&]() {
            try {
                std::lock_guard<std::mutex> lock(checkpoint_mutex);
                write_checkpoint(checkpoint_path, config, chains);
            } catch (...) {
                // A failed periodic write must not take the run down.
            }
        });
    }

    const int workers = config.threads == 0 ? config.chains
                                            : std::min(config.threads, config.chains);
    std::atomic<int> next{0};
    std::vector<std::string> errors(static_cast<size_t>(config.chains));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                const int k = next.fetch_add(1);
                if (k >= config.chains) return;
                try {
                    run_chain(config, inst, chains[static_cast<size_t>(k)], k, sync.get());
                } catch (const std::exception& e) {
                    errors[static_cast<size_t>(k)] = e.what();
                } catch (...) {
                    errors[static_cast<size_t>(k)] = "unknown error";
                }
            }
        });
    }
    for (std::thread& th : pool) th.join();

    std::string failure;
    for (size_t k = 0; k < errors.size(); ++k)
        if (!errors[k].empty())
            failure += (failure.empty() ? "" : "; ") + ("chain " + std::to_string(k) + ": " +
                                                        errors[k]);
    if (!failure.empty()) {
        if (!checkpoint_path.empty()) {
            std::filesystem::create_directories(config.out_dir);
            write_checkpoint(checkpoint_path, config, chains);
        }
        throw std::runtime_error(failure);
    }

    ExperimentResult res(n);
    res.chains = std::move(chains);
    for (const ChainResult& c : res.chains) {
        res.occupancy.merge(c.occupancy);
        res.transitions.merge(c.transitions);
    }

    // Pooled decorrelation curve over snapshot lags.
    size_t min_len = std::numeric_limits<size_t>::max();
    std::vector<std::vector<PackedLabels>> series;
    series.reserve(res.chains.size());
    for (ChainResult& c : res.chains) {
        min_len = std::min(min_len, c.snapshots.size());
        series.push_back(c.snapshots);
    }
    if (min_len >= 2) {
        const std::int64_t max_lag =
            std::min<std::int64_t>(config.g_max_lag / config.snapshot_stride,
                                   static_cast<std::int64_t>(min_len) - 1);
        std::vector<std::int64_t> lags;
        for (int i = 0; i < config.g_points; ++i) {
            const auto lag = static_cast<std::int64_t>(
                std::llround(static_cast<double>(i) * static_cast<double>(max_lag) /
                             (config.g_points - 1)));
            if (lags.empty() || lag != lags.back()) lags.push_back(lag);
        }
        PhiloxRng grng(config.seed, static_cast<std::uint64_t>(config.chains));
        res.g_curve = estimate_G(series, lags, config.n_boot, grng);
        for (GPoint& p : res.g_curve) p.lag *= config.snapshot_stride;
    }

    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!config.out_dir.empty()) {
        write_outputs(config, res);
        write_checkpoint(checkpoint_path, config, res.chains);
    }
    return res;
}

} // namespace nrmc
