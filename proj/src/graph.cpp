#include "nrmc/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace nrmc {

namespace {

// Reusable BFS scratch. Plans are single-owner per thread, so thread_local
// buffers are safe and avoid per-call allocation in the hot validity path.
struct BfsScratch {
    std::vector<std::uint32_t> mark;
    std::vector<int> queue;
    std::uint32_t epoch = 0;

    std::uint32_t begin(size_t n) {
        if (mark.size() < n) mark.assign(n, 0);
        if (++epoch == 0) {
            std::fill(mark.begin(), mark.end(), 0);
            epoch = 1;
        }
        queue.clear();
        return epoch;
    }
};

BfsScratch& scratch() {
    thread_local BfsScratch s;
    return s;
}

} // namespace

PrecinctGraph PrecinctGraph::lattice(int width, int height) {
    if (width < 2 || height < 2) throw std::invalid_argument("lattice dimensions must be >= 2");
    PrecinctGraph g;
    g.vertices_.resize(static_cast<size_t>(width) * static_cast<size_t>(height));
    for (int row = 0; row < height; ++row) {
        for (int col = 0; col < width; ++col) {
            auto& vx = g.vertices_[static_cast<size_t>(row * width + col)];
            vx.pop = 1.0;
            vx.area = 1.0;
            vx.centroid = {static_cast<double>(col), static_cast<double>(row)};
            vx.outer_boundary = (row == 0 ? 1.0 : 0.0) + (row == height - 1 ? 1.0 : 0.0) +
                                (col == 0 ? 1.0 : 0.0) + (col == width - 1 ? 1.0 : 0.0);
        }
    }
    for (int row = 0; row < height; ++row) {
        for (int col = 0; col < width; ++col) {
            const int id = row * width + col;
            if (col + 1 < width) g.edges_.push_back({id, id + 1, 1.0});
            if (row + 1 < height) g.edges_.push_back({id, id + width, 1.0});
        }
    }
    g.build_adjacency();
    return g;
}

void PrecinctGraph::build_adjacency() {
    const size_t n = vertices_.size();
    adj_offset_.assign(n + 1, 0);
    for (const Edge& e : edges_) {
        ++adj_offset_[static_cast<size_t>(e.u) + 1];
        ++adj_offset_[static_cast<size_t>(e.v) + 1];
    }
    for (size_t i = 1; i <= n; ++i) adj_offset_[i] += adj_offset_[i - 1];
    adj_.resize(static_cast<size_t>(adj_offset_[n]));
    adj_shared_.resize(adj_.size());
    std::vector<int> cursor(adj_offset_.begin(), adj_offset_.end() - 1);
    for (const Edge& e : edges_) {
        adj_[static_cast<size_t>(cursor[static_cast<size_t>(e.u)])] = e.v;
        adj_shared_[static_cast<size_t>(cursor[static_cast<size_t>(e.u)]++)] = e.shared;
        adj_[static_cast<size_t>(cursor[static_cast<size_t>(e.v)])] = e.u;
        adj_shared_[static_cast<size_t>(cursor[static_cast<size_t>(e.v)]++)] = e.shared;
    }
    // Sort each neighbor list by id, keeping shared lengths aligned.
    for (size_t v = 0; v < n; ++v) {
        const size_t b = static_cast<size_t>(adj_offset_[v]);
        const size_t e = static_cast<size_t>(adj_offset_[v + 1]);
        std::vector<std::pair<int, double>> tmp;
        tmp.reserve(e - b);
        for (size_t i = b; i < e; ++i) tmp.emplace_back(adj_[i], adj_shared_[i]);
        std::sort(tmp.begin(), tmp.end());
        for (size_t i = b; i < e; ++i) {
            adj_[i] = tmp[i - b].first;
            adj_shared_[i] = tmp[i - b].second;
        }
    }
}

void PrecinctGraph::check_connected() const {
    const size_t n = vertices_.size();
    if (n == 0) throw GraphError("graph has no vertices");
    auto& s = scratch();
    const std::uint32_t tag = s.begin(n);
    s.queue.push_back(0);
    s.mark[0] = tag;
    size_t seen = 1;
    for (size_t head = 0; head < s.queue.size(); ++head) {
        for (int w : neighbors(s.queue[head])) {
            if (s.mark[static_cast<size_t>(w)] != tag) {
                s.mark[static_cast<size_t>(w)] = tag;
                s.queue.push_back(w);
                ++seen;
            }
        }
    }
    if (seen != n) throw GraphError("disconnected graph");
}

PrecinctGraph PrecinctGraph::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw GraphError(std::string("malformed graph file: ") + e.what());
    }
    if (!j.contains("nodes") || !j.contains("edges"))
        throw GraphError("malformed graph file: missing nodes or edges");

    PrecinctGraph g;
    const auto& nodes = j.at("nodes");
    g.vertices_.resize(nodes.size());
    std::vector<bool> id_seen(nodes.size(), false);
    for (const auto& node : nodes) {
        const std::int64_t id = node.at("id").get<std::int64_t>();
        if (id < 0 || id >= static_cast<std::int64_t>(nodes.size()))
            throw GraphError("unknown vertex id " + std::to_string(id) + " (ids must be dense 0..n-1)");
        if (id_seen[static_cast<size_t>(id)])
            throw GraphError("duplicate id " + std::to_string(id));
        id_seen[static_cast<size_t>(id)] = true;
        Vertex vx;
        vx.pop = node.value("pop", 1.0);
        vx.area = node.value("area", 1.0);
        if (node.contains("centroid")) {
            const auto& c = node.at("centroid");
            vx.centroid = {c.at(0).get<double>(), c.at(1).get<double>()};
        }
        vx.outer_boundary = node.value("outer_boundary", 0.0);
        if (vx.pop < 0) throw GraphError("negative pop at vertex " + std::to_string(id));
        if (!(vx.area > 0)) throw GraphError("non-positive area at vertex " + std::to_string(id));
        g.vertices_[static_cast<size_t>(id)] = vx;
    }

    std::unordered_set<std::uint64_t> edge_seen;
    for (const auto& edge : j.at("edges")) {
        Edge e;
        const std::int64_t u = edge.at("u").get<std::int64_t>();
        const std::int64_t v = edge.at("v").get<std::int64_t>();
        if (u < 0 || u >= static_cast<std::int64_t>(g.vertices_.size()))
            throw GraphError("unknown vertex " + std::to_string(u) + " in edge list");
        if (v < 0 || v >= static_cast<std::int64_t>(g.vertices_.size()))
            throw GraphError("unknown vertex " + std::to_string(v) + " in edge list");
        if (u == v) throw GraphError("self-loop at vertex " + std::to_string(u));
        e.u = static_cast<int>(std::min(u, v));
        e.v = static_cast<int>(std::max(u, v));
        e.shared = edge.value("shared", 1.0);
        if (!(e.shared > 0)) throw GraphError("non-positive shared length on edge");
        const std::uint64_t key =
            (static_cast<std::uint64_t>(e.u) << 32) | static_cast<std::uint64_t>(e.v);
        if (!edge_seen.insert(key).second)
            throw GraphError("duplicate edge " + std::to_string(e.u) + "-" + std::to_string(e.v));
        g.edges_.push_back(e);
    }
    std::sort(g.edges_.begin(), g.edges_.end(),
              [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
    g.build_adjacency();
    g.check_connected();
    return g;
}

PrecinctGraph PrecinctGraph::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GraphError("cannot open graph file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string PrecinctGraph::to_json_text() const {
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    for (int v = 0; v < vertex_count(); ++v) {
        const Vertex& vx = vertex(v);
        j["nodes"].push_back({{"id", v},
                              {"pop", vx.pop},
                              {"area", vx.area},
                              {"centroid", {vx.centroid.x, vx.centroid.y}},
                              {"outer_boundary", vx.outer_boundary}});
    }
    j["edges"] = nlohmann::json::array();
    for (const Edge& e : edges_)
        j["edges"].push_back({{"u", e.u}, {"v", e.v}, {"shared", e.shared}});
    return j.dump();
}

Plan::Plan(const PrecinctGraph& graph, std::vector<int> labels, int num_districts)
    : graph_(&graph), num_districts_(num_districts), labels_(std::move(labels)) {
    if (num_districts_ < 1) throw std::invalid_argument("district count must be >= 1");
    if (labels_.size() != static_cast<size_t>(graph.vertex_count()))
        throw std::invalid_argument("label vector size does not match graph");
    pop_.assign(static_cast<size_t>(num_districts_), 0.0);
    area_.assign(static_cast<size_t>(num_districts_), 0.0);
    cx_.assign(static_cast<size_t>(num_districts_), 0.0);
    cy_.assign(static_cast<size_t>(num_districts_), 0.0);
    count_.assign(static_cast<size_t>(num_districts_), 0);
    for (int v = 0; v < size(); ++v) {
        const int d = labels_[static_cast<size_t>(v)];
        if (d < 0 || d >= num_districts_)
            throw std::invalid_argument("label out of range at vertex " + std::to_string(v));
        const auto& vx = graph.vertex(v);
        pop_[static_cast<size_t>(d)] += vx.pop;
        area_[static_cast<size_t>(d)] += vx.area;
        cx_[static_cast<size_t>(d)] += vx.area * vx.centroid.x;
        cy_[static_cast<size_t>(d)] += vx.area * vx.centroid.y;
        ++count_[static_cast<size_t>(d)];
    }
    cut_edges_ = 0;
    cut_length_ = 0.0;
    for (const auto& e : graph.edges()) {
        if (labels_[static_cast<size_t>(e.u)] != labels_[static_cast<size_t>(e.v)]) {
            ++cut_edges_;
            cut_length_ += e.shared;
        }
    }
}

Point Plan::district_centroid(int d) const {
    if (d < 0 || d >= num_districts_ || count_[static_cast<size_t>(d)] == 0)
        throw std::invalid_argument("empty or unknown district " + std::to_string(d));
    return {cx_[static_cast<size_t>(d)] / area_[static_cast<size_t>(d)],
            cy_[static_cast<size_t>(d)] / area_[static_cast<size_t>(d)]};
}

void Plan::apply_flip(Flip f) {
    const auto nb = graph_->neighbors(f.u);
    if (std::find(nb.begin(), nb.end(), f.v) == nb.end())
        throw std::invalid_argument("flip endpoints are not adjacent");
    const int to = labels_[static_cast<size_t>(f.u)];
    const int from = labels_[static_cast<size_t>(f.v)];
    if (to == from) throw std::invalid_argument("flip endpoints carry the same label");

    const auto& vx = graph_->vertex(f.v);
    pop_[static_cast<size_t>(from)] -= vx.pop;
    pop_[static_cast<size_t>(to)] += vx.pop;
    area_[static_cast<size_t>(from)] -= vx.area;
    area_[static_cast<size_t>(to)] += vx.area;
    cx_[static_cast<size_t>(from)] -= vx.area * vx.centroid.x;
    cx_[static_cast<size_t>(to)] += vx.area * vx.centroid.x;
    cy_[static_cast<size_t>(from)] -= vx.area * vx.centroid.y;
    cy_[static_cast<size_t>(to)] += vx.area * vx.centroid.y;
    --count_[static_cast<size_t>(from)];
    ++count_[static_cast<size_t>(to)];

    const auto nbs = graph_->neighbors(f.v);
    const auto shr = graph_->neighbor_shared(f.v);
    for (size_t i = 0; i < nbs.size(); ++i) {
        const int lw = labels_[static_cast<size_t>(nbs[i])];
        if (lw != from) { // edge v-w was cut, may heal
            if (lw == to) {
                --cut_edges_;
                cut_length_ -= shr[i];
            }
        } else { // edge v-w was internal, becomes cut
            ++cut_edges_;
            cut_length_ += shr[i];
        }
    }
    labels_[static_cast<size_t>(f.v)] = to;
}

std::uint64_t Plan::fingerprint() const {
    // FNV-1a over the label sequence in vertex order.
    std::uint64_t h = 1469598103934665603ull;
    for (int l : labels_) {
        h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(l));
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

// Connectivity of the set {x : labels[x] == d} minus an optional excluded
// vertex, by BFS from `start`. Returns number of set members reached.
int bfs_district(const PrecinctGraph& g, const std::vector<int>& labels, int d, int start,
                 int excluded) {
    auto& s = scratch();
    const std::uint32_t tag = s.begin(static_cast<size_t>(g.vertex_count()));
    s.queue.push_back(start);
    s.mark[static_cast<size_t>(start)] = tag;
    int seen = 1;
    for (size_t head = 0; head < s.queue.size(); ++head) {
        for (int w : g.neighbors(s.queue[head])) {
            if (w == excluded || s.mark[static_cast<size_t>(w)] == tag) continue;
            if (labels[static_cast<size_t>(w)] != d) continue;
            s.mark[static_cast<size_t>(w)] = tag;
            s.queue.push_back(w);
            ++seen;
        }
    }
    return seen;
}

// Connectivity of the complement {x : labels[x] != d, x != excluded} plus an
// optional extra member, used for the simple-connectivity (hole) check.
bool complement_connected(const PrecinctGraph& g, const std::vector<int>& labels, int d,
                          int moved, int moved_new_label) {
    auto member = [&](int x) {
        const int lx = (x == moved && moved_new_label >= 0) ? moved_new_label
                                                            : labels[static_cast<size_t>(x)];
        return lx != d;
    };
    int start = -1, total = 0;
    for (int v = 0; v < g.vertex_count(); ++v) {
        if (member(v)) {
            ++total;
            if (start < 0) start = v;
        }
    }
    if (total == 0) return true;
    auto& s = scratch();
    const std::uint32_t tag = s.begin(static_cast<size_t>(g.vertex_count()));
    s.queue.push_back(start);
    s.mark[static_cast<size_t>(start)] = tag;
    int seen = 1;
    for (size_t head = 0; head < s.queue.size(); ++head) {
        for (int w : g.neighbors(s.queue[head])) {
            if (s.mark[static_cast<size_t>(w)] == tag || !member(w)) continue;
            s.mark[static_cast<size_t>(w)] = tag;
            s.queue.push_back(w);
            ++seen;
        }
    }
    return seen == total;
}

} // namespace

bool is_valid(const Plan& plan, const ValiditySpec& validity) {
    const PrecinctGraph& g = plan.graph();
    for (int d = 0; d < plan.district_count(); ++d) {
        if (plan.district_size(d) == 0) return false;
        if (plan.district_pop(d) < validity.pop_min || plan.district_pop(d) > validity.pop_max)
            return false;
    }
    if (validity.require_connected) {
        for (int d = 0; d < plan.district_count(); ++d) {
            int start = -1;
            for (int v = 0; v < plan.size(); ++v) {
                if (plan.label(v) == d) {
                    start = v;
                    break;
                }
            }
            if (bfs_district(g, plan.labels(), d, start, -1) != plan.district_size(d)) return false;
        }
    }
    if (validity.require_simply_connected) {
        for (int d = 0; d < plan.district_count(); ++d)
            if (!complement_connected(g, plan.labels(), d, -1, -1)) return false;
    }
    return true;
}

bool flip_keeps_valid(const Plan& plan, Flip f, const ValiditySpec& validity) {
    const PrecinctGraph& g = plan.graph();
    const int to = plan.label(f.u);
    const int from = plan.label(f.v);
    const double moved_pop = g.vertex(f.v).pop;

    if (plan.district_size(from) <= 1) return false; // districts must stay nonempty
    if (plan.district_pop(from) - moved_pop < validity.pop_min) return false;
    if (plan.district_pop(to) + moved_pop > validity.pop_max) return false;

    if (validity.require_connected) {
        // The growing district stays connected (v attaches through u). Only
        // the shrinking district needs a check, starting from any remaining
        // member adjacent to v.
        int start = -1;
        for (int w : g.neighbors(f.v)) {
            if (plan.label(w) == from) {
                start = w;
                break;
            }
        }
        if (start < 0) return false; // v was an isolated member
        if (bfs_district(g, plan.labels(), from, start, f.v) != plan.district_size(from) - 1)
            return false;
    }
    if (validity.require_simply_connected) {
        // Only the complement of the growing district shrinks (loses v); all
        // other complements keep their vertex sets.
        if (!complement_connected(g, plan.labels(), to, f.v, to)) return false;
    }
    return true;
}

std::vector<Flip> conflicted_edges(const Plan& plan, const ValiditySpec& validity) {
    std::vector<Flip> out;
    for (const auto& e : plan.graph().edges()) {
        if (plan.label(e.u) == plan.label(e.v)) continue;
        if (flip_keeps_valid(plan, {e.u, e.v}, validity)) out.push_back({e.u, e.v});
        if (flip_keeps_valid(plan, {e.v, e.u}, validity)) out.push_back({e.v, e.u});
    }
    return out;
}

std::vector<Neighbor> valid_neighborhood(const Plan& plan, const ValiditySpec& validity) {
    std::vector<Neighbor> out;
    // Dedup key: (v, adopted label). Different u with the same label yield the
    // same plan; keep the first generating flip in enumeration order.
    std::unordered_set<std::uint64_t> seen;
    for (const Flip& f : conflicted_edges(plan, validity)) {
        const int to = plan.label(f.u);
        const std::uint64_t key =
            (static_cast<std::uint64_t>(static_cast<std::uint32_t>(f.v)) << 32) |
            static_cast<std::uint32_t>(to);
        if (!seen.insert(key).second) continue;
        out.push_back({f, plan.label(f.v), to});
    }
    return out;
}

std::vector<std::pair<int, int>> district_graph(const Plan& plan, const ValiditySpec& validity) {
    std::vector<std::pair<int, int>> out;
    std::unordered_set<std::uint64_t> seen;
    for (const Flip& f : conflicted_edges(plan, validity)) {
        const int a = std::min(plan.label(f.u), plan.label(f.v));
        const int b = std::max(plan.label(f.u), plan.label(f.v));
        const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
        if (seen.insert(key).second) out.emplace_back(a, b);
    }
    std::sort(out.begin(), out.end());
    return out;
}

Plan load_plan_csv(const PrecinctGraph& graph, const std::string& text, int num_districts) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty plan file");
    std::vector<int> labels(static_cast<size_t>(graph.vertex_count()), -1);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const size_t comma = line.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("malformed plan row: " + line);
        const int v = std::stoi(line.substr(0, comma));
        const int d = std::stoi(line.substr(comma + 1));
        if (v < 0 || v >= graph.vertex_count())
            throw std::invalid_argument("plan row references unknown vertex " + std::to_string(v));
        if (d < 1 || d > num_districts)
            throw std::invalid_argument("district out of range in plan row: " + line);
        labels[static_cast<size_t>(v)] = d - 1;
    }
    for (size_t v = 0; v < labels.size(); ++v)
        if (labels[v] < 0)
            throw std::invalid_argument("plan file missing vertex " + std::to_string(v));
    return Plan(graph, std::move(labels), num_districts);
}

std::string plan_to_csv(const Plan& plan) {
    std::string out = "vertex_id,district\n";
    for (int v = 0; v < plan.size(); ++v) {
        out += std::to_string(v);
        out += ',';
        out += std::to_string(plan.label(v) + 1);
        out += '\n';
    }
    return out;
}

} // namespace nrmc
