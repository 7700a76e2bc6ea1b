#ifndef NRMC_GRAPH_HPP
#define NRMC_GRAPH_HPP

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nrmc {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Immutable undirected graph of geographic units. Vertex ids are dense
// 0..n-1; adjacency is stored in CSR form with neighbor lists sorted by id.
class PrecinctGraph {
public:
    struct Vertex {
        double pop = 1.0;
        double area = 1.0;
        Point centroid;
        double outer_boundary = 0.0;
    };
    struct Edge {
        int u = 0; // u < v
        int v = 0;
        double shared = 1.0;
    };

    // Rook-adjacent width x height grid. Vertex id = row*width + col,
    // pop = area = 1, shared boundary 1, centroid (col, row).
    static PrecinctGraph lattice(int width, int height);

    // Structured-text ingestion; validates every PrecinctGraph invariant.
    static PrecinctGraph from_json_text(const std::string& text);
    static PrecinctGraph from_json_file(const std::string& path);

    int vertex_count() const { return static_cast<int>(vertices_.size()); }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const Vertex& vertex(int v) const { return vertices_[static_cast<size_t>(v)]; }
    std::span<const Edge> edges() const { return edges_; }

    std::span<const int> neighbors(int v) const {
        const auto b = static_cast<size_t>(adj_offset_[static_cast<size_t>(v)]);
        const auto e = static_cast<size_t>(adj_offset_[static_cast<size_t>(v) + 1]);
        return {adj_.data() + b, e - b};
    }
    // Shared boundary lengths aligned with neighbors(v).
    std::span<const double> neighbor_shared(int v) const {
        const auto b = static_cast<size_t>(adj_offset_[static_cast<size_t>(v)]);
        const auto e = static_cast<size_t>(adj_offset_[static_cast<size_t>(v) + 1]);
        return {adj_shared_.data() + b, e - b};
    }

    std::string to_json_text() const;

private:
    PrecinctGraph() = default;
    void build_adjacency();
    void check_connected() const;

    std::vector<Vertex> vertices_;
    std::vector<Edge> edges_;
    std::vector<int> adj_offset_;
    std::vector<int> adj_;
    std::vector<double> adj_shared_;
};

// Directed single-vertex move: v adopts the label of adjacent vertex u.
struct Flip {
    int u = -1;
    int v = -1;
};

// District labeling with incrementally maintained caches. Labels are
// 0-based internally; file formats use 1-based district numbers.
class Plan {
public:
    Plan(const PrecinctGraph& graph, std::vector<int> labels, int num_districts);

    const PrecinctGraph& graph() const { return *graph_; }
    int district_count() const { return num_districts_; }
    int size() const { return static_cast<int>(labels_.size()); }
    int label(int v) const { return labels_[static_cast<size_t>(v)]; }
    const std::vector<int>& labels() const { return labels_; }

    double district_pop(int d) const { return pop_[static_cast<size_t>(d)]; }
    double district_area(int d) const { return area_[static_cast<size_t>(d)]; }
    int district_size(int d) const { return count_[static_cast<size_t>(d)]; }
    Point district_centroid(int d) const;
    // Raw area-weighted coordinate sums behind district_centroid. Exposed so
    // post-flip centroids can be predicted with the same expressions the
    // incremental cache uses.
    Point district_moment(int d) const {
        return {cx_[static_cast<size_t>(d)], cy_[static_cast<size_t>(d)]};
    }

    // Unordered count of edges whose endpoints carry different labels.
    int cut_edge_count() const { return cut_edges_; }
    // Total shared boundary length over those edges.
    double cut_boundary_length() const { return cut_length_; }

    // Applies the flip in place; throws on non-adjacent pair or equal labels.
    // Caches are updated incrementally and stay equal to full recomputation.
    void apply_flip(Flip f);

    std::uint64_t fingerprint() const;

private:
    const PrecinctGraph* graph_;
    int num_districts_;
    std::vector<int> labels_;
    std::vector<double> pop_, area_, cx_, cy_; // cx_, cy_ are area-weighted sums
    std::vector<int> count_;
    int cut_edges_ = 0;
    double cut_length_ = 0.0;
};

inline Plan apply_flip(Plan plan, Flip f) {
    plan.apply_flip(f);
    return plan;
}

struct ValiditySpec {
    double pop_min = 0.0;
    double pop_max = std::numeric_limits<double>::infinity();
    bool require_connected = true;
    // Optional hole check (complement of each district connected). For two
    // districts mutual connectivity already forbids holes.
    bool require_simply_connected = false;
};

bool is_valid(const Plan& plan, const ValiditySpec& validity);

// True iff the plan after flip f still satisfies the validity predicates.
// Cost O(|shrinking district|) via a restricted breadth-first search.
bool flip_keeps_valid(const Plan& plan, Flip f, const ValiditySpec& validity);

// C(xi): ordered pairs (u,v) in E_p with different labels whose flip keeps
// the plan valid. Both orientations of an edge are filtered independently.
std::vector<Flip> conflicted_edges(const Plan& plan, const ValiditySpec& validity);

struct Neighbor {
    Flip flip;
    int old_label = -1; // label of v before the flip
    int new_label = -1; // label of u, adopted by v
};

// N(xi) as a deduplicated list: distinct conflicted orientations that yield
// the same plan (same v, same adopted label) are reported once.
std::vector<Neighbor> valid_neighborhood(const Plan& plan, const ValiditySpec& validity);

// E_d(xi): district pairs (i,j), i<j, sharing at least one conflicted-edge
// orientation under the given validity spec.
std::vector<std::pair<int, int>> district_graph(const Plan& plan, const ValiditySpec& validity);

// Plan CSV: header "vertex_id,district", district numbers 1-based.
Plan load_plan_csv(const PrecinctGraph& graph, const std::string& text, int num_districts);
std::string plan_to_csv(const Plan& plan);

} // namespace nrmc

#endif
