#include <doctest.h>

#include "nrmc/graph.hpp"
#include "nrmc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace nrmc;

namespace {

std::vector<int> vertical_split(int width, int height) {
    std::vector<int> labels(static_cast<size_t>(width * height));
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            labels[static_cast<size_t>(r * width + c)] = c < width / 2 ? 0 : 1;
    return labels;
}

} // namespace

TEST_CASE("lattice shape and adjacency") {
    const auto g = PrecinctGraph::lattice(4, 4);
    CHECK(g.vertex_count() == 16);
    CHECK(g.edge_count() == 24); // 4*3 horizontal + 3*4 vertical

    // Vertex id = row*width + col with centroid (col, row).
    CHECK(g.vertex(0).centroid.x == 0.0);
    CHECK(g.vertex(0).centroid.y == 0.0);
    CHECK(g.vertex(7).centroid.x == 3.0);
    CHECK(g.vertex(7).centroid.y == 1.0);
    CHECK(g.vertex(5).pop == 1.0);
    CHECK(g.vertex(5).area == 1.0);

    // Degrees: 4 corners of degree 2, 8 sides of degree 3, 4 interior of 4.
    int deg2 = 0, deg3 = 0, deg4 = 0;
    for (int v = 0; v < g.vertex_count(); ++v) {
        const auto n = g.neighbors(v).size();
        deg2 += n == 2;
        deg3 += n == 3;
        deg4 += n == 4;
    }
    CHECK(deg2 == 4);
    CHECK(deg3 == 8);
    CHECK(deg4 == 4);

    // Adjacency is symmetric and shared lengths are 1 on the unit grid.
    for (int v = 0; v < g.vertex_count(); ++v) {
        for (int w : g.neighbors(v)) {
            const auto back = g.neighbors(w);
            CHECK(std::find(back.begin(), back.end(), v) != back.end());
        }
        for (double s : g.neighbor_shared(v)) CHECK(s == 1.0);
    }

    CHECK_THROWS_AS(PrecinctGraph::lattice(1, 5), std::invalid_argument);
}

TEST_CASE("graph JSON ingestion") {
    const std::string text = R"({
      "nodes": [
        {"id": 0, "pop": 2, "area": 1, "centroid": [0, 0]},
        {"id": 1, "pop": 3, "area": 2, "centroid": [1, 0], "outer_boundary": 1.5}
      ],
      "edges": [{"u": 0, "v": 1, "shared": 2.0}]
    })";
    const auto g = PrecinctGraph::from_json_text(text);
    CHECK(g.vertex_count() == 2);
    CHECK(g.edge_count() == 1);
    CHECK(g.vertex(1).pop == 3.0);
    CHECK(g.vertex(1).area == 2.0);
    CHECK(g.vertex(1).outer_boundary == 1.5);
    CHECK(g.neighbor_shared(0)[0] == 2.0);

    // Round trip through the text form preserves the structure.
    const auto g2 = PrecinctGraph::from_json_text(g.to_json_text());
    CHECK(g2.vertex_count() == g.vertex_count());
    CHECK(g2.edge_count() == g.edge_count());
    CHECK(g2.vertex(1).pop == 3.0);

    const auto big = PrecinctGraph::lattice(5, 3);
    const auto big2 = PrecinctGraph::from_json_text(big.to_json_text());
    CHECK(big2.edge_count() == big.edge_count());
    for (int v = 0; v < big.vertex_count(); ++v)
        CHECK(big2.vertex(v).centroid.x == big.vertex(v).centroid.x);
}

TEST_CASE("graph JSON rejects each malformed input") {
    const auto make = [](const std::string& nodes, const std::string& edges) {
        return "{\"nodes\":[" + nodes + "],\"edges\":[" + edges + "]}";
    };
    const std::string ok_nodes = R"({"id":0},{"id":1})";

    CHECK_THROWS_WITH_AS(PrecinctGraph::from_json_text("not json at all"),
                         doctest::Contains("malformed graph file"), GraphError);
    CHECK_THROWS_WITH_AS(PrecinctGraph::from_json_text("{\"nodes\":[]}"),
                         "malformed graph file: missing nodes or edges", GraphError);
    CHECK_THROWS_WITH_AS(
        PrecinctGraph::from_json_text(make(R"({"id":0},{"id":3})", R"({"u":0,"v":1})")),
        "unknown vertex id 3 (ids must be dense 0..n-1)", GraphError);
    CHECK_THROWS_WITH_AS(
        PrecinctGraph::from_json_text(make(R"({"id":0},{"id":0})", R"({"u":0,"v":1})")),
        "duplicate id 0", GraphError);
    CHECK_THROWS_WITH_AS(
        PrecinctGraph::from_json_text(make(R"({"id":0,"pop":-1},{"id":1})", R"({"u":0,"v":1})")),
        "negative pop at vertex 0", GraphError);
    CHECK_THROWS_WITH_AS(
        PrecinctGraph::from_json_text(make(R"({"id":0,"area":0},{"id":1})", R"({"u":0,"v":1})")),
        "non-positive area at vertex 0", GraphError);
    CHECK_THROWS_WITH_AS(PrecinctGraph::from_json_text(make(ok_nodes, R"({"u":0,"v":2})")),
                         "unknown vertex 2 in edge list", GraphError);
    CHECK_THROWS_WITH_AS(PrecinctGraph::from_json_text(make(ok_nodes, R"({"u":1,"v":1})")),
                         "self-loop at vertex 1", GraphError);
    CHECK_THROWS_WITH_AS(
        PrecinctGraph::from_json_text(make(ok_nodes, R"({"u":0,"v":1,"shared":0})")),
        "non-positive shared length on edge", GraphError);
    CHECK_THROWS_WITH_AS(
        PrecinctGraph::from_json_text(make(ok_nodes, R"({"u":0,"v":1},{"u":1,"v":0})")),
        "duplicate edge 0-1", GraphError);
    CHECK_THROWS_WITH_AS(
        PrecinctGraph::from_json_text(
            make(R"({"id":0},{"id":1},{"id":2})", R"({"u":0,"v":1})")),
        "disconnected graph", GraphError);
}

TEST_CASE("vertical split plan facts") {
    const auto g = PrecinctGraph::lattice(4, 4);
    Plan plan(g, vertical_split(4, 4), 2);

    CHECK(plan.district_pop(0) == 8.0);
    CHECK(plan.district_pop(1) == 8.0);
    CHECK(plan.district_size(0) == 8);
    CHECK(plan.cut_edge_count() == 4);
    CHECK(plan.cut_boundary_length() == 4.0);

    // District 0 covers columns {0,1} over rows {0..3}.
    const Point c0 = plan.district_centroid(0);
    CHECK(c0.x == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(c0.y == doctest::Approx(1.5).epsilon(1e-14));
    const Point c1 = plan.district_centroid(1);
    CHECK(c1.x == doctest::Approx(2.5).epsilon(1e-14));

    const auto fp = plan.fingerprint();
    Plan other = plan;
    other.apply_flip({1, 2}); // vertex 2 adopts label of vertex 1
    CHECK(other.fingerprint() != fp);
    CHECK(other.label(2) == 0);
    CHECK(other.cut_edge_count() == 5); // 2-3 and 2-6 now cut, 1-2 healed

    CHECK_THROWS_AS(plan.apply_flip({0, 7}), std::invalid_argument); // not adjacent
    CHECK_THROWS_AS(plan.apply_flip({0, 1}), std::invalid_argument); // same label
}

TEST_CASE("plan caches stay exact over long flip walks") {
    const auto g = PrecinctGraph::lattice(6, 6);
    const ValiditySpec validity{10.0, 26.0, true, false};
    Plan plan(g, vertical_split(6, 6), 2);
    PhiloxRng rng(2024);

    for (int step = 0; step < 300; ++step) {
        const auto moves = conflicted_edges(plan, validity);
        REQUIRE(!moves.empty());
        plan.apply_flip(moves[rng.below(moves.size())]);
    }

    // The incrementally maintained caches must equal a fresh rebuild exactly:
    // on integer-valued lattice data every update is exact in doubles.
    const Plan rebuilt(g, plan.labels(), 2);
    for (int d = 0; d < 2; ++d) {
        CHECK(plan.district_pop(d) == rebuilt.district_pop(d));
        CHECK(plan.district_area(d) == rebuilt.district_area(d));
        CHECK(plan.district_size(d) == rebuilt.district_size(d));
        CHECK(plan.district_moment(d).x == rebuilt.district_moment(d).x);
        CHECK(plan.district_moment(d).y == rebuilt.district_moment(d).y);
    }
    CHECK(plan.cut_edge_count() == rebuilt.cut_edge_count());
    CHECK(plan.cut_boundary_length() == rebuilt.cut_boundary_length());
}

TEST_CASE("conflicted pairs on the vertical split") {
    const auto g = PrecinctGraph::lattice(4, 4);
    Plan plan(g, vertical_split(4, 4), 2);

    // Bounds [6,10]: every orientation of the four cut edges stays valid,
    // giving 8 ordered pairs.
    const auto loose = conflicted_edges(plan, ValiditySpec{6.0, 10.0, true, false});
    CHECK(loose.size() == 8);
    std::set<std::pair<int, int>> seen;
    for (const Flip& f : loose) {
        CHECK(plan.label(f.u) != plan.label(f.v));
        seen.insert({f.u, f.v});
    }
    CHECK(seen.size() == 8);
    CHECK(seen.count({1, 2}) == 1);
    CHECK(seen.count({2, 1}) == 1);

    // Exact-population bounds freeze the chain: no flip can keep 8/8.
    CHECK(conflicted_edges(plan, ValiditySpec{8.0, 8.0, true, false}).empty());
}

TEST_CASE("connectivity filter drops cutting flips") {
    // District 0 is row 0 only; flipping its middle vertex 1 away would
    // split {0,2,3}. Orientation (5,1) must be filtered, (4,0) kept.
    const auto g = PrecinctGraph::lattice(4, 4);
    std::vector<int> labels(16, 1);
    for (int c = 0; c < 4; ++c) labels[static_cast<size_t>(c)] = 0;
    Plan plan(g, labels, 2);
    const ValiditySpec validity{2.0, 14.0, true, false};

    const auto moves = conflicted_edges(plan, validity);
    std::set<std::pair<int, int>> seen;
    for (const Flip& f : moves) seen.insert({f.u, f.v});
    CHECK(seen.count({5, 1}) == 0);
    CHECK(seen.count({6, 2}) == 0);
    CHECK(seen.count({4, 0}) == 1);
    CHECK(seen.count({7, 3}) == 1);

    for (const Flip& f : moves) {
        CHECK(flip_keeps_valid(plan, f, validity));
        CHECK(is_valid(apply_flip(plan, f), validity));
    }

    // flip_keeps_valid agrees with the full recheck on every cross-label
    // adjacent orientation, kept or dropped.
    for (int v = 0; v < g.vertex_count(); ++v)
        for (int u : g.neighbors(v))
            if (plan.label(u) != plan.label(v)) {
                const Flip f{u, v};
                CHECK(flip_keeps_valid(plan, f, validity) ==
                      is_valid(apply_flip(plan, f), validity));
            }
}

TEST_CASE("neighborhood deduplicates shared destinations") {
    // District 0 = row 0 plus vertex 4: vertex 5 touches it through both 1
    // and 4, so two conflicted orientations map to one neighbor.
    const auto g = PrecinctGraph::lattice(4, 4);
    std::vector<int> labels(16, 1);
    for (int v : {0, 1, 2, 3, 4}) labels[static_cast<size_t>(v)] = 0;
    Plan plan(g, labels, 2);
    const ValiditySpec validity{2.0, 14.0, true, false};

    const auto moves = conflicted_edges(plan, validity);
    const auto nbhd = valid_neighborhood(plan, validity);
    CHECK(nbhd.size() < moves.size());

    std::set<std::pair<int, int>> dest;
    for (const Neighbor& nb : nbhd) {
        CHECK(nb.old_label == plan.label(nb.flip.v));
        CHECK(nb.new_label == plan.label(nb.flip.u));
        CHECK(dest.insert({nb.flip.v, nb.new_label}).second); // unique target
    }
    int to5 = 0;
    for (const Flip& f : moves) to5 += f.v == 5;
    CHECK(to5 == 2); // both orientations exist pre-dedup
}

TEST_CASE("district adjacency for three stripes") {
    const auto g = PrecinctGraph::lattice(6, 6);
    std::vector<int> labels(36);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c) labels[static_cast<size_t>(r * 6 + c)] = c / 2;
    Plan plan(g, labels, 3);
    const ValiditySpec validity{6.0, 18.0, true, false};

    const auto pairs = district_graph(plan, validity);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0] == std::pair<int, int>{0, 1});
    CHECK(pairs[1] == std::pair<int, int>{1, 2});

    // The hole check makes the middle stripe illegal: its complement is the
    // two outer stripes, which do not touch.
    CHECK(is_valid(plan, validity));
    CHECK(!is_valid(plan, ValiditySpec{6.0, 18.0, true, true}));

    // Two districts always pass it: each complement is the other district.
    const auto g4 = PrecinctGraph::lattice(4, 4);
    Plan ring(g4, {0, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0}, 2);
    CHECK(is_valid(ring, ValiditySpec{2.0, 14.0, true, true}));
}

TEST_CASE("plan CSV round trip") {
    const auto g = PrecinctGraph::lattice(4, 4);
    Plan plan(g, vertical_split(4, 4), 2);

    const std::string text = plan_to_csv(plan);
    CHECK(text.substr(0, 19) == "vertex_id,district\n");
    CHECK(text.find("0,1\n") != std::string::npos);  // district numbers are 1-based
    CHECK(text.find("15,2\n") != std::string::npos);

    const Plan back = load_plan_csv(g, text, 2);
    CHECK(back.labels() == plan.labels());

    CHECK_THROWS_WITH_AS(load_plan_csv(g, "vertex_id,district\n0,1\n", 2),
                         "plan file missing vertex 1", std::invalid_argument);
    CHECK_THROWS_WITH_AS(load_plan_csv(g, "", 2), "empty plan file", std::invalid_argument);
    std::string bad = "vertex_id,district\n";
    for (int v = 0; v < 16; ++v) bad += std::to_string(v) + (v == 3 ? ",9\n" : ",1\n");
    CHECK_THROWS_WITH_AS(load_plan_csv(g, bad, 2), "district out of range in plan row: 3,9",
                         std::invalid_argument);
}

TEST_CASE("plan construction rejects bad labelings") {
    const auto g = PrecinctGraph::lattice(4, 4);
    CHECK_THROWS_WITH_AS(Plan(g, std::vector<int>(15, 0), 2),
                         "label vector size does not match graph", std::invalid_argument);
    auto labels = vertical_split(4, 4);
    labels[3] = 7;
    CHECK_THROWS_WITH_AS(Plan(g, labels, 2), "label out of range at vertex 3",
                         std::invalid_argument);
}
