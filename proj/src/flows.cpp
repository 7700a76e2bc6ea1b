#include "nrmc/flows.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace nrmc {

Point vortex_field(Point p, Point center, bool unit_speed, bool clockwise) {
    const double dx = p.x - center.x;
    const double dy = p.y - center.y;
    // Tangential direction (-sin a, cos a) scaled by r is exactly (-dy, dx).
    double vx = -dy;
    double vy = dx;
    if (clockwise) {
        vx = -vx;
        vy = -vy;
    }
    if (unit_speed) {
        const double r = std::hypot(dx, dy);
        if (r == 0.0) return {0.0, 0.0};
        vx /= r;
        vy /= r;
    }
    return {vx, vy};
}

Point VectorField::eval(Point p) const {
    if (kind == Kind::Constant) return direction;
    return vortex_field(p, center, unit_speed, clockwise);
}

VectorField VectorField::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("malformed field config: ") + e.what());
    }
    const auto read_point = [&](const char* key) {
        const auto& arr = j.at(key);
        if (!arr.is_array() || arr.size() != 2 || !arr[0].is_number() || !arr[1].is_number())
            throw std::runtime_error(std::string("field config: ") + key +
                                     " must be a pair of numbers");
        return Point{arr[0].get<double>(), arr[1].get<double>()};
    };
    VectorField field;
    const std::string kind = j.value("kind", "");
    if (kind == "vortex") {
        field.kind = Kind::Vortex;
        if (j.contains("center")) field.center = read_point("center");
        field.unit_speed = j.value("unit_speed", true);
        field.clockwise = j.value("clockwise", false);
    } else if (kind == "constant") {
        field.kind = Kind::Constant;
        field.direction = read_point("direction");
    } else {
        throw std::runtime_error("field config: kind must be \"vortex\" or \"constant\"");
    }
    return field;
}

namespace {

std::uint64_t fnv_labels(const Plan& plan, int override_v, int override_label) {
    std::uint64_t h = 1469598103934665603ULL;
    const auto& labels = plan.labels();
    for (size_t i = 0; i < labels.size(); ++i) {
        const int label = static_cast<int>(i) == override_v ? override_label : labels[i];
        std::uint64_t x = static_cast<std::uint64_t>(static_cast<std::int64_t>(label));
        for (int b = 0; b < 8; ++b) {
            h ^= (x >> (8 * b)) & 0xffu;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace

int orientation(const Plan& plan, Flip f, const VectorField& field, std::uint64_t tie_salt) {
    const int to = plan.label(f.u);
    const int from = plan.label(f.v);
    if (to == from) throw GraphError("orientation of a non-conflicted pair");
    const auto& vert = plan.graph().vertex(f.v);
    const double ax = vert.area * vert.centroid.x;
    const double ay = vert.area * vert.centroid.y;

    double s = 0.0;
    for (int d : {from, to}) {
        // `from` loses v, `to` gains it; the predicted moments use the same
        // expressions the incremental cache uses, so both endpoint plans see
        // bit-identical centroid pairs and s negates exactly under reversal.
        const double sgn = (d == from) ? -1.0 : 1.0;
        const Point m = plan.district_moment(d);
        const double area = plan.district_area(d);
        const double area2 = area + sgn * vert.area;
        const double cx = m.x / area;
        const double cy = m.y / area;
        const double cx2 = (m.x + sgn * ax) / area2;
        const double cy2 = (m.y + sgn * ay) / area2;
        const Point vel = field.eval({(cx + cx2) / 2.0, (cy + cy2) / 2.0});
        s += vel.x * (cx2 - cx) + vel.y * (cy2 - cy);
    }
    if (s > 0.0) return +1;
    if (s < 0.0) return -1;
    // Exact tie: decided by a salted hash of the unordered endpoint pair so
    // the two plans always disagree. The label of v distinguishes them.
    const std::uint64_t fp_cur = fnv_labels(plan, -1, 0);
    const std::uint64_t fp_alt = fnv_labels(plan, f.v, to);
    const bool cur_is_lo = from < to;
    const std::uint64_t fp_lo = cur_is_lo ? fp_cur : fp_alt;
    const std::uint64_t fp_hi = cur_is_lo ? fp_alt : fp_cur;
    const std::uint64_t h = mix64(mix64(tie_salt ^ fp_lo) ^ fp_hi);
    const int base = (h & 1u) ? +1 : -1;
    return cur_is_lo ? base : -base;
}

namespace {

// log_z_pos / log_z_neg from the oriented index sets.
void fill_oriented_log_z(FlowDecomposition& dec) {
    const auto lse_subset = [&](const std::vector<int>& idx) {
        std::vector<double> vals;
        vals.reserve(idx.size());
        for (int k : idx) vals.push_back(dec.nbhd.log_g[static_cast<size_t>(k)]);
        return log_sum_exp(vals);
    };
    dec.log_z_pos.resize(dec.pos.size());
    dec.log_z_neg.resize(dec.neg.size());
    for (size_t i = 0; i < dec.pos.size(); ++i) dec.log_z_pos[i] = lse_subset(dec.pos[i]);
    for (size_t i = 0; i < dec.neg.size(); ++i) dec.log_z_neg[i] = lse_subset(dec.neg[i]);
}

} // namespace

ComFamily::ComFamily(ValiditySpec validity, ScoreSpec score, VectorField field,
                     std::uint64_t tie_salt)
    : validity_(validity), score_(score), field_(field), tie_salt_(tie_salt) {}

FlowDecomposition ComFamily::decompose(const Plan& plan, double beta) const {
    FlowDecomposition dec;
    dec.nbhd = weighted_neighborhood(plan, validity_, score_, beta);
    dec.log_flow_weight = {0.0};
    dec.pos.resize(1);
    dec.neg.resize(1);
    for (int k = 0; k < static_cast<int>(dec.nbhd.items.size()); ++k) {
        const int s = orientation(plan, dec.nbhd.items[static_cast<size_t>(k)].flip, field_,
                                  tie_salt_);
        (s > 0 ? dec.pos[0] : dec.neg[0]).push_back(k);
    }
    fill_oriented_log_z(dec);
    return dec;
}

D2dFamily::D2dFamily(ValiditySpec validity, ScoreSpec score, int num_districts, bool simplified)
    : validity_(validity), score_(score), num_districts_(num_districts),
      simplified_(simplified) {
    if (num_districts_ < 2) throw std::invalid_argument("district-pair flows need >= 2 districts");
}

int D2dFamily::pair_index(int i, int j) const {
    return i * num_districts_ - i * (i + 1) / 2 + (j - i - 1);
}

std::pair<int, int> D2dFamily::pair_of(int flow) const {
    for (int i = 0; i < num_districts_ - 1; ++i) {
        const int row = num_districts_ - 1 - i;
        if (flow < row) return {i, i + 1 + flow};
        flow -= row;
    }
    throw std::out_of_range("pair flow index");
}

std::string D2dFamily::flow_name(int flow) const {
    const auto [i, j] = pair_of(flow);
    return "district pair " + std::to_string(i + 1) + "-" + std::to_string(j + 1);
}

bool D2dFamily::member(const Plan& plan, int flow) const {
    const auto [i, j] = pair_of(flow);
    for (const Neighbor& nb : valid_neighborhood(plan, validity_)) {
        const int a = std::min(nb.old_label, nb.new_label);
        const int b = std::max(nb.old_label, nb.new_label);
        if (a == i && b == j) return true;
    }
    return false;
}

FlowDecomposition D2dFamily::decompose(const Plan& plan, double beta) const {
    FlowDecomposition dec;
    dec.nbhd = weighted_neighborhood(plan, validity_, score_, beta);
    const int nf = flow_count();
    dec.pos.resize(static_cast<size_t>(nf));
    dec.neg.resize(static_cast<size_t>(nf));
    for (int k = 0; k < static_cast<int>(dec.nbhd.items.size()); ++k) {
        const Neighbor& nb = dec.nbhd.items[static_cast<size_t>(k)];
        const int e = pair_index(std::min(nb.old_label, nb.new_label),
                                 std::max(nb.old_label, nb.new_label));
        const bool forward = nb.new_label < nb.old_label;
        (forward ? dec.pos[static_cast<size_t>(e)] : dec.neg[static_cast<size_t>(e)]).push_back(k);
    }
    fill_oriented_log_z(dec);
    dec.log_flow_weight.assign(static_cast<size_t>(nf),
                               -std::numeric_limits<double>::infinity());
    if (!dec.nbhd.items.empty()) {
        for (int e = 0; e < nf; ++e) {
            const double both[2] = {dec.log_z_pos[static_cast<size_t>(e)],
                                    dec.log_z_neg[static_cast<size_t>(e)]};
            const double log_ze = log_sum_exp(both);
            if (!(std::isinf(log_ze) && log_ze < 0.0))
                dec.log_flow_weight[static_cast<size_t>(e)] = log_ze - dec.nbhd.log_z;
        }
    }
    return dec;
}

FlowDecomposition d2d_oriented_neighborhoods(const Plan& plan, const D2dFamily& family,
                                             double beta) {
    return family.decompose(plan, beta);
}

MsmhResult com_flow_step(ExtendedState& state, const ComFamily& family, double beta,
                         PhiloxRng& rng) {
    return msmh_step(state, family, beta, rng);
}

MsmhResult d2d_flow_step(ExtendedState& state, const D2dFamily& family, double beta,
                         PhiloxRng& rng) {
    return msmh_step(state, family, beta, rng);
}

} // namespace nrmc
