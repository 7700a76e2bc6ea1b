#ifndef NRMC_FLOWS_HPP
#define NRMC_FLOWS_HPP

#include <cstdint>
#include <string>
#include <utility>

#include "nrmc/msmh.hpp"

namespace nrmc {

// Tangential field around a center point, counterclockwise by default.
// unit_speed normalizes to length 1, otherwise speed grows linearly with
// distance. Exactly zero at the center.
Point vortex_field(Point p, Point center, bool unit_speed, bool clockwise = false);

struct VectorField {
    enum class Kind { Vortex, Constant };
    Kind kind = Kind::Vortex;
    Point center{};
    bool unit_speed = true;
    bool clockwise = false;
    Point direction{1.0, 0.0}; // Kind::Constant only

    Point eval(Point p) const;
    // {"kind":"vortex","center":[x,y],"unit_speed":bool,"clockwise":bool}
    // or {"kind":"constant","direction":[x,y]}.
    static VectorField from_json_text(const std::string& text);
};

// Sign of the displacement of the two affected district centroids projected
// onto the field, evaluated at each centroid pair's midpoint. Exact zeros are
// broken by a salted hash of the unordered endpoint-plan pair, so the result
// is always +1 or -1 and negates under flip reversal.
int orientation(const Plan& plan, Flip f, const VectorField& field, std::uint64_t tie_salt = 0);

// Single-flow family with unit weight: every plan is a member, every valid
// move belongs to the one flow, oriented by centroid displacement.
class ComFamily final : public FlowFamily {
public:
    ComFamily(ValiditySpec validity, ScoreSpec score, VectorField field,
              std::uint64_t tie_salt = 0);

    int flow_count() const override { return 1; }
    bool member(const Plan&, int) const override { return true; }
    FlowDecomposition decompose(const Plan& plan, double beta) const override;
    std::string flow_name(int) const override { return "centroid flow"; }

    const VectorField& field() const { return field_; }

private:
    ValiditySpec validity_;
    ScoreSpec score_;
    VectorField field_;
    std::uint64_t tie_salt_;
};

// One flow per unordered district pair (i, j), i < j. Moving a vertex into
// the lower-numbered district is the +1 direction. Flow weights are each
// pair's share of the tempered neighborhood mass, so a pair is a member
// exactly when it has at least one valid move.
class D2dFamily final : public FlowFamily {
public:
    D2dFamily(ValiditySpec validity, ScoreSpec score, int num_districts,
              bool simplified = false);

    int flow_count() const override { return num_districts_ * (num_districts_ - 1) / 2; }
    bool member(const Plan& plan, int flow) const override;
    FlowDecomposition decompose(const Plan& plan, double beta) const override;
    bool simplified_ratio() const override { return simplified_; }
    std::string flow_name(int flow) const override;

    int pair_index(int i, int j) const; // requires i < j
    std::pair<int, int> pair_of(int flow) const;

private:
    ValiditySpec validity_;
    ScoreSpec score_;
    int num_districts_;
    bool simplified_;
};

// Per-pair oriented split of the valid neighborhood of one plan.
FlowDecomposition d2d_oriented_neighborhoods(const Plan& plan, const D2dFamily& family,
                                             double beta);

MsmhResult com_flow_step(ExtendedState& state, const ComFamily& family, double beta,
                         PhiloxRng& rng);
MsmhResult d2d_flow_step(ExtendedState& state, const D2dFamily& family, double beta,
                         PhiloxRng& rng);

} // namespace nrmc

#endif
