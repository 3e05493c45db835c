#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "heuler/domain.hpp"
#include "heuler/error.hpp"
#include "oracles.hpp"

using namespace heuler;

namespace {

ErrorKind kind_of_throw(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorKind::PipelineFailure;
}

}  // namespace

TEST(MakeSector, FiniteTruncatedSectorHasAllEdges) {
    const auto d = make_sector(1.0, 2.0, oracle::pi / 2);
    for (auto e : {Edge::T, Edge::B, Edge::L, Edge::R}) EXPECT_TRUE(d.has_edge(e));
    for (auto v : {Vertex::TL, Vertex::BL, Vertex::TR, Vertex::BR}) EXPECT_TRUE(d.has_vertex(v));
}

TEST(MakeSector, FullPlaneSectorHasOnlyAngularEdges) {
    const auto d = make_sector(0.0, kInf, kTwoPi);
    EXPECT_TRUE(d.has_edge(Edge::T));
    EXPECT_TRUE(d.has_edge(Edge::B));
    EXPECT_FALSE(d.has_edge(Edge::L));
    EXPECT_FALSE(d.has_edge(Edge::R));
    for (auto v : {Vertex::TL, Vertex::BL, Vertex::TR, Vertex::BR}) EXPECT_FALSE(d.has_vertex(v));
    EXPECT_TRUE(d.is_full_turn());
}

TEST(MakeSector, ExteriorSectorHasInnerEdgeOnly) {
    const auto d = make_sector(1.0, kInf, oracle::pi);
    EXPECT_TRUE(d.has_edge(Edge::L));
    EXPECT_FALSE(d.has_edge(Edge::R));
    EXPECT_TRUE(d.has_vertex(Vertex::TL));
    EXPECT_FALSE(d.has_vertex(Vertex::BR));
}

TEST(MakeSector, RejectsBadRadiiAndAngles) {
    EXPECT_EQ(kind_of_throw([] { make_sector(2.0, 1.0, oracle::pi); }), ErrorKind::InvalidRadii);
    EXPECT_EQ(kind_of_throw([] { make_sector(1.0, 1.0, oracle::pi); }), ErrorKind::InvalidRadii);
    EXPECT_EQ(kind_of_throw([] { make_sector(-1.0, 1.0, oracle::pi); }), ErrorKind::InvalidRadii);
    EXPECT_EQ(kind_of_throw([] { make_sector(0.0, 1.0, 0.0); }), ErrorKind::InvalidAngle);
    EXPECT_EQ(kind_of_throw([] { make_sector(0.0, 1.0, 3 * oracle::pi); }), ErrorKind::InvalidAngle);
    EXPECT_EQ(kind_of_throw([] { make_sector(0.0, 1.0, std::nan("")); }), ErrorKind::InvalidAngle);
}

TEST(BuildGrid, AnnularSectorUsesLogRadii) {
    const auto g = build_grid(make_sector(1.0, 2.0, oracle::pi / 2), 64, 64);
    EXPECT_EQ(g.s_min(), 0.0);
    EXPECT_DOUBLE_EQ(g.s_max(), std::log(2.0));
    EXPECT_DOUBLE_EQ(g.h_s(), std::log(2.0) / 64);
    EXPECT_DOUBLE_EQ(g.h_theta(), oracle::pi / 2 / 64);
    EXPECT_EQ(g.size(), 65u * 65u);
    EXPECT_EQ(g.s(64), g.s_max());
    EXPECT_EQ(g.theta(64), g.theta0());
}

TEST(BuildGrid, TruncationConventions) {
    const auto ext = build_grid(make_sector(1.0, kInf, oracle::pi), 16, 16, std::pair{0.0, 4.0});
    EXPECT_EQ(ext.s_min(), 0.0);
    EXPECT_EQ(ext.s_max(), 4.0);
    EXPECT_TRUE(ext.truncated_high());
    EXPECT_FALSE(ext.truncated_low());
    const auto in = build_grid(make_sector(0.0, 1.0, oracle::pi), 16, 16, std::pair{-4.0, 0.0});
    EXPECT_EQ(in.s_min(), -4.0);
    EXPECT_TRUE(in.truncated_low());
    const auto def = build_grid(make_sector(0.0, kInf, 1.0), 16, 16);
    EXPECT_EQ(def.s_min(), -kDefaultClipWidth);
    EXPECT_EQ(def.s_max(), kDefaultClipWidth);
}

TEST(BuildGrid, RejectsInconsistentClipAndSmallGrids) {
    const auto d = make_sector(1.0, 2.0, 1.0);
    EXPECT_EQ(kind_of_throw([&] { build_grid(d, 16, 16, std::pair{0.0, 1.0}); }), ErrorKind::InvalidGrid);
    EXPECT_EQ(kind_of_throw([&] { build_grid(d, 7, 16); }), ErrorKind::InvalidGrid);
    EXPECT_EQ(kind_of_throw([&] { build_grid(d, 16, 4); }), ErrorKind::InvalidGrid);
    const auto ext = make_sector(1.0, kInf, 1.0);
    EXPECT_EQ(kind_of_throw([&] { build_grid(ext, 16, 16, std::pair{0.5, 4.0}); }), ErrorKind::InvalidGrid);
}

TEST(LogPolarGrid, BoundaryClassesPartitionNodes) {
    const auto g = build_grid(make_sector(1.0, kInf, 1.0), 10, 12, std::pair{0.0, 3.0});
    int interior = 0, boundary = 0, trunc = 0;
    for (int i = 0; i <= g.n_s(); ++i) {
        for (int j = 0; j <= g.n_theta(); ++j) {
            const auto c = g.classify(i, j);
            if (c == NodeClass::Interior) ++interior;
            else if (c == NodeClass::TruncHigh || c == NodeClass::TruncLow) ++trunc;
            else ++boundary;
        }
    }
    EXPECT_EQ(interior, 9 * 11);
    EXPECT_EQ(interior + boundary + trunc, static_cast<int>(g.size()));
    EXPECT_EQ(trunc, 11);
    EXPECT_EQ(g.classify(0, 0), NodeClass::BL);
    EXPECT_EQ(g.classify(0, 12), NodeClass::TL);
}

TEST(LogPolarGrid, JsonRoundTripIsBitExact) {
    const auto g = build_grid(make_sector(0.0, 1.0, 2.5), 33, 17, std::pair{-3.7, 0.0});
    const auto back = LogPolarGrid::from_json(g.to_json());
    EXPECT_EQ(back.n_s(), g.n_s());
    EXPECT_EQ(back.n_theta(), g.n_theta());
    for (int i = 0; i <= g.n_s(); ++i) EXPECT_EQ(back.s(i), g.s(i));
    for (int j = 0; j <= g.n_theta(); ++j) EXPECT_EQ(back.theta(j), g.theta(j));
}

TEST(LogPolarGrid, RowAtRadiusFindsGridRows) {
    const auto g = build_grid(make_sector(0.0, kInf, 1.0), 64, 16);
    ASSERT_TRUE(g.row_at_radius(1.0).has_value());
    EXPECT_EQ(*g.row_at_radius(1.0), 32);
    EXPECT_FALSE(g.row_at_radius(2.0).has_value());
    const auto ann = build_grid(make_sector(1.0, 2.0, 1.0), 16, 16);
    EXPECT_EQ(*ann.row_at_radius(2.0), 16);
}
