#include "helpers.hpp"

#include "hiertrack/features.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace hiertrack;
using hiertrack::test::SceneBuilder;
using hiertrack::test::single;

namespace {

constexpr double kTol = 1e-10;

// Independent GIoU: overlap via 1-D interval lengths, hull via min/max corners.
double giou_oracle(const Box& a, const Box& b) {
    auto overlap = [](double a0, double a1, double b0, double b1) { return std::max(0.0, std::min(a1, b1) - std::max(a0, b0)); };
    const double inter = overlap(a.x, a.x + a.w, b.x, b.x + b.w) * overlap(a.y, a.y + a.h, b.y, b.y + b.h);
    const double uni = a.w * a.h + b.w * b.h - inter;
    const double hull = (std::max(a.x + a.w, b.x + b.w) - std::min(a.x, b.x)) *
                        (std::max(a.y + a.h, b.y + b.h) - std::min(a.y, b.y));
    return inter / uni - (hull - uni) / hull;
}

// Tracklet whose centers follow c0 + v * (f - f0) with fixed size.
Tracklet linear(SceneBuilder& b, int f0, int f1, double cx, double cy, double vx, double vy, double w = 4,
                double h = 8) {
    std::vector<Detection> ds;
    for (int f = f0; f <= f1; ++f) {
        const double t = f - f0;
        ds.push_back(b.add(f, Box::from_center(cx + vx * t, cy + vy * t, w, h)));
    }
    return make_tracklet(ds, b.table());
}

}  // namespace

TEST(PositionFeatures, IdenticalBoxes) {
    SceneBuilder b;
    const auto u = single(b, 0, {10, 20, 4, 8});
    const auto v = single(b, 1, {10, 20, 4, 8});
    for (double x : position_features(u, v)) EXPECT_NEAR(x, 0.0, kTol);
}

TEST(PositionFeatures, Offset) {
    SceneBuilder b;
    const auto p = position_features(single(b, 0, {10, 10, 4, 8}), single(b, 1, {12, 14, 4, 8}));
    EXPECT_NEAR(p[0], -0.25, kTol);
    EXPECT_NEAR(p[1], -0.5, kTol);
    EXPECT_NEAR(p[2], 0.0, kTol);
    EXPECT_NEAR(p[3], 0.0, kTol);
}

TEST(PositionFeatures, SizeRatios) {
    SceneBuilder b;
    const auto p = position_features(single(b, 0, {0, 0, 2, 2}), single(b, 1, {0, 0, 4, 4}));
    EXPECT_NEAR(p[0], 0.0, kTol);
    EXPECT_NEAR(p[1], 0.0, kTol);
    EXPECT_NEAR(p[2], -std::log(2.0), kTol);
    EXPECT_NEAR(p[3], -std::log(2.0), kTol);
}

TEST(PositionFeatures, UsesLastAndFirstBoxes) {
    SceneBuilder b;
    const auto u = make_tracklet({b.add(0, {100, 100, 4, 8}), b.add(1, {10, 10, 4, 8})}, b.table());
    const auto v = make_tracklet({b.add(3, {12, 14, 4, 8}), b.add(4, {300, 300, 4, 8})}, b.table());
    const auto p = position_features(u, v);
    EXPECT_NEAR(p[0], -0.25, kTol);
    EXPECT_NEAR(p[1], -0.5, kTol);
}

TEST(PositionFeatures, LogRatiosIgnoreTranslation) {
    SceneBuilder b;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> pos(-50, 50), size(1, 20);
    for (int i = 0; i < 50; ++i) {
        const Box a{pos(rng), pos(rng), size(rng), size(rng)};
        const Box c{pos(rng), pos(rng), size(rng), size(rng)};
        const double tx = pos(rng), ty = pos(rng);
        const auto p = position_features(single(b, 0, a), single(b, 2, c));
        const auto q = position_features(single(b, 0, {a.x + tx, a.y + ty, a.w, a.h}),
                                         single(b, 2, {c.x + tx, c.y + ty, c.w, c.h}));
        for (int k = 0; k < 4; ++k) EXPECT_NEAR(p[k], q[k], 1e-9);
    }
}

TEST(PositionFeatures, OverlapIsError) {
    SceneBuilder b;
    EXPECT_THROW(position_features(single(b, 3, {0, 0, 1, 1}), single(b, 3, {0, 0, 1, 1})), Error);
}

TEST(TimeDistance, Examples) {
    SceneBuilder b;
    EXPECT_EQ(time_distance(single(b, 5, {0, 0, 1, 1}), single(b, 6, {0, 0, 1, 1})), 1.0);
    EXPECT_EQ(time_distance(single(b, 10, {0, 0, 1, 1}), single(b, 40, {0, 0, 1, 1})), 30.0);
    EXPECT_THROW(time_distance(single(b, 10, {0, 0, 1, 1}), single(b, 10, {0, 0, 1, 1})), Error);
    EXPECT_THROW(time_distance(single(b, 11, {0, 0, 1, 1}), single(b, 10, {0, 0, 1, 1})), Error);
}

TEST(AppearanceDistance, Examples) {
    SceneBuilder b(3);
    EXPECT_NEAR(appearance_distance(single(b, 0, {0, 0, 1, 1}, {1, 2, 3}), single(b, 1, {0, 0, 1, 1}, {1, 2, 3})), 0.0,
                kTol);
    EXPECT_NEAR(appearance_distance(single(b, 0, {0, 0, 1, 1}, {1, 0, 0}), single(b, 1, {0, 0, 1, 1}, {0, 1, 0})),
                std::sqrt(2.0), kTol);

    SceneBuilder b2(2);
    const auto u = make_tracklet({b2.add(0, {0, 0, 1, 1}, {2, 0}), b2.add(1, {0, 0, 1, 1}, {0, 2})}, b2.table());
    const auto v = single(b2, 5, {0, 0, 1, 1}, {0, 0});
    EXPECT_NEAR(appearance_distance(u, v), std::sqrt(2.0), kTol);
}

TEST(AppearanceDistance, DimensionMismatch) {
    EXPECT_THROW(appearance_distance(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)), Error);
}

TEST(AppearanceDistance, TriangleInequality) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0, 1);
    for (int i = 0; i < 200; ++i) {
        Eigen::VectorXd a(4), c(4), d(4);
        for (int k = 0; k < 4; ++k) {
            a[k] = n(rng);
            c[k] = n(rng);
            d[k] = n(rng);
        }
        EXPECT_LE(appearance_distance(a, d), appearance_distance(a, c) + appearance_distance(c, d) + 1e-12);
        EXPECT_GE(appearance_distance(a, c), 0.0);
    }
}

TEST(Velocity, ExactLine) {
    SceneBuilder b;
    std::vector<Detection> ds{b.add(0, Box::from_center(0, 0, 2, 2)), b.add(1, Box::from_center(2, 1, 2, 2)),
                              b.add(2, Box::from_center(4, 2, 2, 2))};
    const auto v = estimate_velocity(ds);
    ASSERT_TRUE(v);
    EXPECT_NEAR(v->vx, 2.0, kTol);
    EXPECT_NEAR(v->vy, 1.0, kTol);
}

TEST(Velocity, Stationary) {
    SceneBuilder b;
    std::vector<Detection> ds{b.add(0, Box::from_center(0, 0, 2, 2)), b.add(10, Box::from_center(0, 0, 2, 2))};
    const auto v = estimate_velocity(ds);
    ASSERT_TRUE(v);
    EXPECT_NEAR(v->vx, 0.0, kTol);
    EXPECT_NEAR(v->vy, 0.0, kTol);
}

TEST(Velocity, LeastSquaresSlope) {
    SceneBuilder b;
    std::vector<Detection> ds{b.add(0, Box::from_center(0, 0, 2, 2)), b.add(1, Box::from_center(1, 0, 2, 2)),
                              b.add(2, Box::from_center(5, 0, 2, 2))};
    // Frames centered at 1, x centered at 2: slope = ((-1)(-2) + (1)(3)) / 2.
    const auto v = estimate_velocity(ds);
    EXPECT_NEAR(v->vx, 2.5, kTol);
    EXPECT_NEAR(v->vy, 0.0, kTol);
}

TEST(Velocity, SingletonAbsent) {
    SceneBuilder b;
    std::vector<Detection> ds{b.add(0, {0, 0, 1, 1})};
    EXPECT_FALSE(estimate_velocity(ds));
}

TEST(Giou, Examples) {
    EXPECT_NEAR(giou({3, 4, 5, 6}, {3, 4, 5, 6}), 1.0, kTol);
    EXPECT_NEAR(giou({0, 0, 1, 1}, {2, 0, 1, 1}), -1.0 / 3.0, kTol);
    EXPECT_NEAR(giou({0, 0, 2, 2}, {1, 1, 2, 2}), 1.0 / 7.0 - 2.0 / 9.0, kTol);
}

TEST(Giou, DegenerateBoxIsError) {
    EXPECT_THROW(giou({0, 0, 0, 1}, {0, 0, 1, 1}), Error);
    EXPECT_THROW(giou({0, 0, 1, 1}, {0, 0, 1, -1}), Error);
}

TEST(Giou, Properties) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pos(-20, 20), size(0.5, 15);
    for (int i = 0; i < 500; ++i) {
        const Box a{pos(rng), pos(rng), size(rng), size(rng)};
        const Box c{pos(rng), pos(rng), size(rng), size(rng)};
        const double g = giou(a, c);
        EXPECT_NEAR(g, giou(c, a), 1e-12);
        EXPECT_NEAR(giou(a, a), 1.0, 1e-12);
        EXPECT_LE(g, iou(a, c) + 1e-12);
        EXPECT_GT(g, -1.0);
        EXPECT_LE(g, 1.0);
        EXPECT_NEAR(g, giou_oracle(a, c), 1e-12);
    }
}

TEST(MotionConsistency, StationarySameBox) {
    SceneBuilder b;
    const auto u = linear(b, 0, 3, 10, 10, 0, 0);
    const auto v = linear(b, 8, 10, 10, 10, 0, 0);
    ASSERT_TRUE(motion_consistency(u, v));
    EXPECT_NEAR(*motion_consistency(u, v), 1.0, kTol);
}

TEST(MotionConsistency, SharedLinearPath) {
    SceneBuilder b;
    // u ends at frame 3 (center x = 6); a 4-frame gap puts v's first center at 6 + 2*4 = 14.
    const auto u = linear(b, 0, 3, 0, 5, 2, 0);
    const auto v = linear(b, 7, 9, 14, 5, 2, 0);
    EXPECT_NEAR(*motion_consistency(u, v), 1.0, kTol);
}

TEST(MotionConsistency, DivergingIsNegative) {
    SceneBuilder b;
    const auto u = linear(b, 0, 3, 100, 5, 2, 0);
    const auto v = linear(b, 7, 9, 20, 5, -2, 0);
    // Forward box: u's last center 106 shifted by 2 * 2; backward box: v's first center 20 shifted by -2 * (-2).
    const double expected = giou_oracle(Box::from_center(110, 5, 4, 8), Box::from_center(24, 5, 4, 8));
    const auto m = motion_consistency(u, v);
    ASSERT_TRUE(m);
    EXPECT_NEAR(*m, expected, kTol);
    EXPECT_LT(*m, 0.0);
}

TEST(MotionConsistency, RandomLinearTrajectoriesGiveOne) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> pos(-100, 100), vel(-5, 5), size(2, 30);
    std::uniform_int_distribution<int> len(2, 6), gap(1, 40);
    for (int i = 0; i < 100; ++i) {
        SceneBuilder b;
        const double cx = pos(rng), cy = pos(rng), vx = vel(rng), vy = vel(rng), w = size(rng), h = size(rng);
        const int n1 = len(rng), g = gap(rng), n2 = len(rng);
        const auto u = linear(b, 0, n1 - 1, cx, cy, vx, vy, w, h);
        const int s = n1 - 1 + g;
        const auto v = linear(b, s, s + n2 - 1, cx + vx * s, cy + vy * s, vx, vy, w, h);
        EXPECT_NEAR(*motion_consistency(u, v), 1.0, 1e-9);
    }
}

TEST(MotionConsistency, AbsentForSingletons) {
    SceneBuilder b;
    const auto u = single(b, 0, {0, 0, 2, 2});
    const auto v = linear(b, 3, 5, 0, 0, 1, 0);
    EXPECT_FALSE(motion_consistency(u, v));
    EXPECT_FALSE(motion_consistency(v, single(b, 9, {0, 0, 2, 2})));
}

TEST(EdgeFeatureVector, AdjacentIdenticalSingletons) {
    SceneBuilder b;
    const auto u = single(b, 4, {1, 1, 3, 3}, {0.3f, 0.4f});
    const auto v = single(b, 5, {1, 1, 3, 3}, {0.3f, 0.4f});
    const auto f = edge_feature_vector(u, v);
    const std::array<double, 8> expected{0, 0, 0, 0, 1, 0, 0, 0};
    for (int k = 0; k < 8; ++k) EXPECT_NEAR(f[k], expected[k], kTol) << k;
}

TEST(EdgeFeatureVector, MatchesComponents) {
    SceneBuilder b(2);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> pos(0, 50), size(2, 10);
    std::uniform_real_distribution<float> e(-1, 1);
    for (int i = 0; i < 30; ++i) {
        std::vector<Detection> du, dv;
        for (int f = 0; f < 3; ++f) du.push_back(b.add(f, {pos(rng), pos(rng), size(rng), size(rng)}, {e(rng), e(rng)}));
        for (int f = 6; f < 6 + 1 + i % 3; ++f) dv.push_back(b.add(f, {pos(rng), pos(rng), size(rng), size(rng)}, {e(rng), e(rng)}));
        const auto u = make_tracklet(du, b.table());
        const auto v = make_tracklet(dv, b.table());
        const auto f = edge_feature_vector(u, v);
        ASSERT_EQ(f.size(), 8u);
        const auto p = position_features(u, v);
        for (int k = 0; k < 4; ++k) EXPECT_NEAR(f[k], p[k], kTol);
        EXPECT_NEAR(f[4], time_distance(u, v), kTol);
        EXPECT_NEAR(f[5], appearance_distance(u, v), kTol);
        const auto m = motion_consistency(u, v);
        EXPECT_NEAR(f[6], m.value_or(0.0), kTol);
        EXPECT_EQ(f[7], m ? 1.0 : 0.0);
    }
}
