#include "opgame/dynamics.hpp"

#include "opgame/graph_model.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace opgame;

namespace {

Population make_population(const Mat& x) {
    Population p;
    p.opinions = x;
    p.initial_opinions = x;
    return p;
}

Mat random_opinions(std::mt19937_64& rng, int n, int d, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Mat x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = u(rng);
    return x;
}

Vec random_vec(std::mt19937_64& rng, int n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = u(rng);
    return v;
}

// Truncated micro-time series in the convention of the closed form: the
// forcing terms are summed from s = 1, which equals running the literal
// recursion with exposures pre-scaled by one decay step.
Vec micro_series_oracle(const Mat& w, const Vec& p_a, const Vec& p_d,
                        const DynamicsParams& dp, int s_max) {
    const Vec pa1 = std::exp(-dp.kappa_a) * p_a;
    const Vec pd1 = std::exp(-dp.kappa_d) * p_d;
    const auto ys = propagate_micro(w, pa1, pd1, dp, s_max);
    Vec total = Vec::Zero(w.rows());
    for (const auto& y : ys) total += y;
    return total;
}

} // namespace

TEST_CASE("exposure is 1 where the message sits on the opinion") {
    Mat x = Mat::Constant(3, 2, 0.4);
    const Population p = make_population(x);
    const Vec u = Vec::Constant(2, 0.4);
    const Vec e = exposure_probabilities(u, p, {});
    for (int i = 0; i < 3; ++i) CHECK(e(i) == doctest::Approx(1.0));
}

TEST_CASE("exposure saturates at the clamp floor for far messages") {
    Mat x = Mat::Zero(2, 1);
    const Population p = make_population(x);
    Vec u(1);
    u << 1e8;
    const Vec e = exposure_probabilities(u, p, {});
    CHECK(e(0) == kKernelFloor);
    CHECK(e(1) == kKernelFloor);
}

TEST_CASE("exposure matches direct kernel evaluation") {
    Mat x(2, 2);
    x << 0.0, 0.0, 1.0, 0.0;
    const Population p = make_population(x);
    const Vec e = exposure_probabilities(Vec::Zero(2), p, {});
    CHECK(e(0) == doctest::Approx(1.0));
    CHECK(e(1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("micro propagation cancels under symmetric forcing") {
    Mat w(2, 2);
    w << 0.0, 1.0, 1.0, 0.0;
    const Vec p_both = Vec::Constant(2, 0.6);
    DynamicsParams dp;
    dp.kappa_a = dp.kappa_d = 0.7;
    const auto ys = propagate_micro(w, p_both, p_both, dp, 20);
    for (const auto& y : ys) CHECK(y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("micro propagation rejects an empty horizon") {
    Mat w(2, 2);
    w << 0.0, 1.0, 1.0, 0.0;
    const Vec p = Vec::Constant(2, 0.5);
    CHECK_THROWS_AS(propagate_micro(w, p, p, {}, 0), std::invalid_argument);
}

TEST_CASE("one step without propagation is the forcing difference") {
    Mat w(2, 2);
    w << 0.0, 1.0, 1.0, 0.0;
    Vec p_a(2), p_d(2);
    p_a << 0.2, 0.8;
    p_d << 0.5, 0.1;
    DynamicsParams dp;
    dp.alpha = 0.0;
    const auto ys = propagate_micro(w, p_a, p_d, dp, 1);
    REQUIRE(ys.size() == 2);
    CHECK((ys[1] - (p_d - p_a)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("closed form matches the micro-series oracle") {
    std::mt19937_64 rng(31);
    DynamicsParams dp;
    dp.alpha = 0.3;
    dp.kappa_a = dp.kappa_d = 0.5;
    const Population p = make_population(random_opinions(rng, 20, 2, 2.0));
    const Mat w = build_weight_matrix(p, {});
    const Vec p_a = random_vec(rng, 20, 0.0, 1.0);
    const Vec p_d = random_vec(rng, 20, 0.0, 1.0);

    const Vec closed = accumulated_evidence(w, p_a, p_d, dp);
    const Vec series = micro_series_oracle(w, p_a, p_d, dp, 500);
    CHECK((closed - series).norm() / closed.norm() < 1e-8);
}

TEST_CASE("micro series converges geometrically") {
    std::mt19937_64 rng(37);
    DynamicsParams dp;
    dp.alpha = 0.6;
    dp.kappa_a = 0.4;
    dp.kappa_d = 0.9;
    const Population p = make_population(random_opinions(rng, 10, 2, 1.5));
    const Mat w = build_weight_matrix(p, {});
    const Vec p_a = random_vec(rng, 10, 0.0, 1.0);
    const Vec p_d = random_vec(rng, 10, 0.0, 1.0);

    const Vec s200 = micro_series_oracle(w, p_a, p_d, dp, 200);
    const Vec s400 = micro_series_oracle(w, p_a, p_d, dp, 400);
    CHECK((s200 - s400).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((accumulated_evidence(w, p_a, p_d, dp) - s200).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("zero sharing probability reduces to the forcing weights") {
    Mat w(3, 3);
    w << 0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0;
    Vec p_a(3), p_d(3);
    p_a << 0.1, 0.2, 0.3;
    p_d << 0.9, 0.8, 0.7;
    DynamicsParams dp;
    dp.alpha = 0.0;
    dp.kappa_a = 0.4;
    dp.kappa_d = 1.1;
    const double c_a = std::exp(-0.4) / (1.0 - std::exp(-0.4));
    const double c_d = std::exp(-1.1) / (1.0 - std::exp(-1.1));
    const Vec expected = c_d * p_d - c_a * p_a;
    CHECK((accumulated_evidence(w, p_a, p_d, dp) - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("swapping players negates the accumulated evidence") {
    std::mt19937_64 rng(41);
    for (int rep = 0; rep < 30; ++rep) {
        const Population p = make_population(random_opinions(rng, 8, 2, 2.0));
        const Mat w = build_weight_matrix(p, {});
        const Vec p_a = random_vec(rng, 8, 0.0, 1.0);
        const Vec p_d = random_vec(rng, 8, 0.0, 1.0);
        DynamicsParams dp;
        dp.alpha = 0.5;
        dp.kappa_a = 0.3;
        dp.kappa_d = 1.4;
        DynamicsParams swapped = dp;
        std::swap(swapped.kappa_a, swapped.kappa_d);
        const Vec y = accumulated_evidence(w, p_a, p_d, dp);
        const Vec y_swapped = accumulated_evidence(w, p_d, p_a, swapped);
        CHECK((y + y_swapped).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("raising defender exposure never lowers evidence") {
    std::mt19937_64 rng(43);
    const Population p = make_population(random_opinions(rng, 12, 2, 2.0));
    const Mat w = build_weight_matrix(p, {});
    const Vec p_a = random_vec(rng, 12, 0.0, 1.0);
    Vec p_d = random_vec(rng, 12, 0.0, 0.9);
    DynamicsParams dp;
    dp.alpha = 0.7;
    const Vec base = accumulated_evidence(w, p_a, p_d, dp);
    for (int i = 0; i < 12; ++i) {
        Vec bumped = p_d;
        bumped(i) += 0.1;
        const Vec y = accumulated_evidence(w, p_a, bumped, dp);
        CHECK((y - base).minCoeff() >= -1e-12);
    }
}

TEST_CASE("sigmoid hits its anchors") {
    DynamicsParams dp;
    CHECK(sigmoid(0.0, dp) == 0.5);
    CHECK(sigmoid(1e6, dp) == doctest::Approx(1.0));
    CHECK(sigmoid(-1e6, dp) == doctest::Approx(0.0));
    CHECK(sigmoid(1.0, dp) == doctest::Approx(0.7310585786300049).epsilon(1e-12));
    CHECK(std::isfinite(sigmoid(-1e12, dp)));
    for (double y : {0.1, 0.9, 3.4, 17.0}) {
        CHECK(sigmoid(y, dp) + sigmoid(-y, dp) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("zero learning rate with full lambda is a fixed point") {
    std::mt19937_64 rng(47);
    Population p = make_population(random_opinions(rng, 6, 2, 2.0));
    p.opinions = random_opinions(rng, 6, 2, 2.0);
    DynamicsParams dp;
    dp.eta = 0.0;
    dp.lambda = 1.0;
    const MessagePair msgs{Vec::Constant(2, -1.0), Vec::Constant(2, 1.0)};
    const Population next = opinion_step(p, msgs, dp, {});
    CHECK(next.opinions == p.opinions);  // bitwise
}

TEST_CASE("zero learning rate contracts to initial opinions") {
    std::mt19937_64 rng(53);
    Population p = make_population(random_opinions(rng, 6, 2, 1.0));
    p.opinions = p.initial_opinions + random_opinions(rng, 6, 2, 1.0);
    DynamicsParams dp;
    dp.eta = 0.0;
    dp.lambda = 0.6;
    const MessagePair msgs{Vec::Zero(2), Vec::Zero(2)};

    const Population once = opinion_step(p, msgs, dp, {});
    const Mat expected = 0.4 * p.initial_opinions + 0.6 * p.opinions;
    CHECK((once.opinions - expected).cwiseAbs().maxCoeff() < 1e-15);

    Population iter = p;
    for (int t = 0; t < 60; ++t) iter = opinion_step(iter, msgs, dp, {});
    CHECK((iter.opinions - iter.initial_opinions).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("saturated evidence moves an opinion onto the defender message") {
    // Both individuals sit at 0 in 1-D; forced evidence saturates the
    // learning rate and the sigmoid, so the update lands on u_d.
    Mat x = Mat::Zero(2, 1);
    Population p = make_population(x);
    DynamicsParams dp;
    dp.eta = 1.0;
    dp.lambda = 1.0;
    const MessagePair msgs{Vec::Constant(1, -0.5), Vec::Constant(1, 0.8)};
    const Vec evidence = Vec::Constant(2, 50.0);
    const Population next = opinion_update_with_evidence(p, msgs, dp, evidence);
    CHECK(next.opinions(0, 0) == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(next.opinions(1, 0) == doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("opinions stay inside the convex hull of anchors and messages") {
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        Population p = make_population(random_opinions(rng, 8, 2, 1.0));
        p.opinions = random_opinions(rng, 8, 2, 1.0);
        DynamicsParams dp;
        dp.eta = 5.0;  // clamp keeps the rate at 1
        dp.lambda = 0.8;
        Vec ua(2), ud(2);
        ua << u(rng), u(rng);
        ud << u(rng), u(rng);
        Population next = p;
        for (int t = 0; t < 5; ++t) next = opinion_step(next, {ua, ud}, dp, {});
        CHECK(next.opinions.maxCoeff() <= 1.0 + 1e-12);
        CHECK(next.opinions.minCoeff() >= -1.0 - 1e-12);
    }
}
