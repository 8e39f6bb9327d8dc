#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "auralab/analysis.hpp"
#include "auralab/rng.hpp"
#include "box_oracle.hpp"

using namespace auralab;
using box_oracle::oracle_box;
using box_oracle::OracleBox;

namespace {

LevelTrack make_track(std::vector<double> values) {
    LevelTrack t;
    t.values_db = std::move(values);
    return t;
}

} // namespace

TEST_CASE("gate keeps frames near the peak and above the floor") {
    const auto all = gate_frames(make_track({-7.0, -7.0, -7.0}), 40.0);
    CHECK(std::count(all.begin(), all.end(), true) == 3);

    const auto none = gate_frames(make_track({-120.0, -120.0}), 40.0);
    CHECK(std::count(none.begin(), none.end(), true) == 0);

    const auto mixed = gate_frames(make_track({0.0, -30.0, -50.0}), 40.0);
    CHECK(mixed == std::vector<bool>{true, true, false});
}

TEST_CASE("boxplot of 1..5 has median 3 and quartiles 2 and 4") {
    const BoxStats s = boxplot_stats({5.0, 3.0, 1.0, 4.0, 2.0});
    CHECK(s.median == doctest::Approx(3.0));
    CHECK(s.q1 == doctest::Approx(2.0));
    CHECK(s.q3 == doctest::Approx(4.0));
    CHECK(s.iqr == doctest::Approx(2.0));
    CHECK(s.whisker_low == doctest::Approx(1.0));
    CHECK(s.whisker_high == doctest::Approx(5.0));
    CHECK(s.outliers.empty());
    CHECK(s.n == 5);
}

TEST_CASE("degenerate IQR still isolates the outlier") {
    const BoxStats s = boxplot_stats({0.0, 0.0, 0.0, 0.0, 10.0});
    CHECK(s.median == 0.0);
    CHECK(s.q1 == 0.0);
    CHECK(s.q3 == 0.0);
    CHECK(s.iqr == 0.0);
    CHECK(s.whisker_low == 0.0);
    CHECK(s.whisker_high == 0.0);
    REQUIRE(s.outliers.size() == 1);
    CHECK(s.outliers[0] == 10.0);
}

TEST_CASE("boxplot matches the sort-based oracle on random data") {
    Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 400);
        std::vector<double> samples(n);
        for (auto& v : samples) {
            v = 10.0 * (rng.uniform() - 0.5);
            if (rng.uniform() < 0.1) v *= 40.0; // sprinkle outliers
            if (rng.uniform() < 0.2) v = 0.0;   // and ties
        }
        const BoxStats s = boxplot_stats(samples);
        const OracleBox o = oracle_box(samples);
        CHECK(s.median == doctest::Approx(o.median).epsilon(1e-12));
        CHECK(s.q1 == doctest::Approx(o.q1).epsilon(1e-12));
        CHECK(s.q3 == doctest::Approx(o.q3).epsilon(1e-12));
        CHECK(s.whisker_low == doctest::Approx(o.wlow).epsilon(1e-12));
        CHECK(s.whisker_high == doctest::Approx(o.whigh).epsilon(1e-12));
        REQUIRE(s.outliers.size() == o.outliers.size());
        for (std::size_t i = 0; i < s.outliers.size(); ++i)
            CHECK(s.outliers[i] == doctest::Approx(o.outliers[i]).epsilon(1e-12));
        CHECK(s.outliers.size() + (s.n - s.outliers.size()) == s.n);
    }
    CHECK_THROWS_AS((void)boxplot_stats({}), std::invalid_argument);
}

TEST_CASE("boxplot is permutation-invariant and translation-equivariant") {
    Rng rng(55);
    std::vector<double> samples(101);
    for (auto& v : samples) v = 6.0 * (rng.uniform() - 0.5);
    samples[7] = 99.0; // guaranteed outlier

    const BoxStats base = boxplot_stats(samples);
    std::vector<double> shuffled = samples;
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[static_cast<std::size_t>(rng.uniform() * i)]);
    const BoxStats reshuffled = boxplot_stats(shuffled);
    CHECK(base.median == reshuffled.median);
    CHECK(base.q1 == reshuffled.q1);
    CHECK(base.q3 == reshuffled.q3);
    CHECK(base.whisker_low == reshuffled.whisker_low);
    CHECK(base.whisker_high == reshuffled.whisker_high);

    const double shift = 12.75;
    std::vector<double> shifted = samples;
    for (auto& v : shifted) v += shift;
    const BoxStats moved = boxplot_stats(shifted);
    CHECK(moved.median == doctest::Approx(base.median + shift).epsilon(1e-12));
    CHECK(moved.q1 == doctest::Approx(base.q1 + shift).epsilon(1e-12));
    CHECK(moved.q3 == doctest::Approx(base.q3 + shift).epsilon(1e-12));
    CHECK(moved.whisker_low == doctest::Approx(base.whisker_low + shift).epsilon(1e-12));
    CHECK(moved.whisker_high == doctest::Approx(base.whisker_high + shift).epsilon(1e-12));
    REQUIRE(moved.outliers.size() == base.outliers.size());
    for (std::size_t i = 0; i < moved.outliers.size(); ++i)
        CHECK(moved.outliers[i] == doctest::Approx(base.outliers[i] + shift).epsilon(1e-12));
}

TEST_CASE("verdicts reproduce the reference room classifications") {
    // anechoic-room style: median 0.01 dB, q3 well under the JND
    BoxStats anechoic;
    anechoic.median = 0.01;
    anechoic.q3 = 0.02;
    CHECK(jnd_verdict(anechoic).classification == Audibility::transparent);

    // booth-1 style: median 1.8 dB
    BoxStats booth1;
    booth1.median = 1.8;
    booth1.q3 = 2.4;
    CHECK(jnd_verdict(booth1).classification == Audibility::audible);

    // booth-2 style: median 0.3 dB, q3 0.45 dB
    BoxStats booth2;
    booth2.median = 0.3;
    booth2.q3 = 0.45;
    CHECK(jnd_verdict(booth2).classification == Audibility::transparent);

    // median inside, q3 outside: marginal
    BoxStats edge;
    edge.median = 0.6;
    edge.q3 = 1.4;
    CHECK(jnd_verdict(edge).classification == Audibility::marginal);

    // negative excursions count via |median|
    BoxStats cancel;
    cancel.median = -1.5;
    cancel.q3 = 0.0;
    CHECK(jnd_verdict(cancel).classification == Audibility::audible);
}

TEST_CASE("raising the jnd never pushes a verdict toward audible") {
    Rng rng(808);
    auto rank = [](Audibility a) {
        return a == Audibility::transparent ? 0 : a == Audibility::marginal ? 1 : 2;
    };
    for (int trial = 0; trial < 200; ++trial) {
        BoxStats s;
        s.median = 4.0 * (rng.uniform() - 0.5);
        s.q3 = s.median + 2.0 * rng.uniform();
        const double jnd_small = 0.2 + 2.0 * rng.uniform();
        const double jnd_large = jnd_small + 2.0 * rng.uniform();
        CHECK(rank(jnd_verdict(s, jnd_large).classification) <=
              rank(jnd_verdict(s, jnd_small).classification));
    }
}

TEST_CASE("masked_values picks gated frames") {
    const LevelTrack track = make_track({1.0, 2.0, 3.0});
    const auto picked = masked_values(track, {true, false, true});
    CHECK(picked == std::vector<double>{1.0, 3.0});
    CHECK_THROWS_AS((void)masked_values(track, {true}), std::invalid_argument);
}
