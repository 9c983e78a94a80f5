#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "vitalcast/core.hpp"
#include "vitalcast/rng.hpp"

using namespace vitalcast;

namespace {

PredictionSeries make_prediction(const std::string& pid, const std::string& sig,
                                 std::vector<ObservedValue> values, const std::string& model = "m") {
    return {VitalSeries(pid, sig, 1.0, std::move(values)), model};
}

}  // namespace

TEST_CASE("series construction enforces invariants") {
    CHECK_THROWS_AS(VitalSeries("p", "s", 0.0, {}), std::invalid_argument);
    CHECK_THROWS_AS(VitalSeries("p", "s", 1.0, {{2, 1.0}, {2, 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(VitalSeries("p", "s", 1.0, {{3, 1.0}, {1, 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(VitalSeries("p", "s", 1.0, {{-1, 1.0}}), std::invalid_argument);

    const VitalSeries s("p", "hr", 2.0, {{0, 1.0}, {1, std::nullopt}, {4, 3.0}});
    CHECK(s.size() == 3);
    CHECK(s.value_at(0) == 1.0);
    CHECK_FALSE(s.value_at(1).has_value());
    CHECK_FALSE(s.value_at(2).has_value());
    CHECK(s.value_at(4) == 3.0);
    CHECK(s.non_missing_indices() == std::vector<std::int64_t>{0, 4});
}

TEST_CASE("align intersects non-missing indices") {
    const VitalSeries truth("p", "hr", 1.0, {{0, 1.0}, {1, 2.0}, {2, 3.0}});
    const auto pred = make_prediction("p", "hr", {{1, 2.5}, {2, 3.5}, {3, 4.5}});
    const auto pair = align(truth, pred);
    CHECK(pair.indices == std::vector<std::int64_t>{1, 2});
    CHECK(pair.truth_values == std::vector<double>{2.0, 3.0});
    CHECK(pair.predicted_values == std::vector<double>{2.5, 3.5});
}

TEST_CASE("align keeps identical index sets and flags disjoint ones") {
    const VitalSeries truth("p", "hr", 1.0, {{0, 1.0}, {1, 2.0}});
    const auto same = make_prediction("p", "hr", {{0, 1.0}, {1, 2.0}});
    CHECK(align(truth, same).indices == std::vector<std::int64_t>{0, 1});

    const auto disjoint = make_prediction("p", "hr", {{5, 1.0}, {6, 2.0}});
    const auto pair = align(truth, disjoint);
    CHECK(pair.empty());
    CHECK(pair.indices.empty());
}

TEST_CASE("align skips explicit missing markers") {
    const VitalSeries truth("p", "hr", 1.0, {{0, 1.0}, {1, std::nullopt}, {2, 3.0}});
    const auto pred = make_prediction("p", "hr", {{0, 1.0}, {1, 2.0}, {2, std::nullopt}});
    CHECK(align(truth, pred).indices == std::vector<std::int64_t>{0});
}

TEST_CASE("align rejects mismatched identity") {
    const VitalSeries truth("p1", "hr", 1.0, {{0, 1.0}});
    CHECK_THROWS_AS(align(truth, make_prediction("p2", "hr", {{0, 1.0}})), MismatchedIdentity);
    CHECK_THROWS_AS(align(truth, make_prediction("p1", "bp", {{0, 1.0}})), MismatchedIdentity);
}

TEST_CASE("align is idempotent on aligned members") {
    const VitalSeries truth("p", "hr", 1.0, {{0, 1.0}, {1, std::nullopt}, {3, 2.0}, {4, 5.0}});
    const auto pred = make_prediction("p", "hr", {{0, 1.5}, {1, 1.0}, {3, 2.5}, {7, 0.0}});
    const auto first = align(truth, pred);
    const auto second = align(first.truth, first.prediction);
    CHECK(first.indices == second.indices);
}

TEST_CASE("rmse basics") {
    const VitalSeries truth("p", "hr", 1.0, {{0, 0.0}, {1, 0.0}});
    CHECK(rmse(align(truth, make_prediction("p", "hr", {{0, 0.0}, {1, 0.0}}))) == 0.0);
    const auto pair = align(truth, make_prediction("p", "hr", {{0, 3.0}, {1, 4.0}}));
    CHECK(rmse(pair) == Catch::Approx(std::sqrt(12.5)).epsilon(1e-15));

    const auto empty = align(truth, make_prediction("p", "hr", {{9, 1.0}}));
    CHECK_THROWS_AS(rmse(empty), EmptyAlignment);
}

TEST_CASE("rmse matches an independent recomputation on random data") {
    rng::Stream rng(1234);
    std::vector<ObservedValue> tv, pv;
    std::vector<double> tvals, pvals;
    for (int i = 0; i < 100; ++i) {
        const double a = rng.uniform(-50.0, 50.0);
        const double b = a + rng.normal(0.0, 3.0);
        tv.push_back({i, a});
        pv.push_back({i, b});
        tvals.push_back(a);
        pvals.push_back(b);
    }
    const VitalSeries truth("p", "hr", 1.0, tv);
    const auto got = rmse(align(truth, make_prediction("p", "hr", pv)));
    CHECK(got == Catch::Approx(oracles::reference_rmse(tvals, pvals)).epsilon(1e-13));
}

TEST_CASE("rmse is zero iff all aligned values are equal") {
    rng::Stream rng(77);
    std::vector<ObservedValue> tv, pv;
    for (int i = 0; i < 50; ++i) {
        const double a = rng.uniform(-10.0, 10.0);
        tv.push_back({i, a});
        pv.push_back({i, a});
    }
    const VitalSeries truth("p", "hr", 1.0, tv);
    CHECK(rmse(align(truth, make_prediction("p", "hr", pv))) == 0.0);

    pv[20].value = *pv[20].value + 1e-9;
    CHECK(rmse(align(truth, make_prediction("p", "hr", pv))) > 0.0);
}

TEST_CASE("window rmse basics") {
    const VitalSeries truth("p", "hr", 1.0, {{0, 1.0}, {1, 2.0}, {2, 3.0}});
    const auto pred = make_prediction("p", "hr", {{0, 1.5}, {1, 2.5}, {2, 3.5}});
    const auto pair = align(truth, pred);

    const EventAnnotation whole{"p", "hr", 0, 2, EventType::annotated};
    CHECK(window_rmse(pair, whole) == Catch::Approx(rmse(pair)).epsilon(1e-15));

    const VitalSeries t2("p", "hr", 1.0, {{0, 0.0}, {1, 5.0}});
    const auto pair2 = align(t2, make_prediction("p", "hr", {{0, 0.0}, {1, 3.0}}));
    CHECK(window_rmse(pair2, {"p", "hr", 1, 1, EventType::surge}) == Catch::Approx(2.0));

    CHECK_THROWS_AS(window_rmse(pair, EventAnnotation{"p", "hr", 50, 60, EventType::surge}),
                    EmptyWindow);
}

TEST_CASE("window rmse isolates errors concentrated in the event window") {
    // Error only inside [40, 49]: window RMSE is sqrt(mean of those squares),
    // overall RMSE is diluted by the clean remainder.
    std::vector<ObservedValue> tv, pv;
    double window_sq = 0.0;
    for (int i = 0; i < 100; ++i) {
        tv.push_back({i, 10.0});
        const bool inside = i >= 40 && i <= 49;
        const double err = inside ? 4.0 : 0.0;
        pv.push_back({i, 10.0 + err});
        if (inside) window_sq += err * err;
    }
    const VitalSeries truth("p", "hr", 1.0, tv);
    const auto pair = align(truth, make_prediction("p", "hr", pv));
    const EventAnnotation ev{"p", "hr", 40, 49, EventType::sudden_drop};
    const double w = window_rmse(pair, ev);
    CHECK(w == Catch::Approx(std::sqrt(window_sq / 10.0)));
    CHECK(w > rmse(pair));
}

TEST_CASE("disjoint windows recombine to the overall rmse") {
    rng::Stream rng(99);
    std::vector<ObservedValue> tv, pv;
    for (int i = 0; i < 90; ++i) {
        const double a = rng.uniform(0.0, 100.0);
        tv.push_back({i, a});
        pv.push_back({i, a + rng.normal(0.0, 2.0)});
    }
    const VitalSeries truth("p", "hr", 1.0, tv);
    const auto pair = align(truth, make_prediction("p", "hr", pv));

    double weighted_sq = 0.0;
    std::size_t total = 0;
    for (std::int64_t start = 0; start < 90; start += 30) {
        const EventAnnotation ev{"p", "hr", start, start + 29, EventType::annotated};
        const double w = window_rmse(pair, ev);
        weighted_sq += w * w * 30.0;
        total += 30;
    }
    const double combined = std::sqrt(weighted_sq / static_cast<double>(total));
    CHECK(combined == Catch::Approx(rmse(pair)).epsilon(1e-12));
}

TEST_CASE("event annotation validation") {
    EventAnnotation bad{"p", "hr", 5, 4, EventType::surge};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    EventAnnotation ok{"p", "hr", 5, 5, EventType::surge};
    CHECK(ok.length() == 1);
}

TEST_CASE("event type string round trip") {
    for (EventType t : {EventType::sudden_drop, EventType::surge, EventType::trend,
                        EventType::range, EventType::annotated}) {
        CHECK(event_type_from_string(to_string(t)) == t);
    }
    CHECK_FALSE(event_type_from_string("bogus").has_value());
}

TEST_CASE("parameter bundles validate") {
    NormalRangeParams p;
    p.validate();
    p.low_threshold = p.high_threshold;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    NormalRangeParams q;
    q.amplitude = 0.0;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);

    TrendParams t;
    t.validate();
    t.lookback_n = 1;
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
    TrendParams t2;
    t2.weight_over = 0.0;
    t2.weight_under = 0.0;
    CHECK_THROWS_AS(t2.validate(), std::invalid_argument);
}
