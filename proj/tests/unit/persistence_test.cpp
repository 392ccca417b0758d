#include <doctest.h>

#include "bss/datagen.hpp"
#include "bss/persistence.hpp"
#include "bss/pipelines.hpp"
#include "support.hpp"

using namespace bss;
using test::kind_of;

namespace {

nlohmann::json reparse(const nlohmann::ordered_json& j) { return nlohmann::json::parse(j.dump()); }

GeneratorConfig config() {
    GeneratorConfig c;
    c.seed = 13;
    c.station_map = random_station_layout(5, 13);
    c.n_users = 3;
    c.trips_per_user = 30;
    c.habit_strength = 0.8;
    return c;
}

}  // namespace

TEST_CASE("classifier and regressor round trips") {
    const auto c = config();
    const auto trips = generate_trips(c);
    const auto data = destination_dataset(trips, c.station_map);
    for (auto kind : {ClassifierKind::NaiveBayes, ClassifierKind::LogisticRegression}) {
        ClassifierHyperparameters h;
        h.kind = kind;
        h.l2 = 0.01;
        if (kind == ClassifierKind::NaiveBayes) h.feature_kinds = departure_feature_kinds(c.station_map.size());
        const auto model = train_classifier(data, station_labels(c.station_map), h);
        CHECK(classifier_from_json(reparse(to_json(model))) == model);
    }
    const auto reg = train_regressor(data.X, duration_targets(trips), 0.3);
    CHECK(regressor_from_json(reparse(to_json(reg))) == reg);
    CHECK(station_map_from_json(reparse(to_json(c.station_map))) == c.station_map);
}

TEST_CASE("ESN and window classifier round trips") {
    auto c = config();
    c.gps_noise_std = 5.0;
    const auto trajectories = generate_trajectories(c, generate_trips(c));
    ReservoirConfig rc;
    rc.n_reservoir = 30;
    const auto esn = train_esn(init_reservoir(rc, c.station_map), trajectories);
    const auto back = esn_from_json(reparse(to_json(esn)));
    CHECK(back.config == esn.config);
    CHECK(back.readout == esn.readout);
    CHECK(Matrix(back.recurrent) == Matrix(esn.recurrent));
    CHECK(back.input_weights == esn.input_weights);
    CHECK(back.trained_on == esn.trained_on);
    const auto p1 = predict_from_prefix(esn, trajectories[3], 0.6);
    const auto p2 = predict_from_prefix(back, trajectories[3], 0.6);
    CHECK(p1.probabilities == p2.probabilities);
    CHECK(p1.expected_arrival_time == p2.expected_arrival_time);

    const auto window = sliding_window_baseline(trajectories, c.station_map, 2, {});
    const auto wback = window_classifier_from_json(reparse(to_json(window)));
    CHECK(wback.model == window.model);
    CHECK(wback.window_len == 2);
}

TEST_CASE("registry round trip keeps predictions") {
    const auto c = config();
    const auto result = assess_userprofile(generate_trips(c), c.station_map, default_grid(), {3, 1, 0.2});
    const auto back = registry_from_json(reparse(to_json(result.registry)));
    for (const char* user : {"u0", "u1", "u2", "nobody"}) {
        const auto a = result.registry.predict(user, "s01", 1704100000);
        const auto b = back.predict(user, "s01", 1704100000);
        CHECK(a.destination.probabilities == b.destination.probabilities);
        CHECK(a.duration_seconds == b.duration_seconds);
        CHECK(a.source == b.source);
    }
}

TEST_CASE("schema mismatches are reported") {
    const auto c = config();
    const auto reg = train_regressor(destination_dataset(generate_trips(c), c.station_map).X,
                                     duration_targets(generate_trips(c)), 1.0);
    const auto doc = reparse(to_json(reg));
    CHECK(kind_of([&] { classifier_from_json(doc); }) == ErrorKind::SchemaMismatch);
    CHECK(kind_of([&] { esn_from_json(doc); }) == ErrorKind::SchemaMismatch);
    CHECK(kind_of([&] { registry_from_json(nlohmann::json::parse("[1, 2]")); }) == ErrorKind::SchemaMismatch);
    auto broken = doc;
    broken["weights"] = "oops";
    CHECK(kind_of([&] { regressor_from_json(broken); }) == ErrorKind::SchemaMismatch);
}
