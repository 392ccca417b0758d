#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "bss/datagen.hpp"
#include "bss/formats.hpp"
#include "support.hpp"

using namespace bss;
using test::kind_of;

namespace {

GeneratorConfig small_config(std::uint64_t seed = 3) {
    GeneratorConfig c;
    c.seed = seed;
    c.station_map = random_station_layout(8, seed);
    c.n_users = 4;
    c.trips_per_user = 30;
    return c;
}

}  // namespace

TEST_CASE("trip count, validity and determinism") {
    const auto c = small_config();
    const auto trips = generate_trips(c);
    CHECK(trips.size() == 120);
    for (const auto& t : trips) CHECK_NOTHROW(validate_trip(t, c.station_map));
    CHECK(serialize_trip_log(trips) == serialize_trip_log(generate_trips(c)));
    CHECK(serialize_trip_log(trips) != serialize_trip_log(generate_trips(small_config(4))));
}

TEST_CASE("full habit strength repeats one origin-destination pair") {
    auto c = small_config();
    c.n_users = 1;
    c.trips_per_user = 10;
    c.habit_strength = 1.0;
    const auto trips = generate_trips(c);
    REQUIRE(trips.size() == 10);
    for (const auto& t : trips) {
        CHECK(t.leave_station == trips[0].leave_station);
        CHECK(t.return_station == trips[0].return_station);
    }
}

TEST_CASE("zero habit strength spreads destinations uniformly") {
    GeneratorConfig c;
    c.seed = 11;
    c.station_map = random_station_layout(10, 11);
    c.n_users = 50;
    c.trips_per_user = 100;
    c.habit_strength = 0.0;
    std::map<StationId, int> counts;
    for (const auto& t : generate_trips(c)) ++counts[t.return_station];
    const double n = 5000.0, p = 0.1;
    const double sigma = std::sqrt(n * p * (1 - p));
    CHECK(counts.size() == 10);
    for (const auto& [station, count] : counts) CHECK(std::abs(count - n * p) <= 3 * sigma);
}

TEST_CASE("invalid generator configs are rejected") {
    auto c = small_config();
    c.habit_strength = 1.5;
    CHECK(kind_of([&] { generate_trips(c); }) == ErrorKind::InvalidConfig);
    c = small_config();
    c.n_users = 0;
    CHECK(kind_of([&] { generate_trips(c); }) == ErrorKind::InvalidConfig);
    c = small_config();
    c.speed_mps = 0.0;
    CHECK(kind_of([&] { generate_trips(c); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("noise-free trajectories end exactly at the destination") {
    auto c = small_config();
    c.gps_noise_std = 0.0;
    const auto trips = generate_trips(c);
    const auto trajectories = generate_trajectories(c, trips);
    REQUIRE(trajectories.size() == trips.size());
    for (std::size_t i = 0; i < trips.size(); ++i) {
        const auto& t = trajectories[i];
        CHECK_NOTHROW(validate_trajectory(t));
        CHECK(t.points.back().pos == c.station_map.at(trips[i].return_station).position);
        CHECK(t.points.front().pos == c.station_map.at(trips[i].leave_station).position);
        CHECK(t.points.back().t == static_cast<double>(trips[i].return_time));
        REQUIRE(t.truth.has_value());
        CHECK(t.truth->destination == trips[i].return_station);
    }
}

TEST_CASE("sample period equal to the duration gives two points") {
    auto rng = keyed_engine(1);
    const auto points = sample_path({{0, 0}, {100, 0}}, 0.0, 60.0, 60.0, 0.0, rng);
    REQUIRE(points.size() == 2);
    CHECK(points[0].pos == Vec2{0, 0});
    CHECK(points[1].pos == Vec2{100, 0});
}

TEST_CASE("terminal GPS error follows the Rayleigh mean") {
    auto c = small_config(9);
    c.n_users = 10;
    c.trips_per_user = 100;
    c.gps_noise_std = 25.0;
    const auto trips = generate_trips(c);
    const auto trajectories = generate_trajectories(c, trips);
    double total = 0.0;
    for (std::size_t i = 0; i < trips.size(); ++i)
        total += distance(trajectories[i].points.back().pos, c.station_map.at(trips[i].return_station).position);
    const double mean = total / static_cast<double>(trips.size());
    const double expected = c.gps_noise_std * std::sqrt(std::numbers::pi / 2.0);
    CHECK(mean >= 0.8 * expected);
    CHECK(mean <= 1.2 * expected);
}

TEST_CASE("fork scenario shares the first leg") {
    ForkScenarioConfig c;
    c.n_trajectories = 40;
    const auto fork = generate_fork_scenario(c);
    CHECK(fork.stations.size() == 3);
    std::set<StationId> destinations;
    for (const auto& t : fork.trajectories) {
        destinations.insert(t.truth->destination);
        for (const auto& p : t.points)
            if (p.pos.x < c.leg_length_m - 1e-6) CHECK(std::abs(p.pos.y) < 1e-6);
    }
    CHECK(destinations == std::set<StationId>{"A", "B"});
}

TEST_CASE("event logs generated from trips replay cleanly") {
    const auto c = small_config();
    const auto trips = generate_trips(c);
    const auto events = events_from_trips(trips, c.station_map, 3);
    auto state = SystemState::empty(c.station_map);
    for (const auto& e : events) REQUIRE_NOTHROW(apply_event_in_place(state, c.station_map, e));
    CHECK_FALSE(check_invariants(state, c.station_map).has_value());
    CHECK(state.total_bikes() == 3 * c.station_map.size());
    CHECK(parse_event_log(serialize_event_log(events)).size() == events.size());
}

TEST_CASE("trip log parsing") {
    const std::string good = std::string(kTripLogHeader) + "\nu1,s0,100,s1,200\nu2,s1,150,s0,400\n";
    const auto trips = parse_trip_log(good);
    REQUIRE(trips.size() == 2);
    CHECK(trips[1] == TripRecord{"u2", "s1", 150, "s0", 400});
    CHECK(serialize_trip_log(trips) == good);

    const std::string bad = std::string(kTripLogHeader) + "\nu1,s0,100,s1,100\n";
    try {
        parse_trip_log(bad);
        FAIL("expected MalformedRow");
    } catch (const MalformedRow& e) {
        CHECK(e.line_no() == 2);
    }
    CHECK(kind_of([] { parse_trip_log("wrong,header\n"); }) == ErrorKind::MalformedRow);
    CHECK(kind_of([] { parse_trip_log(std::string(kTripLogHeader) + "\nu1,s0,x,s1,100\n"); }) == ErrorKind::MalformedRow);
}

TEST_CASE("trajectory, event and station-map round trips") {
    auto c = small_config();
    c.gps_noise_std = 7.5;
    c.gps_sample_period = 7.3;
    const auto trajectories = generate_trajectories(c, generate_trips(c));
    CHECK(parse_trajectories(serialize_trajectories(trajectories)) == trajectories);
    CHECK(parse_station_map(serialize_station_map(c.station_map)) == c.station_map);

    const std::string log = std::string(kEventLogHeader) + "\ndeploy,b1,,s0,0\npickup,b1,u,s0,5\nreturn,b1,,s1,9\n";
    CHECK(serialize_event_log(parse_event_log(log)) == log);
    const std::string bad = std::string(kEventLogHeader) + "\nteleport,b1,,s0,0\n";
    CHECK(kind_of([&] { parse_event_log(bad); }) == ErrorKind::MalformedRow);
}
