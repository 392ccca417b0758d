#include "bss/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <tuple>

#include "bss/error.hpp"
#include "bss/rng.hpp"

namespace bss {

namespace {

// Stream tags for keyed RNG derivation.
enum Stream : std::uint64_t { kLayout = 1, kHabit = 2, kTrip = 3, kTrajectory = 4, kFork = 5 };

constexpr Timestamp kDay = 86400;

void require(bool ok, const char* what) {
    if (!ok) fail(ErrorKind::InvalidConfig, what);
}

Vec2 lerp(Vec2 a, Vec2 b, double f) { return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)}; }

}  // namespace

void validate(const GeneratorConfig& c) {
    require(c.station_map.size() >= 2, "station_map needs at least 2 stations");
    require(c.n_users > 0, "n_users must be positive");
    require(c.trips_per_user > 0, "trips_per_user must be positive");
    require(c.habit_strength >= 0.0 && c.habit_strength <= 1.0, "habit_strength must lie in [0, 1]");
    require(c.speed_mps > 0.0 && std::isfinite(c.speed_mps), "speed_mps must be positive");
    require(c.gps_noise_std >= 0.0 && std::isfinite(c.gps_noise_std), "gps_noise_std must be nonnegative");
    require(c.gps_sample_period > 0.0 && std::isfinite(c.gps_sample_period), "gps_sample_period must be positive");
    require(c.duration_noise_sigma >= 0.0, "duration_noise_sigma must be nonnegative");
    require(c.dock_overhead_s >= 1.0, "dock_overhead_s must be at least 1 second");
}

StationMap random_station_layout(int n_stations, std::uint64_t seed, double side_m, int capacity) {
    if (n_stations < 2) fail(ErrorKind::InvalidConfig, "at least 2 stations required");
    if (!(side_m > 0.0)) fail(ErrorKind::InvalidConfig, "layout side must be positive");
    auto rng = keyed_engine(seed, kLayout);
    const int width = n_stations > 100 ? 3 : 2;
    std::vector<Station> stations;
    for (int i = 0; i < n_stations; ++i) {
        auto id = std::to_string(i);
        id.insert(0, static_cast<std::size_t>(std::max(0, width - static_cast<int>(id.size()))), '0');
        const double x = uniform(rng, 0.0, side_m);
        const double y = uniform(rng, 0.0, side_m);
        stations.push_back({"s" + id, {x, y}, capacity});
    }
    return StationMap(std::move(stations));
}

std::string user_name(int user_index, int n_users) {
    auto digits = std::to_string(std::max(1, n_users - 1)).size();
    auto id = std::to_string(user_index);
    if (id.size() < digits) id.insert(0, digits - id.size(), '0');
    return "u" + id;
}

Habit user_habit(const GeneratorConfig& config, int user_index) {
    const auto n = config.station_map.size();
    auto rng = keyed_engine(config.seed, kHabit, fnv1a64(user_name(user_index, config.n_users)));
    Habit h;
    h.origin = uniform_index(rng, n);
    h.destination = uniform_index(rng, n - 1);
    if (h.destination >= h.origin) ++h.destination;  // habitual trips are never round trips
    h.hour = 6 + static_cast<int>(uniform_index(rng, 16));
    return h;
}

std::vector<TripRecord> generate_trips(const GeneratorConfig& config) {
    validate(config);
    const auto& stations = config.station_map.stations();
    const auto n = stations.size();
    std::vector<TripRecord> trips;
    trips.reserve(static_cast<std::size_t>(config.n_users) * static_cast<std::size_t>(config.trips_per_user));
    for (int u = 0; u < config.n_users; ++u) {
        const auto user = user_name(u, config.n_users);
        const auto habit = user_habit(config, u);
        for (int k = 0; k < config.trips_per_user; ++k) {
            auto rng = keyed_engine(config.seed, kTrip, fnv1a64(user), static_cast<std::uint64_t>(k));
            std::size_t origin = 0, destination = 0;
            Timestamp second_of_day = 0;
            if (uniform01(rng) < config.habit_strength) {
                origin = habit.origin;
                destination = habit.destination;
                second_of_day = habit.hour * 3600 + static_cast<Timestamp>(uniform_index(rng, 1800));
            } else {
                origin = uniform_index(rng, n);
                destination = uniform_index(rng, n);
                second_of_day = static_cast<Timestamp>(uniform_index(rng, static_cast<std::size_t>(kDay - 7200)));
            }
            const double ride = distance(stations[origin].position, stations[destination].position) / config.speed_mps;
            const double noise = std::exp(config.duration_noise_sigma * standard_normal(rng));
            const auto duration = std::max<Timestamp>(1, std::llround((ride + config.dock_overhead_s) * noise));
            const Timestamp leave = config.start_time + k * kDay + second_of_day;
            trips.push_back({user, stations[origin].id, leave, stations[destination].id, leave + duration});
        }
    }
    return trips;
}

std::vector<GpsPoint> sample_path(const std::vector<Vec2>& path, double t0, double t1, double period,
                                  double noise_std, Engine& rng) {
    std::vector<double> cumulative{0.0};
    for (std::size_t i = 1; i < path.size(); ++i) cumulative.push_back(cumulative.back() + distance(path[i - 1], path[i]));
    const double total = cumulative.back();
    auto position_at = [&](double f) {
        if (total <= 0.0) return path.front();
        const double s = std::clamp(f, 0.0, 1.0) * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
        auto seg = static_cast<std::size_t>(std::distance(cumulative.begin(), it));
        seg = std::clamp<std::size_t>(seg, 1, path.size() - 1);
        const double len = cumulative[seg] - cumulative[seg - 1];
        const double local = len > 0.0 ? (s - cumulative[seg - 1]) / len : 0.0;
        return lerp(path[seg - 1], path[seg], local);
    };
    auto noisy = [&](Vec2 p) {
        if (noise_std > 0.0) {
            p.x += noise_std * standard_normal(rng);
            p.y += noise_std * standard_normal(rng);
        }
        return p;
    };
    std::vector<GpsPoint> points;
    const double duration = t1 - t0;
    for (long k = 0;; ++k) {
        const double t = t0 + static_cast<double>(k) * period;
        if (t >= t1 - 1e-9) break;
        points.push_back({t, noisy(position_at((t - t0) / duration))});
    }
    points.push_back({t1, noisy(path.back())});
    return points;
}

std::vector<GpsTrajectory> generate_trajectories(const GeneratorConfig& config, const std::vector<TripRecord>& trips) {
    validate(config);
    const auto& map = config.station_map;
    std::map<UserId, std::uint64_t> ordinal;
    std::vector<GpsTrajectory> out;
    out.reserve(trips.size());
    for (const auto& trip : trips) {
        validate_trip(trip, map);
        const auto k = ordinal[trip.user_id]++;
        auto rng = keyed_engine(config.seed, kTrajectory, fnv1a64(trip.user_id), k);

        const Vec2 a = map.at(trip.leave_station).position;
        const Vec2 b = map.at(trip.return_station).position;
        const double len = distance(a, b);
        Vec2 normal{0.0, 0.0};
        if (len > 0.0) {
            normal = {-(b.y - a.y) / len, (b.x - a.x) / len};
        } else {
            const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
            normal = {std::cos(theta), std::sin(theta)};
        }
        const auto n_waypoints = 1 + uniform_index(rng, 3);
        std::vector<double> fractions(n_waypoints);
        for (auto& f : fractions) f = uniform(rng, 0.1, 0.9);
        std::sort(fractions.begin(), fractions.end());
        const double spread = 0.15 * len + 50.0;
        std::vector<Vec2> path{a};
        for (double f : fractions) {
            const double offset = uniform(rng, -spread, spread);
            Vec2 p = lerp(a, b, f);
            path.push_back({p.x + offset * normal.x, p.y + offset * normal.y});
        }
        path.push_back(b);

        GpsTrajectory traj;
        traj.trip_id = trip.user_id + "-" + std::to_string(k);
        traj.points = sample_path(path, static_cast<double>(trip.leave_time), static_cast<double>(trip.return_time),
                                  config.gps_sample_period, config.gps_noise_std, rng);
        traj.truth = GroundTruth{trip.return_station, trip.return_time};
        out.push_back(std::move(traj));
    }
    return out;
}

ForkScenario generate_fork_scenario(const ForkScenarioConfig& c) {
    require(c.n_trajectories > 0, "n_trajectories must be positive");
    require(c.leg_length_m > 0.0, "leg_length_m must be positive");
    require(c.fork_half_angle_deg > 0.0 && c.fork_half_angle_deg < 90.0, "fork_half_angle_deg must lie in (0, 90)");
    require(c.speed_mps > 0.0, "speed_mps must be positive");
    require(c.gps_noise_std >= 0.0, "gps_noise_std must be nonnegative");
    require(c.gps_sample_period > 0.0, "gps_sample_period must be positive");

    const double angle = c.fork_half_angle_deg * std::numbers::pi / 180.0;
    const Vec2 origin{0.0, 0.0};
    const Vec2 fork{c.leg_length_m, 0.0};
    const Vec2 dest_a{fork.x + c.leg_length_m * std::cos(angle), c.leg_length_m * std::sin(angle)};
    const Vec2 dest_b{fork.x + c.leg_length_m * std::cos(angle), -c.leg_length_m * std::sin(angle)};

    ForkScenario out;
    out.stations = StationMap({{"O", origin, 50}, {"A", dest_a, 50}, {"B", dest_b, 50}});
    const double duration = 2.0 * c.leg_length_m / c.speed_mps;
    for (int i = 0; i < c.n_trajectories; ++i) {
        auto rng = keyed_engine(c.seed, kFork, static_cast<std::uint64_t>(i));
        const bool to_a = uniform01(rng) < 0.5;
        const Timestamp leave = c.start_time + i * 3600 + static_cast<Timestamp>(uniform_index(rng, 600));
        const Timestamp arrive = leave + std::llround(duration);
        const StationId dest = to_a ? "A" : "B";
        std::vector<Vec2> path{origin, fork, to_a ? dest_a : dest_b};

        GpsTrajectory traj;
        traj.trip_id = "fork-" + std::to_string(i);
        traj.points = sample_path(path, static_cast<double>(leave), static_cast<double>(arrive), c.gps_sample_period,
                                  c.gps_noise_std, rng);
        traj.truth = GroundTruth{dest, arrive};
        out.trips.push_back({"rider", "O", leave, dest, arrive});
        out.trajectories.push_back(std::move(traj));
    }
    return out;
}

std::vector<BikeEvent> events_from_trips(const std::vector<TripRecord>& trips, const StationMap& stations,
                                         int bikes_per_station) {
    if (bikes_per_station < 0) fail(ErrorKind::InvalidConfig, "bikes_per_station must be nonnegative");
    for (const auto& t : trips) validate_trip(t, stations);

    Timestamp first = 0;
    if (!trips.empty())
        first = std::min_element(trips.begin(), trips.end(), [](const auto& a, const auto& b) {
                    return a.leave_time < b.leave_time;
                })->leave_time;

    std::vector<BikeEvent> events;
    auto state = SystemState::empty(stations);
    auto record = [&](BikeEvent e) {
        apply_event_in_place(state, stations, e);
        events.push_back(std::move(e));
    };

    int fleet = 0;
    for (const auto& s : stations.stations()) {
        const int n = std::min(bikes_per_station, s.capacity);
        for (int b = 0; b < n; ++b) {
            char id[16];
            std::snprintf(id, sizeof id, "b%04d", fleet++);
            record(DeployEvent{id, s.id, first - 1});
        }
    }

    // (time, 0 = return / 1 = pickup, trip index)
    std::vector<std::tuple<Timestamp, int, std::size_t>> schedule;
    for (std::size_t i = 0; i < trips.size(); ++i) {
        schedule.emplace_back(trips[i].leave_time, 1, i);
        schedule.emplace_back(trips[i].return_time, 0, i);
    }
    std::sort(schedule.begin(), schedule.end());

    std::map<std::size_t, BikeId> riding;
    for (const auto& [time, kind, i] : schedule) {
        const auto& trip = trips[i];
        if (kind == 1) {
            const auto& docked = state.docked[trip.leave_station];
            if (docked.empty()) continue;
            riding[i] = *docked.begin();
            record(PickupEvent{riding[i], trip.user_id, trip.leave_station, time});
            continue;
        }
        auto it = riding.find(i);
        if (it == riding.end()) continue;
        StationId target = trip.return_station;
        auto has_room = [&](const Station& s) {
            return state.docked[s.id].size() < static_cast<std::size_t>(s.capacity);
        };
        if (!has_room(stations.at(target))) {
            const auto origin = stations.at(target).position;
            double best = std::numeric_limits<double>::infinity();
            for (const auto& s : stations.stations()) {
                const double d = distance(origin, s.position);
                if (has_room(s) && d < best) {
                    best = d;
                    target = s.id;
                }
            }
        }
        record(ReturnEvent{it->second, target, time});
        riding.erase(it);
    }
    return events;
}

}  // namespace bss
