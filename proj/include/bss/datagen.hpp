#pragma once

#include <cstdint>
#include <vector>

#include "bss/domain.hpp"
#include "bss/rng.hpp"

namespace bss {

/// Parameters of the synthetic bike-sharing usage generator.
struct GeneratorConfig {
    std::uint64_t seed = 0;
    StationMap station_map;
    int n_users = 1;
    int trips_per_user = 1;
    /// Probability that a trip follows the user's habitual (origin, destination, hour).
    double habit_strength = 0.8;
    double speed_mps = 4.0;
    double gps_noise_std = 0.0;
    double gps_sample_period = 15.0;
    /// Log-space std of the multiplicative duration noise.
    double duration_noise_sigma = 0.1;
    /// Fixed undock/dock time added to the riding time, seconds.
    double dock_overhead_s = 60.0;
    /// Day 0 midnight; 2024-01-01T00:00:00Z is a Monday.
    Timestamp start_time = 1704067200;
};

/// Throws InvalidConfig on the first violated constraint.
void validate(const GeneratorConfig& config);

/// Uniform random placement of n stations in a side x side meter square.
StationMap random_station_layout(int n_stations, std::uint64_t seed, double side_m = 3000.0, int capacity = 20);

/// The habitual pattern assigned to one user.
struct Habit {
    std::size_t origin = 0;
    std::size_t destination = 0;
    int hour = 0;
};

std::string user_name(int user_index, int n_users);
Habit user_habit(const GeneratorConfig& config, int user_index);

/// n_users * trips_per_user records, user-major. Pure function of the config.
std::vector<TripRecord> generate_trips(const GeneratorConfig& config);

/// One trajectory per trip, sampled every gps_sample_period seconds along a
/// piecewise-linear path through 1-3 seeded waypoints.
std::vector<GpsTrajectory> generate_trajectories(const GeneratorConfig& config, const std::vector<TripRecord>& trips);

/// Event log of a fleet serving `trips`: min(bikes_per_station, capacity)
/// bikes are deployed at every station one second before the first trip, a
/// pickup takes the lowest-id docked bike, a trip starting at an empty
/// station is dropped, and a return to a full station goes to the nearest
/// station with a free dock. Events are in time order, returns before
/// pickups at equal times.
std::vector<BikeEvent> events_from_trips(const std::vector<TripRecord>& trips, const StationMap& stations,
                                         int bikes_per_station);

/// Samples a constant-speed walk along `path` between t0 and t1 (inclusive),
/// one point every `period` seconds plus the end point, with isotropic
/// Gaussian noise of std `noise_std` drawn from `rng`.
std::vector<GpsPoint> sample_path(const std::vector<Vec2>& path, double t0, double t1, double period,
                                  double noise_std, Engine& rng);

/// Two destinations reached over a shared first half of the path: every
/// journey leaves the origin, follows a common corridor to a fork point and
/// then turns toward one of the two destinations. Used to probe long-range
/// sequence memory.
struct ForkScenarioConfig {
    std::uint64_t seed = 0;
    int n_trajectories = 100;
    double leg_length_m = 1500.0;     ///< origin to fork, and fork to each destination
    double fork_half_angle_deg = 15.0;
    double speed_mps = 5.0;
    double gps_noise_std = 0.0;
    double gps_sample_period = 15.0;
    Timestamp start_time = 1704067200;
};

struct ForkScenario {
    StationMap stations;  ///< origin "O", destinations "A" and "B"
    std::vector<TripRecord> trips;
    std::vector<GpsTrajectory> trajectories;
};

ForkScenario generate_fork_scenario(const ForkScenarioConfig& config);

}  // namespace bss
