#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace bss {

using StationId = std::string;
using UserId = std::string;
using BikeId = std::string;

/// Integer seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

/// Planar position in meters (local tangent plane).
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

double distance(Vec2 a, Vec2 b) noexcept;

struct Station {
    StationId id;
    Vec2 position;
    int capacity = 1;

    friend bool operator==(const Station&, const Station&) = default;
};

/// Immutable, validated list of stations. Station order defines the class
/// index used by every learner (index i <-> stations()[i]).
class StationMap {
public:
    StationMap() = default;
    /// Throws InvalidStationMap on duplicate ids, capacity < 1 or fewer than 2 stations.
    explicit StationMap(std::vector<Station> stations);

    const std::vector<Station>& stations() const noexcept { return stations_; }
    std::size_t size() const noexcept { return stations_.size(); }
    std::optional<std::size_t> index_of(const StationId& id) const;
    /// Throws UnknownStation.
    std::size_t require_index(const StationId& id) const;
    const Station& at(const StationId& id) const { return stations_[require_index(id)]; }
    bool contains(const StationId& id) const { return index_.count(id) != 0; }

    friend bool operator==(const StationMap& a, const StationMap& b) { return a.stations_ == b.stations_; }

private:
    std::vector<Station> stations_;
    std::map<StationId, std::size_t> index_;
};

/// One hire event: <user, leave station, leave time, return station, return time>.
struct TripRecord {
    UserId user_id;
    StationId leave_station;
    Timestamp leave_time = 0;
    StationId return_station;
    Timestamp return_time = 0;

    Timestamp duration() const noexcept { return return_time - leave_time; }

    friend bool operator==(const TripRecord&, const TripRecord&) = default;
};

/// Throws InvalidRecord (non-positive duration) or UnknownStation.
void validate_trip(const TripRecord& trip, const StationMap& stations);

struct GpsPoint {
    double t = 0.0;  ///< seconds since epoch; sub-second sampling allowed
    Vec2 pos;

    friend bool operator==(const GpsPoint&, const GpsPoint&) = default;
};

struct GroundTruth {
    StationId destination;
    Timestamp arrival_time = 0;

    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// Timestamped positions of one journey. Ground truth is present for
/// training data and absent at prediction time.
struct GpsTrajectory {
    std::string trip_id;
    std::vector<GpsPoint> points;
    std::optional<GroundTruth> truth;

    friend bool operator==(const GpsTrajectory&, const GpsTrajectory&) = default;
};

/// Throws InvalidRecord when points are fewer than 2 or not strictly increasing in time.
void validate_trajectory(const GpsTrajectory& trajectory);

/// Copy holding the first max(2, ceil(fraction * n)) points, ground truth stripped.
GpsTrajectory observed_prefix(const GpsTrajectory& trajectory, double fraction_observed);

// ---------------------------------------------------------------------------
// AllBikesNow state tracking

struct TransitRecord {
    UserId user_id;
    StationId departure_station;
    Timestamp departure_time = 0;

    friend bool operator==(const TransitRecord&, const TransitRecord&) = default;
};

struct PickupEvent {
    BikeId bike;
    UserId user;
    StationId station;
    Timestamp time = 0;
};

struct ReturnEvent {
    BikeId bike;
    StationId station;
    Timestamp time = 0;
};

/// Puts a new bike into service at a station. Seeds the fleet before replay.
struct DeployEvent {
    BikeId bike;
    StationId station;
    Timestamp time = 0;
};

using BikeEvent = std::variant<PickupEvent, ReturnEvent, DeployEvent>;

struct SystemState {
    std::map<StationId, std::set<BikeId>> docked;
    std::map<BikeId, TransitRecord> in_transit;

    /// Every station present with no bikes docked.
    static SystemState empty(const StationMap& stations);

    std::size_t total_bikes() const;

    friend bool operator==(const SystemState&, const SystemState&) = default;
};

/// Pure transition. On error (BikeNotDocked, BikeNotInTransit, StationFull,
/// UnknownStation) the input state is untouched and an Error is thrown.
SystemState apply_event(const SystemState& state, const StationMap& stations, const BikeEvent& event);

/// In-place variant for long replays; gives the same guarantee of no mutation on error.
void apply_event_in_place(SystemState& state, const StationMap& stations, const BikeEvent& event);

/// Docked bike count per station.
std::map<StationId, int> all_bikes_now(const SystemState& state);

/// Checks the SystemState invariants against the station map; returns a
/// description of the first violation, or nullopt when all hold.
std::optional<std::string> check_invariants(const SystemState& state, const StationMap& stations);

}  // namespace bss
