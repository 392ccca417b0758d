#include "bss/domain.hpp"

#include <cmath>

#include "bss/error.hpp"

namespace bss {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::BikeNotDocked: return "BikeNotDocked";
        case ErrorKind::BikeNotInTransit: return "BikeNotInTransit";
        case ErrorKind::StationFull: return "StationFull";
        case ErrorKind::UnknownStation: return "UnknownStation";
        case ErrorKind::InvalidStationMap: return "InvalidStationMap";
        case ErrorKind::InvalidRecord: return "InvalidRecord";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::MalformedRow: return "MalformedRow";
        case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorKind::NegativeComponent: return "NegativeComponent";
        case ErrorKind::EmptyVector: return "EmptyVector";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorKind::SingularSystem: return "SingularSystem";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::SpectralRadiusFailure: return "SpectralRadiusFailure";
        case ErrorKind::UntrainedModel: return "UntrainedModel";
        case ErrorKind::TooFewSamples: return "TooFewSamples";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::Empty: return "Empty";
        case ErrorKind::UnknownClass: return "UnknownClass";
        case ErrorKind::InvalidModel: return "InvalidModel";
        case ErrorKind::MissingReport: return "MissingReport";
        case ErrorKind::InvalidWeights: return "InvalidWeights";
        case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    }
    return "Unknown";
}

double distance(Vec2 a, Vec2 b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

StationMap::StationMap(std::vector<Station> stations) : stations_(std::move(stations)) {
    if (stations_.size() < 2) fail(ErrorKind::InvalidStationMap, "at least 2 stations required");
    for (std::size_t i = 0; i < stations_.size(); ++i) {
        const auto& s = stations_[i];
        if (s.id.empty()) fail(ErrorKind::InvalidStationMap, "empty station id");
        if (s.capacity < 1) fail(ErrorKind::InvalidStationMap, "station " + s.id + " has capacity < 1");
        if (!std::isfinite(s.position.x) || !std::isfinite(s.position.y))
            fail(ErrorKind::InvalidStationMap, "station " + s.id + " has a non-finite position");
        if (!index_.emplace(s.id, i).second) fail(ErrorKind::InvalidStationMap, "duplicate station id " + s.id);
    }
}

std::optional<std::size_t> StationMap::index_of(const StationId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t StationMap::require_index(const StationId& id) const {
    auto idx = index_of(id);
    if (!idx) fail(ErrorKind::UnknownStation, "station '" + id + "'");
    return *idx;
}

void validate_trip(const TripRecord& trip, const StationMap& stations) {
    stations.require_index(trip.leave_station);
    stations.require_index(trip.return_station);
    if (trip.user_id.empty()) fail(ErrorKind::InvalidRecord, "empty user id");
    if (trip.return_time <= trip.leave_time) fail(ErrorKind::InvalidRecord, "return_time must exceed leave_time");
}

void validate_trajectory(const GpsTrajectory& trajectory) {
    if (trajectory.points.size() < 2)
        fail(ErrorKind::InvalidRecord, "trajectory " + trajectory.trip_id + " has fewer than 2 points");
    for (std::size_t i = 0; i < trajectory.points.size(); ++i) {
        const auto& p = trajectory.points[i];
        if (!std::isfinite(p.t) || !std::isfinite(p.pos.x) || !std::isfinite(p.pos.y))
            fail(ErrorKind::InvalidRecord, "trajectory " + trajectory.trip_id + " has a non-finite point");
        if (i > 0 && !(p.t > trajectory.points[i - 1].t))
            fail(ErrorKind::InvalidRecord, "trajectory " + trajectory.trip_id + " points not strictly ordered by time");
    }
}

GpsTrajectory observed_prefix(const GpsTrajectory& trajectory, double fraction_observed) {
    if (!(fraction_observed > 0.0 && fraction_observed <= 1.0))
        fail(ErrorKind::InvalidConfig, "fraction_observed must lie in (0, 1]");
    const auto n = trajectory.points.size();
    auto keep = static_cast<std::size_t>(std::ceil(fraction_observed * static_cast<double>(n) - 1e-12));
    keep = std::min(n, std::max<std::size_t>(2, keep));
    GpsTrajectory out;
    out.trip_id = trajectory.trip_id;
    out.points.assign(trajectory.points.begin(), trajectory.points.begin() + static_cast<std::ptrdiff_t>(keep));
    return out;
}

SystemState SystemState::empty(const StationMap& stations) {
    SystemState s;
    for (const auto& st : stations.stations()) s.docked[st.id];
    return s;
}

std::size_t SystemState::total_bikes() const {
    std::size_t n = in_transit.size();
    for (const auto& [_, bikes] : docked) n += bikes.size();
    return n;
}

namespace {

std::optional<StationId> docked_at(const SystemState& state, const BikeId& bike) {
    for (const auto& [station, bikes] : state.docked)
        if (bikes.count(bike)) return station;
    return std::nullopt;
}

std::size_t docked_count(const SystemState& state, const StationId& station) {
    auto it = state.docked.find(station);
    return it == state.docked.end() ? 0 : it->second.size();
}

}  // namespace

void apply_event_in_place(SystemState& state, const StationMap& stations, const BikeEvent& event) {
    // All checks run before the first mutation.
    std::visit(
        [&](const auto& e) {
            using E = std::decay_t<decltype(e)>;
            const auto& station = stations.at(e.station);
            if constexpr (std::is_same_v<E, PickupEvent>) {
                auto at = docked_at(state, e.bike);
                if (!at || *at != e.station)
                    fail(ErrorKind::BikeNotDocked, "bike " + e.bike + " is not docked at " + e.station);
                state.docked[e.station].erase(e.bike);
                state.in_transit.emplace(e.bike, TransitRecord{e.user, e.station, e.time});
            } else if constexpr (std::is_same_v<E, ReturnEvent>) {
                if (!state.in_transit.count(e.bike))
                    fail(ErrorKind::BikeNotInTransit, "bike " + e.bike + " is not in transit");
                if (docked_count(state, e.station) >= static_cast<std::size_t>(station.capacity))
                    fail(ErrorKind::StationFull, "station " + e.station + " is full");
                state.in_transit.erase(e.bike);
                state.docked[e.station].insert(e.bike);
            } else {
                if (state.in_transit.count(e.bike) || docked_at(state, e.bike))
                    fail(ErrorKind::InvalidRecord, "bike " + e.bike + " is already in service");
                if (docked_count(state, e.station) >= static_cast<std::size_t>(station.capacity))
                    fail(ErrorKind::StationFull, "station " + e.station + " is full");
                state.docked[e.station].insert(e.bike);
            }
        },
        event);
}

SystemState apply_event(const SystemState& state, const StationMap& stations, const BikeEvent& event) {
    SystemState next = state;
    apply_event_in_place(next, stations, event);
    return next;
}

std::map<StationId, int> all_bikes_now(const SystemState& state) {
    std::map<StationId, int> counts;
    for (const auto& [station, bikes] : state.docked) counts[station] = static_cast<int>(bikes.size());
    return counts;
}

std::optional<std::string> check_invariants(const SystemState& state, const StationMap& stations) {
    std::set<BikeId> seen;
    for (const auto& [station, bikes] : state.docked) {
        auto idx = stations.index_of(station);
        if (!idx) return "unknown station " + station + " in docked map";
        if (bikes.size() > static_cast<std::size_t>(stations.stations()[*idx].capacity))
            return "station " + station + " above capacity";
        for (const auto& b : bikes)
            if (!seen.insert(b).second) return "bike " + b + " docked twice";
    }
    for (const auto& [bike, rec] : state.in_transit) {
        if (!seen.insert(bike).second) return "bike " + bike + " both docked and in transit";
        if (!stations.contains(rec.departure_station)) return "unknown departure station for bike " + bike;
    }
    return std::nullopt;
}

}  // namespace bss
