#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "bss/domain.hpp"

namespace bss {

/// Header of the trip log CSV.
inline constexpr std::string_view kTripLogHeader = "user_id,leave_station,leave_time,return_station,return_time";
/// Header of the bike event log CSV consumed by `status`.
inline constexpr std::string_view kEventLogHeader = "event,bike_id,user_id,station,time";

// Strict parsers: any bad row raises MalformedRow with its 1-based line number
// (the header is line 1). No rows are skipped.

std::vector<TripRecord> parse_trip_log(std::string_view bytes);
std::string serialize_trip_log(const std::vector<TripRecord>& trips);

/// One JSON object per line:
/// {"trip_id":..,"destination":..,"arrival_time":..,"points":[[t,x,y],...]}
/// destination and arrival_time are omitted together for unlabeled prefixes.
std::vector<GpsTrajectory> parse_trajectories(std::string_view bytes);
std::string serialize_trajectories(const std::vector<GpsTrajectory>& trajectories);

std::vector<BikeEvent> parse_event_log(std::string_view bytes);
std::string serialize_event_log(const std::vector<BikeEvent>& events);

/// {"stations":[{"id":..,"x":..,"y":..,"capacity":..},...]}
StationMap parse_station_map(std::string_view bytes);
std::string serialize_station_map(const StationMap& stations);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace bss
