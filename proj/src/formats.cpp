#include "bss/formats.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bss/error.hpp"

namespace bss {

namespace {

using ojson = nlohmann::ordered_json;

/// Splits into lines, dropping one trailing newline and any '\r' before '\n'.
std::vector<std::string_view> split_lines(std::string_view bytes) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < bytes.size()) {
        auto end = bytes.find('\n', start);
        if (end == std::string_view::npos) end = bytes.size();
        auto line = bytes.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        auto end = line.find(',', start);
        if (end == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, end - start));
        start = end + 1;
    }
}

Timestamp parse_int(std::string_view field, std::size_t line_no, const char* name) {
    Timestamp value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
        throw MalformedRow(line_no, std::string(name) + " is not an integer: '" + std::string(field) + "'");
    return value;
}

std::string parse_id(std::string_view field, std::size_t line_no, const char* name) {
    if (field.empty()) throw MalformedRow(line_no, std::string(name) + " is empty");
    if (field.find('"') != std::string_view::npos) throw MalformedRow(line_no, std::string(name) + " contains a quote");
    return std::string(field);
}

void check_id_serializable(const std::string& id) {
    if (id.empty() || id.find_first_of(",\"\n\r") != std::string::npos)
        fail(ErrorKind::InvalidRecord, "identifier '" + id + "' cannot be written to CSV");
}

void expect_header(const std::vector<std::string_view>& lines, std::string_view header) {
    if (lines.empty()) throw MalformedRow(1, "missing header");
    if (lines.front() != header) throw MalformedRow(1, "expected header '" + std::string(header) + "'");
}

}  // namespace

std::vector<TripRecord> parse_trip_log(std::string_view bytes) {
    const auto lines = split_lines(bytes);
    expect_header(lines, kTripLogHeader);
    std::vector<TripRecord> trips;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto line_no = i + 1;
        const auto fields = split_fields(lines[i]);
        if (fields.size() != 5)
            throw MalformedRow(line_no, "expected 5 fields, found " + std::to_string(fields.size()));
        TripRecord t;
        t.user_id = parse_id(fields[0], line_no, "user_id");
        t.leave_station = parse_id(fields[1], line_no, "leave_station");
        t.leave_time = parse_int(fields[2], line_no, "leave_time");
        t.return_station = parse_id(fields[3], line_no, "return_station");
        t.return_time = parse_int(fields[4], line_no, "return_time");
        if (t.return_time <= t.leave_time) throw MalformedRow(line_no, "return_time must exceed leave_time");
        trips.push_back(std::move(t));
    }
    return trips;
}

std::string serialize_trip_log(const std::vector<TripRecord>& trips) {
    std::string out(kTripLogHeader);
    out += '\n';
    for (const auto& t : trips) {
        check_id_serializable(t.user_id);
        check_id_serializable(t.leave_station);
        check_id_serializable(t.return_station);
        out += t.user_id + ',' + t.leave_station + ',' + std::to_string(t.leave_time) + ',' + t.return_station + ',' +
               std::to_string(t.return_time) + '\n';
    }
    return out;
}

std::vector<GpsTrajectory> parse_trajectories(std::string_view bytes) {
    const auto lines = split_lines(bytes);
    std::vector<GpsTrajectory> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line_no = i + 1;
        try {
            const auto j = nlohmann::json::parse(lines[i]);
            if (!j.is_object()) throw MalformedRow(line_no, "record is not an object");
            GpsTrajectory traj;
            traj.trip_id = j.at("trip_id").get<std::string>();
            const bool has_dest = j.contains("destination");
            const bool has_arrival = j.contains("arrival_time");
            if (has_dest != has_arrival)
                throw MalformedRow(line_no, "destination and arrival_time must be both present or both absent");
            if (has_dest) {
                if (!j.at("arrival_time").is_number_integer())
                    throw MalformedRow(line_no, "arrival_time must be an integer");
                traj.truth = GroundTruth{j.at("destination").get<std::string>(), j.at("arrival_time").get<Timestamp>()};
            }
            for (const auto& p : j.at("points")) {
                if (!p.is_array() || p.size() != 3) throw MalformedRow(line_no, "point must be [t, x, y]");
                traj.points.push_back({p[0].get<double>(), {p[1].get<double>(), p[2].get<double>()}});
            }
            validate_trajectory(traj);
            out.push_back(std::move(traj));
        } catch (const MalformedRow&) {
            throw;
        } catch (const Error& e) {
            throw MalformedRow(line_no, e.what());
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRow(line_no, e.what());
        }
    }
    return out;
}

std::string serialize_trajectories(const std::vector<GpsTrajectory>& trajectories) {
    std::string out;
    for (const auto& traj : trajectories) {
        ojson j;
        j["trip_id"] = traj.trip_id;
        if (traj.truth) {
            j["destination"] = traj.truth->destination;
            j["arrival_time"] = traj.truth->arrival_time;
        }
        auto points = ojson::array();
        for (const auto& p : traj.points) points.push_back(ojson::array({p.t, p.pos.x, p.pos.y}));
        j["points"] = std::move(points);
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<BikeEvent> parse_event_log(std::string_view bytes) {
    const auto lines = split_lines(bytes);
    expect_header(lines, kEventLogHeader);
    std::vector<BikeEvent> events;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto line_no = i + 1;
        const auto f = split_fields(lines[i]);
        if (f.size() != 5) throw MalformedRow(line_no, "expected 5 fields, found " + std::to_string(f.size()));
        const auto time = parse_int(f[4], line_no, "time");
        if (f[0] == "pickup") {
            events.push_back(PickupEvent{parse_id(f[1], line_no, "bike_id"), parse_id(f[2], line_no, "user_id"),
                                         parse_id(f[3], line_no, "station"), time});
        } else if (f[0] == "return" || f[0] == "deploy") {
            if (!f[2].empty()) throw MalformedRow(line_no, std::string(f[0]) + " events carry no user_id");
            auto bike = parse_id(f[1], line_no, "bike_id");
            auto station = parse_id(f[3], line_no, "station");
            if (f[0] == "return")
                events.push_back(ReturnEvent{std::move(bike), std::move(station), time});
            else
                events.push_back(DeployEvent{std::move(bike), std::move(station), time});
        } else {
            throw MalformedRow(line_no, "unknown event '" + std::string(f[0]) + "'");
        }
    }
    return events;
}

std::string serialize_event_log(const std::vector<BikeEvent>& events) {
    std::ostringstream out;
    out << kEventLogHeader << '\n';
    for (const auto& ev : events) {
        std::visit(
            [&](const auto& e) {
                using E = std::decay_t<decltype(e)>;
                if constexpr (std::is_same_v<E, PickupEvent>)
                    out << "pickup," << e.bike << ',' << e.user << ',' << e.station << ',' << e.time << '\n';
                else if constexpr (std::is_same_v<E, ReturnEvent>)
                    out << "return," << e.bike << ",," << e.station << ',' << e.time << '\n';
                else
                    out << "deploy," << e.bike << ",," << e.station << ',' << e.time << '\n';
            },
            ev);
    }
    return out.str();
}

StationMap parse_station_map(std::string_view bytes) {
    try {
        const auto j = nlohmann::json::parse(bytes);
        std::vector<Station> stations;
        for (const auto& s : j.at("stations")) {
            stations.push_back({s.at("id").get<std::string>(),
                                {s.at("x").get<double>(), s.at("y").get<double>()},
                                s.at("capacity").get<int>()});
        }
        return StationMap(std::move(stations));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::InvalidStationMap, e.what());
    }
}

std::string serialize_station_map(const StationMap& stations) {
    ojson j;
    auto arr = ojson::array();
    for (const auto& s : stations.stations()) {
        ojson e;
        e["id"] = s.id;
        e["x"] = s.position.x;
        e["y"] = s.position.y;
        e["capacity"] = s.capacity;
        arr.push_back(std::move(e));
    }
    j["stations"] = std::move(arr);
    return j.dump(2) + "\n";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::InvalidConfig, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::InvalidConfig, "cannot write '" + path + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

}  // namespace bss
