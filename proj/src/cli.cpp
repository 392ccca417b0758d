#include "bss/cli.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bss/datagen.hpp"
#include "bss/digest.hpp"
#include "bss/error.hpp"
#include "bss/featuremodel.hpp"
#include "bss/formats.hpp"
#include "bss/persistence.hpp"
#include "bss/pipelines.hpp"

namespace bss {

namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

/// Command failure carrying the exit code to report.
struct CommandError {
    int code;
    std::string message;
};

int default_exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InsufficientData:
        case ErrorKind::TooFewSamples: return kExitInsufficient;
        case ErrorKind::MissingReport: return kExitMissingReport;
        case ErrorKind::InvalidConfig:
        case ErrorKind::InvalidRecord:
        case ErrorKind::MalformedRow:
        case ErrorKind::InvalidStationMap:
        case ErrorKind::UnknownStation:
        case ErrorKind::SchemaMismatch:
        case ErrorKind::InvalidModel:
        case ErrorKind::InvalidWeights:
        case ErrorKind::BikeNotDocked:
        case ErrorKind::BikeNotInTransit:
        case ErrorKind::StationFull: return kExitInput;
        default: return kExitFailure;
    }
}

json read_json_file(const std::string& path) {
    const auto text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::InvalidConfig, path + ": " + e.what());
    }
}

/// Resolves options with precedence flag > config file > default and
/// records the outcome for the run manifest.
class Settings {
public:
    void load_file(const std::string& path) {
        if (path.empty()) return;
        file_ = read_json_file(path);
        if (!file_.is_object()) fail(ErrorKind::InvalidConfig, path + ": config file must hold an object");
    }

    template <class T>
    T get(const std::string& key, const CLI::Option* flag, T value) {
        if (flag->count() == 0 && file_.contains(key)) {
            try {
                value = file_.at(key).get<T>();
            } catch (const json::exception&) {
                fail(ErrorKind::InvalidConfig, "config field " + key + " has the wrong type");
            }
        }
        resolved_[key] = value;
        return value;
    }

    bool in_file(const std::string& key) const { return file_.contains(key); }
    const json& file_value(const std::string& key) const { return file_.at(key); }
    ojson& resolved() { return resolved_; }

private:
    json file_ = json::object();
    ojson resolved_ = ojson::object();
};

/// Everything one command run read and wrote.
struct Manifest {
    std::string command;
    ojson config = ojson::object();
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::pair<std::string, std::string>> outputs;  // (name, contents)

    std::string render() const {
        ojson j;
        j["schema"] = "bss.run_manifest/1";
        j["tool"] = kToolName;
        j["version"] = kToolVersion;
        j["command"] = command;
        j["seed"] = seed;
        j["config"] = config;
        j["inputs"] = ojson::array();
        for (const auto& path : inputs)
            j["inputs"].push_back({{"path", path}, {"sha256", sha256_hex(read_file(path))}});
        j["outputs"] = ojson::array();
        for (const auto& [name, contents] : outputs)
            j["outputs"].push_back({{"name", name}, {"sha256", sha256_hex(contents)}});
        return j.dump(2) + "\n";
    }
};

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorKind::InvalidConfig, "cannot create output directory " + dir + ": " + ec.message());
}

/// Writes the outputs and the manifest into `dir`.
void write_outputs(const std::string& dir, Manifest& manifest) {
    ensure_directory(dir);
    for (const auto& [name, contents] : manifest.outputs) write_file(join_path(dir, name), contents);
    write_file(join_path(dir, "manifest.json"), manifest.render());
}

ojson probabilities_json(const std::vector<StationId>& labels, const Vector& p) {
    ojson j = ojson::object();
    for (std::size_t k = 0; k < labels.size(); ++k) j[labels[k]] = p(static_cast<Eigen::Index>(k));
    return j;
}

// ---------------------------------------------------------------------------
// datagen

struct DatagenArgs {
    std::string config, stations, out = ".", scenario = "habits";
    std::uint64_t seed = 0;
    int users = 20, trips_per_user = 50, bikes_per_station = 10, trajectories = 100;
    double habit_strength = 0.8, speed = 4.0, gps_noise = 0.0, gps_period = 15.0, duration_noise = 0.1;
    double fork_angle = 15.0;
};

void add_datagen(CLI::App& app, DatagenArgs& a, std::map<std::string, CLI::Option*>& o) {
    o["config"] = app.add_option("--config", a.config, "JSON file with any of the options below (flags win)");
    o["seed"] = app.add_option("--seed", a.seed, "root seed of every random draw");
    o["stations"] = app.add_option("--stations", a.stations, "station count for a random layout, or a station-map JSON file");
    o["scenario"] = app.add_option("--scenario", a.scenario, "habits (per-user routines) or fork (two-destination fork)")
                        ->check(CLI::IsMember({"habits", "fork"}));
    o["users"] = app.add_option("--users", a.users, "number of users");
    o["trips_per_user"] = app.add_option("--trips-per-user", a.trips_per_user, "trips generated per user");
    o["habit_strength"] = app.add_option("--habit-strength", a.habit_strength, "probability that a trip follows the user's habit");
    o["speed_mps"] = app.add_option("--speed", a.speed, "riding speed in m/s");
    o["gps_noise_std"] = app.add_option("--gps-noise", a.gps_noise, "GPS noise std in meters");
    o["gps_sample_period"] = app.add_option("--gps-period", a.gps_period, "seconds between GPS points");
    o["duration_noise_sigma"] = app.add_option("--duration-noise", a.duration_noise, "log-space std of trip duration noise");
    o["bikes_per_station"] = app.add_option("--bikes-per-station", a.bikes_per_station, "initial fleet per station in the event log");
    o["n_trajectories"] = app.add_option("--trajectories", a.trajectories, "fork scenario: number of journeys");
    o["fork_half_angle_deg"] = app.add_option("--fork-angle", a.fork_angle, "fork scenario: half-angle between branches in degrees");
    o["out"] = app.add_option("--out", a.out, "output directory");
}

int cmd_datagen(const DatagenArgs& a, std::map<std::string, CLI::Option*>& o, std::ostream& out) {
    Settings s;
    s.load_file(a.config);
    Manifest m;
    if (!a.config.empty()) m.inputs.push_back(a.config);
    const auto scenario = s.get("scenario", o["scenario"], a.scenario);
    const auto seed = s.get("seed", o["seed"], a.seed);
    const auto out_dir = s.get("out", o["out"], a.out);
    m.seed = seed;

    StationMap stations;
    std::vector<TripRecord> trips;
    std::vector<GpsTrajectory> trajectories;
    const auto bikes = s.get("bikes_per_station", o["bikes_per_station"], a.bikes_per_station);

    if (scenario == "fork") {
        ForkScenarioConfig c;
        c.seed = seed;
        c.n_trajectories = s.get("n_trajectories", o["n_trajectories"], a.trajectories);
        c.fork_half_angle_deg = s.get("fork_half_angle_deg", o["fork_half_angle_deg"], a.fork_angle);
        c.speed_mps = s.get("speed_mps", o["speed_mps"], o["speed_mps"]->count() ? a.speed : c.speed_mps);
        c.gps_noise_std = s.get("gps_noise_std", o["gps_noise_std"], a.gps_noise);
        c.gps_sample_period = s.get("gps_sample_period", o["gps_sample_period"], a.gps_period);
        auto fork = generate_fork_scenario(c);
        stations = std::move(fork.stations);
        trips = std::move(fork.trips);
        trajectories = std::move(fork.trajectories);
    } else {
        std::string spec;
        if (o["stations"]->count()) {
            spec = a.stations;
        } else if (s.in_file("stations")) {
            const auto& v = s.file_value("stations");
            spec = v.is_number_integer() ? std::to_string(v.get<int>()) : v.get<std::string>();
        } else {
            fail(ErrorKind::InvalidConfig, "--stations is required (a station count or a station-map file)");
        }
        const bool is_count = !spec.empty() && std::all_of(spec.begin(), spec.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
        if (is_count) {
            stations = random_station_layout(std::stoi(spec), seed);
            s.resolved()["stations"] = std::stoi(spec);
        } else {
            stations = parse_station_map(read_file(spec));
            m.inputs.push_back(spec);
            s.resolved()["stations"] = spec;
        }
        GeneratorConfig c;
        c.seed = seed;
        c.station_map = stations;
        c.n_users = s.get("users", o["users"], a.users);
        c.trips_per_user = s.get("trips_per_user", o["trips_per_user"], a.trips_per_user);
        c.habit_strength = s.get("habit_strength", o["habit_strength"], a.habit_strength);
        c.speed_mps = s.get("speed_mps", o["speed_mps"], a.speed);
        c.gps_noise_std = s.get("gps_noise_std", o["gps_noise_std"], a.gps_noise);
        c.gps_sample_period = s.get("gps_sample_period", o["gps_sample_period"], a.gps_period);
        c.duration_noise_sigma = s.get("duration_noise_sigma", o["duration_noise_sigma"], a.duration_noise);
        validate(c);
        trips = generate_trips(c);
        trajectories = generate_trajectories(c, trips);
    }
    const auto events = events_from_trips(trips, stations, bikes);

    m.command = "datagen";
    m.config = s.resolved();
    m.outputs = {{"stations.json", serialize_station_map(stations)},
                 {"trips.csv", serialize_trip_log(trips)},
                 {"trajectories.jsonl", serialize_trajectories(trajectories)},
                 {"events.csv", serialize_event_log(events)}};
    write_outputs(out_dir, m);
    out << "wrote " << stations.size() << " stations, " << trips.size() << " trips, " << trajectories.size()
        << " trajectories, " << events.size() << " events to " << out_dir << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string feature, config, data, stations, grid, out = ".";
    std::size_t k = 5;
    std::uint64_t seed = 0;
    double test_fraction = 0.2, fraction = 0.8;
};

void add_train(CLI::App& app, TrainArgs& a, std::map<std::string, CLI::Option*>& o) {
    app.add_option("feature", a.feature, "userprofile or locationpreview")
        ->required()
        ->check(CLI::IsMember({"userprofile", "locationpreview"}));
    o["config"] = app.add_option("--config", a.config, "JSON file with any of the options below (flags win)");
    o["data"] = app.add_option("--data", a.data, "trip log CSV (userprofile) or trajectory JSONL (locationpreview)");
    o["stations"] = app.add_option("--stations", a.stations, "station-map JSON file");
    o["grid"] = app.add_option("--grid", a.grid, "hyperparameter grid JSON file");
    o["k"] = app.add_option("--k", a.k, "cross-validation folds");
    o["seed"] = app.add_option("--seed", a.seed, "root seed of splits and reservoirs");
    o["test_fraction"] = app.add_option("--test-fraction", a.test_fraction, "share of data held out for the final test");
    o["fraction_observed"] = app.add_option("--fraction", a.fraction, "locationpreview: observed share of each test trajectory");
    o["out"] = app.add_option("--out", a.out, "output directory for model, report and manifest");
}

int cmd_train(const TrainArgs& a, std::map<std::string, CLI::Option*>& o, std::ostream& out) {
    Settings s;
    s.load_file(a.config);
    Manifest m;
    if (!a.config.empty()) m.inputs.push_back(a.config);
    s.resolved()["feature"] = a.feature;
    const auto data_path = s.get("data", o["data"], a.data);
    const auto stations_path = s.get("stations", o["stations"], a.stations);
    const auto grid_path = s.get("grid", o["grid"], a.grid);
    if (data_path.empty()) fail(ErrorKind::InvalidConfig, "--data is required");
    if (stations_path.empty()) fail(ErrorKind::InvalidConfig, "--stations is required");
    AssessmentOptions options;
    options.k = s.get("k", o["k"], a.k);
    options.seed = s.get("seed", o["seed"], a.seed);
    options.test_fraction = s.get("test_fraction", o["test_fraction"], a.test_fraction);
    const auto out_dir = s.get("out", o["out"], a.out);
    if (options.k < 2) fail(ErrorKind::InvalidConfig, "--k must be at least 2");

    const auto stations = parse_station_map(read_file(stations_path));
    m.inputs.push_back(data_path);
    m.inputs.push_back(stations_path);
    SearchGrid grid = default_grid();
    if (!grid_path.empty()) {
        grid = grid_from_json(read_json_file(grid_path));
        m.inputs.push_back(grid_path);
    }
    s.resolved()["grid_settings"] = to_json(grid);

    EvaluationReport report;
    std::string model;
    if (a.feature == "userprofile") {
        const auto trips = parse_trip_log(read_file(data_path));
        auto result = assess_userprofile(trips, stations, grid, options);
        report = std::move(result.report);
        model = to_json(result.registry).dump(2) + "\n";
    } else {
        const double fraction = s.get("fraction_observed", o["fraction_observed"], a.fraction);
        const auto trajectories = parse_trajectories(read_file(data_path));
        auto result = assess_locationpreview(trajectories, stations, grid, options, fraction);
        report = std::move(result.report);
        model = to_json(result.model).dump(2) + "\n";
    }

    m.command = "train " + a.feature;
    m.seed = options.seed;
    m.config = s.resolved();
    m.outputs = {{"model.json", model}, {"report.json", to_json(report).dump(2) + "\n"}};
    write_outputs(out_dir, m);
    out << render_report(report);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
    std::string feature, model, user, station, queries, target, trajectory, out;
    Timestamp time = 0;
    double fraction = 1.0;
};

void add_predict(CLI::App& app, PredictArgs& a, std::map<std::string, CLI::Option*>& o) {
    app.add_option("feature", a.feature, "userprofile or locationpreview")
        ->required()
        ->check(CLI::IsMember({"userprofile", "locationpreview"}));
    app.add_option("--model", a.model, "model file written by train")->required();
    o["user"] = app.add_option("--user", a.user, "userprofile: rider id");
    o["station"] = app.add_option("--station", a.station, "userprofile: departure station");
    o["time"] = app.add_option("--time", a.time, "userprofile: departure time, epoch seconds");
    app.add_option("--queries", a.queries, "userprofile: CSV of bikes in use (user_id,leave_station,leave_time)");
    app.add_option("--target", a.target, "userprofile: station of interest for the arrival aggregate");
    app.add_option("--trajectory", a.trajectory, "locationpreview: trajectory JSONL file");
    app.add_option("--fraction", a.fraction, "locationpreview: observed share of each trajectory")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--out", a.out, "write the prediction document here instead of standard output");
}

struct Query {
    UserId user;
    StationId station;
    Timestamp time = 0;
};

std::vector<Query> parse_queries(const std::string& text) {
    // Same strictness as the trip log: header, then one row per bike in use.
    std::vector<Query> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line != "user_id,leave_station,leave_time") throw MalformedRow(1, "expected header user_id,leave_station,leave_time");
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream row(line);
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() != 3 || cells[0].empty() || cells[1].empty()) throw MalformedRow(line_no, "expected 3 fields");
        try {
            std::size_t used = 0;
            const auto t = std::stoll(cells[2], &used);
            if (used != cells[2].size()) throw std::invalid_argument("trailing characters");
            out.push_back({cells[0], cells[1], t});
        } catch (const std::logic_error&) {
            throw MalformedRow(line_no, "leave_time is not an integer");
        }
    }
    if (line_no == 0) throw MalformedRow(1, "missing header");
    return out;
}

ojson userprofile_prediction(const UserModelRegistry& registry, const Query& q) {
    const auto p = registry.predict(q.user, q.station, q.time);
    ojson j;
    j["user"] = q.user;
    j["leave_station"] = q.station;
    j["leave_time"] = q.time;
    j["model_source"] = p.source == ModelSource::User ? "user" : "global";
    j["destination"] = p.destination.station;
    j["probabilities"] = probabilities_json(station_labels(registry.stations()), p.destination.probabilities);
    j["duration_seconds"] = p.duration_seconds;
    j["expected_return_time"] = static_cast<double>(q.time) + p.duration_seconds;
    return j;
}

int cmd_predict(const PredictArgs& a, std::map<std::string, CLI::Option*>& o, std::ostream& out, Manifest& m) {
    m.command = "predict " + a.feature;
    m.config["feature"] = a.feature;
    m.config["model"] = a.model;
    m.inputs.push_back(a.model);
    ojson doc;
    doc["schema"] = "bss.prediction/1";
    doc["feature"] = a.feature;
    try {
        const auto model_json = read_json_file(a.model);
        if (a.feature == "userprofile") {
            const auto registry = registry_from_json(model_json);
            std::vector<Query> queries;
            if (!a.queries.empty()) {
                m.inputs.push_back(a.queries);
                m.config["queries"] = a.queries;
                queries = parse_queries(read_file(a.queries));
            }
            if (o["user"]->count() || o["station"]->count() || o["time"]->count()) {
                if (!o["user"]->count() || !o["station"]->count() || !o["time"]->count())
                    fail(ErrorKind::InvalidConfig, "--user, --station and --time go together");
                queries.push_back({a.user, a.station, a.time});
                m.config["user"] = a.user;
                m.config["station"] = a.station;
                m.config["time"] = a.time;
            }
            if (queries.empty()) fail(ErrorKind::InvalidConfig, "give --user/--station/--time or --queries");
            doc["predictions"] = ojson::array();
            for (const auto& q : queries) doc["predictions"].push_back(userprofile_prediction(registry, q));
            if (!a.target.empty()) {
                registry.stations().require_index(a.target);
                m.config["target"] = a.target;
                double none = 1.0;
                for (const auto& p : doc["predictions"]) none *= 1.0 - p["probabilities"][a.target].get<double>();
                doc["arrival_aggregate"] = {
                    {"station", a.target},
                    {"bikes_in_use", queries.size()},
                    {"probability_any_arrives", 1.0 - none},
                    {"note", "1 - prod(1 - p_i) over the listed bikes, treating trips as independent"}};
            }
        } else {
            const auto model = esn_from_json(model_json);
            if (a.trajectory.empty()) fail(ErrorKind::InvalidConfig, "--trajectory is required");
            m.inputs.push_back(a.trajectory);
            m.config["trajectory"] = a.trajectory;
            m.config["fraction"] = a.fraction;
            const auto trajectories = parse_trajectories(read_file(a.trajectory));
            if (trajectories.empty()) fail(ErrorKind::InvalidConfig, "trajectory file is empty");
            doc["fraction_observed"] = a.fraction;
            doc["predictions"] = ojson::array();
            for (const auto& t : trajectories) {
                const auto prefix = observed_prefix(t, a.fraction);
                const auto p = predict_prefix(model, prefix);
                ojson j;
                j["trip_id"] = t.trip_id;
                j["observed_points"] = prefix.points.size();
                j["destination"] = p.station;
                j["probabilities"] = probabilities_json(model.class_labels(), p.probabilities);
                j["remaining_seconds"] = p.remaining_seconds;
                j["expected_arrival_time"] = p.expected_arrival_time;
                doc["predictions"].push_back(std::move(j));
            }
        }
    } catch (const Error& e) {
        switch (e.kind()) {
            case ErrorKind::UnknownStation:
            case ErrorKind::SchemaMismatch:
            case ErrorKind::DimensionMismatch:
            case ErrorKind::UntrainedModel: throw CommandError{kExitMismatch, e.what()};
            default: throw;
        }
    }
    const auto text = doc.dump(2) + "\n";
    if (a.out.empty()) {
        out << text;
        m.outputs.push_back({"stdout", text});
    } else {
        write_file(a.out, text);
        m.outputs.push_back({a.out, text});
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// status

struct StatusArgs {
    std::string events, stations, json_out;
};

int cmd_status(const StatusArgs& a, std::ostream& out, Manifest& m) {
    m.command = "status";
    m.config = {{"events", a.events}, {"stations", a.stations}};
    m.inputs = {a.events, a.stations};
    const auto stations = parse_station_map(read_file(a.stations));
    const auto events = parse_event_log(read_file(a.events));
    auto state = SystemState::empty(stations);
    for (std::size_t i = 0; i < events.size(); ++i) {
        try {
            apply_event_in_place(state, stations, events[i]);
        } catch (const Error& e) {
            throw CommandError{kExitInput, "line " + std::to_string(i + 2) + ": " + e.what()};
        }
    }
    const auto counts = all_bikes_now(state);

    std::size_t width = 7;
    for (const auto& st : stations.stations()) width = std::max(width, st.id.size());
    std::ostringstream table;
    table << std::left << std::setw(static_cast<int>(width) + 2) << "station" << std::right << std::setw(8) << "bikes"
          << std::setw(10) << "capacity" << '\n';
    ojson doc;
    doc["schema"] = "bss.status/1";
    doc["stations"] = ojson::array();
    for (const auto& st : stations.stations()) {
        const int n = counts.count(st.id) ? counts.at(st.id) : 0;
        table << std::left << std::setw(static_cast<int>(width) + 2) << st.id << std::right << std::setw(8) << n
              << std::setw(10) << st.capacity << '\n';
        doc["stations"].push_back({{"id", st.id}, {"bikes", n}, {"capacity", st.capacity}});
    }
    std::size_t docked = 0;
    for (const auto& [_, n] : counts) docked += static_cast<std::size_t>(n);
    table << "docked " << docked << ", in use " << state.in_transit.size() << ", events " << events.size() << '\n';
    doc["docked"] = docked;
    doc["in_use"] = state.in_transit.size();
    doc["events"] = events.size();

    out << table.str();
    m.outputs.push_back({"stdout", table.str()});
    if (!a.json_out.empty()) {
        const auto text = doc.dump(2) + "\n";
        write_file(a.json_out, text);
        m.outputs.push_back({a.json_out, text});
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// rank

struct RankArgs {
    std::string config, feature_model, out;
    std::vector<std::string> reports;
    double w_acc = 1.0, w_mae = 1.0, w_cost = 1.0, horizon = 1800.0;
};

void add_rank(CLI::App& app, RankArgs& a, std::map<std::string, CLI::Option*>& o) {
    o["config"] = app.add_option("--config", a.config, "JSON file with any of the options below (flags win)");
    o["feature_model"] = app.add_option("--feature-model", a.feature_model, "feature-model JSON file; defaults to the Status subsystem model with zero costs");
    o["reports"] = app.add_option("--report", a.reports, "FEATURE=PATH of an evaluation report, repeatable");
    o["w_acc"] = app.add_option("--w-acc", a.w_acc, "weight of mean accuracy");
    o["w_mae"] = app.add_option("--w-mae", a.w_mae, "weight of mean MAE / horizon");
    o["w_cost"] = app.add_option("--w-cost", a.w_cost, "weight of cost / max cost");
    o["mae_horizon_s"] = app.add_option("--horizon", a.horizon, "MAE normalization horizon in seconds");
    app.add_option("--out", a.out, "write the machine-readable ranking here");
}

int cmd_rank(const RankArgs& a, std::map<std::string, CLI::Option*>& o, std::ostream& out, std::ostream& err,
             Manifest& m) {
    Settings s;
    s.load_file(a.config);
    if (!a.config.empty()) m.inputs.push_back(a.config);
    const auto fm_path = s.get("feature_model", o["feature_model"], a.feature_model);
    const auto report_args = s.get("reports", o["reports"], a.reports);
    TradeoffWeights w;
    w.accuracy = s.get("w_acc", o["w_acc"], a.w_acc);
    w.mae = s.get("w_mae", o["w_mae"], a.w_mae);
    w.cost = s.get("w_cost", o["w_cost"], a.w_cost);
    w.mae_horizon_s = s.get("mae_horizon_s", o["mae_horizon_s"], a.horizon);
    m.command = "rank";
    m.config = s.resolved();
    FeatureModel model = status_feature_model();
    if (!fm_path.empty()) {
        m.inputs.push_back(fm_path);
        model = feature_model_from_json(read_json_file(fm_path));
    }
    std::map<std::string, EvaluationReport> reports;
    for (const auto& arg : report_args) {
        const auto eq = arg.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size())
            fail(ErrorKind::InvalidConfig, "--report expects FEATURE=PATH, got " + arg);
        const auto path = arg.substr(eq + 1);
        m.inputs.push_back(path);
        reports[arg.substr(0, eq)] = report_from_json(read_json_file(path));
    }
    std::set<std::string> digests;
    for (const auto& [_, r] : reports)
        if (!r.station_map_digest.empty()) digests.insert(r.station_map_digest);

    const auto attributed = attach_measurements(model, reports);
    const auto ranking = rank_products(enumerate_products(attributed), w);
    const std::string table = render_ranking(ranking);
    if (digests.size() > 1)
        err << "warning: the reports were produced on different station maps; their metrics may not be comparable\n";
    out << table;
    m.outputs.push_back({"stdout", table});
    if (!a.out.empty()) {
        const auto text = to_json(ranking).dump(2) + "\n";
        write_file(a.out, text);
        m.outputs.push_back({a.out, text});
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bike-sharing arrival prediction toolkit", kToolName};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    std::string manifest_path;
    auto add_manifest = [&](CLI::App* cmd) {
        cmd->add_option("--manifest", manifest_path, "write the run manifest to this file");
    };

    DatagenArgs datagen;
    std::map<std::string, CLI::Option*> datagen_opts;
    auto* datagen_cmd = app.add_subcommand("datagen", "generate synthetic stations, trips, trajectories and events");
    add_datagen(*datagen_cmd, datagen, datagen_opts);

    TrainArgs train;
    std::map<std::string, CLI::Option*> train_opts;
    auto* train_cmd = app.add_subcommand("train", "cross-validate, select, assess and save a predictive feature");
    add_train(*train_cmd, train, train_opts);

    PredictArgs predict;
    std::map<std::string, CLI::Option*> predict_opts;
    auto* predict_cmd = app.add_subcommand("predict", "predict destination and arrival time with a trained model");
    add_predict(*predict_cmd, predict, predict_opts);
    add_manifest(predict_cmd);

    StatusArgs status;
    auto* status_cmd = app.add_subcommand("status", "replay a bike event log and count docked bikes per station");
    status_cmd->add_option("--events", status.events, "event log CSV")->required();
    status_cmd->add_option("--stations", status.stations, "station-map JSON file")->required();
    status_cmd->add_option("--json", status.json_out, "also write the counts as JSON here");
    add_manifest(status_cmd);

    RankArgs rank;
    std::map<std::string, CLI::Option*> rank_opts;
    auto* rank_cmd = app.add_subcommand("rank", "rank the product configurations of a feature model");
    add_rank(*rank_cmd, rank, rank_opts);
    add_manifest(rank_cmd);

    std::string report_path;
    auto* report_cmd = app.add_subcommand("report", "pretty-print a stored evaluation report");
    report_cmd->add_option("path", report_path, "report.json written by train")->required();
    add_manifest(report_cmd);

    std::ostringstream out_buf, err_buf;
    int code = kExitOk;
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
        Manifest m;
        if (*datagen_cmd) {
            code = cmd_datagen(datagen, datagen_opts, out_buf);
        } else if (*train_cmd) {
            code = cmd_train(train, train_opts, out_buf);
        } else if (*predict_cmd) {
            code = cmd_predict(predict, predict_opts, out_buf, m);
        } else if (*status_cmd) {
            code = cmd_status(status, out_buf, m);
        } else if (*rank_cmd) {
            code = cmd_rank(rank, rank_opts, out_buf, err_buf, m);
        } else if (*report_cmd) {
            m.command = "report";
            m.config = {{"path", report_path}};
            m.inputs = {report_path};
            const auto text = render_report(report_from_json(read_json_file(report_path)));
            out_buf << text;
            m.outputs.push_back({"stdout", text});
        }
        if (!manifest_path.empty()) write_file(manifest_path, m.render());
    } catch (const CLI::ParseError& e) {
        const int parse_code = app.exit(e, out_buf, err_buf);
        code = parse_code == 0 ? kExitOk : kExitInput;
    } catch (const CommandError& e) {
        err_buf << "error: " << e.message << '\n';
        code = e.code;
    } catch (const Error& e) {
        err_buf << "error: " << e.what() << '\n';
        code = default_exit_code(e.kind());
    } catch (const std::exception& e) {
        err_buf << "error: " << e.what() << '\n';
        code = kExitFailure;
    }
    out << out_buf.str();
    err << err_buf.str();
    return code;
}

}  // namespace bss
