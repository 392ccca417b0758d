#include "bss/pipelines.hpp"

#include <algorithm>
#include <map>

#include "bss/digest.hpp"
#include "bss/error.hpp"
#include "bss/formats.hpp"
#include "bss/rng.hpp"

namespace bss {

namespace {

enum Stream : std::uint64_t { kUserAssessment = 31, kReservoir = 32, kPreviewAssessment = 33 };

std::vector<Setting> setting_list(const nlohmann::json& j, const char* section, std::vector<Setting> fallback) {
    if (!j.contains(section)) return fallback;
    const auto& list = j.at(section);
    if (!list.is_array() || list.empty()) fail(ErrorKind::InvalidConfig, std::string("grid section ") + section + " must be a nonempty array");
    std::vector<Setting> out;
    for (const auto& s : list) {
        if (!s.is_object()) fail(ErrorKind::InvalidConfig, std::string("grid section ") + section + " holds a non-object");
        out.push_back(s);
    }
    return out;
}

template <class T>
T setting_value(const Setting& s, const char* key, T fallback) {
    if (!s.contains(key)) return fallback;
    try {
        return s.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorKind::InvalidConfig, std::string("setting field ") + key + " has the wrong type");
    }
}

void check_keys(const Setting& s, std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : s.items())
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            fail(ErrorKind::InvalidConfig, "unknown setting field " + key);
}

ClassificationData subset(const ClassificationData& data, std::span<const std::size_t> rows) {
    ClassificationData out;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), data.X.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.X.row(static_cast<Eigen::Index>(r)) = data.X.row(static_cast<Eigen::Index>(rows[r]));
        out.labels.push_back(data.labels[rows[r]]);
    }
    return out;
}

Vector subset(const Vector& v, std::span<const std::size_t> rows) {
    Vector out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Eigen::Index>(r)) = v(static_cast<Eigen::Index>(rows[r]));
    return out;
}

std::vector<std::size_t> to_global(const std::vector<std::size_t>& local, const std::vector<std::size_t>& rows) {
    std::vector<std::size_t> out;
    for (auto i : local) out.push_back(rows[i]);
    return out;
}

ModelFamily classifier_family(const ClassificationData& data, const StationMap& stations) {
    ModelFamily f;
    f.name = "destination classifier";
    f.task = Task::Classification;
    f.fit = [&data, &stations](std::span<const std::size_t> train, const Setting& setting) {
        auto model = train_classifier(subset(data, train), station_labels(stations),
                                      classifier_setting(setting, stations.size()));
        Fitted fitted;
        fitted.predict = [&data, model](std::size_t i) {
            return Prediction{predict_destination(model, data.X.row(static_cast<Eigen::Index>(i)).transpose()).index, 0.0};
        };
        fitted.model = std::move(model);
        return fitted;
    };
    return f;
}

ModelFamily regressor_family(const Matrix& X, const Vector& y) {
    ModelFamily f;
    f.name = "duration regressor";
    f.task = Task::Regression;
    f.fit = [&X, &y](std::span<const std::size_t> train, const Setting& setting) {
        Matrix Xt(static_cast<Eigen::Index>(train.size()), X.cols());
        for (std::size_t r = 0; r < train.size(); ++r)
            Xt.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(train[r]));
        auto model = train_regressor(Xt, subset(y, train), regressor_setting(setting));
        Fitted fitted;
        fitted.predict = [&X, model](std::size_t i) {
            return Prediction{0, std::max(0.0, predict_regressor(model, X.row(static_cast<Eigen::Index>(i)).transpose()))};
        };
        fitted.model = std::move(model);
        return fitted;
    };
    return f;
}

Assessment assess_scope(const std::string& scope, const EvalData& data, const ModelFamily& family,
                        const std::vector<Setting>& grid, const AssessmentOptions& options, std::uint64_t seed) {
    try {
        auto a = final_assessment(data, options.test_fraction, family, grid, options.k, seed);
        a.report.scope = scope;
        return a;
    } catch (const Error& e) {
        throw Error(e.kind(), scope + ": " + e.what());
    }
}

}  // namespace

SearchGrid default_grid() {
    SearchGrid g;
    g.classifier = {
        {{"kind", "naive-bayes"}},
        {{"kind", "logistic-regression"}, {"l2", 0.0}},
        {{"kind", "logistic-regression"}, {"l2", 1e-3}},
        {{"kind", "logistic-regression"}, {"l2", 1e-1}},
    };
    g.regressor = {{{"ridge_lambda", 1e-3}}, {{"ridge_lambda", 1e-1}}, {{"ridge_lambda", 1.0}}, {{"ridge_lambda", 10.0}}};
    g.reservoir = {{{"ridge_lambda", 1e-6}}, {{"ridge_lambda", 1e-3}}};
    return g;
}

SearchGrid grid_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorKind::InvalidConfig, "grid file must hold an object");
    const auto d = default_grid();
    SearchGrid g;
    g.classifier = setting_list(j, "classifier", d.classifier);
    g.regressor = setting_list(j, "regressor", d.regressor);
    g.reservoir = setting_list(j, "reservoir", d.reservoir);
    for (const auto& s : g.classifier) classifier_setting(s, 2);
    for (const auto& s : g.regressor) regressor_setting(s);
    for (const auto& s : g.reservoir) reservoir_setting(s, 0);
    return g;
}

nlohmann::ordered_json to_json(const SearchGrid& grid) {
    nlohmann::ordered_json j;
    j["classifier"] = grid.classifier;
    j["regressor"] = grid.regressor;
    j["reservoir"] = grid.reservoir;
    return j;
}

ClassifierHyperparameters classifier_setting(const Setting& setting, std::size_t n_stations) {
    check_keys(setting, {"kind", "l2", "learning_rate", "max_iters"});
    ClassifierHyperparameters h;
    h.kind = parse_classifier_kind(setting_value<std::string>(setting, "kind", to_string(h.kind)));
    h.l2 = setting_value(setting, "l2", h.l2);
    h.learning_rate = setting_value(setting, "learning_rate", h.learning_rate);
    h.max_iters = setting_value(setting, "max_iters", h.max_iters);
    if (!(h.l2 >= 0.0) || !(h.learning_rate > 0.0) || h.max_iters < 1)
        fail(ErrorKind::InvalidConfig, "invalid classifier setting " + setting.dump());
    if (h.kind == ClassifierKind::NaiveBayes) h.feature_kinds = departure_feature_kinds(n_stations);
    return h;
}

double regressor_setting(const Setting& setting) {
    check_keys(setting, {"ridge_lambda"});
    const double lambda = setting_value(setting, "ridge_lambda", 1.0);
    if (!(lambda >= 0.0)) fail(ErrorKind::InvalidConfig, "ridge_lambda must be nonnegative");
    return lambda;
}

ReservoirConfig reservoir_setting(const Setting& setting, std::uint64_t seed) {
    check_keys(setting, {"n_reservoir", "spectral_radius", "connectivity", "input_scaling", "leak_rate", "ridge_lambda",
                         "washout"});
    ReservoirConfig c;
    c.n_reservoir = setting_value(setting, "n_reservoir", c.n_reservoir);
    c.spectral_radius = setting_value(setting, "spectral_radius", c.spectral_radius);
    c.connectivity = setting_value(setting, "connectivity", c.connectivity);
    c.input_scaling = setting_value(setting, "input_scaling", c.input_scaling);
    c.leak_rate = setting_value(setting, "leak_rate", c.leak_rate);
    c.ridge_lambda = setting_value(setting, "ridge_lambda", c.ridge_lambda);
    c.washout = setting_value(setting, "washout", c.washout);
    c.seed = seed;
    validate(c);
    return c;
}

UserProfileResult assess_userprofile(const std::vector<TripRecord>& trips, const StationMap& stations,
                                     const SearchGrid& grid, const AssessmentOptions& options,
                                     const RegistryConfig& registry_config) {
    for (const auto& t : trips) validate_trip(t, stations);
    std::map<UserId, std::vector<std::size_t>> by_user;
    for (std::size_t i = 0; i < trips.size(); ++i) by_user[trips[i].user_id].push_back(i);
    if (by_user.empty()) fail(ErrorKind::TooFewSamples, "the trip log is empty");

    UserProfileResult result{EvaluationReport{}, UserModelRegistry(stations, registry_config)};
    auto& pooled = result.report;
    const auto labels = station_labels(stations);
    EvalData pooled_destinations{0, {}, {}, labels};
    EvalData pooled_durations;
    std::vector<Prediction> dest_predictions, dur_predictions;
    std::vector<bool> in_test(trips.size(), false);
    pooled.selected = nlohmann::json::object();

    for (const auto& [user, rows] : by_user) {
        std::vector<TripRecord> own;
        for (auto i : rows) own.push_back(trips[i]);
        const auto dest_data = destination_dataset(own, stations);
        const Vector durations = duration_targets(own);
        const std::uint64_t seed = stream_key(options.seed, kUserAssessment, fnv1a64(user));

        EvalData dest{own.size(), dest_data.labels, {}, labels};
        EvalData dur{own.size(), {}, std::vector<double>(durations.data(), durations.data() + durations.size()), {}};
        auto a = assess_scope("user " + user + " destination", dest, classifier_family(dest_data, stations),
                              grid.classifier, options, seed);
        auto b = assess_scope("user " + user + " duration", dur, regressor_family(dest_data.X, durations),
                              grid.regressor, options, seed);

        for (std::size_t t = 0; t < a.report.test_indices.size(); ++t) {
            pooled_destinations.labels.push_back(dest.labels[a.report.test_indices[t]]);
            dest_predictions.push_back(a.test_predictions[t]);
        }
        for (std::size_t t = 0; t < b.report.test_indices.size(); ++t) {
            pooled_durations.values.push_back(dur.values[b.report.test_indices[t]]);
            dur_predictions.push_back(b.test_predictions[t]);
        }
        for (auto* r : {&a.report, &b.report}) {
            r->scope = user + (r == &a.report ? "/destination" : "/duration");
            r->test_indices = to_global(r->test_indices, rows);
            r->cv_indices = to_global(r->cv_indices, rows);
            for (auto i : r->test_indices) in_test[i] = true;
        }
        pooled.selected[user] = {{"destination", a.report.selected}, {"duration", b.report.selected}};

        result.registry.install(user, std::any_cast<ClassifierModel>(a.selected_model.model),
                                std::any_cast<RegressorModel>(b.selected_model.model), a.report.cv_indices.size());
        pooled.components.push_back(std::move(a.report));
        pooled.components.push_back(std::move(b.report));
    }

    // Global fallback for users without a model of their own.
    std::vector<TripRecord> training;
    for (std::size_t i = 0; i < trips.size(); ++i)
        if (!in_test[i]) training.push_back(trips[i]);
    if (training.size() >= 2) {
        auto hyper = registry_config.classifier;
        if (hyper.kind == ClassifierKind::NaiveBayes && hyper.feature_kinds.empty())
            hyper.feature_kinds = departure_feature_kinds(stations.size());
        const auto data = destination_dataset(training, stations);
        result.registry.install_global(train_classifier(data, labels, hyper),
                                       train_regressor(data.X, duration_targets(training), registry_config.ridge_lambda),
                                       training.size());
    }

    const auto digest = sha256_hex(serialize_station_map(stations));
    for (auto& c : pooled.components) {
        c.station_map_digest = digest;
        assign_report_id(c);
    }
    pooled_destinations.n = pooled_destinations.labels.size();
    pooled_durations.n = pooled_durations.values.size();
    std::vector<std::size_t> dest_idx(pooled_destinations.n), dur_idx(pooled_durations.n);
    for (std::size_t i = 0; i < dest_idx.size(); ++i) dest_idx[i] = i;
    for (std::size_t i = 0; i < dur_idx.size(); ++i) dur_idx[i] = i;
    pooled.final_test = compute_metrics(pooled_destinations, dest_idx, dest_predictions);
    pooled.final_test.mae_seconds = compute_metrics(pooled_durations, dur_idx, dur_predictions).mae_seconds;

    pooled.model_descriptor = "userprofile: per-user destination classifier and duration regressor";
    pooled.scope = "all users (" + std::to_string(by_user.size()) + ")";
    pooled.task = Task::Classification;
    pooled.k = options.k;
    pooled.seed = options.seed;
    pooled.test_fraction = options.test_fraction;
    for (std::size_t i = 0; i < trips.size(); ++i) (in_test[i] ? pooled.test_indices : pooled.cv_indices).push_back(i);
    pooled.station_map_digest = digest;
    assign_report_id(pooled);
    return result;
}

LocationPreviewResult assess_locationpreview(const std::vector<GpsTrajectory>& trajectories, const StationMap& stations,
                                             const SearchGrid& grid, const AssessmentOptions& options,
                                             double fraction_observed) {
    if (!(fraction_observed > 0.0 && fraction_observed <= 1.0))
        fail(ErrorKind::InvalidConfig, "fraction_observed must lie in (0, 1]");
    EvalData data;
    data.n = trajectories.size();
    data.class_names = station_labels(stations);
    for (const auto& t : trajectories) {
        validate_trajectory(t);
        if (!t.truth) fail(ErrorKind::InvalidRecord, "trajectory " + t.trip_id + " has no ground truth");
        data.labels.push_back(stations.require_index(t.truth->destination));
        data.values.push_back(t.truth->arrival_time);
    }
    const std::uint64_t reservoir_seed = stream_key(options.seed, kReservoir);

    ModelFamily family;
    family.name = "echo state network";
    family.task = Task::Classification;
    family.fit = [&](std::span<const std::size_t> train, const Setting& setting) {
        std::vector<GpsTrajectory> subset;
        for (auto i : train) subset.push_back(trajectories[i]);
        auto model = train_esn(init_reservoir(reservoir_setting(setting, reservoir_seed), stations), subset);
        Fitted fitted;
        fitted.predict = [&trajectories, model, fraction_observed](std::size_t i) {
            const auto p = predict_from_prefix(model, trajectories[i], fraction_observed);
            return Prediction{p.index, p.expected_arrival_time};
        };
        fitted.model = std::move(model);
        return fitted;
    };

    auto a = assess_scope("trajectories", data, family, grid.reservoir, options,
                          stream_key(options.seed, kPreviewAssessment));
    LocationPreviewResult result{std::move(a.report), std::any_cast<EsnModel>(a.selected_model.model)};
    auto& r = result.report;
    r.model_descriptor = "locationpreview: echo state network, prefix fraction " + nlohmann::json(fraction_observed).dump();
    r.scope = "all trajectories (" + std::to_string(trajectories.size()) + ")";
    r.seed = options.seed;
    r.station_map_digest = sha256_hex(serialize_station_map(stations));
    assign_report_id(r);
    return result;
}

}  // namespace bss
