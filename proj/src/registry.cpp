#include "bss/registry.hpp"

#include "bss/error.hpp"

namespace bss {

ClassificationData destination_dataset(const std::vector<TripRecord>& trips, const StationMap& stations) {
    ClassificationData data;
    data.X.resize(static_cast<Eigen::Index>(trips.size()), static_cast<Eigen::Index>(static_input_dim(stations.size())));
    for (std::size_t i = 0; i < trips.size(); ++i) {
        data.X.row(static_cast<Eigen::Index>(i)) = encode_trip_input(trips[i], stations).transpose();
        data.labels.push_back(stations.require_index(trips[i].return_station));
    }
    return data;
}

Vector duration_targets(const std::vector<TripRecord>& trips) {
    Vector y(static_cast<Eigen::Index>(trips.size()));
    for (std::size_t i = 0; i < trips.size(); ++i) y(static_cast<Eigen::Index>(i)) = static_cast<double>(trips[i].duration());
    return y;
}

UserModelRegistry::UserModelRegistry(StationMap stations, RegistryConfig config)
    : stations_(std::move(stations)), config_(std::move(config)) {
    if (config_.retrain_threshold == 0) fail(ErrorKind::InvalidConfig, "retrain_threshold must be positive");
    if (config_.classifier.kind == ClassifierKind::NaiveBayes && config_.classifier.feature_kinds.empty())
        config_.classifier.feature_kinds = departure_feature_kinds(stations_.size());
}

void UserModelRegistry::maintain(UserModels& entry) const {
    const bool due = entry.trained() ? entry.pending.size() >= config_.retrain_threshold
                                     : entry.history.size() + entry.pending.size() >= config_.min_bootstrap;
    if (!due) return;
    std::vector<TripRecord> all = entry.history;
    all.insert(all.end(), entry.pending.begin(), entry.pending.end());
    try {
        const auto data = destination_dataset(all, stations_);
        auto classifier = train_classifier(data, station_labels(stations_), config_.classifier);
        auto regressor = train_regressor(data.X, duration_targets(all), config_.ridge_lambda);
        entry.classifier = std::move(classifier);
        entry.regressor = std::move(regressor);
        entry.n_trained_on = all.size();
        ++entry.n_trainings;
    } catch (const Error&) {
        // Keep serving the previous models; the trips still join the history.
    }
    entry.history = std::move(all);
    entry.pending.clear();
}

void UserModelRegistry::ingest(const TripRecord& trip) {
    validate_trip(trip, stations_);
    auto& entry = users_[trip.user_id];
    entry.pending.push_back(trip);
    maintain(entry);
    global_.pending.push_back(trip);
    maintain(global_);
}

UserPrediction UserModelRegistry::predict(const UserId& user, const StationId& leave_station, Timestamp leave_time) const {
    const auto x = encode_departure(stations_.require_index(leave_station), stations_.size(), leave_time);
    const UserModels* models = &global_;
    UserPrediction out;
    if (auto it = users_.find(user); it != users_.end() && it->second.trained()) {
        models = &it->second;
        out.source = ModelSource::User;
    }
    if (!models->trained()) fail(ErrorKind::UntrainedModel, "no model available for user '" + user + "'");
    out.destination = predict_destination(*models->classifier, x);
    out.duration_seconds = std::max(0.0, predict_regressor(*models->regressor, x));
    return out;
}

const UserModels* UserModelRegistry::user(const UserId& id) const {
    auto it = users_.find(id);
    return it == users_.end() ? nullptr : &it->second;
}

void UserModelRegistry::install(const UserId& id, ClassifierModel classifier, RegressorModel regressor,
                                std::size_t n_trained_on) {
    auto& entry = users_[id];
    entry.classifier = std::move(classifier);
    entry.regressor = std::move(regressor);
    entry.n_trained_on = n_trained_on;
}

void UserModelRegistry::install_global(ClassifierModel classifier, RegressorModel regressor, std::size_t n_trained_on) {
    global_.classifier = std::move(classifier);
    global_.regressor = std::move(regressor);
    global_.n_trained_on = n_trained_on;
}

}  // namespace bss
