#pragma once

#include <map>
#include <optional>
#include <vector>

#include "bss/static_learners.hpp"

namespace bss {

struct RegistryConfig {
    /// New trips buffered per user before both models are retrained.
    std::size_t retrain_threshold = 50;
    /// Trips needed before a user gets a personal model; until then the
    /// global model answers.
    std::size_t min_bootstrap = 20;
    ClassifierHyperparameters classifier;
    double ridge_lambda = 1.0;
};

/// Destination classifier and duration regressor of one user (or of the
/// global fallback). The two are trained separately and share nothing.
struct UserModels {
    std::optional<ClassifierModel> classifier;
    std::optional<RegressorModel> regressor;
    std::size_t n_trained_on = 0;
    std::size_t n_trainings = 0;
    std::vector<TripRecord> history;  ///< trips already used for training
    std::vector<TripRecord> pending;  ///< trips buffered since the last training

    bool trained() const noexcept { return classifier.has_value() && regressor.has_value(); }
};

enum class ModelSource { User, Global };

struct UserPrediction {
    DestinationPrediction destination;
    double duration_seconds = 0.0;  ///< clamped at 0
    ModelSource source = ModelSource::Global;
};

/// Per-user UserProfile models with buffered run-time retraining.
class UserModelRegistry {
public:
    UserModelRegistry(StationMap stations, RegistryConfig config);

    /// Buffers the trip; retrains the user's (and the global) models once the
    /// buffer reaches the threshold. Never throws on a valid trip.
    void ingest(const TripRecord& trip);

    /// Serves the user's own models when trained, else the global ones.
    /// Throws UntrainedModel when neither exists.
    UserPrediction predict(const UserId& user, const StationId& leave_station, Timestamp leave_time) const;

    const UserModels* user(const UserId& id) const;
    const UserModels& global() const noexcept { return global_; }
    const std::map<UserId, UserModels>& users() const noexcept { return users_; }
    const RegistryConfig& config() const noexcept { return config_; }
    const StationMap& stations() const noexcept { return stations_; }

    /// Installs externally trained models (e.g. loaded from disk).
    void install(const UserId& id, ClassifierModel classifier, RegressorModel regressor, std::size_t n_trained_on);
    void install_global(ClassifierModel classifier, RegressorModel regressor, std::size_t n_trained_on);

private:
    void maintain(UserModels& entry) const;

    StationMap stations_;
    RegistryConfig config_;
    std::map<UserId, UserModels> users_;
    UserModels global_;
};

/// Builds classifier / regressor training sets from trips.
ClassificationData destination_dataset(const std::vector<TripRecord>& trips, const StationMap& stations);
Vector duration_targets(const std::vector<TripRecord>& trips);

}  // namespace bss
