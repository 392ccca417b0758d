#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "bss/evaluation.hpp"
#include "bss/registry.hpp"
#include "bss/sequential.hpp"

namespace bss {

/// Hyperparameter grids searched by the two predictive features.
///
/// classifier settings: {"kind": "naive-bayes" | "logistic-regression", "l2", "learning_rate", "max_iters"}
/// regressor settings:  {"ridge_lambda"}
/// reservoir settings:  any ReservoirConfig field except the seed
struct SearchGrid {
    std::vector<Setting> classifier;
    std::vector<Setting> regressor;
    std::vector<Setting> reservoir;
};

SearchGrid default_grid();
/// Missing sections fall back to the defaults. Throws InvalidConfig.
SearchGrid grid_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SearchGrid& grid);

ClassifierHyperparameters classifier_setting(const Setting& setting, std::size_t n_stations);
double regressor_setting(const Setting& setting);
ReservoirConfig reservoir_setting(const Setting& setting, std::uint64_t seed);

struct AssessmentOptions {
    std::size_t k = 5;
    std::uint64_t seed = 0;
    double test_fraction = 0.2;
};

// ---------------------------------------------------------------------------
// UserProfile

struct UserProfileResult {
    /// Pooled over users: accuracy from the destination classifiers, MAE from
    /// the duration regressors. `components` holds every per-user report.
    EvaluationReport report;
    /// Selected per-user models plus a global fallback trained on all
    /// non-test trips.
    UserModelRegistry registry;
};

/// Per-user final assessment of the destination classifier and the duration
/// regressor. Throws TooFewSamples naming the user.
UserProfileResult assess_userprofile(const std::vector<TripRecord>& trips, const StationMap& stations,
                                     const SearchGrid& grid, const AssessmentOptions& options,
                                     const RegistryConfig& registry_config = {});

// ---------------------------------------------------------------------------
// LocationPreview

struct LocationPreviewResult {
    EvaluationReport report;
    EsnModel model;
};

/// Final assessment of the ESN on trajectories; every prediction sees the
/// first `fraction_observed` of the held-out trajectory. Accuracy scores the
/// destination, MAE the expected arrival time.
LocationPreviewResult assess_locationpreview(const std::vector<GpsTrajectory>& trajectories, const StationMap& stations,
                                             const SearchGrid& grid, const AssessmentOptions& options,
                                             double fraction_observed = 0.8);

}  // namespace bss
