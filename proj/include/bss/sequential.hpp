#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Sparse>

#include "bss/static_learners.hpp"

namespace bss {

struct ReservoirConfig {
    std::size_t n_reservoir = 100;
    double spectral_radius = 0.9;
    double connectivity = 0.1;  ///< fraction of nonzero recurrent weights
    double input_scaling = 1.0;
    double leak_rate = 0.3;
    double ridge_lambda = 1e-6;
    std::size_t washout = 0;
    std::uint64_t seed = 0;

    friend bool operator==(const ReservoirConfig&, const ReservoirConfig&) = default;
};

/// Throws InvalidConfig.
void validate(const ReservoirConfig& config);

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Leaky echo state network with a linear readout producing K class scores
/// and one remaining-time output (seconds).
struct EsnModel {
    ReservoirConfig config;
    StationMap stations;          ///< feature reference and class labels
    std::size_t input_dim = 0;
    Matrix input_weights;         ///< n x (input_dim + 1), column 0 multiplies the constant 1
    SparseMatrix recurrent;       ///< n x n, fixed after initialization
    Matrix readout;               ///< (K + 1) x (n + input_dim + 1); zero until trained
    bool trained = false;
    DataFingerprint trained_on;

    std::size_t n_classes() const noexcept { return stations.size(); }
    std::vector<StationId> class_labels() const;
    std::size_t extended_dim() const noexcept { return config.n_reservoir + input_dim + 1; }
};

/// Per-step inputs of a trajectory, one row per point: dx, dy (m), speed
/// (m/s), heading sin, heading cos, then the distance to every station (km).
/// The first row has zero displacement, speed and heading.
Matrix sequence_features(const GpsTrajectory& trajectory, const StationMap& stations);

constexpr std::size_t sequence_input_dim(std::size_t n_stations) noexcept { return 5 + n_stations; }

/// Largest eigenvalue modulus of a square matrix, by block power iteration
/// with Rayleigh-Ritz extraction. Throws SpectralRadiusFailure when the
/// estimate has not settled to `tol` within `max_iters` iterations.
double spectral_radius(const SparseMatrix& W, std::uint64_t seed, double tol = 1e-8, int max_iters = 1000);

/// Draws W_in and the sparse recurrent matrix, rescaled to the configured
/// spectral radius. The readout starts at zero.
EsnModel init_reservoir(const ReservoirConfig& config, const StationMap& stations);
EsnModel init_reservoir(const ReservoirConfig& config, const StationMap& stations, std::size_t input_dim);

/// state' = (1 - a) state + a tanh(W_in [1; u] + W state). Throws DimensionMismatch.
Vector reservoir_step(const EsnModel& model, const Vector& state, const Vector& input);

/// Design matrix of extended states [state; u; 1] (one row per step after
/// washout) and targets [one_of_k(destination), remaining seconds].
struct ReadoutProblem {
    Matrix states;
    Matrix targets;
};

ReadoutProblem collect_readout_problem(const EsnModel& model, const std::vector<GpsTrajectory>& trajectories);

/// Fits the readout in closed form; every other weight is untouched.
/// Throws InsufficientData, UnknownStation or SingularSystem.
EsnModel train_esn(EsnModel model, const std::vector<GpsTrajectory>& trajectories);

struct ArrivalPrediction {
    Vector probabilities;
    std::size_t index = 0;
    StationId station;
    double remaining_seconds = 0.0;  ///< clamped at 0
    double expected_arrival_time = 0.0;
};

/// Runs the reservoir over the whole of `prefix` (at least 2 points).
/// Throws UntrainedModel or DimensionMismatch.
ArrivalPrediction predict_prefix(const EsnModel& model, const GpsTrajectory& prefix);

/// Cuts the trajectory to the observed fraction and predicts from it.
ArrivalPrediction predict_from_prefix(const EsnModel& model, const GpsTrajectory& trajectory, double fraction_observed);

// ---------------------------------------------------------------------------
// Sliding-window baseline

struct WindowClassifier {
    ClassifierModel model;
    std::size_t window_len = 1;
    StationMap stations;
};

/// Flattened inputs of the window ending at `step`, zero-padded before the start.
Vector window_at(const Matrix& features, std::size_t step, std::size_t window_len);

/// One sample per point: its trailing window labelled with the destination.
ClassificationData window_dataset(const std::vector<GpsTrajectory>& trajectories, const StationMap& stations,
                                  std::size_t window_len);

WindowClassifier sliding_window_baseline(const std::vector<GpsTrajectory>& trajectories, const StationMap& stations,
                                         std::size_t window_len, const ClassifierHyperparameters& hyper);

/// Classifies the last window of the prefix.
DestinationPrediction predict_window(const WindowClassifier& classifier, const GpsTrajectory& prefix);

}  // namespace bss
