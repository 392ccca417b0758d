#include "bss/sequential.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "bss/error.hpp"
#include "bss/rng.hpp"

namespace bss {

namespace {

enum Stream : std::uint64_t { kRecurrent = 11, kInput = 12, kPower = 13 };

void require(bool ok, const char* what) {
    if (!ok) fail(ErrorKind::InvalidConfig, what);
}

double nonzero_uniform(Engine& rng) {
    double v = 0.0;
    while (v == 0.0) v = uniform(rng, -1.0, 1.0);
    return v;
}

double max_ritz_modulus(const Matrix& H) {
    Eigen::EigenSolver<Matrix> es(H, false);
    if (es.info() != Eigen::Success) fail(ErrorKind::SpectralRadiusFailure, "Ritz eigenvalue extraction failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

void check_ground_truth(const GpsTrajectory& traj, const StationMap& stations) {
    if (!traj.truth) fail(ErrorKind::InsufficientData, "trajectory " + traj.trip_id + " has no ground truth");
    stations.require_index(traj.truth->destination);
}

}  // namespace

void validate(const ReservoirConfig& c) {
    require(c.n_reservoir > 0, "n_reservoir must be positive");
    require(c.spectral_radius > 0.0 && c.spectral_radius < 1.0, "spectral_radius must lie in (0, 1)");
    require(c.connectivity > 0.0 && c.connectivity <= 1.0, "connectivity must lie in (0, 1]");
    require(c.input_scaling > 0.0 && std::isfinite(c.input_scaling), "input_scaling must be positive");
    require(c.leak_rate > 0.0 && c.leak_rate <= 1.0, "leak_rate must lie in (0, 1]");
    require(c.ridge_lambda >= 0.0 && std::isfinite(c.ridge_lambda), "ridge_lambda must be nonnegative");
}

std::vector<StationId> EsnModel::class_labels() const {
    std::vector<StationId> labels;
    for (const auto& s : stations.stations()) labels.push_back(s.id);
    return labels;
}

Matrix sequence_features(const GpsTrajectory& trajectory, const StationMap& stations) {
    const auto T = static_cast<Eigen::Index>(trajectory.points.size());
    const auto S = stations.size();
    Matrix F = Matrix::Zero(T, static_cast<Eigen::Index>(sequence_input_dim(S)));
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto& p = trajectory.points[static_cast<std::size_t>(t)];
        if (t > 0) {
            const auto& q = trajectory.points[static_cast<std::size_t>(t - 1)];
            const double dx = p.pos.x - q.pos.x;
            const double dy = p.pos.y - q.pos.y;
            const double len = std::hypot(dx, dy);
            const double dt = p.t - q.t;
            F(t, 0) = dx;
            F(t, 1) = dy;
            F(t, 2) = dt > 0.0 ? len / dt : 0.0;
            if (len > 0.0) {
                F(t, 3) = dy / len;
                F(t, 4) = dx / len;
            }
        }
        for (std::size_t s = 0; s < S; ++s)
            F(t, static_cast<Eigen::Index>(5 + s)) = distance(p.pos, stations.stations()[s].position) / 1000.0;
    }
    return F;
}

double spectral_radius(const SparseMatrix& W, std::uint64_t seed, double tol, int max_iters) {
    const auto n = W.rows();
    if (n == 0 || W.cols() != n) fail(ErrorKind::SpectralRadiusFailure, "matrix must be square and nonempty");
    const Eigen::Index block = std::min<Eigen::Index>(n, 8);
    auto rng = keyed_engine(seed, kPower);
    Matrix Q(n, block);
    for (Eigen::Index i = 0; i < Q.size(); ++i) Q.data()[i] = uniform(rng, -1.0, 1.0);
    Q = Eigen::HouseholderQR<Matrix>(Q).householderQ() * Matrix::Identity(n, block);

    double previous = -1.0;
    int settled = 0;
    for (int it = 0; it < max_iters; ++it) {
        Matrix Z = W * Q;
        const double estimate = max_ritz_modulus(Q.transpose() * Z);
        if (!std::isfinite(estimate)) fail(ErrorKind::SpectralRadiusFailure, "non-finite eigenvalue estimate");
        if (std::abs(estimate - previous) <= tol * std::max(1.0, estimate)) {
            if (++settled >= 3) return estimate;
        } else {
            settled = 0;
        }
        previous = estimate;
        if (Z.norm() == 0.0) return 0.0;  // W annihilates the whole block
        Q = Eigen::HouseholderQR<Matrix>(Z).householderQ() * Matrix::Identity(n, block);
    }
    fail(ErrorKind::SpectralRadiusFailure,
         "power iteration did not settle within " + std::to_string(max_iters) + " iterations");
}

EsnModel init_reservoir(const ReservoirConfig& config, const StationMap& stations) {
    return init_reservoir(config, stations, sequence_input_dim(stations.size()));
}

EsnModel init_reservoir(const ReservoirConfig& config, const StationMap& stations, std::size_t input_dim) {
    validate(config);
    EsnModel model;
    model.config = config;
    model.stations = stations;
    model.input_dim = input_dim;
    const auto n = static_cast<Eigen::Index>(config.n_reservoir);

    auto rec_rng = keyed_engine(config.seed, kRecurrent);
    std::vector<Eigen::Triplet<double>> triplets;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (uniform01(rec_rng) < config.connectivity) triplets.emplace_back(i, j, nonzero_uniform(rec_rng));
    model.recurrent.resize(n, n);
    model.recurrent.setFromTriplets(triplets.begin(), triplets.end());
    model.recurrent.makeCompressed();

    const double rho = spectral_radius(model.recurrent, config.seed);
    if (!(rho > 0.0))
        fail(ErrorKind::SpectralRadiusFailure, "recurrent matrix has zero spectral radius; raise connectivity");
    model.recurrent *= config.spectral_radius / rho;

    auto in_rng = keyed_engine(config.seed, kInput);
    model.input_weights.resize(n, static_cast<Eigen::Index>(input_dim + 1));
    for (Eigen::Index j = 0; j < model.input_weights.cols(); ++j)
        for (Eigen::Index i = 0; i < n; ++i) model.input_weights(i, j) = config.input_scaling * uniform(in_rng, -1.0, 1.0);

    model.readout = Matrix::Zero(static_cast<Eigen::Index>(stations.size() + 1),
                                 static_cast<Eigen::Index>(model.extended_dim()));
    return model;
}

Vector reservoir_step(const EsnModel& model, const Vector& state, const Vector& input) {
    const auto n = static_cast<Eigen::Index>(model.config.n_reservoir);
    if (state.size() != n) fail(ErrorKind::DimensionMismatch, "state size differs from reservoir size");
    if (static_cast<std::size_t>(input.size()) != model.input_dim)
        fail(ErrorKind::DimensionMismatch, "input size " + std::to_string(input.size()) + " differs from " +
                                               std::to_string(model.input_dim));
    Vector pre = model.input_weights.col(0) + model.input_weights.rightCols(input.size()) * input;
    pre += model.recurrent * state;
    const double a = model.config.leak_rate;
    return (1.0 - a) * state + a * pre.array().tanh().matrix();
}

ReadoutProblem collect_readout_problem(const EsnModel& model, const std::vector<GpsTrajectory>& trajectories) {
    const auto n = static_cast<Eigen::Index>(model.config.n_reservoir);
    const auto K = static_cast<Eigen::Index>(model.n_classes());
    const auto D = static_cast<Eigen::Index>(model.input_dim);
    std::size_t rows = 0;
    for (const auto& traj : trajectories) {
        check_ground_truth(traj, model.stations);
        if (traj.points.size() > model.config.washout) rows += traj.points.size() - model.config.washout;
    }
    ReadoutProblem problem;
    problem.states.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(model.extended_dim()));
    problem.targets = Matrix::Zero(static_cast<Eigen::Index>(rows), K + 1);
    Eigen::Index row = 0;
    for (const auto& traj : trajectories) {
        const Matrix F = sequence_features(traj, model.stations);
        if (F.cols() != D) fail(ErrorKind::DimensionMismatch, "sequence features do not match the model input size");
        const auto dest = static_cast<Eigen::Index>(model.stations.require_index(traj.truth->destination));
        Vector state = Vector::Zero(n);
        for (Eigen::Index t = 0; t < F.rows(); ++t) {
            const Vector u = F.row(t).transpose();
            state = reservoir_step(model, state, u);
            if (static_cast<std::size_t>(t) < model.config.washout) continue;
            problem.states.row(row).head(n) = state.transpose();
            problem.states.row(row).segment(n, D) = u.transpose();
            problem.states(row, n + D) = 1.0;
            problem.targets(row, dest) = 1.0;
            problem.targets(row, K) =
                static_cast<double>(traj.truth->arrival_time) - traj.points[static_cast<std::size_t>(t)].t;
            ++row;
        }
    }
    return problem;
}

EsnModel train_esn(EsnModel model, const std::vector<GpsTrajectory>& trajectories) {
    if (trajectories.empty()) fail(ErrorKind::InsufficientData, "no training trajectories");
    const auto problem = collect_readout_problem(model, trajectories);
    if (problem.states.rows() == 0) fail(ErrorKind::InsufficientData, "washout discards every step");
    const Vector penalty = Vector::Constant(problem.states.cols(), model.config.ridge_lambda);
    model.readout = solve_ridge_system(problem.states, problem.targets, penalty).transpose();
    model.trained = true;
    const auto K = problem.targets.cols() - 1;
    Vector labels(problem.targets.rows());
    for (Eigen::Index i = 0; i < labels.size(); ++i)
        labels(i) = static_cast<double>(argmax(problem.targets.row(i).head(K).transpose()));
    model.trained_on = fingerprint(problem.states, labels);
    model.trained_on.count = trajectories.size();
    return model;
}

ArrivalPrediction predict_prefix(const EsnModel& model, const GpsTrajectory& prefix) {
    if (!model.trained) fail(ErrorKind::UntrainedModel, "echo state network readout has not been trained");
    if (prefix.points.size() < 2) fail(ErrorKind::InsufficientData, "prefix needs at least 2 points");
    const Matrix F = sequence_features(prefix, model.stations);
    if (static_cast<std::size_t>(F.cols()) != model.input_dim)
        fail(ErrorKind::DimensionMismatch, "sequence features do not match the model input size");
    const auto n = static_cast<Eigen::Index>(model.config.n_reservoir);
    const auto D = F.cols();
    Vector state = Vector::Zero(n);
    for (Eigen::Index t = 0; t < F.rows(); ++t) state = reservoir_step(model, state, F.row(t).transpose());
    Vector extended(model.extended_dim());
    extended.head(n) = state;
    extended.segment(n, D) = F.row(F.rows() - 1).transpose();
    extended(n + D) = 1.0;
    const Vector out = model.readout * extended;
    const auto K = static_cast<Eigen::Index>(model.n_classes());

    ArrivalPrediction p;
    p.probabilities = softmax_normalize(clamp_nonnegative(out.head(K)));
    p.index = argmax(p.probabilities);
    p.station = model.stations.stations()[p.index].id;
    p.remaining_seconds = std::max(0.0, out(K));
    p.expected_arrival_time = prefix.points.back().t + p.remaining_seconds;
    return p;
}

ArrivalPrediction predict_from_prefix(const EsnModel& model, const GpsTrajectory& trajectory, double fraction_observed) {
    return predict_prefix(model, observed_prefix(trajectory, fraction_observed));
}

Vector window_at(const Matrix& features, std::size_t step, std::size_t window_len) {
    const auto D = features.cols();
    Vector x = Vector::Zero(D * static_cast<Eigen::Index>(window_len));
    for (std::size_t w = 0; w < window_len; ++w) {
        // slot window_len - 1 holds `step`, earlier slots hold earlier points
        const auto offset = static_cast<long>(window_len - 1 - w);
        const long t = static_cast<long>(step) - offset;
        if (t < 0) continue;
        x.segment(static_cast<Eigen::Index>(w) * D, D) = features.row(t).transpose();
    }
    return x;
}

ClassificationData window_dataset(const std::vector<GpsTrajectory>& trajectories, const StationMap& stations,
                                  std::size_t window_len) {
    if (window_len == 0) fail(ErrorKind::InvalidConfig, "window_len must be at least 1");
    std::size_t rows = 0;
    for (const auto& traj : trajectories) {
        check_ground_truth(traj, stations);
        rows += traj.points.size();
    }
    const auto D = static_cast<Eigen::Index>(sequence_input_dim(stations.size()));
    ClassificationData data;
    data.X.resize(static_cast<Eigen::Index>(rows), D * static_cast<Eigen::Index>(window_len));
    Eigen::Index row = 0;
    for (const auto& traj : trajectories) {
        const Matrix F = sequence_features(traj, stations);
        const auto label = stations.require_index(traj.truth->destination);
        for (std::size_t t = 0; t < traj.points.size(); ++t) {
            data.X.row(row++) = window_at(F, t, window_len).transpose();
            data.labels.push_back(label);
        }
    }
    return data;
}

WindowClassifier sliding_window_baseline(const std::vector<GpsTrajectory>& trajectories, const StationMap& stations,
                                         std::size_t window_len, const ClassifierHyperparameters& hyper) {
    WindowClassifier out;
    out.window_len = window_len;
    out.stations = stations;
    out.model = train_classifier(window_dataset(trajectories, stations, window_len), station_labels(stations), hyper);
    return out;
}

DestinationPrediction predict_window(const WindowClassifier& classifier, const GpsTrajectory& prefix) {
    if (prefix.points.empty()) fail(ErrorKind::InsufficientData, "empty prefix");
    const Matrix F = sequence_features(prefix, classifier.stations);
    return predict_destination(classifier.model, window_at(F, prefix.points.size() - 1, classifier.window_len));
}

}  // namespace bss
