#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "bss/domain.hpp"

namespace bss {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Encoding

/// Width of a departure encoding: one-of-S station indicator, (sin, cos) of
/// the time of day over 24 h, one-of-7 day-of-week indicator.
constexpr std::size_t static_input_dim(std::size_t n_stations) noexcept { return n_stations + 2 + 7; }

/// Encodes a departure (station index, leave time). Day 0 of the week is Monday.
Vector encode_departure(std::size_t station_index, std::size_t n_stations, Timestamp leave_time);

/// Throws UnknownStation.
Vector encode_trip_input(const TripRecord& trip, const StationMap& stations);

/// K-length indicator with a 1 at position k. Throws IndexOutOfRange.
Vector one_of_k(std::size_t k, std::size_t K);

/// Ratio normalization y(k) / sum_l y(l). All-zero input maps to the uniform
/// vector. Throws EmptyVector or NegativeComponent.
Vector softmax_normalize(const Vector& scores);

/// Raw model scores clamped at 0, ready for softmax_normalize.
Vector clamp_nonnegative(Vector scores);

/// Station ids in map order; the class labels of every station classifier.
std::vector<StationId> station_labels(const StationMap& stations);

/// Index of the largest entry; the lowest index wins ties.
std::size_t argmax(const Vector& v);

/// Count and FNV-1a hash of a training set, stored with every model.
struct DataFingerprint {
    std::size_t count = 0;
    std::string hash;

    friend bool operator==(const DataFingerprint&, const DataFingerprint&) = default;
};

DataFingerprint fingerprint(const Matrix& X, const Vector& y);

// ---------------------------------------------------------------------------
// Classification

enum class ClassifierKind { NaiveBayes, LogisticRegression };

std::string to_string(ClassifierKind kind);
/// Accepts "naive-bayes" and "logistic-regression".
ClassifierKind parse_classifier_kind(const std::string& name);

/// Likelihood family of one naive-Bayes input feature.
enum class FeatureKind { Gaussian, Bernoulli };

/// Feature kinds of encode_departure(): indicators are Bernoulli, time is Gaussian.
std::vector<FeatureKind> departure_feature_kinds(std::size_t n_stations);

struct ClassifierHyperparameters {
    ClassifierKind kind = ClassifierKind::NaiveBayes;
    // logistic regression
    double l2 = 0.0;
    double learning_rate = 0.1;
    int max_iters = 10000;
    double grad_tol = 1e-6;
    // naive Bayes
    double laplace_alpha = 1.0;
    double var_floor = 1e-4;
    /// Empty means every feature is Gaussian.
    std::vector<FeatureKind> feature_kinds;

    friend bool operator==(const ClassifierHyperparameters&, const ClassifierHyperparameters&) = default;
};

struct NaiveBayesParams {
    Vector priors;      ///< K; classes absent from training get prior 0
    Matrix means;       ///< K x d, Gaussian features
    Matrix variances;   ///< K x d, Gaussian features (floored)
    Matrix bernoulli;   ///< K x d, P(x_j = 1 | k) for Bernoulli features
    std::vector<FeatureKind> kinds;

    friend bool operator==(const NaiveBayesParams&, const NaiveBayesParams&) = default;
};

struct LogisticParams {
    Matrix weights;  ///< K x d
    Vector bias;     ///< K
    /// Classes seen in training, ascending; the others score 0. Empty means all.
    std::vector<std::size_t> active_classes;

    friend bool operator==(const LogisticParams&, const LogisticParams&) = default;
};

struct ClassifierModel {
    ClassifierKind kind = ClassifierKind::NaiveBayes;
    std::vector<StationId> class_labels;
    std::size_t input_dim = 0;
    ClassifierHyperparameters hyper;
    std::variant<NaiveBayesParams, LogisticParams> params;
    DataFingerprint trained_on;

    std::size_t n_classes() const noexcept { return class_labels.size(); }

    friend bool operator==(const ClassifierModel&, const ClassifierModel&) = default;
};

/// Labelled static training data: rows of X are samples, labels index class_labels.
struct ClassificationData {
    Matrix X;
    std::vector<std::size_t> labels;
};

/// Mean negative log-likelihood + (l2 / 2) * ||W||_F^2 and its gradient.
/// The bias is not penalized.
struct LossGradient {
    double loss = 0.0;
    Matrix grad_weights;
    Vector grad_bias;
};

LossGradient logistic_loss_gradient(const LogisticParams& params, const Matrix& X,
                                    const std::vector<std::size_t>& labels, double l2);

/// Full-batch gradient descent trace.
struct LogisticFit {
    LogisticParams params;
    std::vector<double> loss_history;  ///< loss after each accepted iteration, starting at W = 0
    int iterations = 0;
    bool converged = false;
};

LogisticFit fit_logistic(const ClassificationData& data, std::size_t n_classes, const ClassifierHyperparameters& hyper);

NaiveBayesParams fit_naive_bayes(const ClassificationData& data, std::size_t n_classes,
                                 const ClassifierHyperparameters& hyper);

/// Throws InsufficientData, NonFiniteLoss, IndexOutOfRange, DimensionMismatch.
ClassifierModel train_classifier(const ClassificationData& data, std::vector<StationId> class_labels,
                                 const ClassifierHyperparameters& hyper);

/// Nonnegative per-class scores before normalization.
Vector classifier_scores(const ClassifierModel& model, const Vector& x);

struct DestinationPrediction {
    Vector probabilities;
    std::size_t index = 0;
    StationId station;
};

/// Throws DimensionMismatch.
DestinationPrediction predict_destination(const ClassifierModel& model, const Vector& x);

// ---------------------------------------------------------------------------
// Regression

struct RegressorModel {
    Vector weights;
    double bias = 0.0;
    double ridge_lambda = 0.0;
    DataFingerprint trained_on;

    friend bool operator==(const RegressorModel&, const RegressorModel&) = default;
};

/// Closed-form ridge: minimizes sum (w.x + b - y)^2 + lambda ||w||^2 with an
/// unpenalized bias. Throws InsufficientData (< 2 samples) or SingularSystem
/// (lambda = 0 and rank-deficient design).
RegressorModel train_regressor(const Matrix& X, const Vector& y, double ridge_lambda);

double predict_regressor(const RegressorModel& model, const Vector& x);

/// Solves (A^T A + diag(penalty_diagonal)) theta = A^T Y for every column of Y.
/// Throws SingularSystem when the system matrix is rank-deficient.
Matrix solve_ridge_system(const Matrix& A, const Matrix& Y, const Vector& penalty_diagonal);

/// ||(A^T A + P) theta - A^T Y||_inf.
double normal_equation_residual(const Matrix& A, const Matrix& Y, const Vector& penalty_diagonal, const Matrix& theta);

}  // namespace bss
