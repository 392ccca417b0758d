#pragma once

#include <any>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace bss {

/// Assignment of every sample to one of k folds.
struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::size_t> assignments;
    std::uint64_t seed = 0;

    std::vector<std::size_t> fold(std::size_t f) const;        ///< positions held out in fold f
    std::vector<std::size_t> complement(std::size_t f) const;  ///< positions used for training in fold f
};

/// Seeded shuffle, then round-robin over folds. With labels, the round-robin
/// runs within each label group (continuing across groups) so per-fold class
/// counts differ by at most one. Throws TooFewSamples.
FoldPlan kfold_split(std::size_t n_samples, std::size_t k, std::uint64_t seed,
                     std::optional<std::span<const std::size_t>> stratify_labels = std::nullopt);

/// Mean absolute error. Throws LengthMismatch or Empty.
double mae(std::span<const double> predicted, std::span<const double> target);

enum class AccuracyDenominator {
    AllSamples,    ///< one-vs-rest accuracy, always in [0, 1]
    ClassSamples,  ///< literal per-class sample count; may exceed 1
};

/// (TP_i + TN_i) / N for class i. Throws LengthMismatch, Empty, or
/// UnknownClass (class absent from both sequences, or zero class samples
/// under the ClassSamples denominator).
double class_accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> targets,
                      std::size_t class_i, AccuracyDenominator denominator = AccuracyDenominator::AllSamples);

double overall_accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> targets);

// ---------------------------------------------------------------------------
// Model assessment

enum class Task { Classification, Regression };

/// Hyperparameter setting: a JSON object interpreted by the model family.
using Setting = nlohmann::json;

/// Ground truth of a dataset addressed by sample index. `labels` is used for
/// classification, `values` for regression; a classification dataset may
/// carry values too (reported as MAE but never used for selection).
struct EvalData {
    std::size_t n = 0;
    std::vector<std::size_t> labels;
    std::vector<double> values;
    std::vector<std::string> class_names;
};

struct Prediction {
    std::size_t label = 0;
    double value = 0.0;
};

struct Fitted {
    std::function<Prediction(std::size_t)> predict;
    std::any model;
};

struct ModelFamily {
    std::string name;
    Task task = Task::Classification;
    /// Trains on the given sample indices with one hyperparameter setting.
    std::function<Fitted(std::span<const std::size_t> train, const Setting& setting)> fit;
};

struct Metrics {
    std::optional<double> accuracy;
    std::map<std::string, double> per_class_accuracy;
    std::optional<double> mae_seconds;
    std::size_t n = 0;

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

Metrics compute_metrics(const EvalData& data, std::span<const std::size_t> indices,
                        std::span<const Prediction> predictions);

struct SettingSummary {
    Setting setting;
    std::vector<Metrics> folds;
    std::optional<double> cv_mean_accuracy, cv_std_accuracy;
    std::optional<double> cv_mean_mae, cv_std_mae;
};

struct CrossValidation {
    std::vector<SettingSummary> settings;
    std::size_t best = 0;
    FoldPlan plan;  ///< positions refer to `indices`
    std::vector<std::size_t> indices;
};

/// K-fold model selection over `indices`. The best setting maximizes mean
/// accuracy (classification) or minimizes mean MAE (regression); earlier grid
/// entries win ties. Training errors are rethrown annotated with setting and fold.
CrossValidation cross_validate(const EvalData& data, std::span<const std::size_t> indices, const ModelFamily& family,
                               const std::vector<Setting>& grid, std::size_t k, std::uint64_t seed);

/// Result of training, model selection and final hold-out assessment.
struct EvaluationReport {
    std::string id;  ///< content hash
    std::string model_descriptor;
    std::string scope;  ///< what the data covers, e.g. a user id or "all"
    Task task = Task::Classification;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    double test_fraction = 0.0;
    std::vector<SettingSummary> cross_validation;
    Setting selected;
    Metrics final_test;
    std::vector<std::size_t> test_indices;
    std::vector<std::size_t> cv_indices;
    std::vector<std::string> warnings;
    /// Digest of the station map the data refers to; empty when unknown.
    std::string station_map_digest;
    /// Sub-assessments pooled into this one (e.g. one per user), keyed by `scope`.
    std::vector<EvaluationReport> components;
};

struct Assessment {
    EvaluationReport report;
    std::vector<Prediction> test_predictions;  ///< aligned with report.test_indices
    Fitted selected_model;                     ///< best setting refit on the whole CV part
};

/// Splits off the external test set (stratified for classification), runs
/// cross_validate on the rest, refits the best setting on the rest and scores
/// it on the test set. Throws TooFewSamples.
Assessment final_assessment(const EvalData& data, double test_fraction, const ModelFamily& family,
                            const std::vector<Setting>& grid, std::size_t k, std::uint64_t seed);

/// Test-set split used by final_assessment: returns (test, remainder), both sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(const EvalData& data, Task task,
                                                                            double test_fraction, std::uint64_t seed);

nlohmann::ordered_json to_json(const Metrics& m);
Metrics metrics_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const EvaluationReport& r);
EvaluationReport report_from_json(const nlohmann::json& j);

/// Fills `id` with the hash of the report content (id excluded).
void assign_report_id(EvaluationReport& report);

/// Aligned plain-text rendering.
std::string render_report(const EvaluationReport& report);

std::string to_string(Task task);

}  // namespace bss
