#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bss/evaluation.hpp"

namespace bss {

inline constexpr const char* kAllBikesNow = "AllBikesNow";
inline constexpr const char* kLocationPreview = "LocationPreview";
inline constexpr const char* kUserProfile = "UserProfile";

/// Measured quality of a predictive feature, copied from a final assessment.
struct MeasuredAttributes {
    double accuracy = 0.0;     ///< [0, 1]
    double mae_seconds = 0.0;  ///< >= 0
    std::string report_id;     ///< provenance
};

struct Feature {
    std::string name;
    bool optional = false;
    bool predictive = false;
    double cost = 0.0;
    std::optional<MeasuredAttributes> measured;
};

/// Root feature with a flat list of mandatory/optional children. Or-groups,
/// xor-groups and cross-tree constraints are not supported.
struct FeatureModel {
    std::string root = "Status";
    std::vector<Feature> children;

    const Feature* find(const std::string& name) const;
};

/// Status subsystem: AllBikesNow (mandatory), LocationPreview and UserProfile (optional, predictive).
FeatureModel status_feature_model(double abn_cost = 0.0, double lp_cost = 0.0, double up_cost = 0.0);

/// Throws InvalidModel.
void validate(const FeatureModel& model);

struct ProductConfiguration {
    std::vector<std::string> selected_features;  ///< sorted by name
    double total_cost = 0.0;
    std::map<std::string, MeasuredAttributes> performance;  ///< per selected predictive feature
    double tradeoff_score = 0.0;
};

/// Every valid selection, ordered by size then lexicographically.
std::vector<ProductConfiguration> enumerate_products(const FeatureModel& model);

/// Copies final-test accuracy and MAE of each predictive feature's report into
/// the model. Throws MissingReport for a predictive feature without a report.
FeatureModel attach_measurements(FeatureModel model, const std::map<std::string, EvaluationReport>& reports);

struct TradeoffWeights {
    double accuracy = 1.0;
    double mae = 1.0;
    double cost = 1.0;
    double mae_horizon_s = 1800.0;
};

/// score = w_acc * mean accuracy - w_mae * mean MAE / horizon - w_cost * cost / max cost,
/// with 0 accuracy/MAE terms for products without predictive features.
/// Descending by score; ties go to the cheaper, then lexicographically smaller product.
/// Throws InvalidWeights.
std::vector<ProductConfiguration> rank_products(std::vector<ProductConfiguration> products, const TradeoffWeights& weights);

/// Refreshes each product's performance map from the (attributed) model.
std::vector<ProductConfiguration> with_measurements(std::vector<ProductConfiguration> products, const FeatureModel& model);

nlohmann::ordered_json to_json(const FeatureModel& model);
FeatureModel feature_model_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const std::vector<ProductConfiguration>& ranking);
std::string render_ranking(const std::vector<ProductConfiguration>& ranking);

std::string product_name(const ProductConfiguration& product);

}  // namespace bss
