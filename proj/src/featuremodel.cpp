#include "bss/featuremodel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "bss/error.hpp"

namespace bss {

const Feature* FeatureModel::find(const std::string& name) const {
    for (const auto& f : children)
        if (f.name == name) return &f;
    return nullptr;
}

FeatureModel status_feature_model(double abn_cost, double lp_cost, double up_cost) {
    FeatureModel m;
    m.root = "Status";
    m.children = {
        {kAllBikesNow, false, false, abn_cost, std::nullopt},
        {kLocationPreview, true, true, lp_cost, std::nullopt},
        {kUserProfile, true, true, up_cost, std::nullopt},
    };
    return m;
}

void validate(const FeatureModel& model) {
    if (model.root.empty()) fail(ErrorKind::InvalidModel, "root feature needs a name");
    std::set<std::string> names{model.root};
    for (const auto& f : model.children) {
        if (f.name.empty()) fail(ErrorKind::InvalidModel, "feature needs a name");
        if (!names.insert(f.name).second) fail(ErrorKind::InvalidModel, "duplicate feature " + f.name);
        if (!(f.cost >= 0.0) || !std::isfinite(f.cost)) fail(ErrorKind::InvalidModel, f.name + " has an invalid cost");
        if (f.measured) {
            if (!(f.measured->accuracy >= 0.0 && f.measured->accuracy <= 1.0))
                fail(ErrorKind::InvalidModel, f.name + " accuracy outside [0, 1]");
            if (!(f.measured->mae_seconds >= 0.0) || !std::isfinite(f.measured->mae_seconds))
                fail(ErrorKind::InvalidModel, f.name + " mae_seconds must be nonnegative");
        }
    }
    const auto* abn = model.find(kAllBikesNow);
    if (!abn || abn->optional) fail(ErrorKind::InvalidModel, "AllBikesNow must be a mandatory feature");
    if (std::count_if(model.children.begin(), model.children.end(), [](const Feature& f) { return f.optional; }) > 20)
        fail(ErrorKind::InvalidModel, "too many optional features to enumerate");
}

std::vector<ProductConfiguration> enumerate_products(const FeatureModel& model) {
    validate(model);
    std::vector<const Feature*> mandatory, optional;
    for (const auto& f : model.children) (f.optional ? optional : mandatory).push_back(&f);

    std::vector<ProductConfiguration> products;
    for (std::size_t mask = 0; mask < (std::size_t{1} << optional.size()); ++mask) {
        std::vector<const Feature*> chosen = mandatory;
        for (std::size_t i = 0; i < optional.size(); ++i)
            if (mask & (std::size_t{1} << i)) chosen.push_back(optional[i]);
        ProductConfiguration p;
        for (const auto* f : chosen) {
            p.selected_features.push_back(f->name);
            p.total_cost += f->cost;
            if (f->predictive && f->measured) p.performance[f->name] = *f->measured;
        }
        std::sort(p.selected_features.begin(), p.selected_features.end());
        products.push_back(std::move(p));
    }
    std::sort(products.begin(), products.end(), [](const auto& a, const auto& b) {
        if (a.selected_features.size() != b.selected_features.size())
            return a.selected_features.size() < b.selected_features.size();
        return a.selected_features < b.selected_features;
    });
    return products;
}

FeatureModel attach_measurements(FeatureModel model, const std::map<std::string, EvaluationReport>& reports) {
    for (auto& f : model.children) {
        if (!f.predictive) continue;
        auto it = reports.find(f.name);
        if (it == reports.end()) fail(ErrorKind::MissingReport, "no evaluation report for " + f.name);
        const auto& final_test = it->second.final_test;
        if (!final_test.accuracy || !final_test.mae_seconds)
            fail(ErrorKind::MissingReport, "report " + it->second.id + " lacks final accuracy or MAE for " + f.name);
        f.measured = MeasuredAttributes{*final_test.accuracy, *final_test.mae_seconds, it->second.id};
    }
    validate(model);
    return model;
}

std::vector<ProductConfiguration> with_measurements(std::vector<ProductConfiguration> products, const FeatureModel& model) {
    for (auto& p : products) {
        p.performance.clear();
        for (const auto& name : p.selected_features) {
            const auto* f = model.find(name);
            if (f && f->predictive && f->measured) p.performance[name] = *f->measured;
        }
    }
    return products;
}

std::vector<ProductConfiguration> rank_products(std::vector<ProductConfiguration> products, const TradeoffWeights& w) {
    for (double v : {w.accuracy, w.mae, w.cost})
        if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorKind::InvalidWeights, "weights must be nonnegative and finite");
    if (w.accuracy == 0.0 && w.mae == 0.0 && w.cost == 0.0) fail(ErrorKind::InvalidWeights, "all weights are zero");
    if (!(w.mae_horizon_s > 0.0)) fail(ErrorKind::InvalidWeights, "MAE horizon must be positive");

    double max_cost = 0.0;
    for (const auto& p : products) max_cost = std::max(max_cost, p.total_cost);
    for (auto& p : products) {
        double acc = 0.0, err = 0.0;
        if (!p.performance.empty()) {
            for (const auto& [_, m] : p.performance) {
                acc += m.accuracy;
                err += m.mae_seconds;
            }
            acc /= static_cast<double>(p.performance.size());
            err /= static_cast<double>(p.performance.size());
        }
        const double cost_term = max_cost > 0.0 ? p.total_cost / max_cost : 0.0;
        p.tradeoff_score = w.accuracy * acc - w.mae * (err / w.mae_horizon_s) - w.cost * cost_term;
    }
    std::stable_sort(products.begin(), products.end(), [](const auto& a, const auto& b) {
        if (a.tradeoff_score != b.tradeoff_score) return a.tradeoff_score > b.tradeoff_score;
        if (a.total_cost != b.total_cost) return a.total_cost < b.total_cost;
        return a.selected_features < b.selected_features;
    });
    return products;
}

nlohmann::ordered_json to_json(const FeatureModel& model) {
    nlohmann::ordered_json j;
    j["schema"] = "bss.feature_model/1";
    j["root"] = model.root;
    j["features"] = nlohmann::ordered_json::array();
    for (const auto& f : model.children) {
        nlohmann::ordered_json e;
        e["name"] = f.name;
        e["optional"] = f.optional;
        e["predictive"] = f.predictive;
        e["cost"] = f.cost;
        if (f.measured) {
            e["accuracy"] = f.measured->accuracy;
            e["mae_seconds"] = f.measured->mae_seconds;
            e["report_id"] = f.measured->report_id;
        }
        j["features"].push_back(std::move(e));
    }
    return j;
}

FeatureModel feature_model_from_json(const nlohmann::json& j) {
    try {
        FeatureModel m;
        m.root = j.value("root", std::string("Status"));
        for (const auto& e : j.at("features")) {
            Feature f;
            f.name = e.at("name").get<std::string>();
            f.optional = e.value("optional", false);
            f.predictive = e.value("predictive", false);
            f.cost = e.value("cost", 0.0);
            if (e.contains("accuracy"))
                f.measured = MeasuredAttributes{e.at("accuracy").get<double>(), e.at("mae_seconds").get<double>(),
                                                e.value("report_id", std::string())};
            m.children.push_back(std::move(f));
        }
        validate(m);
        return m;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::InvalidModel, e.what());
    }
}

std::string product_name(const ProductConfiguration& product) {
    std::string out = "{";
    for (std::size_t i = 0; i < product.selected_features.size(); ++i) {
        if (i) out += ", ";
        out += product.selected_features[i];
    }
    return out + "}";
}

nlohmann::ordered_json to_json(const std::vector<ProductConfiguration>& ranking) {
    nlohmann::ordered_json j;
    j["schema"] = "bss.product_ranking/1";
    j["products"] = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < ranking.size(); ++r) {
        const auto& p = ranking[r];
        nlohmann::ordered_json e;
        e["rank"] = r + 1;
        e["features"] = p.selected_features;
        e["total_cost"] = p.total_cost;
        e["tradeoff_score"] = p.tradeoff_score;
        e["performance"] = nlohmann::ordered_json::object();
        for (const auto& [name, m] : p.performance)
            e["performance"][name] = {{"accuracy", m.accuracy}, {"mae_seconds", m.mae_seconds}, {"report_id", m.report_id}};
        j["products"].push_back(std::move(e));
    }
    return j;
}

std::string render_ranking(const std::vector<ProductConfiguration>& ranking) {
    std::size_t width = 7;
    for (const auto& p : ranking) width = std::max(width, product_name(p).size());
    std::ostringstream out;
    out << std::left << std::setw(6) << "rank" << std::setw(static_cast<int>(width) + 2) << "product" << std::right
        << std::setw(12) << "cost" << std::setw(12) << "score" << '\n';
    for (std::size_t r = 0; r < ranking.size(); ++r) {
        out << std::left << std::setw(6) << r + 1 << std::setw(static_cast<int>(width) + 2) << product_name(ranking[r])
            << std::right << std::fixed << std::setprecision(2) << std::setw(12) << ranking[r].total_cost
            << std::setprecision(6) << std::setw(12) << ranking[r].tradeoff_score << '\n';
    }
    return out.str();
}

}  // namespace bss
