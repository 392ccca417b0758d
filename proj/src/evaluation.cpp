#include "bss/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "bss/digest.hpp"
#include "bss/error.hpp"
#include "bss/rng.hpp"

namespace bss {

namespace {

enum Stream : std::uint64_t { kFolds = 21, kHoldout = 22 };

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed, std::uint64_t stream) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    auto rng = keyed_engine(seed, stream);
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

/// Population statistics over the folds.
MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    for (double x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    for (double x : xs) out.std += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(out.std / static_cast<double>(xs.size()));
    return out;
}

void summarize(SettingSummary& s) {
    std::vector<double> acc, err;
    for (const auto& m : s.folds) {
        if (m.accuracy) acc.push_back(*m.accuracy);
        if (m.mae_seconds) err.push_back(*m.mae_seconds);
    }
    if (!acc.empty()) {
        auto ms = mean_std(acc);
        s.cv_mean_accuracy = ms.mean;
        s.cv_std_accuracy = ms.std;
    }
    if (!err.empty()) {
        auto ms = mean_std(err);
        s.cv_mean_mae = ms.mean;
        s.cv_std_mae = ms.std;
    }
}

std::vector<Prediction> predict_all(const Fitted& fitted, std::span<const std::size_t> indices) {
    std::vector<Prediction> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(fitted.predict(i));
    return out;
}

template <class T>
nlohmann::ordered_json optional_json(const std::optional<T>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> optional_double(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

std::string fmt(std::optional<double> v, int precision = 4) {
    if (!v) return "-";
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(precision) << *v;
    return ss.str();
}

}  // namespace

std::string to_string(Task task) { return task == Task::Classification ? "classification" : "regression"; }

std::vector<std::size_t> FoldPlan::fold(std::size_t f) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == f) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldPlan::complement(std::size_t f) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != f) out.push_back(i);
    return out;
}

FoldPlan kfold_split(std::size_t n_samples, std::size_t k, std::uint64_t seed,
                     std::optional<std::span<const std::size_t>> stratify_labels) {
    if (k < 2) fail(ErrorKind::TooFewSamples, "K must be at least 2");
    if (n_samples < k)
        fail(ErrorKind::TooFewSamples,
             std::to_string(n_samples) + " samples cannot fill " + std::to_string(k) + " folds");
    if (stratify_labels && stratify_labels->size() != n_samples)
        fail(ErrorKind::LengthMismatch, "stratify labels must have one entry per sample");

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.assign(n_samples, 0);
    const auto perm = shuffled(n_samples, seed, kFolds);
    if (!stratify_labels) {
        for (std::size_t i = 0; i < n_samples; ++i) plan.assignments[perm[i]] = i % k;
        return plan;
    }
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (auto idx : perm) groups[(*stratify_labels)[idx]].push_back(idx);
    std::size_t counter = 0;
    for (const auto& [_, members] : groups)
        for (auto idx : members) plan.assignments[idx] = counter++ % k;
    return plan;
}

double mae(std::span<const double> predicted, std::span<const double> target) {
    if (predicted.size() != target.size()) fail(ErrorKind::LengthMismatch, "prediction and target lengths differ");
    if (predicted.empty()) fail(ErrorKind::Empty, "MAE of zero samples");
    double total = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) total += std::abs(predicted[i] - target[i]);
    return total / static_cast<double>(predicted.size());
}

double class_accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> targets,
                      std::size_t class_i, AccuracyDenominator denominator) {
    if (predictions.size() != targets.size()) fail(ErrorKind::LengthMismatch, "prediction and target lengths differ");
    if (predictions.empty()) fail(ErrorKind::Empty, "accuracy of zero samples");
    std::size_t tp = 0, tn = 0, in_class = 0;
    bool seen = false;
    for (std::size_t n = 0; n < predictions.size(); ++n) {
        const bool pred_i = predictions[n] == class_i;
        const bool true_i = targets[n] == class_i;
        seen = seen || pred_i || true_i;
        in_class += true_i;
        tp += pred_i && true_i;
        tn += !pred_i && !true_i;
    }
    if (!seen) fail(ErrorKind::UnknownClass, "class " + std::to_string(class_i) + " occurs in neither sequence");
    double denom = static_cast<double>(predictions.size());
    if (denominator == AccuracyDenominator::ClassSamples) {
        if (in_class == 0) fail(ErrorKind::UnknownClass, "class " + std::to_string(class_i) + " has no samples");
        denom = static_cast<double>(in_class);
    }
    return static_cast<double>(tp + tn) / denom;
}

double overall_accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> targets) {
    if (predictions.size() != targets.size()) fail(ErrorKind::LengthMismatch, "prediction and target lengths differ");
    if (predictions.empty()) fail(ErrorKind::Empty, "accuracy of zero samples");
    std::size_t correct = 0;
    for (std::size_t n = 0; n < predictions.size(); ++n) correct += predictions[n] == targets[n];
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

Metrics compute_metrics(const EvalData& data, std::span<const std::size_t> indices,
                        std::span<const Prediction> predictions) {
    if (indices.size() != predictions.size()) fail(ErrorKind::LengthMismatch, "one prediction per index required");
    Metrics m;
    m.n = indices.size();
    if (indices.empty()) return m;
    if (!data.labels.empty()) {
        std::vector<std::size_t> pred, truth;
        std::set<std::size_t> classes;
        for (std::size_t i = 0; i < indices.size(); ++i) {
            pred.push_back(predictions[i].label);
            truth.push_back(data.labels[indices[i]]);
            classes.insert(pred.back());
            classes.insert(truth.back());
        }
        m.accuracy = overall_accuracy(pred, truth);
        for (auto c : classes) {
            const auto name = c < data.class_names.size() ? data.class_names[c] : std::to_string(c);
            m.per_class_accuracy[name] = class_accuracy(pred, truth, c);
        }
    }
    if (!data.values.empty()) {
        std::vector<double> pred, truth;
        for (std::size_t i = 0; i < indices.size(); ++i) {
            pred.push_back(predictions[i].value);
            truth.push_back(data.values[indices[i]]);
        }
        m.mae_seconds = mae(pred, truth);
    }
    return m;
}

CrossValidation cross_validate(const EvalData& data, std::span<const std::size_t> indices, const ModelFamily& family,
                               const std::vector<Setting>& grid, std::size_t k, std::uint64_t seed) {
    if (grid.empty()) fail(ErrorKind::InvalidConfig, "hyperparameter grid is empty");
    CrossValidation cv;
    cv.indices.assign(indices.begin(), indices.end());
    if (family.task == Task::Classification) {
        std::vector<std::size_t> strata;
        for (auto i : indices) strata.push_back(data.labels[i]);
        cv.plan = kfold_split(indices.size(), k, seed, std::span<const std::size_t>(strata));
    } else {
        cv.plan = kfold_split(indices.size(), k, seed);
    }
    auto absolute = [&](const std::vector<std::size_t>& positions) {
        std::vector<std::size_t> out;
        for (auto p : positions) out.push_back(indices[p]);
        return out;
    };
    for (std::size_t s = 0; s < grid.size(); ++s) {
        SettingSummary summary;
        summary.setting = grid[s];
        for (std::size_t f = 0; f < k; ++f) {
            const auto train = absolute(cv.plan.complement(f));
            const auto held_out = absolute(cv.plan.fold(f));
            try {
                const auto fitted = family.fit(train, grid[s]);
                summary.folds.push_back(compute_metrics(data, held_out, predict_all(fitted, held_out)));
            } catch (const Error& e) {
                throw Error(e.kind(), "setting " + grid[s].dump() + ", fold " + std::to_string(f) + ": " + e.what());
            }
        }
        summarize(summary);
        cv.settings.push_back(std::move(summary));
    }
    for (std::size_t s = 1; s < cv.settings.size(); ++s) {
        const auto& cand = cv.settings[s];
        const auto& best = cv.settings[cv.best];
        const bool better = family.task == Task::Classification ? *cand.cv_mean_accuracy > *best.cv_mean_accuracy
                                                                : *cand.cv_mean_mae < *best.cv_mean_mae;
        if (better) cv.best = s;
    }
    return cv;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(const EvalData& data, Task task,
                                                                            double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction <= 0.5)) fail(ErrorKind::InvalidConfig, "test_fraction must lie in (0, 0.5]");
    const auto n = data.n;
    const auto test_size = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    if (test_size == 0) fail(ErrorKind::TooFewSamples, std::to_string(n) + " samples leave an empty test set");

    const auto perm = shuffled(n, seed, kHoldout);
    std::vector<std::size_t> test;
    if (task == Task::Classification) {
        // Largest-remainder quotas keep class proportions while hitting test_size exactly.
        std::map<std::size_t, std::vector<std::size_t>> groups;
        for (auto idx : perm) groups[data.labels[idx]].push_back(idx);
        std::vector<std::pair<std::size_t, std::size_t>> quota;  // (label, count)
        std::vector<std::tuple<double, std::size_t, std::size_t>> remainders;
        std::size_t assigned = 0;
        for (const auto& [label, members] : groups) {
            const double exact = static_cast<double>(members.size()) * static_cast<double>(test_size) / static_cast<double>(n);
            const auto base = static_cast<std::size_t>(std::floor(exact));
            quota.emplace_back(label, base);
            remainders.emplace_back(exact - static_cast<double>(base), label, quota.size() - 1);
            assigned += base;
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
        for (std::size_t r = 0; assigned < test_size; ++r, ++assigned) ++quota[std::get<2>(remainders[r])].second;
        for (const auto& [label, count] : quota) {
            const auto& members = groups[label];
            test.insert(test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(count));
        }
    } else {
        test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(test_size));
    }
    std::sort(test.begin(), test.end());
    std::vector<std::size_t> rest;
    std::vector<bool> in_test(n, false);
    for (auto i : test) in_test[i] = true;
    for (std::size_t i = 0; i < n; ++i)
        if (!in_test[i]) rest.push_back(i);
    return {std::move(test), std::move(rest)};
}

Assessment final_assessment(const EvalData& data, double test_fraction, const ModelFamily& family,
                            const std::vector<Setting>& grid, std::size_t k, std::uint64_t seed) {
    auto [test, rest] = holdout_split(data, family.task, test_fraction, seed);
    if (rest.size() < k)
        fail(ErrorKind::TooFewSamples, std::to_string(rest.size()) + " samples left for " + std::to_string(k) +
                                           "-fold cross-validation");
    auto cv = cross_validate(data, rest, family, grid, k, seed);

    Assessment out;
    out.selected_model = family.fit(rest, grid[cv.best]);
    out.test_predictions = predict_all(out.selected_model, test);

    auto& r = out.report;
    r.model_descriptor = family.name;
    r.task = family.task;
    r.k = k;
    r.seed = seed;
    r.test_fraction = test_fraction;
    r.cross_validation = std::move(cv.settings);
    r.selected = grid[cv.best];
    r.final_test = compute_metrics(data, test, out.test_predictions);
    r.test_indices = std::move(test);
    r.cv_indices = std::move(rest);
    return out;
}

nlohmann::ordered_json to_json(const Metrics& m) {
    nlohmann::ordered_json j;
    j["n"] = m.n;
    j["accuracy"] = optional_json(m.accuracy);
    j["per_class_accuracy"] = nlohmann::ordered_json::object();
    for (const auto& [name, acc] : m.per_class_accuracy) j["per_class_accuracy"][name] = acc;
    j["mae_seconds"] = optional_json(m.mae_seconds);
    return j;
}

Metrics metrics_from_json(const nlohmann::json& j) {
    Metrics m;
    m.n = j.at("n").get<std::size_t>();
    m.accuracy = optional_double(j, "accuracy");
    for (const auto& [name, acc] : j.at("per_class_accuracy").items()) m.per_class_accuracy[name] = acc.get<double>();
    m.mae_seconds = optional_double(j, "mae_seconds");
    return m;
}

nlohmann::ordered_json to_json(const EvaluationReport& r) {
    nlohmann::ordered_json j;
    j["schema"] = "bss.evaluation_report/1";
    j["id"] = r.id;
    j["model_descriptor"] = r.model_descriptor;
    j["scope"] = r.scope;
    j["task"] = to_string(r.task);
    j["k"] = r.k;
    j["seed"] = r.seed;
    j["test_fraction"] = r.test_fraction;
    auto cv = nlohmann::ordered_json::array();
    for (const auto& s : r.cross_validation) {
        nlohmann::ordered_json e;
        e["setting"] = s.setting;
        e["folds"] = nlohmann::ordered_json::array();
        for (const auto& f : s.folds) e["folds"].push_back(to_json(f));
        e["cv_mean_accuracy"] = optional_json(s.cv_mean_accuracy);
        e["cv_std_accuracy"] = optional_json(s.cv_std_accuracy);
        e["cv_mean_mae"] = optional_json(s.cv_mean_mae);
        e["cv_std_mae"] = optional_json(s.cv_std_mae);
        cv.push_back(std::move(e));
    }
    j["cross_validation"] = std::move(cv);
    j["selected"] = r.selected;
    j["final_test"] = to_json(r.final_test);
    j["test_indices"] = r.test_indices;
    j["cv_indices"] = r.cv_indices;
    j["warnings"] = r.warnings;
    j["station_map_digest"] = r.station_map_digest;
    j["components"] = nlohmann::ordered_json::array();
    for (const auto& c : r.components) j["components"].push_back(to_json(c));
    return j;
}

EvaluationReport report_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema").get<std::string>() != "bss.evaluation_report/1")
            fail(ErrorKind::SchemaMismatch, "not an evaluation report");
        EvaluationReport r;
        r.id = j.at("id").get<std::string>();
        r.model_descriptor = j.at("model_descriptor").get<std::string>();
        r.scope = j.at("scope").get<std::string>();
        const auto task = j.at("task").get<std::string>();
        if (task != "classification" && task != "regression") fail(ErrorKind::SchemaMismatch, "unknown task " + task);
        r.task = task == "classification" ? Task::Classification : Task::Regression;
        r.k = j.at("k").get<std::size_t>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.test_fraction = j.at("test_fraction").get<double>();
        for (const auto& e : j.at("cross_validation")) {
            SettingSummary s;
            s.setting = e.at("setting");
            for (const auto& f : e.at("folds")) s.folds.push_back(metrics_from_json(f));
            s.cv_mean_accuracy = optional_double(e, "cv_mean_accuracy");
            s.cv_std_accuracy = optional_double(e, "cv_std_accuracy");
            s.cv_mean_mae = optional_double(e, "cv_mean_mae");
            s.cv_std_mae = optional_double(e, "cv_std_mae");
            r.cross_validation.push_back(std::move(s));
        }
        r.selected = j.at("selected");
        r.final_test = metrics_from_json(j.at("final_test"));
        r.test_indices = j.at("test_indices").get<std::vector<std::size_t>>();
        r.cv_indices = j.at("cv_indices").get<std::vector<std::size_t>>();
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        r.station_map_digest = j.value("station_map_digest", std::string());
        for (const auto& c : j.at("components")) r.components.push_back(report_from_json(c));
        return r;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::SchemaMismatch, e.what());
    }
}

void assign_report_id(EvaluationReport& report) {
    report.id.clear();
    report.id = "rep-" + sha256_hex(to_json(report).dump()).substr(0, 16);
}

std::string render_report(const EvaluationReport& r) {
    std::ostringstream out;
    out << "report     " << r.id << '\n'
        << "model      " << r.model_descriptor << '\n'
        << "scope      " << r.scope << '\n'
        << "task       " << to_string(r.task) << '\n';
    if (r.k > 0) {
        out << "folds      " << r.k << "  test fraction " << r.test_fraction << "  seed " << r.seed << '\n';
        out << "selected   " << r.selected.dump() << '\n';
        out << "\ncross-validation\n";
        std::size_t width = 8;
        for (const auto& s : r.cross_validation) width = std::max(width, s.setting.dump().size());
        out << "  " << std::left << std::setw(static_cast<int>(width)) << "setting" << std::right << std::setw(10)
            << "mean acc" << std::setw(10) << "std acc" << std::setw(12) << "mean mae" << std::setw(12) << "std mae"
            << '\n';
        for (const auto& s : r.cross_validation)
            out << "  " << std::left << std::setw(static_cast<int>(width)) << s.setting.dump() << std::right
                << std::setw(10) << fmt(s.cv_mean_accuracy) << std::setw(10) << fmt(s.cv_std_accuracy) << std::setw(12)
                << fmt(s.cv_mean_mae, 2) << std::setw(12) << fmt(s.cv_std_mae, 2) << '\n';
    }
    out << "\nfinal test (n=" << r.final_test.n << ")\n"
        << "  accuracy     " << fmt(r.final_test.accuracy) << '\n'
        << "  mae seconds  " << fmt(r.final_test.mae_seconds, 2) << '\n';
    if (!r.final_test.per_class_accuracy.empty()) {
        out << "  per-class accuracy\n";
        for (const auto& [name, acc] : r.final_test.per_class_accuracy)
            out << "    " << std::left << std::setw(12) << name << std::right << fmt(acc) << '\n';
    }
    if (!r.components.empty()) {
        out << "\ncomponents\n";
        out << "  " << std::left << std::setw(12) << "scope" << std::right << std::setw(10) << "accuracy"
            << std::setw(12) << "mae" << "  selected\n";
        for (const auto& c : r.components)
            out << "  " << std::left << std::setw(12) << c.scope << std::right << std::setw(10)
                << fmt(c.final_test.accuracy) << std::setw(12) << fmt(c.final_test.mae_seconds, 2) << "  "
                << c.selected.dump() << '\n';
    }
    for (const auto& w : r.warnings) out << "warning: " << w << '\n';
    return out.str();
}

}  // namespace bss
