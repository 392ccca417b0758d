#include "bss/persistence.hpp"

#include "bss/error.hpp"

namespace bss {

namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

void expect_schema(const json& j, const char* schema) {
    if (!j.is_object() || j.value("schema", std::string()) != schema)
        fail(ErrorKind::SchemaMismatch, std::string("expected a ") + schema + " document");
}

ojson vector_json(const Vector& v) {
    auto a = ojson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vector vector_from_json(const json& j, Eigen::Index n) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n)
        fail(ErrorKind::SchemaMismatch, "vector length mismatch");
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

ojson fingerprint_json(const DataFingerprint& f) { return ojson{{"count", f.count}, {"hash", f.hash}}; }

DataFingerprint fingerprint_from_json(const json& j) {
    return {j.at("count").get<std::size_t>(), j.at("hash").get<std::string>()};
}

ojson hyper_json(const ClassifierHyperparameters& h) {
    ojson j;
    j["kind"] = to_string(h.kind);
    j["l2"] = h.l2;
    j["learning_rate"] = h.learning_rate;
    j["max_iters"] = h.max_iters;
    j["grad_tol"] = h.grad_tol;
    j["laplace_alpha"] = h.laplace_alpha;
    j["var_floor"] = h.var_floor;
    auto kinds = ojson::array();
    for (auto k : h.feature_kinds) kinds.push_back(k == FeatureKind::Gaussian ? "gaussian" : "bernoulli");
    j["feature_kinds"] = std::move(kinds);
    return j;
}

ClassifierHyperparameters hyper_from_json(const json& j) {
    ClassifierHyperparameters h;
    h.kind = parse_classifier_kind(j.at("kind").get<std::string>());
    h.l2 = j.at("l2").get<double>();
    h.learning_rate = j.at("learning_rate").get<double>();
    h.max_iters = j.at("max_iters").get<int>();
    h.grad_tol = j.at("grad_tol").get<double>();
    h.laplace_alpha = j.at("laplace_alpha").get<double>();
    h.var_floor = j.at("var_floor").get<double>();
    for (const auto& k : j.at("feature_kinds")) {
        const auto s = k.get<std::string>();
        if (s != "gaussian" && s != "bernoulli") fail(ErrorKind::SchemaMismatch, "unknown feature kind " + s);
        h.feature_kinds.push_back(s == "gaussian" ? FeatureKind::Gaussian : FeatureKind::Bernoulli);
    }
    return h;
}

ojson reservoir_config_json(const ReservoirConfig& c) {
    ojson j;
    j["n_reservoir"] = c.n_reservoir;
    j["spectral_radius"] = c.spectral_radius;
    j["connectivity"] = c.connectivity;
    j["input_scaling"] = c.input_scaling;
    j["leak_rate"] = c.leak_rate;
    j["ridge_lambda"] = c.ridge_lambda;
    j["washout"] = c.washout;
    j["seed"] = c.seed;
    return j;
}

ReservoirConfig reservoir_config_from_json(const json& j) {
    ReservoirConfig c;
    c.n_reservoir = j.at("n_reservoir").get<std::size_t>();
    c.spectral_radius = j.at("spectral_radius").get<double>();
    c.connectivity = j.at("connectivity").get<double>();
    c.input_scaling = j.at("input_scaling").get<double>();
    c.leak_rate = j.at("leak_rate").get<double>();
    c.ridge_lambda = j.at("ridge_lambda").get<double>();
    c.washout = j.at("washout").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

template <class F>
auto guarded(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const json::exception& e) {
        fail(ErrorKind::SchemaMismatch, e.what());
    }
}

}  // namespace

ojson to_json(const Matrix& m) {
    auto rows = ojson::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
    return rows;
}

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        fail(ErrorKind::SchemaMismatch, "matrix row count mismatch");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) m.row(i) = vector_from_json(j[static_cast<std::size_t>(i)], cols).transpose();
    return m;
}

ojson to_json(const StationMap& stations) {
    auto arr = ojson::array();
    for (const auto& s : stations.stations())
        arr.push_back(ojson{{"id", s.id}, {"x", s.position.x}, {"y", s.position.y}, {"capacity", s.capacity}});
    return arr;
}

StationMap station_map_from_json(const json& j) {
    return guarded([&] {
        std::vector<Station> stations;
        for (const auto& s : j)
            stations.push_back({s.at("id").get<std::string>(), {s.at("x").get<double>(), s.at("y").get<double>()},
                                s.at("capacity").get<int>()});
        return StationMap(std::move(stations));
    });
}

ojson to_json(const ClassifierModel& model) {
    ojson j;
    j["schema"] = "bss.classifier/1";
    j["kind"] = to_string(model.kind);
    j["class_labels"] = model.class_labels;
    j["input_dim"] = model.input_dim;
    j["hyperparameters"] = hyper_json(model.hyper);
    ojson p;
    if (const auto* nb = std::get_if<NaiveBayesParams>(&model.params)) {
        p["priors"] = vector_json(nb->priors);
        p["means"] = to_json(nb->means);
        p["variances"] = to_json(nb->variances);
        p["bernoulli"] = to_json(nb->bernoulli);
        auto kinds = ojson::array();
        for (auto k : nb->kinds) kinds.push_back(k == FeatureKind::Gaussian ? "gaussian" : "bernoulli");
        p["feature_kinds"] = std::move(kinds);
    } else {
        const auto& lr = std::get<LogisticParams>(model.params);
        p["weights"] = to_json(lr.weights);
        p["bias"] = vector_json(lr.bias);
        p["active_classes"] = lr.active_classes;
    }
    j["parameters"] = std::move(p);
    j["training_data"] = fingerprint_json(model.trained_on);
    return j;
}

ClassifierModel classifier_from_json(const json& j) {
    expect_schema(j, "bss.classifier/1");
    return guarded([&] {
        ClassifierModel m;
        m.kind = parse_classifier_kind(j.at("kind").get<std::string>());
        m.class_labels = j.at("class_labels").get<std::vector<std::string>>();
        m.input_dim = j.at("input_dim").get<std::size_t>();
        m.hyper = hyper_from_json(j.at("hyperparameters"));
        const auto K = static_cast<Eigen::Index>(m.class_labels.size());
        const auto d = static_cast<Eigen::Index>(m.input_dim);
        if (K < 1) fail(ErrorKind::SchemaMismatch, "classifier without classes");
        const auto& p = j.at("parameters");
        if (m.kind == ClassifierKind::NaiveBayes) {
            NaiveBayesParams nb;
            nb.priors = vector_from_json(p.at("priors"), K);
            nb.means = matrix_from_json(p.at("means"), K, d);
            nb.variances = matrix_from_json(p.at("variances"), K, d);
            nb.bernoulli = matrix_from_json(p.at("bernoulli"), K, d);
            for (const auto& k : p.at("feature_kinds"))
                nb.kinds.push_back(k.get<std::string>() == "bernoulli" ? FeatureKind::Bernoulli : FeatureKind::Gaussian);
            if (static_cast<Eigen::Index>(nb.kinds.size()) != d) fail(ErrorKind::SchemaMismatch, "feature_kinds length");
            m.params = std::move(nb);
        } else {
            LogisticParams lr;
            lr.weights = matrix_from_json(p.at("weights"), K, d);
            lr.bias = vector_from_json(p.at("bias"), K);
            lr.active_classes = p.at("active_classes").get<std::vector<std::size_t>>();
            for (auto k : lr.active_classes)
                if (k >= m.class_labels.size()) fail(ErrorKind::SchemaMismatch, "active class out of range");
            m.params = std::move(lr);
        }
        m.trained_on = fingerprint_from_json(j.at("training_data"));
        return m;
    });
}

ojson to_json(const RegressorModel& model) {
    ojson j;
    j["schema"] = "bss.regressor/1";
    j["kind"] = "ridge";
    j["input_dim"] = model.weights.size();
    j["ridge_lambda"] = model.ridge_lambda;
    j["weights"] = vector_json(model.weights);
    j["bias"] = model.bias;
    j["training_data"] = fingerprint_json(model.trained_on);
    return j;
}

RegressorModel regressor_from_json(const json& j) {
    expect_schema(j, "bss.regressor/1");
    return guarded([&] {
        RegressorModel m;
        const auto d = j.at("input_dim").get<Eigen::Index>();
        m.ridge_lambda = j.at("ridge_lambda").get<double>();
        m.weights = vector_from_json(j.at("weights"), d);
        m.bias = j.at("bias").get<double>();
        m.trained_on = fingerprint_from_json(j.at("training_data"));
        return m;
    });
}

ojson to_json(const EsnModel& model) {
    ojson j;
    j["schema"] = "bss.esn/1";
    j["config"] = reservoir_config_json(model.config);
    j["stations"] = to_json(model.stations);
    j["class_labels"] = model.class_labels();
    j["input_dim"] = model.input_dim;
    j["input_weights"] = to_json(model.input_weights);
    auto triples = ojson::array();
    for (Eigen::Index r = 0; r < model.recurrent.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(model.recurrent, r); it; ++it)
            triples.push_back(ojson::array({it.row(), it.col(), it.value()}));
    j["recurrent"] = std::move(triples);
    j["readout"] = to_json(model.readout);
    j["trained"] = model.trained;
    j["training_data"] = fingerprint_json(model.trained_on);
    return j;
}

EsnModel esn_from_json(const json& j) {
    expect_schema(j, "bss.esn/1");
    return guarded([&] {
        EsnModel m;
        m.config = reservoir_config_from_json(j.at("config"));
        validate(m.config);
        m.stations = station_map_from_json(j.at("stations"));
        m.input_dim = j.at("input_dim").get<std::size_t>();
        if (j.at("class_labels").get<std::vector<std::string>>() != m.class_labels())
            fail(ErrorKind::SchemaMismatch, "class labels do not match the station list");
        const auto n = static_cast<Eigen::Index>(m.config.n_reservoir);
        m.input_weights = matrix_from_json(j.at("input_weights"), n, static_cast<Eigen::Index>(m.input_dim) + 1);
        std::vector<Eigen::Triplet<double>> triplets;
        for (const auto& t : j.at("recurrent")) {
            const auto r = t.at(0).get<Eigen::Index>();
            const auto c = t.at(1).get<Eigen::Index>();
            if (r < 0 || r >= n || c < 0 || c >= n) fail(ErrorKind::SchemaMismatch, "recurrent entry out of range");
            triplets.emplace_back(r, c, t.at(2).get<double>());
        }
        m.recurrent.resize(n, n);
        m.recurrent.setFromTriplets(triplets.begin(), triplets.end());
        m.recurrent.makeCompressed();
        m.readout = matrix_from_json(j.at("readout"), static_cast<Eigen::Index>(m.n_classes() + 1),
                                     static_cast<Eigen::Index>(m.extended_dim()));
        m.trained = j.at("trained").get<bool>();
        m.trained_on = fingerprint_from_json(j.at("training_data"));
        return m;
    });
}

ojson to_json(const UserModelRegistry& registry) {
    ojson j;
    j["schema"] = "bss.userprofile_models/1";
    j["stations"] = to_json(registry.stations());
    const auto& c = registry.config();
    j["config"] = ojson{{"retrain_threshold", c.retrain_threshold},
                        {"min_bootstrap", c.min_bootstrap},
                        {"classifier", hyper_json(c.classifier)},
                        {"ridge_lambda", c.ridge_lambda}};
    auto entry = [](const UserModels& m) {
        ojson e;
        e["n_trained_on"] = m.n_trained_on;
        e["classifier"] = m.classifier ? to_json(*m.classifier) : ojson(nullptr);
        e["regressor"] = m.regressor ? to_json(*m.regressor) : ojson(nullptr);
        return e;
    };
    j["global"] = entry(registry.global());
    j["users"] = ojson::object();
    for (const auto& [id, m] : registry.users())
        if (m.trained()) j["users"][id] = entry(m);
    return j;
}

UserModelRegistry registry_from_json(const json& j) {
    expect_schema(j, "bss.userprofile_models/1");
    return guarded([&] {
        RegistryConfig c;
        const auto& jc = j.at("config");
        c.retrain_threshold = jc.at("retrain_threshold").get<std::size_t>();
        c.min_bootstrap = jc.at("min_bootstrap").get<std::size_t>();
        c.classifier = hyper_from_json(jc.at("classifier"));
        c.ridge_lambda = jc.at("ridge_lambda").get<double>();
        UserModelRegistry registry(station_map_from_json(j.at("stations")), c);
        const auto expected_dim = static_input_dim(registry.stations().size());
        auto load = [&](const json& e) {
            auto classifier = classifier_from_json(e.at("classifier"));
            auto regressor = regressor_from_json(e.at("regressor"));
            if (classifier.input_dim != expected_dim || static_cast<std::size_t>(regressor.weights.size()) != expected_dim)
                fail(ErrorKind::SchemaMismatch, "model input width does not match the station map");
            return std::make_tuple(std::move(classifier), std::move(regressor), e.at("n_trained_on").get<std::size_t>());
        };
        if (!j.at("global").at("classifier").is_null()) {
            auto [cl, rg, n] = load(j.at("global"));
            registry.install_global(std::move(cl), std::move(rg), n);
        }
        for (const auto& [id, e] : j.at("users").items()) {
            auto [cl, rg, n] = load(e);
            registry.install(id, std::move(cl), std::move(rg), n);
        }
        return registry;
    });
}

ojson to_json(const WindowClassifier& model) {
    ojson j;
    j["schema"] = "bss.window_classifier/1";
    j["window_len"] = model.window_len;
    j["stations"] = to_json(model.stations);
    j["classifier"] = to_json(model.model);
    return j;
}

WindowClassifier window_classifier_from_json(const json& j) {
    expect_schema(j, "bss.window_classifier/1");
    return guarded([&] {
        WindowClassifier w;
        w.window_len = j.at("window_len").get<std::size_t>();
        w.stations = station_map_from_json(j.at("stations"));
        w.model = classifier_from_json(j.at("classifier"));
        if (w.model.input_dim != w.window_len * sequence_input_dim(w.stations.size()))
            fail(ErrorKind::SchemaMismatch, "window classifier input width mismatch");
        return w;
    });
}

}  // namespace bss
