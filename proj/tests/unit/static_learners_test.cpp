#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bss/datagen.hpp"
#include "bss/registry.hpp"
#include "bss/rng.hpp"
#include "bss/static_learners.hpp"
#include "support.hpp"

using namespace bss;
using doctest::Approx;
using test::kind_of;

namespace {

constexpr Timestamp kMonday = 1704067200;  // 2024-01-01T00:00:00Z

double training_accuracy(const ClassifierModel& model, const ClassificationData& data) {
    int hits = 0;
    for (Eigen::Index i = 0; i < data.X.rows(); ++i)
        hits += predict_destination(model, data.X.row(i).transpose()).index == data.labels[static_cast<std::size_t>(i)];
    return hits / static_cast<double>(data.X.rows());
}

}  // namespace

TEST_CASE("departure encoding") {
    const auto midnight = encode_departure(2, 5, kMonday);
    CHECK(midnight.size() == static_cast<Eigen::Index>(static_input_dim(5)));
    CHECK(midnight.head(5) == (Vector(5) << 0, 0, 1, 0, 0).finished());
    CHECK(midnight(5) == Approx(0.0));
    CHECK(midnight(6) == Approx(1.0));
    CHECK(midnight(7) == 1.0);  // Monday

    const auto six = encode_departure(0, 5, kMonday + 6 * 3600 + 2 * 86400);
    CHECK(six(5) == Approx(1.0));
    CHECK(std::abs(six(6)) < 1e-12);
    CHECK(six(9) == 1.0);  // Wednesday
    CHECK(six.tail(7).sum() == 1.0);

    const auto map = test::line_stations(3);
    CHECK(kind_of([&] { encode_trip_input({"u", "nowhere", 0, "s0", 5}, map); }) == ErrorKind::UnknownStation);
}

TEST_CASE("one_of_k") {
    CHECK(one_of_k(1, 4) == (Vector(4) << 0, 1, 0, 0).finished());
    CHECK(one_of_k(0, 1) == Vector::Ones(1));
    CHECK(kind_of([] { one_of_k(5, 3); }) == ErrorKind::IndexOutOfRange);
}

TEST_CASE("softmax normalization examples") {
    const auto p = softmax_normalize((Vector(3) << 2, 1, 1).finished());
    CHECK(p(0) == Approx(0.5));
    CHECK(p(1) == Approx(0.25));
    CHECK(p(2) == Approx(0.25));
    CHECK(softmax_normalize(Vector::Zero(4)) == Vector::Constant(4, 0.25));
    CHECK(kind_of([] { softmax_normalize((Vector(2) << -1, 2).finished()); }) == ErrorKind::NegativeComponent);
    CHECK(kind_of([] { softmax_normalize(Vector()); }) == ErrorKind::EmptyVector);
    CHECK(argmax(Vector::Constant(3, 0.2)) == 0);
}

TEST_CASE("both classifiers separate a separable toy set") {
    ClassificationData data;
    data.X.resize(8, 2);
    data.X << 0, 0, 0.2, 0.1, 0.1, 0.3, 0.3, 0.2, 2, 2, 2.2, 1.9, 1.8, 2.1, 2.1, 2.3;
    data.labels = {0, 0, 0, 0, 1, 1, 1, 1};
    for (auto kind : {ClassifierKind::NaiveBayes, ClassifierKind::LogisticRegression}) {
        ClassifierHyperparameters h;
        h.kind = kind;
        const auto model = train_classifier(data, {"a", "b"}, h);
        CHECK(training_accuracy(model, data) == 1.0);
    }
}

TEST_CASE("naive Bayes posterior matches Bayes rule by hand") {
    ClassificationData data;
    data.X.resize(4, 2);
    data.X << 1.0, 0.0, 2.0, 1.0, 4.0, 1.0, 5.0, 3.0;
    data.labels = {0, 0, 1, 0};
    ClassifierHyperparameters h;
    const auto model = train_classifier(data, {"a", "b"}, h);

    // Class 0: samples 0, 1, 3. Class 1: sample 2 (variance = floor only).
    auto density = [](double x, double m, double v) { return std::exp(-(x - m) * (x - m) / (2 * v)) / std::sqrt(2 * std::numbers::pi * v); };
    const double m0a = 8.0 / 3, m0b = 4.0 / 3;
    const double v0a = ((1 - m0a) * (1 - m0a) + (2 - m0a) * (2 - m0a) + (5 - m0a) * (5 - m0a)) / 3 + 1e-4;
    const double v0b = ((0 - m0b) * (0 - m0b) + (1 - m0b) * (1 - m0b) + (3 - m0b) * (3 - m0b)) / 3 + 1e-4;
    const double joint0 = 0.75 * density(1.0, m0a, v0a) * density(0.0, m0b, v0b);
    const double joint1 = 0.25 * density(1.0, 4.0, 1e-4) * density(0.0, 1.0, 1e-4);
    const double expected = joint0 / (joint0 + joint1);

    const auto p = predict_destination(model, data.X.row(0).transpose());
    CHECK(std::abs(p.probabilities(0) - expected) < 1e-9);
}

TEST_CASE("single-class naive Bayes is certain") {
    ClassificationData data;
    data.X = Matrix::Random(5, 3);
    data.labels = {1, 1, 1, 1, 1};
    const auto model = train_classifier(data, {"a", "b", "c"}, {});
    for (int i = 0; i < 5; ++i) {
        const auto p = predict_destination(model, Vector::Random(3));
        CHECK(p.station == "b");
        CHECK(p.probabilities(1) == 1.0);
    }
}

TEST_CASE("logistic regression descends and scores unseen classes zero") {
    ClassificationData data;
    auto rng = keyed_engine(21);
    data.X.resize(40, 3);
    for (Eigen::Index i = 0; i < 40; ++i) {
        const std::size_t label = i % 2 ? 2 : 0;
        data.labels.push_back(label);
        for (Eigen::Index j = 0; j < 3; ++j) data.X(i, j) = uniform(rng, -1, 1) + (label == 2 ? 1.5 : -1.5);
    }
    ClassifierHyperparameters h;
    h.kind = ClassifierKind::LogisticRegression;
    h.l2 = 1e-3;
    const auto fit = fit_logistic(data, 3, h);
    for (std::size_t i = 1; i < fit.loss_history.size(); ++i) CHECK(fit.loss_history[i] <= fit.loss_history[i - 1]);
    CHECK(fit.params.active_classes == std::vector<std::size_t>{0, 2});

    const auto model = train_classifier(data, {"a", "b", "c"}, h);
    const auto p = predict_destination(model, Vector::Constant(3, 1.5));
    CHECK(p.station == "c");
    CHECK(p.probabilities(1) == 0.0);
    CHECK(p.probabilities.sum() == Approx(1.0));
}

TEST_CASE("classifier input checks") {
    ClassificationData data;
    data.X = Matrix::Random(3, 2);
    data.labels = {0, 1, 5};
    CHECK(kind_of([&] { train_classifier(data, {"a", "b"}, {}); }) == ErrorKind::IndexOutOfRange);
    data.labels = {0, 1, 1};
    const auto model = train_classifier(data, {"a", "b"}, {});
    CHECK(kind_of([&] { predict_destination(model, Vector::Zero(3)); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("ridge regression recovers an exact line") {
    Matrix X(6, 1);
    X << 0, 10, 20, 35, 50, 90;
    const Vector y = (600.0 + 2.0 * X.col(0).array()).matrix();
    const auto model = train_regressor(X, y, 0.0);
    CHECK(std::abs(model.bias - 600.0) < 1e-8);
    CHECK(std::abs(model.weights(0) - 2.0) < 1e-8);
    for (Eigen::Index i = 0; i < 6; ++i) CHECK(std::abs(predict_regressor(model, X.row(i).transpose()) - y(i)) < 1e-8);

    const auto flat = train_regressor(X, y, 1e12);
    CHECK(std::abs(flat.weights(0)) < 1e-6);
    CHECK(flat.bias == Approx(y.mean()).epsilon(1e-6));
}

TEST_CASE("ridge matches an explicit normal-equations solve") {
    Matrix X(3, 2);
    X << 1.0, 2.0, -0.5, 0.3, 2.0, -1.0;
    const Vector y = (Vector(3) << 3.0, -1.0, 0.5).finished();
    const double lambda = 0.1;
    const auto model = train_regressor(X, y, lambda);

    // Augmented [X 1] with the bias unpenalized, solved by Cramer's rule.
    double M[3][3] = {}, r[3] = {};
    for (int i = 0; i < 3; ++i) {
        const double a[3] = {X(i, 0), X(i, 1), 1.0};
        for (int p = 0; p < 3; ++p) {
            r[p] += a[p] * y(i);
            for (int q = 0; q < 3; ++q) M[p][q] += a[p] * a[q];
        }
    }
    M[0][0] += lambda;
    M[1][1] += lambda;
    auto det = [](double m[3][3]) {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    const double D = det(M);
    double theta[3];
    for (int c = 0; c < 3; ++c) {
        double Mc[3][3];
        for (int p = 0; p < 3; ++p)
            for (int q = 0; q < 3; ++q) Mc[p][q] = q == c ? r[p] : M[p][q];
        theta[c] = det(Mc) / D;
    }
    CHECK(std::abs(model.weights(0) - theta[0]) < 1e-10);
    CHECK(std::abs(model.weights(1) - theta[1]) < 1e-10);
    CHECK(std::abs(model.bias - theta[2]) < 1e-10);
}

TEST_CASE("ridge error cases") {
    CHECK(kind_of([] { train_regressor(Matrix::Ones(1, 2), Vector::Ones(1), 1.0); }) == ErrorKind::InsufficientData);
    Matrix X(4, 2);
    X << 1, 2, 2, 4, 3, 6, 4, 8;  // second column is twice the first
    CHECK(kind_of([&] { train_regressor(X, Vector::Ones(4), 0.0); }) == ErrorKind::SingularSystem);
    CHECK_FALSE(kind_of([&] { train_regressor(X, Vector::Ones(4), 0.5); }).has_value());
}

TEST_CASE("registry bootstraps, falls back and retrains at the threshold") {
    GeneratorConfig c;
    c.seed = 2;
    c.station_map = random_station_layout(5, 2);
    c.n_users = 2;
    c.trips_per_user = 100;
    c.habit_strength = 1.0;
    const auto trips = generate_trips(c);

    RegistryConfig rc;
    rc.retrain_threshold = 50;
    rc.min_bootstrap = 20;
    UserModelRegistry registry(c.station_map, rc);
    CHECK(kind_of([&] { registry.predict("u0", "s00", 0); }) == ErrorKind::UntrainedModel);

    // Trips are user-major: u0 first.
    for (int i = 0; i < 19; ++i) registry.ingest(trips[static_cast<std::size_t>(i)]);
    CHECK(registry.user("u0")->n_trainings == 0);
    registry.ingest(trips[19]);
    CHECK(registry.user("u0")->n_trainings == 1);
    for (int i = 20; i < 69; ++i) registry.ingest(trips[static_cast<std::size_t>(i)]);
    CHECK(registry.user("u0")->n_trainings == 1);
    registry.ingest(trips[69]);
    CHECK(registry.user("u0")->n_trainings == 2);
    CHECK(registry.user("u0")->n_trained_on == 70);

    const auto& habitual = trips[0];
    const auto own = registry.predict("u0", habitual.leave_station, habitual.leave_time);
    CHECK(own.source == ModelSource::User);
    CHECK(own.destination.station == habitual.return_station);

    for (int i = 100; i < 105; ++i) registry.ingest(trips[static_cast<std::size_t>(i)]);
    CHECK(registry.predict("u1", "s00", 0).source == ModelSource::Global);
    CHECK(registry.predict("stranger", "s00", 0).source == ModelSource::Global);
}
