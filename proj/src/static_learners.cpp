#include "bss/static_learners.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Sparse>

#include "bss/error.hpp"
#include "bss/rng.hpp"

namespace bss {

namespace {

constexpr Timestamp kDay = 86400;

void check_labels(const ClassificationData& data, std::size_t n_classes) {
    if (static_cast<std::size_t>(data.X.rows()) != data.labels.size())
        fail(ErrorKind::DimensionMismatch, "feature rows and labels differ in length");
    for (auto y : data.labels)
        if (y >= n_classes) fail(ErrorKind::IndexOutOfRange, "label " + std::to_string(y) + " outside class range");
}

/// Samples laid out as columns, which keeps the per-sample softmax contiguous.
/// Departure encodings are mostly one-hot, so X is held sparse.
struct ColumnData {
    Eigen::SparseMatrix<double> X;   // n x d
    Eigen::SparseMatrix<double> Xt;  // d x n
    Matrix Y;                        // K x n one-of-K targets
    std::vector<std::size_t> labels;
};

ColumnData column_data(const Matrix& X, const std::vector<std::size_t>& labels, Eigen::Index K) {
    ColumnData c{X.sparseView(), X.transpose().sparseView(), Matrix::Zero(K, X.rows()), labels};
    for (std::size_t i = 0; i < labels.size(); ++i) c.Y(static_cast<Eigen::Index>(labels[i]), static_cast<Eigen::Index>(i)) = 1.0;
    return c;
}

/// Loss and class probabilities at (W, b).
struct Forward {
    double loss = 0.0;
    Matrix probs;  // K x n
};

Forward forward(const LogisticParams& p, const ColumnData& data, double l2) {
    const auto n = data.Xt.cols();
    Matrix Z = p.weights * data.Xt;
    Z.colwise() += p.bias;
    const Eigen::RowVectorXd m = Z.colwise().maxCoeff();
    double nll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) nll -= Z(static_cast<Eigen::Index>(data.labels[static_cast<std::size_t>(i)]), i);
    Z.rowwise() -= m;
    Forward f;
    f.probs = Z.array().exp().matrix();
    const Eigen::RowVectorXd s = f.probs.colwise().sum();
    f.probs.array().rowwise() /= s.array();
    nll += (m.array() + s.array().log()).sum();
    f.loss = nll / static_cast<double>(n) + 0.5 * l2 * p.weights.squaredNorm();
    return f;
}

void gradient_from(const Forward& f, const LogisticParams& p, const ColumnData& data, double l2, Matrix& grad_w,
                   Vector& grad_b) {
    const Matrix G = f.probs - data.Y;
    const double inv_n = 1.0 / static_cast<double>(data.X.rows());
    grad_w.noalias() = G * data.X;
    grad_w *= inv_n;
    grad_w += l2 * p.weights;
    grad_b = G.rowwise().sum() * inv_n;
}

double gaussian_log_pdf(double x, double mean, double var) {
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - (x - mean) * (x - mean) / (2.0 * var);
}

}  // namespace

Vector encode_departure(std::size_t station_index, std::size_t n_stations, Timestamp leave_time) {
    if (station_index >= n_stations) fail(ErrorKind::UnknownStation, "station index out of range");
    Vector x = Vector::Zero(static_cast<Eigen::Index>(static_input_dim(n_stations)));
    x(static_cast<Eigen::Index>(station_index)) = 1.0;
    const Timestamp second_of_day = ((leave_time % kDay) + kDay) % kDay;
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(second_of_day) / static_cast<double>(kDay);
    const auto s = static_cast<Eigen::Index>(n_stations);
    x(s) = std::sin(angle);
    x(s + 1) = std::cos(angle);
    // 1970-01-01 was a Thursday; shift so Monday is day 0.
    const Timestamp days = (leave_time >= 0 ? leave_time : leave_time - kDay + 1) / kDay;
    const auto dow = static_cast<Eigen::Index>(((days + 3) % 7 + 7) % 7);
    x(s + 2 + dow) = 1.0;
    return x;
}

Vector encode_trip_input(const TripRecord& trip, const StationMap& stations) {
    return encode_departure(stations.require_index(trip.leave_station), stations.size(), trip.leave_time);
}

Vector one_of_k(std::size_t k, std::size_t K) {
    if (k >= K) fail(ErrorKind::IndexOutOfRange, "class " + std::to_string(k) + " not in [0, " + std::to_string(K) + ")");
    Vector v = Vector::Zero(static_cast<Eigen::Index>(K));
    v(static_cast<Eigen::Index>(k)) = 1.0;
    return v;
}

Vector softmax_normalize(const Vector& scores) {
    if (scores.size() == 0) fail(ErrorKind::EmptyVector, "cannot normalize an empty vector");
    for (Eigen::Index i = 0; i < scores.size(); ++i)
        if (!(scores(i) >= 0.0)) fail(ErrorKind::NegativeComponent, "component " + std::to_string(i) + " is negative");
    const double total = scores.sum();
    if (total == 0.0) return Vector::Constant(scores.size(), 1.0 / static_cast<double>(scores.size()));
    return scores / total;
}

Vector clamp_nonnegative(Vector scores) { return scores.cwiseMax(0.0); }

std::vector<StationId> station_labels(const StationMap& stations) {
    std::vector<StationId> labels;
    for (const auto& s : stations.stations()) labels.push_back(s.id);
    return labels;
}

std::size_t argmax(const Vector& v) {
    std::size_t best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v(i) > v(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
    return best;
}

DataFingerprint fingerprint(const Matrix& X, const Vector& y) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](double v) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof v);
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    };
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) feed(X(i, j));
        feed(y(i));
    }
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << h;
    return {static_cast<std::size_t>(X.rows()), ss.str()};
}

std::string to_string(ClassifierKind kind) {
    return kind == ClassifierKind::NaiveBayes ? "naive-bayes" : "logistic-regression";
}

ClassifierKind parse_classifier_kind(const std::string& name) {
    if (name == "naive-bayes") return ClassifierKind::NaiveBayes;
    if (name == "logistic-regression") return ClassifierKind::LogisticRegression;
    fail(ErrorKind::InvalidConfig, "unknown classifier kind '" + name + "'");
}

std::vector<FeatureKind> departure_feature_kinds(std::size_t n_stations) {
    std::vector<FeatureKind> kinds(static_input_dim(n_stations), FeatureKind::Bernoulli);
    kinds[n_stations] = FeatureKind::Gaussian;
    kinds[n_stations + 1] = FeatureKind::Gaussian;
    return kinds;
}

LossGradient logistic_loss_gradient(const LogisticParams& params, const Matrix& X,
                                    const std::vector<std::size_t>& labels, double l2) {
    if (static_cast<std::size_t>(X.rows()) != labels.size())
        fail(ErrorKind::DimensionMismatch, "feature rows and labels differ in length");
    const auto data = column_data(X, labels, params.weights.rows());
    const auto f = forward(params, data, l2);
    LossGradient out;
    out.loss = f.loss;
    gradient_from(f, params, data, l2, out.grad_weights, out.grad_bias);
    return out;
}

LogisticFit fit_logistic(const ClassificationData& data, std::size_t n_classes, const ClassifierHyperparameters& hyper) {
    check_labels(data, n_classes);
    if (data.labels.empty()) fail(ErrorKind::InsufficientData, "no training samples");

    // Classes without training samples have their likelihood maximized at
    // bias -inf; they are left out of the descent and score 0.
    std::vector<std::size_t> observed(data.labels.begin(), data.labels.end());
    std::sort(observed.begin(), observed.end());
    observed.erase(std::unique(observed.begin(), observed.end()), observed.end());
    std::vector<std::size_t> local(data.labels.size());
    for (std::size_t i = 0; i < data.labels.size(); ++i)
        local[i] = static_cast<std::size_t>(std::lower_bound(observed.begin(), observed.end(), data.labels[i]) - observed.begin());

    const auto K = static_cast<Eigen::Index>(observed.size());
    LogisticFit fit;
    fit.params.weights = Matrix::Zero(K, data.X.cols());
    fit.params.bias = Vector::Zero(K);

    const auto columns = column_data(data.X, local, K);
    auto current = forward(fit.params, columns, hyper.l2);
    if (!std::isfinite(current.loss)) fail(ErrorKind::NonFiniteLoss, "initial loss is not finite");
    fit.loss_history.push_back(current.loss);

    Matrix grad_w;
    Vector grad_b;
    LogisticParams trial;
    double rate = hyper.learning_rate;
    for (int it = 0; it < hyper.max_iters; ++it) {
        gradient_from(current, fit.params, columns, hyper.l2, grad_w, grad_b);
        const double gnorm = std::max(grad_w.cwiseAbs().maxCoeff(), grad_b.cwiseAbs().maxCoeff());
        if (gnorm < hyper.grad_tol) {
            fit.converged = true;
            break;
        }
        bool accepted = false;
        bool saw_non_finite = false;
        for (int halvings = 0; halvings < 60; ++halvings) {
            trial.weights = fit.params.weights - rate * grad_w;
            trial.bias = fit.params.bias - rate * grad_b;
            auto next = forward(trial, columns, hyper.l2);
            if (std::isfinite(next.loss) && next.loss <= current.loss) {
                std::swap(fit.params, trial);
                current = std::move(next);
                accepted = true;
                break;
            }
            saw_non_finite = saw_non_finite || !std::isfinite(next.loss);
            rate *= 0.5;
        }
        if (!accepted) {
            if (saw_non_finite) fail(ErrorKind::NonFiniteLoss, "loss diverged during gradient descent");
            break;  // no descent step left at machine precision
        }
        fit.loss_history.push_back(current.loss);
        fit.iterations = it + 1;
    }

    LogisticParams full;
    full.weights = Matrix::Zero(static_cast<Eigen::Index>(n_classes), data.X.cols());
    full.bias = Vector::Zero(static_cast<Eigen::Index>(n_classes));
    for (Eigen::Index r = 0; r < K; ++r) {
        const auto k = static_cast<Eigen::Index>(observed[static_cast<std::size_t>(r)]);
        full.weights.row(k) = fit.params.weights.row(r);
        full.bias(k) = fit.params.bias(r);
    }
    if (observed.size() < n_classes) full.active_classes = observed;
    fit.params = std::move(full);
    return fit;
}

NaiveBayesParams fit_naive_bayes(const ClassificationData& data, std::size_t n_classes,
                                 const ClassifierHyperparameters& hyper) {
    check_labels(data, n_classes);
    if (data.labels.empty()) fail(ErrorKind::InsufficientData, "naive Bayes needs at least one sample");
    const auto d = data.X.cols();
    const auto K = static_cast<Eigen::Index>(n_classes);
    NaiveBayesParams p;
    p.kinds = hyper.feature_kinds.empty() ? std::vector<FeatureKind>(static_cast<std::size_t>(d), FeatureKind::Gaussian)
                                          : hyper.feature_kinds;
    if (p.kinds.size() != static_cast<std::size_t>(d))
        fail(ErrorKind::DimensionMismatch, "feature_kinds length differs from input dimension");

    Vector counts = Vector::Zero(K);
    Matrix sums = Matrix::Zero(K, d);
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(data.labels[i]);
        counts(k) += 1.0;
        sums.row(k) += data.X.row(static_cast<Eigen::Index>(i));
    }
    p.priors = counts / static_cast<double>(data.labels.size());
    p.means = Matrix::Zero(K, d);
    p.variances = Matrix::Constant(K, d, hyper.var_floor);
    p.bernoulli = Matrix::Zero(K, d);
    for (Eigen::Index k = 0; k < K; ++k) {
        if (counts(k) > 0.0) p.means.row(k) = sums.row(k) / counts(k);
        p.bernoulli.row(k) = (sums.row(k).array() + hyper.laplace_alpha) / (counts(k) + 2.0 * hyper.laplace_alpha);
    }
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(data.labels[i]);
        p.variances.row(k).array() +=
            (data.X.row(static_cast<Eigen::Index>(i)) - p.means.row(k)).array().square() / counts(k);
    }
    return p;
}

ClassifierModel train_classifier(const ClassificationData& data, std::vector<StationId> class_labels,
                                 const ClassifierHyperparameters& hyper) {
    if (class_labels.empty()) fail(ErrorKind::InsufficientData, "at least one class label is required");
    ClassifierModel model;
    model.kind = hyper.kind;
    model.hyper = hyper;
    model.input_dim = static_cast<std::size_t>(data.X.cols());
    const auto K = class_labels.size();
    model.class_labels = std::move(class_labels);
    if (hyper.kind == ClassifierKind::NaiveBayes) {
        model.params = fit_naive_bayes(data, K, hyper);
    } else {
        model.params = fit_logistic(data, K, hyper).params;
    }
    Vector y(static_cast<Eigen::Index>(data.labels.size()));
    for (std::size_t i = 0; i < data.labels.size(); ++i) y(static_cast<Eigen::Index>(i)) = static_cast<double>(data.labels[i]);
    model.trained_on = fingerprint(data.X, y);
    return model;
}

namespace {

// exp(v - max v) with exact zeros for -inf entries; Eigen's vectorized exp
// clamps its argument and would return a denormal instead.
Vector exp_shifted(const Vector& v) {
    const double m = v.maxCoeff();
    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = std::isinf(v(i)) && v(i) < 0.0 ? 0.0 : std::exp(v(i) - m);
    return out;
}

}  // namespace

Vector classifier_scores(const ClassifierModel& model, const Vector& x) {
    if (static_cast<std::size_t>(x.size()) != model.input_dim)
        fail(ErrorKind::DimensionMismatch, "input has dimension " + std::to_string(x.size()) + ", model expects " +
                                               std::to_string(model.input_dim));
    const auto K = static_cast<Eigen::Index>(model.n_classes());
    if (const auto* nb = std::get_if<NaiveBayesParams>(&model.params)) {
        Vector log_score = Vector::Constant(K, -std::numeric_limits<double>::infinity());
        for (Eigen::Index k = 0; k < K; ++k) {
            if (nb->priors(k) <= 0.0) continue;
            double s = std::log(nb->priors(k));
            for (Eigen::Index j = 0; j < x.size(); ++j) {
                if (nb->kinds[static_cast<std::size_t>(j)] == FeatureKind::Gaussian) {
                    s += gaussian_log_pdf(x(j), nb->means(k, j), nb->variances(k, j));
                } else {
                    const double v = std::clamp(x(j), 0.0, 1.0);
                    const double q = nb->bernoulli(k, j);
                    s += std::log(v * q + (1.0 - v) * (1.0 - q));
                }
            }
            log_score(k) = s;
        }
        return exp_shifted(log_score);
    }
    const auto& lr = std::get<LogisticParams>(model.params);
    Vector z = lr.weights * x + lr.bias;
    if (!lr.active_classes.empty()) {
        Vector masked = Vector::Constant(z.size(), -std::numeric_limits<double>::infinity());
        for (auto k : lr.active_classes) masked(static_cast<Eigen::Index>(k)) = z(static_cast<Eigen::Index>(k));
        z = std::move(masked);
    }
    return exp_shifted(z);
}

DestinationPrediction predict_destination(const ClassifierModel& model, const Vector& x) {
    DestinationPrediction out;
    out.probabilities = softmax_normalize(clamp_nonnegative(classifier_scores(model, x)));
    out.index = argmax(out.probabilities);
    out.station = model.class_labels[out.index];
    return out;
}

Matrix solve_ridge_system(const Matrix& A, const Matrix& Y, const Vector& penalty_diagonal) {
    if (A.rows() != Y.rows()) fail(ErrorKind::DimensionMismatch, "design and target row counts differ");
    if (penalty_diagonal.size() != A.cols()) fail(ErrorKind::DimensionMismatch, "penalty length differs from design width");
    if ((penalty_diagonal.array() < 0.0).any()) fail(ErrorKind::InvalidConfig, "penalties must be nonnegative");
    // Least squares on [A; sqrt(P)] has the same normal equations as the
    // ridge problem without squaring the condition number of A.
    const auto n = A.rows();
    const auto d = A.cols();
    Matrix B(n + d, d);
    B.topRows(n) = A;
    B.bottomRows(d) = penalty_diagonal.cwiseSqrt().asDiagonal();
    Matrix rhs_ls = Matrix::Zero(n + d, Y.cols());
    rhs_ls.topRows(n) = Y;
    Eigen::ColPivHouseholderQR<Matrix> qr(B);
    qr.setThreshold(1e-12);
    if (qr.rank() < d)
        fail(ErrorKind::SingularSystem,
             "ridge system is rank deficient (rank " + std::to_string(qr.rank()) + " < " + std::to_string(d) + ")");
    Matrix theta = qr.solve(rhs_ls);
    // One step of iterative refinement on the normal equations themselves.
    Matrix M = A.transpose() * A;
    M.diagonal() += penalty_diagonal;
    // With B P = Q R, (B^T B)^-1 = P R^-1 R^-T P^T.
    const Matrix residual = A.transpose() * Y - M * theta;
    const auto R = qr.matrixR().topLeftCorner(d, d);
    const Matrix half = R.transpose().triangularView<Eigen::Lower>().solve(qr.colsPermutation().transpose() * residual);
    const Matrix step = qr.colsPermutation() * Matrix(R.triangularView<Eigen::Upper>().solve(half));
    theta += step;
    return theta;
}

double normal_equation_residual(const Matrix& A, const Matrix& Y, const Vector& penalty_diagonal, const Matrix& theta) {
    Matrix M = A.transpose() * A;
    M.diagonal() += penalty_diagonal;
    return (M * theta - A.transpose() * Y).cwiseAbs().maxCoeff();
}

RegressorModel train_regressor(const Matrix& X, const Vector& y, double ridge_lambda) {
    if (X.rows() != y.size()) fail(ErrorKind::DimensionMismatch, "feature rows and targets differ in length");
    if (X.rows() < 2) fail(ErrorKind::InsufficientData, "ridge regression needs at least 2 samples");
    if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda))
        fail(ErrorKind::InvalidConfig, "ridge_lambda must be a nonnegative finite number");
    const auto d = X.cols();
    Matrix A(X.rows(), d + 1);
    A.leftCols(d) = X;
    A.col(d).setOnes();
    Vector penalty = Vector::Constant(d + 1, ridge_lambda);
    penalty(d) = 0.0;
    const Matrix theta = solve_ridge_system(A, y, penalty);
    RegressorModel model;
    model.weights = theta.col(0).head(d);
    model.bias = theta(d, 0);
    model.ridge_lambda = ridge_lambda;
    if (!model.weights.allFinite() || !std::isfinite(model.bias))
        fail(ErrorKind::SingularSystem, "ridge solution is not finite");
    model.trained_on = fingerprint(X, y);
    return model;
}

double predict_regressor(const RegressorModel& model, const Vector& x) {
    if (x.size() != model.weights.size())
        fail(ErrorKind::DimensionMismatch, "input has dimension " + std::to_string(x.size()) + ", model expects " +
                                               std::to_string(model.weights.size()));
    return model.weights.dot(x) + model.bias;
}

}  // namespace bss
