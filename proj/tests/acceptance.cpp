// Acceptance suite: one PASS/FAIL line per criterion. Expected values come
// from oracles written here, independent of the library code under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "bss/cli.hpp"
#include "bss/datagen.hpp"
#include "bss/error.hpp"
#include "bss/evaluation.hpp"
#include "bss/featuremodel.hpp"
#include "bss/formats.hpp"
#include "bss/rng.hpp"
#include "bss/sequential.hpp"
#include "bss/static_learners.hpp"

namespace fs = std::filesystem;
using namespace bss;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

fs::path scratch_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("bss_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int cli(const std::vector<std::string>& args, std::string* out_text = nullptr) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    if (out_text) *out_text = out.str();
    if (code != 0) std::cerr << "bssml exited " << code << ": " << err.str();
    return code;
}

// ---------------------------------------------------------------------------

Outcome softmax_suite() {
    auto rng = keyed_engine(101);
    double worst_sum = 0.0, worst_scale = 0.0;
    bool uniform_ok = true;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto K = static_cast<Eigen::Index>(2 + uniform_index(rng, 9));
        Vector v(K);
        for (Eigen::Index i = 0; i < K; ++i) v(i) = uniform01(rng) < 0.2 ? 0.0 : uniform(rng, 0.0, 100.0);
        if (v.sum() == 0.0) v(0) = 1.0;
        const Vector p = softmax_normalize(v);
        worst_sum = std::max(worst_sum, std::abs(p.sum() - 1.0));
        const double c = std::exp(uniform(rng, -10.0, 10.0));
        worst_scale = std::max(worst_scale, (softmax_normalize(c * v) - p).cwiseAbs().maxCoeff());
        const Vector u = softmax_normalize(Vector::Zero(K));
        for (Eigen::Index i = 0; i < K; ++i) uniform_ok = uniform_ok && u(i) == 1.0 / static_cast<double>(K);
    }
    const bool pass = worst_sum <= 1e-9 && worst_scale <= 1e-9 && uniform_ok;
    return {pass, "max |sum-1| " + num(worst_sum) + ", max scale drift " + num(worst_scale) +
                      (uniform_ok ? ", zero->uniform" : ", zero input not uniform")};
}

Outcome metric_oracles() {
    // Exhaustive n = 4, two classes: 2^4 predictions x 2^4 targets.
    int checked = 0, mismatches = 0;
    for (int pm = 0; pm < 16; ++pm) {
        for (int tm = 0; tm < 16; ++tm) {
            std::vector<std::size_t> pred(4), target(4);
            for (int i = 0; i < 4; ++i) {
                pred[i] = (pm >> i) & 1;
                target[i] = (tm >> i) & 1;
            }
            int confusion[2][2] = {{0, 0}, {0, 0}};  // [target][pred]
            for (int i = 0; i < 4; ++i) ++confusion[target[i]][pred[i]];
            for (std::size_t c = 0; c < 2; ++c) {
                const int tp = confusion[c][c];
                const int tn = confusion[1 - c][1 - c];
                const bool present = confusion[c][0] + confusion[c][1] + confusion[0][c] + confusion[1][c] > 0;
                ++checked;
                try {
                    const double got = class_accuracy(pred, target, c);
                    if (!present || got != (tp + tn) / 4.0) ++mismatches;
                } catch (const Error& e) {
                    // A label that occurs nowhere cannot be told apart from an invalid one.
                    if (present || e.kind() != ErrorKind::UnknownClass) ++mismatches;
                }
            }
        }
    }
    auto rng = keyed_engine(102);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + uniform_index(rng, 50);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = uniform(rng, -5000.0, 5000.0);
            b[i] = uniform(rng, -5000.0, 5000.0);
        }
        long double total = 0.0L;
        for (std::size_t i = n; i-- > 0;) total += std::fabs(static_cast<long double>(a[i]) - b[i]);
        const double expected = static_cast<double>(total / n);
        worst = std::max(worst, std::abs(mae(a, b) - expected) / std::max(1.0, expected));
    }
    return {mismatches == 0 && worst <= 1e-12,
            std::to_string(checked - mismatches) + "/" + std::to_string(checked) +
                " accuracy cases agree, max MAE relative error " + num(worst)};
}

Outcome fold_plans() {
    std::size_t plans = 0;
    std::string failure;
    auto check = [&](const FoldPlan& plan, std::size_t n, std::size_t K, const std::vector<std::size_t>* labels) {
        ++plans;
        std::vector<int> seen(n, 0);
        std::size_t lo = n, hi = 0;
        for (std::size_t f = 0; f < K; ++f) {
            const auto held = plan.fold(f);
            lo = std::min(lo, held.size());
            hi = std::max(hi, held.size());
            for (auto i : held) ++seen[i];
            if (held.size() + plan.complement(f).size() != n) failure = "complement size";
            if (labels) {
                std::map<std::size_t, std::size_t> total, here;
                for (auto l : *labels) ++total[l];
                for (auto i : held) ++here[(*labels)[i]];
                for (auto [c, count] : total)
                    if (std::abs(static_cast<double>(here[c]) - static_cast<double>(count) / static_cast<double>(K)) >= 1.0)
                        failure = "stratified class count off by one or more";
            }
        }
        if (std::any_of(seen.begin(), seen.end(), [](int s) { return s != 1; })) failure = "folds overlap or miss samples";
        if (hi - lo > 1) failure = "fold sizes differ by more than one";
        if (!failure.empty() && failure.find("(n=") == std::string::npos)
            failure += " (n=" + std::to_string(n) + ", K=" + std::to_string(K) + ")";
    };
    auto rng = keyed_engine(103);
    for (std::size_t K = 2; K <= 10; ++K) {
        for (std::size_t n = K; n <= 50; ++n) {
            check(kfold_split(n, K, n * 31 + K), n, K, nullptr);
            std::vector<std::size_t> labels(n);
            for (auto& l : labels) l = uniform_index(rng, 3);
            check(kfold_split(n, K, n * 17 + K, std::span<const std::size_t>(labels)), n, K, &labels);
        }
    }
    return {failure.empty(), failure.empty() ? std::to_string(plans) + " plans exact" : failure};
}

/// ||(A^T A + diag(p)) theta - A^T Y||_inf in long double.
double normal_residual(const Matrix& A, const Matrix& Y, const Vector& p, const Matrix& theta) {
    using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    const LMatrix a = A.cast<long double>();
    LMatrix lhs = a.transpose() * a;
    for (Eigen::Index i = 0; i < p.size(); ++i) lhs(i, i) += p(i);
    const LMatrix r = lhs * theta.cast<long double>() - a.transpose() * Y.cast<long double>();
    return static_cast<double>(r.cwiseAbs().maxCoeff());
}

GpsTrajectory random_walk(Engine& rng, const StationMap& stations, std::size_t points, const std::string& id) {
    GpsTrajectory t;
    t.trip_id = id;
    Vec2 pos{uniform(rng, 0.0, 1000.0), uniform(rng, 0.0, 1000.0)};
    double time = 1704067200.0;
    for (std::size_t i = 0; i < points; ++i) {
        t.points.push_back({time, pos});
        time += uniform(rng, 5.0, 20.0);
        pos.x += uniform(rng, -60.0, 60.0);
        pos.y += uniform(rng, -60.0, 60.0);
    }
    const auto& dest = stations.stations()[uniform_index(rng, stations.size())];
    t.truth = GroundTruth{dest.id, static_cast<Timestamp>(time) + static_cast<Timestamp>(uniform(rng, 0.0, 300.0))};
    return t;
}

Outcome ridge_oracle() {
    auto rng = keyed_engine(104);
    double worst_reg = 0.0, worst_esn = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto d = static_cast<Eigen::Index>(1 + uniform_index(rng, 9));  // plus the bias column: <= 10
        const auto n = static_cast<Eigen::Index>(d + 2 + uniform_index(rng, static_cast<std::size_t>(49 - d)));
        Matrix X(n, d);
        Vector y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) X(i, j) = uniform(rng, -3.0, 3.0);
            y(i) = uniform(rng, -100.0, 100.0);
        }
        const double lambda = trial % 5 == 0 ? 0.0 : std::pow(10.0, uniform(rng, -4.0, 2.0));
        const auto model = train_regressor(X, y, lambda);
        Matrix A(n, d + 1);
        A << X, Vector::Ones(n);
        Vector p = Vector::Constant(d + 1, lambda);
        p(d) = 0.0;
        Vector theta(d + 1);
        theta << model.weights, model.bias;
        worst_reg = std::max(worst_reg, normal_residual(A, y, p, theta));
    }
    const StationMap stations({{"A", {0.0, 0.0}, 10}, {"B", {800.0, 500.0}, 10}});
    for (int trial = 0; trial < 50; ++trial) {
        ReservoirConfig config;
        config.n_reservoir = 1 + uniform_index(rng, 2);  // extended dim = n + 7 + 1 <= 10
        config.connectivity = 1.0;
        config.ridge_lambda = std::pow(10.0, uniform(rng, -6.0, 0.0));
        config.seed = 1000 + static_cast<std::uint64_t>(trial);
        std::vector<GpsTrajectory> walks;
        std::size_t rows = 0;
        while (true) {
            const std::size_t len = 2 + uniform_index(rng, 10);
            if (rows + len > 50) break;
            walks.push_back(random_walk(rng, stations, len, "w" + std::to_string(walks.size())));
            rows += len;
        }
        const auto model = train_esn(init_reservoir(config, stations), walks);
        const auto problem = collect_readout_problem(model, walks);
        const Vector p = Vector::Constant(problem.states.cols(), config.ridge_lambda);
        worst_esn = std::max(worst_esn, normal_residual(problem.states, problem.targets, p, model.readout.transpose()));
    }
    return {worst_reg < 1e-8 && worst_esn < 1e-8,
            "max residual regressor " + num(worst_reg) + ", ESN readout " + num(worst_esn) + " over 100 systems"};
}

/// Mean NLL + (l2 / 2) ||W||^2, written out directly.
double logistic_loss_oracle(const Matrix& W, const Vector& b, const Matrix& X, const std::vector<std::size_t>& y,
                            double l2) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const Vector z = W * X.row(i).transpose() + b;
        const double m = z.maxCoeff();
        double s = 0.0;
        for (Eigen::Index k = 0; k < z.size(); ++k) s += std::exp(z(k) - m);
        total += m + std::log(s) - z(static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)]));
    }
    return total / static_cast<double>(X.rows()) + 0.5 * l2 * W.squaredNorm();
}

Outcome gradient_check() {
    auto rng = keyed_engine(105);
    double worst = 0.0, worst_loss = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto d = static_cast<Eigen::Index>(1 + uniform_index(rng, 8));
        const auto K = static_cast<Eigen::Index>(2 + uniform_index(rng, 3));
        const auto n = static_cast<Eigen::Index>(1 + uniform_index(rng, 30));
        Matrix X(n, d);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < d; ++j) X(i, j) = uniform(rng, -2.0, 2.0);
        std::vector<std::size_t> y(static_cast<std::size_t>(n));
        for (auto& l : y) l = uniform_index(rng, static_cast<std::size_t>(K));
        LogisticParams params;
        params.weights = Matrix(K, d);
        params.bias = Vector(K);
        for (Eigen::Index k = 0; k < K; ++k) {
            params.bias(k) = uniform(rng, -1.0, 1.0);
            for (Eigen::Index j = 0; j < d; ++j) params.weights(k, j) = uniform(rng, -1.0, 1.0);
        }
        const double l2 = trial % 2 ? uniform(rng, 0.0, 0.5) : 0.0;
        const auto analytic = logistic_loss_gradient(params, X, y, l2);
        worst_loss = std::max(worst_loss, std::abs(analytic.loss - logistic_loss_oracle(params.weights, params.bias, X, y, l2)));

        const double h = 1e-5;
        Matrix fd_w(K, d);
        Vector fd_b(K);
        for (Eigen::Index k = 0; k < K; ++k) {
            for (Eigen::Index j = 0; j < d; ++j) {
                Matrix up = params.weights, down = params.weights;
                up(k, j) += h;
                down(k, j) -= h;
                fd_w(k, j) = (logistic_loss_oracle(up, params.bias, X, y, l2) -
                              logistic_loss_oracle(down, params.bias, X, y, l2)) / (2 * h);
            }
            Vector up = params.bias, down = params.bias;
            up(k) += h;
            down(k) -= h;
            fd_b(k) = (logistic_loss_oracle(params.weights, up, X, y, l2) -
                       logistic_loss_oracle(params.weights, down, X, y, l2)) / (2 * h);
        }
        const double diff = std::sqrt((analytic.grad_weights - fd_w).squaredNorm() + (analytic.grad_bias - fd_b).squaredNorm());
        const double scale = std::max({std::sqrt(fd_w.squaredNorm() + fd_b.squaredNorm()),
                                       std::sqrt(analytic.grad_weights.squaredNorm() + analytic.grad_bias.squaredNorm()),
                                       1e-12});
        worst = std::max(worst, diff / scale);
    }
    return {worst <= 1e-5 && worst_loss <= 1e-10,
            "max relative gradient error " + num(worst) + ", max loss difference " + num(worst_loss)};
}

Outcome userprofile_learnability() {
    const auto dir = scratch_dir("userprofile");
    std::map<std::string, std::pair<double, double>> results;
    for (const std::string habit : {"1.0", "0.9"}) {
        const auto data = (dir / ("data" + habit)).string();
        const auto run = (dir / ("run" + habit)).string();
        if (cli({"datagen", "--seed", "7", "--stations", "10", "--users", "20", "--trips-per-user", "100",
                 "--habit-strength", habit, "--gps-noise", "0", "--duration-noise", "0", "--out", data}) != 0 ||
            cli({"train", "userprofile", "--data", data + "/trips.csv", "--stations", data + "/stations.json", "--out",
                 run}) != 0)
            return {false, "command failed for habit strength " + habit};
        const auto report = report_from_json(nlohmann::json::parse(read_file(run + "/report.json")));
        results[habit] = {report.final_test.accuracy.value_or(-1.0), report.final_test.mae_seconds.value_or(1e300)};
    }
    const auto [acc1, mae1] = results["1.0"];
    const auto [acc09, mae09] = results["0.9"];
    (void)mae09;
    return {acc1 == 1.0 && mae1 < 60.0 && acc09 >= 0.85,
            "habit 1.0: accuracy " + num(acc1) + ", MAE " + num(mae1) + " s; habit 0.9: accuracy " + num(acc09)};
}

Outcome locationpreview_learnability() {
    ForkScenarioConfig config;
    config.gps_noise_std = 20.0;
    config.seed = 1;
    config.n_trajectories = 100;
    const auto train = generate_fork_scenario(config);
    config.seed = 2;
    config.n_trajectories = 200;
    const auto test = generate_fork_scenario(config);

    ReservoirConfig rc;
    rc.seed = 3;
    const auto esn = train_esn(init_reservoir(rc, train.stations), train.trajectories);
    ClassifierHyperparameters nb, lr;
    lr.kind = ClassifierKind::LogisticRegression;
    const auto base_nb = sliding_window_baseline(train.trajectories, train.stations, 1, nb);
    const auto base_lr = sliding_window_baseline(train.trajectories, train.stations, 1, lr);

    auto accuracy = [&](auto&& predict) {
        int hits = 0;
        for (const auto& t : test.trajectories) hits += predict(t) == t.truth->destination;
        return hits / static_cast<double>(test.trajectories.size());
    };
    const double esn08 = accuracy([&](const GpsTrajectory& t) { return predict_from_prefix(esn, t, 0.8).station; });
    const double esn02 = accuracy([&](const GpsTrajectory& t) { return predict_from_prefix(esn, t, 0.2).station; });
    const double nb08 = accuracy([&](const GpsTrajectory& t) { return predict_window(base_nb, observed_prefix(t, 0.8)).station; });
    const double lr08 = accuracy([&](const GpsTrajectory& t) { return predict_window(base_lr, observed_prefix(t, 0.8)).station; });
    const double baseline = std::max(nb08, lr08);
    return {esn08 >= 0.95 && esn08 >= esn02 && esn08 > baseline,
            "ESN at 0.8 " + num(esn08) + ", at 0.2 " + num(esn02) + "; window baseline at 0.8 " + num(baseline) +
                " (naive Bayes " + num(nb08) + ", logistic " + num(lr08) + ")"};
}

Outcome echo_state_property() {
    const StationMap stations({{"A", {0.0, 0.0}, 10}, {"B", {1000.0, 0.0}, 10}, {"C", {0.0, 1000.0}, 10}});
    double worst_radius = 0.0, worst_distance = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ReservoirConfig config;
        config.seed = seed;
        const auto model = init_reservoir(config, stations);
        const Matrix dense = Matrix(model.recurrent);
        const Eigen::EigenSolver<Matrix> solver(dense, false);
        const double radius = solver.eigenvalues().cwiseAbs().maxCoeff();
        worst_radius = std::max(worst_radius, std::abs(radius - config.spectral_radius));

        auto rng = keyed_engine(108, seed);
        const auto n = static_cast<Eigen::Index>(config.n_reservoir);
        Vector a(n), b(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            a(i) = uniform(rng, -1.0, 1.0);
            b(i) = uniform(rng, -1.0, 1.0);
        }
        for (int step = 0; step < 200; ++step) {
            Vector u(static_cast<Eigen::Index>(model.input_dim));
            for (Eigen::Index j = 0; j < u.size(); ++j) u(j) = uniform(rng, -1.0, 1.0);
            a = reservoir_step(model, a, u);
            b = reservoir_step(model, b, u);
        }
        worst_distance = std::max(worst_distance, (a - b).norm());
    }
    return {worst_radius <= 1e-6 && worst_distance < 1e-6,
            "max |rho - 0.9| " + num(worst_radius) + ", max state distance after 200 steps " + num(worst_distance)};
}

Outcome state_machine_conservation() {
    std::vector<Station> list;
    for (int i = 0; i < 6; ++i) list.push_back({"s" + std::to_string(i), {100.0 * i, 0.0}, 2 + i});
    const StationMap stations(list);
    auto rng = keyed_engine(109);

    // Oracle: where every bike is, and the docked count per station.
    std::map<BikeId, std::string> where;  // station id, or "" while in use
    std::map<StationId, int> count;
    for (const auto& s : list) count[s.id] = 0;
    auto state = SystemState::empty(stations);
    int applied = 0, rejected = 0;
    std::string failure;

    for (int step = 0; step < 10000 && failure.empty(); ++step) {
        const auto& station = list[uniform_index(rng, list.size())];
        const Timestamp t = step;
        const double r = uniform01(rng);
        BikeEvent event;
        std::string bike;
        if (r < 0.1 || where.empty()) {
            bike = "b" + std::to_string(uniform_index(rng, 40));
            event = DeployEvent{bike, station.id, t};
        } else {
            auto it = where.begin();
            std::advance(it, static_cast<long>(uniform_index(rng, where.size())));
            bike = uniform01(rng) < 0.05 ? "ghost" : it->first;
            if (r < 0.55)
                event = PickupEvent{bike, "u", uniform01(rng) < 0.7 && where.count(bike) && !where[bike].empty() ? where[bike] : station.id, t};
            else
                event = ReturnEvent{bike, station.id, t};
        }
        // Expected outcome.
        bool valid = false;
        const bool known = where.count(bike) != 0;
        const int cap = station.capacity;
        if (std::holds_alternative<DeployEvent>(event)) {
            valid = !known && count[station.id] < cap;
        } else if (const auto* p = std::get_if<PickupEvent>(&event)) {
            valid = known && where[bike] == p->station;
        } else {
            valid = known && where[bike].empty() && count[station.id] < cap;
        }
        const auto before = state;
        bool ok = true;
        try {
            apply_event_in_place(state, stations, event);
        } catch (const Error&) {
            ok = false;
        }
        if (ok != valid) {
            failure = "event " + std::to_string(step) + (ok ? " accepted but invalid" : " rejected but valid");
            break;
        }
        if (!ok) {
            ++rejected;
            if (!(state == before)) failure = "rejected event mutated the state";
            continue;
        }
        ++applied;
        if (std::holds_alternative<DeployEvent>(event)) {
            where[bike] = station.id;
            ++count[station.id];
        } else if (const auto* p = std::get_if<PickupEvent>(&event)) {
            --count[p->station];
            where[bike] = "";
        } else {
            where[bike] = station.id;
            ++count[station.id];
        }
        if (auto violation = check_invariants(state, stations)) failure = "invariant: " + *violation;
        if (all_bikes_now(state) != count) failure = "all_bikes_now differs from replay after event " + std::to_string(step);
        int docked = 0, in_use = 0;
        for (const auto& [b, w] : where) (w.empty() ? in_use : docked)++;
        if (state.total_bikes() != where.size() || static_cast<int>(state.in_transit.size()) != in_use)
            failure = "bike count not conserved";
        (void)docked;
    }
    return {failure.empty(), failure.empty() ? "10000 events (" + std::to_string(applied) + " applied, " +
                                                   std::to_string(rejected) + " rejected), counts match replay"
                                             : failure};
}

Outcome product_line() {
    const auto model = status_feature_model(5.0, 20.0, 12.0);
    const auto products = enumerate_products(model);
    bool all_abn = true;
    for (const auto& p : products)
        all_abn = all_abn && std::count(p.selected_features.begin(), p.selected_features.end(), kAllBikesNow) == 1;

    auto rng = keyed_engine(110);
    int orders = 0;
    bool invariant = true;
    for (int trial = 0; trial < 100; ++trial) {
        std::map<std::string, EvaluationReport> reports;
        for (const char* name : {kLocationPreview, kUserProfile}) {
            EvaluationReport r;
            r.id = std::string("rep-") + name;
            r.final_test.accuracy = uniform01(rng);
            r.final_test.mae_seconds = uniform(rng, 0.0, 900.0);
            reports[name] = r;
        }
        const auto attributed = attach_measurements(model, reports);
        TradeoffWeights w{uniform01(rng), uniform01(rng), uniform01(rng), 1800.0};
        const auto reference = rank_products(enumerate_products(attributed), w);
        for (double c : {1e-3, 0.5, 3.0, 1e4}) {
            TradeoffWeights scaled{w.accuracy * c, w.mae * c, w.cost * c, w.mae_horizon_s};
            const auto ranked = rank_products(enumerate_products(attributed), scaled);
            ++orders;
            for (std::size_t i = 0; i < ranked.size(); ++i)
                invariant = invariant && ranked[i].selected_features == reference[i].selected_features;
        }
    }
    return {products.size() == 4 && all_abn && invariant,
            std::to_string(products.size()) + " products, AllBikesNow in all: " + (all_abn ? "yes" : "no") + ", " +
                std::to_string(orders) + " rescaled rankings " + (invariant ? "identical" : "differ")};
}

/// Every file under `dir` plus the captured standard output.
std::map<std::string, std::string> snapshot(const fs::path& dir, const std::string& stdout_text) {
    std::map<std::string, std::string> files{{"<stdout>", stdout_text}};
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) files[fs::relative(entry.path(), dir).string()] = read_file(entry.path().string());
    return files;
}

Outcome determinism() {
    const auto dir = scratch_dir("determinism");
    const auto d = [&](const std::string& rel) { return (dir / rel).string(); };
    const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
        {"datagen habits", {"datagen", "--seed", "11", "--stations", "5", "--users", "3", "--trips-per-user", "40",
                            "--gps-noise", "5", "--out", d("habits")}},
        {"datagen fork", {"datagen", "--scenario", "fork", "--seed", "12", "--trajectories", "40", "--gps-noise", "20",
                          "--out", d("fork")}},
        {"train userprofile", {"train", "userprofile", "--data", d("habits/trips.csv"), "--stations",
                               d("habits/stations.json"), "--k", "3", "--seed", "5", "--out", d("up")}},
        {"train locationpreview", {"train", "locationpreview", "--data", d("fork/trajectories.jsonl"), "--stations",
                                   d("fork/stations.json"), "--k", "3", "--seed", "5", "--out", d("lp")}},
        {"predict userprofile", {"predict", "userprofile", "--model", d("up/model.json"), "--user", "u1", "--station",
                                 "s02", "--time", "1704110000", "--manifest", d("pred_up.manifest.json")}},
        {"predict locationpreview", {"predict", "locationpreview", "--model", d("lp/model.json"), "--trajectory",
                                     d("fork/trajectories.jsonl"), "--fraction", "0.6", "--out", d("pred_lp.json"),
                                     "--manifest", d("pred_lp.manifest.json")}},
        {"status", {"status", "--events", d("habits/events.csv"), "--stations", d("habits/stations.json"), "--json",
                    d("status.json"), "--manifest", d("status.manifest.json")}},
        {"rank", {"rank", "--report", "UserProfile=" + d("up/report.json"), "--report",
                  "LocationPreview=" + d("lp/report.json"), "--out", d("rank.json"), "--manifest", d("rank.manifest.json")}},
        {"report", {"report", d("up/report.json"), "--manifest", d("report.manifest.json")}},
    };
    std::string failure;
    for (const auto& [name, args] : commands) {
        std::string first_out, second_out;
        if (cli(args, &first_out) != 0) {
            failure = name + " failed";
            break;
        }
        const auto first = snapshot(dir, first_out);
        if (cli(args, &second_out) != 0) {
            failure = name + " failed on the second run";
            break;
        }
        const auto second = snapshot(dir, second_out);
        if (first != second) {
            for (const auto& [file, bytes] : second)
                if (!first.count(file) || first.at(file) != bytes) failure = name + " changed " + file;
            break;
        }
    }
    return {failure.empty(), failure.empty() ? std::to_string(commands.size()) + " commands byte-identical on rerun"
                                             : failure};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"softmax normalization", softmax_suite},
        {"metric oracles", metric_oracles},
        {"fold-plan exactness", fold_plans},
        {"ridge normal equations", ridge_oracle},
        {"logistic gradient check", gradient_check},
        {"UserProfile learnability", userprofile_learnability},
        {"LocationPreview learnability", locationpreview_learnability},
        {"echo-state property", echo_state_property},
        {"state-machine conservation", state_machine_conservation},
        {"product line", product_line},
        {"CLI determinism", determinism},
    };
    const double limits[] = {1.0, 1.0, 5.0, 5.0, 0.0, 60.0, 120.0, 0.0, 0.0, 0.0, 0.0};  // 0 = no time limit
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& [name, run] = criteria[i];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("threw ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (limits[i] > 0.0 && seconds >= limits[i]) {
            outcome.pass = false;
            outcome.detail += "; over the " + num(limits[i]) + " s limit";
        }
        failed += !outcome.pass;
        std::cout << (outcome.pass ? "PASS" : "FAIL") << "  " << i + 1 << ". " << name << ": " << outcome.detail << " ("
                  << std::fixed << std::setprecision(2) << seconds << " s)" << std::defaultfloat << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
