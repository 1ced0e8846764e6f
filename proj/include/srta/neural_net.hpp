#pragma once
// Fully connected feed-forward network trained with the generalized delta
// rule.
//
// For the per-sample loss L = sum((y_out - t)^2) / 2 with sigmoid units:
//
//   output error   d_out = y_out (1 - y_out) (y_out - t)
//   hidden error   d_h   = y_h (1 - y_h) * (W_next^T d_next)
//   update         W    += -eta * d * x^T,   b += -eta * d
//
// which is the exact gradient of L. Hidden layers may use ReLU instead, in
// which case y(1 - y) is replaced by the ReLU derivative (1 if y > 0 else 0).
// The output layer is always sigmoid so outputs stay in (0, 1) and the
// output error above remains exact.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "srta/error.hpp"
#include "srta/rng.hpp"

namespace srta::nn {

enum class Activation { Sigmoid, Relu };

inline std::string_view to_string(Activation a) { return a == Activation::Sigmoid ? "sigmoid" : "relu"; }

inline Activation parse_activation(std::string_view s) {
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "relu") return Activation::Relu;
    fail(ErrorCode::Validation, "unknown activation '" + std::string(s) + "'");
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double activate(Activation a, double z) { return a == Activation::Sigmoid ? sigmoid(z) : std::max(0.0, z); }

// Derivative expressed through the unit's output y.
inline double derivative_from_output(Activation a, double y) {
    return a == Activation::Sigmoid ? y * (1.0 - y) : (y > 0.0 ? 1.0 : 0.0);
}

// Row-major dense matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

class Mlp {
public:
    Mlp() = default;

    // All weights and biases zero.
    explicit Mlp(std::vector<std::size_t> layer_sizes, Activation hidden = Activation::Sigmoid)
        : sizes_(std::move(layer_sizes)), activation_(hidden) {
        if (sizes_.size() < 2) fail(ErrorCode::Shape, "network needs at least an input and an output layer");
        for (auto s : sizes_)
            if (s == 0) fail(ErrorCode::Shape, "layer sizes must be positive");
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            weights_.emplace_back(sizes_[l + 1], sizes_[l]);
            biases_.emplace_back(sizes_[l + 1], 0.0);
        }
    }

    // Uniform in [-r, r], r = sqrt(6 / (fan_in + fan_out)); biases zero.
    static Mlp initialized(std::vector<std::size_t> layer_sizes, Activation hidden, std::uint64_t seed) {
        Mlp net(std::move(layer_sizes), hidden);
        Rng rng(derive_seed(seed, 0x696e6974ULL));
        for (auto& w : net.weights_) {
            const double r = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
            for (double& x : w.data) x = rng.uniform(-r, r);
        }
        return net;
    }

    const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
    std::size_t input_size() const { return sizes_.front(); }
    std::size_t output_size() const { return sizes_.back(); }
    std::size_t num_layers() const { return weights_.size(); }  // weight layers
    Activation activation() const { return activation_; }

    // Activation of weight layer l (hidden layers configurable, output sigmoid).
    Activation layer_activation(std::size_t l) const {
        return l + 1 == weights_.size() ? Activation::Sigmoid : activation_;
    }

    std::vector<Matrix>& weights() { return weights_; }
    const std::vector<Matrix>& weights() const { return weights_; }
    std::vector<std::vector<double>>& biases() { return biases_; }
    const std::vector<std::vector<double>>& biases() const { return biases_; }

    friend bool operator==(const Mlp&, const Mlp&) = default;

private:
    std::vector<std::size_t> sizes_;
    Activation activation_ = Activation::Sigmoid;
    std::vector<Matrix> weights_;               // weights_[l]: sizes_[l+1] x sizes_[l]
    std::vector<std::vector<double>> biases_;   // biases_[l]: sizes_[l+1]
};

struct ForwardPass {
    // activations[0] is the input; activations.back() the output.
    std::vector<std::vector<double>> activations;

    const std::vector<double>& output() const { return activations.back(); }
};

inline ForwardPass forward(const Mlp& net, std::span<const double> x) {
    if (x.size() != net.input_size())
        fail(ErrorCode::Shape, "input has " + std::to_string(x.size()) + " features, network expects " +
                                   std::to_string(net.input_size()));
    ForwardPass pass;
    pass.activations.reserve(net.num_layers() + 1);
    pass.activations.emplace_back(x.begin(), x.end());
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const Matrix& w = net.weights()[l];
        const auto& b = net.biases()[l];
        const auto& in = pass.activations.back();
        const Activation act = net.layer_activation(l);
        std::vector<double> out(w.rows);
        for (std::size_t r = 0; r < w.rows; ++r) {
            const double* row = &w.data[r * w.cols];
            double z = b[r];
            for (std::size_t c = 0; c < w.cols; ++c) z += row[c] * in[c];
            out[r] = activate(act, z);
        }
        pass.activations.push_back(std::move(out));
    }
    return pass;
}

inline std::vector<double> output_delta(std::span<const double> y0, std::span<const double> t) {
    if (y0.size() != t.size()) fail(ErrorCode::Shape, "output and target lengths differ");
    std::vector<double> d(y0.size());
    for (std::size_t i = 0; i < y0.size(); ++i) d[i] = y0[i] * (1.0 - y0[i]) * (y0[i] - t[i]);
    return d;
}

// downstream_weights has one row per downstream unit and one column per unit
// of this layer.
inline std::vector<double> hidden_delta(std::span<const double> y_h, std::span<const double> downstream_deltas,
                                        const Matrix& downstream_weights,
                                        Activation act = Activation::Sigmoid) {
    if (downstream_weights.rows != downstream_deltas.size() || downstream_weights.cols != y_h.size())
        fail(ErrorCode::Shape, "hidden delta: weight matrix does not match layer sizes");
    std::vector<double> d(y_h.size(), 0.0);
    for (std::size_t k = 0; k < downstream_deltas.size(); ++k) {
        const double dk = downstream_deltas[k];
        const double* row = &downstream_weights.data[k * downstream_weights.cols];
        for (std::size_t j = 0; j < y_h.size(); ++j) d[j] += dk * row[j];
    }
    for (std::size_t j = 0; j < y_h.size(); ++j) d[j] *= derivative_from_output(act, y_h[j]);
    return d;
}

// Error terms for every weight layer; deltas[l] has sizes[l+1] entries.
inline std::vector<std::vector<double>> backpropagate(const Mlp& net, const ForwardPass& pass,
                                                      std::span<const double> target) {
    if (target.size() != net.output_size()) fail(ErrorCode::Shape, "target length does not match output layer");
    std::vector<std::vector<double>> deltas(net.num_layers());
    deltas.back() = output_delta(pass.output(), target);
    for (std::size_t l = net.num_layers() - 1; l-- > 0;)
        deltas[l] = hidden_delta(pass.activations[l + 1], deltas[l + 1], net.weights()[l + 1],
                                 net.layer_activation(l));
    return deltas;
}

// w += -eta * delta * x for every synapse, with x = 1 for biases.
inline void update_weights(Mlp& net, const ForwardPass& pass, const std::vector<std::vector<double>>& deltas,
                           double learning_rate) {
    if (deltas.size() != net.num_layers()) fail(ErrorCode::Shape, "need one delta vector per layer");
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        Matrix& w = net.weights()[l];
        auto& b = net.biases()[l];
        const auto& x = pass.activations[l];
        const auto& d = deltas[l];
        if (d.size() != w.rows) fail(ErrorCode::Shape, "delta length does not match layer");
        for (std::size_t r = 0; r < w.rows; ++r) {
            const double step = -learning_rate * d[r];
            double* row = &w.data[r * w.cols];
            for (std::size_t c = 0; c < w.cols; ++c) row[c] += step * x[c];
            b[r] += step;
        }
    }
}

// One stochastic step on a single sample; returns the pre-update loss
// sum((y - t)^2) for that sample.
inline double sgd_step(Mlp& net, std::span<const double> x, std::span<const double> t, double learning_rate) {
    const ForwardPass pass = forward(net, x);
    double err = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) err += (pass.output()[i] - t[i]) * (pass.output()[i] - t[i]);
    update_weights(net, pass, backpropagate(net, pass, t), learning_rate);
    return err;
}

// Mean over samples of the summed squared component error.
inline double mse(const std::vector<std::vector<double>>& outputs, const std::vector<std::vector<double>>& targets) {
    if (outputs.empty()) fail(ErrorCode::Empty, "mse over an empty set");
    if (outputs.size() != targets.size()) fail(ErrorCode::Shape, "mse: output and target counts differ");
    double total = 0.0;
    for (std::size_t n = 0; n < outputs.size(); ++n) {
        if (outputs[n].size() != targets[n].size()) fail(ErrorCode::Shape, "mse: vector lengths differ");
        for (std::size_t i = 0; i < outputs[n].size(); ++i) {
            const double e = outputs[n][i] - targets[n][i];
            total += e * e;
        }
    }
    return total / static_cast<double>(outputs.size());
}

// ---------------------------------------------------------------- data

struct Dataset {
    std::vector<std::vector<double>> features;
    std::vector<std::vector<double>> targets;  // one-hot rows

    std::size_t size() const { return features.size(); }

    std::size_t label(std::size_t i) const {
        const auto& t = targets[i];
        return static_cast<std::size_t>(std::max_element(t.begin(), t.end()) - t.begin());
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline void require_valid(const Dataset& d) {
    if (d.features.size() != d.targets.size()) fail(ErrorCode::Shape, "dataset: feature and label counts differ");
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (double v : d.features[i])
            if (!(v >= -1.0 && v <= 1.0)) fail(ErrorCode::Validation, "dataset: feature outside [-1, 1] in row " + std::to_string(i));
        int ones = 0;
        for (double v : d.targets[i]) {
            if (v == 1.0) ++ones;
            else if (v != 0.0) ones = -100;
        }
        if (ones != 1) fail(ErrorCode::Validation, "dataset: label row " + std::to_string(i) + " is not one-hot");
    }
}

struct TrainConfig {
    double learning_rate = 0.05;
    int max_epochs = 500;
    int patience = 20;
    // Validation MSE must drop by more than this to count as an improvement.
    double min_delta = 1e-6;
    double train_fraction = 0.70;
    double val_fraction = 0.15;
    double test_fraction = 0.15;
    std::uint64_t seed = 1;
};

inline void require_valid(const TrainConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) fail(ErrorCode::Validation, "learning_rate must be positive");
    if (cfg.max_epochs < 0) fail(ErrorCode::Validation, "max_epochs must be non-negative");
    if (cfg.patience < 1) fail(ErrorCode::Validation, "patience must be at least 1");
    if (std::abs(cfg.train_fraction + cfg.val_fraction + cfg.test_fraction - 1.0) > 1e-9)
        fail(ErrorCode::Validation, "split fractions must sum to 1");
    if (std::abs(cfg.test_fraction - 0.15) > 1e-12) fail(ErrorCode::Validation, "test fraction is fixed at 0.15");
    if (cfg.train_fraction <= 0.0 || cfg.val_fraction <= 0.0)
        fail(ErrorCode::Validation, "train and validation fractions must be positive");
}

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;

    friend bool operator==(const Split&, const Split&) = default;
};

// Seeded shuffle of row indices cut into train/validation/test.
inline Split split_indices(std::size_t n, const TrainConfig& cfg) {
    require_valid(cfg);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(derive_seed(cfg.seed, 0x73706c6974ULL));
    rng.shuffle(idx.begin(), idx.end());
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg.train_fraction));
    const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg.val_fraction));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
        fail(ErrorCode::Empty, "insufficient data: " + std::to_string(n) + " rows cannot fill every split");
    Split s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                        idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
    return s;
}

inline double dataset_mse(const Mlp& net, const Dataset& data, const std::vector<std::size_t>& rows) {
    if (rows.empty()) fail(ErrorCode::Empty, "mse over an empty split");
    double total = 0.0;
    for (std::size_t i : rows) {
        const auto pass = forward(net, data.features[i]);
        for (std::size_t k = 0; k < pass.output().size(); ++k) {
            const double e = pass.output()[k] - data.targets[i][k];
            total += e * e;
        }
    }
    return total / static_cast<double>(rows.size());
}

enum class StopReason { MaxEpochs, EarlyStopping };

inline std::string_view to_string(StopReason r) { return r == StopReason::MaxEpochs ? "max-epochs" : "early-stopping"; }

struct EpochStats {
    int epoch = 0;          // 1-based
    double train_mse = 0.0; // accumulated over the epoch from pre-update outputs
    double val_mse = 0.0;   // after the epoch

    friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    double initial_val_mse = 0.0;
    double best_val_mse = 0.0;
    int best_epoch = 0;  // 0 means the initial weights were never beaten
    StopReason stop_reason = StopReason::MaxEpochs;
    Split split;
    Mlp net;  // weights with the best validation MSE

    friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

// Per-sample SGD in a freshly shuffled order each epoch. Stops after
// max_epochs or once validation MSE has failed to improve for `patience`
// consecutive epochs, and returns the best-validation weights.
inline TrainReport train(Mlp net, const Dataset& data, const TrainConfig& cfg) {
    require_valid(cfg);
    if (data.features.size() != data.targets.size()) fail(ErrorCode::Shape, "dataset: feature and label counts differ");
    TrainReport report;
    report.split = split_indices(data.size(), cfg);
    report.initial_val_mse = dataset_mse(net, data, report.split.validation);
    report.best_val_mse = report.initial_val_mse;
    report.net = net;

    Rng order_rng(derive_seed(cfg.seed, 0x6f72646572ULL));
    std::vector<std::size_t> order = report.split.train;
    int since_best = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        order_rng.shuffle(order.begin(), order.end());
        double train_err = 0.0;
        for (std::size_t i : order) train_err += sgd_step(net, data.features[i], data.targets[i], cfg.learning_rate);
        const double val = dataset_mse(net, data, report.split.validation);
        report.epochs.push_back({epoch, train_err / static_cast<double>(order.size()), val});
        if (val < report.best_val_mse - cfg.min_delta) {
            report.best_val_mse = val;
            report.best_epoch = epoch;
            report.net = net;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            report.stop_reason = StopReason::EarlyStopping;
            break;
        }
    }
    return report;
}

// ---------------------------------------------------------------- evaluation

struct Metrics {
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
    double accuracy = 0.0;
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<double> f1;
    double macro_precision = 0.0;
    double macro_f1 = 0.0;
};

// Precision or recall with an empty denominator is taken as 0, as is F1
// when both are 0.
inline Metrics metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion) {
    const std::size_t k = confusion.size();
    std::size_t total = 0, correct = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (confusion[i].size() != k) fail(ErrorCode::Shape, "confusion matrix must be square");
        for (std::size_t j = 0; j < k; ++j) total += confusion[i][j];
        correct += confusion[i][i];
    }
    if (total == 0) fail(ErrorCode::Empty, "metrics over an empty split");
    Metrics m;
    m.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    m.precision.assign(k, 0.0);
    m.recall.assign(k, 0.0);
    m.f1.assign(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t predicted = 0, actual = 0;
        for (std::size_t i = 0; i < k; ++i) {
            predicted += confusion[i][c];
            actual += confusion[c][i];
        }
        const double tp = static_cast<double>(confusion[c][c]);
        m.precision[c] = predicted ? tp / static_cast<double>(predicted) : 0.0;
        m.recall[c] = actual ? tp / static_cast<double>(actual) : 0.0;
        const double pr = m.precision[c] + m.recall[c];
        m.f1[c] = pr > 0.0 ? 2.0 * m.precision[c] * m.recall[c] / pr : 0.0;
        m.macro_precision += m.precision[c];
        m.macro_f1 += m.f1[c];
    }
    m.macro_precision /= static_cast<double>(k);
    m.macro_f1 /= static_cast<double>(k);
    m.confusion = std::move(confusion);
    return m;
}

inline std::size_t predict(const Mlp& net, std::span<const double> x) {
    const auto pass = forward(net, x);
    const auto& y = pass.output();
    return static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
}

inline Metrics evaluate(const Mlp& net, const Dataset& data, const std::vector<std::size_t>& rows) {
    if (rows.empty()) fail(ErrorCode::Empty, "evaluation split is empty");
    const std::size_t k = net.output_size();
    std::vector<std::vector<std::size_t>> confusion(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i : rows) ++confusion[data.label(i)][predict(net, data.features[i])];
    return metrics_from_confusion(std::move(confusion));
}

inline Metrics evaluate(const Mlp& net, const Dataset& data) {
    std::vector<std::size_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return evaluate(net, data, all);
}

// ---------------------------------------------------------------- checkpoint

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json checkpoint_to_json(const Mlp& net, std::uint64_t training_seed) {
    nlohmann::json w = nlohmann::json::array(), b = nlohmann::json::array();
    for (const auto& m : net.weights()) w.push_back(m.data);
    for (const auto& v : net.biases()) b.push_back(v);
    return {{"format", "srta-mlp"},
            {"version", kCheckpointVersion},
            {"layer_sizes", net.layer_sizes()},
            {"activation", to_string(net.activation())},
            {"output_activation", "sigmoid"},
            {"weights", w},
            {"biases", b},
            {"seed", training_seed}};
}

struct Checkpoint {
    Mlp net;
    std::uint64_t seed = 0;
};

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "srta-mlp") fail(ErrorCode::Parse, "not an srta-mlp checkpoint");
        if (j.at("version").get<int>() != kCheckpointVersion)
            fail(ErrorCode::Parse, "unsupported checkpoint version " + j.at("version").dump());
        Checkpoint cp;
        cp.net = Mlp(j.at("layer_sizes").get<std::vector<std::size_t>>(),
                     parse_activation(j.at("activation").get<std::string>()));
        const auto& w = j.at("weights");
        const auto& b = j.at("biases");
        if (w.size() != cp.net.num_layers() || b.size() != cp.net.num_layers())
            fail(ErrorCode::Shape, "checkpoint layer count does not match layer_sizes");
        for (std::size_t l = 0; l < cp.net.num_layers(); ++l) {
            auto wd = w[l].get<std::vector<double>>();
            auto bd = b[l].get<std::vector<double>>();
            if (wd.size() != cp.net.weights()[l].data.size() || bd.size() != cp.net.biases()[l].size())
                fail(ErrorCode::Shape, "checkpoint layer " + std::to_string(l) + " has the wrong shape");
            cp.net.weights()[l].data = std::move(wd);
            cp.net.biases()[l] = std::move(bd);
        }
        cp.seed = j.at("seed").get<std::uint64_t>();
        return cp;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Parse, std::string("checkpoint: ") + e.what());
    }
}

// ---------------------------------------------------------------- config file

// Training setup read from a key = value file ('#' starts a comment).
// Keys: learning_rate, max_epochs, patience, min_delta, train_fraction,
// val_fraction, test_fraction, seed, hidden (comma-separated sizes),
// activation (sigmoid | relu).
struct TrainSetup {
    TrainConfig train;
    std::vector<std::size_t> hidden{32, 32};
    Activation activation = Activation::Sigmoid;
};

inline TrainSetup parse_train_setup(std::istream& in) {
    TrainSetup setup;
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string{};
        return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "config line " + std::to_string(lineno);
        if (eq == std::string::npos) fail(ErrorCode::Parse, where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            auto& t = setup.train;
            if (key == "learning_rate") t.learning_rate = std::stod(value);
            else if (key == "max_epochs") t.max_epochs = std::stoi(value);
            else if (key == "patience") t.patience = std::stoi(value);
            else if (key == "min_delta") t.min_delta = std::stod(value);
            else if (key == "train_fraction") t.train_fraction = std::stod(value);
            else if (key == "val_fraction") t.val_fraction = std::stod(value);
            else if (key == "test_fraction") t.test_fraction = std::stod(value);
            else if (key == "seed") t.seed = std::stoull(value);
            else if (key == "activation") setup.activation = parse_activation(value);
            else if (key == "hidden") {
                setup.hidden.clear();
                std::stringstream ss(value);
                std::string part;
                while (std::getline(ss, part, ','))
                    if (!trim(part).empty()) setup.hidden.push_back(std::stoul(trim(part)));
            } else {
                fail(ErrorCode::Parse, where + ": unknown key '" + key + "'");
            }
        } catch (const std::logic_error&) {
            fail(ErrorCode::Parse, where + ": bad value '" + value + "' for " + key);
        }
    }
    require_valid(setup.train);
    return setup;
}

}  // namespace srta::nn
