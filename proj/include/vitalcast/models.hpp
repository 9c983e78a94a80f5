#pragma once

// Forecasting baselines and a compact gradient-trainable predictor.
//
// Model kinds:
//   persistence — next value equals the current value
//   linear_ar   — least-squares autoregression over a lag window
//   ridge_ar    — the same with an L2 penalty on the weights
//   gradient_net— one tanh hidden layer plus a direct linear path, trained
//                 by gradient descent; with hidden width 0 it collapses to
//                 the linear model exactly
//
// Parameters serialize to a versioned flat key-value file so a trained
// model can be reused across evaluate runs.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vitalcast/format.hpp"
#include "vitalcast/rng.hpp"

namespace vitalcast {

struct SingularSystem : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StaleCache : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input for one prediction: the k most recent target values (oldest first),
// optional auxiliary-signal lags, optional static features.
struct FeatureWindow {
    std::vector<double> target_lags;
    std::vector<double> aux_values;
    std::vector<double> statics;

    std::vector<double> features() const {
        std::vector<double> out;
        out.reserve(target_lags.size() + aux_values.size() + statics.size());
        out.insert(out.end(), target_lags.begin(), target_lags.end());
        out.insert(out.end(), aux_values.begin(), aux_values.end());
        out.insert(out.end(), statics.begin(), statics.end());
        return out;
    }
};

enum class ModelKind { persistence, linear_ar, ridge_ar, gradient_net };

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::persistence: return "persistence";
        case ModelKind::linear_ar: return "linear_ar";
        case ModelKind::ridge_ar: return "ridge_ar";
        case ModelKind::gradient_net: return "gradient_net";
    }
    return "unknown";
}

inline std::optional<ModelKind> model_kind_from_string(const std::string& s) {
    if (s == "persistence") return ModelKind::persistence;
    if (s == "linear_ar") return ModelKind::linear_ar;
    if (s == "ridge_ar") return ModelKind::ridge_ar;
    if (s == "gradient_net") return ModelKind::gradient_net;
    return std::nullopt;
}

struct ModelParams {
    ModelKind kind = ModelKind::persistence;
    std::string model_id = "model";
    std::size_t input_dim = 0;
    double ridge_strength = 0.0;

    // linear_ar / ridge_ar
    std::vector<double> linear_weights;
    double bias = 0.0;

    // gradient_net: y = b_out + w_skip.x + w_out.tanh(W_h x + b_h)
    std::size_t hidden_width = 0;
    std::vector<double> w_hidden;  // hidden_width x input_dim, row-major
    std::vector<double> b_hidden;
    std::vector<double> w_output;
    std::vector<double> w_skip;
    double b_output = 0.0;

    // Optional per-feature standardization applied inside the net forward.
    std::vector<double> feature_mean;
    std::vector<double> feature_scale;

    std::int64_t epochs_trained = 0;
};

inline double persistence_predict(const FeatureWindow& window) {
    if (window.target_lags.empty())
        throw std::invalid_argument("persistence needs at least one target lag");
    return window.target_lags.back();
}

namespace detail {

// Solves A x = b in place by Gaussian elimination with partial pivoting.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-12)
            throw SingularSystem("normal equations are numerically singular");
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ri = n; ri-- > 0;) {
        double acc = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) acc -= a[ri][c] * x[c];
        x[ri] = acc / a[ri][ri];
    }
    return x;
}

}  // namespace detail

// Least squares with an optional ridge penalty on the weights (bias
// unpenalized), via the normal equations.
inline ModelParams fit_linear_ar(const std::vector<std::vector<double>>& features,
                                 const std::vector<double>& targets, double ridge_strength,
                                 std::string model_id = "linear_ar") {
    if (features.size() != targets.size())
        throw DimensionMismatch("feature/target count mismatch");
    if (features.empty()) throw std::invalid_argument("empty training set");
    if (ridge_strength < 0.0) throw std::invalid_argument("ridge_strength must be >= 0");
    const std::size_t d = features.front().size();
    if (features.size() < d + 1)
        throw std::invalid_argument("need at least feature_dim + 1 examples");
    const std::size_t p = d + 1;  // bias column appended last

    std::vector<std::vector<double>> ata(p, std::vector<double>(p, 0.0));
    std::vector<double> atb(p, 0.0);
    for (std::size_t r = 0; r < features.size(); ++r) {
        const auto& x = features[r];
        if (x.size() != d) throw DimensionMismatch("ragged feature row");
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i; j < d; ++j) ata[i][j] += x[i] * x[j];
            ata[i][d] += x[i];
            atb[i] += x[i] * targets[r];
        }
        atb[d] += targets[r];
    }
    ata[d][d] = static_cast<double>(features.size());
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < i; ++j) ata[i][j] = ata[j][i];
    for (std::size_t i = 0; i < d; ++i) ata[i][i] += ridge_strength;

    const auto sol = detail::solve_dense(std::move(ata), std::move(atb));
    ModelParams params;
    params.kind = ridge_strength > 0.0 ? ModelKind::ridge_ar : ModelKind::linear_ar;
    params.model_id = std::move(model_id);
    params.input_dim = d;
    params.ridge_strength = ridge_strength;
    params.linear_weights.assign(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(d));
    params.bias = sol[d];
    return params;
}

inline double linear_predict(const ModelParams& params, std::span<const double> features) {
    if (features.size() != params.input_dim) throw DimensionMismatch("feature dimension mismatch");
    double acc = params.bias;
    for (std::size_t i = 0; i < features.size(); ++i) acc += params.linear_weights[i] * features[i];
    return acc;
}

// Intermediates of one net forward pass, consumed by the backward pass.
struct ForwardCache {
    std::vector<double> x;       // standardized input
    std::vector<double> hidden;  // tanh activations
    std::size_t input_dim = 0;
    std::size_t hidden_width = 0;
};

// Accumulates parameter gradients across a minibatch.
struct NetGradient {
    std::vector<double> w_hidden;
    std::vector<double> b_hidden;
    std::vector<double> w_output;
    std::vector<double> w_skip;
    double b_output = 0.0;

    explicit NetGradient(const ModelParams& params)
        : w_hidden(params.w_hidden.size(), 0.0),
          b_hidden(params.b_hidden.size(), 0.0),
          w_output(params.w_output.size(), 0.0),
          w_skip(params.w_skip.size(), 0.0) {}

    void scale(double f) {
        for (auto& v : w_hidden) v *= f;
        for (auto& v : b_hidden) v *= f;
        for (auto& v : w_output) v *= f;
        for (auto& v : w_skip) v *= f;
        b_output *= f;
    }
};

// Deterministic small-uniform initialization scaled by fan-in.
inline ModelParams init_gradient_net(std::size_t input_dim, std::size_t hidden_width,
                                     std::uint64_t seed, std::string model_id = "gradient_net") {
    ModelParams p;
    p.kind = ModelKind::gradient_net;
    p.model_id = std::move(model_id);
    p.input_dim = input_dim;
    p.hidden_width = hidden_width;
    rng::Stream rng(seed, 0, rng::kSaltInit);
    const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim > 0 ? input_dim : 1));
    p.w_hidden.resize(hidden_width * input_dim);
    for (auto& w : p.w_hidden) w = rng.uniform(-bound, bound);
    p.b_hidden.assign(hidden_width, 0.0);
    p.w_output.resize(hidden_width);
    for (auto& w : p.w_output) w = rng.uniform(-bound, bound);
    p.w_skip.resize(input_dim);
    for (auto& w : p.w_skip) w = rng.uniform(-bound, bound);
    p.b_output = 0.0;
    p.feature_mean.assign(input_dim, 0.0);
    p.feature_scale.assign(input_dim, 1.0);
    return p;
}

inline double gradient_net_forward(const ModelParams& params, std::span<const double> features,
                                   ForwardCache* cache = nullptr) {
    if (params.kind != ModelKind::gradient_net)
        throw std::invalid_argument("gradient_net_forward on non-net params");
    if (features.size() != params.input_dim) throw DimensionMismatch("feature dimension mismatch");
    const std::size_t d = params.input_dim;
    const std::size_t h = params.hidden_width;

    std::vector<double> x(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double mean = i < params.feature_mean.size() ? params.feature_mean[i] : 0.0;
        const double scale = i < params.feature_scale.size() ? params.feature_scale[i] : 1.0;
        x[i] = (features[i] - mean) / scale;
    }

    std::vector<double> hidden(h);
    for (std::size_t u = 0; u < h; ++u) {
        double z = params.b_hidden[u];
        const double* row = params.w_hidden.data() + u * d;
        for (std::size_t i = 0; i < d; ++i) z += row[i] * x[i];
        hidden[u] = std::tanh(z);
    }

    double y = params.b_output;
    for (std::size_t i = 0; i < d; ++i) y += params.w_skip[i] * x[i];
    for (std::size_t u = 0; u < h; ++u) y += params.w_output[u] * hidden[u];

    if (cache) {
        cache->x = std::move(x);
        cache->hidden = std::move(hidden);
        cache->input_dim = d;
        cache->hidden_width = h;
    }
    return y;
}

// Exact gradients of the scalar prediction path, scaled by
// dloss_dprediction and accumulated into grad.
inline void gradient_net_backward(const ModelParams& params, const ForwardCache& cache,
                                  double dloss_dprediction, NetGradient& grad) {
    if (cache.input_dim != params.input_dim || cache.hidden_width != params.hidden_width)
        throw StaleCache("forward cache does not match model dimensions");
    const std::size_t d = params.input_dim;
    const std::size_t h = params.hidden_width;

    grad.b_output += dloss_dprediction;
    for (std::size_t i = 0; i < d; ++i) grad.w_skip[i] += dloss_dprediction * cache.x[i];
    for (std::size_t u = 0; u < h; ++u) {
        const double a = cache.hidden[u];
        grad.w_output[u] += dloss_dprediction * a;
        const double dz = dloss_dprediction * params.w_output[u] * (1.0 - a * a);
        grad.b_hidden[u] += dz;
        double* row = grad.w_hidden.data() + u * d;
        for (std::size_t i = 0; i < d; ++i) row[i] += dz * cache.x[i];
    }
}

inline void apply_gradient_step(ModelParams& params, const NetGradient& grad, double learning_rate) {
    for (std::size_t i = 0; i < params.w_hidden.size(); ++i)
        params.w_hidden[i] -= learning_rate * grad.w_hidden[i];
    for (std::size_t i = 0; i < params.b_hidden.size(); ++i)
        params.b_hidden[i] -= learning_rate * grad.b_hidden[i];
    for (std::size_t i = 0; i < params.w_output.size(); ++i)
        params.w_output[i] -= learning_rate * grad.w_output[i];
    for (std::size_t i = 0; i < params.w_skip.size(); ++i)
        params.w_skip[i] -= learning_rate * grad.w_skip[i];
    params.b_output -= learning_rate * grad.b_output;
}

inline double predict(const ModelParams& params, const FeatureWindow& window) {
    switch (params.kind) {
        case ModelKind::persistence: return persistence_predict(window);
        case ModelKind::linear_ar:
        case ModelKind::ridge_ar: return linear_predict(params, window.features());
        case ModelKind::gradient_net: return gradient_net_forward(params, window.features());
    }
    throw std::logic_error("unknown model kind");
}

// ---- flat key-value serialization -------------------------------------

namespace detail {

inline void write_vector(std::ostream& os, const std::string& key, const std::vector<double>& v) {
    os << key << ".size=" << v.size() << "\n";
    for (std::size_t i = 0; i < v.size(); ++i)
        os << key << "." << i << "=" << format_double(v[i]) << "\n";
}

}  // namespace detail

inline void save_model(const ModelParams& params, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open model file for writing: " + path);
    os << "format=vitalcast-model/1\n";
    os << "kind=" << to_string(params.kind) << "\n";
    os << "model_id=" << params.model_id << "\n";
    os << "input_dim=" << params.input_dim << "\n";
    os << "hidden_width=" << params.hidden_width << "\n";
    os << "ridge_strength=" << detail::format_double(params.ridge_strength) << "\n";
    os << "bias=" << detail::format_double(params.bias) << "\n";
    os << "b_output=" << detail::format_double(params.b_output) << "\n";
    os << "epochs_trained=" << params.epochs_trained << "\n";
    detail::write_vector(os, "linear_weights", params.linear_weights);
    detail::write_vector(os, "w_hidden", params.w_hidden);
    detail::write_vector(os, "b_hidden", params.b_hidden);
    detail::write_vector(os, "w_output", params.w_output);
    detail::write_vector(os, "w_skip", params.w_skip);
    detail::write_vector(os, "feature_mean", params.feature_mean);
    detail::write_vector(os, "feature_scale", params.feature_scale);
    if (!os) throw std::runtime_error("failed writing model file: " + path);
}

inline ModelParams load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open model file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("malformed model file line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto need = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw std::runtime_error("model file missing key: " + key);
        return it->second;
    };
    if (need("format") != "vitalcast-model/1")
        throw std::runtime_error("unsupported model file format: " + need("format"));

    ModelParams p;
    const auto kind = model_kind_from_string(need("kind"));
    if (!kind) throw std::runtime_error("unknown model kind: " + need("kind"));
    p.kind = *kind;
    p.model_id = need("model_id");
    p.input_dim = std::stoull(need("input_dim"));
    p.hidden_width = std::stoull(need("hidden_width"));
    p.ridge_strength = detail::parse_double(need("ridge_strength"), "ridge_strength");
    p.bias = detail::parse_double(need("bias"), "bias");
    p.b_output = detail::parse_double(need("b_output"), "b_output");
    p.epochs_trained = std::stoll(need("epochs_trained"));
    auto read_vector = [&](const std::string& key, std::vector<double>& out) {
        const std::size_t n = std::stoull(need(key + ".size"));
        out.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            out[i] = detail::parse_double(need(key + "." + std::to_string(i)), key);
    };
    read_vector("linear_weights", p.linear_weights);
    read_vector("w_hidden", p.w_hidden);
    read_vector("b_hidden", p.b_hidden);
    read_vector("w_output", p.w_output);
    read_vector("w_skip", p.w_skip);
    read_vector("feature_mean", p.feature_mean);
    read_vector("feature_scale", p.feature_scale);
    return p;
}

}  // namespace vitalcast
