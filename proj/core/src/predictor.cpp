#include "gridlearn/predictor.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace gridlearn {

namespace {
constexpr int kHiddenWidth = 25;
constexpr int kHiddenLayers = 3;
constexpr const char* kModelVersion = "gridlearn-model-v1";

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
}  // namespace

int head_output_dim(OutputHead head, int zone_count, int line_count) {
    switch (head) {
        case OutputHead::kLoadScalar: return 1;
        case OutputHead::kLoad24: return 24;
        case OutputHead::kLoadZones: return zone_count;
        case OutputHead::kImpedance20: return line_count;
    }
    throw ConfigError("unknown output head");
}

std::string head_name(OutputHead head) {
    switch (head) {
        case OutputHead::kLoadScalar: return "load-scalar";
        case OutputHead::kLoad24: return "load-24";
        case OutputHead::kLoadZones: return "load-zones";
        case OutputHead::kImpedance20: return "impedance-20";
    }
    throw ConfigError("unknown output head");
}

OutputHead head_from_name(const std::string& name) {
    if (name == "load-scalar") return OutputHead::kLoadScalar;
    if (name == "load-24") return OutputHead::kLoad24;
    if (name == "load-zones") return OutputHead::kLoadZones;
    if (name == "impedance-20") return OutputHead::kImpedance20;
    throw ConfigError("unknown output head name: " + name);
}

FeatureScaler FeatureScaler::fit(const std::vector<Eigen::VectorXd>& features) {
    if (features.empty()) throw DataError("cannot fit scaler on empty feature set");
    const int dim = static_cast<int>(features.front().size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const auto& f : features) mean += f;
    mean /= static_cast<double>(features.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
    for (const auto& f : features) var += (f - mean).cwiseAbs2();
    var /= static_cast<double>(features.size());

    FeatureScaler s;
    s.mean = mean;
    s.scale = var.cwiseSqrt();
    for (int i = 0; i < dim; ++i)
        if (s.scale[i] < 1e-12) s.scale[i] = 1.0;  // constant feature
    return s;
}

FeatureScaler FeatureScaler::identity(int dim) {
    FeatureScaler s;
    s.mean = Eigen::VectorXd::Zero(dim);
    s.scale = Eigen::VectorXd::Ones(dim);
    return s;
}

Eigen::VectorXd FeatureScaler::apply(const Eigen::VectorXd& raw) const {
    if (raw.size() != mean.size()) throw DataError("feature dimension mismatch in scaler");
    return (raw - mean).cwiseQuotient(scale);
}

Eigen::VectorXd FeatureScaler::invert(const Eigen::VectorXd& scaled) const {
    if (scaled.size() != mean.size()) throw DataError("feature dimension mismatch in scaler");
    return scaled.cwiseProduct(scale) + mean;
}

void ModelGradients::add_scaled(const ModelGradients& other, double factor) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
        weights[i] += factor * other.weights[i];
        biases[i] += factor * other.biases[i];
    }
}

void ModelGradients::scale(double factor) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
        weights[i] *= factor;
        biases[i] *= factor;
    }
}

bool ModelGradients::all_finite() const {
    for (std::size_t i = 0; i < weights.size(); ++i)
        if (!weights[i].allFinite() || !biases[i].allFinite()) return false;
    return true;
}

double ModelGradients::squared_norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i)
        s += weights[i].squaredNorm() + biases[i].squaredNorm();
    return s;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double softplus_derivative(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

PredictionModel::PredictionModel(int input_dim, OutputHead head, int output_dim,
                                 std::uint64_t seed)
    : input_dim_(input_dim), output_dim_(output_dim), head_(head) {
    if (input_dim < 1 || output_dim < 1) throw ConfigError("model dimensions must be positive");

    std::vector<int> sizes{input_dim};
    for (int i = 0; i < kHiddenLayers; ++i) sizes.push_back(kHiddenWidth);
    sizes.push_back(output_dim);

    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = bound * (2.0 * uniform01(rng) - 1.0);
        weights_.push_back(std::move(w));
        biases_.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    scaler_ = FeatureScaler::identity(input_dim);
}

void PredictionModel::set_scaler(FeatureScaler scaler) {
    if (scaler.mean.size() != input_dim_) throw ConfigError("scaler dimension mismatch");
    scaler_ = std::move(scaler);
}

Eigen::VectorXd PredictionModel::forward(const Eigen::VectorXd& features) const {
    if (features.size() != input_dim_) throw DataError("feature vector dimension mismatch");
    Eigen::VectorXd h = scaler_.apply(features);
    if (!h.allFinite()) throw DataError("non-finite scaled features");
    const int n_layers = layer_count();
    for (int l = 0; l < n_layers; ++l) {
        h = weights_[l] * h + biases_[l];
        if (l + 1 < n_layers) h = h.array().tanh().matrix();
    }
    if (head_ == OutputHead::kImpedance20)
        for (int i = 0; i < h.size(); ++i) h[i] = softplus(h[i]);
    return h;
}

ModelGradients PredictionModel::backward(const Eigen::VectorXd& features,
                                         const Eigen::VectorXd& output_grad) const {
    if (output_grad.size() != output_dim_) throw DataError("output gradient dimension mismatch");
    const int n_layers = layer_count();

    // Forward pass, caching layer inputs and pre-activations.
    std::vector<Eigen::VectorXd> inputs(n_layers);
    std::vector<Eigen::VectorXd> pre(n_layers);
    Eigen::VectorXd h = scaler_.apply(features);
    for (int l = 0; l < n_layers; ++l) {
        inputs[l] = h;
        pre[l] = weights_[l] * h + biases_[l];
        h = (l + 1 < n_layers) ? Eigen::VectorXd(pre[l].array().tanh().matrix()) : pre[l];
    }

    ModelGradients grads = zero_gradients();
    Eigen::VectorXd delta = output_grad;
    if (head_ == OutputHead::kImpedance20)
        for (int i = 0; i < delta.size(); ++i) delta[i] *= softplus_derivative(pre[n_layers - 1][i]);

    for (int l = n_layers - 1; l >= 0; --l) {
        grads.weights[l] = delta * inputs[l].transpose();
        grads.biases[l] = delta;
        if (l > 0) {
            const Eigen::VectorXd tanh_pre = pre[l - 1].array().tanh().matrix();
            delta = (weights_[l].transpose() * delta).cwiseProduct(
                (1.0 - tanh_pre.array().square()).matrix());
        }
    }
    return grads;
}

void PredictionModel::sgd_step(const ModelGradients& grads, double learning_rate) {
    if (grads.weights.size() != weights_.size())
        throw ConfigError("gradient shape does not match model");
    if (!grads.all_finite())
        throw TrainingAbortError("non-finite gradient encountered in sgd_step");
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        weights_[l] -= learning_rate * grads.weights[l];
        biases_[l] -= learning_rate * grads.biases[l];
    }
}

ModelGradients PredictionModel::zero_gradients() const {
    ModelGradients g;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        g.weights.push_back(Eigen::MatrixXd::Zero(weights_[l].rows(), weights_[l].cols()));
        g.biases.push_back(Eigen::VectorXd::Zero(biases_[l].size()));
    }
    return g;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
    const int nr = static_cast<int>(rows.size());
    const int nc = nr > 0 ? static_cast<int>(rows[0].size()) : 0;
    Eigen::MatrixXd m(nr, nc);
    for (int r = 0; r < nr; ++r)
        for (int c = 0; c < nc; ++c) m(r, c) = rows[r][c].get<double>();
    return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
    Eigen::VectorXd v(static_cast<int>(arr.size()));
    for (int i = 0; i < v.size(); ++i) v[i] = arr[i].get<double>();
    return v;
}

}  // namespace

std::string PredictionModel::to_json() const {
    nlohmann::json j;
    j["version"] = kModelVersion;
    j["input_dim"] = input_dim_;
    j["output_dim"] = output_dim_;
    j["head"] = head_name(head_);
    j["scaler_mean"] = vector_to_json(scaler_.mean);
    j["scaler_scale"] = vector_to_json(scaler_.scale);
    nlohmann::json ws = nlohmann::json::array();
    nlohmann::json bs = nlohmann::json::array();
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        ws.push_back(matrix_to_json(weights_[l]));
        bs.push_back(vector_to_json(biases_[l]));
    }
    j["weights"] = std::move(ws);
    j["biases"] = std::move(bs);
    return j.dump(2);
}

PredictionModel PredictionModel::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model checkpoint parse error: ") + e.what());
    }
    if (!j.contains("version") || j["version"].get<std::string>() != kModelVersion)
        throw DataError("unsupported model checkpoint version");

    PredictionModel m;
    m.input_dim_ = j["input_dim"].get<int>();
    m.output_dim_ = j["output_dim"].get<int>();
    m.head_ = head_from_name(j["head"].get<std::string>());
    m.scaler_.mean = vector_from_json(j["scaler_mean"]);
    m.scaler_.scale = vector_from_json(j["scaler_scale"]);
    for (const auto& w : j["weights"]) m.weights_.push_back(matrix_from_json(w));
    for (const auto& b : j["biases"]) m.biases_.push_back(vector_from_json(b));
    if (m.weights_.size() != m.biases_.size() || m.weights_.empty())
        throw DataError("model checkpoint has inconsistent layer data");
    return m;
}

void PredictionModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << to_json() << "\n";
}

PredictionModel PredictionModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

PtdfMatrix impedance_to_ptdf(const Eigen::VectorXd& reactances,
                             const NetworkTopology& topology) {
    return build_ptdf(topology, reactances);
}

Eigen::VectorXd ptdf_pullback(const NetworkTopology& topology, const Eigen::VectorXd& reactances,
                              const Eigen::MatrixXd& d_loss_d_ptdf) {
    topology.validate();
    const int n_line = topology.line_count();
    const int n_bus = topology.bus_count;
    if (reactances.size() != n_line) throw InvalidTopologyError("reactance vector length mismatch");
    if (d_loss_d_ptdf.rows() != n_line || d_loss_d_ptdf.cols() != n_bus)
        throw InvalidTopologyError("dL/dT dimensions do not match topology");
    if (n_line == 0) return Eigen::VectorXd(0);
    if (reactances.minCoeff() <= 0.0)
        throw InvalidTopologyError("reactances must be strictly positive");

    const IncidenceSet inc = build_incidence(topology);
    Eigen::MatrixXd incidence_red(n_line, n_bus - 1);
    Eigen::MatrixXd cotangent_red(n_line, n_bus - 1);
    int col = 0;
    for (int b = 0; b < n_bus; ++b) {
        if (b == topology.slack_bus) continue;
        incidence_red.col(col) = inc.line_bus.col(b);
        cotangent_red.col(col) = d_loss_d_ptdf.col(b);
        ++col;
    }

    const Eigen::VectorXd susceptance = reactances.cwiseInverse();
    const Eigen::MatrixXd weighted = susceptance.asDiagonal() * incidence_red;
    const Eigen::MatrixXd b_red = incidence_red.transpose() * weighted;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(b_red);
    const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
    if (pivots.size() == 0 || pivots.minCoeff() < 1e-10 * std::max(1.0, pivots.maxCoeff()))
        throw SingularNetworkError("reduced susceptance matrix is singular");
    const Eigen::MatrixXd t_red = weighted * lu.inverse();

    // d/db_l T_red = e_l (K^-1 a_l)' - (T_red a_l)(K^-1 a_l)', b = 1/x.
    Eigen::VectorXd grad(n_line);
    for (int l = 0; l < n_line; ++l) {
        const Eigen::VectorXd a_l = incidence_red.row(l).transpose();
        const Eigen::VectorXd v = lu.solve(a_l);
        const double term1 = cotangent_red.row(l).dot(v);
        const double term2 = (t_red * a_l).dot(cotangent_red * v);
        const double d_b = term1 - term2;
        grad[l] = -d_b * susceptance[l] * susceptance[l];  // db/dx = -1/x^2
    }
    return grad;
}

}  // namespace gridlearn
