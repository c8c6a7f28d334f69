#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridlearn/errors.hpp"
#include "gridlearn/grid.hpp"

namespace gridlearn {

enum class OutputHead {
    kLoadScalar,   // 1 output, hour-ahead total load
    kLoad24,       // 24 outputs, day-ahead hourly totals
    kLoadZones,    // one output per load zone
    kImpedance20,  // one strictly positive reactance per line (softplus)
};

int head_output_dim(OutputHead head, int zone_count, int line_count);
std::string head_name(OutputHead head);
OutputHead head_from_name(const std::string& name);

/// Per-feature standardization. Scales are floored away from zero.
struct FeatureScaler {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static FeatureScaler fit(const std::vector<Eigen::VectorXd>& features);
    static FeatureScaler identity(int dim);
    Eigen::VectorXd apply(const Eigen::VectorXd& raw) const;
    Eigen::VectorXd invert(const Eigen::VectorXd& scaled) const;
};

/// Parameter gradients with the same shapes as the model layers.
struct ModelGradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    void add_scaled(const ModelGradients& other, double factor);
    void scale(double factor);
    bool all_finite() const;
    double squared_norm() const;
};

/// Feed-forward network: input -> 25 -> 25 -> 25 -> output, tanh hidden
/// activations. The Impedance20 head passes its pre-activations through
/// softplus so every reactance stays strictly positive.
class PredictionModel {
public:
    PredictionModel() = default;
    PredictionModel(int input_dim, OutputHead head, int output_dim, std::uint64_t seed);

    int input_dim() const { return input_dim_; }
    int output_dim() const { return output_dim_; }
    OutputHead head() const { return head_; }
    int layer_count() const { return static_cast<int>(weights_.size()); }

    const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
    const std::vector<Eigen::VectorXd>& biases() const { return biases_; }
    const FeatureScaler& scaler() const { return scaler_; }
    void set_scaler(FeatureScaler scaler);

    /// Head output for one feature vector (scaling applied internally).
    Eigen::VectorXd forward(const Eigen::VectorXd& features) const;

    /// Parameter gradients for d(loss)/d(output). The softplus chain of the
    /// Impedance20 head is included, so output_grad is w.r.t. the reactances.
    ModelGradients backward(const Eigen::VectorXd& features,
                            const Eigen::VectorXd& output_grad) const;

    /// theta <- theta - lr * grad. Throws TrainingAbortError on non-finite
    /// gradients.
    void sgd_step(const ModelGradients& grads, double learning_rate);

    ModelGradients zero_gradients() const;

    std::string to_json() const;
    static PredictionModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static PredictionModel load(const std::string& path);

private:
    int input_dim_ = 0;
    int output_dim_ = 0;
    OutputHead head_ = OutputHead::kLoadScalar;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
    FeatureScaler scaler_;
};

/// softplus and its derivative, numerically stable for large |x|.
double softplus(double x);
double softplus_derivative(double x);

/// Predicted reactances -> PTDF (delegates to build_ptdf).
PtdfMatrix impedance_to_ptdf(const Eigen::VectorXd& reactances, const NetworkTopology& topology);

/// Vector-Jacobian product of build_ptdf: maps dL/dT back to dL/dreactances
/// (differentiates the reduced susceptance inverse via -K^-1 dK K^-1).
Eigen::VectorXd ptdf_pullback(const NetworkTopology& topology, const Eigen::VectorXd& reactances,
                              const Eigen::MatrixXd& d_loss_d_ptdf);

}  // namespace gridlearn
