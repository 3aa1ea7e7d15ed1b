#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qfge/activation.hpp"
#include "qfge/codebook.hpp"
#include "qfge/data.hpp"

namespace qfge {

enum class Head { SoftmaxCrossEntropy, L2Regression };
enum class Optimizer { SGD, SGDMomentum, Adam };

struct DenseLayer {
    int in_dim = 0, out_dim = 0;
    std::vector<double> w;  // out_dim x in_dim, row-major
    std::vector<double> b;  // out_dim
    ActivationSpec act;     // Identity for the output layer
    bool quantize = true;   // false = use the smooth underlying function
};

struct DenseNet {
    std::vector<DenseLayer> layers;
    Head head = Head::SoftmaxCrossEntropy;
};

// dims = {in, hidden..., out}. Hidden layers get the given activation, the
// output layer is Identity. Gaussian init: sd 0.005 weights, 0.1 biases.
DenseNet make_net(const std::vector<int>& dims, const ActivationSpec& hidden_act,
                  bool quantize_hidden, Head head, uint64_t seed);

struct LrSchedule {
    double lr = 1e-3;
    double decay_factor = 1.0;  // multiplied in every decay_every steps
    int decay_every = 0;        // 0 = constant
    double at(int step) const;
};

struct TrainConfig {
    Optimizer optimizer = Optimizer::Adam;
    LrSchedule schedule;
    double momentum = 0.9;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    int batch_size = 64;
    int total_steps = 1000;
    int cluster_every = 1000;
    ClusterMethod cluster_method = ClusterMethod::KMeans;
    int weight_count = 0;  // |W|; 0 disables clustering entirely
    double subsample_fraction = 1.0;
    int kmeans_iters = 30;
    bool terminal_snap = true;
    int eval_every = 1000;
    uint64_t seed = 1;
};

struct MetricsRow {
    int step = 0;
    double train_loss = 0.0;
    double eval_metric = 0.0;
    int distinct_weights = 0;
    double w_max = 0.0;
};

// Per-layer forward state kept for the backward pass.
struct ForwardCache {
    int batch = 0;
    std::vector<std::vector<double>> pre;  // pre-activations, batch x out_dim
    std::vector<std::vector<double>> out;  // post-activation outputs
};

void forward_train(const DenseNet& net, const double* inputs, int batch,
                   ForwardCache& cache);

struct Gradients {
    std::vector<std::vector<double>> dw, db;
    void init_like(const DenseNet& net);
};

// Straight-through backprop: local derivatives come from the underlying
// smooth function at the pre-activation, downstream values are the quantized
// forward outputs. Returns the batch loss.
double backward(const DenseNet& net, const double* inputs, int batch,
                const double* targets, const int* labels,
                const ForwardCache& cache, Gradients& grads);

struct OptimizerState {
    int step_count = 0;
    std::vector<std::vector<double>> mw, mb;  // momentum / first moment
    std::vector<std::vector<double>> vw, vb;  // second moment (ADAM)
    void init_like(const DenseNet& net, Optimizer opt);
};

void optimizer_step(DenseNet& net, const Gradients& grads, OptimizerState& state,
                    const TrainConfig& cfg, double lr);

// Gathers every weight and bias, fits a codebook (subsampled when asked),
// snaps all parameters to their nearest center. Returns the codebook.
WeightCodebook cluster_and_snap(DenseNet& net, const TrainConfig& cfg,
                                const WeightCodebook* previous, uint64_t salt);

// No-op unless step is a positive multiple of cluster_every and clustering
// is enabled.
std::optional<WeightCodebook> apply_clustering_schedule(
    DenseNet& net, int step, const TrainConfig& cfg, const WeightCodebook* previous);

// Classification: recall@1 accuracy. Regression: mean squared L2 error.
double evaluate(const DenseNet& net, const Dataset& data);

std::vector<double> gather_parameters(const DenseNet& net);
int distinct_parameter_count(const DenseNet& net);
double max_abs_parameter(const DenseNet& net);

struct TrainResult {
    DenseNet net;
    std::optional<WeightCodebook> codebook;
    std::vector<MetricsRow> history;
};

TrainResult train_loop(DenseNet net, const Dataset& train_data,
                       const Dataset* eval_data, const TrainConfig& cfg);

}  // namespace qfge
