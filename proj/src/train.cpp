#include "qfge/train.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "qfge/errors.hpp"

namespace qfge {

double LrSchedule::at(int step) const {
    if (decay_every <= 0 || decay_factor == 1.0) return lr;
    return lr * std::pow(decay_factor, step / decay_every);
}

DenseNet make_net(const std::vector<int>& dims, const ActivationSpec& hidden_act,
                  bool quantize_hidden, Head head, uint64_t seed) {
    if (dims.size() < 2) throw std::invalid_argument("make_net: need at least 2 dims");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> w_init(0.0, 0.005), b_init(0.0, 0.1);
    DenseNet net;
    net.head = head;
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        DenseLayer layer;
        layer.in_dim = dims[l];
        layer.out_dim = dims[l + 1];
        layer.w.resize(size_t(layer.out_dim) * layer.in_dim);
        layer.b.resize(layer.out_dim);
        for (double& w : layer.w) w = w_init(rng);
        for (double& b : layer.b) b = b_init(rng);
        bool is_output = (l + 2 == dims.size());
        layer.act = is_output ? identity_spec() : hidden_act;
        layer.quantize = !is_output && quantize_hidden;
        net.layers.push_back(std::move(layer));
    }
    return net;
}

void forward_train(const DenseNet& net, const double* inputs, int batch,
                   ForwardCache& cache) {
    const size_t n_layers = net.layers.size();
    cache.batch = batch;
    cache.pre.resize(n_layers);
    cache.out.resize(n_layers);
    const double* x = inputs;
    for (size_t l = 0; l < n_layers; ++l) {
        const DenseLayer& layer = net.layers[l];
        auto& pre = cache.pre[l];
        auto& out = cache.out[l];
        pre.assign(size_t(batch) * layer.out_dim, 0.0);
        out.resize(size_t(batch) * layer.out_dim);
        for (int bi = 0; bi < batch; ++bi) {
            const double* xb = x + size_t(bi) * layer.in_dim;
            double* zb = pre.data() + size_t(bi) * layer.out_dim;
            for (int o = 0; o < layer.out_dim; ++o) {
                const double* wrow = layer.w.data() + size_t(o) * layer.in_dim;
                double acc = layer.b[o];
                for (int i = 0; i < layer.in_dim; ++i) acc += wrow[i] * xb[i];
                zb[o] = acc;
            }
        }
        if (layer.act.kind == ActKind::Identity) {
            out = pre;
        } else if (layer.quantize) {
            for (size_t i = 0; i < pre.size(); ++i)
                out[i] = quantize_value(layer.act, pre[i]).value;
        } else {
            for (size_t i = 0; i < pre.size(); ++i)
                out[i] = underlying(layer.act.kind, pre[i]);
        }
        x = out.data();
    }
}

void Gradients::init_like(const DenseNet& net) {
    dw.resize(net.layers.size());
    db.resize(net.layers.size());
    for (size_t l = 0; l < net.layers.size(); ++l) {
        dw[l].assign(net.layers[l].w.size(), 0.0);
        db[l].assign(net.layers[l].b.size(), 0.0);
    }
}

double backward(const DenseNet& net, const double* inputs, int batch,
                const double* targets, const int* labels,
                const ForwardCache& cache, Gradients& grads) {
    const size_t n_layers = net.layers.size();
    grads.init_like(net);
    const DenseLayer& out_layer = net.layers.back();
    const int out_dim = out_layer.out_dim;
    const auto& out_pre = cache.pre.back();

    // Head loss + delta at the output layer (already averaged over the batch).
    std::vector<double> delta(size_t(batch) * out_dim);
    double loss = 0.0;
    if (net.head == Head::SoftmaxCrossEntropy) {
        for (int bi = 0; bi < batch; ++bi) {
            const double* z = out_pre.data() + size_t(bi) * out_dim;
            double* d = delta.data() + size_t(bi) * out_dim;
            double zmax = *std::max_element(z, z + out_dim);
            double sum = 0.0;
            for (int o = 0; o < out_dim; ++o) sum += std::exp(z[o] - zmax);
            int y = labels[bi];
            loss += -(z[y] - zmax - std::log(sum));
            for (int o = 0; o < out_dim; ++o)
                d[o] = (std::exp(z[o] - zmax) / sum - (o == y ? 1.0 : 0.0)) / batch;
        }
        loss /= batch;
    } else {
        for (int bi = 0; bi < batch; ++bi) {
            const double* z = out_pre.data() + size_t(bi) * out_dim;
            const double* t = targets + size_t(bi) * out_dim;
            double* d = delta.data() + size_t(bi) * out_dim;
            for (int o = 0; o < out_dim; ++o) {
                double e = z[o] - t[o];
                loss += e * e;
                d[o] = 2.0 * e / batch;
            }
        }
        loss /= batch;
    }

    for (size_t l = n_layers; l-- > 0;) {
        const DenseLayer& layer = net.layers[l];
        const double* below = (l == 0) ? inputs : cache.out[l - 1].data();
        auto& dw = grads.dw[l];
        auto& db = grads.db[l];
        for (int bi = 0; bi < batch; ++bi) {
            const double* d = delta.data() + size_t(bi) * layer.out_dim;
            const double* xb = below + size_t(bi) * layer.in_dim;
            for (int o = 0; o < layer.out_dim; ++o) {
                double g = d[o];
                if (g == 0.0) continue;
                db[o] += g;
                double* dwrow = dw.data() + size_t(o) * layer.in_dim;
                for (int i = 0; i < layer.in_dim; ++i) dwrow[i] += g * xb[i];
            }
        }
        if (l == 0) break;
        const DenseLayer& prev = net.layers[l - 1];
        std::vector<double> next_delta(size_t(batch) * prev.out_dim, 0.0);
        for (int bi = 0; bi < batch; ++bi) {
            const double* d = delta.data() + size_t(bi) * layer.out_dim;
            double* nd = next_delta.data() + size_t(bi) * prev.out_dim;
            for (int o = 0; o < layer.out_dim; ++o) {
                double g = d[o];
                if (g == 0.0) continue;
                const double* wrow = layer.w.data() + size_t(o) * layer.in_dim;
                for (int i = 0; i < layer.in_dim; ++i) nd[i] += g * wrow[i];
            }
            const double* zprev = cache.pre[l - 1].data() + size_t(bi) * prev.out_dim;
            for (int i = 0; i < prev.out_dim; ++i)
                nd[i] *= derivative_underlying(prev.act, zprev[i]);
        }
        delta = std::move(next_delta);
    }
    return loss;
}

void OptimizerState::init_like(const DenseNet& net, Optimizer opt) {
    step_count = 0;
    mw.resize(net.layers.size());
    mb.resize(net.layers.size());
    vw.resize(net.layers.size());
    vb.resize(net.layers.size());
    for (size_t l = 0; l < net.layers.size(); ++l) {
        mw[l].assign(net.layers[l].w.size(), 0.0);
        mb[l].assign(net.layers[l].b.size(), 0.0);
        if (opt == Optimizer::Adam) {
            vw[l].assign(net.layers[l].w.size(), 0.0);
            vb[l].assign(net.layers[l].b.size(), 0.0);
        }
    }
}

namespace {

void update_span(std::vector<double>& p, const std::vector<double>& g,
                 std::vector<double>& m, std::vector<double>& v,
                 const TrainConfig& cfg, double lr, int t) {
    switch (cfg.optimizer) {
        case Optimizer::SGD:
            for (size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
            break;
        case Optimizer::SGDMomentum:
            for (size_t i = 0; i < p.size(); ++i) {
                m[i] = cfg.momentum * m[i] + g[i];
                p[i] -= lr * m[i];
            }
            break;
        case Optimizer::Adam: {
            double bc1 = 1.0 - std::pow(cfg.beta1, t);
            double bc2 = 1.0 - std::pow(cfg.beta2, t);
            for (size_t i = 0; i < p.size(); ++i) {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam_eps);
            }
            break;
        }
    }
}

}  // namespace

void optimizer_step(DenseNet& net, const Gradients& grads, OptimizerState& state,
                    const TrainConfig& cfg, double lr) {
    ++state.step_count;
    for (size_t l = 0; l < net.layers.size(); ++l) {
        update_span(net.layers[l].w, grads.dw[l], state.mw[l], state.vw[l], cfg, lr,
                    state.step_count);
        update_span(net.layers[l].b, grads.db[l], state.mb[l], state.vb[l], cfg, lr,
                    state.step_count);
    }
}

std::vector<double> gather_parameters(const DenseNet& net) {
    std::vector<double> pool;
    for (const DenseLayer& l : net.layers) {
        pool.insert(pool.end(), l.w.begin(), l.w.end());
        pool.insert(pool.end(), l.b.begin(), l.b.end());
    }
    return pool;
}

int distinct_parameter_count(const DenseNet& net) {
    std::vector<double> pool = gather_parameters(net);
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    return static_cast<int>(pool.size());
}

double max_abs_parameter(const DenseNet& net) {
    double m = 0.0;
    for (const DenseLayer& l : net.layers) {
        for (double w : l.w) m = std::max(m, std::abs(w));
        for (double b : l.b) m = std::max(m, std::abs(b));
    }
    return m;
}

WeightCodebook cluster_and_snap(DenseNet& net, const TrainConfig& cfg,
                                const WeightCodebook* previous, uint64_t salt) {
    std::vector<double> pool = gather_parameters(net);
    std::vector<double> fit_values =
        cfg.subsample_fraction < 1.0
            ? subsample(pool, cfg.subsample_fraction, cfg.seed ^ (salt * 0x9e3779b97f4a7c15ull))
            : pool;

    WeightCodebook cb;
    if (cfg.cluster_method == ClusterMethod::KMeans) {
        const std::vector<double>* warm = previous ? &previous->centers : nullptr;
        cb = kmeans_1d(fit_values, cfg.weight_count, cfg.kmeans_iters, warm);
    } else {
        if (cfg.weight_count % 2 == 0)
            throw std::invalid_argument("LaplacianL1 requires an odd weight count");
        cb = fit_laplacian_codebook(fit_values, cfg.weight_count);
    }

    for (DenseLayer& l : net.layers) {
        for (double& w : l.w) w = cb.centers[nearest_center(cb.centers, w)];
        for (double& b : l.b) b = cb.centers[nearest_center(cb.centers, b)];
    }
    return cb;
}

std::optional<WeightCodebook> apply_clustering_schedule(
    DenseNet& net, int step, const TrainConfig& cfg, const WeightCodebook* previous) {
    if (cfg.weight_count <= 0) return std::nullopt;
    if (step <= 0 || cfg.cluster_every <= 0 || step % cfg.cluster_every != 0)
        return std::nullopt;
    return cluster_and_snap(net, cfg, previous, static_cast<uint64_t>(step));
}

double evaluate(const DenseNet& net, const Dataset& data) {
    ForwardCache cache;
    const int chunk = 256;
    double metric = 0.0;
    for (size_t start = 0; start < data.count; start += chunk) {
        int batch = static_cast<int>(std::min<size_t>(chunk, data.count - start));
        forward_train(net, data.inputs.data() + start * data.input_dim, batch, cache);
        const auto& out = cache.pre.back();
        int out_dim = net.layers.back().out_dim;
        if (net.head == Head::SoftmaxCrossEntropy) {
            for (int bi = 0; bi < batch; ++bi) {
                const double* z = out.data() + size_t(bi) * out_dim;
                int best = 0;
                for (int o = 1; o < out_dim; ++o)
                    if (z[o] > z[best]) best = o;
                if (best == data.labels[start + bi]) metric += 1.0;
            }
        } else {
            for (int bi = 0; bi < batch; ++bi) {
                const double* z = out.data() + size_t(bi) * out_dim;
                const double* t = data.targets.data() + (start + bi) * out_dim;
                for (int o = 0; o < out_dim; ++o) {
                    double e = z[o] - t[o];
                    metric += e * e;
                }
            }
        }
    }
    return metric / static_cast<double>(data.count);
}

TrainResult train_loop(DenseNet net, const Dataset& train_data,
                       const Dataset* eval_data, const TrainConfig& cfg) {
    if (train_data.count == 0) throw std::invalid_argument("train_loop: empty dataset");
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<size_t> pick(0, train_data.count - 1);

    OptimizerState state;
    state.init_like(net, cfg.optimizer);
    Gradients grads;
    ForwardCache cache;
    std::optional<WeightCodebook> codebook;
    std::vector<MetricsRow> history;

    const int in_dim = train_data.input_dim;
    const int out_dim = net.layers.back().out_dim;
    std::vector<double> batch_in(size_t(cfg.batch_size) * in_dim);
    std::vector<double> batch_tgt;
    std::vector<int> batch_lbl;
    const bool classify = net.head == Head::SoftmaxCrossEntropy;
    if (classify)
        batch_lbl.resize(cfg.batch_size);
    else
        batch_tgt.resize(size_t(cfg.batch_size) * out_dim);

    for (int step = 1; step <= cfg.total_steps; ++step) {
        for (int bi = 0; bi < cfg.batch_size; ++bi) {
            size_t s = pick(rng);
            std::copy_n(train_data.inputs.data() + s * in_dim, in_dim,
                        batch_in.data() + size_t(bi) * in_dim);
            if (classify)
                batch_lbl[bi] = train_data.labels[s];
            else
                std::copy_n(train_data.targets.data() + s * out_dim, out_dim,
                            batch_tgt.data() + size_t(bi) * out_dim);
        }
        forward_train(net, batch_in.data(), cfg.batch_size, cache);
        double loss = backward(net, batch_in.data(), cfg.batch_size,
                               batch_tgt.data(), batch_lbl.data(), cache, grads);
        if (!std::isfinite(loss))
            throw InvariantError("train_loop: non-finite loss at step " +
                                 std::to_string(step) +
                                 " (w_max=" + std::to_string(max_abs_parameter(net)) + ")");
        optimizer_step(net, grads, state, cfg, cfg.schedule.at(step));

        auto cb = apply_clustering_schedule(net, step, cfg,
                                            codebook ? &*codebook : nullptr);
        if (cb) codebook = std::move(cb);

        if (cfg.eval_every > 0 &&
            (step % cfg.eval_every == 0 || step == cfg.total_steps)) {
            MetricsRow row;
            row.step = step;
            row.train_loss = loss;
            row.eval_metric = eval_data ? evaluate(net, *eval_data) : 0.0;
            row.distinct_weights = distinct_parameter_count(net);
            row.w_max = max_abs_parameter(net);
            history.push_back(row);
        }
    }

    // The deliverable is always snapped when clustering is on.
    if (cfg.weight_count > 0 && cfg.terminal_snap &&
        cfg.total_steps % cfg.cluster_every != 0) {
        codebook = cluster_and_snap(net, cfg, codebook ? &*codebook : nullptr,
                                    static_cast<uint64_t>(cfg.total_steps) + 1);
        if (!history.empty() && history.back().step == cfg.total_steps) {
            MetricsRow& row = history.back();
            row.eval_metric = eval_data ? evaluate(net, *eval_data) : 0.0;
            row.distinct_weights = distinct_parameter_count(net);
            row.w_max = max_abs_parameter(net);
        }
    }

    return {std::move(net), std::move(codebook), std::move(history)};
}

}  // namespace qfge
