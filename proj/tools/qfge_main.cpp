// qfge: quantized-forward-graph-engine command line tool.
//
// Subcommands:
//   synth-data    write procedurally generated digit IDX files
//   train         train a dense net with quantized activations + clustering
//   compile       turn a snapped checkpoint into an integer LUT model
//   infer         run a model over an IDX image file, JSON lines out
//   eval          accuracy / L2 of a model on a dataset
//   inspect       dump model structure, codebook occupancy, storage report
//   conformance   integer engine vs real-arithmetic reference agreement
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 invariant failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qfge/data.hpp"
#include "qfge/errors.hpp"
#include "qfge/lut_compile.hpp"
#include "qfge/lut_infer.hpp"
#include "qfge/serialize.hpp"
#include "qfge/train.hpp"

using json = nlohmann::json;
using namespace qfge;

namespace {

ActKind parse_act(const std::string& s) {
    if (s == "tanhd") return ActKind::TanhD;
    if (s == "relu6d") return ActKind::ReLU6D;
    throw CLI::ValidationError("--activation", "expected tanhd or relu6d");
}

struct TrainArgs {
    std::string task;
    std::string activation = "tanhd";
    int levels = 32;
    int weights = 0;
    std::string cluster_method = "kmeans";
    int cluster_every = 1000;
    double subsample = 1.0;
    uint64_t seed = 1;
    std::vector<int> hidden;
    int steps = 20000;
    int batch = 64;
    double lr = 1e-3;
    double lr_decay = 1.0;
    int lr_decay_every = 0;
    std::string optimizer = "adam";
    bool float_baseline = false;
    int samples = 10000;
    int eval_every = 1000;
    std::string train_images, train_labels, test_images, test_labels;
    std::string out, metrics;
};

Dataset load_task_data(const TrainArgs& a, bool test_split) {
    if (a.task == "mnist") {
        const std::string& img = test_split ? a.test_images : a.train_images;
        const std::string& lbl = test_split ? a.test_labels : a.train_labels;
        if (img.empty() || lbl.empty())
            throw DataError("mnist task needs --train-images/--train-labels"
                            " (and --test-images/--test-labels for eval)");
        return load_mnist_idx(img, lbl);
    }
    uint64_t seed = a.seed + (test_split ? 1 : 0);
    if (a.task == "parabola") return gen_parabola(a.samples, seed);
    if (a.task == "autoenc") {
        const std::string& img = test_split ? a.test_images : a.train_images;
        Dataset src;
        if (!img.empty()) {
            const std::string& lbl = test_split ? a.test_labels : a.train_labels;
            if (lbl.empty())
                throw DataError("autoenc with an image file also needs the label file");
            src = load_mnist_idx(img, lbl);
        } else {
            src = synth_digit_dataset(2000, seed + 100);
        }
        return gen_patches(src, a.samples, seed);
    }
    throw DataError("unknown --task '" + a.task + "' (mnist, parabola, autoenc)");
}

int run_train(const TrainArgs& a) {
    Dataset train = load_task_data(a, false);
    Dataset eval;
    bool have_eval = a.task != "mnist" || !a.test_images.empty();
    if (have_eval) eval = load_task_data(a, true);

    Head head = a.task == "mnist" ? Head::SoftmaxCrossEntropy : Head::L2Regression;
    std::vector<int> dims;
    dims.push_back(train.input_dim);
    std::vector<int> hidden = a.hidden;
    if (hidden.empty()) {
        if (a.task == "mnist") hidden = {100, 100};
        else if (a.task == "parabola") hidden = {2};
        else hidden = {32, 16, 32};
    }
    for (int h : hidden) dims.push_back(h);
    dims.push_back(head == Head::SoftmaxCrossEntropy ? train.target_dim
                                                     : train.target_dim);

    ActivationSpec act = build_activation(parse_act(a.activation), a.levels);
    // Image tasks feed pixels through the same input quantizer the integer
    // engine uses; the float baseline gets the affine map without rounding.
    if (a.task != "parabola") {
        if (a.float_baseline) {
            map_inputs_to_act_range(train, act);
            if (have_eval) map_inputs_to_act_range(eval, act);
        } else {
            quantize_dataset_inputs(train, act);
            if (have_eval) quantize_dataset_inputs(eval, act);
        }
    }
    DenseNet net = make_net(dims, act, !a.float_baseline, head, a.seed);

    TrainConfig cfg;
    if (a.optimizer == "sgd") cfg.optimizer = Optimizer::SGD;
    else if (a.optimizer == "momentum") cfg.optimizer = Optimizer::SGDMomentum;
    else if (a.optimizer == "adam") cfg.optimizer = Optimizer::Adam;
    else throw DataError("unknown --optimizer '" + a.optimizer + "'");
    cfg.schedule.lr = a.lr;
    cfg.schedule.decay_factor = a.lr_decay;
    cfg.schedule.decay_every = a.lr_decay_every;
    cfg.batch_size = a.batch;
    cfg.total_steps = a.steps;
    cfg.cluster_every = a.cluster_every;
    cfg.cluster_method = a.cluster_method == "laplacian" ? ClusterMethod::LaplacianL1
                                                         : ClusterMethod::KMeans;
    cfg.weight_count = a.float_baseline ? 0 : a.weights;
    cfg.subsample_fraction = a.subsample;
    cfg.eval_every = a.eval_every;
    cfg.seed = a.seed;

    TrainResult r = train_loop(std::move(net), train, have_eval ? &eval : nullptr, cfg);

    save_checkpoint(a.out, r.net, r.codebook ? &*r.codebook : nullptr);
    if (!a.metrics.empty()) {
        std::ofstream csv(a.metrics);
        csv << "step,train_loss,eval_metric,distinct_weights,w_max\n";
        char line[160];
        for (const MetricsRow& m : r.history) {
            std::snprintf(line, sizeof line, "%d,%.8g,%.8g,%d,%.8g\n", m.step,
                          m.train_loss, m.eval_metric, m.distinct_weights, m.w_max);
            csv << line;
        }
    }
    if (!r.history.empty()) {
        const MetricsRow& m = r.history.back();
        std::printf("final step=%d loss=%.6g eval=%.6g distinct_weights=%d\n",
                    m.step, m.train_loss, m.eval_metric, m.distinct_weights);
    }
    std::printf("checkpoint written to %s\n", a.out.c_str());
    return 0;
}

LutModel load_lut_or_die(const std::string& path) {
    if (peek_file_kind(path) != FileKind::LutModel)
        throw DataError(path + " is not a compiled model file");
    return load_lut_model(path);
}

json infer_record(const LutModel& m, size_t index, const IntTrace& t) {
    json rec;
    rec["index"] = index;
    rec["sums"] = t.final_sums;
    if (m.head == Head::SoftmaxCrossEntropy) {
        rec["class"] = argmax_class(t.final_sums);
    } else {
        rec["scale_num"] = m.dx;
        rec["scale_den_log2"] = m.s;
    }
    return rec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"integer lookup-table inference toolkit"};
    app.require_subcommand(1);

    // ---- synth-data ----
    auto* synth = app.add_subcommand("synth-data", "write synthetic digit IDX files");
    std::string sd_dir = ".";
    int sd_train = 10000, sd_test = 2000;
    uint64_t sd_seed = 1;
    synth->add_option("--out-dir", sd_dir, "output directory");
    synth->add_option("--train-count", sd_train);
    synth->add_option("--test-count", sd_test);
    synth->add_option("--seed", sd_seed);

    // ---- train ----
    auto* train = app.add_subcommand("train", "train a quantized dense net");
    TrainArgs ta;
    train->add_option("--task", ta.task, "mnist | parabola | autoenc")->required();
    train->add_option("--activation", ta.activation, "tanhd | relu6d");
    train->add_option("--levels", ta.levels, "activation levels A");
    train->add_option("--weights", ta.weights, "codebook size |W| (0 = off)");
    train->add_option("--cluster-method", ta.cluster_method, "kmeans | laplacian");
    train->add_option("--cluster-every", ta.cluster_every);
    train->add_option("--subsample", ta.subsample, "clustering subsample fraction");
    train->add_option("--seed", ta.seed);
    train->add_option("--hidden", ta.hidden, "hidden layer sizes")->delimiter(',');
    train->add_option("--steps", ta.steps);
    train->add_option("--batch", ta.batch);
    train->add_option("--lr", ta.lr);
    train->add_option("--lr-decay", ta.lr_decay);
    train->add_option("--lr-decay-every", ta.lr_decay_every);
    train->add_option("--optimizer", ta.optimizer, "sgd | momentum | adam");
    train->add_flag("--float-baseline", ta.float_baseline,
                    "smooth activations, no clustering");
    train->add_option("--samples", ta.samples, "synthetic dataset size");
    train->add_option("--eval-every", ta.eval_every);
    train->add_option("--train-images", ta.train_images);
    train->add_option("--train-labels", ta.train_labels);
    train->add_option("--test-images", ta.test_images);
    train->add_option("--test-labels", ta.test_labels);
    train->add_option("--out", ta.out, "checkpoint path")->required();
    train->add_option("--metrics", ta.metrics, "metrics CSV path");

    // ---- compile ----
    auto* compile = app.add_subcommand("compile", "compile a snapped checkpoint");
    std::string cp_in, cp_out, cp_enc = "huffman";
    int cp_acc = 64, cp_guard = 8, cp_table = 0;
    compile->add_option("--in", cp_in)->required();
    compile->add_option("--out", cp_out)->required();
    compile->add_option("--acc-bits", cp_acc, "32 or 64");
    compile->add_option("--guard-bits", cp_guard);
    compile->add_option("--table-len", cp_table, "0 = default 4(A-1)");
    compile->add_option("--encoding", cp_enc, "raw | huffman");

    // ---- infer ----
    auto* infer = app.add_subcommand("infer", "JSON-lines predictions");
    std::string in_model, in_images, in_labels, in_out;
    int in_limit = 0;
    infer->add_option("--model", in_model)->required();
    infer->add_option("--images", in_images, "IDX image file")->required();
    infer->add_option("--labels", in_labels, "IDX label file (for convenience)");
    infer->add_option("--out", in_out, "output path (default stdout)");
    infer->add_option("--limit", in_limit, "stop after N inputs (0 = all)");

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "accuracy / L2 on a dataset");
    std::string ev_model, ev_images, ev_labels;
    eval->add_option("--model", ev_model)->required();
    eval->add_option("--images", ev_images)->required();
    eval->add_option("--labels", ev_labels)->required();

    // ---- inspect ----
    auto* inspect = app.add_subcommand("inspect", "dump model structure");
    std::string is_in;
    inspect->add_option("--in", is_in)->required();

    // ---- conformance ----
    auto* conf = app.add_subcommand("conformance", "integer vs reference agreement");
    std::string cf_model, cf_images, cf_labels;
    int cf_count = 1000;
    conf->add_option("--model", cf_model)->required();
    conf->add_option("--images", cf_images)->required();
    conf->add_option("--labels", cf_labels)->required();
    conf->add_option("--count", cf_count);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*synth) {
            SynthDigits tr = gen_digits(sd_train, sd_seed);
            SynthDigits te = gen_digits(sd_test, sd_seed + 1);
            save_idx_images(sd_dir + "/train-images-idx3-ubyte", tr.pixels, sd_train,
                            28, 28);
            save_idx_labels(sd_dir + "/train-labels-idx1-ubyte", tr.labels);
            save_idx_images(sd_dir + "/t10k-images-idx3-ubyte", te.pixels, sd_test,
                            28, 28);
            save_idx_labels(sd_dir + "/t10k-labels-idx1-ubyte", te.labels);
            std::printf("wrote %d train and %d test digits to %s\n", sd_train,
                        sd_test, sd_dir.c_str());
            return 0;
        }

        if (*train) return run_train(ta);

        if (*compile) {
            CheckpointFile cp = load_checkpoint(cp_in);
            if (!cp.codebook)
                throw InvariantError(
                    "checkpoint has no codebook; train with --weights > 0");
            CompileOptions opt;
            opt.acc_bits = cp_acc;
            opt.guard_bits = cp_guard;
            opt.table_len = cp_table;
            LutModel m = compile_model(cp.net, *cp.codebook, opt);
            IndexEncoding enc =
                cp_enc == "raw" ? IndexEncoding::Raw : IndexEncoding::Huffman;
            save_lut_model(cp_out, m, enc);
            StorageReport rep = estimate_storage(m, enc);
            std::printf("compiled: s=%d dx=%.6g table_len=%d params=%zu "
                        "bytes=%llu ratio_vs_float32=%.4f\n",
                        m.s, m.dx, m.table_len, rep.parameter_count,
                        (unsigned long long)rep.total_bytes, rep.ratio_vs_float32);
            return 0;
        }

        if (*infer) {
            LutModel m = load_lut_or_die(in_model);
            Dataset d = in_labels.empty() ? load_idx_images(in_images)
                                          : load_mnist_idx(in_images, in_labels);
            IntNetView view = make_int_view(m);
            std::ofstream file_out;
            std::ostream* os = &std::cout;
            if (!in_out.empty()) {
                file_out.open(in_out);
                os = &file_out;
            }
            size_t n = d.count;
            if (in_limit > 0) n = std::min<size_t>(n, size_t(in_limit));
            std::vector<double> raw(d.input_dim);
            for (size_t i = 0; i < n; ++i) {
                std::copy_n(d.inputs.begin() + i * d.input_dim, d.input_dim,
                            raw.begin());
                IntTrace t = forward_int(view, quantize_input(m, raw));
                (*os) << infer_record(m, i, t).dump() << "\n";
            }
            return 0;
        }

        if (*eval) {
            Dataset d = load_mnist_idx(ev_images, ev_labels);
            if (peek_file_kind(ev_model) == FileKind::Checkpoint) {
                CheckpointFile cp = load_checkpoint(ev_model);
                const DenseLayer& first = cp.net.layers.front();
                if (first.act.kind != ActKind::Identity) {
                    if (first.quantize)
                        quantize_dataset_inputs(d, first.act);
                    else
                        map_inputs_to_act_range(d, first.act);
                }
                std::printf("accuracy=%.4f\n", evaluate(cp.net, d));
            } else {
                LutModel m = load_lut_model(ev_model);
                IntNetView view = make_int_view(m);
                size_t correct = 0;
                std::vector<double> raw(d.input_dim);
                for (size_t i = 0; i < d.count; ++i) {
                    std::copy_n(d.inputs.begin() + i * d.input_dim, d.input_dim,
                                raw.begin());
                    IntTrace t = forward_int(view, quantize_input(m, raw));
                    if (argmax_class(t.final_sums) == d.labels[i]) ++correct;
                }
                std::printf("accuracy=%.4f\n", double(correct) / double(d.count));
            }
            return 0;
        }

        if (*inspect) {
            json out;
            if (peek_file_kind(is_in) == FileKind::Checkpoint) {
                CheckpointFile cp = load_checkpoint(is_in);
                out["kind"] = "checkpoint";
                out["head"] = cp.net.head == Head::SoftmaxCrossEntropy
                                  ? "softmax_xent"
                                  : "l2_regression";
                json layers = json::array();
                for (const DenseLayer& l : cp.net.layers)
                    layers.push_back({{"in", l.in_dim},
                                      {"out", l.out_dim},
                                      {"activation", act_kind_name(l.act.kind)},
                                      {"levels", l.act.levels},
                                      {"quantize", l.quantize}});
                out["layers"] = layers;
                out["distinct_weights"] = distinct_parameter_count(cp.net);
                out["w_max"] = max_abs_parameter(cp.net);
                if (cp.codebook) {
                    out["codebook"]["centers"] = cp.codebook->centers;
                    out["codebook"]["method"] =
                        cp.codebook->method == ClusterMethod::KMeans ? "kmeans"
                                                                     : "laplacian";
                    // occupancy of each center over all parameters
                    auto params = gather_parameters(cp.net);
                    auto assign = assign_to_codebook(params, *cp.codebook);
                    std::vector<uint64_t> occ(cp.codebook->centers.size(), 0);
                    for (int idx : assign) occ[size_t(idx)]++;
                    out["codebook"]["occupancy"] = occ;
                }
            } else {
                LutModel m = load_lut_model(is_in);
                out["kind"] = "lut_model";
                out["acc_bits"] = m.acc_bits;
                out["s"] = m.s;
                out["dx"] = m.dx;
                out["levels"] = m.levels;
                out["activation"] = act_kind_name(m.act_kind);
                out["table_len"] = m.table_len;
                out["centers"] = m.centers.size();
                out["parameters"] = m.parameter_count();
                auto flat = flatten_weight_indices(m);
                std::vector<uint64_t> occ(m.centers.size(), 0);
                for (int idx : flat) occ[size_t(idx)]++;
                out["occupancy"] = occ;
                for (auto enc : {IndexEncoding::Raw, IndexEncoding::Huffman}) {
                    StorageReport rep = estimate_storage(m, enc);
                    json r = {{"total_bytes", rep.total_bytes},
                              {"bits_per_index", rep.bits_per_index},
                              {"entropy_bits", rep.empirical_entropy_bits},
                              {"ratio_vs_float32", rep.ratio_vs_float32}};
                    out["storage"][enc == IndexEncoding::Raw ? "raw" : "huffman"] = r;
                }
            }
            std::cout << out.dump(2) << "\n";
            return 0;
        }

        if (*conf) {
            LutModel m = load_lut_or_die(cf_model);
            Dataset d = load_mnist_idx(cf_images, cf_labels);
            size_t n = std::min<size_t>(d.count, size_t(cf_count));
            ConformanceReport rep =
                run_conformance(m, d.inputs, n, d.input_dim);
            std::printf("inputs=%zu unit_agreement=%.6f head_agreement=%.6f "
                        "max_index_deviation=%d\n",
                        rep.inputs, rep.unit_agreement(), rep.head_agreement(),
                        rep.max_index_deviation);
            return 0;
        }
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const InvariantError& e) {
        std::fprintf(stderr, "invariant failure: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
