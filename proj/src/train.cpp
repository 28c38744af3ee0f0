#include "rppg/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "rppg/errors.hpp"
#include "rppg/losses.hpp"
#include "rppg/ops.hpp"

namespace rppg {

namespace {

struct ClipLosses {
    double pearson = 0.0, frequency = 0.0, skin = 0.0, total = 0.0;
};

// forward + losses; fills grad_rppg / grad_skin when backprop is requested
ClipLosses evaluate_clip(Network& net, const TrainClip& clip, const TrainOptions& opts,
                         bool training, std::vector<double>* grad_rppg, Tensor* grad_skin) {
    const ForwardTrace trace = net.forward(clip.clip, training);

    ClipLosses out;
    const SignalLoss lr = pearson_loss(trace.rppg, clip.ppg.samples);
    out.pearson = lr.value;

    SignalLoss lf;
    if (opts.use_frequency_loss) {
        lf = frequency_ce_loss(trace.rppg, clip.ppg.fs, clip.hr_bpm, opts.freq_logits);
        out.frequency = lf.value;
    }

    MaskLoss ls;
    const bool skin_on = opts.use_skin_loss && net.config().use_skinmap &&
                         !clip.skin_label.empty();
    if (skin_on) {
        ls = skin_bce_loss(trace.skin_map, clip.skin_label);
        out.skin = ls.value;
    }

    out.total = opts.weights.alpha * out.pearson + out.frequency +
                (skin_on ? opts.weights.beta * out.skin : 0.0);

    if (grad_rppg != nullptr) {
        grad_rppg->assign(trace.rppg.size(), 0.0);
        for (size_t i = 0; i < trace.rppg.size(); ++i) {
            double g = opts.weights.alpha * lr.grad[i];
            if (opts.use_frequency_loss) g += lf.grad[i];
            (*grad_rppg)[i] = g;
        }
        if (skin_on) {
            *grad_skin = Tensor(ls.grad.shape());
            for (int64_t i = 0; i < ls.grad.numel(); ++i) {
                (*grad_skin)[i] = opts.weights.beta * ls.grad[i];
            }
        } else {
            *grad_skin = Tensor();
        }
    }
    return out;
}

}  // namespace

TrainResult train_network(Network& net, const std::vector<TrainClip>& train_set,
                          const std::vector<TrainClip>& val_set, const TrainOptions& options) {
    if (train_set.empty()) throw std::invalid_argument("train_network: empty training set");

    auto params = net.parameters();
    std::vector<AdamState> adam(params.size());
    std::mt19937_64 shuffle_rng(options.seed ^ 0x5DEECE66Dull);

    auto snapshot = [&]() {
        std::vector<Tensor> copy;
        for (auto& [name, tensor] : net.state()) copy.push_back(*tensor);
        return copy;
    };
    auto restore = [&](const std::vector<Tensor>& copy) {
        auto state = net.state();
        for (size_t i = 0; i < state.size(); ++i) state[i].second->values() = copy[i].values();
    };

    auto validate = [&]() {
        const auto& set = val_set.empty() ? train_set : val_set;
        double acc = 0.0;
        for (const auto& clip : set) {
            acc += evaluate_clip(net, clip, options, false, nullptr, nullptr).pearson;
        }
        return acc / static_cast<double>(set.size());
    };

    TrainResult result;
    std::vector<Tensor> best_state = snapshot();
    result.best_val_pearson = options.epochs > 0 ? validate() : 2.0;
    result.best_epoch = -1;

    std::ofstream curve;
    if (!options.loss_csv_path.empty()) {
        curve.open(options.loss_csv_path);
        if (!curve) throw IoError("cannot open " + options.loss_csv_path + " for writing");
        curve.precision(12);
        curve << "epoch,pearson,frequency,skin,total\n";
    }

    std::vector<size_t> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<double> grad_rppg;
    Tensor grad_skin;

    for (int64_t epoch = 0; epoch < options.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        EpochStats stats;
        for (size_t pos = 0; pos < order.size();) {
            const size_t batch_end =
                std::min(order.size(), pos + static_cast<size_t>(options.batch_size));
            const double inv_batch = 1.0 / static_cast<double>(batch_end - pos);
            net.zero_grads();
            for (; pos < batch_end; ++pos) {
                const TrainClip& clip = train_set[order[pos]];
                const ClipLosses losses =
                    evaluate_clip(net, clip, options, true, &grad_rppg, &grad_skin);
                if (!std::isfinite(losses.total)) {
                    throw DivergenceError("training diverged (non-finite loss) at epoch " +
                                          std::to_string(epoch) + ", clip " + clip.id);
                }
                stats.pearson += losses.pearson;
                stats.frequency += losses.frequency;
                stats.skin += losses.skin;
                stats.total += losses.total;

                for (double& g : grad_rppg) g *= inv_batch;
                if (!grad_skin.empty()) {
                    for (int64_t i = 0; i < grad_skin.numel(); ++i) grad_skin[i] *= inv_batch;
                }
                net.backward(grad_rppg, grad_skin.empty() ? nullptr : &grad_skin);
            }
            for (size_t i = 0; i < params.size(); ++i) {
                adam_step(params[i]->value,
                          Tensor(params[i]->value.shape(), params[i]->value.grad_values()),
                          adam[i], options.lr);
            }
        }
        const double inv_n = 1.0 / static_cast<double>(train_set.size());
        stats.pearson *= inv_n;
        stats.frequency *= inv_n;
        stats.skin *= inv_n;
        stats.total *= inv_n;
        result.history.push_back(stats);

        if (curve.is_open()) {
            curve << epoch << "," << stats.pearson << "," << stats.frequency << "," << stats.skin
                  << "," << stats.total << "\n";
        }

        const double val_pearson = validate();
        if (val_pearson < result.best_val_pearson) {
            result.best_val_pearson = val_pearson;
            result.best_epoch = epoch;
            best_state = snapshot();
        }
        if (options.verbose) {
            std::printf("epoch %lld: L_r %.4f  L_f %.4f  L_s %.4f  total %.4f  val L_r %.4f\n",
                        static_cast<long long>(epoch), stats.pearson, stats.frequency, stats.skin,
                        stats.total, val_pearson);
            std::fflush(stdout);
        }
        if (options.early_stop_pearson > 0.0 && stats.pearson < options.early_stop_pearson) {
            break;
        }
    }

    restore(best_state);
    return result;
}

}  // namespace rppg
