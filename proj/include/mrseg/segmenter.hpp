// Small fixed-topology encoder-decoder segmenter trained with soft dice
// loss, hand-written backpropagation, and ADAM. Weights are stored in single
// precision; all activations and accumulations run in double so gradients
// survive finite-difference checking.
//
// Topology (2 classes, 1 input channel, H and W divisible by 4):
//   enc1: conv3x3(1->8)  + ReLU, maxpool2
//   enc2: conv3x3(8->16) + ReLU, maxpool2
//   bott: conv3x3(16->16)
//   dec1: upsample x2 nearest, concat enc2 skip -> conv3x3(32->8) + ReLU
//   dec2: upsample x2 nearest, concat enc1 skip -> conv3x3(16->8) + ReLU
//   head: conv1x1(8->2), softmax per pixel
#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrseg/curriculum.hpp"
#include "mrseg/errors.hpp"
#include "mrseg/rng.hpp"
#include "mrseg/tensor.hpp"

namespace mrseg {

struct ConvParam {
    int out_c = 0, in_c = 0, k = 0;
    std::vector<float> w;  // [out_c][in_c][k][k]
    std::vector<float> b;  // [out_c]

    ConvParam() = default;
    ConvParam(int oc, int ic, int kk)
        : out_c(oc), in_c(ic), k(kk), w(static_cast<std::size_t>(oc) * ic * kk * kk, 0.0f), b(oc, 0.0f) {}

    float wt(int o, int i, int kr, int kc) const {
        return w[((static_cast<std::size_t>(o) * in_c + i) * k + kr) * k + kc];
    }
};

struct SegmenterParams {
    ConvParam enc1{8, 1, 3};
    ConvParam enc2{16, 8, 3};
    ConvParam bott{16, 16, 3};
    ConvParam dec1{8, 32, 3};
    ConvParam dec2{8, 16, 3};
    ConvParam head{2, 8, 1};

    template <typename Fn>
    void for_each(Fn&& fn) {
        fn("enc1", enc1);
        fn("enc2", enc2);
        fn("bott", bott);
        fn("dec1", dec1);
        fn("dec2", dec2);
        fn("head", head);
    }
    template <typename Fn>
    void for_each(Fn&& fn) const {
        fn("enc1", enc1);
        fn("enc2", enc2);
        fn("bott", bott);
        fn("dec1", dec1);
        fn("dec2", dec2);
        fn("head", head);
    }

    std::size_t count() const {
        std::size_t n = 0;
        for_each([&](const char*, const ConvParam& p) { n += p.w.size() + p.b.size(); });
        return n;
    }

    // He-style scaled uniform init from the pinned generator; biases zero.
    static SegmenterParams init(Pcg32& rng) {
        SegmenterParams params;
        params.for_each([&](const char*, ConvParam& p) {
            double limit = std::sqrt(6.0 / (static_cast<double>(p.in_c) * p.k * p.k));
            for (auto& v : p.w) v = static_cast<float>(rng.uniform(-limit, limit));
        });
        return params;
    }
};

// Per-parameter gradients, double precision.
struct SegmenterGrads {
    std::vector<std::vector<double>> w;  // one per conv, [w..., b...]

    static SegmenterGrads zeros(const SegmenterParams& p) {
        SegmenterGrads g;
        p.for_each([&](const char*, const ConvParam& cp) { g.w.emplace_back(cp.w.size() + cp.b.size(), 0.0); });
        return g;
    }
    void add_scaled(const SegmenterGrads& other, double s) {
        for (std::size_t t = 0; t < w.size(); ++t) {
            for (std::size_t i = 0; i < w[t].size(); ++i) w[t][i] += s * other.w[t][i];
        }
    }
};

namespace nn {

struct Tensor3 {
    int ch = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor3() = default;
    Tensor3(int c, int hh, int ww) : ch(c), h(hh), w(ww), v(static_cast<std::size_t>(c) * hh * ww, 0.0) {}
    double& at(int c, int r, int col) { return v[(static_cast<std::size_t>(c) * h + r) * w + col]; }
    double at(int c, int r, int col) const { return v[(static_cast<std::size_t>(c) * h + r) * w + col]; }
};

inline Tensor3 conv(const Tensor3& in, const ConvParam& p) {
    Tensor3 out(p.out_c, in.h, in.w);
    int half = p.k / 2;
    for (int o = 0; o < p.out_c; ++o) {
        for (int r = 0; r < in.h; ++r) {
            for (int c = 0; c < in.w; ++c) {
                double acc = p.b[o];
                for (int i = 0; i < p.in_c; ++i) {
                    for (int kr = 0; kr < p.k; ++kr) {
                        int rr = r + kr - half;
                        if (rr < 0 || rr >= in.h) continue;
                        for (int kc = 0; kc < p.k; ++kc) {
                            int cc = c + kc - half;
                            if (cc < 0 || cc >= in.w) continue;
                            acc += p.wt(o, i, kr, kc) * in.at(i, rr, cc);
                        }
                    }
                }
                out.at(o, r, c) = acc;
            }
        }
    }
    return out;
}

// dOut -> (dIn, dW appended into grad = [w..., b...])
inline Tensor3 conv_backward(const Tensor3& in, const ConvParam& p, const Tensor3& dout, std::vector<double>& grad) {
    Tensor3 din(in.ch, in.h, in.w);
    int half = p.k / 2;
    std::size_t wsize = p.w.size();
    for (int o = 0; o < p.out_c; ++o) {
        for (int r = 0; r < in.h; ++r) {
            for (int c = 0; c < in.w; ++c) {
                double g = dout.at(o, r, c);
                if (g == 0.0) continue;
                grad[wsize + o] += g;
                for (int i = 0; i < p.in_c; ++i) {
                    for (int kr = 0; kr < p.k; ++kr) {
                        int rr = r + kr - half;
                        if (rr < 0 || rr >= in.h) continue;
                        for (int kc = 0; kc < p.k; ++kc) {
                            int cc = c + kc - half;
                            if (cc < 0 || cc >= in.w) continue;
                            std::size_t widx = ((static_cast<std::size_t>(o) * p.in_c + i) * p.k + kr) * p.k + kc;
                            grad[widx] += g * in.at(i, rr, cc);
                            din.at(i, rr, cc) += g * p.w[widx];
                        }
                    }
                }
            }
        }
    }
    return din;
}

inline void relu_inplace(Tensor3& t) {
    for (auto& x : t.v) x = x > 0.0 ? x : 0.0;
}

// dPre = dPost masked by the post-activation sign.
inline void relu_backward_inplace(Tensor3& d, const Tensor3& activated) {
    for (std::size_t i = 0; i < d.v.size(); ++i) {
        if (activated.v[i] <= 0.0) d.v[i] = 0.0;
    }
}

inline Tensor3 maxpool2(const Tensor3& in, std::vector<std::size_t>& argmax) {
    Tensor3 out(in.ch, in.h / 2, in.w / 2);
    argmax.assign(out.v.size(), 0);
    std::size_t pos = 0;
    for (int c = 0; c < in.ch; ++c) {
        for (int r = 0; r < out.h; ++r) {
            for (int col = 0; col < out.w; ++col, ++pos) {
                double best = -1e300;
                std::size_t best_idx = 0;
                for (int dr = 0; dr < 2; ++dr) {
                    for (int dc = 0; dc < 2; ++dc) {
                        std::size_t idx = (static_cast<std::size_t>(c) * in.h + 2 * r + dr) * in.w + 2 * col + dc;
                        if (in.v[idx] > best) {
                            best = in.v[idx];
                            best_idx = idx;
                        }
                    }
                }
                out.v[pos] = best;
                argmax[pos] = best_idx;
            }
        }
    }
    return out;
}

inline Tensor3 maxpool2_backward(const Tensor3& dout, const std::vector<std::size_t>& argmax, int in_h, int in_w) {
    Tensor3 din(dout.ch, in_h, in_w);
    for (std::size_t i = 0; i < dout.v.size(); ++i) din.v[argmax[i]] += dout.v[i];
    return din;
}

inline Tensor3 upsample2(const Tensor3& in) {
    Tensor3 out(in.ch, in.h * 2, in.w * 2);
    for (int c = 0; c < in.ch; ++c) {
        for (int r = 0; r < out.h; ++r) {
            for (int col = 0; col < out.w; ++col) out.at(c, r, col) = in.at(c, r / 2, col / 2);
        }
    }
    return out;
}

inline Tensor3 upsample2_backward(const Tensor3& dout) {
    Tensor3 din(dout.ch, dout.h / 2, dout.w / 2);
    for (int c = 0; c < dout.ch; ++c) {
        for (int r = 0; r < dout.h; ++r) {
            for (int col = 0; col < dout.w; ++col) din.at(c, r / 2, col / 2) += dout.at(c, r, col);
        }
    }
    return din;
}

inline Tensor3 concat(const Tensor3& a, const Tensor3& b) {
    Tensor3 out(a.ch + b.ch, a.h, a.w);
    std::copy(a.v.begin(), a.v.end(), out.v.begin());
    std::copy(b.v.begin(), b.v.end(), out.v.begin() + static_cast<std::ptrdiff_t>(a.v.size()));
    return out;
}

inline void split_grad(const Tensor3& d, Tensor3& da, Tensor3& db) {
    std::copy(d.v.begin(), d.v.begin() + static_cast<std::ptrdiff_t>(da.v.size()), da.v.begin());
    std::copy(d.v.begin() + static_cast<std::ptrdiff_t>(da.v.size()), d.v.end(), db.v.begin());
}

}  // namespace nn

struct ForwardCache {
    nn::Tensor3 x, a1, p1, a2, p2, z3, c1, a4, c2, a5, logits, probs;
    std::vector<std::size_t> argmax1, argmax2;
};

// Full forward pass; probs holds the per-pixel softmax over the two classes.
inline ForwardCache forward_cached(const SegmenterParams& params, const Image2D& image) {
    if (image.height % 4 != 0 || image.width % 4 != 0) {
        throw ShapeError("forward: image dims must be divisible by 4");
    }
    ForwardCache fc;
    fc.x = nn::Tensor3(1, image.height, image.width);
    for (std::size_t i = 0; i < image.data.size(); ++i) fc.x.v[i] = image.data[i];

    fc.a1 = nn::conv(fc.x, params.enc1);
    nn::relu_inplace(fc.a1);
    fc.p1 = nn::maxpool2(fc.a1, fc.argmax1);
    fc.a2 = nn::conv(fc.p1, params.enc2);
    nn::relu_inplace(fc.a2);
    fc.p2 = nn::maxpool2(fc.a2, fc.argmax2);
    fc.z3 = nn::conv(fc.p2, params.bott);
    fc.c1 = nn::concat(nn::upsample2(fc.z3), fc.a2);
    fc.a4 = nn::conv(fc.c1, params.dec1);
    nn::relu_inplace(fc.a4);
    fc.c2 = nn::concat(nn::upsample2(fc.a4), fc.a1);
    fc.a5 = nn::conv(fc.c2, params.dec2);
    nn::relu_inplace(fc.a5);
    fc.logits = nn::conv(fc.a5, params.head);

    fc.probs = nn::Tensor3(2, image.height, image.width);
    std::size_t npix = static_cast<std::size_t>(image.height) * image.width;
    for (std::size_t i = 0; i < npix; ++i) {
        double z0 = fc.logits.v[i], z1 = fc.logits.v[npix + i];
        double m = std::max(z0, z1);
        double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
        fc.probs.v[i] = e0 / (e0 + e1);
        fc.probs.v[npix + i] = e1 / (e0 + e1);
    }
    return fc;
}

// Foreground (class-1) probabilities, row-major.
inline std::vector<double> forward(const SegmenterParams& params, const Image2D& image) {
    ForwardCache fc = forward_cached(params, image);
    std::size_t npix = static_cast<std::size_t>(image.height) * image.width;
    return std::vector<double>(fc.probs.v.begin() + static_cast<std::ptrdiff_t>(npix), fc.probs.v.end());
}

inline constexpr double kDiceSmooth = 1.0;

// loss = 1 - (2 sum(p*g) + s) / (sum(p^2) + sum(g^2) + s), s = 1.
inline double soft_dice_loss(const std::vector<double>& probs_fg, const MaskGrid& target) {
    if (probs_fg.size() != target.data.size()) throw ShapeError("soft_dice_loss: shape mismatch");
    double inter = 0.0, psum = 0.0, gsum = 0.0;
    for (std::size_t i = 0; i < probs_fg.size(); ++i) {
        double p = probs_fg[i], g = target.data[i];
        inter += p * g;
        psum += p * p;
        gsum += g * g;
    }
    return 1.0 - (2.0 * inter + kDiceSmooth) / (psum + gsum + kDiceSmooth);
}

// Analytic gradients of soft_dice_loss(forward(params, image)) w.r.t. every
// parameter; also reports the loss.
inline SegmenterGrads backward(const SegmenterParams& params, const Image2D& image, const MaskGrid& target,
                               double* loss_out = nullptr) {
    ForwardCache fc = forward_cached(params, image);
    std::size_t npix = static_cast<std::size_t>(image.height) * image.width;

    double inter = 0.0, psum = 0.0, gsum = 0.0;
    for (std::size_t i = 0; i < npix; ++i) {
        double p = fc.probs.v[npix + i], g = target.data[i];
        inter += p * g;
        psum += p * p;
        gsum += g * g;
    }
    double num = 2.0 * inter + kDiceSmooth;
    double den = psum + gsum + kDiceSmooth;
    if (loss_out) *loss_out = 1.0 - num / den;

    // dL/dp_i = -(2 g_i den - num * 2 p_i) / den^2, then through the softmax:
    // dL/dz1 = dL/dp * p (1 - p), dL/dz0 = -dL/dz1.
    nn::Tensor3 dlogits(2, image.height, image.width);
    for (std::size_t i = 0; i < npix; ++i) {
        double p = fc.probs.v[npix + i];
        double g = target.data[i];
        double dldp = -(2.0 * g * den - num * 2.0 * p) / (den * den);
        double dz1 = dldp * p * (1.0 - p);
        dlogits.v[npix + i] = dz1;
        dlogits.v[i] = -dz1;
    }

    SegmenterGrads grads = SegmenterGrads::zeros(params);
    // tensor order matches for_each: enc1, enc2, bott, dec1, dec2, head
    nn::Tensor3 da5 = nn::conv_backward(fc.a5, params.head, dlogits, grads.w[5]);
    nn::relu_backward_inplace(da5, fc.a5);
    nn::Tensor3 dc2 = nn::conv_backward(fc.c2, params.dec2, da5, grads.w[4]);
    nn::Tensor3 du2(8, fc.c2.h, fc.c2.w), da1_skip(8, fc.c2.h, fc.c2.w);
    nn::split_grad(dc2, du2, da1_skip);
    nn::Tensor3 da4 = nn::upsample2_backward(du2);
    nn::relu_backward_inplace(da4, fc.a4);
    nn::Tensor3 dc1 = nn::conv_backward(fc.c1, params.dec1, da4, grads.w[3]);
    nn::Tensor3 du1(16, fc.c1.h, fc.c1.w), da2_skip(16, fc.c1.h, fc.c1.w);
    nn::split_grad(dc1, du1, da2_skip);
    nn::Tensor3 dz3 = nn::upsample2_backward(du1);
    nn::Tensor3 dp2 = nn::conv_backward(fc.p2, params.bott, dz3, grads.w[2]);
    nn::Tensor3 da2 = nn::maxpool2_backward(dp2, fc.argmax2, fc.a2.h, fc.a2.w);
    for (std::size_t i = 0; i < da2.v.size(); ++i) da2.v[i] += da2_skip.v[i];
    nn::relu_backward_inplace(da2, fc.a2);
    nn::Tensor3 dp1 = nn::conv_backward(fc.p1, params.enc2, da2, grads.w[1]);
    nn::Tensor3 da1 = nn::maxpool2_backward(dp1, fc.argmax1, fc.a1.h, fc.a1.w);
    for (std::size_t i = 0; i < da1.v.size(); ++i) da1.v[i] += da1_skip.v[i];
    nn::relu_backward_inplace(da1, fc.a1);
    nn::conv_backward(fc.x, params.enc1, da1, grads.w[0]);
    return grads;
}

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long t = 0;
    std::vector<std::vector<double>> m, v;

    static AdamState init(const SegmenterParams& params, double lr) {
        AdamState st;
        st.lr = lr;
        params.for_each([&](const char*, const ConvParam& p) {
            st.m.emplace_back(p.w.size() + p.b.size(), 0.0);
            st.v.emplace_back(p.w.size() + p.b.size(), 0.0);
        });
        return st;
    }
};

// Standard bias-corrected ADAM update.
inline void adam_step(SegmenterParams& params, const SegmenterGrads& grads, AdamState& st) {
    st.t += 1;
    double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
    double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
    std::size_t tensor = 0;
    params.for_each([&](const char*, ConvParam& p) {
        auto& m = st.m[tensor];
        auto& v = st.v[tensor];
        const auto& g = grads.w[tensor];
        std::size_t wsize = p.w.size();
        for (std::size_t i = 0; i < g.size(); ++i) {
            m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * g[i];
            v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * g[i] * g[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            double delta = st.lr * mhat / (std::sqrt(vhat) + st.epsilon);
            if (i < wsize) p.w[i] = static_cast<float>(p.w[i] - delta);
            else p.b[i - wsize] = static_cast<float>(p.b[i - wsize] - delta);
        }
        ++tensor;
    });
}

// Validation-loss early stopping: stop after `patience` consecutive epochs
// with no improvement below best - min_delta.
class EarlyStopper {
public:
    EarlyStopper(int patience, double min_delta = 1e-6) : patience_(patience), min_delta_(min_delta) {}

    // Returns true when training should stop after this epoch (1-indexed).
    bool observe(int epoch, double val_loss) {
        if (val_loss < best_loss_ - min_delta_) {
            best_loss_ = val_loss;
            best_epoch_ = epoch;
            since_best_ = 0;
        } else {
            ++since_best_;
        }
        return since_best_ >= patience_;
    }

    int best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_loss_; }

private:
    int patience_;
    double min_delta_;
    double best_loss_ = 1e300;
    int best_epoch_ = 0;
    int since_best_ = 0;
};

struct TrainCase {
    std::string case_id;
    Image2D image;
    MaskGrid target;
    std::optional<Severity> severity;
};

struct TrainConfig {
    int max_epochs = 30;
    int patience = 7;
    int batch_size = 8;  // supported range 4-16
    double lr = 1e-3;
    OrderingStrategy strategy = OrderingStrategy::Shuffled;
    std::uint64_t seed = 0;

    void validate() const {
        if (max_epochs < 1) throw ValidationError("max_epochs must be >= 1");
        if (batch_size < 4 || batch_size > 16) throw ValidationError("batch_size must be in [4, 16]");
    }
};

struct TrainLog {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> wall_time_s;
    int stopped_epoch = 0;
    int best_epoch = 0;
};

inline nlohmann::json trainlog_to_json(const TrainLog& log) {
    return {{"train_loss", log.train_loss},
            {"val_loss", log.val_loss},
            {"wall_time_s", log.wall_time_s},
            {"stopped_epoch", log.stopped_epoch},
            {"best_epoch", log.best_epoch}};
}

// Optional per-presentation hook, e.g. augmentation; invoked on a copy of the
// training case each time it is presented.
using PresentHook = std::function<void(Image2D&, MaskGrid&, int epoch, int case_index)>;

// Trains up to cfg.max_epochs with early stopping and returns the parameters
// from the best validation epoch. Deterministic given (cfg.seed, strategy).
inline std::pair<SegmenterParams, TrainLog> fit(const std::vector<TrainCase>& train_cases,
                                                const std::vector<TrainCase>& val_cases, const TrainConfig& cfg,
                                                const PresentHook& hook = nullptr) {
    cfg.validate();
    if (train_cases.empty() || val_cases.empty()) throw ValidationError("fit: empty train or val set");

    Pcg32 init_rng = Pcg32::derive(cfg.seed, 0x5e6);
    SegmenterParams params = SegmenterParams::init(init_rng);
    SegmenterParams best_params = params;
    AdamState adam = AdamState::init(params, cfg.lr);
    EarlyStopper stopper(cfg.patience);
    TrainLog log;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        std::vector<int> order = order_epoch(train_cases, cfg.strategy, epoch, cfg.seed);

        double epoch_loss = 0.0;
        std::size_t n_seen = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t end = std::min(order.size(), start + cfg.batch_size);
            SegmenterGrads batch = SegmenterGrads::zeros(params);
            double scale = 1.0 / static_cast<double>(end - start);
            for (std::size_t i = start; i < end; ++i) {
                const TrainCase& tc = train_cases[order[i]];
                double loss = 0.0;
                SegmenterGrads g;
                if (hook) {
                    Image2D img = tc.image;
                    MaskGrid msk = tc.target;
                    hook(img, msk, epoch, order[i]);
                    g = backward(params, img, msk, &loss);
                } else {
                    g = backward(params, tc.image, tc.target, &loss);
                }
                batch.add_scaled(g, scale);
                epoch_loss += loss;
                ++n_seen;
            }
            adam_step(params, batch, adam);
        }
        log.train_loss.push_back(epoch_loss / static_cast<double>(n_seen));

        double val = 0.0;
        for (const auto& vc : val_cases) val += soft_dice_loss(forward(params, vc.image), vc.target);
        val /= static_cast<double>(val_cases.size());
        log.val_loss.push_back(val);
        log.wall_time_s.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

        bool stop = stopper.observe(epoch, val);
        if (stopper.best_epoch() == epoch) best_params = params;
        log.stopped_epoch = epoch;
        if (stop) break;
    }
    log.best_epoch = stopper.best_epoch();
    return {std::move(best_params), std::move(log)};
}

// Argmax over the two channels; ties go to background.
inline MaskGrid predict_mask(const SegmenterParams& params, const Image2D& image) {
    std::vector<double> fg = forward(params, image);
    MaskGrid out(image.height, image.width);
    for (std::size_t i = 0; i < fg.size(); ++i) out.data[i] = fg[i] > 0.5 ? 1 : 0;
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoints: one MRT1 f32 tensor per parameter plus a JSON index.

inline void save_checkpoint(const std::filesystem::path& dir, const SegmenterParams& params) {
    std::filesystem::create_directories(dir);
    nlohmann::json index;
    index["format_version"] = 1;
    index["tensors"] = nlohmann::json::array();
    params.for_each([&](const char* name, const ConvParam& p) {
        Image2D wimg(p.out_c, p.in_c * p.k * p.k);
        for (std::size_t i = 0; i < p.w.size(); ++i) wimg.data[i] = p.w[i];
        Image2D bimg(1, p.out_c);
        for (std::size_t i = 0; i < p.b.size(); ++i) bimg.data[i] = p.b[i];
        std::string wfile = std::string(name) + "_w.mrt1";
        std::string bfile = std::string(name) + "_b.mrt1";
        write_tensor(dir / wfile, wimg);
        write_tensor(dir / bfile, bimg);
        index["tensors"].push_back({{"name", name},
                                    {"out_c", p.out_c},
                                    {"in_c", p.in_c},
                                    {"k", p.k},
                                    {"weights", wfile},
                                    {"bias", bfile}});
    });
    std::ofstream out(dir / "index.json", std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint index in " + dir.string());
    out << index.dump(2) << "\n";
}

inline SegmenterParams load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream in(dir / "index.json", std::ios::binary);
    if (!in) throw IoError("cannot read checkpoint index in " + dir.string());
    nlohmann::json index;
    in >> index;
    SegmenterParams params;
    params.for_each([&](const char* name, ConvParam& p) {
        const nlohmann::json* entry = nullptr;
        for (const auto& t : index.at("tensors")) {
            if (t.at("name") == name) entry = &t;
        }
        if (!entry) throw ValidationError("checkpoint missing tensor " + std::string(name));
        if ((*entry)["out_c"] != p.out_c || (*entry)["in_c"] != p.in_c || (*entry)["k"] != p.k) {
            throw ValidationError("checkpoint tensor " + std::string(name) + " has wrong topology");
        }
        Image2D wimg = read_image(dir / (*entry)["weights"].get<std::string>());
        Image2D bimg = read_image(dir / (*entry)["bias"].get<std::string>());
        if (wimg.data.size() != p.w.size() || bimg.data.size() != p.b.size()) {
            throw ValidationError("checkpoint tensor " + std::string(name) + " has wrong size");
        }
        std::copy(wimg.data.begin(), wimg.data.end(), p.w.begin());
        std::copy(bimg.data.begin(), bimg.data.end(), p.b.begin());
    });
    return params;
}

}  // namespace mrseg
