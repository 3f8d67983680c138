#include "aspire/model.hpp"

#include <cmath>

#include "aspire/common.hpp"

namespace aspire {

namespace {

// Activations are channel-major matrices (C, H*W), position p = y*W + x.

void im2col(const Eigen::MatrixXf& in, int h, int w, Eigen::MatrixXf& col) {
    const int c_in = static_cast<int>(in.rows());
    col.setZero(c_in * 9, h * w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int p = y * w + x;
            for (int ky = 0; ky < 3; ++ky) {
                const int yy = y + ky - 1;
                if (yy < 0 || yy >= h) continue;
                for (int kx = 0; kx < 3; ++kx) {
                    const int xx = x + kx - 1;
                    if (xx < 0 || xx >= w) continue;
                    const int pin = yy * w + xx;
                    for (int c = 0; c < c_in; ++c)
                        col(c * 9 + ky * 3 + kx, p) = in(c, pin);
                }
            }
        }
    }
}

void col2im(const Eigen::MatrixXf& dcol, int h, int w, Eigen::MatrixXf& din) {
    const int c_in = static_cast<int>(dcol.rows()) / 9;
    din.setZero(c_in, h * w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int p = y * w + x;
            for (int ky = 0; ky < 3; ++ky) {
                const int yy = y + ky - 1;
                if (yy < 0 || yy >= h) continue;
                for (int kx = 0; kx < 3; ++kx) {
                    const int xx = x + kx - 1;
                    if (xx < 0 || xx >= w) continue;
                    const int pin = yy * w + xx;
                    for (int c = 0; c < c_in; ++c)
                        din(c, pin) += dcol(c * 9 + ky * 3 + kx, p);
                }
            }
        }
    }
}

void maxpool2(const Eigen::MatrixXf& in, int h, int w, Eigen::MatrixXf& out,
              std::vector<int>& argmax) {
    const int channels = static_cast<int>(in.rows());
    const int ho = h / 2, wo = w / 2;
    out.resize(channels, ho * wo);
    argmax.assign(static_cast<std::size_t>(channels) * ho * wo, 0);
    for (int c = 0; c < channels; ++c) {
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                float best = -1e30f;
                int best_p = 0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const int p = (oy * 2 + dy) * w + (ox * 2 + dx);
                        if (in(c, p) > best) {
                            best = in(c, p);
                            best_p = p;
                        }
                    }
                const int po = oy * wo + ox;
                out(c, po) = best;
                argmax[static_cast<std::size_t>(c) * ho * wo + po] = best_p;
            }
        }
    }
}

void unpool2(const Eigen::MatrixXf& dout, const std::vector<int>& argmax, int h, int w,
             Eigen::MatrixXf& din) {
    const int channels = static_cast<int>(dout.rows());
    const int ho = h / 2, wo = w / 2;
    din.setZero(channels, h * w);
    for (int c = 0; c < channels; ++c)
        for (int po = 0; po < ho * wo; ++po)
            din(c, argmax[static_cast<std::size_t>(c) * ho * wo + po]) += dout(c, po);
}

Eigen::VectorXf softmax(const Eigen::VectorXf& logits) {
    Eigen::VectorXf z = logits.array() - logits.maxCoeff();
    Eigen::VectorXf e = z.array().exp();
    return e / e.sum();
}

Eigen::MatrixXf init_matrix(int rows, int cols, double std, Rng& rng) {
    Eigen::MatrixXf m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = static_cast<float>(rng.normal() * std);
    return m;
}

}  // namespace

struct ConvNet::Cache {
    Eigen::MatrixXf x0, col1, a1, p1, col2, a2, p2, dcol2, d1, d2, dp1;
    Eigen::VectorXf feat, logits, probs;
    std::vector<int> idx1, idx2;
};

ConvNet::ConvNet(const NetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg.height % 4 != 0 || cfg.width % 4 != 0)
        throw ConfigError("model input size must be divisible by 4");
    Rng rng(seed ^ fnv1a64("convnet-init"));
    w1_ = init_matrix(cfg.conv1, cfg.channels * 9, std::sqrt(2.0 / (cfg.channels * 9)), rng);
    b1_ = Eigen::VectorXf::Zero(cfg.conv1);
    w2_ = init_matrix(cfg.conv2, cfg.conv1 * 9, std::sqrt(2.0 / (cfg.conv1 * 9)), rng);
    b2_ = Eigen::VectorXf::Zero(cfg.conv2);
    wfc_ = init_matrix(cfg.n_classes, cfg.feature_dim(), std::sqrt(1.0 / cfg.feature_dim()), rng);
    bfc_ = Eigen::VectorXf::Zero(cfg.n_classes);
}

void ConvNet::reinit_head(std::uint64_t seed) {
    Rng rng(seed ^ fnv1a64("convnet-head"));
    wfc_ = init_matrix(cfg_.n_classes, cfg_.feature_dim(), std::sqrt(1.0 / cfg_.feature_dim()), rng);
    bfc_ = Eigen::VectorXf::Zero(cfg_.n_classes);
}

void ConvNet::forward(const float* image, Cache& cache) const {
    const int h = cfg_.height, w = cfg_.width, hw = h * w;

    // HWC buffer -> (C, HW)
    cache.x0.resize(cfg_.channels, hw);
    for (int p = 0; p < hw; ++p)
        for (int c = 0; c < cfg_.channels; ++c)
            cache.x0(c, p) = image[p * cfg_.channels + c];

    im2col(cache.x0, h, w, cache.col1);
    cache.a1 = (w1_ * cache.col1).colwise() + b1_;
    cache.a1 = cache.a1.cwiseMax(0.0f);
    maxpool2(cache.a1, h, w, cache.p1, cache.idx1);

    const int h2 = h / 2, w2 = w / 2;
    im2col(cache.p1, h2, w2, cache.col2);
    cache.a2 = (w2_ * cache.col2).colwise() + b2_;
    cache.a2 = cache.a2.cwiseMax(0.0f);
    maxpool2(cache.a2, h2, w2, cache.p2, cache.idx2);

    cache.feat = Eigen::Map<const Eigen::VectorXf>(cache.p2.data(), cache.p2.size());
    cache.logits = wfc_ * cache.feat + bfc_;
    cache.probs = softmax(cache.logits);
}

Eigen::VectorXf ConvNet::predict_proba(const float* image) const {
    Cache cache;
    forward(image, cache);
    return cache.probs;
}

std::vector<double> ConvNet::sample_losses(const std::vector<const float*>& images,
                                           const std::vector<int>& labels) const {
    Cache cache;
    std::vector<double> out(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        forward(images[i], cache);
        out[i] = -std::log(std::max(1e-12f, cache.probs(labels[i])));
    }
    return out;
}

double ConvNet::train_batch(const std::vector<const float*>& images,
                            const std::vector<int>& labels, const std::vector<float>& weights,
                            float lr, float weight_decay) {
    const int h = cfg_.height, w = cfg_.width;
    const int h2 = h / 2, w2 = w / 2;

    Eigen::MatrixXf gw1 = Eigen::MatrixXf::Zero(w1_.rows(), w1_.cols());
    Eigen::MatrixXf gw2 = Eigen::MatrixXf::Zero(w2_.rows(), w2_.cols());
    Eigen::MatrixXf gwfc = Eigen::MatrixXf::Zero(wfc_.rows(), wfc_.cols());
    Eigen::VectorXf gb1 = Eigen::VectorXf::Zero(b1_.size());
    Eigen::VectorXf gb2 = Eigen::VectorXf::Zero(b2_.size());
    Eigen::VectorXf gbfc = Eigen::VectorXf::Zero(bfc_.size());

    Cache cache;
    double loss = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        forward(images[i], cache);
        const float wi = weights[i];
        loss += wi * -std::log(std::max(1e-12f, cache.probs(labels[i])));

        Eigen::VectorXf dlogits = cache.probs;
        dlogits(labels[i]) -= 1.0f;
        dlogits *= wi;

        gwfc.noalias() += dlogits * cache.feat.transpose();
        gbfc += dlogits;

        if (!features_frozen_) {
            Eigen::VectorXf dfeat = wfc_.transpose() * dlogits;
            Eigen::Map<const Eigen::MatrixXf> dp2(dfeat.data(), cache.p2.rows(), cache.p2.cols());

            unpool2(dp2, cache.idx2, h2, w2, cache.d2);
            cache.d2 = cache.d2.cwiseProduct((cache.a2.array() > 0.0f).cast<float>().matrix());

            gw2.noalias() += cache.d2 * cache.col2.transpose();
            gb2 += cache.d2.rowwise().sum();

            cache.dcol2.noalias() = w2_.transpose() * cache.d2;
            col2im(cache.dcol2, h2, w2, cache.dp1);

            unpool2(cache.dp1, cache.idx1, h, w, cache.d1);
            cache.d1 = cache.d1.cwiseProduct((cache.a1.array() > 0.0f).cast<float>().matrix());

            gw1.noalias() += cache.d1 * cache.col1.transpose();
            gb1 += cache.d1.rowwise().sum();
        }
    }

    wfc_ -= lr * (gwfc + weight_decay * wfc_);
    bfc_ -= lr * gbfc;
    if (!features_frozen_) {
        w1_ -= lr * (gw1 + weight_decay * w1_);
        b1_ -= lr * gb1;
        w2_ -= lr * (gw2 + weight_decay * w2_);
        b2_ -= lr * gb2;
    }
    return loss;
}

std::map<std::string, std::vector<float>> ConvNet::named_params() const {
    auto flat = [](const Eigen::MatrixXf& m) {
        return std::vector<float>(m.data(), m.data() + m.size());
    };
    auto flatv = [](const Eigen::VectorXf& v) {
        return std::vector<float>(v.data(), v.data() + v.size());
    };
    return {{"conv1.weight", flat(w1_)}, {"conv1.bias", flatv(b1_)},
            {"conv2.weight", flat(w2_)}, {"conv2.bias", flatv(b2_)},
            {"head.weight", flat(wfc_)}, {"head.bias", flatv(bfc_)}};
}

void ConvNet::set_params(const std::map<std::string, std::vector<float>>& params) {
    auto fill = [&](const char* name, Eigen::MatrixXf& m) {
        const auto& v = params.at(name);
        if (static_cast<Eigen::Index>(v.size()) != m.size())
            throw DataError(std::string("parameter size mismatch for ") + name);
        std::copy(v.begin(), v.end(), m.data());
    };
    auto fillv = [&](const char* name, Eigen::VectorXf& m) {
        const auto& v = params.at(name);
        if (static_cast<Eigen::Index>(v.size()) != m.size())
            throw DataError(std::string("parameter size mismatch for ") + name);
        std::copy(v.begin(), v.end(), m.data());
    };
    fill("conv1.weight", w1_);
    fillv("conv1.bias", b1_);
    fill("conv2.weight", w2_);
    fillv("conv2.bias", b2_);
    fill("head.weight", wfc_);
    fillv("head.bias", bfc_);
}

std::vector<float> normalize_image(const std::uint8_t* data, std::size_t n) {
    std::vector<float> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(data[i]) / 255.0f - 0.5f;
    return out;
}

}  // namespace aspire
