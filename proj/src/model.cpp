#include "galmad/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "galmad/adam.hpp"
#include "galmad/error.hpp"
#include "galmad/init.hpp"
#include "galmad/kernels.hpp"

namespace galmad {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::GalMad: return "gal-mad";
        case Variant::GatAe: return "gat-ae";
        case Variant::LstmAe: return "lstm-ae";
        case Variant::LinearAe: return "linear-ae";
    }
    return "unknown";
}

Variant parse_variant(const std::string& name) {
    for (Variant v : {Variant::GalMad, Variant::GatAe, Variant::LstmAe, Variant::LinearAe}) {
        if (variant_name(v) == name) return v;
    }
    throw ConfigError("unknown model variant '" + name + "' (expected gal-mad, gat-ae, lstm-ae or linear-ae)");
}

void GalMadConfig::validate() const {
    auto positive = [](std::size_t v, const char* what) {
        if (v == 0) throw ConfigError(std::string(what) + " must be positive");
    };
    positive(n_services, "n_services");
    positive(n_features, "n_features");
    positive(d1, "d1");
    positive(d2, "d2");
    positive(d_z, "d_z");
    positive(encoder_hidden, "encoder_hidden");
    positive(decoder_hidden, "decoder_hidden");
    positive(num_heads, "num_heads");
    positive(batch_size, "batch_size");
    positive(micro_batch, "micro_batch");
    if (window_len < 2) throw ConfigError("window_len must be at least 2");
    if (!std::isfinite(threshold)) throw ConfigError("threshold must be finite");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
    if (!(lr_decay_per_epoch > 0.0 && lr_decay_per_epoch <= 1.0)) {
        throw ConfigError("lr_decay_per_epoch must lie in (0, 1]");
    }
    if (!(negative_slope >= 0.0)) throw ConfigError("negative_slope must be nonnegative");
    if (d1 % num_heads != 0 || d2 % num_heads != 0 || n_features % num_heads != 0) {
        throw ConfigError("GAT widths must be divisible by num_heads");
    }
}

Score score(double loss, double c) {
    const double d = loss - c;
    const double y = d >= 0.0 ? 1.0 / (1.0 + std::exp(-d)) : std::exp(d) / (1.0 + std::exp(d));
    return {y, loss > c};
}

struct GalMad::Parts {
    std::unique_ptr<GatLayer> enc_gat1, enc_gat2, dec_gat1, dec_gat2;
    std::unique_ptr<BiLstm> encoder;
    std::unique_ptr<LstmDecoder> decoder;
    ad::Parameter enc_linear, enc_linear_bias, dec_linear, dec_linear_bias;
    bool has_linear = false;
};

namespace {

GatOptions gat_options(const GalMadConfig& c, std::size_t in, std::size_t out, Activation act) {
    GatOptions o;
    o.in_dim = in;
    o.out_dim = out;
    o.num_heads = c.num_heads;
    o.negative_slope = c.negative_slope;
    o.activation = act;
    return o;
}

bool uses_gat(Variant v) { return v == Variant::GalMad || v == Variant::GatAe; }
bool uses_lstm(Variant v) { return v == Variant::GalMad || v == Variant::LstmAe; }

std::vector<ad::Var> time_slices(ad::Var x, std::size_t rows_per_step) {
    const std::size_t t = x.value().rows() / rows_per_step;
    std::vector<ad::Var> out;
    out.reserve(t);
    for (std::size_t s = 0; s < t; ++s) out.push_back(ad::slice_rows(x, s * rows_per_step, (s + 1) * rows_per_step));
    return out;
}

// [B*n x t*w] -> [t*B*n x w]
ad::Var unflatten_time(ad::Var y, std::size_t t) {
    const std::size_t w = y.value().cols() / t;
    std::vector<ad::Var> steps;
    steps.reserve(t);
    for (std::size_t s = 0; s < t; ++s) steps.push_back(ad::slice_cols(y, s * w, (s + 1) * w));
    return ad::concat_rows(steps);
}

}  // namespace

GalMad::GalMad(GalMadConfig config, Variant variant, Topology topology)
    : config_(config), variant_(variant), topology_(std::move(topology)), parts_(std::make_unique<Parts>()) {
    config_.validate();
    if (topology_.size() != config_.n_services) {
        throw ConfigError("topology has " + std::to_string(topology_.size()) + " services, config expects " +
                          std::to_string(config_.n_services));
    }
    Rng rng(config_.seed);
    const GalMadConfig& c = config_;
    Parts& p = *parts_;
    if (uses_gat(variant_)) {
        p.enc_gat1 = std::make_unique<GatLayer>("encoder.gat1", gat_options(c, c.n_features, c.d1, Activation::Elu), rng);
        p.enc_gat2 = std::make_unique<GatLayer>("encoder.gat2", gat_options(c, c.d1, c.d2, Activation::Elu), rng);
    }
    const std::size_t seq_width = uses_gat(variant_) ? c.d2 : c.n_features;
    if (uses_lstm(variant_)) {
        p.encoder = std::make_unique<BiLstm>("encoder.bilstm", seq_width, c.encoder_hidden, c.d_z, rng);
        p.decoder = std::make_unique<LstmDecoder>("decoder.lstm", c.d_z, c.decoder_hidden, seq_width, rng);
    } else {
        const std::size_t flat = c.window_len * seq_width;
        p.has_linear = true;
        p.enc_linear = ad::Parameter("encoder.linear", glorot_uniform({flat, c.d_z}, flat, c.d_z, rng));
        p.enc_linear_bias = ad::Parameter("encoder.linear_bias", Tensor({c.d_z}, 0.0));
        p.dec_linear = ad::Parameter("decoder.linear", glorot_uniform({c.d_z, flat}, c.d_z, flat, rng));
        p.dec_linear_bias = ad::Parameter("decoder.linear_bias", Tensor({flat}, 0.0));
    }
    if (uses_gat(variant_)) {
        p.dec_gat1 = std::make_unique<GatLayer>("decoder.gat1", gat_options(c, c.d2, c.d1, Activation::Elu), rng);
        p.dec_gat2 =
            std::make_unique<GatLayer>("decoder.gat2", gat_options(c, c.d1, c.n_features, Activation::Identity), rng);
    }
}

GalMad::GalMad(GalMad&&) noexcept = default;
GalMad& GalMad::operator=(GalMad&&) noexcept = default;
GalMad::~GalMad() = default;

std::vector<ad::Parameter*> GalMad::parameters() {
    Parts& p = *parts_;
    std::vector<ad::Parameter*> out;
    auto append = [&out](std::vector<ad::Parameter*> more) { out.insert(out.end(), more.begin(), more.end()); };
    if (p.enc_gat1) append(p.enc_gat1->parameters());
    if (p.enc_gat2) append(p.enc_gat2->parameters());
    if (p.encoder) append(p.encoder->parameters());
    if (p.has_linear) append({&p.enc_linear, &p.enc_linear_bias});
    if (p.decoder) append(p.decoder->parameters());
    if (p.has_linear) append({&p.dec_linear, &p.dec_linear_bias});
    if (p.dec_gat1) append(p.dec_gat1->parameters());
    if (p.dec_gat2) append(p.dec_gat2->parameters());
    return out;
}

ad::Parameter& GalMad::parameter(const std::string& name) {
    for (ad::Parameter* p : parameters()) {
        if (p->name() == name) return *p;
    }
    throw ConfigError("model has no parameter named '" + name + "'");
}

ad::Var GalMad::encode(ad::Var x, std::size_t batch) {
    const std::size_t n = config_.n_services;
    const Tensor& xv = x.value();
    if (batch == 0 || xv.rank() != 2 || xv.cols() != config_.n_features || xv.rows() % (batch * n) != 0 ||
        xv.rows() == 0) {
        throw DimensionError("encode: input " + to_string(xv.shape()) + " is not a batch of " + std::to_string(batch) +
                             " windows over " + std::to_string(n) + " services x " +
                             std::to_string(config_.n_features) + " features");
    }
    const std::size_t t = xv.rows() / (batch * n);
    Parts& p = *parts_;
    ad::Var h = x;
    if (p.enc_gat1) h = p.enc_gat2->forward(p.enc_gat1->forward(h, topology_), topology_);
    std::vector<ad::Var> steps = time_slices(h, batch * n);
    if (p.encoder) return bilstm_encode(*p.encoder, steps);
    if (t != config_.window_len) {
        throw DimensionError("encode: " + variant_name(variant_) + " requires windows of exactly " +
                             std::to_string(config_.window_len) + " steps, got " + std::to_string(t));
    }
    ad::Tape& tape = x.tape();
    return ad::add(ad::matmul(ad::concat_cols(steps), tape.param(p.enc_linear)), tape.param(p.enc_linear_bias));
}

ad::Var GalMad::decode(ad::Var z, std::size_t batch, std::size_t t) {
    const std::size_t n = config_.n_services;
    const Tensor& zv = z.value();
    if (zv.rank() != 2 || zv.rows() != batch * n || zv.cols() != config_.d_z) {
        throw DimensionError("decode: latent " + to_string(zv.shape()) + ", expected [" + std::to_string(batch * n) +
                             " x " + std::to_string(config_.d_z) + "]");
    }
    if (t == 0) throw EmptyInputError("decode: requested zero output steps");
    Parts& p = *parts_;
    ad::Var h;
    if (p.decoder) {
        h = ad::concat_rows(p.decoder->decode(z, t));
    } else {
        if (t != config_.window_len) {
            throw DimensionError("decode: " + variant_name(variant_) + " produces exactly " +
                                 std::to_string(config_.window_len) + " steps, requested " + std::to_string(t));
        }
        ad::Tape& tape = z.tape();
        h = unflatten_time(ad::add(ad::matmul(z, tape.param(p.dec_linear)), tape.param(p.dec_linear_bias)), t);
    }
    if (p.dec_gat1) h = p.dec_gat2->forward(p.dec_gat1->forward(h, topology_), topology_);
    return h;
}

ad::Var GalMad::reconstruct(ad::Var x, std::size_t batch) {
    const std::size_t t = batch == 0 ? 0 : x.value().rows() / (batch * config_.n_services);
    return decode(encode(x, batch), batch, t);
}

void GalMad::check_window(const Tensor& window) const {
    if (window.rank() != 3 || window.dim(1) != config_.n_services || window.dim(2) != config_.n_features ||
        window.dim(0) == 0) {
        throw DimensionError("window " + to_string(window.shape()) + " does not match [t x " +
                             std::to_string(config_.n_services) + " x " + std::to_string(config_.n_features) + "]");
    }
}

Tensor GalMad::encode(const Tensor& window) {
    check_window(window);
    ad::Tape tape(ad::GradMode::Disabled);
    const std::size_t rows = window.dim(0) * window.dim(1);
    return encode(tape.constant(window.reshaped({rows, window.dim(2)})), 1).value();
}

Tensor GalMad::decode(const Tensor& z, std::size_t t) {
    ad::Tape tape(ad::GradMode::Disabled);
    Tensor zz = z.rank() == 1 ? z.reshaped({z.size(), 1}) : z;
    Tensor out = decode(tape.constant(std::move(zz)), 1, t).value();
    return out.reshaped({t, config_.n_services, config_.n_features});
}

Tensor GalMad::reconstruct(const Tensor& window) {
    check_window(window);
    ad::Tape tape(ad::GradMode::Disabled);
    const std::size_t rows = window.dim(0) * window.dim(1);
    return reconstruct(tape.constant(window.reshaped({rows, window.dim(2)})), 1).value().reshaped(window.shape());
}

double GalMad::reconstruction_loss(const Tensor& window) {
    const Tensor recon = reconstruct(window);
    return kernels::sum_sq_diff(recon.data(), window.data()) / static_cast<double>(window.size());
}

std::vector<double> GalMad::window_losses(const std::vector<Tensor>& windows) {
    if (windows.empty()) return {};
    for (const Tensor& w : windows) {
        check_window(w);
        if (w.shape() != windows.front().shape()) throw DimensionError("window_losses: windows differ in shape");
    }
    const std::size_t per = windows.front().size();
    std::vector<double> block(per * windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
        std::copy(windows[i].data().begin(), windows[i].data().end(), block.begin() + i * per);
    }
    const std::size_t t = windows.front().dim(0);
    if (t == config_.window_len) return window_losses(block.data(), windows.size());
    // Variable-length path: one window per pass keeps the chunked fast path fixed-length.
    std::vector<double> out;
    for (const Tensor& w : windows) out.push_back(reconstruction_loss(w));
    return out;
}

std::vector<double> GalMad::window_losses(const double* data, std::size_t count) {
    const std::size_t t = config_.window_len, n = config_.n_services, k = config_.n_features;
    const std::size_t per = t * n * k;
    std::vector<double> losses(count);
    const std::size_t chunk = std::max<std::size_t>(config_.micro_batch, 1);
    for (std::size_t start = 0; start < count; start += chunk) {
        const std::size_t b = std::min(chunk, count - start);
        ad::Tape tape(ad::GradMode::Disabled);
        Tensor packed = pack_windows(data + start * per, b, t, n, k);
        const Tensor recon = reconstruct(tape.constant(packed), b).value();
        const double* r = recon.data().data();
        const double* x = packed.data().data();
        for (std::size_t w = 0; w < b; ++w) {
            double acc = 0.0;
            for (std::size_t s = 0; s < t; ++s) {
                const std::size_t off = ((s * b + w) * n) * k;
                acc += kernels::active().sum_sq_diff(n * k, r + off, x + off);
            }
            losses[start + w] = acc / static_cast<double>(per);
        }
    }
    return losses;
}

Tensor pack_windows(const double* data, std::size_t batch, std::size_t t, std::size_t n, std::size_t k) {
    Tensor out({t * batch * n, k});
    double* dst = out.data().data();
    const std::size_t slab = n * k;
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t s = 0; s < t; ++s) {
            std::copy_n(data + (b * t + s) * slab, slab, dst + (s * batch + b) * slab);
        }
    }
    return out;
}

Tensor pack_windows(const std::vector<Tensor>& windows) {
    if (windows.empty()) throw EmptyInputError("pack_windows: no windows");
    const Shape& shape = windows.front().shape();
    if (shape.size() != 3) throw RankError("pack_windows: windows must be [t x n x k], got " + to_string(shape));
    std::vector<double> block;
    block.reserve(windows.size() * windows.front().size());
    for (const Tensor& w : windows) {
        if (w.shape() != shape) throw DimensionError("pack_windows: windows differ in shape");
        block.insert(block.end(), w.data().begin(), w.data().end());
    }
    return pack_windows(block.data(), windows.size(), shape[0], shape[1], shape[2]);
}

std::vector<Tensor> unpack_windows(const Tensor& packed, std::size_t batch, std::size_t t, std::size_t n) {
    const std::size_t k = packed.cols();
    if (packed.rows() != t * batch * n) {
        throw DimensionError("unpack_windows: " + to_string(packed.shape()) + " is not " + std::to_string(batch) +
                             " windows of " + std::to_string(t) + " x " + std::to_string(n));
    }
    std::vector<Tensor> out;
    const std::size_t slab = n * k;
    for (std::size_t b = 0; b < batch; ++b) {
        Tensor w({t, n, k});
        for (std::size_t s = 0; s < t; ++s) {
            std::copy_n(packed.data().data() + (s * batch + b) * slab, slab, w.data().data() + s * slab);
        }
        out.push_back(std::move(w));
    }
    return out;
}

TrainingLog train(GalMad& model, const std::vector<Tensor>& windows) {
    const GalMadConfig& c = model.config();
    if (windows.empty()) throw InsufficientDataError("train: empty training set");
    const Shape expected{c.window_len, c.n_services, c.n_features};
    for (const Tensor& w : windows) {
        if (w.shape() != expected) {
            throw DimensionError("train: window " + to_string(w.shape()) + ", expected " + to_string(expected));
        }
    }
    const std::size_t per = windows.front().size();
    ad::AdamOptions opts;
    opts.learning_rate = c.learning_rate;
    opts.epoch_decay_factor = c.lr_decay_per_epoch;
    ad::Adam adam(model.parameters(), opts);
    Rng rng(c.seed ^ 0x5DEECE66DULL);

    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> block;
    TrainingLog log;
    for (std::size_t epoch = 0; epoch < c.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.learning_rate = adam.learning_rate();
        double total = 0.0;
        for (std::size_t start = 0, batch_idx = 0; start < order.size(); start += c.batch_size, ++batch_idx) {
            const std::size_t bsz = std::min(c.batch_size, order.size() - start);
            adam.zero_grad();
            for (std::size_t m0 = 0; m0 < bsz; m0 += c.micro_batch) {
                const std::size_t mb = std::min(c.micro_batch, bsz - m0);
                block.resize(mb * per);
                for (std::size_t i = 0; i < mb; ++i) {
                    const Tensor& w = windows[order[start + m0 + i]];
                    std::copy(w.data().begin(), w.data().end(), block.begin() + i * per);
                }
                ad::Tape tape;
                ad::Var x = tape.constant(pack_windows(block.data(), mb, c.window_len, c.n_services, c.n_features));
                ad::Var loss = ad::mse(model.reconstruct(x, mb), x);
                const double value = loss.value().item();
                if (!std::isfinite(value)) {
                    throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                          std::to_string(batch_idx));
                }
                total += value * static_cast<double>(mb);
                tape.backward(ad::scale(loss, static_cast<double>(mb) / static_cast<double>(bsz)), m0 > 0);
            }
            adam.step();
            ++rec.batches;
        }
        adam.zero_grad();
        adam.end_epoch();
        rec.mean_loss = total / static_cast<double>(windows.size());
        log.epochs.push_back(rec);
    }
    return log;
}

std::vector<DetectionResult> detect(GalMad& model, const Tensor& stream, const std::vector<std::int64_t>& timestamps,
                                    std::int64_t step_seconds) {
    const GalMadConfig& c = model.config();
    if (stream.rank() != 3 || stream.dim(1) != c.n_services || stream.dim(2) != c.n_features) {
        throw DimensionError("detect: stream " + to_string(stream.shape()) + " does not match [T x " +
                             std::to_string(c.n_services) + " x " + std::to_string(c.n_features) + "]");
    }
    const std::size_t T = stream.dim(0);
    if (timestamps.size() != T) {
        throw DimensionError("detect: " + std::to_string(timestamps.size()) + " timestamps for " + std::to_string(T) +
                             " steps");
    }
    if (T < c.window_len) {
        throw InsufficientDataError("detect: stream has " + std::to_string(T) + " steps, window needs " +
                                    std::to_string(c.window_len));
    }
    const std::size_t count = T / c.window_len;
    const std::vector<double> losses = model.window_losses(stream.data().data(), count);
    std::vector<DetectionResult> out;
    out.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        DetectionResult r;
        r.window_start = timestamps[w * c.window_len];
        r.window_end = timestamps[(w + 1) * c.window_len - 1] + step_seconds;
        r.loss = losses[w];
        const Score s = score(r.loss, c.threshold);
        r.score = s.y;
        r.is_anomaly = s.is_anomaly;
        out.push_back(r);
    }
    return out;
}

std::vector<DetectionResult> detect(GalMad& model, const Tensor& stream) {
    std::vector<std::int64_t> ts(stream.rank() == 3 ? stream.dim(0) : 0);
    for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = static_cast<std::int64_t>(i) * 5;
    return detect(model, stream, ts, 5);
}

}  // namespace galmad
