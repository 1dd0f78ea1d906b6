#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "galmad/autodiff.hpp"
#include "galmad/graph_attention.hpp"
#include "galmad/temporal.hpp"
#include "galmad/topology.hpp"

namespace galmad {

// Encoder/decoder composition. GalMad is the full model; the others are ablations.
enum class Variant { GalMad, GatAe, LstmAe, LinearAe };

std::string variant_name(Variant v);
// Accepts "gal-mad", "gat-ae", "lstm-ae", "linear-ae". Throws ConfigError otherwise.
Variant parse_variant(const std::string& name);

struct GalMadConfig {
    std::size_t n_services = 12;
    std::size_t n_features = 22;
    std::size_t window_len = 24;
    std::size_t d1 = 16;
    std::size_t d2 = 8;
    std::size_t d_z = 1;
    std::size_t encoder_hidden = 32;
    std::size_t decoder_hidden = 32;
    std::size_t num_heads = 1;
    double negative_slope = 0.2;
    double threshold = 2.0;
    double learning_rate = 0.001;
    std::size_t batch_size = 360;
    double lr_decay_per_epoch = 0.5;
    std::size_t epochs = 20;
    // Windows per forward pass inside one batch; gradients are accumulated
    // across micro-batches, so this affects memory only.
    std::size_t micro_batch = 24;
    std::uint64_t seed = 0;

    // Throws ConfigError on the first violated constraint.
    void validate() const;
};

struct DetectionResult {
    std::int64_t window_start = 0;
    std::int64_t window_end = 0;  // exclusive
    double loss = 0.0;
    double score = 0.0;
    bool is_anomaly = false;
};

struct Score {
    double y = 0.0;
    bool is_anomaly = false;
};

// y = sigmoid(loss - c); anomalous iff loss > c.
Score score(double loss, double c);

/// Autoencoder over windows x [t x n x k].
///
/// A batch of B windows is laid out as one matrix of t*B*n rows, row
/// (s*B + b)*n + j holding service j of window b at step s, so every graph
/// layer sees t*B independent graphs and every recurrent step a
/// [B*n x width] slice.
class GalMad {
public:
    GalMad(GalMadConfig config, Variant variant, Topology topology);
    GalMad(GalMad&&) noexcept;
    GalMad& operator=(GalMad&&) noexcept;
    ~GalMad();

    const GalMadConfig& config() const { return config_; }
    Variant variant() const { return variant_; }
    const Topology& topology() const { return topology_; }

    // Deterministic order; names are unique.
    std::vector<ad::Parameter*> parameters();
    ad::Parameter& parameter(const std::string& name);

    // Recorded forward pass. x: [t*B*n x k] in the batched layout. Returns the reconstruction, same shape.
    ad::Var reconstruct(ad::Var x, std::size_t batch);
    // Z for each (window, service): [B*n x d_z], row b*n + j.
    ad::Var encode(ad::Var x, std::size_t batch);
    ad::Var decode(ad::Var z, std::size_t batch, std::size_t t);

    Tensor encode(const Tensor& window);                // [t x n x k] -> [n x d_z]
    Tensor decode(const Tensor& z, std::size_t t);      // [n x d_z] -> [t x n x k]
    Tensor reconstruct(const Tensor& window);           // [t x n x k] -> [t x n x k]
    double reconstruction_loss(const Tensor& window);

    // Per-window MSE for windows [t x n x k] each, evaluated in chunks without gradients.
    std::vector<double> window_losses(const std::vector<Tensor>& windows);
    // Same for a contiguous block data[B*t*n*k] laid out window-major.
    std::vector<double> window_losses(const double* data, std::size_t count);

private:
    struct Parts;
    void check_window(const Tensor& window) const;

    GalMadConfig config_;
    Variant variant_;
    Topology topology_;
    std::unique_ptr<Parts> parts_;
};

// Window-major [B][t][n][k] -> batched layout [t*B*n x k].
Tensor pack_windows(const double* data, std::size_t batch, std::size_t t, std::size_t n, std::size_t k);
Tensor pack_windows(const std::vector<Tensor>& windows);
// Inverse of pack_windows for a [t*B*n x k] matrix.
std::vector<Tensor> unpack_windows(const Tensor& packed, std::size_t batch, std::size_t t, std::size_t n);

struct EpochRecord {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    double learning_rate = 0.0;
    std::size_t batches = 0;
};

struct TrainingLog {
    std::vector<EpochRecord> epochs;
};

/// Minibatch Adam on mean window MSE. Batches are drawn from a per-epoch
/// shuffle seeded by config.seed; the learning rate is multiplied by
/// config.lr_decay_per_epoch after every epoch. Throws InsufficientDataError
/// for an empty set and DivergenceError naming the epoch and batch on a
/// non-finite loss.
TrainingLog train(GalMad& model, const std::vector<Tensor>& windows);

/// Non-overlapping windows of config.window_len over stream [T x n x k].
/// timestamps holds T instants; window_end is the last instant plus step_seconds.
/// Throws InsufficientDataError for T < t.
std::vector<DetectionResult> detect(GalMad& model, const Tensor& stream, const std::vector<std::int64_t>& timestamps,
                                    std::int64_t step_seconds = 5);
std::vector<DetectionResult> detect(GalMad& model, const Tensor& stream);

}  // namespace galmad
