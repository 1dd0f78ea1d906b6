#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "galmad/schema.hpp"
#include "galmad/telemetry.hpp"
#include "galmad/tensor.hpp"

namespace galmad {

// First differences, negative steps clamped to 0, first element 0.
std::vector<double> rate_convert(const std::vector<double>& cumulative);

// Per-step sum over links; zero links give a zero series of the given length.
std::vector<double> unify_response_times(const std::vector<std::vector<double>>& links, std::size_t length);

struct MovingAverages {
    std::vector<double> short_window;
    std::vector<double> long_window;
};

// Trailing means over short_len and long_len samples; early indices average the available prefix.
MovingAverages moving_averages(const std::vector<double>& series, std::size_t short_len = 60,
                               std::size_t long_len = 360);

struct FeatureOptions {
    bool rate_convert = true;
    std::size_t ma_short = 60;   // 5 min at 5 s
    std::size_t ma_long = 360;   // 30 min at 5 s
    std::size_t max_fill = 2;    // consecutive missing steps forward-filled
    std::int64_t step_seconds = kStepSeconds;
};

/// Regular-grid feature stream [T x n x k]. valid[i] is 0 for steps inside
/// a gap longer than max_fill; windows touching them are dropped.
struct FeatureStream {
    std::vector<std::int64_t> timestamps;
    Tensor values;
    std::vector<std::uint8_t> valid;
    std::size_t length() const { return timestamps.size(); }
};

// Asserts n*k == schema.flat_dim() and services in schema order.
FeatureStream build_features(const Corpus& corpus, const FeatureSchema& schema, const FeatureOptions& options = {});

struct LabeledWindow {
    Tensor tensor;                 // [t x n x k]
    std::string label = "normal";  // anomaly type otherwise
    std::int64_t start_ts = 0;
    std::int64_t end_ts = 0;       // exclusive
    std::size_t start_index = 0;
    bool anomalous() const { return label != "normal"; }
};

/// Non-overlapping windows of length t. A window is anomalous when any of
/// its steps lies in a label interval. Throws InsufficientDataError when
/// the stream is shorter than t.
std::vector<LabeledWindow> make_windows(const FeatureStream& stream, const std::vector<FaultLabel>& labels,
                                        std::size_t t = 24);

struct Ratio {
    double normal = 90.0;
    double anomalous = 10.0;
    // Parses "90:10". Throws ConfigError.
    static Ratio parse(const std::string& text);
    std::string to_string() const;
};

class TrainSet {
public:
    const std::vector<LabeledWindow>& windows() const { return windows_; }
    const std::string& provenance() const { return provenance_; }

private:
    friend struct SplitBuilder;
    friend struct Splits;
    TrainSet() = default;
    std::vector<LabeledWindow> windows_;
    std::string provenance_;
};

struct Splits {
    TrainSet train;
    std::vector<LabeledWindow> test;
    std::size_t test_normal = 0;
    std::size_t test_anomalous = 0;
    std::map<std::string, std::size_t> anomalous_per_type;
};

/// Chronological split of the normal windows (first train_fraction for
/// training). The remaining normal windows are mixed with
/// round(n_test * a / n) anomalous windows drawn evenly across types, the
/// remainder going to the first types in name order; selection within a type
/// is seeded. Throws InsufficientDataError naming the largest feasible ratio
/// when some type runs out.
Splits build_splits(const std::vector<LabeledWindow>& normal,
                    const std::map<std::string, std::vector<LabeledWindow>>& anomalous, const Ratio& ratio,
                    std::uint64_t seed, double train_fraction = 0.8);

/// Per (service, feature) z-score statistics. Zero std is replaced by 1.
class Scaler {
public:
    Scaler() = default;
    Scaler(std::size_t n, std::size_t k, std::vector<double> mean, std::vector<double> stddev, std::string provenance);

    std::size_t n() const { return n_; }
    std::size_t k() const { return k_; }
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& stddev() const { return std_; }
    const std::string& provenance() const { return provenance_; }

    // x: [... x n x k], transformed in place.
    void apply(Tensor& x) const;
    void apply(std::vector<LabeledWindow>& windows) const;
    Tensor applied(const Tensor& x) const;

    friend bool operator==(const Scaler&, const Scaler&) = default;

private:
    std::size_t n_ = 0, k_ = 0;
    std::vector<double> mean_, std_;
    std::string provenance_;
};

// Fits on the normal training split only. Throws EmptyInputError when it is empty.
Scaler fit_scaler(const TrainSet& train);

}  // namespace galmad
