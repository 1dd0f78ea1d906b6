#include "galmad/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "galmad/error.hpp"

namespace galmad {

std::vector<double> rate_convert(const std::vector<double>& cumulative) {
    std::vector<double> out(cumulative.size(), 0.0);
    for (std::size_t i = 1; i < cumulative.size(); ++i) out[i] = std::max(0.0, cumulative[i] - cumulative[i - 1]);
    return out;
}

std::vector<double> unify_response_times(const std::vector<std::vector<double>>& links, std::size_t length) {
    std::vector<double> out(length, 0.0);
    for (const auto& link : links) {
        if (link.size() != length) {
            throw DimensionError("unify_response_times: link of length " + std::to_string(link.size()) +
                                 ", expected " + std::to_string(length));
        }
        for (std::size_t i = 0; i < length; ++i) out[i] += link[i];
    }
    return out;
}

MovingAverages moving_averages(const std::vector<double>& series, std::size_t short_len, std::size_t long_len) {
    if (short_len == 0 || long_len == 0) throw ConfigError("moving average windows must be positive");
    auto trailing = [&series](std::size_t w) {
        std::vector<double> out(series.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < series.size(); ++i) {
            acc += series[i];
            if (i >= w) acc -= series[i - w];
            // Resummed periodically so long streams do not drift.
            if (i % 4096 == 4095) {
                acc = 0.0;
                for (std::size_t j = (i + 1 >= w ? i + 1 - w : 0); j <= i; ++j) acc += series[j];
            }
            out[i] = acc / static_cast<double>(std::min(i + 1, w));
        }
        return out;
    };
    return {trailing(short_len), trailing(long_len)};
}

namespace {

// Per-interval rate between consecutive observed rows, spread over the elapsed intervals.
std::vector<double> observed_rate(const std::vector<double>& cumulative, const std::vector<std::size_t>& rows,
                                  const std::vector<std::size_t>& grid_index) {
    std::vector<double> out(rows.size(), 0.0);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const double d = std::max(0.0, cumulative[rows[r]] - cumulative[rows[r - 1]]);
        out[r] = d / static_cast<double>(grid_index[r] - grid_index[r - 1]);
    }
    return out;
}

}  // namespace

FeatureStream build_features(const Corpus& corpus, const FeatureSchema& schema, const FeatureOptions& options) {
    if (options.step_seconds <= 0) throw ConfigError("step_seconds must be positive");
    const std::size_t n = schema.n(), k = schema.k();
    std::vector<const ServiceTelemetry*> svc;
    for (const std::string& name : schema.services()) svc.push_back(&corpus.at(name));
    const std::vector<std::int64_t>& ts = svc.front()->timestamps;
    for (const auto* s : svc) {
        s->validate();
        if (s->timestamps != ts) throw IngestionError(s->service + ": timestamps misaligned with " + svc[0]->service);
    }
    if (ts.empty()) throw InsufficientDataError("build_features: corpus has no samples");

    // Rows with a missing value anywhere are treated as missing scrapes.
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        bool ok = true;
        for (const auto* s : svc) {
            for (const auto& m : s->metrics) ok = ok && std::isfinite(m[i]);
            if (schema.include_response_times()) {
                for (const auto& r : s->response_times) ok = ok && std::isfinite(r[i]);
            }
        }
        if (ok) rows.push_back(i);
    }
    if (rows.empty()) throw InsufficientDataError("build_features: no complete samples");
    const std::int64_t t0 = ts[rows.front()];
    std::vector<std::size_t> grid_index(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double steps = static_cast<double>(ts[rows[r]] - t0) / static_cast<double>(options.step_seconds);
        grid_index[r] = static_cast<std::size_t>(std::llround(steps));
        if (r > 0 && grid_index[r] <= grid_index[r - 1]) {
            throw IngestionError(svc[0]->service + ": samples closer than the polling step near timestamp " +
                                 std::to_string(ts[rows[r]]));
        }
    }
    const std::size_t T = grid_index.back() + 1;

    FeatureStream out;
    out.timestamps.resize(T);
    for (std::size_t i = 0; i < T; ++i) out.timestamps[i] = t0 + static_cast<std::int64_t>(i) * options.step_seconds;
    out.valid.assign(T, 1);
    std::vector<std::uint8_t> observed(T, 0);
    for (std::size_t g : grid_index) observed[g] = 1;
    for (std::size_t i = 0; i < T;) {
        if (observed[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < T && !observed[j]) ++j;
        if (j - i > options.max_fill) std::fill(out.valid.begin() + i, out.valid.begin() + j, 0);
        i = j;
    }

    out.values = Tensor({T, n, k});
    double* dst = out.values.data().data();
    auto scatter = [&](std::size_t service, std::size_t feature, const std::vector<double>& per_row) {
        double last = 0.0;
        std::size_t r = 0;
        for (std::size_t i = 0; i < T; ++i) {
            if (r < rows.size() && grid_index[r] == i) last = per_row[r++];
            dst[(i * n + service) * k + feature] = last;
        }
    };
    auto gather = [&](const std::vector<double>& series) {
        std::vector<double> v(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) v[r] = series[rows[r]];
        return v;
    };

    for (std::size_t j = 0; j < n; ++j) {
        const ServiceTelemetry& s = *svc[j];
        for (std::size_t m = 0; m < kMetricCount; ++m) {
            const bool rate = options.rate_convert && is_cumulative(m);
            scatter(j, m, rate ? observed_rate(s.metrics[m], rows, grid_index) : gather(s.metrics[m]));
        }
        if (!schema.include_response_times()) continue;
        std::vector<std::vector<double>> links;
        for (const auto& link : s.response_times) {
            links.push_back(options.rate_convert ? observed_rate(link, rows, grid_index) : gather(link));
        }
        scatter(j, metric::response_time, unify_response_times(links, rows.size()));
        std::vector<double> rt(T);
        for (std::size_t i = 0; i < T; ++i) rt[i] = dst[(i * n + j) * k + metric::response_time];
        const MovingAverages ma = moving_averages(rt, options.ma_short, options.ma_long);
        for (std::size_t i = 0; i < T; ++i) {
            dst[(i * n + j) * k + metric::response_time_ma_short] = ma.short_window[i];
            dst[(i * n + j) * k + metric::response_time_ma_long] = ma.long_window[i];
        }
    }
    if (n * k != schema.flat_dim()) throw DimensionError("build_features: per-step dimension mismatch");
    return out;
}

std::vector<LabeledWindow> make_windows(const FeatureStream& stream, const std::vector<FaultLabel>& labels,
                                        std::size_t t) {
    if (t == 0) throw ConfigError("window length must be positive");
    const std::size_t T = stream.length();
    if (T < t) {
        throw InsufficientDataError("make_windows: stream has " + std::to_string(T) + " steps, window needs " +
                                    std::to_string(t));
    }
    const std::size_t n = stream.values.dim(1), k = stream.values.dim(2);
    const std::size_t step = n * k;
    const std::int64_t dt = T > 1 ? stream.timestamps[1] - stream.timestamps[0] : kStepSeconds;
    std::vector<LabeledWindow> out;
    for (std::size_t start = 0; start + t <= T; start += t) {
        bool valid = true;
        for (std::size_t i = start; i < start + t; ++i) valid = valid && stream.valid[i];
        if (!valid) continue;
        LabeledWindow w;
        w.start_index = start;
        w.start_ts = stream.timestamps[start];
        w.end_ts = stream.timestamps[start + t - 1] + dt;
        for (std::size_t i = start; i < start + t && !w.anomalous(); ++i) {
            for (const FaultLabel& l : labels) {
                if (l.contains(stream.timestamps[i])) {
                    w.label = l.anomaly_type;
                    break;
                }
            }
        }
        const double* src = stream.values.data().data() + start * step;
        w.tensor = Tensor({t, n, k}, std::vector<double>(src, src + t * step));
        out.push_back(std::move(w));
    }
    return out;
}

Ratio Ratio::parse(const std::string& text) {
    const auto colon = text.find(':');
    Ratio r;
    try {
        if (colon == std::string::npos) throw std::invalid_argument("no colon");
        std::size_t used = 0;
        r.normal = std::stod(text.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument("trailing");
        const std::string rest = text.substr(colon + 1);
        r.anomalous = std::stod(rest, &used);
        if (used != rest.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ConfigError("invalid ratio '" + text + "' (expected normal:anomalous, e.g. 90:10)");
    }
    if (!(r.normal > 0.0) || !(r.anomalous >= 0.0) || !std::isfinite(r.normal) || !std::isfinite(r.anomalous)) {
        throw ConfigError("invalid ratio '" + text + "': parts must be finite, normal positive");
    }
    return r;
}

std::string Ratio::to_string() const { return format_double(normal) + ":" + format_double(anomalous); }

struct SplitBuilder {
    static TrainSet make(std::vector<LabeledWindow> windows) {
        TrainSet t;
        std::uint64_t h = 1469598103934665603ULL;
        auto mix = [&h](std::uint64_t v) {
            for (int b = 0; b < 8; ++b) {
                h ^= (v >> (8 * b)) & 0xFF;
                h *= 1099511628211ULL;
            }
        };
        mix(windows.size());
        for (const LabeledWindow& w : windows) mix(static_cast<std::uint64_t>(w.start_ts));
        std::ostringstream ss;
        ss << "normal-train:" << windows.size() << ":" << std::hex << h;
        t.windows_ = std::move(windows);
        t.provenance_ = ss.str();
        return t;
    }
};

namespace {

std::vector<std::size_t> quotas(std::size_t total, std::size_t types) {
    std::vector<std::size_t> q(types, types ? total / types : 0);
    for (std::size_t i = 0; i < types && i < total % types; ++i) ++q[i];
    return q;
}

}  // namespace

Splits build_splits(const std::vector<LabeledWindow>& normal,
                    const std::map<std::string, std::vector<LabeledWindow>>& anomalous, const Ratio& ratio,
                    std::uint64_t seed, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
    for (const LabeledWindow& w : normal) {
        if (w.anomalous()) {
            throw ConfigError("build_splits: normal pool contains an anomalous window starting at " +
                              std::to_string(w.start_ts));
        }
    }
    std::vector<LabeledWindow> ordered = normal;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const LabeledWindow& a, const LabeledWindow& b) { return a.start_ts < b.start_ts; });
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(ordered.size())));
    if (n_train == 0 || n_train == ordered.size()) {
        throw InsufficientDataError("build_splits: " + std::to_string(ordered.size()) +
                                    " normal windows cannot be split into train and test");
    }
    Splits s;
    s.train = SplitBuilder::make(std::vector<LabeledWindow>(ordered.begin(), ordered.begin() + n_train));
    s.test.assign(ordered.begin() + n_train, ordered.end());
    s.test_normal = s.test.size();

    std::vector<std::string> types;
    std::vector<std::vector<const LabeledWindow*>> pools;
    for (const auto& [type, windows] : anomalous) {
        std::vector<const LabeledWindow*> pool;
        for (const LabeledWindow& w : windows) {
            if (w.anomalous()) pool.push_back(&w);
        }
        if (pool.empty()) continue;
        types.push_back(type);
        pools.push_back(std::move(pool));
    }
    const auto wanted = static_cast<std::size_t>(
        std::llround(static_cast<double>(s.test_normal) * ratio.anomalous / ratio.normal));
    auto feasible = [&](std::size_t total) {
        if (total == 0) return true;
        if (types.empty()) return false;
        const auto q = quotas(total, types.size());
        for (std::size_t i = 0; i < types.size(); ++i) {
            if (q[i] > pools[i].size()) return false;
        }
        return true;
    };
    if (!feasible(wanted)) {
        std::size_t best = wanted;
        while (best > 0 && !feasible(best)) --best;
        const double frac = 100.0 * static_cast<double>(best) / static_cast<double>(s.test_normal + best);
        std::ostringstream msg;
        msg.precision(4);
        msg << "build_splits: ratio " << ratio.to_string() << " needs " << wanted
            << " anomalous windows balanced across " << types.size() << " types; at most " << best
            << " are available, i.e. a maximum feasible ratio of " << (100.0 - frac) << ":" << frac;
        throw InsufficientDataError(msg.str());
    }
    const auto q = quotas(wanted, types.size());
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < types.size(); ++i) {
        std::vector<const LabeledWindow*> pool = pools[i];
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(q[i]);
        std::sort(pool.begin(), pool.end(),
                  [](const LabeledWindow* a, const LabeledWindow* b) { return a->start_ts < b->start_ts; });
        for (const LabeledWindow* w : pool) s.test.push_back(*w);
        s.anomalous_per_type[types[i]] = q[i];
    }
    s.test_anomalous = wanted;
    return s;
}

Scaler::Scaler(std::size_t n, std::size_t k, std::vector<double> mean, std::vector<double> stddev,
               std::string provenance)
    : n_(n), k_(k), mean_(std::move(mean)), std_(std::move(stddev)), provenance_(std::move(provenance)) {
    if (mean_.size() != n * k || std_.size() != n * k) throw DimensionError("Scaler: statistics do not match n x k");
    for (double s : std_) {
        if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("Scaler: standard deviations must be positive");
    }
}

void Scaler::apply(Tensor& x) const {
    const std::size_t cols = n_ * k_;
    if (cols == 0 || x.rank() < 2 || x.dim(x.rank() - 1) != k_ || x.dim(x.rank() - 2) != n_) {
        throw DimensionError("Scaler: input " + to_string(x.shape()) + " does not end in [" + std::to_string(n_) +
                             " x " + std::to_string(k_) + "]");
    }
    double* d = x.data().data();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t c = i % cols;
        d[i] = (d[i] - mean_[c]) / std_[c];
    }
}

void Scaler::apply(std::vector<LabeledWindow>& windows) const {
    for (LabeledWindow& w : windows) apply(w.tensor);
}

Tensor Scaler::applied(const Tensor& x) const {
    Tensor out = x;
    apply(out);
    return out;
}

Scaler fit_scaler(const TrainSet& train) {
    const auto& windows = train.windows();
    if (windows.empty()) throw EmptyInputError("fit_scaler: empty training split");
    const Shape& shape = windows.front().tensor.shape();
    if (shape.size() != 3) throw RankError("fit_scaler: windows must be [t x n x k]");
    const std::size_t n = shape[1], k = shape[2], cols = n * k;
    std::vector<double> mean(cols, 0.0), var(cols, 0.0);
    std::size_t count = 0;
    for (const LabeledWindow& w : windows) {
        if (w.tensor.dim(1) != n || w.tensor.dim(2) != k) throw DimensionError("fit_scaler: windows differ in shape");
        const double* d = w.tensor.data().data();
        for (std::size_t i = 0; i < w.tensor.size(); ++i) mean[i % cols] += d[i];
        count += w.tensor.dim(0);
    }
    for (double& m : mean) m /= static_cast<double>(count);
    for (const LabeledWindow& w : windows) {
        const double* d = w.tensor.data().data();
        for (std::size_t i = 0; i < w.tensor.size(); ++i) {
            const double diff = d[i] - mean[i % cols];
            var[i % cols] += diff * diff;
        }
    }
    std::vector<double> stddev(cols);
    for (std::size_t c = 0; c < cols; ++c) {
        const double s = std::sqrt(var[c] / static_cast<double>(count));
        // Near-constant columns (relative spread at rounding level) count as constant.
        stddev[c] = s > 1e-12 * std::max(1.0, std::abs(mean[c])) ? s : 1.0;
    }
    return Scaler(n, k, std::move(mean), std::move(stddev), train.provenance());
}

}  // namespace galmad
