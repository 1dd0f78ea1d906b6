#include "galmad/localization.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "galmad/error.hpp"
#include "galmad/telemetry.hpp"
#include "json.hpp"

namespace galmad {

AttributionMatrix aggregate(const Tensor& per_step, const std::vector<std::uint8_t>& anomalous_steps,
                            const FeatureSchema& schema, const AggregateOptions& options) {
    if (per_step.rank() != 3 || per_step.dim(1) != schema.n() || per_step.dim(2) != schema.k()) {
        throw DimensionError("aggregate: attributions " + to_string(per_step.shape()) + " do not match the schema [t x " +
                             std::to_string(schema.n()) + " x " + std::to_string(schema.k()) + "]");
    }
    const std::size_t t = per_step.dim(0), m = schema.n() * schema.k();
    if (anomalous_steps.size() != t) {
        throw DimensionError("aggregate: " + std::to_string(anomalous_steps.size()) + " step flags for " +
                             std::to_string(t) + " steps");
    }
    if (std::none_of(anomalous_steps.begin(), anomalous_steps.end(), [](std::uint8_t f) { return f != 0; })) {
        throw InsufficientDataError("aggregate: no anomalous steps selected; run detection first");
    }
    AttributionMatrix attr;
    attr.values = Tensor({schema.n(), schema.k()}, 0.0);
    attr.services = schema.services();
    attr.features = schema.features();
    for (std::size_t s = 0; s < t; ++s) {
        if (!anomalous_steps[s]) continue;
        for (std::size_t i = 0; i < m; ++i) attr.values[i] += per_step[s * m + i];
    }
    if (options.weighting) {
        attr.weighted = true;
        for (std::size_t j = 0; j < schema.n(); ++j) {
            for (std::size_t f : schema.weighted_features()) attr.values[j * schema.k() + f] *= options.factor;
        }
    }
    return attr;
}

LocalizationVerdict localize(const AttributionMatrix& attr) {
    const Tensor& v = attr.values;
    if (v.rank() != 2 || v.size() == 0) throw EmptyInputError("localize: empty attribution matrix");
    const std::size_t n = v.dim(0), k = v.dim(1);
    LocalizationVerdict out;
    out.service_scores.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t f = 0; f < k; ++f) out.service_scores[j] += std::abs(v.at(j, f));
    }
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j) {
        if (out.service_scores[j] > out.service_scores[best]) best = j;
    }
    if (!(out.service_scores[best] > 0.0)) return out;
    std::size_t feat = 0;
    for (std::size_t f = 1; f < k; ++f) {
        if (std::abs(v.at(best, f)) > std::abs(v.at(best, feat))) feat = f;
    }
    out.conclusive = true;
    out.service_index = best;
    out.feature_index = feat;
    out.service = best < attr.services.size() ? attr.services[best] : std::to_string(best);
    out.feature = feat < attr.features.size() ? attr.features[feat] : std::to_string(feat);
    out.service_score = out.service_scores[best];
    out.feature_value = v.at(best, feat);
    return out;
}

std::string verdict_json(const LocalizationVerdict& v, const AttributionMatrix& attr) {
    nlohmann::ordered_json j;
    j["conclusive"] = v.conclusive;
    if (v.conclusive) {
        j["service"] = v.service;
        j["feature"] = v.feature;
        j["feature_index"] = v.feature_index;
        j["service_score"] = v.service_score;
        j["feature_value"] = v.feature_value;
    } else {
        j["service"] = nullptr;
        j["feature"] = nullptr;
    }
    nlohmann::ordered_json scores = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < v.service_scores.size(); ++i) {
        scores[i < attr.services.size() ? attr.services[i] : std::to_string(i)] = v.service_scores[i];
    }
    j["scores"] = scores;
    j["weighted"] = attr.weighted;
    return j.dump();
}

std::string heatmap_csv(const AttributionMatrix& attr) {
    const std::size_t n = attr.values.dim(0), k = attr.values.dim(1);
    if (attr.services.size() != n || attr.features.size() != k) {
        throw DimensionError("heatmap_csv: axis names do not match the matrix");
    }
    std::string out = "feature_index";
    for (std::size_t f = 0; f < k; ++f) out += "," + std::to_string(f);
    out += "\nservice";
    for (const std::string& name : attr.features) out += "," + name;
    out += '\n';
    for (std::size_t j = 0; j < n; ++j) {
        out += attr.services[j];
        for (std::size_t f = 0; f < k; ++f) out += "," + format_double(attr.values.at(j, f));
        out += '\n';
    }
    return out;
}

AttributionMatrix parse_heatmap_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    auto cells = [](const std::string& l) {
        std::vector<std::string> out;
        std::stringstream ss(l);
        std::string c;
        while (std::getline(ss, c, ',')) out.push_back(c);
        if (!l.empty() && l.back() == ',') out.emplace_back();
        return out;
    };
    if (!std::getline(in, line) || line.rfind("feature_index", 0) != 0) {
        throw IngestionError("heatmap CSV: first row must start with feature_index");
    }
    const std::size_t k = cells(line).size() - 1;
    if (!std::getline(in, line) || line.rfind("service", 0) != 0) {
        throw IngestionError("heatmap CSV: second row must start with service");
    }
    AttributionMatrix attr;
    auto names = cells(line);
    if (names.size() != k + 1) throw IngestionError("heatmap CSV: header rows disagree on width");
    attr.features.assign(names.begin() + 1, names.end());
    std::vector<double> values;
    std::size_t row = 2;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto c = cells(line);
        if (c.size() != k + 1) throw IngestionError("heatmap CSV: row " + std::to_string(row) + " has the wrong width");
        attr.services.push_back(c[0]);
        for (std::size_t f = 1; f <= k; ++f) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(c[f], &used));
                if (used != c[f].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw IngestionError("heatmap CSV: row " + std::to_string(row) + " has a non-numeric cell");
            }
        }
    }
    attr.values = Tensor({attr.services.size(), k}, std::move(values));
    return attr;
}

std::string heatmap_svg(const AttributionMatrix& attr) {
    const std::size_t n = attr.values.dim(0), k = attr.values.dim(1);
    double peak = 0.0;
    for (double v : attr.values.data()) peak = std::max(peak, std::abs(v));
    const int cell = 28, left = 90, top = 40;
    const int width = left + static_cast<int>(k) * cell + 20;
    const int height = top + static_cast<int>(n) * cell + 20;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    for (std::size_t f = 0; f < k; ++f) {
        svg << "<text x=\"" << left + static_cast<int>(f) * cell + cell / 2 << "\" y=\"" << top - 8
            << "\" text-anchor=\"middle\">" << f << "</text>\n";
    }
    for (std::size_t j = 0; j < n; ++j) {
        const int y = top + static_cast<int>(j) * cell;
        svg << "<text x=\"" << left - 6 << "\" y=\"" << y + cell / 2 + 3 << "\" text-anchor=\"end\">"
            << (j < attr.services.size() ? attr.services[j] : std::to_string(j)) << "</text>\n";
        for (std::size_t f = 0; f < k; ++f) {
            const double v = attr.values.at(j, f);
            const double a = peak > 0.0 ? std::abs(v) / peak : 0.0;
            // Positive values shade red, negative blue.
            const int fade = static_cast<int>(std::lround(255.0 * (1.0 - a)));
            const int r = v >= 0 ? 255 : fade, b = v >= 0 ? fade : 255;
            svg << "<rect x=\"" << left + static_cast<int>(f) * cell << "\" y=\"" << y << "\" width=\"" << cell
                << "\" height=\"" << cell << "\" fill=\"rgb(" << r << "," << fade << "," << b
                << ")\" stroke=\"#ccc\"><title>" << format_double(v) << "</title></rect>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

void export_heatmap(const AttributionMatrix& attr, const std::filesystem::path& stem) {
    if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
    for (const auto& [ext, text] : {std::pair<std::string, std::string>{".csv", heatmap_csv(attr)},
                                    std::pair<std::string, std::string>{".svg", heatmap_svg(attr)}}) {
        std::filesystem::path p = stem;
        p += ext;
        std::ofstream out(p, std::ios::binary);
        if (!out) throw Error("cannot write " + p.string());
        out << text;
    }
}

}  // namespace galmad
