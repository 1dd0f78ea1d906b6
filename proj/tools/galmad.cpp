// galmad: generate, ingest, train, detect, localize and evaluate from the shell.
// Exit status: 0 success, 2 configuration or usage error, 1 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "galmad/checkpoint.hpp"
#include "galmad/error.hpp"
#include "galmad/evaluation.hpp"
#include "galmad/localization.hpp"
#include "galmad/shapley.hpp"
#include "galmad/telemetry.hpp"
#include "galmad/workload.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace galmad;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
}

void require_dir(const std::string& flag, const fs::path& p) {
    if (p.empty()) throw ConfigError(flag + " is required");
    if (!fs::is_directory(p)) throw ConfigError(flag + ": no such directory: " + p.string());
}

void require_file(const std::string& flag, const fs::path& p) {
    if (p.empty()) throw ConfigError(flag + " is required");
    if (!fs::is_regular_file(p)) throw ConfigError(flag + ": no such file: " + p.string());
}

struct Common {
    std::string data;
    std::string topology;
    std::string checkpoint;
    bool no_rt = false;
};

Dataset load_data(const Common& c) {
    require_dir("--data", c.data);
    if (!c.topology.empty()) require_file("--topology", c.topology);
    Dataset d = load_dataset(c.data);
    if (!c.topology.empty()) {
        const Topology t = Topology::load(c.topology);
        if (t.services() != d.topology.services()) {
            throw ConfigError("--topology services differ from the dataset services");
        }
        d.topology = t;
    }
    return d;
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty()) {
        std::cout << text << '\n';
    } else {
        write_file(out, text + "\n");
    }
}

// ---- generate

struct GenerateArgs {
    std::string scenario, out;
    std::optional<std::uint64_t> seed;
    double normal_s = 259200.0;
};

void cmd_generate(const GenerateArgs& a) {
    if (!a.seed) throw ConfigError("--seed is required");
    Scenario s;
    if (!a.scenario.empty()) {
        require_file("--scenario", a.scenario);
        s = Scenario::from_json_text(read_file(a.scenario));
        if (s.model.seed != *a.seed) {
            s.model.seed = *a.seed;
        }
    } else {
        s = Scenario::standard(*a.seed, a.normal_s);
    }
    if (a.out.empty()) throw ConfigError("--out is required");
    const Dataset d = scenario(s);
    write_dataset(d, a.out);
    write_file(fs::path(a.out) / "scenario.json", s.to_json_text() + "\n");
    json summary{{"out", a.out},
                 {"services", d.topology.size()},
                 {"normal_steps", d.normal.services.empty() ? 0 : d.normal.services.front().length()},
                 {"anomaly_types", d.anomalous.size()},
                 {"faults", d.labels.size()}};
    std::cout << summary.dump() << '\n';
}

// ---- ingest

struct IngestArgs {
    Common c;
    std::size_t window = 24;
    std::string out;
};

void cmd_ingest(const IngestArgs& a) {
    const Dataset d = load_data(a.c);
    const FeatureSchema schema(d.topology.services(), !a.c.no_rt);
    const PreparedData p = prepare_data(d, schema, {}, a.window);
    json per_type = json::object();
    for (const auto& [type, windows] : p.anomalous) {
        std::size_t anomalous = 0;
        for (const LabeledWindow& w : windows) anomalous += w.anomalous();
        per_type[type] = {{"windows", windows.size()}, {"anomalous", anomalous}};
    }
    json j{{"services", schema.services()},
           {"features", schema.features()},
           {"n", schema.n()},
           {"k", schema.k()},
           {"flat_dim", schema.flat_dim()},
           {"window", a.window},
           {"normal_windows", p.normal.size()},
           {"anomalous", per_type}};
    emit(a.out, j.dump());
}

// ---- train

struct ModelArgs {
    std::string variant = "gal-mad";
    std::string config;
    std::size_t window = 24;
    double threshold = 2.0;
    std::optional<std::size_t> epochs;
};

GalMadConfig model_config(const ModelArgs& m, const FeatureSchema& schema, std::uint64_t seed) {
    GalMadConfig cfg;
    if (!m.config.empty()) {
        require_file("--config", m.config);
        cfg = parse_config_json(read_file(m.config));
    }
    cfg.n_services = schema.n();
    cfg.n_features = schema.k();
    cfg.window_len = m.window;
    cfg.threshold = m.threshold;
    if (m.epochs) cfg.epochs = *m.epochs;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

struct TrainArgs {
    Common c;
    ModelArgs m;
    std::optional<std::uint64_t> seed;
    std::string ratio = "90:10";
    std::string log;
};

void cmd_train(const TrainArgs& a) {
    if (!a.seed) throw ConfigError("--seed is required");
    if (a.c.checkpoint.empty()) throw ConfigError("--checkpoint is required");
    const Variant variant = parse_variant(a.m.variant);
    const Ratio ratio = Ratio::parse(a.ratio);
    const Dataset d = load_data(a.c);
    const FeatureSchema schema(d.topology.services(), !a.c.no_rt);
    const GalMadConfig cfg = model_config(a.m, schema, *a.seed);
    const PreparedData p = prepare_data(d, schema, {}, cfg.window_len);
    const Splits splits = build_splits(p.normal, p.anomalous, ratio, *a.seed);
    const Scaler scaler = fit_scaler(splits.train);
    std::vector<Tensor> train;
    for (const LabeledWindow& w : splits.train.windows()) train.push_back(scaler.applied(w.tensor));
    GalMad model(cfg, variant, d.topology);
    const TrainingLog log = galmad::train(model, train);
    save_checkpoint(a.c.checkpoint, model, schema, {}, scaler);
    json epochs = json::array();
    for (const EpochRecord& e : log.epochs) {
        epochs.push_back({{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"learning_rate", e.learning_rate},
                          {"batches", e.batches}});
    }
    json j{{"variant", variant_name(variant)}, {"seed", *a.seed}, {"train_windows", train.size()},
           {"checkpoint", a.c.checkpoint}, {"epochs", epochs}};
    emit(a.log, j.dump());
}

// ---- detect

struct DetectArgs {
    Common c;
    std::optional<double> threshold;
    std::string source = "all";
    std::string out;
};

struct Scored {
    std::string source;
    std::vector<LabeledWindow> windows;
    std::vector<double> losses;
};

std::vector<Scored> score_sources(Checkpoint& ck, const Dataset& d, const std::string& source) {
    if (ck.schema.services() != d.topology.services()) {
        throw ConfigError("checkpoint services differ from the dataset services");
    }
    std::vector<std::pair<std::string, const Corpus*>> corpora;
    if (source == "all" || source == "normal") corpora.emplace_back("normal", &d.normal);
    for (const auto& [type, corpus] : d.anomalous) {
        if (source == "all" || source == type) corpora.emplace_back(type, &corpus);
    }
    if (corpora.empty()) throw ConfigError("--source: no corpus named " + source);
    std::vector<Scored> out;
    for (const auto& [name, corpus] : corpora) {
        std::vector<FaultLabel> labels;
        for (const FaultLabel& l : d.labels) {
            if (l.anomaly_type == name) labels.push_back(l);
        }
        FeatureStream stream = build_features(*corpus, ck.schema, ck.features);
        ck.scaler.apply(stream.values);
        Scored s{name, make_windows(stream, labels, ck.model.config().window_len), {}};
        std::vector<Tensor> tensors;
        for (const LabeledWindow& w : s.windows) tensors.push_back(w.tensor);
        s.losses = ck.model.window_losses(tensors);
        out.push_back(std::move(s));
    }
    return out;
}

Checkpoint load_ck(const Common& c, std::optional<double> threshold) {
    require_file("--checkpoint", c.checkpoint);
    Checkpoint ck = load_checkpoint(c.checkpoint);
    if (threshold) {
        GalMadConfig cfg = ck.model.config();
        cfg.threshold = *threshold;
        cfg.validate();
        GalMad rebuilt(cfg, ck.model.variant(), ck.model.topology());
        auto src = ck.model.parameters();
        auto dst = rebuilt.parameters();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value() = src[i]->value();
        ck.model = std::move(rebuilt);
    }
    return ck;
}

void cmd_detect(const DetectArgs& a) {
    Checkpoint ck = load_ck(a.c, a.threshold);
    const Dataset d = load_data(a.c);
    std::ostringstream lines;
    const double c = ck.model.config().threshold;
    for (const Scored& s : score_sources(ck, d, a.source)) {
        for (std::size_t i = 0; i < s.windows.size(); ++i) {
            const Score sc = score(s.losses[i], c);
            json j{{"source", s.source},
                   {"window_start", s.windows[i].start_ts},
                   {"window_end", s.windows[i].end_ts},
                   {"loss", s.losses[i]},
                   {"y", sc.y},
                   {"is_anomaly", sc.is_anomaly},
                   {"label", s.windows[i].label}};
            lines << j.dump() << '\n';
        }
    }
    if (a.out.empty()) {
        std::cout << lines.str();
    } else {
        write_file(a.out, lines.str());
    }
}

// ---- localize

struct LocalizeArgs {
    Common c;
    std::optional<double> threshold;
    std::string type;
    std::optional<std::size_t> window_index;
    std::size_t samples = 2;
    std::uint64_t seed = 0;
    bool no_weighting = false;
    std::string out;
};

void cmd_localize(const LocalizeArgs& a) {
    if (a.type.empty()) throw ConfigError("--type is required");
    if (a.out.empty()) throw ConfigError("--out is required");
    Checkpoint ck = load_ck(a.c, a.threshold);
    const Dataset d = load_data(a.c);
    if (!d.anomalous.count(a.type)) throw ConfigError("--type: dataset has no corpus " + a.type);
    const std::vector<Scored> normal = score_sources(ck, d, "normal");
    const std::vector<Scored> scored = score_sources(ck, d, a.type);
    const Scored& s = scored.front();
    const double c = ck.model.config().threshold;
    std::optional<std::size_t> pick = a.window_index;
    if (pick && *pick >= s.windows.size()) throw ConfigError("--window-index out of range");
    if (!pick) {
        for (std::size_t i = 0; i < s.windows.size(); ++i) {
            if (s.windows[i].anomalous() && score(s.losses[i], c).is_anomaly) {
                pick = i;
                break;
            }
        }
    }
    if (!pick) throw InsufficientDataError("no anomalous window of " + a.type + " was flagged");
    const LabeledWindow& w = s.windows[*pick];
    const Tensor background = background_window(normal.front().windows, 100, a.seed);
    ShapleyOptions so;
    so.samples = a.samples;
    so.seed = a.seed;
    const Tensor phi = shapley_per_step(loss_function(ck.model), w.tensor, background, so);
    AggregateOptions ao;
    ao.weighting = !a.no_weighting;
    const AttributionMatrix attr = aggregate(phi, std::vector<std::uint8_t>(ck.model.config().window_len, 1), ck.schema, ao);
    const LocalizationVerdict v = localize(attr);
    json j = json::parse(verdict_json(v, attr));
    j["window_start"] = w.start_ts;
    j["window_end"] = w.end_ts;
    j["loss"] = s.losses[*pick];
    export_heatmap(attr, a.out);
    write_file(a.out + ".json", j.dump() + "\n");
    std::cout << j.dump() << '\n';
}

// ---- evaluate

struct EvaluateArgs {
    Common c;
    ModelArgs m;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> ratios{"90:10"};
    std::vector<std::string> variants{"gal-mad"};
    std::size_t localization_trials = 0;
    std::size_t samples = 2;
    bool runtime = false;
    std::string out;
};

void cmd_evaluate(const EvaluateArgs& a) {
    if (!a.seed) throw ConfigError("--seed is required");
    std::vector<Variant> variants;
    for (const std::string& v : a.variants) {
        if (v == "all") {
            variants = {Variant::GalMad, Variant::GatAe, Variant::LstmAe, Variant::LinearAe};
            break;
        }
        variants.push_back(parse_variant(v));
    }
    std::vector<Ratio> ratios;
    for (const std::string& r : a.ratios) ratios.push_back(Ratio::parse(r));
    const Dataset d = load_data(a.c);
    const FeatureSchema schema(d.topology.services(), !a.c.no_rt);
    const GalMadConfig cfg = model_config(a.m, schema, *a.seed);
    const PreparedData p = prepare_data(d, schema, {}, cfg.window_len);

    json reports = json::array();
    std::vector<ExperimentReport> table;
    std::optional<ExperimentOutcome> primary;
    for (Variant v : variants) {
        for (const Ratio& r : ratios) {
            ExperimentOutcome o = run_experiment(p, cfg, v, r, *a.seed);
            reports.push_back(json::parse(report_json(o.report, a.runtime)));
            table.push_back(o.report);
            if (!primary && v == Variant::GalMad) primary.emplace(std::move(o));
        }
    }
    json j{{"reports", reports}};
    std::cerr << format_detection_table(table);
    if (a.localization_trials > 0) {
        if (!primary) throw ConfigError("--localization-trials needs the gal-mad variant");
        std::vector<LabeledWindow> normal_train;
        for (const LabeledWindow& w : primary->splits.train.windows()) normal_train.push_back(w);
        primary->scaler.apply(normal_train);
        const Tensor background = background_window(normal_train, 100, *a.seed);
        LocalizationOptions lo;
        lo.trials = a.localization_trials;
        lo.seed = *a.seed;
        lo.samples = a.samples;
        // Trials reuse the generator that produced the dataset when it is known.
        const fs::path scenario_file = fs::path(a.c.data) / "scenario.json";
        const WorkloadModel workload = fs::exists(scenario_file)
                                           ? Scenario::from_json_text(read_file(scenario_file)).model
                                           : WorkloadModel::robot_shop(*a.seed);
        const LocalizationReport lr =
            run_localization_eval(primary->model, primary->scaler, schema, p.features, workload, background,
                                  {AnomalyType::RtDelay, AnomalyType::HighCpu, AnomalyType::HighFileIo}, lo);
        LocalizationOptions weak = lo;
        weak.weak = true;
        const LocalizationReport wr =
            run_localization_eval(primary->model, primary->scaler, schema, p.features, workload, background,
                                  {AnomalyType::LowBandwidth, AnomalyType::OutOfOrder}, weak);
        j["localization"] = json::parse(localization_json(lr));
        j["localization_weak"] = json::parse(localization_json(wr));
        std::cerr << format_localization_table(lr) << format_localization_table(wr);
    }
    emit(a.out, j.dump());
}

void add_common(CLI::App* sub, Common& c, bool checkpoint) {
    sub->add_option("--data", c.data, "Dataset directory");
    sub->add_option("--topology", c.topology, "Topology JSON overriding the dataset's");
    if (checkpoint) sub->add_option("--checkpoint", c.checkpoint, "Checkpoint JSON path");
}

void add_model(CLI::App* sub, ModelArgs& m) {
    sub->add_option("--config", m.config, "GalMadConfig JSON");
    sub->add_option("--window", m.window, "Window length in steps")->capture_default_str();
    sub->add_option("--threshold", m.threshold, "Anomaly threshold c")->capture_default_str();
    sub->add_option("--epochs", m.epochs, "Override the epoch count");
}

}  // namespace

int main(int argc, char** argv) {
    galmad::tune_allocator();
    CLI::App app{"Graph-attention LSTM autoencoder anomaly detection for microservice telemetry"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Write a synthetic dataset directory");
    g->add_option("--scenario", gen.scenario, "Scenario JSON; the standard scenario when omitted");
    g->add_option("--out", gen.out, "Output directory");
    g->add_option("--seed", gen.seed, "Generator seed");
    g->add_option("--normal-duration", gen.normal_s, "Normal corpus length in seconds")->capture_default_str();

    IngestArgs ing;
    auto* in = app.add_subcommand("ingest", "Validate a dataset and summarize its windows");
    add_common(in, ing.c, false);
    in->add_flag("--no-response-times", ing.c.no_rt, "Drop the response-time features");
    in->add_option("--window", ing.window, "Window length in steps")->capture_default_str();
    in->add_option("--out", ing.out, "Summary JSON path; stdout when omitted");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train a model and write a checkpoint");
    add_common(t, tr.c, true);
    add_model(t, tr.m);
    t->add_flag("--no-response-times", tr.c.no_rt, "Drop the response-time features");
    t->add_option("--seed", tr.seed, "Split and training seed");
    t->add_option("--variant", tr.m.variant, "gal-mad, gat-ae, lstm-ae or linear-ae")->capture_default_str();
    t->add_option("--ratio", tr.ratio, "Test mix used to validate the split")->capture_default_str();
    t->add_option("--log", tr.log, "Training log JSON path; stdout when omitted");

    DetectArgs det;
    auto* de = app.add_subcommand("detect", "Score windows and print one JSON line each");
    add_common(de, det.c, true);
    de->add_option("--threshold", det.threshold, "Override the checkpoint threshold");
    de->add_option("--source", det.source, "normal, an anomaly type, or all")->capture_default_str();
    de->add_option("--out", det.out, "Output path; stdout when omitted");

    LocalizeArgs loc;
    auto* lo = app.add_subcommand("localize", "Attribute a flagged window to a service and feature");
    add_common(lo, loc.c, true);
    lo->add_option("--threshold", loc.threshold, "Override the checkpoint threshold");
    lo->add_option("--type", loc.type, "Anomalous corpus to inspect");
    lo->add_option("--window-index", loc.window_index, "Window to explain; the first flagged one when omitted");
    lo->add_option("--samples", loc.samples, "Permutations per step")->capture_default_str();
    lo->add_option("--seed", loc.seed, "Sampling seed")->capture_default_str();
    lo->add_flag("--no-weighting", loc.no_weighting, "Disable the fs_usage and response-time weighting");
    lo->add_option("--out", loc.out, "Output stem for .json, .csv and .svg");

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "Train and score per variant and ratio");
    add_common(e, ev.c, false);
    add_model(e, ev.m);
    e->add_flag("--no-response-times", ev.c.no_rt, "Drop the response-time features");
    e->add_option("--seed", ev.seed, "Split and training seed");
    e->add_option("--ratio", ev.ratios, "Test mixes, e.g. 90:10")->delimiter(',')->capture_default_str();
    e->add_option("--variant", ev.variants, "Variants or all")->delimiter(',')->capture_default_str();
    e->add_option("--localization-trials", ev.localization_trials, "Trials per localization fault type");
    e->add_option("--samples", ev.samples, "Permutations per step for localization")->capture_default_str();
    e->add_flag("--runtime", ev.runtime, "Include wall-clock runtime in the report");
    e->add_option("--out", ev.out, "Report JSON path; stdout when omitted");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex);
        return 2;
    }

    try {
        if (*g) cmd_generate(gen);
        else if (*in) cmd_ingest(ing);
        else if (*t) cmd_train(tr);
        else if (*de) cmd_detect(det);
        else if (*lo) cmd_localize(loc);
        else if (*e) cmd_evaluate(ev);
    } catch (const ConfigError& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    } catch (const IngestionError& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
