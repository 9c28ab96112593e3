// clickguard: synthesize labelled clickstreams, run the passive and bait
// detectors, and sweep experiments.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 a factorization hit
// its iteration cap (every output is still written).

#include "clickguard/bait.hpp"
#include "clickguard/error.hpp"
#include "clickguard/eval.hpp"
#include "clickguard/simd/kernels.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace clickguard;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kNotConverged = 3;

template <class Writer, class Config>
std::string defaults_text(const char* title, Writer write, const Config& config) {
    std::ostringstream out;
    out << title << " (key=value, one per line; '#' starts a comment). Defaults:\n";
    std::ostringstream body;
    write(body, config);
    std::istringstream lines(body.str());
    for (std::string line; std::getline(lines, line);) out << "  " << line << '\n';
    return out.str();
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write '" + p.string() + "'");
    return out;
}

KeyValueConfig load_optional(const std::string& path) {
    if (path.empty()) {
        std::istringstream empty;
        return KeyValueConfig::parse(empty);
    }
    if (!fs::exists(path)) throw DataError("config file '" + path + "' does not exist");
    return KeyValueConfig::load(path);
}

// Reads a clickstream and reports skipped records on stderr.
std::vector<ClickEvent> read_stream(const std::string& path) {
    IngestResult r = ingest_clickstream(path);
    for (const auto& e : r.errors) std::cerr << path << ':' << e.line << ": skipped: " << e.message << '\n';
    return std::move(r.events);
}

struct WindowOptions {
    double bin_width = 300.0;
    double window_start = 0.0;
    double days = 0.0;  // 0 = infer from the clicks
    bool start_given = false;
};

void add_window_options(CLI::App* cmd, WindowOptions& w) {
    cmd->add_option("--bin-width", w.bin_width, "Time bin width in seconds")->capture_default_str();
    cmd->add_option("--days", w.days, "Window length in days (0 = whole days covering the input)")
        ->capture_default_str();
    cmd->add_option_function<double>(
           "--window-start",
           [&w](double v) {
               w.window_start = v;
               w.start_given = true;
           },
           "Window start in seconds (default: midnight at or before the first click)");
}

TimeBinConfig resolve_window(const WindowOptions& w, std::span<const ClickEvent> clicks) {
    TimeBinConfig bins = infer_time_bins(clicks, w.bin_width);
    if (w.start_given) bins.window_start = w.window_start;
    if (w.days > 0.0) bins = TimeBinConfig::for_days(w.days, bins.window_start, w.bin_width);
    return bins;
}

bool has_labels(std::span<const ClickEvent> clicks) {
    for (const auto& c : clicks)
        if (c.label != Label::Unknown) return true;
    return false;
}

void write_predictions(const fs::path& path, std::span<const ClickEvent> clicks, std::span<const Label> predicted) {
    auto out = open_out(path);
    out << "timestamp,source,truth,predicted\n";
    for (std::size_t k = 0; k < clicks.size(); ++k)
        out << format_double(clicks[k].timestamp) << ',' << clicks[k].source << ',' << to_string(clicks[k].label)
            << ',' << to_string(predicted[k]) << '\n';
}

void write_rates(std::ostream& out, std::span<const ClickEvent> clicks, std::span<const Label> predicted) {
    std::vector<Label> truth;
    truth.reserve(clicks.size());
    for (const auto& c : clicks) truth.push_back(c.label);
    const Rates r = compute_rates(truth, predicted);
    out << "legit_clicks=" << r.legit << "\nspam_clicks=" << r.spam << "\nfalse_positives=" << r.false_positives
        << "\ntrue_positives=" << r.true_positives << "\nfpr=" << format_double(r.fpr)
        << "\ntpr=" << format_double(r.tpr) << "\norganic_detected=" << r.organic_detected << '/' << r.organic
        << "\ninorganic_detected=" << r.inorganic_detected << '/' << r.inorganic << '\n';
    if (r.no_legit_warning) out << "warning=no legitimate clicks; fpr reported as 0\n";
    if (r.no_spam_warning) out << "warning=no spam clicks; tpr reported as 0\n";
}

void write_factor_summary(std::ostream& out, const MultiLayerFactorization& f) {
    for (std::size_t k = 0; k < f.layers.size(); ++k) {
        const auto& l = f.layers[k];
        out << "layer" << k + 1 << ".iterations=" << l.iterations << "\nlayer" << k + 1
            << ".residual=" << format_double(l.residual) << "\nlayer" << k + 1
            << ".converged=" << (l.converged ? 1 : 0) << '\n';
    }
    out << "final.residual=" << format_double(f.refit_residual) << '\n';
}

void dump_factors(const fs::path& dir, const MultiLayerFactorization& f, const FactorizationConfig& config) {
    fs::create_directories(dir);
    for (const auto& d : dumps_of(f, config)) {
        auto out = open_out(dir / ("factors_" + d.layer + ".txt"));
        write_factors(out, d);
    }
}

void write_passive_outputs(const fs::path& dir, const PassiveResult& r) {
    {
        auto out = open_out(dir / "verdicts.csv");
        write_verdict_csv(out, r.matrix, r.verdicts);
    }
    auto out = open_out(dir / "clusters.jsonl");
    write_cluster_jsonl(out, r.clustering.clusters);
}

void write_stream_summary(std::ostream& out, const TrafficMatrix& m, std::size_t clicks) {
    out << "clicks=" << clicks << "\nsources=" << m.num_sources() << "\nbins=" << m.bins.num_bins
        << "\nbin_width=" << format_double(m.bins.bin_width) << "\nwindow_start=" << format_double(m.bins.window_start)
        << "\ndiscarded=" << m.discarded << '\n';
}

std::size_t count_spam(std::span<const Label> labels) {
    std::size_t n = 0;
    for (auto l : labels) n += is_spam(l) ? 1 : 0;
    return n;
}

int run_synth(const std::string& config_path, const std::string& out_path, const std::string& meta_path) {
    const SynthConfig config = parse_synth_config(load_optional(config_path));
    const LabeledClickSet set = synthesize(config);
    if (const fs::path parent = fs::path(out_path).parent_path(); !parent.empty()) fs::create_directories(parent);
    {
        auto out = open_out(out_path);
        write_clickstream(out, set.clicks);
    }
    auto meta = open_out(meta_path.empty() ? out_path + ".meta" : meta_path);
    write_synth_config(meta, config);
    write_provenance(meta, set.provenance);
    std::cerr << "wrote " << set.clicks.size() << " clicks to " << out_path << '\n';
    return kOk;
}

int run_detect(const std::string& in_path, const std::string& config_path, const fs::path& out_dir,
               const WindowOptions& window, bool dump) {
    const DetectionConfig config = parse_detection_config([&] {
        auto kv = load_optional(config_path);
        kv.require_known(detection_config_keys());
        return kv;
    }());
    const auto clicks = read_stream(in_path);
    const TimeBinConfig bins = resolve_window(window, clicks);
    const PassiveResult r = detect_passive(clicks, bins, config);

    fs::create_directories(out_dir);
    write_passive_outputs(out_dir, r);
    write_predictions(out_dir / "predictions.csv", clicks, r.verdicts.click_labels);
    if (dump) dump_factors(out_dir / "factors", r.factors, config.factorization);
    {
        auto out = open_out(out_dir / "summary.txt");
        write_stream_summary(out, r.matrix, clicks.size());
        write_factor_summary(out, r.factors);
        out << "reused_patterns=" << r.organic.reused_pattern_indices.size()
            << "\nclusters=" << r.clustering.clusters.size() << "\npredicted_spam=" << count_spam(r.verdicts.click_labels)
            << '\n';
        if (has_labels(clicks)) write_rates(out, clicks, r.verdicts.click_labels);
    }
    if (!r.factors.converged()) {
        std::cerr << "warning: factorization stopped at the iteration cap; outputs written to " << out_dir << '\n';
        return kNotConverged;
    }
    return kOk;
}

int run_bait(const std::string& in_path, const std::string& bait_path, const std::string& factor_path,
             const fs::path& out_dir, const WindowOptions& window) {
    BaitConfig bait = [&] {
        if (!fs::exists(bait_path)) throw DataError("bait config '" + bait_path + "' does not exist");
        std::ifstream in(bait_path);
        return parse_bait_config(in);
    }();
    const DetectionConfig config = parse_detection_config([&] {
        auto kv = load_optional(factor_path);
        kv.require_known(detection_config_keys());
        return kv;
    }());
    const auto raw = read_stream(in_path);
    const TimeBinConfig bins = resolve_window(window, raw);

    // The network knows its own schedule; rebuild it to drop unlabelled bait.
    schedule_bait(bait, distinct_sources(raw), bins);
    const LabeledClickSet stripped = strip_bait(LabeledClickSet{raw, {}}, bait);
    const auto& clicks = stripped.clicks;
    const ActiveResult r = detect_active(clicks, bins, config, bait);

    fs::create_directories(out_dir);
    write_passive_outputs(out_dir, r.passive);
    write_predictions(out_dir / "predictions.csv", clicks, r.click_labels);
    {
        auto out = open_out(out_dir / "fractions.csv");
        write_fraction_csv(out, r.passive.matrix, r.bait);
    }
    {
        auto out = open_out(out_dir / "echoes.csv");
        out << "delta,start,support\n";
        for (std::size_t k = 0; k < r.bait.echoes.size(); ++k)
            out << format_double(r.bait.echoes[k].delta) << ',' << format_double(r.bait.echoes[k].start) << ','
                << r.bait.echo_support[k] << '\n';
    }
    std::size_t flagged = 0;
    for (bool f : r.bait.flagged) flagged += f ? 1 : 0;
    {
        auto out = open_out(out_dir / "summary.txt");
        write_stream_summary(out, r.passive.matrix, clicks.size());
        out << "bait_clicks_removed=" << raw.size() - clicks.size() << "\nechoes=" << r.bait.echoes.size()
            << "\nflagged_sources=" << flagged << '\n';
        write_factor_summary(out, r.bait.factors);
        out << "predicted_spam=" << count_spam(r.click_labels) << '\n';
        if (has_labels(clicks)) write_rates(out, clicks, r.click_labels);
    }
    if (!r.passive.factors.converged() || !r.bait.factors.converged()) {
        std::cerr << "warning: factorization stopped at the iteration cap; outputs written to " << out_dir << '\n';
        return kNotConverged;
    }
    return kOk;
}

int run_eval(const std::string& config_path, const fs::path& out_dir) {
    if (!fs::exists(config_path)) throw DataError("experiment config '" + config_path + "' does not exist");
    const ExperimentConfig config = parse_experiment_config(KeyValueConfig::load(config_path));
    const ExperimentReport report = run_experiment(config);
    write_report(out_dir, report);
    {
        std::ifstream txt(out_dir / "report.txt");
        std::cout << txt.rdbuf();
    }
    std::size_t failed = 0;
    std::size_t capped = 0;
    for (const auto& row : report.rows) {
        failed += row.runs.size() - row.succeeded();
        capped += row.nonconverged();
    }
    if (failed > 0) std::cerr << "warning: " << failed << " run(s) failed; see runs.csv\n";
    return capped > 0 ? kNotConverged : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Click-fraud detection by timing-pattern factorization"};
    app.require_subcommand(1);
    app.footer("Exit codes: 0 ok, 1 usage error, 2 data error, 3 iteration cap reached (outputs kept).");
    std::string simd;
    app.add_option("--simd", simd, "Kernel set: scalar, avx2 or neon (default: best available; "
                                   "CLICKGUARD_SIMD also works)");

    std::string synth_config, synth_out, synth_meta;
    auto* synth = app.add_subcommand("synth", "Generate a labelled clickstream");
    synth->add_option("--config", synth_config, "Synthesis config file (optional)");
    synth->add_option("--out", synth_out, "Output clickstream CSV")->required();
    synth->add_option("--meta", synth_meta, "Provenance file (default: <out>.meta)");
    synth->footer(defaults_text("Synthesis config", write_synth_config, SynthConfig{}));

    std::string detect_in, detect_config, detect_out, mode = "passive";
    bool dump = false;
    WindowOptions detect_window;
    auto* detect = app.add_subcommand("detect", "Run the passive detector on a clickstream");
    detect->add_option("--in", detect_in, "Input clickstream CSV")->required();
    detect->add_option("--mode", mode, "Detector; only 'passive' is available here (see 'bait')")
        ->check(CLI::IsMember({"passive"}))
        ->capture_default_str();
    detect->add_option("--factor-config", detect_config, "Detection config file (optional)");
    detect->add_option("--out", detect_out, "Output directory")->required();
    detect->add_flag("--dump-factors", dump, "Also write factor containers under <out>/factors");
    add_window_options(detect, detect_window);
    detect->footer(defaults_text("Detection config", write_detection_config, DetectionConfig{}));

    std::string bait_in, bait_config, bait_factor, bait_out;
    WindowOptions bait_window;
    auto* bait = app.add_subcommand("bait", "Run the bait defence on a bait-injected clickstream");
    bait->add_option("--in", bait_in, "Input clickstream CSV")->required();
    bait->add_option("--bait-config", bait_config, "Bait config file")->required();
    bait->add_option("--factor-config", bait_factor, "Detection config file (optional)");
    bait->add_option("--out", bait_out, "Output directory")->required();
    add_window_options(bait, bait_window);
    bait->footer(defaults_text("Bait config", write_bait_config, BaitConfig{}) +
                 "Detection config: as for 'detect'.");

    std::string eval_config, eval_out;
    auto* eval = app.add_subcommand("eval", "Run an experiment sweep and write the report tables");
    eval->add_option("--experiment", eval_config, "Experiment config file")->required();
    eval->add_option("--out", eval_out, "Output directory")->required();
    eval->footer(defaults_text("Experiment config", write_experiment_config, ExperimentConfig{}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (!simd.empty()) simd::select(simd::parse_isa(simd));
        if (*synth) return run_synth(synth_config, synth_out, synth_meta);
        if (*detect) return run_detect(detect_in, detect_config, detect_out, detect_window, dump);
        if (*bait) return run_bait(bait_in, bait_config, bait_factor, bait_out, bait_window);
        if (*eval) return run_eval(eval_config, eval_out);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}
