#include "auralab/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "auralab/audio_io.hpp"
#include "auralab/ism.hpp"
#include "auralab/raytrace.hpp"
#include "auralab/sha256.hpp"
#include "auralab/svg.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace auralab {

namespace {

constexpr const char* kToolVersion = "0.1.0";

template <typename F>
auto run_stage(const char* name, F&& body) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            if (!trim(cur).empty()) out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!trim(cur).empty()) out.push_back(trim(cur));
    return out;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

// ---------------------------------------------------------------------------
// Config

RunConfig parse_config_text(const std::string& text) {
    RunConfig config;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: line " + std::to_string(line_no) +
                                     ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "scene_stage")
                config.stage_scenes = split_list(value);
            else if (key == "scene_lab")
                config.lab_scenes = split_list(value);
            else if (key == "input")
                config.input = value;
            else if (key == "out")
                config.out_dir = value;
            else if (key == "sample_rate")
                config.sample_rate = std::stod(value);
            else if (key == "rays")
                config.n_rays = std::stoull(value);
            else if (key == "seed")
                config.seed = std::stoull(value);
            else if (key == "order")
                config.max_order = std::stoi(value);
            else if (key == "window_ms")
                config.window_ms = std::stod(value);
            else if (key == "jnd_db")
                config.jnd_db = std::stod(value);
            else if (key == "gate_db")
                config.gate_db = std::stod(value);
            else if (key == "max_time")
                config.max_time = std::stod(value);
            else if (key == "threads")
                config.threads = static_cast<unsigned>(std::stoul(value));
            else if (key == "emit") {
                config.emit_wav = config.emit_csv = config.emit_svg = config.emit_json = false;
                for (const auto& item : split_list(value)) {
                    if (item == "wav")
                        config.emit_wav = true;
                    else if (item == "csv")
                        config.emit_csv = true;
                    else if (item == "svg")
                        config.emit_svg = true;
                    else if (item == "json")
                        config.emit_json = true;
                    else
                        throw std::runtime_error("unknown emit kind '" + item + "'");
                }
            } else {
                throw std::runtime_error("unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("config: line " + std::to_string(line_no) +
                                     ": bad value for '" + key + "'");
        }
    }
    return config;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void validate_config(const RunConfig& config) {
    run_stage("config validation", [&] {
        if (config.stage_scenes.empty() || config.lab_scenes.empty())
            throw std::runtime_error("at least one stage and one lab scene required");
        for (const auto& name : config.stage_scenes) resolve_scene(name);
        for (const auto& name : config.lab_scenes) resolve_scene(name);
        if (config.input != "synthetic" && !fs::exists(config.input))
            throw std::runtime_error("input file '" + config.input + "' does not exist");
        if (config.n_rays < 1) throw std::runtime_error("rays must be >= 1");
        if (!(config.sample_rate > 0.0)) throw std::runtime_error("sample_rate must be > 0");
        if (config.max_order < 0) throw std::runtime_error("order must be >= 0");
        if (!(config.window_ms > 0.0)) throw std::runtime_error("window_ms must be > 0");
        if (!(config.jnd_db > 0.0)) throw std::runtime_error("jnd_db must be > 0");
        if (!(config.gate_db > 0.0)) throw std::runtime_error("gate_db must be > 0");
        fs::create_directories(config.out_dir);
        return 0;
    });
}

// ---------------------------------------------------------------------------
// Input

void quantize_float32(Signal& signal) {
    for (auto& ch : signal.channels)
        for (auto& v : ch) v = static_cast<double>(static_cast<float>(v));
}

Signal synthetic_input(double sample_rate, double duration_s, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
    std::vector<double> x(n, 0.0);

    // Band-limited pulse train of sustained noise notes: 150 ms grid, 130 ms
    // note length with 5 ms raised-cosine attack and release and a gentle
    // decay, 20 ms articulation gaps, then one-pole 80 Hz high-pass and 7 kHz
    // low-pass filters. Broadband noise keeps the direct sound and the room
    // reflections decorrelated at reflection lags; the sustained envelope
    // drives the rooms into their steady state on most frames.
    const double note_spacing = 0.150;
    const double note_length = 0.130;
    const double edge = 0.005;
    const double decay_tau = 0.400;
    const double amp_cycle[4] = {1.0, 0.6, 0.8, 0.5};

    Rng rng(seed);
    const auto n_notes = static_cast<std::size_t>(duration_s / note_spacing);
    for (std::size_t note = 0; note < n_notes; ++note) {
        const auto i0 = static_cast<std::size_t>(
            std::llround(static_cast<double>(note) * note_spacing * sample_rate));
        const auto i1 =
            std::min(n, i0 + static_cast<std::size_t>(note_length * sample_rate));
        const double amp = amp_cycle[note % 4];
        for (std::size_t i = i0; i < i1; ++i) {
            const double t = (static_cast<double>(i) - static_cast<double>(i0)) / sample_rate;
            const double t_left = note_length - t;
            double env = std::exp(-t / decay_tau);
            if (t < edge) env *= 0.5 * (1.0 - std::cos(3.141592653589793 * t / edge));
            if (t_left < edge)
                env *= 0.5 * (1.0 - std::cos(3.141592653589793 * t_left / edge));
            x[i] += amp * env * rng.gaussian();
        }
    }

    const double k_lp = std::exp(-2.0 * 3.141592653589793 * 7000.0 / sample_rate);
    const double k_hp = std::exp(-2.0 * 3.141592653589793 * 80.0 / sample_rate);
    double lp = 0.0, hp_state = 0.0;
    for (auto& v : x) {
        lp = (1.0 - k_lp) * v + k_lp * lp;
        hp_state = (1.0 - k_hp) * lp + k_hp * hp_state;
        v = lp - hp_state;
    }

    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    if (peak > 0.0)
        for (double& v : x) v *= 0.5 / peak;

    Signal out = Signal::mono(std::move(x), sample_rate);
    quantize_float32(out);
    return out;
}

namespace {

Signal load_input(const RunConfig& config) {
    if (config.input == "synthetic") return synthetic_input(config.sample_rate);
    Signal x = read_wav(config.input);
    if (x.num_channels() != 1)
        throw std::runtime_error("anechoic input '" + config.input + "' must be mono");
    if (x.sample_rate != config.sample_rate)
        throw std::runtime_error("anechoic input rate " + std::to_string(x.sample_rate) +
                                 " does not match configured rate");
    return x;
}

double auto_max_time(const Scene& scene, const RunConfig& config) {
    if (config.max_time > 0.0) return config.max_time;
    double t_max = 0.0;
    try {
        for (std::size_t b = 0; b < kNumBands; ++b)
            t_max = std::max(t_max, sabine_rt(scene, b));
    } catch (const std::exception&) {
        return 4.0; // no absorption anywhere: cap the tail instead
    }
    return std::clamp(4.0 * t_max, 0.2, 4.0);
}

void quantize_response(ImpulseResponsePair& h) {
    for (auto* ch : {&h.left, &h.right})
        for (auto& v : *ch) v = static_cast<double>(static_cast<float>(v));
}

} // namespace

// ---------------------------------------------------------------------------
// Simulation

BrirResult simulate_virtual_stage(const Scene& stage_scene, const RunConfig& config) {
    const auto report = validate_scene(stage_scene);
    if (!report.valid())
        throw std::runtime_error("stage scene invalid: " + report.violations[0].location +
                                 ": " + report.violations[0].message);

    BrirResult result;
    result.arrivals.push_back(direct_path_arrival(stage_scene));

    TraceOptions opt;
    opt.n_rays = config.n_rays;
    opt.seed = config.seed;
    opt.max_time = auto_max_time(stage_scene, config);
    opt.skip_direct = true;
    opt.threads = config.threads;
    result.histogram = trace(stage_scene, opt);

    const HrtfSet hrtf = HrtfSet::from_ref(stage_scene.receiver.hrtf);
    result.response = synthesize_brir(result.arrivals, result.histogram, hrtf,
                                      config.sample_rate, config.seed,
                                      HeadBasis::from_receiver(stage_scene.receiver));
    quantize_response(result.response);
    return result;
}

BrirResult simulate_residual_room(const Scene& lab_scene, const RunConfig& config) {
    const auto report = validate_scene(lab_scene);
    if (!report.valid())
        throw std::runtime_error("lab scene invalid: " + report.violations[0].location + ": " +
                                 report.violations[0].message);

    BrirResult result;
    TraceOptions opt;
    opt.n_rays = config.n_rays;
    opt.seed = config.seed;
    opt.max_time = auto_max_time(lab_scene, config);
    opt.threads = config.threads;
    if (lab_scene.is_shoebox()) {
        // hybrid: specular orders 1..max_order analytically, the rest traced
        result.arrivals = ism_arrivals(lab_scene, config.max_order, /*skip_direct=*/true);
        opt.skip_order_leq = config.max_order;
    } else {
        opt.skip_direct = true;
    }
    result.histogram = trace(lab_scene, opt);

    const HrtfSet hrtf = HrtfSet::from_ref(lab_scene.receiver.hrtf);
    result.response = synthesize_brir(result.arrivals, result.histogram, hrtf,
                                      config.sample_rate,
                                      config.seed ^ 0x517cc1b727220a95ULL,
                                      HeadBasis::from_receiver(lab_scene.receiver));
    quantize_response(result.response);
    return result;
}

// ---------------------------------------------------------------------------
// Auralization

AuralizeResult auralize(const Signal& anechoic, const ImpulseResponsePair& h_v,
                        const ImpulseResponsePair& h_u) {
    AuralizeResult out;
    out.y_v = convolve(anechoic, h_v);
    out.y_u = convolve(anechoic, h_u);
    quantize_float32(out.y_v);
    quantize_float32(out.y_u);
    // float32 samples sum exactly in double; quantizing afterwards makes the
    // stored total bit-equal to the float sum of the stored parts
    out.y_t = mix(out.y_v, out.y_u);
    quantize_float32(out.y_t);
    return out;
}

// ---------------------------------------------------------------------------
// Analysis

AnalysisResult analyze_signals(const AuralizeResult& signals, const RunConfig& config) {
    AnalysisResult result;
    const double window_s = config.window_ms / 1000.0;
    result.l_v = level_track(signals.y_v, window_s, window_s);
    result.l_u = level_track(signals.y_u, window_s, window_s);
    result.l_t = level_track(signals.y_t, window_s, window_s);

    // the convolution tails differ in length; analyze the common span
    const std::size_t n = std::min({result.l_v.size(), result.l_u.size(), result.l_t.size()});
    result.l_v.values_db.resize(n);
    result.l_u.values_db.resize(n);
    result.l_t.values_db.resize(n);

    result.snr = snr_track(result.l_v, result.l_u);
    result.delta_l = delta_l_track(result.l_t, result.l_v);
    result.gate = gate_frames(result.l_v, config.gate_db);

    const auto delta_samples = masked_values(result.delta_l, result.gate);
    if (delta_samples.empty())
        throw std::runtime_error("analysis: no frames survive the gate");
    result.delta_l_stats = boxplot_stats(delta_samples);
    result.verdict = jnd_verdict(result.delta_l_stats, config.jnd_db);
    result.snr_median_db = boxplot_stats(masked_values(result.snr, result.gate)).median;
    return result;
}

// ---------------------------------------------------------------------------
// Artifact writing

namespace {

std::string sanitize(const std::string& name) {
    std::string base = fs::path(name).stem().string();
    if (base.empty()) base = name;
    for (auto& ch : base)
        if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
    return base;
}

void write_text_file(const std::string& path, const std::string& text,
                     std::vector<std::string>& written) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
    written.push_back(path);
}

void write_arrivals_csv(const std::vector<Arrival>& arrivals, const std::string& path,
                        std::vector<std::string>& written) {
    std::string text = "delay_s,order,dir_x,dir_y,dir_z";
    for (double c : kBandCenters) text += ",amp_" + std::to_string(static_cast<int>(c));
    text += "\n";
    for (const auto& a : arrivals) {
        text += fmt17(a.delay) + "," + std::to_string(a.order) + "," + fmt17(a.direction.x) +
                "," + fmt17(a.direction.y) + "," + fmt17(a.direction.z);
        for (double amp : a.amplitude) text += "," + fmt17(amp);
        text += "\n";
    }
    write_text_file(path, text, written);
}

void write_levels_csv(const AnalysisResult& analysis, const std::string& path,
                      std::vector<std::string>& written) {
    std::string text = "t_s,l_v_db,l_u_db,l_t_db,snr_db,delta_l_db\n";
    for (std::size_t i = 0; i < analysis.l_v.size(); ++i) {
        text += fmt17(analysis.l_v.time_of(i)) + "," + fmt17(analysis.l_v.values_db[i]) + "," +
                fmt17(analysis.l_u.values_db[i]) + "," + fmt17(analysis.l_t.values_db[i]) +
                "," + fmt17(analysis.snr.values_db[i]) + "," +
                fmt17(analysis.delta_l.values_db[i]) + "\n";
    }
    write_text_file(path, text, written);
}

ordered_json provenance_json(const RunConfig& config, const std::string& stage,
                             const std::string& lab) {
    ordered_json j;
    j["tool"] = "auralab";
    j["version"] = kToolVersion;
    j["stage"] = stage;
    j["lab"] = lab;
    j["input"] = config.input;
    j["sample_rate"] = config.sample_rate;
    j["rays"] = config.n_rays;
    j["seed"] = config.seed;
    j["max_order"] = config.max_order;
    j["window_ms"] = config.window_ms;
    j["jnd_db"] = config.jnd_db;
    j["gate_db"] = config.gate_db;
    return j;
}

ordered_json report_entry_json(const ComboReport& report) {
    const auto& s = report.analysis.delta_l_stats;
    ordered_json j;
    j["stage"] = report.stage;
    j["lab"] = report.lab;
    j["median_db"] = s.median;
    j["q1_db"] = s.q1;
    j["q3_db"] = s.q3;
    j["whisker_low_db"] = s.whisker_low;
    j["whisker_high_db"] = s.whisker_high;
    j["n_outliers"] = s.outliers.size();
    double max_abs = 0.0;
    for (double v : s.outliers) max_abs = std::max(max_abs, std::abs(v));
    j["max_abs_outlier_db"] = max_abs;
    j["verdict"] = audibility_name(report.analysis.verdict.classification);
    j["snr_median_db"] = report.analysis.snr_median_db;
    j["n_gated_frames"] = s.n;
    return j;
}

void update_manifest(const std::string& out_dir, const std::vector<std::string>& written) {
    const fs::path manifest_path = fs::path(out_dir) / "manifest.json";
    std::map<std::string, std::string> entries;
    if (fs::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        ordered_json j = ordered_json::parse(in, nullptr, /*allow_exceptions=*/false);
        if (j.is_object() && j.contains("files"))
            for (auto& [key, value] : j["files"].items())
                if (value.is_string()) entries[key] = value.get<std::string>();
    }
    for (const auto& path : written) {
        const std::string rel =
            fs::relative(fs::path(path), fs::path(out_dir)).generic_string();
        entries[rel] = sha256_file_hex(path);
    }
    ordered_json j;
    j["tool"] = "auralab";
    j["version"] = kToolVersion;
    ordered_json files = ordered_json::object();
    for (const auto& [rel, hash] : entries) files[rel] = hash;
    j["files"] = files;
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest");
    out << j.dump(2) << "\n";
}

struct ComboPaths {
    fs::path dir;
    std::string stage_name;
    std::string lab_name;
};

std::vector<ComboPaths> combos(const RunConfig& config) {
    std::vector<ComboPaths> out;
    for (const auto& stage : config.stage_scenes)
        for (const auto& lab : config.lab_scenes) {
            ComboPaths c;
            c.stage_name = stage;
            c.lab_name = lab;
            c.dir = fs::path(config.out_dir) / combo_dir_name(stage, lab);
            out.push_back(std::move(c));
        }
    return out;
}

ImpulseResponsePair read_response(const std::string& path) {
    Signal s = read_wav(path);
    if (s.num_channels() != 2)
        throw std::runtime_error("'" + path + "' must be a 2-channel response");
    ImpulseResponsePair h;
    h.left = s.channels[0];
    h.right = s.channels[1];
    h.sample_rate = s.sample_rate;
    return h;
}

} // namespace

std::string combo_dir_name(const std::string& stage, const std::string& lab) {
    return sanitize(stage) + "__" + sanitize(lab);
}

// ---------------------------------------------------------------------------
// Subcommands

namespace {

void simulate_into(const RunConfig& config, bool write_histograms,
                   std::vector<std::string>& written) {
    // Responses depend on one scene only; reuse across the matrix.
    std::map<std::string, BrirResult> stage_cache;
    std::map<std::string, BrirResult> lab_cache;
    for (const auto& combo : combos(config)) {
        fs::create_directories(combo.dir);
        if (!stage_cache.count(combo.stage_name))
            stage_cache[combo.stage_name] =
                simulate_virtual_stage(resolve_scene(combo.stage_name), config);
        if (!lab_cache.count(combo.lab_name))
            lab_cache[combo.lab_name] =
                simulate_residual_room(resolve_scene(combo.lab_name), config);
        const auto& stage = stage_cache[combo.stage_name];
        const auto& lab = lab_cache[combo.lab_name];

        write_wav_float32((combo.dir / "h_v.wav").string(), stage.response.as_signal());
        written.push_back((combo.dir / "h_v.wav").string());
        write_wav_float32((combo.dir / "h_u.wav").string(), lab.response.as_signal());
        written.push_back((combo.dir / "h_u.wav").string());

        if (config.emit_json)
            write_text_file((combo.dir / "provenance.json").string(),
                            provenance_json(config, combo.stage_name, combo.lab_name).dump(2) +
                                "\n",
                            written);
        if (config.emit_csv) {
            write_arrivals_csv(stage.arrivals, (combo.dir / "arrivals_stage.csv").string(),
                               written);
            write_arrivals_csv(lab.arrivals, (combo.dir / "arrivals_lab.csv").string(),
                               written);
            if (write_histograms) {
                write_histogram_csv(stage.histogram,
                                    (combo.dir / "histogram_stage.csv").string());
                written.push_back((combo.dir / "histogram_stage.csv").string());
                write_histogram_csv(lab.histogram, (combo.dir / "histogram_lab.csv").string());
                written.push_back((combo.dir / "histogram_lab.csv").string());
            }
        }
    }
}

void auralize_into(const RunConfig& config, std::vector<std::string>& written) {
    const Signal x = load_input(config);
    for (const auto& combo : combos(config)) {
        const auto h_v = read_response((combo.dir / "h_v.wav").string());
        const auto h_u = read_response((combo.dir / "h_u.wav").string());
        const AuralizeResult signals = auralize(x, h_v, h_u);
        write_wav_float32((combo.dir / "y_v.wav").string(), signals.y_v);
        write_wav_float32((combo.dir / "y_u.wav").string(), signals.y_u);
        write_wav_float32((combo.dir / "y_t.wav").string(), signals.y_t);
        for (const char* name : {"y_v.wav", "y_u.wav", "y_t.wav"})
            written.push_back((combo.dir / name).string());
    }
}

std::vector<ComboReport> analyze_into(const RunConfig& config,
                                      const std::map<std::string, AuralizeResult>* in_memory,
                                      std::vector<std::string>& written) {
    std::vector<ComboReport> reports;
    std::vector<BoxplotEntry> plot;
    for (const auto& combo : combos(config)) {
        AuralizeResult signals;
        if (in_memory) {
            signals = in_memory->at(combo.dir.string());
        } else {
            signals.y_v = read_wav((combo.dir / "y_v.wav").string());
            signals.y_u = read_wav((combo.dir / "y_u.wav").string());
            signals.y_t = read_wav((combo.dir / "y_t.wav").string());
        }
        ComboReport report;
        report.stage = combo.stage_name;
        report.lab = combo.lab_name;
        report.analysis = analyze_signals(signals, config);
        if (config.emit_csv)
            write_levels_csv(report.analysis, (combo.dir / "levels.csv").string(), written);
        plot.push_back({sanitize(combo.lab_name) + " / " + sanitize(combo.stage_name),
                        report.analysis.delta_l_stats});
        reports.push_back(std::move(report));
    }

    if (config.emit_json) {
        ordered_json j;
        j["tool"] = "auralab";
        j["version"] = kToolVersion;
        j["jnd_db"] = config.jnd_db;
        j["gate_db"] = config.gate_db;
        j["window_ms"] = config.window_ms;
        j["seed"] = config.seed;
        j["rays"] = config.n_rays;
        ordered_json entries = ordered_json::array();
        for (const auto& r : reports) entries.push_back(report_entry_json(r));
        j["entries"] = entries;
        write_text_file((fs::path(config.out_dir) / "report.json").string(), j.dump(2) + "\n",
                        written);
    }
    if (config.emit_svg) {
        const std::string path = (fs::path(config.out_dir) / "boxplot.svg").string();
        write_boxplot_svg(plot, path, "delta L (dB)");
        written.push_back(path);
    }
    return reports;
}

} // namespace

void cmd_simulate(const RunConfig& config) {
    validate_config(config);
    std::vector<std::string> written;
    run_stage("simulate", [&] {
        simulate_into(config, /*write_histograms=*/true, written);
        return 0;
    });
    update_manifest(config.out_dir, written);
}

void cmd_auralize(const RunConfig& config) {
    validate_config(config);
    std::vector<std::string> written;
    run_stage("auralize", [&] {
        auralize_into(config, written);
        return 0;
    });
    update_manifest(config.out_dir, written);
}

std::vector<ComboReport> cmd_analyze(const RunConfig& config) {
    validate_config(config);
    std::vector<std::string> written;
    auto reports = run_stage("analyze", [&] { return analyze_into(config, nullptr, written); });
    update_manifest(config.out_dir, written);
    return reports;
}

std::vector<ComboReport> cmd_pipeline(const RunConfig& config) {
    validate_config(config);
    std::vector<std::string> written;

    std::map<std::string, BrirResult> stage_cache;
    std::map<std::string, BrirResult> lab_cache;
    run_stage("simulate", [&] {
        for (const auto& combo : combos(config)) {
            fs::create_directories(combo.dir);
            if (!stage_cache.count(combo.stage_name))
                stage_cache[combo.stage_name] =
                    simulate_virtual_stage(resolve_scene(combo.stage_name), config);
            if (!lab_cache.count(combo.lab_name))
                lab_cache[combo.lab_name] =
                    simulate_residual_room(resolve_scene(combo.lab_name), config);
            if (config.emit_wav) {
                write_wav_float32((combo.dir / "h_v.wav").string(),
                                  stage_cache[combo.stage_name].response.as_signal());
                write_wav_float32((combo.dir / "h_u.wav").string(),
                                  lab_cache[combo.lab_name].response.as_signal());
                written.push_back((combo.dir / "h_v.wav").string());
                written.push_back((combo.dir / "h_u.wav").string());
            }
            if (config.emit_json)
                write_text_file(
                    (combo.dir / "provenance.json").string(),
                    provenance_json(config, combo.stage_name, combo.lab_name).dump(2) + "\n",
                    written);
            if (config.emit_csv) {
                write_arrivals_csv(stage_cache[combo.stage_name].arrivals,
                                   (combo.dir / "arrivals_stage.csv").string(), written);
                write_arrivals_csv(lab_cache[combo.lab_name].arrivals,
                                   (combo.dir / "arrivals_lab.csv").string(), written);
            }
        }
        return 0;
    });

    std::map<std::string, AuralizeResult> signals;
    run_stage("auralize", [&] {
        const Signal x = load_input(config);
        // y_v depends only on the stage and y_u only on the room
        std::map<std::string, Signal> y_v_cache, y_u_cache;
        for (const auto& combo : combos(config)) {
            if (!y_v_cache.count(combo.stage_name)) {
                Signal y = convolve(x, stage_cache[combo.stage_name].response);
                quantize_float32(y);
                y_v_cache[combo.stage_name] = std::move(y);
            }
            if (!y_u_cache.count(combo.lab_name)) {
                Signal y = convolve(x, lab_cache[combo.lab_name].response);
                quantize_float32(y);
                y_u_cache[combo.lab_name] = std::move(y);
            }
            AuralizeResult r;
            r.y_v = y_v_cache[combo.stage_name];
            r.y_u = y_u_cache[combo.lab_name];
            r.y_t = mix(r.y_v, r.y_u);
            quantize_float32(r.y_t);
            if (config.emit_wav) {
                write_wav_float32((combo.dir / "y_v.wav").string(), r.y_v);
                write_wav_float32((combo.dir / "y_u.wav").string(), r.y_u);
                write_wav_float32((combo.dir / "y_t.wav").string(), r.y_t);
                for (const char* name : {"y_v.wav", "y_u.wav", "y_t.wav"})
                    written.push_back((combo.dir / name).string());
            }
            signals[combo.dir.string()] = std::move(r);
        }
        return 0;
    });

    auto reports =
        run_stage("analyze", [&] { return analyze_into(config, &signals, written); });
    update_manifest(config.out_dir, written);
    return reports;
}

std::vector<std::string> cmd_check(const std::string& out_dir) {
    const fs::path manifest_path = fs::path(out_dir) / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in)
        throw StageError("check", "no manifest.json in '" + out_dir + "'");
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw StageError("check", std::string("manifest unreadable: ") + e.what());
    }
    std::vector<std::string> mismatched;
    if (!j.contains("files") || !j["files"].is_object())
        throw StageError("check", "manifest has no file table");
    for (auto& [rel, expected] : j["files"].items()) {
        const fs::path path = fs::path(out_dir) / rel;
        if (!fs::exists(path)) {
            mismatched.push_back(rel + " (missing)");
            continue;
        }
        if (sha256_file_hex(path.string()) != expected.get<std::string>())
            mismatched.push_back(rel);
    }
    return mismatched;
}

} // namespace auralab
