#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "auralab/analysis.hpp"
#include "auralab/brir.hpp"
#include "auralab/dsp.hpp"
#include "auralab/scene.hpp"

namespace auralab {

// Run description shared by every subcommand. Scene entries are preset names
// or scene file paths; `input` is an anechoic WAV path or "synthetic".
struct RunConfig {
    std::vector<std::string> stage_scenes{"stage_small", "stage_large"};
    std::vector<std::string> lab_scenes{"anechoic", "booth1", "booth2"};
    std::string input = "synthetic";
    std::string out_dir = "out";
    double sample_rate = 48000.0;
    std::uint64_t n_rays = 100000;
    std::uint64_t seed = 42;
    int max_order = 2;
    double window_ms = 2.0;
    double jnd_db = 1.0;
    double gate_db = 40.0;
    double max_time = 0.0; // seconds; 0 picks 4x the Sabine time per scene
    unsigned threads = 0;  // 0: AURALAB_THREADS env or hardware count
    bool emit_wav = true;
    bool emit_csv = true;
    bool emit_svg = true;
    bool emit_json = true;
};

// Failure annotated with the pipeline stage that raised it.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& message)
        : std::runtime_error(message), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

// Config file uses the scene text syntax (key = value, # comments).
RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);

// Throws StageError("config validation", ...) on missing files or bad values.
void validate_config(const RunConfig& config);

// Deterministic 6-second test excerpt: a melodic pulse train of decaying
// harmonic notes (150 ms grid, 5 ms raised-cosine attack, 35 ms decay, six
// harmonics) with a short seeded noise burst at each onset, peak -6 dBFS.
Signal synthetic_input(double sample_rate, double duration_s = 6.0, std::uint64_t seed = 7);

// Signal as it would survive a float32 WAV round trip.
void quantize_float32(Signal& signal);

struct BrirResult {
    ImpulseResponsePair response;        // float32-quantized
    EnergyHistogram histogram;           // stochastic part
    std::vector<Arrival> arrivals;       // deterministic part
};

// h_v: analytic direct path plus skip-direct stage reflections.
BrirResult simulate_virtual_stage(const Scene& stage_scene, const RunConfig& config);
// h_u: skip-direct lab reflections (hybrid image source + ray tracing for
// shoebox labs), no direct path anywhere.
BrirResult simulate_residual_room(const Scene& lab_scene, const RunConfig& config);

struct AuralizeResult {
    Signal y_v; // virtual sound, float32-quantized
    Signal y_u; // residual sound
    Signal y_t; // total = y_v + y_u, summed in float32
};

AuralizeResult auralize(const Signal& anechoic, const ImpulseResponsePair& h_v,
                        const ImpulseResponsePair& h_u);

struct AnalysisResult {
    LevelTrack l_v, l_u, l_t, snr, delta_l;
    std::vector<bool> gate;
    BoxStats delta_l_stats;   // gated frames
    JndVerdict verdict;
    double snr_median_db = 0.0; // gated frames
};

AnalysisResult analyze_signals(const AuralizeResult& signals, const RunConfig& config);

struct ComboReport {
    std::string stage;
    std::string lab;
    AnalysisResult analysis;
};

// Subcommand entry points. Each processes every (stage, lab) combination,
// writing into <out>/<stage>__<lab>/, and finishes by rewriting the manifest.
void cmd_simulate(const RunConfig& config);
void cmd_auralize(const RunConfig& config);
std::vector<ComboReport> cmd_analyze(const RunConfig& config);
std::vector<ComboReport> cmd_pipeline(const RunConfig& config);

// Verifies every manifest entry; returns the list of mismatched files.
std::vector<std::string> cmd_check(const std::string& out_dir);

std::string combo_dir_name(const std::string& stage, const std::string& lab);

} // namespace auralab
