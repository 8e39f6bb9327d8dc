// auralab - room acoustics laboratory validation toolkit
//
// Subcommands: simulate, auralize, analyze, pipeline, check.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "auralab/pipeline.hpp"

namespace {

struct Flags {
    std::string config_path;
    std::string scene_stage;
    std::string scene_lab;
    std::string input;
    std::string out;
    std::string emit;
    std::int64_t rays = -1;
    std::int64_t seed = -1;
    int order = -1;
    double window_ms = -1.0;
    double jnd_db = -1.0;
    double gate_db = -1.0;
    double max_time = -1.0;
    int threads = -1;
};

void add_common_flags(CLI::App* cmd, Flags& flags) {
    cmd->add_option("--config", flags.config_path, "config file (key = value lines)");
    cmd->add_option("--scene-stage", flags.scene_stage,
                    "virtual stage preset(s) or scene file(s), comma separated");
    cmd->add_option("--scene-lab", flags.scene_lab,
                    "laboratory room preset(s) or scene file(s), comma separated");
    cmd->add_option("--input", flags.input, "anechoic mono WAV, or 'synthetic'");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--rays", flags.rays, "rays per trace");
    cmd->add_option("--seed", flags.seed, "random seed");
    cmd->add_option("--order", flags.order, "image source order for lab rooms");
    cmd->add_option("--window-ms", flags.window_ms, "level analysis window");
    cmd->add_option("--jnd-db", flags.jnd_db, "just-noticeable difference");
    cmd->add_option("--gate-db", flags.gate_db, "frame gate below the L_v peak");
    cmd->add_option("--max-time", flags.max_time, "trace duration cap in seconds");
    cmd->add_option("--emit", flags.emit, "artifact kinds: wav,csv,svg,json");
    cmd->add_option("--threads", flags.threads, "worker cap (also AURALAB_THREADS)");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// config file first, then command line flags on top
auralab::RunConfig build_config(const Flags& flags) {
    auralab::RunConfig config;
    if (!flags.config_path.empty()) config = auralab::load_config_file(flags.config_path);
    if (!flags.scene_stage.empty()) config.stage_scenes = split_list(flags.scene_stage);
    if (!flags.scene_lab.empty()) config.lab_scenes = split_list(flags.scene_lab);
    if (!flags.input.empty()) config.input = flags.input;
    if (!flags.out.empty()) config.out_dir = flags.out;
    if (flags.rays >= 0) config.n_rays = static_cast<std::uint64_t>(flags.rays);
    if (flags.seed >= 0) config.seed = static_cast<std::uint64_t>(flags.seed);
    if (flags.order >= 0) config.max_order = flags.order;
    if (flags.window_ms > 0.0) config.window_ms = flags.window_ms;
    if (flags.jnd_db > 0.0) config.jnd_db = flags.jnd_db;
    if (flags.gate_db > 0.0) config.gate_db = flags.gate_db;
    if (flags.max_time > 0.0) config.max_time = flags.max_time;
    if (flags.threads >= 0) config.threads = static_cast<unsigned>(flags.threads);
    if (!flags.emit.empty()) {
        config.emit_wav = config.emit_csv = config.emit_svg = config.emit_json = false;
        for (const auto& kind : split_list(flags.emit)) {
            if (kind == "wav") config.emit_wav = true;
            else if (kind == "csv") config.emit_csv = true;
            else if (kind == "svg") config.emit_svg = true;
            else if (kind == "json") config.emit_json = true;
            else throw std::runtime_error("unknown emit kind '" + kind + "'");
        }
    }
    return config;
}

void print_reports(const std::vector<auralab::ComboReport>& reports) {
    for (const auto& r : reports) {
        const auto& s = r.analysis.delta_l_stats;
        std::printf("%-12s x %-12s  median dL %7.3f dB  q3 %7.3f dB  SNR median %7.2f dB  -> %s\n",
                    r.stage.c_str(), r.lab.c_str(), s.median, s.q3,
                    r.analysis.snr_median_db,
                    auralab::audibility_name(r.analysis.verdict.classification).c_str());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"auralab - virtual stage / laboratory room auralization toolkit"};
    app.require_subcommand(1);

    Flags flags;
    auto* sim = app.add_subcommand("simulate", "synthesize h_v and h_u responses");
    auto* aur = app.add_subcommand("auralize", "convolve the anechoic input into y_v/y_u/y_t");
    auto* ana = app.add_subcommand("analyze", "level tracks, SNR/dL statistics and verdicts");
    auto* pipe = app.add_subcommand("pipeline", "simulate + auralize + analyze in one go");
    auto* check = app.add_subcommand("check", "verify the output manifest hashes");
    for (auto* cmd : {sim, aur, ana, pipe}) add_common_flags(cmd, flags);
    std::string check_dir = "out";
    check->add_option("--out", check_dir, "output directory to verify");

    CLI11_PARSE(app, argc, argv);

    try {
        if (check->parsed()) {
            const auto bad = auralab::cmd_check(check_dir);
            if (bad.empty()) {
                std::printf("manifest ok\n");
                return 0;
            }
            for (const auto& f : bad) std::fprintf(stderr, "hash mismatch: %s\n", f.c_str());
            return 1;
        }
        const auralab::RunConfig config = build_config(flags);
        if (sim->parsed()) {
            auralab::cmd_simulate(config);
        } else if (aur->parsed()) {
            auralab::cmd_auralize(config);
        } else if (ana->parsed()) {
            print_reports(auralab::cmd_analyze(config));
        } else if (pipe->parsed()) {
            print_reports(auralab::cmd_pipeline(config));
        }
        return 0;
    } catch (const auralab::StageError& e) {
        std::fprintf(stderr, "error [%s]: %s\n", e.stage().c_str(), e.what());
        return e.stage() == "config validation" ? 2 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
