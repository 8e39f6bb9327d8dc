#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "auralab/analysis.hpp"
#include "auralab/audio_io.hpp"
#include "auralab/pipeline.hpp"
#include "auralab/sha256.hpp"

using namespace auralab;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(const std::string& out_dir) {
    RunConfig config;
    config.stage_scenes = {"stage_small"};
    config.lab_scenes = {"booth2"};
    config.input = "synthetic";
    config.out_dir = out_dir;
    config.n_rays = 4000;
    config.seed = 9;
    config.max_time = 0.5;
    config.threads = 1;
    return config;
}

std::vector<std::string> artifact_files(const std::string& out_dir) {
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(out_dir))
        if (entry.is_regular_file()) files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    return files;
}

} // namespace

TEST_CASE("config text parses keys, lists and emit kinds") {
    const RunConfig config = parse_config_text("# comment\n"
                                               "scene_stage = stage_small, stage_large\n"
                                               "scene_lab = booth1\n"
                                               "input = synthetic\n"
                                               "out = some/dir\n"
                                               "rays = 1234\n"
                                               "seed = 5\n"
                                               "order = 3\n"
                                               "window_ms = 4\n"
                                               "jnd_db = 0.8\n"
                                               "gate_db = 30\n"
                                               "emit = wav, json\n");
    CHECK(config.stage_scenes == std::vector<std::string>{"stage_small", "stage_large"});
    CHECK(config.lab_scenes == std::vector<std::string>{"booth1"});
    CHECK(config.out_dir == "some/dir");
    CHECK(config.n_rays == 1234);
    CHECK(config.seed == 5);
    CHECK(config.max_order == 3);
    CHECK(config.window_ms == doctest::Approx(4.0));
    CHECK(config.jnd_db == doctest::Approx(0.8));
    CHECK(config.gate_db == doctest::Approx(30.0));
    CHECK(config.emit_wav);
    CHECK(!config.emit_csv);
    CHECK(!config.emit_svg);
    CHECK(config.emit_json);

    CHECK_THROWS_AS((void)parse_config_text("rays = many\n"), std::runtime_error);
    CHECK_THROWS_AS((void)parse_config_text("unknown_key = 1\n"), std::runtime_error);
}

TEST_CASE("missing input files fail in config validation") {
    RunConfig config = small_config("pipeline_tmp_badcfg");
    config.input = "no_such_file.wav";
    try {
        validate_config(config);
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == "config validation");
        CHECK(std::string(e.what()).find("no_such_file.wav") != std::string::npos);
    }
    fs::remove_all("pipeline_tmp_badcfg");
}

TEST_CASE("the synthetic excerpt is deterministic, mono and headroom-limited") {
    const Signal a = synthetic_input(48000.0);
    const Signal b = synthetic_input(48000.0);
    REQUIRE(a.num_channels() == 1);
    CHECK(a.length() == 288000); // 6 s at 48 kHz
    double peak = 0.0;
    for (double v : a.channels[0]) peak = std::max(peak, std::abs(v));
    CHECK(peak == doctest::Approx(0.5).epsilon(1e-6));
    REQUIRE(a.length() == b.length());
    for (std::size_t i = 0; i < a.length(); ++i)
        CHECK(a.channels[0][i] == b.channels[0][i]);
    // float32-clean so WAV round trips exactly
    for (std::size_t i = 0; i < a.length(); ++i)
        CHECK(a.channels[0][i] == static_cast<double>(static_cast<float>(a.channels[0][i])));
}

TEST_CASE("a residual room with total absorption yields a numerically zero response") {
    Scene lab = preset_scene("booth2");
    lab.materials["walls"] = Material::uniform(1.0, 0.0);
    const fs::path path = "lab_alpha1_tmp.scene";
    save_scene_file(lab, path.string());

    RunConfig config = small_config("unused");
    config.n_rays = 2000;
    const BrirResult result = simulate_residual_room(load_scene_file(path.string()), config);
    double energy = 0.0;
    for (double v : result.response.left) energy += v * v;
    for (double v : result.response.right) energy += v * v;
    CHECK(energy == 0.0);
    fs::remove(path);
}

TEST_CASE("auralizing a unit impulse returns the response itself") {
    RunConfig config = small_config("unused2");
    config.n_rays = 2000;
    const BrirResult lab = simulate_residual_room(preset_scene("booth2"), config);

    std::vector<double> impulse(16, 0.0);
    impulse[0] = 1.0;
    const AuralizeResult out =
        auralize(Signal::mono(impulse, 48000.0), lab.response, lab.response);
    REQUIRE(out.y_v.length() >= lab.response.length());
    for (std::size_t i = 0; i < lab.response.length(); ++i) {
        CHECK(out.y_v.channels[0][i] == lab.response.left[i]);
        CHECK(out.y_v.channels[1][i] == lab.response.right[i]);
    }
}

TEST_CASE("full pipeline: artifacts, determinism, additivity and consistency") {
    const std::string out_a = "pipeline_tmp_a";
    const std::string out_b = "pipeline_tmp_b";
    fs::remove_all(out_a);
    fs::remove_all(out_b);

    RunConfig config = small_config(out_a);
    const auto reports = cmd_pipeline(config);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].stage == "stage_small");
    CHECK(reports[0].lab == "booth2");

    const fs::path combo = fs::path(out_a) / combo_dir_name("stage_small", "booth2");
    for (const char* name : {"h_v.wav", "h_u.wav", "y_v.wav", "y_u.wav", "y_t.wav",
                             "provenance.json", "levels.csv", "arrivals_lab.csv"})
        CHECK(fs::exists(combo / name));
    CHECK(fs::exists(fs::path(out_a) / "report.json"));
    CHECK(fs::exists(fs::path(out_a) / "boxplot.svg"));
    CHECK(fs::exists(fs::path(out_a) / "manifest.json"));

    SUBCASE("pipeline is deterministic across runs") {
        RunConfig config_b = config;
        config_b.out_dir = out_b;
        (void)cmd_pipeline(config_b);
        const auto files_a = artifact_files(out_a);
        const auto files_b = artifact_files(out_b);
        REQUIRE(files_a.size() == files_b.size());
        for (std::size_t i = 0; i < files_a.size(); ++i) {
            CHECK(fs::path(files_a[i]).filename() == fs::path(files_b[i]).filename());
            CHECK(sha256_file_hex(files_a[i]) == sha256_file_hex(files_b[i]));
        }
    }

    SUBCASE("y_t equals y_v plus y_u in float32 arithmetic") {
        const Signal y_v = read_wav((combo / "y_v.wav").string());
        const Signal y_u = read_wav((combo / "y_u.wav").string());
        const Signal y_t = read_wav((combo / "y_t.wav").string());
        REQUIRE(y_t.length() == std::max(y_v.length(), y_u.length()));
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t i = 0; i < y_t.length(); ++i) {
                const float a = i < y_v.length() ? static_cast<float>(y_v.channels[c][i]) : 0.0f;
                const float b = i < y_u.length() ? static_cast<float>(y_u.channels[c][i]) : 0.0f;
                CHECK(static_cast<double>(a + b) == y_t.channels[c][i]);
            }
    }

    SUBCASE("report.json agrees with boxplot_stats over the exported levels.csv") {
        std::ifstream csv(combo / "levels.csv");
        std::string line;
        std::getline(csv, line);
        REQUIRE(line == "t_s,l_v_db,l_u_db,l_t_db,snr_db,delta_l_db");
        std::vector<double> lv_col, dl_col;
        while (std::getline(csv, line)) {
            std::istringstream row(line);
            std::string cell;
            std::vector<double> cells;
            while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
            REQUIRE(cells.size() == 6);
            lv_col.push_back(cells[1]);
            dl_col.push_back(cells[5]);
        }
        LevelTrack lv;
        lv.values_db = lv_col;
        const auto mask = gate_frames(lv, config.gate_db);
        std::vector<double> gated;
        for (std::size_t i = 0; i < dl_col.size(); ++i)
            if (mask[i]) gated.push_back(dl_col[i]);
        const BoxStats recomputed = boxplot_stats(gated);

        std::ifstream report_file(fs::path(out_a) / "report.json");
        const auto report = nlohmann::json::parse(report_file);
        const auto& entry = report.at("entries").at(0);
        CHECK(entry.at("median_db").get<double>() ==
              doctest::Approx(recomputed.median).epsilon(1e-12));
        CHECK(entry.at("q1_db").get<double>() == doctest::Approx(recomputed.q1).epsilon(1e-12));
        CHECK(entry.at("q3_db").get<double>() == doctest::Approx(recomputed.q3).epsilon(1e-12));
        CHECK(entry.at("n_outliers").get<std::size_t>() == recomputed.outliers.size());
    }

    SUBCASE("the manifest verifies and detects tampering") {
        CHECK(cmd_check(out_a).empty());
        {
            std::fstream f(combo / "y_t.wav",
                           std::ios::binary | std::ios::in | std::ios::out);
            f.seekp(200);
            const char byte = 0x5a;
            f.write(&byte, 1);
        }
        const auto bad = cmd_check(out_a);
        REQUIRE(bad.size() == 1);
        CHECK(bad[0].find("y_t.wav") != std::string::npos);
    }

    fs::remove_all(out_a);
    fs::remove_all(out_b);
}

TEST_CASE("standalone simulate/auralize/analyze chain matches the pipeline") {
    const std::string out_staged = "pipeline_tmp_staged";
    const std::string out_direct = "pipeline_tmp_direct";
    fs::remove_all(out_staged);
    fs::remove_all(out_direct);

    RunConfig config = small_config(out_staged);
    config.n_rays = 2000;
    cmd_simulate(config);
    cmd_auralize(config);
    (void)cmd_analyze(config);

    RunConfig direct = config;
    direct.out_dir = out_direct;
    (void)cmd_pipeline(direct);

    // identical reports whether stages run separately or fused
    std::ifstream a(fs::path(out_staged) / "report.json");
    std::ifstream b(fs::path(out_direct) / "report.json");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());

    fs::remove_all(out_staged);
    fs::remove_all(out_direct);
}
