// Acceptance suite. Runs every criterion at full size and prints one
// PASS/FAIL line each; nonzero exit when anything fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "auralab/analysis.hpp"
#include "auralab/brir.hpp"
#include "auralab/dsp.hpp"
#include "auralab/ism.hpp"
#include "auralab/pipeline.hpp"
#include "auralab/raytrace.hpp"
#include "auralab/rng.hpp"
#include "auralab/scene.hpp"
#include "auralab/sha256.hpp"
#include "box_oracle.hpp"
#include "ism_oracle.hpp"

using namespace auralab;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

template <typename F>
void guarded(int id, const std::string& name, F&& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, name, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

const ComboReport& find_report(const std::vector<ComboReport>& reports,
                               const std::string& stage, const std::string& lab) {
    for (const auto& r : reports)
        if (r.stage == stage && r.lab == lab) return r;
    throw std::runtime_error("missing report for " + stage + " x " + lab);
}

// ---------------------------------------------------------------------------

std::vector<ComboReport> criterion_1(double& runtime_s) {
    RunConfig config;
    config.out_dir = "acceptance_out";
    config.n_rays = 100000;
    config.seed = 42;
    fs::remove_all(config.out_dir);

    const auto t0 = std::chrono::steady_clock::now();
    auto reports = cmd_pipeline(config);
    runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    bool pass = runtime_s < 600.0;
    std::string detail = "runtime " + fmt(runtime_s) + " s";
    for (const std::string stage : {"stage_small", "stage_large"}) {
        const auto& anechoic = find_report(reports, stage, "anechoic").analysis;
        const auto& booth1 = find_report(reports, stage, "booth1").analysis;
        const auto& booth2 = find_report(reports, stage, "booth2").analysis;
        const double m_a = anechoic.delta_l_stats.median;
        const double m_1 = booth1.delta_l_stats.median;
        const double m_2 = booth2.delta_l_stats.median;
        detail += "; " + stage + " medians dB anechoic " + fmt(m_a) + " booth2 " + fmt(m_2) +
                  " booth1 " + fmt(m_1);
        pass = pass && m_a < m_2 && m_2 < m_1;
        pass = pass && m_1 > 1.0 && booth1.verdict.classification == Audibility::audible;
        pass = pass && m_a < 0.2 && anechoic.verdict.classification == Audibility::transparent;
    }
    report(1, "qualitative delta-L reproduction across rooms", pass, detail);
    return reports;
}

void criterion_2(const std::vector<ComboReport>& reports) {
    bool pass = true;
    std::string detail;
    for (const std::string stage : {"stage_small", "stage_large"}) {
        const double s_a = find_report(reports, stage, "anechoic").analysis.snr_median_db;
        const double s_2 = find_report(reports, stage, "booth2").analysis.snr_median_db;
        const double s_1 = find_report(reports, stage, "booth1").analysis.snr_median_db;
        detail += stage + " SNR dB anechoic " + fmt(s_a) + " booth2 " + fmt(s_2) + " booth1 " +
                  fmt(s_1) + "; ";
        pass = pass && s_a > s_2 && s_2 > s_1;
    }
    report(2, "frame-median SNR strictly ordered anechoic > booth2 > booth1", pass, detail);
}

void criterion_3() {
    bool pass = true;
    std::string detail;

    auto fitted_t60 = [](const Scene& scene, std::uint64_t seed) {
        TraceOptions opt;
        opt.n_rays = 100000;
        opt.seed = seed;
        opt.skip_direct = true;
        double sab = 0.0;
        for (std::size_t b = 0; b < kNumBands; ++b) sab = std::max(sab, sabine_rt(scene, b));
        opt.max_time = std::clamp(6.0 * sab, 0.2, 4.0);
        return estimate_t60(trace(scene, opt));
    };

    const Scene booth2 = preset_scene("booth2");
    const double t_booth2 = fitted_t60(booth2, 11);
    const double sabine_booth2 = sabine_rt(booth2, 0);
    detail += "booth2 fit " + fmt(t_booth2) + " s vs Sabine " + fmt(sabine_booth2) + " s";
    pass = pass && std::abs(t_booth2 - sabine_booth2) / sabine_booth2 <= 0.20;

    Rng rng(314);
    for (int i = 0; i < 5; ++i) {
        Scene scene;
        Shoebox box;
        box.width = 2.5 + 4.0 * rng.uniform();
        box.length = 2.5 + 4.0 * rng.uniform();
        box.height = 2.2 + 2.0 * rng.uniform();
        scene.room = box;
        const double alpha = 0.1 + 0.5 * rng.uniform();
        scene.materials["walls"] = Material::uniform(alpha, 0.1);
        scene.source.position = {box.width * 0.45, box.length * 0.6, box.height * 0.5};
        scene.receiver.position = {box.width * 0.55, box.length * 0.35, box.height * 0.55};
        const double fit = fitted_t60(scene, 100 + static_cast<std::uint64_t>(i));
        const double sabine = sabine_rt(scene, 0);
        const double err = std::abs(fit - sabine) / sabine;
        detail += "; box" + std::to_string(i) + " alpha " + fmt(alpha) + " fit " + fmt(fit) +
                  " vs " + fmt(sabine) + " (" + fmt(100.0 * err) + "%)";
        pass = pass && err <= 0.20;
    }
    report(3, "ray tracer decay matches Sabine within 20%", pass, detail);
}

void criterion_4() {
    Rng rng(2718);
    bool pass = true;
    std::string detail;
    for (int trial = 0; trial < 20 && pass; ++trial) {
        Scene scene;
        Shoebox box;
        box.width = 2.0 + 5.0 * rng.uniform();
        box.length = 2.0 + 5.0 * rng.uniform();
        box.height = 2.0 + 2.5 * rng.uniform();
        box.wall_materials = {"w0", "w1", "w2", "w3", "w4", "w5"};
        scene.room = box;
        BandArray alphas[6];
        for (int w = 0; w < 6; ++w) {
            Material m;
            for (std::size_t b = 0; b < kNumBands; ++b) {
                m.absorption[b] = 0.9 * rng.uniform();
                m.scattering[b] = rng.uniform();
            }
            alphas[w] = m.absorption;
            scene.materials["w" + std::to_string(w)] = m;
        }
        scene.source.position = {box.width * (0.2 + 0.6 * rng.uniform()),
                                 box.length * (0.2 + 0.6 * rng.uniform()),
                                 box.height * (0.2 + 0.6 * rng.uniform())};
        scene.receiver.position = {box.width * (0.2 + 0.6 * rng.uniform()),
                                   box.length * (0.2 + 0.6 * rng.uniform()),
                                   box.height * (0.2 + 0.6 * rng.uniform())};

        const auto oracle = ism_oracle::oracle_images(box, scene.source.position, 3);
        const auto arrivals = ism_arrivals(scene, 3, false);
        if (arrivals.size() != oracle.size()) {
            pass = false;
            detail = "trial " + std::to_string(trial) + ": count mismatch";
            break;
        }
        for (const auto& a : arrivals) {
            const double dist = a.delay * scene.speed_of_sound;
            const Vec3 img_pos = scene.receiver.position + a.direction * dist;
            const auto it = oracle.find(ism_oracle::quantize(img_pos));
            if (it == oracle.end()) {
                pass = false;
                detail = "trial " + std::to_string(trial) + ": unmatched image position";
                break;
            }
            const double oracle_dist = distance(it->second.pos, scene.receiver.position);
            if (std::abs(a.delay - oracle_dist / scene.speed_of_sound) > 1e-12 * (1.0 + a.delay)) {
                pass = false;
                detail = "trial " + std::to_string(trial) + ": delay mismatch";
                break;
            }
            for (std::size_t b = 0; b < kNumBands && pass; ++b) {
                double amp = 1.0 / oracle_dist;
                for (int w = 0; w < 6; ++w)
                    amp *= std::pow(std::sqrt(1.0 - alphas[w][b]), it->second.counts[w]);
                if (std::abs(a.amplitude[b] - amp) > 1e-9 * std::abs(amp)) {
                    pass = false;
                    detail = "trial " + std::to_string(trial) + ": amplitude mismatch";
                }
            }
            if (!pass) break;
        }
    }
    report(4, "image sources equal the brute-force mirror oracle (20 rooms, order 3)", pass,
           detail);
}

void criterion_5() {
    bool pass = true;
    std::string detail;

    // Eq.-style additivity: the stored total equals the float sum of parts
    {
        Rng rng(5);
        std::vector<double> va(200000), vb(150000);
        for (auto& v : va) v = static_cast<float>(2.0 * rng.uniform() - 1.0);
        for (auto& v : vb) v = static_cast<float>(2.0 * rng.uniform() - 1.0);
        Signal y_v = Signal::mono(va, 48000.0);
        Signal y_u = Signal::mono(vb, 48000.0);
        Signal y_t = mix(y_v, y_u);
        quantize_float32(y_t);
        for (std::size_t i = 0; i < y_t.length(); ++i) {
            const float a = i < va.size() ? static_cast<float>(va[i]) : 0.0f;
            const float b = i < vb.size() ? static_cast<float>(vb[i]) : 0.0f;
            if (y_t.channels[0][i] != static_cast<double>(a + b)) {
                pass = false;
                detail += "additivity broke at sample " + std::to_string(i) + "; ";
                break;
            }
        }
    }

    // fast convolution against the direct oracle
    {
        Rng rng(6);
        std::vector<double> x(20000), h(2500);
        for (auto& v : x) v = 2.0 * rng.uniform() - 1.0;
        for (auto& v : h) v = 2.0 * rng.uniform() - 1.0;
        const auto fast = fft_convolve(x, h);
        const auto direct = direct_convolve(x, h);
        double scale = 0.0, err = 0.0;
        for (double v : direct) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 0; i < fast.size(); ++i)
            err = std::max(err, std::abs(fast[i] - direct[i]));
        if (err / scale > 1e-6) {
            pass = false;
            detail += "convolution error " + fmt(err / scale) + "; ";
        }
    }

    // coherent-copy delta L identity at alpha in {0, 0.5, 1}
    {
        Rng rng(7);
        std::vector<double> base(48000);
        for (auto& v : base) v = 2.0 * rng.uniform() - 1.0;
        const Signal y_v = Signal::mono(base, 48000.0);
        const LevelTrack lv = level_track(y_v);
        const double expected[3] = {0.0, 3.5218251811136247, 6.0205999132796239};
        const double alphas[3] = {0.0, 0.5, 1.0};
        for (int k = 0; k < 3; ++k) {
            Signal y_u = y_v;
            for (auto& v : y_u.channels[0]) v *= alphas[k];
            const LevelTrack dl = delta_l_track(level_track(mix(y_v, y_u)), lv);
            for (double v : dl.values_db)
                if (std::abs(v - expected[k]) > 1e-9) {
                    pass = false;
                    detail += "delta L at alpha " + fmt(alphas[k]) + " gave " + fmt(v) + "; ";
                    break;
                }
        }
    }
    report(5, "dsp identities (additivity, convolution oracle, delta-L law)", pass, detail);
}

void criterion_6() {
    Rng rng(600);
    bool pass = true;
    std::string detail;
    for (int trial = 0; trial < 1000 && pass; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 300);
        std::vector<double> samples(n);
        for (auto& v : samples) {
            v = 8.0 * (rng.uniform() - 0.5);
            if (rng.uniform() < 0.3) v = 0.0; // force degenerate IQR often
            if (rng.uniform() < 0.08) v *= 50.0;
        }
        const BoxStats s = boxplot_stats(samples);
        const auto o = box_oracle::oracle_box(samples);
        const auto close = [](double a, double b) {
            return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(b));
        };
        if (!(close(s.median, o.median) && close(s.q1, o.q1) && close(s.q3, o.q3) &&
              close(s.whisker_low, o.wlow) && close(s.whisker_high, o.whigh) &&
              s.outliers.size() == o.outliers.size())) {
            pass = false;
            detail = "mismatch on trial " + std::to_string(trial);
        }
        // whisker rule: everything kept lies within 1.5 IQR of the box
        if (pass && (s.whisker_low < s.q1 - 1.5 * s.iqr - 1e-12 ||
                     s.whisker_high > s.q3 + 1.5 * s.iqr + 1e-12)) {
            pass = false;
            detail = "whisker outside the 1.5 IQR fence on trial " + std::to_string(trial);
        }
    }
    report(6, "boxplot equals the sort-based oracle on 1000 sample sets", pass, detail);
}

void criterion_7() {
    RunConfig config;
    config.stage_scenes = {"stage_small"};
    config.lab_scenes = {"booth2"};
    config.n_rays = 20000;
    config.seed = 77;
    config.max_time = 1.0;
    config.threads = 0; // defer to AURALAB_THREADS

    auto run_with_threads = [&](const char* threads, const std::string& dir) {
        setenv("AURALAB_THREADS", threads, 1);
        RunConfig c = config;
        c.out_dir = dir;
        fs::remove_all(dir);
        (void)cmd_pipeline(c);
        unsetenv("AURALAB_THREADS");
        std::map<std::string, std::string> hashes;
        for (const auto& entry : fs::recursive_directory_iterator(dir)) {
            if (!entry.is_regular_file()) continue;
            const std::string ext = entry.path().extension().string();
            if (ext == ".wav" || ext == ".json")
                hashes[fs::relative(entry.path(), dir).generic_string()] =
                    sha256_file_hex(entry.path().string());
        }
        return hashes;
    };

    const auto first = run_with_threads("1", "acceptance_det_1");
    const auto second = run_with_threads("3", "acceptance_det_3");
    bool pass = first == second && !first.empty();
    std::string detail = std::to_string(first.size()) + " artifacts compared";
    if (!pass)
        for (const auto& [rel, hash] : first)
            if (!second.count(rel) || second.at(rel) != hash) detail += "; differs: " + rel;
    fs::remove_all("acceptance_det_1");
    fs::remove_all("acceptance_det_3");
    report(7, "byte-identical outputs across runs and thread counts", pass, detail);
}

void criterion_8() {
    bool pass = true;
    std::string detail;
    // band energy of the output = raw energy over the band's unit-impulse
    // share, the scale on which deterministic arrivals deposit band energy
    const BandFilterbank bank = BandFilterbank::design(48000.0);
    for (const char* name :
         {"anechoic", "booth1", "booth2", "stage_small", "stage_large"}) {
        const Scene scene = preset_scene(name);
        TraceOptions opt;
        opt.n_rays = 20000;
        opt.seed = 88;
        opt.skip_direct = true;
        opt.max_time = scene.is_shoebox() ? 0.4 : 1.0;
        opt.threads = 0;
        const EnergyHistogram hist = trace(scene, opt);

        double max_band = 0.0;
        for (std::size_t b = 0; b < kNumBands; ++b)
            max_band = std::max(max_band, hist.band_total(b));
        double worst = 0.0;
        for (std::size_t b = 0; b < kNumBands; ++b) {
            const double total = hist.band_total(b);
            if (total <= 1e-9 * max_band) continue;
            EnergyHistogram masked = EnergyHistogram::zeros(hist.bin_width,
                                                            static_cast<double>(hist.n_time_bins) *
                                                                hist.bin_width);
            for (std::size_t t = 0; t < hist.n_time_bins; ++t)
                for (std::size_t d = 0; d < kNumDirectionBins; ++d)
                    masked.at(b, t, d) = hist.at(b, t, d);
            const auto response =
                synthesize_brir({}, masked, HrtfSet::identity(), 48000.0, 99);
            double energy = 0.0;
            for (double v : response.left) energy += v * v;
            for (double v : response.right) energy += v * v;
            energy /= bank.band_energies[b];
            worst = std::max(worst, std::abs(energy - total) / total);
        }
        detail += std::string(name) + " worst band error " + fmt(100.0 * worst) + "%; ";
        pass = pass && worst <= 0.05;
    }
    report(8, "late-field band energies match histogram totals within 5%", pass, detail);
}

} // namespace

int main() {
    std::printf("auralab acceptance suite\n");
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<ComboReport> reports;
    guarded(1, "qualitative delta-L reproduction across rooms", [&] {
        double runtime = 0.0;
        reports = criterion_1(runtime);
    });
    guarded(2, "frame-median SNR ordering", [&] {
        if (reports.empty()) throw std::runtime_error("criterion 1 did not produce reports");
        criterion_2(reports);
    });
    guarded(3, "ray tracer decay vs Sabine", [] { criterion_3(); });
    guarded(4, "image source oracle", [] { criterion_4(); });
    guarded(5, "dsp identities", [] { criterion_5(); });
    guarded(6, "boxplot oracle", [] { criterion_6(); });
    guarded(7, "determinism", [] { criterion_7(); });
    guarded(8, "energy matching", [] { criterion_8(); });

    const double total =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s (%d failure%s, %.1f s total)\n", failures == 0 ? "ALL PASS" : "FAILURES",
                failures, failures == 1 ? "" : "s", total);
    return failures == 0 ? 0 : 1;
}
