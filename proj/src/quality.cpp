#include "sdrtk/quality.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <thread>

#include "sdrtk/channel.hpp"
#include "sdrtk/demod.hpp"
#include "sdrtk/error.hpp"
#include "sdrtk/iq_io.hpp"
#include "sdrtk/receiver.hpp"

namespace sdrtk {

std::vector<QualityGridRow> reference_quality_grid() {
    const QualityGridRow rows[] = {
        {8000.0, 12.5, WindowKind::BlackmanHarris4, DemodMode::NFM},
        {10000.0, 5.0, WindowKind::BlackmanHarris7, DemodMode::NFM},
        {116240.0, 10.0, WindowKind::Blackman, DemodMode::NFM},
        {6000.0, 0.01, WindowKind::BlackmanHarris4, DemodMode::NFM},
    };
    const DemodMode modes[] = {DemodMode::NFM, DemodMode::WFM, DemodMode::AM, DemodMode::DSB};
    std::vector<QualityGridRow> grid;
    for (const auto& r : rows) {
        for (auto m : modes) {
            QualityGridRow g = r;
            g.mode = m;
            grid.push_back(g);
        }
    }
    return grid;
}

std::string to_string(SnrMethod m) {
    return m == SnrMethod::PreDemodInBand ? "pre_demod_in_band" : "post_demod_tone";
}

QualityReport evaluate_quality_cell(const QualitySceneTemplate& t, const QualityGridRow& row, double injected_snr_db,
                                    std::uint64_t cell_seed) {
    const double cutoff = clamp_audio_cutoff(row.baseband_hz);

    SceneSpec scene;
    scene.center_hz = t.center_hz;
    scene.sample_rate_hz = t.sample_rate_hz;
    scene.duration_s = t.duration_s;
    scene.seed = cell_seed;
    StationConfig st = StationConfig::defaults(row.mode);
    st.freq_hz = t.center_hz + t.station_offset_hz;
    st.audio = ToneAudio{t.tone_hz, 1.0};
    st.power_db = t.power_db;
    st.audio_bandwidth_hz = cutoff;
    scene.stations.push_back(st);
    scene.channel.snr_db = injected_snr_db;

    TuningParams p;
    p.center_hz = t.center_hz;
    p.step_hz = row.step_khz * 1e3;
    p.offset_hz = snap_to_step(t.station_offset_hz, p.step_hz);
    p.baseband_hz = row.baseband_hz;
    p.mode = row.mode;
    p.window = row.window;
    p.order = t.order;

    SceneSource source(scene);
    RxChain rx(p, t.sample_rate_hz, t.center_hz);
    IqBlock all;
    all.sample_rate_hz = t.sample_rate_hz;
    all.center_hz = t.center_hz;
    std::vector<double> audio;
    while (auto b = source.next(kDefaultBlockSize)) {
        const auto out = rx.process(*b);
        audio.insert(audio.end(), out.audio.samples.begin(), out.audio.samples.end());
        all.samples.insert(all.samples.end(), b->samples.begin(), b->samples.end());
    }

    QualityReport r;
    r.baseband_hz = row.baseband_hz;
    r.step_khz = row.step_khz;
    r.window = row.window;
    r.mode = row.mode;
    r.injected_snr_db = injected_snr_db;
    r.method = SnrMethod::PreDemodInBand;
    r.snr_db = estimate_snr(all, p.tuned_hz(), rx.plan().occupied_bw_hz);

    // Skip the filter start-up before measuring the recovered tone.
    const std::size_t skip = std::min(audio.size() / 4, static_cast<std::size_t>(kAudioRateHz / 20));
    const std::span<const double> settled(audio.data() + skip, audio.size() - skip);
    r.audio_snr_db = audio_tone_snr_db(settled, kAudioRateHz, t.tone_hz, 50.0, cutoff);
    r.quality = classify_quality(r.snr_db);
    return r;
}

std::vector<QualityReport> quality_matrix(const QualitySceneTemplate& scene, const std::vector<QualityGridRow>& grid,
                                          const std::vector<double>& injected_snrs, unsigned threads) {
    if (grid.empty()) throw ValueError("quality grid is empty");
    if (injected_snrs.empty()) throw ValueError("no injected SNR values");
    const std::size_t cells = grid.size() * injected_snrs.size();
    std::vector<QualityReport> out(cells);
    std::vector<std::exception_ptr> errors(cells);

    auto run_cell = [&](std::size_t i) {
        const auto& row = grid[i / injected_snrs.size()];
        const double snr = injected_snrs[i % injected_snrs.size()];
        try {
            out[i] = evaluate_quality_cell(scene, row, snr, derive_seed(scene.seed, i));
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, cells));
    if (threads <= 1) {
        for (std::size_t i = 0; i < cells; ++i) run_cell(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < threads; ++k) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < cells; i = next++) run_cell(i);
            });
        }
        for (auto& th : pool) th.join();
    }

    for (std::size_t i = 0; i < cells; ++i) {
        if (!errors[i]) continue;
        const auto& row = grid[i / injected_snrs.size()];
        std::string what = "unknown error";
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            what = e.what();
        }
        throw ValueError("quality cell (baseband " + std::to_string(row.baseband_hz) + " Hz, step " +
                         std::to_string(row.step_khz) + " kHz, " + to_string(row.window) + ", " +
                         to_string(row.mode) + ", injected " +
                         std::to_string(injected_snrs[i % injected_snrs.size()]) + " dB): " + what);
    }
    return out;
}

void write_quality_csv(std::ostream& os, const std::vector<QualityReport>& reports) {
    os << kQualityCsvHeader << '\n';
    const auto flags = os.flags();
    for (const auto& r : reports) {
        os << std::defaultfloat << std::setprecision(10) << r.baseband_hz << ',' << r.step_khz << ','
           << to_string(r.window) << ',' << to_string(r.mode) << ',' << r.injected_snr_db << ',' << std::fixed
           << std::setprecision(2) << r.snr_db << ',' << to_string(r.quality) << '\n';
    }
    os.flags(flags);
}

}  // namespace sdrtk
