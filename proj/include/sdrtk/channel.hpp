#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sdrtk/modulate.hpp"
#include "sdrtk/types.hpp"

namespace sdrtk {

/// Portable Gaussian source: mt19937_64 (fully specified by the standard) feeding a
/// Box-Muller transform, so seeded streams are identical on every platform.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed);
    double uniform();   // (0, 1]
    double normal();    // N(0, 1)
    Sample complex_normal(double variance);  // E|z|^2 = variance

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Derive an independent 64-bit seed for a sub-stream (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct ToneAudio {
    double freq_hz = 1000.0;
    double amplitude = 1.0;
};
struct FileAudio {
    std::filesystem::path path;
};
struct NoiseAudio {
    double bandwidth_hz = 3000.0;
};
using AudioSource = std::variant<ToneAudio, FileAudio, NoiseAudio>;

/// Streaming 48 kHz audio generator for an AudioSource.
class AudioGenerator {
public:
    AudioGenerator(const AudioSource& source, std::uint64_t seed);
    ~AudioGenerator();
    AudioGenerator(AudioGenerator&&) noexcept;
    AudioGenerator& operator=(AudioGenerator&&) noexcept;
    std::vector<double> next(std::size_t n);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct StationConfig {
    double freq_hz = 0.0;  // absolute carrier
    DemodMode mode = DemodMode::NFM;
    double deviation_hz = 2500.0;
    double am_depth = 0.5;
    double audio_bandwidth_hz = 5000.0;
    AudioSource audio = ToneAudio{};
    double power_db = 0.0;

    static StationConfig defaults(DemodMode mode);
    TxConfig tx_config(double scene_center_hz, double sample_rate_hz) const;
    double nominal_bandwidth_hz() const;
};

struct ChannelSpec {
    std::optional<double> snr_db;  // absent: noiseless
    std::size_t reference = 0;     // station whose power defines S
    double freq_offset_hz = 0.0;   // receiver LO error
    double gain_db = 0.0;
    bool hardware_noise = false;   // add the tuner's noise-figure floor
};

struct SceneSpec {
    double center_hz = 100e6;
    double sample_rate_hz = kMaxRtlSampleRateHz;
    double duration_s = 1.0;
    std::uint64_t seed = 1;
    std::vector<StationConfig> stations;
    ChannelSpec channel;

    void validate() const;
};

SceneSpec parse_scene_json(const std::string& text);
SceneSpec load_scene(const std::filesystem::path& path);
std::string scene_to_json(const SceneSpec& scene);

/// Sum of modulated stations mixed to their offsets. Unbounded streams ignore duration_s.
class SceneComposer {
public:
    SceneComposer(std::vector<StationConfig> stations, double center_hz, double sample_rate_hz, double duration_s,
                  std::uint64_t seed, bool unbounded = false);
    ~SceneComposer();
    SceneComposer(SceneComposer&&) noexcept;
    SceneComposer& operator=(SceneComposer&&) noexcept;

    /// Up to max_samples more samples; nullopt once the duration is exhausted.
    std::optional<IqBlock> next(std::size_t max_samples);
    std::uint64_t total_samples() const noexcept { return total_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::uint64_t total_ = 0;
};

std::vector<IqBlock> compose_scene(const std::vector<StationConfig>& stations, double center_hz,
                                   double sample_rate_hz, double duration_s, std::uint64_t seed,
                                   std::size_t block_size = 65536);

/// Mean power of a station alone, synthesized over up to `window_s` seconds.
double station_power(const StationConfig& station, double center_hz, double sample_rate_hz, std::uint64_t seed,
                     double window_s = 0.5);

struct AwgnParams {
    double snr_db = 100.0;
    double signal_power = 1.0;       // mean |z|^2 of the reference signal
    double occupied_bw_hz = 1.0;     // bandwidth in which the SNR is defined
    double sample_rate_hz = 1.0;

    /// Per-sample complex noise variance giving snr_db inside occupied_bw_hz.
    double noise_variance() const;
};

class AwgnChannel {
public:
    AwgnChannel(const AwgnParams& params, std::uint64_t seed);
    void apply(std::span<Sample> samples);
    void apply(IqBlock& block) { apply(block.samples); }
    double noise_variance() const noexcept { return variance_; }

private:
    double variance_;
    GaussianRng rng_;
};

struct FrontEndParams {
    double gain_db = 0.0;
    double freq_offset_hz = 0.0;
    bool hardware_noise = false;
    double noise_figure_db = 3.5;
    double full_scale_dbm = -30.0;  // input power that maps to |z|^2 = 1 before gain
};

/// Gain, LO offset and (optionally) the thermal floor of a 3.5 dB noise-figure front end.
class FrontEnd {
public:
    FrontEnd(const FrontEndParams& params, double sample_rate_hz, std::uint64_t seed);
    void apply(IqBlock& block);
    double noise_floor_variance() const noexcept { return floor_variance_; }

private:
    FrontEndParams params_;
    double amplitude_;
    double floor_variance_;
    GaussianRng rng_;
};

/// Full scene source: composer, calibrated AWGN on the reference station, front end.
class SceneSource {
public:
    explicit SceneSource(const SceneSpec& spec, bool unbounded = false);
    std::optional<IqBlock> next(std::size_t max_samples);
    const SceneSpec& spec() const noexcept { return spec_; }
    std::optional<double> noise_variance() const;

private:
    SceneSpec spec_;
    SceneComposer composer_;
    std::optional<AwgnChannel> awgn_;
    FrontEnd front_end_;
};

}  // namespace sdrtk
