#include "sdrtk/session.hpp"

#include <cmath>

#include "sdrtk/error.hpp"

namespace sdrtk {

std::optional<SessionState> transition(SessionState s, SessionEvent e) {
    using S = SessionState;
    using E = SessionEvent;
    switch (s) {
        case S::Idle:
            if (e == E::Configure) return S::Configured;
            break;
        case S::Configured:
            if (e == E::Configure) return S::Configured;
            if (e == E::StartRx) return S::Receiving;
            if (e == E::StartTx) return S::Transmitting;
            break;
        case S::Receiving:
            if (e == E::StartTx) return S::ReceivingAndTransmitting;
            if (e == E::StopRx || e == E::StopAll) return S::Configured;
            if (e == E::Retune) return S::Receiving;
            break;
        case S::Transmitting:
            if (e == E::StartRx) return S::ReceivingAndTransmitting;
            if (e == E::StopTx || e == E::StopAll) return S::Configured;
            break;
        case S::ReceivingAndTransmitting:
            if (e == E::StopRx) return S::Transmitting;
            if (e == E::StopTx) return S::Receiving;
            if (e == E::StopAll) return S::Configured;
            if (e == E::Retune) return S::ReceivingAndTransmitting;
            break;
    }
    return std::nullopt;
}

std::string to_string(SessionState s) {
    switch (s) {
        case SessionState::Idle: return "Idle";
        case SessionState::Configured: return "Configured";
        case SessionState::Receiving: return "Receiving";
        case SessionState::Transmitting: return "Transmitting";
        case SessionState::ReceivingAndTransmitting: return "ReceivingAndTransmitting";
    }
    return "?";
}

std::string to_string(SessionEvent e) {
    switch (e) {
        case SessionEvent::Configure: return "configure";
        case SessionEvent::StartRx: return "start_rx";
        case SessionEvent::StartTx: return "start_tx";
        case SessionEvent::StopRx: return "stop_rx";
        case SessionEvent::StopTx: return "stop_tx";
        case SessionEvent::StopAll: return "stop_all";
        case SessionEvent::Retune: return "retune";
    }
    return "?";
}

// --- sources ---------------------------------------------------------------------------------

namespace {

IqBlock loop_block(const std::vector<Sample>& samples, std::size_t& pos, std::uint64_t& index, std::size_t n,
                   double rate, double center, bool hardware) {
    IqBlock b;
    b.sample_rate_hz = rate;
    b.center_hz = center;
    b.start_index = index;
    b.hardware_band = hardware;
    b.samples.resize(n);
    if (samples.empty()) {
        index += n;
        return b;
    }
    for (std::size_t i = 0; i < n; ++i) {
        b.samples[i] = samples[pos];
        if (++pos == samples.size()) pos = 0;
    }
    index += n;
    return b;
}

}  // namespace

CaptureLoopSource::CaptureLoopSource(const std::filesystem::path& raw, const std::filesystem::path& meta)
    : meta_(read_capture_meta(meta)) {
    for (auto& b : read_capture(raw, meta)) samples_.insert(samples_.end(), b.samples.begin(), b.samples.end());
    if (samples_.empty()) throw FormatError("capture " + raw.string() + " holds no samples");
}

IqBlock CaptureLoopSource::next(std::size_t n) {
    return loop_block(samples_, pos_, index_, n, meta_.sample_rate_hz, meta_.center_hz, meta_.hardware);
}

SceneBlockSource::SceneBlockSource(const SceneSpec& spec) : source_(spec, true) {}

IqBlock SceneBlockSource::next(std::size_t n) { return *source_.next(n); }

MemorySource::MemorySource(std::vector<Sample> samples, double sample_rate_hz, double center_hz, bool hardware)
    : samples_(std::move(samples)), rate_(sample_rate_hz), center_(center_hz), hardware_(hardware) {
    if (!(rate_ > 0.0)) throw ValueError("source sample rate must be positive");
}

IqBlock MemorySource::next(std::size_t n) { return loop_block(samples_, pos_, index_, n, rate_, center_, hardware_); }

std::unique_ptr<BlockSource> open_source(const SourceSpec& spec) {
    if (const auto* f = std::get_if<FileSourceSpec>(&spec)) return std::make_unique<CaptureLoopSource>(f->raw, f->meta);
    return std::make_unique<SceneBlockSource>(load_scene(std::get<SceneFileSpec>(spec).path));
}

// --- session ---------------------------------------------------------------------------------

namespace {

void check_span(const TuningParams& p, const BlockSource& src) {
    const double shift = p.tuned_hz() - src.center_hz();
    if (!(std::abs(shift) < src.sample_rate_hz() / 2.0)) {
        throw RangeError("tuned frequency " + std::to_string(p.tuned_hz()) + " Hz outside the capture span " +
                         std::to_string(src.center_hz()) + " +/- " + std::to_string(src.sample_rate_hz() / 2.0) +
                         " Hz");
    }
}

void scale(IqBlock& b, double gain_db) {
    if (gain_db == 0.0) return;
    const double a = std::pow(10.0, gain_db / 20.0);
    for (auto& z : b.samples) z *= a;
}

}  // namespace

Session::Session(SessionOptions options) : options_(options) {
    if (options_.block_size == 0) throw ValueError("block size must be positive");
}

SessionState Session::state() const {
    std::lock_guard lock(mutex_);
    return state_;
}

void Session::require(SessionEvent event) const {
    if (!transition(state_, event)) {
        throw StateError("event " + to_string(event) + " is not allowed in state " + to_string(state_));
    }
}

void Session::configure(const TuningParams& params, std::unique_ptr<BlockSource> source) {
    std::lock_guard lock(mutex_);
    require(SessionEvent::Configure);
    if (!source) throw ConfigError("configure needs a source");
    if (source->hardware()) check_tuner_range(params.center_hz);
    TuningParams p = params;
    p.offset_hz = snap_to_step(p.offset_hz, p.step_hz);
    check_span(p, *source);
    RxChainOptions ro{options_.spectrum_fft, options_.estimate_snr, 4096};
    auto rx = std::make_unique<RxChain>(p, source->sample_rate_hz(), source->center_hz(), ro);

    params_ = p;
    pending_.reset();
    source_ = std::move(source);
    rx_ = std::move(rx);
    last_snr_.reset();
    rx_blocks_ = 0;
    state_ = SessionState::Configured;
}

void Session::start_rx() {
    std::lock_guard lock(mutex_);
    require(SessionEvent::StartRx);
    if (pending_) {
        params_ = *pending_;
        pending_.reset();
    }
    RxChainOptions ro{options_.spectrum_fft, options_.estimate_snr, 4096};
    rx_ = std::make_unique<RxChain>(params_, source_->sample_rate_hz(), source_->center_hz(), ro);
    state_ = *transition(state_, SessionEvent::StartRx);
}

void Session::start_tx(const TxConfig& tx) {
    std::lock_guard lock(mutex_);
    require(SessionEvent::StartTx);
    auto mod = std::make_unique<Modulator>(tx);
    tx_config_ = tx;
    tx_ = std::move(mod);
    state_ = *transition(state_, SessionEvent::StartTx);
}

void Session::stop(StopWhich which) {
    std::lock_guard lock(mutex_);
    const SessionEvent e = which == StopWhich::Rx   ? SessionEvent::StopRx
                           : which == StopWhich::Tx ? SessionEvent::StopTx
                                                    : SessionEvent::StopAll;
    require(e);
    state_ = *transition(state_, e);
    if (!tx_running(state_)) {
        tx_.reset();
        tx_config_.reset();
    }
}

TuningParams Session::merged(const TuningParams& base, const RetuneRequest& r) const {
    TuningParams p = base;
    if (r.offset_hz) p.offset_hz = snap_to_step(*r.offset_hz, p.step_hz);
    if (r.mode && *r.mode != p.mode) {
        p.mode = *r.mode;
        p.deviation_hz.reset();
        p.baseband_hz = DemodConfig::defaults(p.mode).audio_cutoff_hz;
    }
    if (r.baseband_hz) p.baseband_hz = *r.baseband_hz;
    if (r.gain_db) {
        if (!std::isfinite(*r.gain_db)) throw ValueError("gain must be finite");
        p.gain_db = *r.gain_db;
    }
    return p;
}

void Session::retune(const RetuneRequest& request) {
    std::lock_guard lock(mutex_);
    require(SessionEvent::Retune);
    TuningParams p = merged(pending_.value_or(params_), request);
    check_span(p, *source_);
    plan_receiver(p, source_->sample_rate_hz());
    pending_ = p;
}

RxStep Session::step_rx() {
    std::lock_guard lock(mutex_);
    if (!rx_running(state_)) throw StateError("rx step requires a receiving state, not " + to_string(state_));
    if (pending_) {
        rx_->retune(*pending_);
        params_ = *pending_;
        pending_.reset();
    }
    IqBlock block = source_->next(options_.block_size);
    scale(block, params_.gain_db);
    RxStep step;
    step.output = rx_->process(block);
    step.params = params_;
    step.block_index = rx_blocks_++;
    if (step.output.snr_db) last_snr_ = step.output.snr_db;
    return step;
}

std::vector<Sample> Session::step_tx(std::span<const double> audio) {
    std::lock_guard lock(mutex_);
    if (!tx_running(state_)) throw StateError("tx step requires a transmitting state, not " + to_string(state_));
    return tx_->process(audio);
}

TuningParams Session::params() const {
    std::lock_guard lock(mutex_);
    return params_;
}

TuningParams Session::requested_params() const {
    std::lock_guard lock(mutex_);
    return pending_.value_or(params_);
}

std::optional<TxConfig> Session::tx_config() const {
    std::lock_guard lock(mutex_);
    return tx_config_;
}

std::optional<double> Session::last_snr_db() const {
    std::lock_guard lock(mutex_);
    return last_snr_;
}

double Session::source_rate_hz() const {
    std::lock_guard lock(mutex_);
    return source_ ? source_->sample_rate_hz() : 0.0;
}

// --- bridge ----------------------------------------------------------------------------------

namespace {

TxConfig bridge_tx(const TuningParams& rx, TxConfig tx, double rate, double center) {
    tx.sample_rate_hz = rate;
    if (std::abs(rx.tuned_hz() - (center + tx.carrier_hz)) < 1e-6) {
        throw ValueError("bridge rx and tx frequencies are both " + std::to_string(rx.tuned_hz()) + " Hz");
    }
    return tx;
}

}  // namespace

Bridge::Bridge(const TuningParams& rx, const TxConfig& tx, double input_rate_hz, double input_center_hz)
    : rx_(rx, input_rate_hz, input_center_hz),
      tx_(bridge_tx(rx, tx, input_rate_hz, input_center_hz)),
      rate_(input_rate_hz),
      center_(input_center_hz) {}

IqBlock Bridge::process(const IqBlock& in) {
    auto out = rx_.process(in);
    last_audio_ = out.audio;
    IqBlock b;
    b.samples = tx_.process(out.audio.samples);
    b.sample_rate_hz = rate_;
    b.center_hz = center_;
    b.start_index = out_index_;
    out_index_ += b.samples.size();
    return b;
}

}  // namespace sdrtk
