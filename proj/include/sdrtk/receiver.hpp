#pragma once

#include <memory>
#include <optional>

#include "sdrtk/demod.hpp"
#include "sdrtk/dsp.hpp"
#include "sdrtk/metrics.hpp"
#include "sdrtk/types.hpp"

namespace sdrtk {

struct TuningParams {
    double center_hz = 100e6;
    double offset_hz = 0.0;
    double step_hz = 1.0;          // tuning quantization
    double baseband_hz = 5000.0;   // demodulator audio cutoff
    double gain_db = 0.0;
    DemodMode mode = DemodMode::NFM;
    WindowKind window = WindowKind::BlackmanHarris4;
    std::size_t order = 1000;
    std::optional<double> deviation_hz;  // FM deviation override

    double tuned_hz() const noexcept { return center_hz + offset_hz; }
};

/// Nearest multiple of step_hz; exact ties go toward zero.
double snap_to_step(double offset_hz, double step_hz);

/// Hardware tuner range check; throws RangeError citing the 24-1850 MHz limit.
void check_tuner_range(double center_hz);

/// Decimation/cutoff plan for one tuning of the receive chain.
struct RxPlan {
    DemodConfig demod;
    double channel_half_bw_hz = 0.0;  // one-sided signal bandwidth around the tuned frequency
    double occupied_bw_hz = 0.0;      // nominal bandwidth used for SNR readout
    double channel_cutoff_hz = 0.0;
    std::size_t decimation = 1;
    double channel_rate_hz = 0.0;
};
RxPlan plan_receiver(const TuningParams& params, double input_rate_hz);

struct RxChainOptions {
    std::size_t spectrum_fft = 0;  // 0 disables spectrum frames
    bool estimate_snr = false;
    std::size_t snr_fft = 4096;
};

struct RxOutput {
    AudioBlock audio;
    std::optional<SpectrumFrame> spectrum;  // of the tuned (mixed, unfiltered) input
    std::optional<double> snr_db;           // pre-demod, in the mode's nominal bandwidth
};

/// mix -> decimating channel FIR (order/window from the tuning) -> demodulator -> 48 kHz audio.
class RxChain {
public:
    RxChain(const TuningParams& params, double input_rate_hz, double input_center_hz,
            RxChainOptions options = {});

    RxOutput process(const IqBlock& block);

    /// Swap parameters. The demodulator restarts iff mode or audio cutoff changed;
    /// the channel filter is rebuilt iff its plan changed.
    void retune(const TuningParams& params);

    const TuningParams& params() const noexcept { return params_; }
    const RxPlan& plan() const noexcept { return plan_; }
    double shift_hz() const noexcept;

private:
    void validate(const TuningParams& params) const;

    TuningParams params_;
    double input_rate_;
    double input_center_;
    RxChainOptions options_;
    RxPlan plan_;
    Decimator channel_;
    std::unique_ptr<Demodulator> demod_;
};

}  // namespace sdrtk
