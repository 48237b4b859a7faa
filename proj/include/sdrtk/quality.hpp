#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "sdrtk/metrics.hpp"
#include "sdrtk/types.hpp"

namespace sdrtk {

/// One parameter row of the quality table: audio cutoff, tuning step, channel window, mode.
struct QualityGridRow {
    double baseband_hz = 8000.0;
    double step_khz = 12.5;
    WindowKind window = WindowKind::BlackmanHarris4;
    DemodMode mode = DemodMode::NFM;
};

/// The four parameter rows of the published table crossed with NFM/WFM/AM/DSB.
std::vector<QualityGridRow> reference_quality_grid();

struct QualitySceneTemplate {
    double center_hz = 100e6;
    double sample_rate_hz = 2.4e6;
    double duration_s = 0.25;
    double station_offset_hz = 100e3;  // a multiple of every tabulated step size
    double tone_hz = 1000.0;
    double power_db = -20.0;
    std::size_t order = 1000;
    std::uint64_t seed = 7;
};

enum class SnrMethod { PreDemodInBand, PostDemodTone };
std::string to_string(SnrMethod m);

struct QualityReport {
    double baseband_hz = 0.0;
    double step_khz = 0.0;
    WindowKind window = WindowKind::BlackmanHarris4;
    DemodMode mode = DemodMode::NFM;
    double injected_snr_db = 0.0;
    double snr_db = 0.0;  // the classified estimate
    SnrMethod method = SnrMethod::PreDemodInBand;
    double audio_snr_db = 0.0;  // post-demod tone SNR, informational
    Quality quality = Quality::Weak;
};

QualityReport evaluate_quality_cell(const QualitySceneTemplate& scene, const QualityGridRow& row,
                                    double injected_snr_db, std::uint64_t cell_seed);

/// One report per (row, injected SNR), row-major. Throws ValueError on an empty grid;
/// cell failures are rethrown with the cell coordinates.
std::vector<QualityReport> quality_matrix(const QualitySceneTemplate& scene, const std::vector<QualityGridRow>& grid,
                                          const std::vector<double>& injected_snrs, unsigned threads = 0);

inline constexpr const char* kQualityCsvHeader =
    "baseband_hz,step_khz,filter,mode,injected_snr_db,estimated_snr_db,quality";
void write_quality_csv(std::ostream& os, const std::vector<QualityReport>& reports);

}  // namespace sdrtk
