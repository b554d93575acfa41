// Tapped-delay-line channel synthesis: TDL-A profile loading, time-varying
// Rayleigh tap gains with a Jakes Doppler spectrum (sum-of-sinusoids), and
// the analytic tap-to-frequency-response map.
#pragma once

#include <string>
#include <vector>

#include "aft/types.hpp"

namespace aft {

// Power-delay profile with unit total power and unit RMS delay spread, so a
// configured delay spread scales delays directly.
struct TdlProfile {
    std::vector<double> delays_norm;  // unit-RMS-spread delays, sorted ascending
    std::vector<double> powers;       // linear, sum = 1

    // Parses "(normalized delay, power dB)" rows (one per line, `#` comments),
    // converts powers to linear, renormalizes total power to 1, sorts taps by
    // delay, and rescales delays to exactly unit RMS delay spread.
    static TdlProfile load(const std::string& path);

    // The profile bundled with the project (3GPP TR 38.901 TDL-A).
    static const TdlProfile& bundled();

    double rms_delay_spread() const;
};

// Per-tap complex gain sequences at OFDM-symbol rate.
struct TapTrajectory {
    std::vector<double> delays;  // seconds, sorted ascending
    std::vector<double> powers;  // linear, sum = 1
    // gains[l * n_symbols + k]: tap l at symbol k
    std::vector<cplx> gains;
    int64_t n_taps = 0;
    int64_t n_symbols = 0;

    cplx gain(int64_t tap, int64_t symbol) const {
        return gains[static_cast<size_t>(tap * n_symbols + symbol)];
    }
};

// Draws one channel realization: delays scaled to stats.delay_spread_ns and
// Rayleigh tap gains whose temporal autocorrelation follows the Jakes model
// J0(2*pi*f_d*tau), synthesized as a 64-term sum of sinusoids per tap.
// Deterministic per (profile, stats, grid, seed). Zero Doppler freezes every
// gain across all symbols exactly.
TapTrajectory generate_tdl_taps(const TdlProfile& profile, const ChannelStats& stats,
                                const GridConfig& grid, uint64_t seed);

// H[n,k] = sum_l gains[l,k] * exp(-j*2*pi*n*spacing*delays[l]).
ChannelFrame taps_to_frequency_response(const TapTrajectory& taps, const GridConfig& grid);

}  // namespace aft
