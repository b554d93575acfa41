// Core OFDM-grid domain types: the resource grid, the pilot lattice, the
// channel-condition triple, and the complex frame. Vectorization order is
// frequency-major everywhere: subcarrier index varies fastest, v[n + N_f*k].
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "aft/rng.hpp"

namespace aft {

using cplx = std::complex<double>;

// One fixed seed for the project-wide pilot symbol sequence so LS
// conditioning is identical across runs and experiments.
inline constexpr uint64_t kPilotSymbolSeed = 0x414654'5049'4C4F54ULL;  // "AFTPILOT"

struct GridConfig {
    int64_t n_subcarriers = 120;   // N_f
    int64_t n_symbols = 14;        // N_t
    double subcarrier_spacing_hz = 15000.0;

    double symbol_duration_s() const { return 1.0 / subcarrier_spacing_hz; }
    int64_t cells() const { return n_subcarriers * n_symbols; }

    void validate() const {
        if (n_subcarriers <= 0 || n_symbols <= 0)
            throw std::invalid_argument("grid dims must be positive");
        if (n_subcarriers % 3 != 0)
            throw std::invalid_argument("n_subcarriers must be divisible by the patch height 3");
        if (n_symbols % 2 != 0)
            throw std::invalid_argument("n_symbols must be divisible by the patch width 2");
        if (!(subcarrier_spacing_hz > 0.0))
            throw std::invalid_argument("subcarrier spacing must be positive");
    }
};

struct ChannelStats {
    double snr_db = 0.0;
    double doppler_hz = 0.0;
    double delay_spread_ns = 0.0;

    void validate() const {
        if (doppler_hz < 0.0) throw std::invalid_argument("doppler_hz must be >= 0");
        if (!(delay_spread_ns > 0.0)) throw std::invalid_argument("delay_spread_ns must be > 0");
    }
};

// Lattice pilot layout plus the fixed QPSK symbols transmitted on it. The
// pilot vector ordering matches the grid convention: for each time index
// (slow), all frequency indices (fast), p = k_pos * |freq_indices| + n_pos.
struct PilotGrid {
    std::vector<int64_t> freq_indices;
    std::vector<int64_t> time_indices;
    int64_t spacing = 0;  // N: pilots every N subcarriers
    std::vector<cplx> pilot_symbols;

    int64_t count() const { return static_cast<int64_t>(pilot_symbols.size()); }

    void validate(const GridConfig& grid) const {
        if (freq_indices.empty() || time_indices.empty())
            throw std::invalid_argument("pilot grid must have frequency and time indices");
        for (size_t i = 1; i < freq_indices.size(); ++i)
            if (freq_indices[i] <= freq_indices[i - 1])
                throw std::invalid_argument("pilot frequency indices must be sorted ascending");
        for (size_t i = 1; i < time_indices.size(); ++i)
            if (time_indices[i] <= time_indices[i - 1])
                throw std::invalid_argument("pilot time indices must be sorted ascending");
        if (freq_indices.front() < 0 || freq_indices.back() >= grid.n_subcarriers ||
            time_indices.front() < 0 || time_indices.back() >= grid.n_symbols)
            throw std::invalid_argument("pilot indices out of grid bounds");
        if (spacing > 0) {
            const int64_t expect = (grid.n_subcarriers + spacing - 1) / spacing;
            if (static_cast<int64_t>(freq_indices.size()) != expect)
                throw std::invalid_argument("pilot row count inconsistent with spacing");
        }
        if (pilot_symbols.size() != freq_indices.size() * time_indices.size())
            throw std::invalid_argument("pilot symbol count must be |freq| * |time|");
        for (const cplx& s : pilot_symbols)
            if (std::abs(std::abs(s) - 1.0) > 1e-12)
                throw std::invalid_argument("pilot symbols must be unit modulus");
    }
};

// Pilots every `spacing` subcarriers starting at subcarrier 0, at time
// symbols {2, 11} (zero-based), carrying a fixed pseudo-random QPSK sequence.
inline PilotGrid make_pilot_grid(const GridConfig& grid, int64_t spacing,
                                 uint64_t symbol_seed = kPilotSymbolSeed) {
    if (spacing <= 0) throw std::invalid_argument("pilot spacing must be positive");
    PilotGrid p;
    p.spacing = spacing;
    for (int64_t n = 0; n < grid.n_subcarriers; n += spacing) p.freq_indices.push_back(n);
    p.time_indices = {2, 11};
    for (int64_t t : p.time_indices)
        if (t >= grid.n_symbols)
            throw std::invalid_argument("grid too short for the pilot time indices {2, 11}");
    Rng rng(symbol_seed);
    const double h = 1.0 / std::sqrt(2.0);
    const cplx constellation[4] = {{h, h}, {h, -h}, {-h, h}, {-h, -h}};
    const size_t count = p.freq_indices.size() * p.time_indices.size();
    p.pilot_symbols.reserve(count);
    for (size_t i = 0; i < count; ++i)
        p.pilot_symbols.push_back(constellation[rng.below(4)]);
    p.validate(grid);
    return p;
}

// Complex channel over the grid, frequency-major: values[n + n_subcarriers*k].
struct ChannelFrame {
    int64_t n_subcarriers = 0;
    int64_t n_symbols = 0;
    std::vector<cplx> values;

    ChannelFrame() = default;
    ChannelFrame(int64_t nf, int64_t nt)
        : n_subcarriers(nf), n_symbols(nt),
          values(static_cast<size_t>(nf * nt), cplx{0.0, 0.0}) {}

    cplx& at(int64_t n, int64_t k) { return values[static_cast<size_t>(n + n_subcarriers * k)]; }
    const cplx& at(int64_t n, int64_t k) const {
        return values[static_cast<size_t>(n + n_subcarriers * k)];
    }

    bool finite() const {
        for (const cplx& v : values)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        return true;
    }
};

struct PilotObservation {
    std::vector<cplx> y_p;
    std::vector<cplx> x_p;
    std::vector<cplx> ls_estimate;  // y_p / x_p elementwise
};

// Extracts the channel at pilot positions in pilot-vector order.
inline std::vector<cplx> channel_at_pilots(const ChannelFrame& channel, const PilotGrid& pilots) {
    std::vector<cplx> h_p;
    h_p.reserve(static_cast<size_t>(pilots.count()));
    for (int64_t k : pilots.time_indices)
        for (int64_t n : pilots.freq_indices) h_p.push_back(channel.at(n, k));
    return h_p;
}

}  // namespace aft
