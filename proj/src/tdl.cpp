#include "aft/tdl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace aft {

namespace {

constexpr int kSinusoids = 64;  // sum-of-sinusoids terms per tap

// Sub-stream tags under one realization seed.
constexpr uint64_t kStreamTap = 0x7461'7000ULL;  // + tap index

}  // namespace

TdlProfile TdlProfile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open TDL profile: " + path);
    std::vector<std::pair<double, double>> taps;  // (delay, linear power)
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        double delay, power_db;
        if (!(row >> delay)) continue;  // blank or comment-only line
        if (!(row >> power_db))
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected `delay power_db`");
        if (delay < 0.0)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": negative delay");
        taps.emplace_back(delay, std::pow(10.0, power_db / 10.0));
    }
    if (taps.size() < 2) throw std::runtime_error("TDL profile needs at least 2 taps: " + path);
    std::sort(taps.begin(), taps.end());

    TdlProfile p;
    double total = 0.0;
    for (const auto& [d, pw] : taps) total += pw;
    for (const auto& [d, pw] : taps) {
        p.delays_norm.push_back(d);
        p.powers.push_back(pw / total);
    }
    // Rescale delays so the realized RMS delay spread is exactly 1; the
    // published table is unit-normalized only up to rounding.
    const double rms = p.rms_delay_spread();
    if (!(rms > 0.0)) throw std::runtime_error("TDL profile has zero delay spread: " + path);
    for (double& d : p.delays_norm) d /= rms;
    return p;
}

const TdlProfile& TdlProfile::bundled() {
    static const TdlProfile p = TdlProfile::load(AFT_DEFAULT_TDL_PROFILE);
    return p;
}

double TdlProfile::rms_delay_spread() const {
    double mean = 0.0, second = 0.0;
    for (size_t l = 0; l < powers.size(); ++l) {
        mean += powers[l] * delays_norm[l];
        second += powers[l] * delays_norm[l] * delays_norm[l];
    }
    return std::sqrt(std::max(0.0, second - mean * mean));
}

TapTrajectory generate_tdl_taps(const TdlProfile& profile, const ChannelStats& stats,
                                const GridConfig& grid, uint64_t seed) {
    stats.validate();
    grid.validate();

    TapTrajectory traj;
    traj.n_taps = static_cast<int64_t>(profile.powers.size());
    traj.n_symbols = grid.n_symbols;
    traj.powers = profile.powers;
    traj.delays.resize(profile.delays_norm.size());
    const double spread_s = stats.delay_spread_ns * 1e-9;
    for (size_t l = 0; l < profile.delays_norm.size(); ++l)
        traj.delays[l] = profile.delays_norm[l] * spread_s;
    traj.gains.assign(static_cast<size_t>(traj.n_taps * traj.n_symbols), cplx{0.0, 0.0});

    const double omega_d = 2.0 * M_PI * stats.doppler_hz;  // rad/s
    const double t_sym = grid.symbol_duration_s();
    const double amp = std::sqrt(2.0 / kSinusoids) / std::sqrt(2.0);

    for (int64_t l = 0; l < traj.n_taps; ++l) {
        Rng rng(derive_seed(seed, static_cast<uint64_t>(l), kStreamTap));
        const double theta = rng.uniform(-M_PI, M_PI);
        const double tap_amp = amp * std::sqrt(traj.powers[static_cast<size_t>(l)]);
        cplx* out = traj.gains.data() + l * traj.n_symbols;
        for (int n = 0; n < kSinusoids; ++n) {
            // Arrival angles stratified over (0, pi/2) with a common random
            // offset; phases independent per quadrature branch.
            const double alpha = (2.0 * M_PI * (n + 1) - M_PI + theta) / (4.0 * kSinusoids);
            const double phi = rng.uniform(-M_PI, M_PI);
            const double psi = rng.uniform(-M_PI, M_PI);
            // Per-symbol rotation instead of per-symbol trig: the in-phase
            // branch advances by omega_d*T*cos(alpha) per symbol, the
            // quadrature branch by omega_d*T*sin(alpha). At zero Doppler both
            // steps are exactly (1, 0), so gains are exactly time-constant.
            double zi_re = std::cos(phi), zi_im = std::sin(phi);
            double zq_re = std::cos(psi), zq_im = std::sin(psi);
            const double ci = std::cos(omega_d * t_sym * std::cos(alpha));
            const double si = std::sin(omega_d * t_sym * std::cos(alpha));
            const double cq = std::cos(omega_d * t_sym * std::sin(alpha));
            const double sq = std::sin(omega_d * t_sym * std::sin(alpha));
            for (int64_t k = 0; k < traj.n_symbols; ++k) {
                out[k] += cplx{tap_amp * zi_re, tap_amp * zq_re};
                const double ri = zi_re * ci - zi_im * si;
                zi_im = zi_re * si + zi_im * ci;
                zi_re = ri;
                const double rq = zq_re * cq - zq_im * sq;
                zq_im = zq_re * sq + zq_im * cq;
                zq_re = rq;
            }
        }
    }
    return traj;
}

ChannelFrame taps_to_frequency_response(const TapTrajectory& taps, const GridConfig& grid) {
    if (taps.n_symbols != grid.n_symbols)
        throw std::invalid_argument("trajectory symbol count does not match grid");
    ChannelFrame frame(grid.n_subcarriers, grid.n_symbols);
    const double dphi_per_hz = -2.0 * M_PI * grid.subcarrier_spacing_hz;
    for (int64_t l = 0; l < taps.n_taps; ++l) {
        const double step = dphi_per_hz * taps.delays[static_cast<size_t>(l)];
        const cplx* g = taps.gains.data() + l * taps.n_symbols;
        for (int64_t n = 0; n < grid.n_subcarriers; ++n) {
            const cplx phase = std::polar(1.0, step * static_cast<double>(n));
            for (int64_t k = 0; k < grid.n_symbols; ++k) frame.at(n, k) += g[k] * phase;
        }
    }
    return frame;
}

}  // namespace aft
