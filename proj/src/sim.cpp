#include "aft/sim.hpp"

#include <cmath>

namespace aft {

namespace {
constexpr uint64_t kStreamNoise = 0x6e6f'6973'65ULL;
}

PilotObservation simulate_pilots(const ChannelFrame& channel, const PilotGrid& pilots,
                                 double snr_db, uint64_t seed) {
    PilotObservation obs;
    obs.x_p = pilots.pilot_symbols;
    std::vector<cplx> h_p;
    h_p.reserve(obs.x_p.size());
    for (int64_t k : pilots.time_indices) {
        if (k >= channel.n_symbols) throw std::invalid_argument("pilot time index out of frame");
        for (int64_t n : pilots.freq_indices) {
            if (n >= channel.n_subcarriers)
                throw std::invalid_argument("pilot frequency index out of frame");
            h_p.push_back(channel.at(n, k));
        }
    }

    const size_t np = h_p.size();
    obs.y_p.resize(np);
    for (size_t p = 0; p < np; ++p) obs.y_p[p] = h_p[p] * obs.x_p[p];

    if (std::isfinite(snr_db)) {
        double signal_power = 0.0;
        for (const cplx& y : obs.y_p) signal_power += std::norm(y);
        signal_power /= static_cast<double>(np);
        const double sigma2 = signal_power * std::pow(10.0, -snr_db / 10.0);
        const double comp = std::sqrt(sigma2 / 2.0);  // per-component std dev
        Rng rng(derive_seed(seed, 0, kStreamNoise));
        for (size_t p = 0; p < np; ++p) {
            const double re = rng.gaussian();
            const double im = rng.gaussian();
            obs.y_p[p] += cplx{comp * re, comp * im};
        }
    }

    obs.ls_estimate.resize(np);
    for (size_t p = 0; p < np; ++p) {
        if (obs.x_p[p] == cplx{0.0, 0.0})
            throw std::invalid_argument("zero pilot symbol makes the LS divide undefined");
        obs.ls_estimate[p] = obs.y_p[p] / obs.x_p[p];
    }
    return obs;
}

}  // namespace aft
