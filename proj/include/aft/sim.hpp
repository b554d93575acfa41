// Pilot transmission and least-squares estimation: y_p = h_p * x_p + noise,
// LS = y_p / x_p. Noise power is set per frame from the mean received pilot
// power and the configured SNR; +infinity dB disables noise entirely.
#pragma once

#include "aft/types.hpp"

namespace aft {

PilotObservation simulate_pilots(const ChannelFrame& channel, const PilotGrid& pilots,
                                 double snr_db, uint64_t seed);

}  // namespace aft
