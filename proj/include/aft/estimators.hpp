// Classical baselines: bilinear-interpolated LS over the full grid, and LMMSE
// built from sample second-order statistics with a regularized Hermitian
// solve. Vectorization is frequency-major throughout (subcarrier fastest).
#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>

#include "aft/dataset.hpp"
#include "aft/types.hpp"

namespace aft {

// Bilinear interpolation of the pilot LS estimates across the grid; positions
// outside the pilot convex hull take the nearest edge value. Requires at
// least 2 pilot rows and 2 pilot columns.
ChannelFrame interpolate_ls(const PilotObservation& obs, const PilotGrid& pilots,
                            const GridConfig& grid);

struct LmmseStatistics {
    Eigen::MatrixXcd r_h_hp;   // cross-correlation, [N_f*N_t x |P|]
    Eigen::MatrixXcd r_hp_hp;  // pilot auto-correlation, [|P| x |P|]
    double noise_var = 0.0;

    void validate() const;
    void save(const std::string& path) const;
    static LmmseStatistics load(const std::string& path);
};

// Streaming sample-moment accumulator, so statistics can be fitted without
// holding the training set in memory. Accumulation order is record order,
// independent of any parallel generation upstream.
class LmmseFitter {
public:
    LmmseFitter(const GridConfig& grid, const PilotGrid& pilots);
    void add(const DataRecord& rec);
    LmmseStatistics finish();
    int64_t count() const { return count_; }

private:
    void flush();

    GridConfig grid_;
    PilotGrid pilots_;
    Eigen::MatrixXcd r_h_hp_;
    Eigen::MatrixXcd r_hp_hp_;
    Eigen::MatrixXcd buf_h_;   // pending columns, [cells x wave]
    Eigen::MatrixXcd buf_hp_;  // pending columns, [|P| x wave]
    double residual_power_ = 0.0;
    int64_t pending_ = 0;
    int64_t count_ = 0;
};

// Sample statistics over a whole dataset (needs >= 2 records).
LmmseStatistics fit_lmmse_statistics(const Dataset& train);

// Factorizes (r_hp_hp + noise_var*I) once and applies the LMMSE map
// h_hat = r_h_hp * (r_hp_hp + noise_var*I)^{-1} * ls per call.
class LmmseEstimator {
public:
    explicit LmmseEstimator(LmmseStatistics stats);
    ChannelFrame estimate(const std::vector<cplx>& ls_estimate, const GridConfig& grid) const;
    const LmmseStatistics& statistics() const { return stats_; }

private:
    LmmseStatistics stats_;
    Eigen::LLT<Eigen::MatrixXcd> llt_;
    std::unique_ptr<Eigen::FullPivLU<Eigen::MatrixXcd>> lu_;  // fallback when not SPD
};

// One-shot convenience wrapper over LmmseEstimator.
ChannelFrame lmmse_estimate(const PilotObservation& obs, const LmmseStatistics& stats,
                            const GridConfig& grid);

}  // namespace aft
