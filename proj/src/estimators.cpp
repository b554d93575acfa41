#include "aft/estimators.hpp"

#include <cmath>

#include "aft/io.hpp"

namespace aft {

namespace {

constexpr uint16_t kSidecarVersion = 1;
constexpr int64_t kFitWave = 256;  // records per GEMM accumulation

// Piecewise-linear weight table along one axis: for every grid position,
// the bracketing knot pair and the blend weight (constant beyond the ends).
struct AxisInterp {
    std::vector<int> lo, hi;
    std::vector<double> w;  // value = (1-w)*knot[lo] + w*knot[hi]
};

AxisInterp make_axis(const std::vector<int64_t>& knots, int64_t size) {
    AxisInterp ax;
    ax.lo.resize(static_cast<size_t>(size));
    ax.hi.resize(static_cast<size_t>(size));
    ax.w.resize(static_cast<size_t>(size));
    size_t seg = 0;
    for (int64_t i = 0; i < size; ++i) {
        const size_t idx = static_cast<size_t>(i);
        if (i <= knots.front()) {
            ax.lo[idx] = ax.hi[idx] = 0;
            ax.w[idx] = 0.0;
        } else if (i >= knots.back()) {
            ax.lo[idx] = ax.hi[idx] = static_cast<int>(knots.size()) - 1;
            ax.w[idx] = 0.0;
        } else {
            while (knots[seg + 1] <= i) ++seg;
            ax.lo[idx] = static_cast<int>(seg);
            ax.hi[idx] = static_cast<int>(seg) + 1;
            ax.w[idx] = static_cast<double>(i - knots[seg]) /
                        static_cast<double>(knots[seg + 1] - knots[seg]);
        }
    }
    return ax;
}

Eigen::VectorXcd pilots_of_truth(const DataRecord& rec, const PilotGrid& pilots,
                                 int64_t n_subcarriers) {
    Eigen::VectorXcd h_p(static_cast<Eigen::Index>(pilots.pilot_symbols.size()));
    Eigen::Index p = 0;
    for (int64_t k : pilots.time_indices)
        for (int64_t n : pilots.freq_indices)
            h_p(p++) = rec.truth[static_cast<size_t>(n + n_subcarriers * k)];
    return h_p;
}

}  // namespace

ChannelFrame interpolate_ls(const PilotObservation& obs, const PilotGrid& pilots,
                            const GridConfig& grid) {
    const int64_t nf = static_cast<int64_t>(pilots.freq_indices.size());
    const int64_t nt = static_cast<int64_t>(pilots.time_indices.size());
    if (nf < 2 || nt < 2)
        throw std::invalid_argument("interpolation needs at least 2 pilot rows and 2 columns");
    if (static_cast<int64_t>(obs.ls_estimate.size()) != nf * nt)
        throw std::invalid_argument("observation size does not match pilot grid");

    const AxisInterp fx = make_axis(pilots.freq_indices, grid.n_subcarriers);
    const AxisInterp tx = make_axis(pilots.time_indices, grid.n_symbols);
    // value at pilot (row r, col c): ls_estimate[c * nf + r]
    const auto knot = [&](int r, int c) { return obs.ls_estimate[static_cast<size_t>(c) * nf + r]; };

    ChannelFrame out(grid.n_subcarriers, grid.n_symbols);
    for (int64_t k = 0; k < grid.n_symbols; ++k) {
        const size_t ki = static_cast<size_t>(k);
        const int c0 = tx.lo[ki], c1 = tx.hi[ki];
        const double wt = tx.w[ki];
        for (int64_t n = 0; n < grid.n_subcarriers; ++n) {
            const size_t ni = static_cast<size_t>(n);
            const int r0 = fx.lo[ni], r1 = fx.hi[ni];
            const double wf = fx.w[ni];
            const cplx a = knot(r0, c0) * (1.0 - wf) + knot(r1, c0) * wf;
            const cplx b = knot(r0, c1) * (1.0 - wf) + knot(r1, c1) * wf;
            out.at(n, k) = a * (1.0 - wt) + b * wt;
        }
    }
    return out;
}

void LmmseStatistics::validate() const {
    if (r_hp_hp.rows() != r_hp_hp.cols())
        throw std::invalid_argument("pilot auto-correlation must be square");
    if (r_h_hp.cols() != r_hp_hp.rows())
        throw std::invalid_argument("correlation matrix widths disagree");
    if (noise_var < 0.0) throw std::invalid_argument("noise variance must be >= 0");
    const double herm = (r_hp_hp - r_hp_hp.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-9)
        throw std::invalid_argument("pilot auto-correlation is not Hermitian");
}

LmmseFitter::LmmseFitter(const GridConfig& grid, const PilotGrid& pilots)
    : grid_(grid),
      pilots_(pilots),
      r_h_hp_(Eigen::MatrixXcd::Zero(grid.cells(), pilots.count())),
      r_hp_hp_(Eigen::MatrixXcd::Zero(pilots.count(), pilots.count())),
      buf_h_(grid.cells(), kFitWave),
      buf_hp_(pilots.count(), kFitWave) {}

void LmmseFitter::add(const DataRecord& rec) {
    if (static_cast<int64_t>(rec.truth.size()) != grid_.cells())
        throw std::invalid_argument("record frame size does not match fitter");
    if (static_cast<int64_t>(rec.ls.size()) != pilots_.count())
        throw std::invalid_argument("record pilot count does not match fitter");
    const Eigen::VectorXcd h_p = pilots_of_truth(rec, pilots_, grid_.n_subcarriers);
    buf_h_.col(pending_) = Eigen::Map<const Eigen::VectorXcd>(
        rec.truth.data(), static_cast<Eigen::Index>(rec.truth.size()));
    buf_hp_.col(pending_) = h_p;
    for (size_t p = 0; p < rec.ls.size(); ++p)
        residual_power_ += std::norm(rec.ls[p] - h_p(static_cast<Eigen::Index>(p)));
    ++pending_;
    ++count_;
    if (pending_ == kFitWave) flush();
}

void LmmseFitter::flush() {
    if (pending_ == 0) return;
    const auto h = buf_h_.leftCols(pending_);
    const auto hp = buf_hp_.leftCols(pending_);
    r_h_hp_.noalias() += h * hp.adjoint();
    r_hp_hp_.noalias() += hp * hp.adjoint();
    pending_ = 0;
}

LmmseStatistics LmmseFitter::finish() {
    if (count_ < 2) throw std::invalid_argument("statistics need at least 2 training records");
    flush();
    LmmseStatistics stats;
    const double inv_k = 1.0 / static_cast<double>(count_);
    stats.r_h_hp = r_h_hp_ * inv_k;
    stats.r_hp_hp = r_hp_hp_ * inv_k;
    stats.noise_var = residual_power_ / (static_cast<double>(count_) *
                                         static_cast<double>(pilots_.count()));
    stats.validate();
    return stats;
}

LmmseStatistics fit_lmmse_statistics(const Dataset& train) {
    if (train.count() < 2)
        throw std::invalid_argument("statistics need at least 2 training records");
    LmmseFitter fitter(train.grid, train.pilots);
    for (const DataRecord& rec : train.records) fitter.add(rec);
    return fitter.finish();
}

LmmseEstimator::LmmseEstimator(LmmseStatistics stats) : stats_(std::move(stats)) {
    stats_.validate();
    Eigen::MatrixXcd regularized = stats_.r_hp_hp;
    regularized.diagonal().array() += cplx{stats_.noise_var, 0.0};
    llt_.compute(regularized);
    if (llt_.info() != Eigen::Success) {
        lu_ = std::make_unique<Eigen::FullPivLU<Eigen::MatrixXcd>>(regularized);
        if (!lu_->isInvertible())
            throw std::runtime_error("regularized pilot correlation is singular; "
                                     "statistics are rank-deficient at zero noise");
    }
}

ChannelFrame LmmseEstimator::estimate(const std::vector<cplx>& ls_estimate,
                                      const GridConfig& grid) const {
    if (static_cast<Eigen::Index>(ls_estimate.size()) != stats_.r_hp_hp.rows())
        throw std::invalid_argument("LS vector length does not match statistics");
    if (stats_.r_h_hp.rows() != grid.cells())
        throw std::invalid_argument("statistics do not match the grid size");
    const Eigen::Map<const Eigen::VectorXcd> ls(ls_estimate.data(),
                                                static_cast<Eigen::Index>(ls_estimate.size()));
    const Eigen::VectorXcd weights =
        lu_ ? Eigen::VectorXcd(lu_->solve(ls)) : Eigen::VectorXcd(llt_.solve(ls));
    const Eigen::VectorXcd h = stats_.r_h_hp * weights;
    ChannelFrame out(grid.n_subcarriers, grid.n_symbols);
    Eigen::Map<Eigen::VectorXcd>(out.values.data(), h.size()) = h;
    return out;
}

ChannelFrame lmmse_estimate(const PilotObservation& obs, const LmmseStatistics& stats,
                            const GridConfig& grid) {
    LmmseEstimator est(stats);
    return est.estimate(obs.ls_estimate, grid);
}

void LmmseStatistics::save(const std::string& path) const {
    io::Writer w(path);
    w.magic("AFTL");
    w.u16(kSidecarVersion);
    w.u32(static_cast<uint32_t>(r_h_hp.rows()));
    w.u32(static_cast<uint32_t>(r_hp_hp.rows()));
    w.f64(noise_var);
    for (Eigen::Index j = 0; j < r_h_hp.cols(); ++j)
        for (Eigen::Index i = 0; i < r_h_hp.rows(); ++i) {
            w.f32(static_cast<float>(r_h_hp(i, j).real()));
            w.f32(static_cast<float>(r_h_hp(i, j).imag()));
        }
    for (Eigen::Index j = 0; j < r_hp_hp.cols(); ++j)
        for (Eigen::Index i = 0; i < r_hp_hp.rows(); ++i) {
            w.f32(static_cast<float>(r_hp_hp(i, j).real()));
            w.f32(static_cast<float>(r_hp_hp(i, j).imag()));
        }
    w.close();
}

LmmseStatistics LmmseStatistics::load(const std::string& path) {
    io::Reader r(path);
    r.expect_magic("AFTL");
    if (r.u16() != kSidecarVersion)
        throw std::runtime_error("unsupported statistics sidecar version in " + path);
    const Eigen::Index cells = r.u32();
    const Eigen::Index np = r.u32();
    LmmseStatistics stats;
    stats.noise_var = r.f64();
    stats.r_h_hp.resize(cells, np);
    stats.r_hp_hp.resize(np, np);
    for (Eigen::Index j = 0; j < np; ++j)
        for (Eigen::Index i = 0; i < cells; ++i) {
            const double re = r.f32();
            const double im = r.f32();
            stats.r_h_hp(i, j) = cplx{re, im};
        }
    for (Eigen::Index j = 0; j < np; ++j)
        for (Eigen::Index i = 0; i < np; ++i) {
            const double re = r.f32();
            const double im = r.f32();
            stats.r_hp_hp(i, j) = cplx{re, im};
        }
    stats.validate();
    return stats;
}

}  // namespace aft
