// Acceptance suite: ten end-to-end gates over the whole laboratory —
// gradient correctness, estimator oracles, channel-generator statistics,
// architecture shapes, parameter accounting, desk-scale learning and
// adaptivity, trend curves, and byte-level determinism. Prints one
// [PASS]/[FAIL] line per criterion and exits with the number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "aft/dataset.hpp"
#include "aft/estimators.hpp"
#include "aft/eval.hpp"
#include "aft/experiment.hpp"
#include "aft/model.hpp"
#include "aft/rng.hpp"
#include "aft/sim.hpp"
#include "aft/tape.hpp"
#include "aft/tdl.hpp"
#include "aft/train.hpp"
#include "fd_check.hpp"

namespace fs = std::filesystem;
using namespace aft;
using test::fd_check;
using test::GraphBuilder;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string strf(const char* fmt, ...) {
    char buf[1024];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return std::string(buf);
}

struct Outcome {
    bool ok = false;
    std::string detail;
};

Outcome pass(std::string detail) { return {true, std::move(detail)}; }
Outcome fail(std::string detail) { return {false, std::move(detail)}; }

// Artifacts produced by the desk-scale run (criterion 7) and reused by the
// adaptivity and trend criteria.
struct Ctx {
    fs::path work;
    bool desk_ready = false;
    ExperimentConfig desk;  // adaptive desk experiment (out_dir under work)
    Model ada;
    Model linear;
    Dataset test_snr;
    // per-model map: snr -> mse dB, ascending
    std::map<std::string, std::map<double, double>> snr_db;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

Tensor rand_tensor(Rng& rng, std::vector<int64_t> shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// Magnitudes in [0.2, 1], random sign: keeps ReLU kinks away from the FD step.
Tensor rand_signed(Rng& rng, std::vector<int64_t> shape) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = (rng.below(2) ? 1.0 : -1.0) * rng.uniform(0.2, 1.0);
    return t;
}

PilotObservation obs_from(const std::vector<cplx>& ls) {
    PilotObservation obs;
    obs.ls_estimate = ls;
    return obs;
}

// ---------------------------------------------------------------------------
// 1. Gradient checks: every tape primitive over 10 random shapes, then the
//    whole model end to end on the smallest valid configuration.
// ---------------------------------------------------------------------------

Outcome crit_gradients() {
    const auto t0 = Clock::now();
    Rng rng(20260819);

    double worst = 0.0;
    std::string worst_name = "-";
    int64_t coords = 0;
    auto check = [&](const char* name, const GraphBuilder& build,
                     const std::vector<Tensor>& leaves) {
        const auto report = fd_check(build, leaves);
        coords += report.checked;
        if (report.max_rel_err > worst) {
            worst = report.max_rel_err;
            worst_name = name;
        }
    };

    for (int trial = 0; trial < 10; ++trial) {
        const int64_t m = 2 + static_cast<int64_t>(rng.below(3));
        const int64_t k = 2 + static_cast<int64_t>(rng.below(3));
        const int64_t n = 2 + static_cast<int64_t>(rng.below(3));
        const Tensor target_mn = rand_tensor(rng, {m, n});
        const Tensor target_mk = rand_tensor(rng, {m, k});
        auto loss_against = [](ad::Tape& t, ad::NodeId out, const Tensor& target) {
            return t.mse(out, t.input(target));
        };

        check("matmul",
              [&](ad::Tape& t, const std::vector<Tensor>& L, std::vector<ad::NodeId>& ids) {
                  ids = {t.input(L[0], true), t.input(L[1], true)};
                  return loss_against(t, t.matmul(ids[0], ids[1]), target_mn);
              },
              {rand_tensor(rng, {m, k}), rand_tensor(rng, {k, n})});

        check("add",
              [&](ad::Tape& t, const std::vector<Tensor>& L, std::vector<ad::NodeId>& ids) {
                  ids = {t.input(L[0], true), t.input(L[1], true)};
                  return loss_against(t, t.add(ids[0], ids[1]), target_mk);
              },
              {rand_tensor(rng, {m, k}), rand_tensor(rng, {m, k})});

        check("add_broadcast_bias",
              [&](ad::Tape& t, const std::vector<Tensor>& L, std::vector<ad::NodeId>& ids) {
                  ids = {t.input(L[0], true), t.input(L[1], true)};
                  return loss_against(t, t.add_broadcast_bias(ids[0], ids[1]), target_mk);
              },
              {rand_tensor(rng, {m, k}), rand_tensor(rng, {k})});

        {
            const int64_t ci = 1 + static_cast<int64_t>(rng.below(2));
            const int64_t co = 1 + static_cast<int64_t>(rng.below(2));
            const int64_t h = 3 + static_cast<int64_t>(rng.below(3));
            const int64_t w = 3 + static_cast<int64_t>(rng.below(3));
            const Tensor conv_target = rand_tensor(rng, {co, h, w});
            check("conv2d_3x3_same",
                  [&](ad::Tape& t, const std::vector<Tensor>& L, std::vector<ad::NodeId>& ids) {
                      ids = {t.input(L[0], true), t.input(L[1], true), t.input(L[2], true)};
                      return t.mse(t.conv2d_3x3_same(ids[0], ids[1], ids[2]),
                                   t.input(conv_target));
                  },
                  {rand_tensor(rng, {ci, h, w}), rand_tensor(rng, {co, ci, 3, 3}),
                   rand_tensor(rng, {co})});
        }

        check("relu",
              [&](ad::Tape& t, const std::vector<Tensor>& L, std::vector<ad::NodeId>& ids) {
                  ids = {t.input(L[0], true)};
                  return loss_against(t, t.relu(ids[0]), target_mk);
              },
              {rand_signed(rng, {m, k})});

        check("gelu",
              [&](ad::Tape& t, const std::vector<Tensor>& L, std::vector<ad::NodeId>& ids) {
                  ids = {t.input(L[0], true)};
                  return loss_against(t, t.gelu(ids[0]), target_mk);
              },
              {rand_tensor(rng, {m, k})});

        check("softmax_rows",
              [&](ad::Tape& t, const std::vector<Tensor>& L, std::vector<ad::NodeId>& ids) {
                  ids = {t.input(L[0], true)};
                  return loss_against(t, t.softmax_rows(ids[0]), target_mk);
              },
              {rand_tensor(rng, {m, k})});

        check("layer_norm_lastdim",
              [&](ad::Tape& t, const std::vector<Tensor>& L, std::vector<ad::NodeId>& ids) {
                  ids = {t.input(L[0], true), t.input(L[1], true), t.input(L[2], true)};
                  return loss_against(t, t.layer_norm_lastdim(ids[0], ids[1], ids[2]),
                                      target_mk);
              },
              {rand_tensor(rng, {m, k}), rand_tensor(rng, {k}, 0.5, 1.5),
               rand_tensor(rng, {k})});

        {
            const Tensor flat_target = rand_tensor(rng, {1, m * k});
            check("reshape",
                  [&](ad::Tape& t, const std::vector<Tensor>& L, std::vector<ad::NodeId>& ids) {
                      ids = {t.input(L[0], true)};
                      return t.mse(t.reshape(ids[0], {1, m * k}), t.input(flat_target));
                  },
                  {rand_tensor(rng, {m, k})});
        }

        {
            const Tensor swapped_target = rand_tensor(rng, {k, m});
            check("transpose_2d",
                  [&](ad::Tape& t, const std::vector<Tensor>& L, std::vector<ad::NodeId>& ids) {
                      ids = {t.input(L[0], true)};
                      return t.mse(t.transpose(ids[0]), t.input(swapped_target));
                  },
                  {rand_tensor(rng, {m, k})});
            const Tensor perm_target = rand_tensor(rng, {n, m, k});
            check("transpose_perm",
                  [&](ad::Tape& t, const std::vector<Tensor>& L, std::vector<ad::NodeId>& ids) {
                      ids = {t.input(L[0], true)};
                      return t.mse(t.transpose(ids[0], {2, 0, 1}), t.input(perm_target));
                  },
                  {rand_tensor(rng, {m, k, n})});
        }

        {
            const Tensor cat_target = rand_tensor(rng, {m, 2 * k + n});
            check("concat_lastdim",
                  [&](ad::Tape& t, const std::vector<Tensor>& L, std::vector<ad::NodeId>& ids) {
                      ids = {t.input(L[0], true), t.input(L[1], true), t.input(L[2], true)};
                      return t.mse(t.concat_lastdim({ids[0], ids[1], ids[2]}),
                                   t.input(cat_target));
                  },
                  {rand_tensor(rng, {m, k}), rand_tensor(rng, {m, k}),
                   rand_tensor(rng, {m, n})});
        }

        {
            const int64_t dh = 1 + static_cast<int64_t>(rng.below(3));
            const int head = static_cast<int>(rng.below(2));
            const Tensor head_target = rand_tensor(rng, {m, dh});
            check("split_heads",
                  [&](ad::Tape& t, const std::vector<Tensor>& L, std::vector<ad::NodeId>& ids) {
                      ids = {t.input(L[0], true)};
                      return t.mse(t.split_heads(ids[0], 2, head), t.input(head_target));
                  },
                  {rand_tensor(rng, {m, 2 * dh})});
            const Tensor merged_target = rand_tensor(rng, {m, 2 * dh});
            check("merge_heads",
                  [&](ad::Tape& t, const std::vector<Tensor>& L, std::vector<ad::NodeId>& ids) {
                      ids = {t.input(L[0], true), t.input(L[1], true)};
                      return t.mse(t.merge_heads({ids[0], ids[1]}), t.input(merged_target));
                  },
                  {rand_tensor(rng, {m, dh}), rand_tensor(rng, {m, dh})});
        }

        check("scale",
              [&](ad::Tape& t, const std::vector<Tensor>& L, std::vector<ad::NodeId>& ids) {
                  ids = {t.input(L[0], true)};
                  return loss_against(t, t.scale(ids[0], 0.37 + trial), target_mk);
              },
              {rand_tensor(rng, {m, k})});

        check("sum_all",
              [&](ad::Tape& t, const std::vector<Tensor>& L, std::vector<ad::NodeId>& ids) {
                  ids = {t.input(L[0], true)};
                  return t.sum_all(t.gelu(ids[0]));
              },
              {rand_tensor(rng, {m, k})});

        check("mse",
              [&](ad::Tape& t, const std::vector<Tensor>& L, std::vector<ad::NodeId>& ids) {
                  ids = {t.input(L[0], true), t.input(L[1], true)};
                  return t.mse(ids[0], ids[1]);
              },
              {rand_tensor(rng, {m, k}), rand_tensor(rng, {m, k})});
    }

    if (worst >= 1e-5) {
        return fail(strf("primitive '%s' max relative error %.3e (needs < 1e-5)",
                         worst_name.c_str(), worst));
    }

    // End-to-end: smallest valid configuration, all parameters nudged off the
    // zero-bias init so no ReLU kink sits exactly at a probed point.
    ModelConfig cfg;
    cfg.variant = ModelVariant::kAdaFortiTran;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.d_enc = 8;
    cfg.conv_c1 = 2;
    cfg.conv_c2 = 3;
    cfg.conv_c3 = 2;
    cfg.grid.n_subcarriers = 12;
    cfg.grid.n_symbols = 4;
    cfg = with_pilot_layout(cfg, cfg.grid, 3);

    Model m = Model::init(cfg, 29);
    Rng jrng(91);
    m.for_each_param([&](const std::string&, Tensor& t) {
        for (double& v : t.data) v += jrng.uniform(-0.05, 0.05);
    });
    ModelRunner runner(m, true);

    DataRecord rec;
    rec.stats = {10.0, 300.0, 150.0};
    for (int64_t i = 0; i < cfg.n_pilots; ++i)
        rec.ls.emplace_back(jrng.uniform(-1.0, 1.0), jrng.uniform(-1.0, 1.0));
    for (int64_t i = 0; i < cfg.grid.cells(); ++i)
        rec.truth.emplace_back(jrng.uniform(-1.0, 1.0), jrng.uniform(-1.0, 1.0));

    std::vector<Tensor*> params;
    m.for_each_param([&](const std::string&, Tensor& t) { params.push_back(&t); });
    std::vector<Tensor> grads;
    for (const Tensor* t : params) grads.emplace_back(t->shape);
    runner.accumulate_gradients(rec, grads);

    auto fd_at = [&](size_t t, size_t j, double h) {
        const double keep = params[t]->data[j];
        params[t]->data[j] = keep + h;
        runner.refresh();
        const double up = runner.loss_of(rec);
        params[t]->data[j] = keep - h;
        runner.refresh();
        const double down = runner.loss_of(rec);
        params[t]->data[j] = keep;
        runner.refresh();
        return (up - down) / (2.0 * h);
    };
    double model_rel = 0.0;
    for (int probe = 0; probe < 40; ++probe) {
        const size_t t = static_cast<size_t>(jrng.below(params.size()));
        const size_t j = static_cast<size_t>(jrng.below(params[t]->data.size()));
        const double ad = grads[t].data[j];
        double rel = 1e300;
        // Two step sizes, keeping the better: normalization layers carry
        // large third derivatives, so one step can leave truncation error.
        for (double h : {1e-5, 1e-6}) {
            const double fd = fd_at(t, j, h);
            rel = std::min(rel, std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)}));
        }
        model_rel = std::max(model_rel, rel);
    }

    const double dt = seconds_since(t0);
    if (model_rel >= 1e-4)
        return fail(strf("end-to-end model gradient max relative error %.3e (needs < 1e-4)",
                         model_rel));
    if (dt >= 120.0) return fail(strf("took %.1f s (budget 120 s)", dt));
    return pass(strf("16 primitives x 10 shapes (%lld coords, max rel %.2e), "
                     "model end-to-end max rel %.2e, %.1f s",
                     static_cast<long long>(coords), worst, model_rel, dt));
}

// ---------------------------------------------------------------------------
// 2. Pilot least squares: noiseless observations reproduce the channel at
//    pilots to 1e-12, and bilinear interpolation is exact on affine channels
//    at interior points.
// ---------------------------------------------------------------------------

Outcome crit_ls_oracle() {
    GridConfig grid;
    const PilotGrid pilots = make_pilot_grid(grid, 3);

    ChannelStats st;
    st.snr_db = 10.0;
    st.doppler_hz = 500.0;
    st.delay_spread_ns = 200.0;
    const TapTrajectory taps = generate_tdl_taps(TdlProfile::bundled(), st, grid, 424242);
    const ChannelFrame h = taps_to_frequency_response(taps, grid);
    const PilotObservation obs =
        simulate_pilots(h, pilots, std::numeric_limits<double>::infinity(), 7);
    const std::vector<cplx> h_p = channel_at_pilots(h, pilots);
    double ls_err = 0.0;
    for (size_t i = 0; i < h_p.size(); ++i)
        ls_err = std::max(ls_err, std::abs(obs.ls_estimate[i] - h_p[i]));
    if (ls_err >= 1e-12)
        return fail(strf("noiseless LS max error %.3e (needs < 1e-12)", ls_err));

    // Affine-in-index channel: bilinear interpolation must reproduce it at
    // every point inside the pilot hull.
    const cplx a{0.2, 0.1}, b{0.03, -0.02}, c{-0.15, 0.25};
    auto truth = [&](int64_t n, int64_t k) {
        return a + b * static_cast<double>(n) + c * static_cast<double>(k);
    };
    std::vector<cplx> ls;
    for (int64_t k : pilots.time_indices)
        for (int64_t n : pilots.freq_indices) ls.push_back(truth(n, k));
    const ChannelFrame est = interpolate_ls(obs_from(ls), pilots, grid);
    const int64_t last_row = pilots.freq_indices.back();
    const int64_t k_lo = pilots.time_indices.front(), k_hi = pilots.time_indices.back();
    double affine_err = 0.0;
    for (int64_t k = k_lo; k <= k_hi; ++k)
        for (int64_t n = 0; n <= last_row; ++n)
            affine_err = std::max(affine_err, std::abs(est.at(n, k) - truth(n, k)));
    if (affine_err >= 1e-12)
        return fail(strf("affine interpolation max interior error %.3e (needs < 1e-12)",
                         affine_err));
    return pass(strf("noiseless LS max err %.2e, affine interior max err %.2e", ls_err,
                     affine_err));
}

// ---------------------------------------------------------------------------
// 3. LMMSE: matches the analytic conditional mean on the two-pilot case, and
//    with statistics fitted from 10,000 records it never loses to
//    interpolated LS by more than 0.2 dB at any SNR on 2,000-record tests.
// ---------------------------------------------------------------------------

Outcome crit_lmmse_oracle() {
    const auto t0 = Clock::now();

    // (a) analytic two-pilot conditional mean, sigma^2 = 0.5.
    auto kernel = [](int64_t i, int64_t j) {
        const double d = static_cast<double>(i - j);
        return std::polar(std::exp(-std::abs(d) / 3.0), 0.25 * d);
    };
    GridConfig small;
    small.n_subcarriers = 6;
    small.n_symbols = 2;
    const int64_t cells = small.cells();
    const int64_t p1 = 2, p2 = 9;
    const double noise_var = 0.5;
    LmmseStatistics stats;
    stats.noise_var = noise_var;
    stats.r_hp_hp.resize(2, 2);
    stats.r_hp_hp << kernel(p1, p1), kernel(p1, p2), kernel(p2, p1), kernel(p2, p2);
    stats.r_h_hp.resize(cells, 2);
    for (int64_t i = 0; i < cells; ++i) {
        stats.r_h_hp(i, 0) = kernel(i, p1);
        stats.r_h_hp(i, 1) = kernel(i, p2);
    }
    const LmmseEstimator analytic(stats);
    Rng rng(17);
    double oracle_err = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const std::vector<cplx> ls = {{rng.gaussian(), rng.gaussian()},
                                      {rng.gaussian(), rng.gaussian()}};
        const ChannelFrame got = analytic.estimate(ls, small);
        const cplx m11 = kernel(p1, p1) + noise_var, m12 = kernel(p1, p2);
        const cplx m21 = kernel(p2, p1), m22 = kernel(p2, p2) + noise_var;
        const cplx det = m11 * m22 - m12 * m21;
        const cplx w1 = (m22 * ls[0] - m12 * ls[1]) / det;
        const cplx w2 = (m11 * ls[1] - m21 * ls[0]) / det;
        for (int64_t i = 0; i < cells; ++i) {
            const cplx ref = kernel(i, p1) * w1 + kernel(i, p2) * w2;
            oracle_err = std::max(oracle_err,
                                  std::abs(got.values[static_cast<size_t>(i)] - ref));
        }
    }
    if (oracle_err >= 1e-10)
        return fail(strf("two-pilot conditional mean max error %.3e (needs < 1e-10)",
                         oracle_err));

    // (b) Monte-Carlo ensembles: per SNR, fit on 10,000 records and compare
    //     against interpolated LS on 2,000 fresh records.
    GridConfig grid;
    const PilotGrid pilots = make_pilot_grid(grid, 3);
    const TdlProfile& prof = TdlProfile::bundled();
    double worst_margin = 1e300;
    double worst_snr = 0.0;
    for (int si = 0; si < 6; ++si) {
        const double snr = 5.0 * si;
        ChannelStats st;
        st.snr_db = snr;
        st.doppler_hz = 500.0;
        st.delay_spread_ns = 200.0;

        LmmseFitter fitter(grid, pilots);
        const uint64_t fit_seed = derive_seed(0xACC3, static_cast<uint64_t>(si), 0xF17);
        for (int i = 0; i < 10000; ++i)
            fitter.add(make_record(prof, grid, pilots, st,
                                   derive_seed(fit_seed, static_cast<uint64_t>(i), 1)));
        const LmmseEstimator lmmse(fitter.finish());

        const uint64_t test_seed = derive_seed(0xACC3, static_cast<uint64_t>(si), 0x7E57);
        double interp_sum = 0.0, lmmse_sum = 0.0;
        for (int i = 0; i < 2000; ++i) {
            const DataRecord rec = make_record(prof, grid, pilots, st,
                                               derive_seed(test_seed, static_cast<uint64_t>(i), 2));
            interp_sum += frame_mse(interpolate_ls(obs_from(rec.ls), pilots, grid), rec.truth);
            lmmse_sum += frame_mse(lmmse.estimate(rec.ls, grid), rec.truth);
        }
        const double interp_db = mse_to_db(interp_sum / 2000.0);
        const double lmmse_db = mse_to_db(lmmse_sum / 2000.0);
        const double margin = interp_db - lmmse_db;  // needs >= -0.2
        std::printf("  snr %2.0f dB: interpolated LS %7.3f dB, LMMSE %7.3f dB (gain %.3f dB)\n",
                    snr, interp_db, lmmse_db, margin);
        if (margin < worst_margin) {
            worst_margin = margin;
            worst_snr = snr;
        }
    }
    const double dt = seconds_since(t0);
    if (worst_margin < -0.2)
        return fail(strf("LMMSE loses %.3f dB to interpolated LS at snr %g (tolerance 0.2 dB)",
                         -worst_margin, worst_snr));
    if (dt >= 300.0) return fail(strf("took %.1f s (budget 300 s)", dt));
    return pass(strf("conditional-mean max err %.2e; min LMMSE gain %.3f dB at snr %g; %.1f s",
                     oracle_err, worst_margin, worst_snr, dt));
}

// ---------------------------------------------------------------------------
// 4. Channel generator statistics over 10,000 seeds: realized RMS delay
//    spread, Jakes temporal autocorrelation at lags 1..5, and exact time
//    freezing at zero Doppler.
// ---------------------------------------------------------------------------

Outcome crit_channel_stats() {
    GridConfig grid;
    const TdlProfile& prof = TdlProfile::bundled();
    ChannelStats st;
    st.snr_db = 10.0;
    st.doppler_hz = 500.0;
    st.delay_spread_ns = 200.0;

    // Bessel J0(2*pi*500*m/15000) for lags m = 1..5, frozen from an
    // independent series-expansion evaluation.
    const double j0_ref[5] = {0.98906380081432155, 0.95661378602103109, 0.90371264209246627,
                              0.83208847330484459, 0.74407197075292952};

    const int n_seeds = 10000;
    std::vector<double> tap_power;
    std::vector<double> corr_num(5, 0.0);
    std::vector<int64_t> corr_cnt(5, 0);
    double tap0_power_sum = 0.0;
    int64_t tap0_power_cnt = 0;
    std::vector<double> delays;

    for (int s = 0; s < n_seeds; ++s) {
        const TapTrajectory taps =
            generate_tdl_taps(prof, st, grid, derive_seed(0xC4A7, static_cast<uint64_t>(s), 1));
        if (tap_power.empty()) {
            tap_power.assign(static_cast<size_t>(taps.n_taps), 0.0);
            delays = taps.delays;
        }
        for (int64_t l = 0; l < taps.n_taps; ++l)
            for (int64_t k = 0; k < taps.n_symbols; ++k)
                tap_power[static_cast<size_t>(l)] += std::norm(taps.gain(l, k));
        for (int m = 1; m <= 5; ++m)
            for (int64_t k = 0; k + m < taps.n_symbols; ++k) {
                corr_num[static_cast<size_t>(m - 1)] +=
                    (taps.gain(0, k) * std::conj(taps.gain(0, k + m))).real();
                ++corr_cnt[static_cast<size_t>(m - 1)];
            }
        for (int64_t k = 0; k < taps.n_symbols; ++k) {
            tap0_power_sum += std::norm(taps.gain(0, k));
            ++tap0_power_cnt;
        }
    }

    // Ensemble tap powers -> realized RMS delay spread.
    double total = 0.0, mean_d = 0.0, mean_d2 = 0.0;
    for (size_t l = 0; l < tap_power.size(); ++l) {
        const double p =
            tap_power[l] / (static_cast<double>(n_seeds) * static_cast<double>(grid.n_symbols));
        total += p;
        mean_d += p * delays[l];
        mean_d2 += p * delays[l] * delays[l];
    }
    mean_d /= total;
    mean_d2 /= total;
    const double rms_ns = std::sqrt(mean_d2 - mean_d * mean_d) * 1e9;
    const double rms_err = std::abs(rms_ns - 200.0) / 200.0;
    if (rms_err >= 0.05)
        return fail(strf("realized RMS delay spread %.2f ns vs configured 200 ns (%.1f%% off, "
                         "needs < 5%%)",
                         rms_ns, 100.0 * rms_err));

    // Empirical lag autocorrelation of tap 0, normalized by its mean power.
    const double p0 = tap0_power_sum / static_cast<double>(tap0_power_cnt);
    double corr_err = 0.0;
    int worst_lag = 0;
    for (int m = 1; m <= 5; ++m) {
        const double rho =
            corr_num[static_cast<size_t>(m - 1)] /
            (static_cast<double>(corr_cnt[static_cast<size_t>(m - 1)]) * p0);
        const double err = std::abs(rho - j0_ref[m - 1]);
        std::printf("  lag %d: empirical autocorrelation %.5f vs Jakes %.5f (err %.4f)\n", m,
                    rho, j0_ref[m - 1], err);
        if (err > corr_err) {
            corr_err = err;
            worst_lag = m;
        }
    }
    if (corr_err >= 0.01)
        return fail(strf("autocorrelation off by %.4f at lag %d (needs < 0.01)", corr_err,
                         worst_lag));

    // Zero Doppler freezes every tap gain and the frequency response exactly.
    ChannelStats still = st;
    still.doppler_hz = 0.0;
    for (uint64_t s = 0; s < 5; ++s) {
        const TapTrajectory taps = generate_tdl_taps(prof, still, grid, derive_seed(0xC4A7, s, 2));
        for (int64_t l = 0; l < taps.n_taps; ++l)
            for (int64_t k = 1; k < taps.n_symbols; ++k)
                if (taps.gain(l, k) != taps.gain(l, 0))
                    return fail(strf("zero-Doppler tap %lld changed between symbols 0 and %lld",
                                     static_cast<long long>(l), static_cast<long long>(k)));
        const ChannelFrame h = taps_to_frequency_response(taps, grid);
        for (int64_t k = 1; k < grid.n_symbols; ++k)
            for (int64_t n = 0; n < grid.n_subcarriers; ++n)
                if (h.at(n, k) != h.at(n, 0))
                    return fail("zero-Doppler frequency response varies across symbols");
    }
    return pass(strf("RMS delay spread %.1f ns (%.1f%% off), autocorrelation max err %.4f, "
                     "zero-Doppler frozen bit-exactly",
                     rms_ns, 100.0 * rms_err, corr_err));
}

// ---------------------------------------------------------------------------
// 5. Architecture shapes: patch map identity and sizes, row-stochastic
//    attention at every layer and head, condition-code shape, and finite
//    full-grid outputs for every variant and pilot spacing.
// ---------------------------------------------------------------------------

Outcome crit_shapes() {
    GridConfig grid;
    Rng rng(5);

    // Patch maps on the full grid: [14,120] <-> [280,6], exact inverse.
    ad::Tape t;
    Tensor frame({grid.n_symbols, grid.n_subcarriers});
    for (double& v : frame.data) v = rng.uniform(-1.0, 1.0);
    const ad::NodeId in = t.input(frame);
    const ad::NodeId seq = patchify(t, in, grid);
    if (t.value(seq).shape != std::vector<int64_t>{280, 6})
        return fail("patchify of the 120x14 grid is not [280,6]");
    const ad::NodeId back = depatchify(t, seq, grid);
    if (t.value(back).data != frame.data)
        return fail("depatchify(patchify(x)) is not the identity");

    // Attention maps and condition codes on a 2-layer adaptive model.
    ModelConfig cfg;
    cfg.variant = ModelVariant::kAdaFortiTran;
    cfg.n_layers = 2;
    cfg.n_heads = 4;
    cfg.d_enc = 32;
    cfg = with_pilot_layout(cfg, grid, 3);
    const Model m = Model::init(cfg, 11);
    ModelRunner runner(m, false);
    const PilotGrid pilots3 = make_pilot_grid(grid, 3);
    ChannelStats st;
    st.snr_db = 10.0;
    st.doppler_hz = 500.0;
    st.delay_spread_ns = 200.0;
    const DataRecord rec = make_record(TdlProfile::bundled(), grid, pilots3, st, 777);
    ForwardTrace trace;
    runner.infer(rec, &trace);
    const size_t expected_maps = 2ull * 2ull * 4ull;  // layers x (re,im) x heads
    if (trace.attention.size() != expected_maps)
        return fail(strf("expected %zu attention maps, got %zu", expected_maps,
                         trace.attention.size()));
    double row_err = 0.0;
    for (const Tensor& att : trace.attention) {
        if (att.shape != std::vector<int64_t>{280, 280})
            return fail("attention map is not [280,280]");
        for (int64_t r = 0; r < 280; ++r) {
            double sum = 0.0;
            for (int64_t c = 0; c < 280; ++c) sum += att.data[static_cast<size_t>(r * 280 + c)];
            row_err = std::max(row_err, std::abs(sum - 1.0));
        }
    }
    if (row_err >= 1e-12)
        return fail(strf("attention row sums off by %.3e (needs < 1e-12)", row_err));
    if (trace.condition_codes.shape != std::vector<int64_t>{280, 6})
        return fail("condition codes are not [280,6]");

    // Every variant x pilot spacing: full-grid output, finite everywhere.
    int combos = 0;
    for (ModelVariant v :
         {ModelVariant::kAdaFortiTran, ModelVariant::kFortiTran, ModelVariant::kLinear}) {
        for (int64_t spacing : {3, 4, 5, 6, 8}) {
            ModelConfig vc;
            vc.variant = v;
            vc.n_layers = (v == ModelVariant::kLinear) ? 0 : 1;
            vc = with_pilot_layout(vc, grid, spacing);
            const PilotGrid pilots = make_pilot_grid(grid, spacing);
            const DataRecord r =
                make_record(TdlProfile::bundled(), grid, pilots, st,
                            derive_seed(0x5A9E, static_cast<uint64_t>(spacing), 3));
            const Model mv = Model::init(vc, 3);
            ModelRunner rv(mv, false);
            const ForwardResult out = rv.infer(r);
            if (out.estimate.n_subcarriers != grid.n_subcarriers ||
                out.estimate.n_symbols != grid.n_symbols)
                return fail(strf("%s at spacing %lld: output is not the full grid",
                                 to_string(v).c_str(), static_cast<long long>(spacing)));
            if (!out.estimate.finite())
                return fail(strf("%s at spacing %lld: non-finite output", to_string(v).c_str(),
                                 static_cast<long long>(spacing)));
            ++combos;
        }
    }
    return pass(strf("patch maps exact, %zu attention maps row-stochastic (max err %.1e), "
                     "codes [280,6], %d variant/spacing forwards finite",
                     expected_maps, row_err, combos));
}

// ---------------------------------------------------------------------------
// 6. Parameter accounting: the per-layer increment equals the hand-summed
//    shape list exactly and sits within 20% of the ~9.1k/layer reference
//    slope; absolute totals are reported, not asserted.
// ---------------------------------------------------------------------------

Outcome crit_param_counts() {
    GridConfig grid;
    auto count_at = [&](ModelVariant v, int layers) {
        ModelConfig cfg;
        cfg.variant = v;
        cfg.n_layers = layers;
        cfg.n_heads = 4;
        cfg.d_enc = 32;
        cfg = with_pilot_layout(cfg, grid, 3);
        return Model(cfg).count_parameters();
    };

    // Hand summation for d_enc = 32, 4 heads: per-head QKV projections
    // 3*(32*32+32), output projection 32*32+32, feed-forward
    // 32*64+64+64*32+32, two LayerNorms 2*(2*32).
    const int64_t per_layer_analytic =
        3 * (32 * 32 + 32) + (32 * 32 + 32) + (32 * 64 + 64 + 64 * 32 + 32) + 2 * (2 * 32);
    const int64_t inc12 = count_at(ModelVariant::kAdaFortiTran, 2) -
                          count_at(ModelVariant::kAdaFortiTran, 1);
    const int64_t inc23 = count_at(ModelVariant::kAdaFortiTran, 3) -
                          count_at(ModelVariant::kAdaFortiTran, 2);
    if (inc12 != per_layer_analytic || inc23 != per_layer_analytic)
        return fail(strf("per-layer increments %lld/%lld != analytic %lld",
                         static_cast<long long>(inc12), static_cast<long long>(inc23),
                         static_cast<long long>(per_layer_analytic)));

    const double slope_ref = (0.28e6 - 0.18e6) / 11.0;  // ~9.1k per layer
    const double slope_err = std::abs(static_cast<double>(per_layer_analytic) - slope_ref) /
                             slope_ref;
    if (slope_err > 0.20)
        return fail(strf("per-layer increment %lld is %.1f%% from the ~%.0f/layer reference "
                         "(needs <= 20%%)",
                         static_cast<long long>(per_layer_analytic), 100.0 * slope_err,
                         slope_ref));

    const int64_t ada_s = count_at(ModelVariant::kAdaFortiTran, 1);
    const int64_t forti_s = count_at(ModelVariant::kFortiTran, 1);
    const int64_t linear = count_at(ModelVariant::kLinear, 0);
    std::printf("  totals at spacing 3: adafortitran-s %lld, fortitran-s %lld, linear %lld\n",
                static_cast<long long>(ada_s), static_cast<long long>(forti_s),
                static_cast<long long>(linear));
    std::printf("  note: totals are reported, not asserted — the dense upsampler alone is "
                "cells x |pilots| = %lld weights, so totals track grid geometry, and bias "
                "terms are per-feature vectors; the asserted quantity is the per-layer "
                "increment.\n",
                static_cast<long long>(grid.cells() * 80));
    return pass(strf("per-layer increment %lld (exact), %.1f%% from the reference slope; "
                     "totals ada-s %lld / forti-s %lld / linear %lld",
                     static_cast<long long>(per_layer_analytic), 100.0 * slope_err,
                     static_cast<long long>(ada_s), static_cast<long long>(forti_s),
                     static_cast<long long>(linear)));
}

// ---------------------------------------------------------------------------
// 7. Desk-scale learning: generate the desk datasets, train the adaptive
//    model and the linear baseline, and require the adaptive model to beat
//    interpolated LS at every SNR and match-or-beat linear at SNR <= 10.
// ---------------------------------------------------------------------------

Outcome crit_desk_learning(Ctx& ctx) {
    const auto t0 = Clock::now();
    ExperimentConfig cfg;
    cfg.apply_preset("desk");
    cfg.variant = ModelVariant::kAdaFortiTran;
    cfg.n_layers = 1;
    cfg.n_heads = 4;
    cfg.d_enc = 32;
    cfg.pilot_spacing = 3;
    cfg.seed = 1;
    cfg.out_dir = (ctx.work / "desk").string();

    if (cmd_generate(cfg, 0) != 0) return fail("dataset generation failed");
    const double gen_s = seconds_since(t0);

    if (cmd_train(cfg, 0) != 0) return fail("adaptive model training diverged");
    const double ada_s = seconds_since(t0) - gen_s;

    ExperimentConfig lin = cfg;
    lin.variant = ModelVariant::kLinear;
    lin.n_layers = 0;
    if (cmd_train(lin, 0) != 0) return fail("linear model training diverged");

    // Evaluate all four estimators on the SNR sweep through one path.
    const std::string test_file = dataset_path(cfg, "test_snr");
    const Dataset test = read_dataset(test_file);
    const Model ada = Model::load_expected(checkpoint_path(cfg), cfg.model_config());
    const Model linear = Model::load_expected(checkpoint_path(lin), lin.model_config());

    const Dataset train_set = read_dataset(dataset_path(cfg, "train"));
    LmmseFitter fitter(train_set.grid, train_set.pilots);
    for (const DataRecord& rec : train_set.records) fitter.add(rec);
    const LmmseStatistics lmmse_stats = fitter.finish();
    lmmse_stats.save(lmmse_path(cfg));

    std::vector<EvalReport> reports;
    reports.push_back(evaluate(interp_ls_scorer(test.grid, test.pilots), test, "snr",
                               "interp_ls", 0, test_file));
    reports.push_back(
        evaluate(lmmse_scorer(lmmse_stats, test.grid), test, "snr", "lmmse", 0, test_file));
    reports.push_back(evaluate(model_scorer(ada), test, "snr", cfg.model_label(), 0, test_file));
    reports.push_back(
        evaluate(model_scorer(linear), test, "snr", lin.model_label(), 0, test_file));
    write_eval_csv(eval_csv_path(cfg, "snr"), reports);

    for (const EvalReport& rep : reports)
        for (const EvalRow& row : rep.rows) ctx.snr_db[rep.model][row.sweep_value] = row.mse_db;
    ctx.desk = cfg;
    ctx.ada = ada;
    ctx.linear = linear;
    ctx.test_snr = test;
    ctx.desk_ready = true;

    const auto& interp = ctx.snr_db.at("interp_ls");
    const auto& ada_db = ctx.snr_db.at(cfg.model_label());
    const auto& lin_db = ctx.snr_db.at(lin.model_label());
    double min_margin = 1e300, min_margin_snr = 0.0;
    for (const auto& [snr, db] : ada_db) {
        std::printf("  snr %2.0f dB: interp %7.3f, lmmse %7.3f, %s %7.3f, linear %7.3f dB\n",
                    snr, interp.at(snr), ctx.snr_db.at("lmmse").at(snr), cfg.model_label().c_str(),
                    db, lin_db.at(snr));
        const double margin = interp.at(snr) - db;
        if (margin < min_margin) {
            min_margin = margin;
            min_margin_snr = snr;
        }
    }
    const double dt = seconds_since(t0);
    std::printf("  wall time %.1f min on %u hardware threads (generation %.1f min, adaptive "
                "training %.1f min; target: 60 min on a commodity 8-core CPU)\n",
                dt / 60.0, std::thread::hardware_concurrency(), gen_s / 60.0, ada_s / 60.0);

    if (min_margin <= 0.0)
        return fail(strf("adaptive model does not strictly beat interpolated LS at snr %g "
                         "(margin %.3f dB)",
                         min_margin_snr, min_margin));
    for (const auto& [snr, db] : ada_db) {
        if (snr <= 10.0 && db > lin_db.at(snr))
            return fail(strf("adaptive model above linear at snr %g (%.3f vs %.3f dB)", snr, db,
                             lin_db.at(snr)));
    }
    return pass(strf("beats interpolated LS at all 6 SNRs (min gain %.3f dB at snr %g) and "
                     "linear at snr <= 10; %.1f min wall",
                     min_margin, min_margin_snr, dt / 60.0));
}

// ---------------------------------------------------------------------------
// 8. Condition adaptivity: wrong condition inputs move the adaptive model's
//    error by a reported nonzero amount, while the condition-free variant is
//    bit-identical under the same swap.
// ---------------------------------------------------------------------------

Outcome crit_adaptivity(Ctx& ctx) {
    if (!ctx.desk_ready) return fail("desk artifacts unavailable (criterion 7 did not finish)");

    std::vector<const DataRecord*> high;
    for (const DataRecord& rec : ctx.test_snr.records)
        if (rec.stats.snr_db == 25.0) high.push_back(&rec);
    if (high.empty()) return fail("no snr 25 records in the test sweep");

    ModelRunner runner(ctx.ada, false);
    double mse_true = 0.0, mse_wrong = 0.0;
    for (const DataRecord* rec : high) {
        mse_true += runner.infer(*rec).mse;
        DataRecord fed = *rec;
        fed.stats.snr_db = 0.0;  // lie about the noise level only
        mse_wrong += runner.infer(fed).mse;
    }
    mse_true /= static_cast<double>(high.size());
    mse_wrong /= static_cast<double>(high.size());
    const double delta = mse_wrong - mse_true;
    std::printf("  adaptive model on %zu snr-25 records: true-condition MSE %.6e, "
                "0 dB-condition MSE %.6e (delta %+.3e, %+.2f dB)\n",
                high.size(), mse_true, mse_wrong, delta,
                mse_to_db(mse_wrong) - mse_to_db(mse_true));
    if (!(std::abs(delta) > 1e-12 * std::max(1.0, mse_true)))
        return fail("wrong condition inputs did not change the adaptive model's MSE");

    // Condition-free trunk: identical records with scrambled statistics must
    // produce bit-identical estimates (random init; invariance is structural).
    ModelConfig fc = ctx.desk.model_config();
    fc.variant = ModelVariant::kFortiTran;
    const Model forti = Model::init(fc, 17);
    ModelRunner frunner(forti, false);
    for (const DataRecord* rec : high) {
        const ForwardResult a = frunner.infer(*rec);
        DataRecord fed = *rec;
        fed.stats.snr_db = 0.0;
        fed.stats.doppler_hz = 999.0;
        fed.stats.delay_spread_ns = 77.0;
        const ForwardResult b = frunner.infer(fed);
        if (a.estimate.values != b.estimate.values)
            return fail("condition-free variant output changed under a statistics swap");
    }
    return pass(strf("adaptive MSE moves %+.3e under a 25->0 dB condition lie; "
                     "condition-free variant bit-identical on all %zu records",
                     delta, high.size()));
}

// ---------------------------------------------------------------------------
// 9. Trend curves: MSE dB non-increasing in SNR for all four estimators, and
//    non-increasing in pilot count for the classical estimators.
// ---------------------------------------------------------------------------

Outcome crit_trends(Ctx& ctx) {
    if (!ctx.desk_ready) return fail("desk artifacts unavailable (criterion 7 did not finish)");
    const double tol = 0.3;

    double worst_inc = -1e300;
    std::string worst_what;
    for (const auto& [model, curve] : ctx.snr_db) {
        double prev = 1e300;
        double prev_snr = 0.0;
        bool first = true;
        for (const auto& [snr, db] : curve) {
            if (!first) {
                const double inc = db - prev;
                if (inc > worst_inc) {
                    worst_inc = inc;
                    worst_what = strf("%s at snr %g->%g", model.c_str(), prev_snr, snr);
                }
            }
            prev = db;
            prev_snr = snr;
            first = false;
        }
    }
    if (worst_inc > tol)
        return fail(strf("SNR curve rises %.3f dB for %s (tolerance %.1f dB)", worst_inc,
                         worst_what.c_str(), tol));

    // Pilot-density sweep for the classical estimators: spacing 8 -> 3 means
    // 30 -> 80 pilots; error must not grow as pilots are added. The neural
    // models are excluded here: their input width is bound to one pilot
    // layout per trained model, and retraining per layout is outside the
    // desk budget.
    GridConfig grid;
    const TdlProfile& prof = TdlProfile::bundled();
    ChannelStats st;
    st.snr_db = 5.0;
    st.doppler_hz = 500.0;
    st.delay_spread_ns = 200.0;
    double prev_interp = 1e300, prev_lmmse = 1e300;
    double worst_pilot_inc = -1e300;
    std::string worst_pilot_what;
    for (int64_t spacing : {8, 6, 5, 4, 3}) {
        const PilotGrid pilots = make_pilot_grid(grid, spacing);
        LmmseFitter fitter(grid, pilots);
        const uint64_t fit_seed = derive_seed(0x9107, static_cast<uint64_t>(spacing), 1);
        for (int i = 0; i < 2000; ++i)
            fitter.add(make_record(prof, grid, pilots, st,
                                   derive_seed(fit_seed, static_cast<uint64_t>(i), 1)));
        const LmmseEstimator lmmse(fitter.finish());
        const uint64_t test_seed = derive_seed(0x9107, static_cast<uint64_t>(spacing), 2);
        double interp_sum = 0.0, lmmse_sum = 0.0;
        for (int i = 0; i < 200; ++i) {
            const DataRecord rec = make_record(prof, grid, pilots, st,
                                               derive_seed(test_seed, static_cast<uint64_t>(i), 2));
            interp_sum += frame_mse(interpolate_ls(obs_from(rec.ls), pilots, grid), rec.truth);
            lmmse_sum += frame_mse(lmmse.estimate(rec.ls, grid), rec.truth);
        }
        const double interp_db = mse_to_db(interp_sum / 200.0);
        const double lmmse_db = mse_to_db(lmmse_sum / 200.0);
        std::printf("  spacing %lld (%lld pilots): interp %7.3f dB, lmmse %7.3f dB\n",
                    static_cast<long long>(spacing), static_cast<long long>(pilots.count()),
                    interp_db, lmmse_db);
        if (interp_db - prev_interp > worst_pilot_inc) {
            worst_pilot_inc = interp_db - prev_interp;
            worst_pilot_what = strf("interp_ls at spacing %lld", static_cast<long long>(spacing));
        }
        if (lmmse_db - prev_lmmse > worst_pilot_inc) {
            worst_pilot_inc = lmmse_db - prev_lmmse;
            worst_pilot_what = strf("lmmse at spacing %lld", static_cast<long long>(spacing));
        }
        prev_interp = interp_db;
        prev_lmmse = lmmse_db;
    }
    if (worst_pilot_inc > tol)
        return fail(strf("pilot curve rises %.3f dB for %s (tolerance %.1f dB)", worst_pilot_inc,
                         worst_pilot_what.c_str(), tol));
    return pass(strf("SNR curves non-increasing for all 4 estimators (max step %+.3f dB), "
                     "pilot curves non-increasing for the classical pair (max step %+.3f dB; "
                     "neural models bound to one layout, excluded)",
                     worst_inc, worst_pilot_inc));
}

// ---------------------------------------------------------------------------
// 10. Determinism: generate/train/eval reruns with one master seed produce
//     byte-identical artifacts at different worker counts.
// ---------------------------------------------------------------------------

Outcome crit_determinism(Ctx& ctx) {
    ExperimentConfig a;
    a.apply_preset("tiny");
    a.variant = ModelVariant::kLinear;
    a.n_layers = 0;
    a.pilot_spacing = 3;
    a.seed = 7;
    a.out_dir = (ctx.work / "det_a").string();
    ExperimentConfig b = a;
    b.out_dir = (ctx.work / "det_b").string();

    if (cmd_generate(a, 1) != 0 || cmd_generate(b, 3) != 0)
        return fail("dataset generation failed");
    if (cmd_train(a, 1) != 0 || cmd_train(b, 2) != 0) return fail("training failed");
    if (cmd_eval(a, "", "snr", 1) != 0 || cmd_eval(b, "", "snr", 3) != 0)
        return fail("evaluation failed");

    const char* artifacts[] = {
        "train.aftd",       "val.aftd",          "test_snr.aftd", "test_doppler.aftd",
        "test_delay_spread.aftd", "test_pilot.aftd", "linear.aftc",   "linear_history.csv",
        "lmmse.aftl",       "eval_snr.csv",
    };
    int compared = 0;
    for (const char* name : artifacts) {
        const std::string bytes_a = slurp(fs::path(a.out_dir) / name);
        const std::string bytes_b = slurp(fs::path(b.out_dir) / name);
        if (bytes_a.empty()) return fail(strf("artifact %s is empty", name));
        if (bytes_a != bytes_b)
            return fail(strf("artifact %s differs between worker counts", name));
        ++compared;
    }
    return pass(strf("%d artifacts byte-identical across reruns at worker counts "
                     "1/3 (generate), 1/2 (train), 1/3 (eval)",
                     compared));
}

}  // namespace

int main() {
    Ctx ctx;
    ctx.work = fs::temp_directory_path() / "aft_acceptance";
    fs::remove_all(ctx.work);
    fs::create_directories(ctx.work);
    std::printf("acceptance suite (work dir %s, %u hardware threads)\n", ctx.work.c_str(),
                std::thread::hardware_concurrency());

    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const Criterion criteria[] = {
        {1, "gradient checks", [&] { return crit_gradients(); }},
        {2, "pilot least squares", [&] { return crit_ls_oracle(); }},
        {3, "lmmse conditional mean", [&] { return crit_lmmse_oracle(); }},
        {4, "channel statistics", [&] { return crit_channel_stats(); }},
        {5, "architecture shapes", [&] { return crit_shapes(); }},
        {6, "parameter accounting", [&] { return crit_param_counts(); }},
        {7, "desk-scale learning", [&] { return crit_desk_learning(ctx); }},
        {8, "condition adaptivity", [&] { return crit_adaptivity(ctx); }},
        {9, "trend curves", [&] { return crit_trends(ctx); }},
        {10, "byte determinism", [&] { return crit_determinism(ctx); }},
    };

    int failed = 0;
    for (const Criterion& c : criteria) {
        std::printf("---- %d. %s ----\n", c.id, c.name);
        std::fflush(stdout);
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = fail(strf("exception: %s", e.what()));
        }
        std::printf("[%s] %d. %s: %s\n", out.ok ? "PASS" : "FAIL", c.id, c.name,
                    out.detail.c_str());
        std::fflush(stdout);
        if (!out.ok) ++failed;
    }
    std::printf("%d/10 criteria passed\n", 10 - failed);
    return failed;
}
