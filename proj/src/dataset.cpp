#include "aft/dataset.hpp"

#include <cmath>

#include "aft/io.hpp"
#include "aft/parallel.hpp"
#include "aft/sim.hpp"

namespace aft {

namespace {

constexpr uint16_t kDatasetVersion = 1;
constexpr uint64_t kStreamRecord = 0x7265'636fULL;
constexpr uint64_t kStreamStats = 0x7374'6174ULL;
constexpr int64_t kWaveSize = 256;   // records generated per write pass
constexpr int64_t kChunkSize = 8;    // fixed parallel grain within a wave

void write_header(io::Writer& w, const GridConfig& grid, const PilotGrid& pilots,
                  uint64_t record_count) {
    w.magic("AFTD");
    w.u16(kDatasetVersion);
    w.u32(static_cast<uint32_t>(grid.n_subcarriers));
    w.u32(static_cast<uint32_t>(grid.n_symbols));
    w.f64(grid.subcarrier_spacing_hz);
    w.u32(static_cast<uint32_t>(pilots.spacing));
    w.u32(static_cast<uint32_t>(pilots.freq_indices.size()));
    w.u32(static_cast<uint32_t>(pilots.time_indices.size()));
    for (int64_t n : pilots.freq_indices) w.u32(static_cast<uint32_t>(n));
    for (int64_t k : pilots.time_indices) w.u32(static_cast<uint32_t>(k));
    // Pilot symbols keep full precision so the unit-modulus invariant
    // survives the round trip; record payloads are the 32-bit floats.
    for (const cplx& s : pilots.pilot_symbols) {
        w.f64(s.real());
        w.f64(s.imag());
    }
    w.u64(record_count);
}

void write_record(io::Writer& w, const DataRecord& rec) {
    w.f32(static_cast<float>(rec.stats.snr_db));
    w.f32(static_cast<float>(rec.stats.doppler_hz));
    w.f32(static_cast<float>(rec.stats.delay_spread_ns));
    for (const cplx& v : rec.ls) {
        w.f32(static_cast<float>(v.real()));
        w.f32(static_cast<float>(v.imag()));
    }
    for (const cplx& v : rec.truth) {
        w.f32(static_cast<float>(v.real()));
        w.f32(static_cast<float>(v.imag()));
    }
}

}  // namespace

void DatasetRecipe::validate() const {
    grid.validate();
    if (pilot_spacing <= 0) throw std::invalid_argument("pilot spacing must be positive");
    if (blocks.empty()) throw std::invalid_argument("dataset recipe has no blocks");
    for (const auto& b : blocks) {
        if (b.count <= 0) throw std::invalid_argument("recipe block count must be positive");
        if (b.snr_db.empty() || b.doppler_hz.empty() || b.delay_spread_ns.empty())
            throw std::invalid_argument("recipe block has an empty parameter grid");
    }
}

DataRecord make_record(const TdlProfile& profile, const GridConfig& grid,
                       const PilotGrid& pilots, const ChannelStats& stats,
                       uint64_t record_seed) {
    DataRecord rec;
    rec.stats = stats;
    const TapTrajectory taps = generate_tdl_taps(profile, stats, grid, record_seed);
    const ChannelFrame frame = taps_to_frequency_response(taps, grid);
    const PilotObservation obs = simulate_pilots(frame, pilots, stats.snr_db, record_seed);
    rec.ls = obs.ls_estimate;
    rec.truth = frame.values;
    return rec;
}

ChannelStats recipe_stats_at(const DatasetRecipe& recipe, int64_t index, uint64_t master_seed) {
    const StatsBlock* block = nullptr;
    int64_t offset = index;
    for (const auto& b : recipe.blocks) {
        if (offset < b.count) {
            block = &b;
            break;
        }
        offset -= b.count;
    }
    if (!block) throw std::out_of_range("record index beyond recipe total");
    const uint64_t rec_seed = derive_seed(master_seed, static_cast<uint64_t>(index), kStreamRecord);
    Rng rng(derive_seed(rec_seed, 0, kStreamStats));
    ChannelStats s;
    s.snr_db = block->snr_db[rng.below(block->snr_db.size())];
    s.doppler_hz = block->doppler_hz[rng.below(block->doppler_hz.size())];
    s.delay_spread_ns = block->delay_spread_ns[rng.below(block->delay_spread_ns.size())];
    return s;
}

int64_t build_dataset(const DatasetRecipe& recipe, const std::string& out_path,
                      uint64_t master_seed, int workers) {
    recipe.validate();
    const TdlProfile& profile = TdlProfile::bundled();
    const PilotGrid pilots = make_pilot_grid(recipe.grid, recipe.pilot_spacing);
    const int64_t total = recipe.total();

    io::Writer w(out_path);
    write_header(w, recipe.grid, pilots, static_cast<uint64_t>(total));

    std::vector<DataRecord> wave(static_cast<size_t>(std::min(total, kWaveSize)));
    for (int64_t base = 0; base < total; base += kWaveSize) {
        const int64_t n = std::min(kWaveSize, total - base);
        parallel_for_chunks(n, kChunkSize, workers, [&](int64_t lo, int64_t hi) {
            for (int64_t i = lo; i < hi; ++i) {
                const int64_t index = base + i;
                const ChannelStats stats = recipe_stats_at(recipe, index, master_seed);
                const uint64_t rec_seed =
                    derive_seed(master_seed, static_cast<uint64_t>(index), kStreamRecord);
                wave[static_cast<size_t>(i)] =
                    make_record(profile, recipe.grid, pilots, stats, rec_seed);
            }
        });
        for (int64_t i = 0; i < n; ++i) write_record(w, wave[static_cast<size_t>(i)]);
    }
    w.close();
    return total;
}

void write_dataset(const Dataset& data, const std::string& path) {
    io::Writer w(path);
    write_header(w, data.grid, data.pilots, static_cast<uint64_t>(data.records.size()));
    for (const DataRecord& rec : data.records) write_record(w, rec);
    w.close();
}

Dataset read_dataset(const std::string& path) {
    io::Reader r(path);
    r.expect_magic("AFTD");
    const uint16_t version = r.u16();
    if (version != kDatasetVersion)
        throw std::runtime_error("unsupported dataset version in " + path);

    Dataset data;
    data.grid.n_subcarriers = r.u32();
    data.grid.n_symbols = r.u32();
    data.grid.subcarrier_spacing_hz = r.f64();
    data.grid.validate();
    data.pilots.spacing = r.u32();
    const uint32_t n_freq = r.u32();
    const uint32_t n_time = r.u32();
    data.pilots.freq_indices.resize(n_freq);
    data.pilots.time_indices.resize(n_time);
    for (auto& n : data.pilots.freq_indices) n = r.u32();
    for (auto& k : data.pilots.time_indices) k = r.u32();
    data.pilots.pilot_symbols.resize(static_cast<size_t>(n_freq) * n_time);
    for (auto& s : data.pilots.pilot_symbols) {
        const double re = r.f64();
        const double im = r.f64();
        s = cplx{re, im};
    }
    data.pilots.validate(data.grid);

    const uint64_t count = r.u64();
    const size_t np = data.pilots.pilot_symbols.size();
    const size_t cells = static_cast<size_t>(data.grid.cells());
    data.records.resize(count);
    for (auto& rec : data.records) {
        rec.stats.snr_db = r.f32();
        rec.stats.doppler_hz = r.f32();
        rec.stats.delay_spread_ns = r.f32();
        rec.ls.resize(np);
        for (auto& v : rec.ls) {
            const double re = r.f32();
            const double im = r.f32();
            v = cplx{re, im};
        }
        rec.truth.resize(cells);
        for (auto& v : rec.truth) {
            const double re = r.f32();
            const double im = r.f32();
            v = cplx{re, im};
        }
    }
    return data;
}

}  // namespace aft
