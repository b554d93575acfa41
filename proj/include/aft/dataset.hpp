// Dataset recipes and the .aftd file format: serialized (stats, LS estimate,
// ground-truth frame) records. Generation is deterministic per master seed
// and embarrassingly parallel over records; worker count never changes bytes.
#pragma once

#include <string>
#include <vector>

#include "aft/tdl.hpp"
#include "aft/types.hpp"

namespace aft {

struct DataRecord {
    ChannelStats stats;
    std::vector<cplx> ls;     // LS estimate at pilots, pilot-vector order
    std::vector<cplx> truth;  // full frame, frequency-major
};

struct Dataset {
    GridConfig grid;
    PilotGrid pilots;
    std::vector<DataRecord> records;

    int64_t count() const { return static_cast<int64_t>(records.size()); }
};

// One homogeneous group of records: every stats field is drawn independently
// and uniformly from its value list (singleton lists pin a field).
struct StatsBlock {
    std::vector<double> snr_db;
    std::vector<double> doppler_hz;
    std::vector<double> delay_spread_ns;
    int64_t count = 0;
};

struct DatasetRecipe {
    GridConfig grid;
    int64_t pilot_spacing = 3;
    std::vector<StatsBlock> blocks;

    int64_t total() const {
        int64_t n = 0;
        for (const auto& b : blocks) n += b.count;
        return n;
    }
    void validate() const;
};

// Generates one record from its own seed: tap trajectory -> frequency
// response -> noisy pilot observation -> LS.
DataRecord make_record(const TdlProfile& profile, const GridConfig& grid,
                       const PilotGrid& pilots, const ChannelStats& stats, uint64_t record_seed);

// The stats assigned to global record index `index` under `master_seed`.
ChannelStats recipe_stats_at(const DatasetRecipe& recipe, int64_t index, uint64_t master_seed);

// Generates all records and writes the .aftd file. Returns the record count.
int64_t build_dataset(const DatasetRecipe& recipe, const std::string& out_path,
                      uint64_t master_seed, int workers = 0);

Dataset read_dataset(const std::string& path);
void write_dataset(const Dataset& data, const std::string& path);

}  // namespace aft
