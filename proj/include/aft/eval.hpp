// Sweep evaluation: per-record squared-error scoring, grouping by a swept
// channel statistic, and CSV reporting. Neural and classical estimators run
// through the same scoring path so curves are directly comparable.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "aft/dataset.hpp"
#include "aft/estimators.hpp"
#include "aft/model.hpp"

namespace aft {

struct EvalRow {
    std::string sweep_key;
    double sweep_value = 0.0;
    std::string model;
    double mse_linear = 0.0;
    double mse_db = 0.0;
    int64_t n = 0;
};

struct EvalReport {
    std::string sweep_key;
    std::string model;
    std::string dataset_id;
    std::vector<EvalRow> rows;  // ascending sweep value
};

// 10*log10(linear), floored at -120 dB so perfect estimates stay finite.
double mse_to_db(double linear);

// Mean squared complex error of a frame against a record's truth vector.
double frame_mse(const ChannelFrame& estimate, const std::vector<cplx>& truth);

// One scorer per worker; each call returns a record's squared error.
using RecordScorer = std::function<double(const DataRecord&)>;
using ScorerFactory = std::function<RecordScorer()>;

// Groups records by the swept statistic ("snr", "doppler", "delay_spread",
// or "pilot_spacing" for single-group sets) and averages per group. Worker
// count never changes the result bytes.
EvalReport evaluate(const ScorerFactory& factory, const Dataset& test,
                    const std::string& sweep_key, const std::string& label,
                    int workers = 0, const std::string& dataset_id = "");

ScorerFactory model_scorer(const Model& model);
ScorerFactory interp_ls_scorer(const GridConfig& grid, const PilotGrid& pilots);
ScorerFactory lmmse_scorer(const LmmseStatistics& stats, const GridConfig& grid);

void write_eval_csv(const std::string& path, const std::vector<EvalReport>& reports);

}  // namespace aft
