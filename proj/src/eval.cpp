#include "aft/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <stdexcept>

#include "aft/parallel.hpp"

namespace aft {

namespace {

constexpr double kDbFloor = -120.0;
constexpr int64_t kEvalChunk = 64;  // records per scorer instance

std::function<double(const DataRecord&)> sweep_selector(const std::string& key,
                                                        const Dataset& ds) {
    if (key == "snr") return [](const DataRecord& r) { return r.stats.snr_db; };
    if (key == "doppler") return [](const DataRecord& r) { return r.stats.doppler_hz; };
    if (key == "delay_spread")
        return [](const DataRecord& r) { return r.stats.delay_spread_ns; };
    if (key == "pilot_spacing") {
        const double spacing = static_cast<double>(ds.pilots.spacing);
        return [spacing](const DataRecord&) { return spacing; };
    }
    throw std::invalid_argument("unknown sweep key: " + key +
                                " (expected snr, doppler, delay_spread, or pilot_spacing)");
}

}  // namespace

double mse_to_db(double linear) {
    if (!(linear > 0.0)) return kDbFloor;
    const double db = 10.0 * std::log10(linear);
    return db < kDbFloor ? kDbFloor : db;
}

double frame_mse(const ChannelFrame& estimate, const std::vector<cplx>& truth) {
    if (estimate.values.size() != truth.size())
        throw std::invalid_argument("frame size does not match truth vector");
    double acc = 0.0;
    for (size_t i = 0; i < truth.size(); ++i) {
        const cplx d = estimate.values[i] - truth[i];
        acc += d.real() * d.real() + d.imag() * d.imag();
    }
    return acc / static_cast<double>(truth.size());
}

EvalReport evaluate(const ScorerFactory& factory, const Dataset& test,
                    const std::string& sweep_key, const std::string& label, int workers,
                    const std::string& dataset_id) {
    if (test.records.empty()) throw std::invalid_argument("test set is empty");
    const auto select = sweep_selector(sweep_key, test);

    const int64_t n = test.count();
    std::vector<double> errors(static_cast<size_t>(n));
    parallel_for_chunks(n, kEvalChunk, workers, [&](int64_t begin, int64_t end) {
        RecordScorer scorer = factory();
        for (int64_t i = begin; i < end; ++i)
            errors[static_cast<size_t>(i)] = scorer(test.records[static_cast<size_t>(i)]);
    });

    // Deterministic reduction in record order, grouped by swept value.
    std::map<double, std::pair<double, int64_t>> groups;
    for (int64_t i = 0; i < n; ++i) {
        auto& g = groups[select(test.records[static_cast<size_t>(i)])];
        g.first += errors[static_cast<size_t>(i)];
        g.second += 1;
    }

    EvalReport report;
    report.sweep_key = sweep_key;
    report.model = label;
    report.dataset_id = dataset_id;
    for (const auto& [value, sum_count] : groups) {
        EvalRow row;
        row.sweep_key = sweep_key;
        row.sweep_value = value;
        row.model = label;
        row.n = sum_count.second;
        row.mse_linear = sum_count.first / static_cast<double>(sum_count.second);
        row.mse_db = mse_to_db(row.mse_linear);
        report.rows.push_back(row);
    }
    return report;
}

ScorerFactory model_scorer(const Model& model) {
    const Model* m = &model;
    return [m]() -> RecordScorer {
        auto runner = std::make_shared<ModelRunner>(*m, false);
        return [runner](const DataRecord& rec) { return runner->infer(rec).mse; };
    };
}

ScorerFactory interp_ls_scorer(const GridConfig& grid, const PilotGrid& pilots) {
    return [grid, pilots]() -> RecordScorer {
        return [grid, pilots](const DataRecord& rec) {
            PilotObservation obs;
            obs.ls_estimate = rec.ls;
            return frame_mse(interpolate_ls(obs, pilots, grid), rec.truth);
        };
    };
}

ScorerFactory lmmse_scorer(const LmmseStatistics& stats, const GridConfig& grid) {
    const LmmseStatistics* s = &stats;
    return [s, grid]() -> RecordScorer {
        auto est = std::make_shared<LmmseEstimator>(*s);
        return [est, grid](const DataRecord& rec) {
            return frame_mse(est->estimate(rec.ls, grid), rec.truth);
        };
    };
}

void write_eval_csv(const std::string& path, const std::vector<EvalReport>& reports) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "sweep_key,sweep_value,model,mse_linear,mse_db,n\n";
    char buf[224];
    for (const EvalReport& report : reports) {
        for (const EvalRow& row : report.rows) {
            std::snprintf(buf, sizeof(buf), "%s,%.17g,%s,%.12e,%.6f,%lld\n",
                          row.sweep_key.c_str(), row.sweep_value, row.model.c_str(),
                          row.mse_linear, row.mse_db, static_cast<long long>(row.n));
            out << buf;
        }
    }
    if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

}  // namespace aft
