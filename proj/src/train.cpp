#include "aft/train.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>

#include "aft/adam.hpp"
#include "aft/parallel.hpp"
#include "aft/rng.hpp"

namespace aft {

namespace {

constexpr uint64_t kStreamInit = 0x696e'6974ULL;     // parameter initialization
constexpr uint64_t kStreamShuffle = 0x7368'7566ULL;  // per-epoch batch order

// Samples per gradient chunk and chunks per reduction wave. Both are fixed
// constants (never derived from the worker count) so batch gradients are
// summed in the same order however many threads run.
constexpr int64_t kGradChunk = 8;
constexpr int64_t kWaveChunks = 16;

// Hands out tape-holding runners to worker threads, one at a time.
class RunnerPool {
public:
    RunnerPool(const Model& model, bool with_grad, int count) {
        for (int i = 0; i < count; ++i) runners_.emplace_back(model, with_grad);
        for (int i = count - 1; i >= 0; --i) free_.push_back(i);
    }

    int acquire() {
        std::lock_guard<std::mutex> lock(mu_);
        const int id = free_.back();
        free_.pop_back();
        return id;
    }
    void release(int id) {
        std::lock_guard<std::mutex> lock(mu_);
        free_.push_back(id);
    }
    ModelRunner& at(int id) { return runners_[static_cast<size_t>(id)]; }

    // Re-reads the shared parameters; call after every optimizer step.
    void refresh_all() {
        for (ModelRunner& r : runners_) r.refresh();
    }

private:
    std::mutex mu_;
    std::vector<int> free_;
    std::deque<ModelRunner> runners_;
};

void check_compatible(const ModelConfig& cfg, const Dataset& ds, const char* which) {
    if (ds.grid.n_subcarriers != cfg.grid.n_subcarriers ||
        ds.grid.n_symbols != cfg.grid.n_symbols)
        throw std::invalid_argument(std::string(which) +
                                    " set grid does not match the model config");
    if (ds.pilots.count() != cfg.n_pilots)
        throw std::invalid_argument(std::string(which) +
                                    " set pilot count does not match the model config");
    if (ds.records.empty())
        throw std::invalid_argument(std::string(which) + " set is empty");
}

double validation_mse(RunnerPool& pool, const Dataset& val, int workers) {
    const int64_t n = val.count();
    std::vector<double> losses(static_cast<size_t>(n), 0.0);
    parallel_for_chunks(n, 64, workers, [&](int64_t begin, int64_t end) {
        const int id = pool.acquire();
        try {
            ModelRunner& runner = pool.at(id);
            for (int64_t i = begin; i < end; ++i)
                losses[static_cast<size_t>(i)] =
                    runner.loss_of(val.records[static_cast<size_t>(i)]);
        } catch (...) {
            pool.release(id);
            throw;
        }
        pool.release(id);
    });
    double acc = 0.0;
    for (double l : losses) acc += l;
    return acc / static_cast<double>(n);
}

}  // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(lr_decay > 0.0) || lr_decay > 1.0)
        throw std::invalid_argument("lr decay must be in (0, 1]");
    if (max_epochs < 1) throw std::invalid_argument("max epochs must be >= 1");
    if (patience < 1) throw std::invalid_argument("patience must be >= 1");
}

double mse_loss(const ChannelFrame& estimate, const ChannelFrame& truth) {
    if (estimate.n_subcarriers != truth.n_subcarriers ||
        estimate.n_symbols != truth.n_symbols)
        throw std::invalid_argument("mse_loss: frame shapes differ");
    double acc = 0.0;
    for (size_t i = 0; i < truth.values.size(); ++i) {
        const cplx d = estimate.values[i] - truth.values[i];
        acc += d.real() * d.real() + d.imag() * d.imag();
    }
    return acc / static_cast<double>(truth.values.size());
}

TrainResult train(const ModelConfig& model_cfg, const Dataset& train_set,
                  const Dataset& val_set, const TrainConfig& cfg, int workers) {
    model_cfg.validate();
    cfg.validate();
    check_compatible(model_cfg, train_set, "training");
    check_compatible(model_cfg, val_set, "validation");
    if (workers <= 0) workers = hardware_workers();

    Model model = Model::init(model_cfg, derive_seed(cfg.seed, 0, kStreamInit));

    std::vector<Tensor*> params;
    std::vector<std::string> names;
    model.for_each_param([&](const std::string& name, Tensor& t) {
        params.push_back(&t);
        names.push_back(name);
    });
    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (Tensor* p : params) grads.emplace_back(p->shape);
    std::vector<const Tensor*> grad_ptrs;
    for (Tensor& g : grads) grad_ptrs.push_back(&g);

    // A reduction wave holds at most kWaveChunks chunk-local gradient sets;
    // big batches are processed as several waves.
    const int64_t batch_chunks =
        (static_cast<int64_t>(cfg.batch_size) + kGradChunk - 1) / kGradChunk;
    const int64_t n_buffers = std::min<int64_t>(batch_chunks, kWaveChunks);
    std::vector<std::vector<Tensor>> chunk_grads(static_cast<size_t>(n_buffers));
    for (auto& buf : chunk_grads) {
        buf.reserve(params.size());
        for (Tensor* p : params) buf.emplace_back(p->shape);
    }
    std::vector<double> chunk_losses(static_cast<size_t>(n_buffers), 0.0);

    Adam adam({cfg.lr, cfg.beta1, cfg.beta2, 1e-8});
    RunnerPool pool(model, true, workers);

    TrainResult result;
    result.init_val_mse = validation_mse(pool, val_set, workers);
    result.best = model;
    result.best_epoch = 0;
    result.best_val_mse = result.init_val_mse;

    const int64_t n = train_set.count();
    std::vector<int64_t> order(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;

    int stale = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const double epoch_lr = cfg.lr * std::pow(cfg.lr_decay, epoch - 1);
        adam.set_lr(epoch_lr);

        Rng shuffle_rng(derive_seed(cfg.seed, static_cast<uint64_t>(epoch), kStreamShuffle));
        for (int64_t i = n - 1; i > 0; --i) {
            const int64_t j =
                static_cast<int64_t>(shuffle_rng.below(static_cast<uint64_t>(i + 1)));
            std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
        }

        double epoch_loss = 0.0;
        try {
            for (int64_t start = 0; start < n; start += cfg.batch_size) {
                const int64_t stop = std::min(n, start + cfg.batch_size);
                pool.refresh_all();
                for (Tensor& g : grads)
                    std::fill(g.data.begin(), g.data.end(), 0.0);
                double batch_loss = 0.0;
                // Waves of fixed-size chunks: workers fill disjoint chunk
                // buffers, then the buffers are summed in chunk order.
                for (int64_t wave = start; wave < stop; wave += n_buffers * kGradChunk) {
                    const int64_t wave_stop = std::min(stop, wave + n_buffers * kGradChunk);
                    const int64_t wave_n = wave_stop - wave;
                    const int64_t used =
                        (wave_n + kGradChunk - 1) / kGradChunk;  // buffers in this wave
                    for (int64_t c = 0; c < used; ++c) {
                        chunk_losses[static_cast<size_t>(c)] = 0.0;
                        for (Tensor& g : chunk_grads[static_cast<size_t>(c)])
                            std::fill(g.data.begin(), g.data.end(), 0.0);
                    }
                    parallel_for_chunks(wave_n, kGradChunk, workers,
                                        [&](int64_t begin, int64_t end) {
                        const int64_t c = begin / kGradChunk;
                        const int id = pool.acquire();
                        try {
                            ModelRunner& runner = pool.at(id);
                            auto& buf = chunk_grads[static_cast<size_t>(c)];
                            double loss = 0.0;
                            for (int64_t i = begin; i < end; ++i) {
                                const size_t rec_idx = static_cast<size_t>(
                                    order[static_cast<size_t>(wave + i)]);
                                loss += runner.accumulate_gradients(train_set.records[rec_idx],
                                                                    buf);
                            }
                            chunk_losses[static_cast<size_t>(c)] = loss;
                        } catch (...) {
                            pool.release(id);
                            throw;
                        }
                        pool.release(id);
                    });
                    for (int64_t c = 0; c < used; ++c) {
                        batch_loss += chunk_losses[static_cast<size_t>(c)];
                        const auto& buf = chunk_grads[static_cast<size_t>(c)];
                        for (size_t t = 0; t < grads.size(); ++t)
                            kern::axpy(grads[t].numel(), 1.0, buf[t].ptr(), grads[t].ptr());
                    }
                }
                epoch_loss += batch_loss;
                const double inv = 1.0 / static_cast<double>(stop - start);
                for (Tensor& g : grads)
                    for (double& v : g.data) v *= inv;
                adam.step(params, grad_ptrs, names);
            }
            pool.refresh_all();

            EpochStats row;
            row.epoch = epoch;
            row.train_mse = epoch_loss / static_cast<double>(n);
            row.val_mse = validation_mse(pool, val_set, workers);
            row.lr = epoch_lr;
            result.history.push_back(row);

            if (row.val_mse < result.best_val_mse) {
                result.best_val_mse = row.val_mse;
                result.best_epoch = epoch;
                result.best = model;
                stale = 0;
            } else {
                ++stale;
                if (stale >= cfg.patience) break;
            }
        } catch (const std::runtime_error& e) {
            // Non-finite forward values or gradients: abort with the best
            // parameters seen so far.
            result.diverged = true;
            result.divergence_note = e.what();
            return result;
        }
    }
    return result;
}

void write_history_csv(const std::string& path, const TrainResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "epoch,train_mse,val_mse,lr\n";
    char buf[160];
    for (const EpochStats& row : result.history) {
        std::snprintf(buf, sizeof(buf), "%d,%.12e,%.12e,%.12e\n", row.epoch, row.train_mse,
                      row.val_mse, row.lr);
        out << buf;
    }
    if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

}  // namespace aft
