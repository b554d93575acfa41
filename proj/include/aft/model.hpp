// The AdaFortiTran estimator family assembled from tape primitives: a dense
// pilot upsampler, a shallow convolutional feature enhancer, condition
// encoders that append (SNR, Doppler, delay-spread) codes to the patch
// sequence, a post-norm transformer encoder, and a convolutional
// reconstructor over the shallow+deep residual sum. Real and imaginary parts
// run through the same weights independently.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aft/dataset.hpp"
#include "aft/tape.hpp"
#include "aft/types.hpp"

namespace aft {

enum class ModelVariant : uint8_t {
    kAdaFortiTran = 0,  // condition-aware: patch vectors carry adaptive codes
    kFortiTran = 1,     // same trunk without the condition encoders
    kLinear = 2,        // dense upsampler only
};

std::string to_string(ModelVariant v);
ModelVariant variant_from_string(const std::string& s);

struct ModelConfig {
    ModelVariant variant = ModelVariant::kAdaFortiTran;
    int n_layers = 1;   // transformer depth L (S/M/L/XL = 1/3/6/12)
    int n_heads = 4;    // attention heads M
    int d_enc = 32;     // encoder width
    int conv_c1 = 8, conv_c2 = 32, conv_c3 = 8;  // feature-enhancer channel plan
    GridConfig grid{};
    int64_t pilot_spacing = 3;  // descriptor only; shapes depend on n_pilots
    int64_t n_pilots = 80;

    static constexpr int64_t kPatchFreq = 3;
    static constexpr int64_t kPatchTime = 2;

    int64_t n_patches() const { return grid.cells() / (kPatchFreq * kPatchTime); }
    int64_t patch_dim() const { return kPatchFreq * kPatchTime; }
    bool adaptive() const { return variant == ModelVariant::kAdaFortiTran; }

    void validate() const;
    std::string canonical() const;  // stable text rendering, hashed for checkpoints
    uint64_t hash() const;          // FNV-1a over canonical()
};

// Fills a config's pilot fields from the grid and spacing.
ModelConfig with_pilot_layout(ModelConfig cfg, const GridConfig& grid, int64_t spacing);

// The model's grid <-> patch-sequence maps. A [N_t, N_f] frame splits into
// 3 (freq) x 2 (time) patches scanned frequency-major over the block grid,
// each flattened with frequency slow and time fast: [N_t, N_f] <-> [cells/6, 6].
// depatchify(patchify(x)) is the identity.
ad::NodeId patchify(ad::Tape& t, ad::NodeId frame, const GridConfig& grid);
ad::NodeId depatchify(ad::Tape& t, ad::NodeId seq, const GridConfig& grid);

// Four 3x3 convolutions (1 -> c1 -> c2 -> c3 -> 1), ReLU after all but the last.
struct ConvStackParams {
    std::array<Tensor, 4> w;  // [Co, Ci, 3, 3]
    std::array<Tensor, 4> b;  // [Co]
};

// Per-statistic scalar encoder: 1 -> 7 -> 42 -> cells/3, ReLU between layers.
struct ConditionEncoderParams {
    Tensor w1, b1;  // [7,1], [7]
    Tensor w2, b2;  // [42,7], [42]
    Tensor w3, b3;  // [cells/3, 42], [cells/3]
};

struct EncoderLayerParams {
    // one projection triple per head; weights [d_enc, d_enc/M], biases [d_enc/M]
    std::vector<Tensor> wq, bq, wk, bk, wv, bv;
    Tensor wo, bo;                  // [d_enc, d_enc], [d_enc]
    Tensor ln1_gain, ln1_shift;     // [d_enc]
    Tensor wt1, bt1;                // [d_enc, 2*d_enc], [2*d_enc]
    Tensor wt2, bt2;                // [2*d_enc, d_enc], [d_enc]
    Tensor ln2_gain, ln2_shift;     // [d_enc]
};

struct ModelParams {
    Tensor w1, b1;  // upsampler: [cells, |P|], [cells]
    ConvStackParams enhancer;
    std::array<ConditionEncoderParams, 3> condition;  // snr, doppler, delay spread
    Tensor w2, b2;  // patch embedding: [12 or 6, d_enc], [d_enc]
    Tensor m_pos;   // learnable positional encoding, [n_patches, d_enc]
    std::vector<EncoderLayerParams> layers;
    Tensor w3, b3;  // output projection: [d_enc, 6], [6]
    ConvStackParams reconstructor;
};

// Optional forward byproducts for inspection (copied out of the tape).
struct ForwardTrace {
    std::vector<Tensor> attention;  // [n_patches, n_patches], layer-major then head
    Tensor condition_codes;         // [n_patches, 6] (adaptive variant only)
    Tensor shallow_re;              // [N_t, N_f]
};

struct ForwardResult {
    ChannelFrame estimate;
    double mse = 0.0;  // vs. the record's truth: mean squared complex error
};

class Model {
public:
    Model() = default;
    explicit Model(const ModelConfig& cfg);  // shapes allocated, values zero

    // Glorot-uniform weights, zero biases, unit LayerNorm gains, small
    // Gaussian positional encodings; fully determined by (cfg, seed).
    static Model init(const ModelConfig& cfg, uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    ModelParams& params() { return p_; }
    const ModelParams& params() const { return p_; }

    int64_t count_parameters() const;

    // Stable-order enumeration of every tensor the variant defines.
    void for_each_param(const std::function<void(const std::string&, Tensor&)>& fn);
    void for_each_param(const std::function<void(const std::string&, const Tensor&)>& fn) const;

    void save(const std::string& path) const;
    static Model load(const std::string& path);
    // load + throw if the stored config hash differs from `expected`'s.
    static Model load_expected(const std::string& path, const ModelConfig& expected);

private:
    void allocate();

    ModelConfig cfg_;
    ModelParams p_;
};

// Binds one model's parameters onto a private tape once, then runs records
// against them. refresh() re-copies parameter values after an optimizer step.
// Not thread-safe; use one runner per thread.
class ModelRunner {
public:
    ModelRunner(const Model& model, bool with_grad);

    void refresh();

    // Forward only; estimate plus its mean squared complex error vs. truth.
    ForwardResult infer(const DataRecord& rec, ForwardTrace* trace = nullptr);

    // Forward + backward; adds parameter gradients into `grads` (aligned with
    // the model's for_each_param order) and returns the sample loss.
    double accumulate_gradients(const DataRecord& rec, std::vector<Tensor>& grads);

    // Loss only (used by finite-difference checks).
    double loss_of(const DataRecord& rec);

    int64_t n_params() const { return static_cast<int64_t>(param_ids_.size()); }

private:
    ad::NodeId forward_part(ad::NodeId pilot_vec, ad::NodeId codes, ForwardTrace* trace,
                            bool trace_shallow);
    ad::NodeId condition_codes(const ChannelStats& stats, ForwardTrace* trace);
    ad::NodeId conv_stack(ad::NodeId x, const std::array<int, 4>& w_slots,
                          const std::array<int, 4>& b_slots);
    ad::NodeId run_frame(const DataRecord& rec, ad::NodeId& est_re, ad::NodeId& est_im,
                         ForwardTrace* trace);

    const Model& model_;
    ad::Tape tape_;
    std::vector<ad::NodeId> param_ids_;
    std::vector<const Tensor*> param_tensors_;
    int64_t base_ = 0;
    bool with_grad_ = false;

    // indices into param_ids_ for each architectural slot, filled at bind time
    struct Slots {
        int w1 = -1, b1 = -1;
        std::array<int, 4> enh_w{}, enh_b{};
        std::array<std::array<int, 6>, 3> cond{};  // w1,b1,w2,b2,w3,b3 per statistic
        int w2 = -1, b2 = -1, m_pos = -1;
        struct Layer {
            std::vector<int> wq, bq, wk, bk, wv, bv;
            int wo = -1, bo = -1;
            int ln1_gain = -1, ln1_shift = -1;
            int wt1 = -1, bt1 = -1, wt2 = -1, bt2 = -1;
            int ln2_gain = -1, ln2_shift = -1;
        };
        std::vector<Layer> layers;
        int w3 = -1, b3 = -1;
        std::array<int, 4> rec_w{}, rec_b{};
    } slot_;
};

}  // namespace aft
