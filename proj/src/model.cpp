#include "aft/model.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <unordered_map>

#include "aft/io.hpp"
#include "aft/rng.hpp"

namespace aft {

namespace {

constexpr uint16_t kCheckpointVersion = 1;
constexpr uint64_t kStreamParam = 0x7061'7261ULL;  // parameter init stream

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Both storage orientations ([out,in] and [in,out]) see the same fan sum.
void glorot_fill(Tensor& t, Rng& rng) {
    const double lim = std::sqrt(6.0 / static_cast<double>(t.dim(0) + t.dim(1)));
    for (double& v : t.data) v = rng.uniform(-lim, lim);
}

void glorot_fill_conv(Tensor& t, Rng& rng) {
    const double fan = 9.0 * static_cast<double>(t.dim(0) + t.dim(1));
    const double lim = std::sqrt(6.0 / fan);
    for (double& v : t.data) v = rng.uniform(-lim, lim);
}

const char* kConditionName[3] = {"snr", "doppler", "delay"};

// Inputs to the condition encoders, scaled to ~[0,1] by the training ranges.
constexpr double kSnrScale = 25.0;
constexpr double kDopplerScale = 1000.0;
constexpr double kDelayScale = 300.0;

// Mirrors the canonical parameter enumeration for both constnesses.
template <typename Params, typename Fn>
void enumerate_params(const ModelConfig& cfg, Params& p, Fn&& fn) {
    fn("upsampler.w", p.w1);
    fn("upsampler.b", p.b1);
    if (cfg.variant == ModelVariant::kLinear) return;
    for (int i = 0; i < 4; ++i) {
        const std::string base = "enhancer.conv" + std::to_string(i);
        fn(base + ".w", p.enhancer.w[static_cast<size_t>(i)]);
        fn(base + ".b", p.enhancer.b[static_cast<size_t>(i)]);
    }
    if (cfg.adaptive()) {
        for (int i = 0; i < 3; ++i) {
            const std::string base = std::string("condition.") + kConditionName[i];
            auto& c = p.condition[static_cast<size_t>(i)];
            fn(base + ".w1", c.w1);
            fn(base + ".b1", c.b1);
            fn(base + ".w2", c.w2);
            fn(base + ".b2", c.b2);
            fn(base + ".w3", c.w3);
            fn(base + ".b3", c.b3);
        }
    }
    fn("embed.w", p.w2);
    fn("embed.b", p.b2);
    fn("pos", p.m_pos);
    for (int l = 0; l < cfg.n_layers; ++l) {
        const std::string lb = "layer" + std::to_string(l);
        auto& L = p.layers[static_cast<size_t>(l)];
        for (int h = 0; h < cfg.n_heads; ++h) {
            const std::string hb = lb + ".head" + std::to_string(h);
            const size_t hs = static_cast<size_t>(h);
            fn(hb + ".wq", L.wq[hs]);
            fn(hb + ".bq", L.bq[hs]);
            fn(hb + ".wk", L.wk[hs]);
            fn(hb + ".bk", L.bk[hs]);
            fn(hb + ".wv", L.wv[hs]);
            fn(hb + ".bv", L.bv[hs]);
        }
        fn(lb + ".proj.w", L.wo);
        fn(lb + ".proj.b", L.bo);
        fn(lb + ".ln1.gain", L.ln1_gain);
        fn(lb + ".ln1.shift", L.ln1_shift);
        fn(lb + ".mlp.w1", L.wt1);
        fn(lb + ".mlp.b1", L.bt1);
        fn(lb + ".mlp.w2", L.wt2);
        fn(lb + ".mlp.b2", L.bt2);
        fn(lb + ".ln2.gain", L.ln2_gain);
        fn(lb + ".ln2.shift", L.ln2_shift);
    }
    fn("output.w", p.w3);
    fn("output.b", p.b3);
    for (int i = 0; i < 4; ++i) {
        const std::string base = "reconstructor.conv" + std::to_string(i);
        fn(base + ".w", p.reconstructor.w[static_cast<size_t>(i)]);
        fn(base + ".b", p.reconstructor.b[static_cast<size_t>(i)]);
    }
}

}  // namespace

std::string to_string(ModelVariant v) {
    switch (v) {
        case ModelVariant::kAdaFortiTran: return "adafortitran";
        case ModelVariant::kFortiTran: return "fortitran";
        case ModelVariant::kLinear: return "linear";
    }
    throw std::invalid_argument("unknown model variant");
}

ModelVariant variant_from_string(const std::string& s) {
    if (s == "adafortitran") return ModelVariant::kAdaFortiTran;
    if (s == "fortitran") return ModelVariant::kFortiTran;
    if (s == "linear") return ModelVariant::kLinear;
    throw std::invalid_argument("unknown model variant: " + s +
                                " (expected adafortitran, fortitran, or linear)");
}

void ModelConfig::validate() const {
    grid.validate();
    if (variant != ModelVariant::kLinear) {
        if (n_layers < 1) throw std::invalid_argument("model needs at least one encoder layer");
        if (n_heads < 1) throw std::invalid_argument("n_heads must be >= 1");
        if (d_enc < 1) throw std::invalid_argument("d_enc must be >= 1");
        if (d_enc % n_heads != 0)
            throw std::invalid_argument("d_enc must be divisible by n_heads");
        if (conv_c1 < 1 || conv_c2 < 1 || conv_c3 < 1)
            throw std::invalid_argument("conv channel counts must be >= 1");
    }
    if (pilot_spacing < 1) throw std::invalid_argument("pilot spacing must be >= 1");
    if (n_pilots < 1) throw std::invalid_argument("n_pilots must be >= 1");
}

std::string ModelConfig::canonical() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "variant=%s;layers=%d;heads=%d;denc=%d;conv=%d,%d,%d;grid=%lldx%lld;"
                  "spacing_hz=%.17g;pilot_spacing=%lld;pilots=%lld",
                  to_string(variant).c_str(), n_layers, n_heads, d_enc, conv_c1, conv_c2,
                  conv_c3, static_cast<long long>(grid.n_subcarriers),
                  static_cast<long long>(grid.n_symbols), grid.subcarrier_spacing_hz,
                  static_cast<long long>(pilot_spacing), static_cast<long long>(n_pilots));
    return buf;
}

uint64_t ModelConfig::hash() const { return fnv1a(canonical()); }

ModelConfig with_pilot_layout(ModelConfig cfg, const GridConfig& grid, int64_t spacing) {
    if (spacing <= 0) throw std::invalid_argument("pilot spacing must be positive");
    cfg.grid = grid;
    cfg.pilot_spacing = spacing;
    const int64_t rows = (grid.n_subcarriers + spacing - 1) / spacing;
    cfg.n_pilots = rows * 2;  // two pilot-bearing symbols per frame
    return cfg;
}

ad::NodeId patchify(ad::Tape& t, ad::NodeId frame, const GridConfig& grid) {
    const int64_t nf = grid.n_subcarriers;
    const int64_t nt = grid.n_symbols;
    ad::NodeId blocks = t.reshape(frame, {nt / 2, 2, nf / 3, 3});
    return t.reshape(t.transpose(blocks, {0, 2, 3, 1}), {grid.cells() / 6, 6});
}

ad::NodeId depatchify(ad::Tape& t, ad::NodeId seq, const GridConfig& grid) {
    const int64_t nf = grid.n_subcarriers;
    const int64_t nt = grid.n_symbols;
    ad::NodeId unpacked = t.reshape(seq, {nt / 2, nf / 3, 3, 2});
    return t.reshape(t.transpose(unpacked, {0, 3, 1, 2}), {nt, nf});
}

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    allocate();
}

void Model::allocate() {
    const int64_t cells = cfg_.grid.cells();
    p_.w1 = Tensor({cells, cfg_.n_pilots});
    p_.b1 = Tensor({cells});
    if (cfg_.variant == ModelVariant::kLinear) return;

    const int64_t ch[5] = {1, cfg_.conv_c1, cfg_.conv_c2, cfg_.conv_c3, 1};
    for (int i = 0; i < 4; ++i) {
        p_.enhancer.w[static_cast<size_t>(i)] = Tensor({ch[i + 1], ch[i], 3, 3});
        p_.enhancer.b[static_cast<size_t>(i)] = Tensor({ch[i + 1]});
        p_.reconstructor.w[static_cast<size_t>(i)] = Tensor({ch[i + 1], ch[i], 3, 3});
        p_.reconstructor.b[static_cast<size_t>(i)] = Tensor({ch[i + 1]});
    }
    if (cfg_.adaptive()) {
        const int64_t third = cells / 3;
        for (auto& c : p_.condition) {
            c.w1 = Tensor({7, 1});
            c.b1 = Tensor({7});
            c.w2 = Tensor({42, 7});
            c.b2 = Tensor({42});
            c.w3 = Tensor({third, 42});
            c.b3 = Tensor({third});
        }
    }
    const int64_t d = cfg_.d_enc;
    const int64_t dh = d / cfg_.n_heads;
    p_.w2 = Tensor({cfg_.adaptive() ? 2 * cfg_.patch_dim() : cfg_.patch_dim(), d});
    p_.b2 = Tensor({d});
    p_.m_pos = Tensor({cfg_.n_patches(), d});
    p_.layers.resize(static_cast<size_t>(cfg_.n_layers));
    for (auto& L : p_.layers) {
        L.wq.resize(static_cast<size_t>(cfg_.n_heads));
        L.bq.resize(static_cast<size_t>(cfg_.n_heads));
        L.wk.resize(static_cast<size_t>(cfg_.n_heads));
        L.bk.resize(static_cast<size_t>(cfg_.n_heads));
        L.wv.resize(static_cast<size_t>(cfg_.n_heads));
        L.bv.resize(static_cast<size_t>(cfg_.n_heads));
        for (int h = 0; h < cfg_.n_heads; ++h) {
            const size_t hs = static_cast<size_t>(h);
            L.wq[hs] = Tensor({d, dh});
            L.bq[hs] = Tensor({dh});
            L.wk[hs] = Tensor({d, dh});
            L.bk[hs] = Tensor({dh});
            L.wv[hs] = Tensor({d, dh});
            L.bv[hs] = Tensor({dh});
        }
        L.wo = Tensor({d, d});
        L.bo = Tensor({d});
        L.ln1_gain = Tensor({d});
        L.ln1_shift = Tensor({d});
        L.wt1 = Tensor({d, 2 * d});
        L.bt1 = Tensor({2 * d});
        L.wt2 = Tensor({2 * d, d});
        L.bt2 = Tensor({d});
        L.ln2_gain = Tensor({d});
        L.ln2_shift = Tensor({d});
    }
    p_.w3 = Tensor({d, cfg_.patch_dim()});
    p_.b3 = Tensor({cfg_.patch_dim()});
}

Model Model::init(const ModelConfig& cfg, uint64_t seed) {
    Model m(cfg);
    Rng rng(derive_seed(seed, 0, kStreamParam));
    ModelParams& p = m.p_;
    glorot_fill(p.w1, rng);
    if (cfg.variant == ModelVariant::kLinear) return m;
    for (int i = 0; i < 4; ++i) glorot_fill_conv(p.enhancer.w[static_cast<size_t>(i)], rng);
    if (cfg.adaptive()) {
        for (auto& c : p.condition) {
            glorot_fill(c.w1, rng);
            glorot_fill(c.w2, rng);
            glorot_fill(c.w3, rng);
        }
    }
    glorot_fill(p.w2, rng);
    for (double& v : p.m_pos.data) v = 0.02 * rng.gaussian();
    for (auto& L : p.layers) {
        for (size_t h = 0; h < L.wq.size(); ++h) {
            glorot_fill(L.wq[h], rng);
            glorot_fill(L.wk[h], rng);
            glorot_fill(L.wv[h], rng);
        }
        glorot_fill(L.wo, rng);
        for (double& v : L.ln1_gain.data) v = 1.0;
        glorot_fill(L.wt1, rng);
        glorot_fill(L.wt2, rng);
        for (double& v : L.ln2_gain.data) v = 1.0;
    }
    glorot_fill(p.w3, rng);
    for (int i = 0; i < 4; ++i) glorot_fill_conv(p.reconstructor.w[static_cast<size_t>(i)], rng);
    return m;
}

int64_t Model::count_parameters() const {
    int64_t n = 0;
    for_each_param([&](const std::string&, const Tensor& t) { n += t.numel(); });
    return n;
}

void Model::for_each_param(const std::function<void(const std::string&, Tensor&)>& fn) {
    enumerate_params(cfg_, p_, fn);
}

void Model::for_each_param(
    const std::function<void(const std::string&, const Tensor&)>& fn) const {
    enumerate_params(cfg_, p_, fn);
}

void Model::save(const std::string& path) const {
    io::Writer w(path);
    w.magic("AFTC");
    w.u16(kCheckpointVersion);
    w.u64(cfg_.hash());
    w.u32(static_cast<uint32_t>(cfg_.variant));
    w.u32(static_cast<uint32_t>(cfg_.n_layers));
    w.u32(static_cast<uint32_t>(cfg_.n_heads));
    w.u32(static_cast<uint32_t>(cfg_.d_enc));
    w.u32(static_cast<uint32_t>(cfg_.conv_c1));
    w.u32(static_cast<uint32_t>(cfg_.conv_c2));
    w.u32(static_cast<uint32_t>(cfg_.conv_c3));
    w.u32(static_cast<uint32_t>(cfg_.grid.n_subcarriers));
    w.u32(static_cast<uint32_t>(cfg_.grid.n_symbols));
    w.f64(cfg_.grid.subcarrier_spacing_hz);
    w.u64(static_cast<uint64_t>(cfg_.pilot_spacing));
    w.u64(static_cast<uint64_t>(cfg_.n_pilots));

    uint64_t n_tensors = 0;
    for_each_param([&](const std::string&, const Tensor&) { ++n_tensors; });
    w.u64(n_tensors);
    for_each_param([&](const std::string& name, const Tensor& t) {
        w.u32(static_cast<uint32_t>(name.size()));
        w.bytes(name.data(), name.size());
        w.u32(static_cast<uint32_t>(t.ndim()));
        for (int64_t d : t.shape) w.u64(static_cast<uint64_t>(d));
        for (double v : t.data) w.f64(v);
    });
    w.close();
}

Model Model::load(const std::string& path) {
    io::Reader r(path);
    r.expect_magic("AFTC");
    const uint16_t version = r.u16();
    if (version != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version in " + path);
    const uint64_t stored_hash = r.u64();
    ModelConfig cfg;
    const uint32_t variant_raw = r.u32();
    if (variant_raw > 2) throw std::runtime_error("bad variant code in " + path);
    cfg.variant = static_cast<ModelVariant>(variant_raw);
    cfg.n_layers = static_cast<int>(r.u32());
    cfg.n_heads = static_cast<int>(r.u32());
    cfg.d_enc = static_cast<int>(r.u32());
    cfg.conv_c1 = static_cast<int>(r.u32());
    cfg.conv_c2 = static_cast<int>(r.u32());
    cfg.conv_c3 = static_cast<int>(r.u32());
    cfg.grid.n_subcarriers = r.u32();
    cfg.grid.n_symbols = r.u32();
    cfg.grid.subcarrier_spacing_hz = r.f64();
    cfg.pilot_spacing = static_cast<int64_t>(r.u64());
    cfg.n_pilots = static_cast<int64_t>(r.u64());
    if (cfg.hash() != stored_hash)
        throw std::runtime_error("checkpoint config hash mismatch (corrupt file?): " + path);

    Model m(cfg);
    std::unordered_map<std::string, Tensor*> table;
    m.for_each_param([&](const std::string& name, Tensor& t) { table[name] = &t; });

    const uint64_t n_tensors = r.u64();
    if (n_tensors != table.size())
        throw std::runtime_error("checkpoint tensor count does not match config: " + path);
    for (uint64_t i = 0; i < n_tensors; ++i) {
        const uint32_t len = r.u32();
        if (len > 4096) throw std::runtime_error("implausible tensor name length in " + path);
        std::string name(len, '\0');
        r.bytes(name.data(), len);
        auto it = table.find(name);
        if (it == table.end())
            throw std::runtime_error("unknown tensor '" + name + "' in " + path);
        Tensor& t = *it->second;
        const uint32_t ndim = r.u32();
        if (static_cast<int>(ndim) != t.ndim())
            throw std::runtime_error("rank mismatch for tensor '" + name + "' in " + path);
        for (uint32_t d = 0; d < ndim; ++d)
            if (static_cast<int64_t>(r.u64()) != t.dim(static_cast<int>(d)))
                throw std::runtime_error("shape mismatch for tensor '" + name + "' in " + path);
        for (double& v : t.data) v = r.f64();
    }
    return m;
}

Model Model::load_expected(const std::string& path, const ModelConfig& expected) {
    Model m = load(path);
    if (m.config().hash() != expected.hash())
        throw std::runtime_error("checkpoint " + path + " was built for config [" +
                                 m.config().canonical() + "], expected [" +
                                 expected.canonical() + "]");
    return m;
}

// ---------------------------------------------------------------------------

ModelRunner::ModelRunner(const Model& model, bool with_grad)
    : model_(model), with_grad_(with_grad) {
    std::unordered_map<const Tensor*, int> index;
    model_.for_each_param([&](const std::string&, const Tensor& t) {
        index[&t] = static_cast<int>(param_ids_.size());
        param_ids_.push_back(tape_.input(t, with_grad_));
        param_tensors_.push_back(&t);
    });
    base_ = tape_.size();

    const ModelConfig& cfg = model_.config();
    const ModelParams& p = model_.params();
    auto at = [&](const Tensor& t) {
        auto it = index.find(&t);
        if (it == index.end()) throw std::logic_error("parameter not enumerated");
        return it->second;
    };
    slot_.w1 = at(p.w1);
    slot_.b1 = at(p.b1);
    if (cfg.variant == ModelVariant::kLinear) return;
    for (size_t i = 0; i < 4; ++i) {
        slot_.enh_w[i] = at(p.enhancer.w[i]);
        slot_.enh_b[i] = at(p.enhancer.b[i]);
        slot_.rec_w[i] = at(p.reconstructor.w[i]);
        slot_.rec_b[i] = at(p.reconstructor.b[i]);
    }
    if (cfg.adaptive()) {
        for (size_t i = 0; i < 3; ++i) {
            const auto& c = p.condition[i];
            slot_.cond[i] = {at(c.w1), at(c.b1), at(c.w2), at(c.b2), at(c.w3), at(c.b3)};
        }
    }
    slot_.w2 = at(p.w2);
    slot_.b2 = at(p.b2);
    slot_.m_pos = at(p.m_pos);
    slot_.layers.resize(p.layers.size());
    for (size_t l = 0; l < p.layers.size(); ++l) {
        const auto& L = p.layers[l];
        auto& S = slot_.layers[l];
        for (size_t h = 0; h < L.wq.size(); ++h) {
            S.wq.push_back(at(L.wq[h]));
            S.bq.push_back(at(L.bq[h]));
            S.wk.push_back(at(L.wk[h]));
            S.bk.push_back(at(L.bk[h]));
            S.wv.push_back(at(L.wv[h]));
            S.bv.push_back(at(L.bv[h]));
        }
        S.wo = at(L.wo);
        S.bo = at(L.bo);
        S.ln1_gain = at(L.ln1_gain);
        S.ln1_shift = at(L.ln1_shift);
        S.wt1 = at(L.wt1);
        S.bt1 = at(L.bt1);
        S.wt2 = at(L.wt2);
        S.bt2 = at(L.bt2);
        S.ln2_gain = at(L.ln2_gain);
        S.ln2_shift = at(L.ln2_shift);
    }
    slot_.w3 = at(p.w3);
    slot_.b3 = at(p.b3);
}

void ModelRunner::refresh() {
    tape_.truncate(base_);
    for (size_t i = 0; i < param_ids_.size(); ++i)
        tape_.set_input(param_ids_[i], *param_tensors_[i]);
}

ad::NodeId ModelRunner::conv_stack(ad::NodeId x, const std::array<int, 4>& w_slots,
                                   const std::array<int, 4>& b_slots) {
    for (int i = 0; i < 4; ++i) {
        x = tape_.conv2d_3x3_same(x, param_ids_[static_cast<size_t>(w_slots[static_cast<size_t>(i)])],
                                  param_ids_[static_cast<size_t>(b_slots[static_cast<size_t>(i)])]);
        if (i < 3) x = tape_.relu(x);
    }
    return x;
}

ad::NodeId ModelRunner::condition_codes(const ChannelStats& stats, ForwardTrace* trace) {
    const ModelConfig& cfg = model_.config();
    const double x[3] = {stats.snr_db / kSnrScale, stats.doppler_hz / kDopplerScale,
                         stats.delay_spread_ns / kDelayScale};
    auto& t = tape_;
    std::vector<ad::NodeId> cols;
    for (size_t i = 0; i < 3; ++i) {
        const auto& c = slot_.cond[i];
        auto wid = [&](int k) { return param_ids_[static_cast<size_t>(c[static_cast<size_t>(k)])]; };
        ad::NodeId xi = t.input(Tensor({1, 1}, {x[i]}));
        ad::NodeId h = t.matmul(xi, t.transpose(wid(0)));              // [1,7]
        h = t.relu(t.add_broadcast_bias(h, wid(1)));
        h = t.matmul(h, t.transpose(wid(2)));                          // [1,42]
        h = t.relu(t.add_broadcast_bias(h, wid(3)));
        h = t.matmul(h, t.transpose(wid(4)));                          // [1,cells/3]
        h = t.add_broadcast_bias(h, wid(5));
        cols.push_back(t.reshape(h, {cfg.n_patches(), 2}));
    }
    ad::NodeId codes = t.concat_lastdim(cols);
    if (trace) trace->condition_codes = t.value(codes);
    return codes;
}

ad::NodeId ModelRunner::forward_part(ad::NodeId pilot_vec, ad::NodeId codes,
                                     ForwardTrace* trace, bool trace_shallow) {
    const ModelConfig& cfg = model_.config();
    const int64_t nf = cfg.grid.n_subcarriers;
    const int64_t nt = cfg.grid.n_symbols;
    const int64_t cells = cfg.grid.cells();
    const int64_t np = cfg.n_patches();
    auto& t = tape_;
    auto id = [&](int s) { return param_ids_[static_cast<size_t>(s)]; };

    ad::NodeId up = t.matmul(id(slot_.w1), pilot_vec);  // [cells, 1]
    up = t.add_broadcast_bias(t.reshape(up, {1, cells}), id(slot_.b1));
    ad::NodeId h_up = t.reshape(up, {nt, nf});
    if (cfg.variant == ModelVariant::kLinear) return h_up;

    ad::NodeId shallow_img = conv_stack(t.reshape(h_up, {1, nt, nf}), slot_.enh_w, slot_.enh_b);
    ad::NodeId shallow = t.reshape(shallow_img, {nt, nf});
    if (trace && trace_shallow) trace->shallow_re = t.value(shallow);

    ad::NodeId seq = patchify(t, shallow, cfg.grid);

    ad::NodeId emb_in = codes >= 0 ? t.concat_lastdim({seq, codes}) : seq;
    ad::NodeId emb = t.add_broadcast_bias(t.matmul(emb_in, id(slot_.w2)), id(slot_.b2));
    ad::NodeId h = t.add(emb, id(slot_.m_pos));

    const int64_t dh = cfg.d_enc / cfg.n_heads;
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (const auto& L : slot_.layers) {
        std::vector<ad::NodeId> heads;
        heads.reserve(L.wq.size());
        for (size_t hd = 0; hd < L.wq.size(); ++hd) {
            ad::NodeId q = t.add_broadcast_bias(t.matmul(h, id(L.wq[hd])), id(L.bq[hd]));
            ad::NodeId k = t.add_broadcast_bias(t.matmul(h, id(L.wk[hd])), id(L.bk[hd]));
            ad::NodeId v = t.add_broadcast_bias(t.matmul(h, id(L.wv[hd])), id(L.bv[hd]));
            ad::NodeId att = t.softmax_rows(t.scale(t.matmul(q, t.transpose(k)), att_scale));
            if (trace) trace->attention.push_back(t.value(att));
            heads.push_back(t.matmul(att, v));
        }
        ad::NodeId proj =
            t.add_broadcast_bias(t.matmul(t.merge_heads(heads), id(L.wo)), id(L.bo));
        ad::NodeId z =
            t.layer_norm_lastdim(t.add(proj, h), id(L.ln1_gain), id(L.ln1_shift));
        ad::NodeId m1 = t.add_broadcast_bias(t.matmul(z, id(L.wt1)), id(L.bt1));
        ad::NodeId m2 = t.add_broadcast_bias(t.matmul(t.gelu(m1), id(L.wt2)), id(L.bt2));
        h = t.layer_norm_lastdim(t.add(z, m2), id(L.ln2_gain), id(L.ln2_shift));
    }

    ad::NodeId out = t.add_broadcast_bias(t.matmul(h, id(slot_.w3)), id(slot_.b3));  // [np, 6]
    ad::NodeId deep = depatchify(t, out, cfg.grid);

    ad::NodeId fused = t.add(deep, shallow);
    ad::NodeId refined = conv_stack(t.reshape(fused, {1, nt, nf}), slot_.rec_w, slot_.rec_b);
    return t.reshape(refined, {nt, nf});
}

namespace {

// [N_t, N_f] row-major shares its linear index with the frequency-major
// frame vector, so parts copy through directly.
Tensor part_of(const std::vector<cplx>& v, bool real, const std::vector<int64_t>& shape) {
    Tensor t(shape);
    for (size_t i = 0; i < v.size(); ++i) t.data[i] = real ? v[i].real() : v[i].imag();
    return t;
}

}  // namespace

ad::NodeId ModelRunner::run_frame(const DataRecord& rec, ad::NodeId& est_re,
                                  ad::NodeId& est_im, ForwardTrace* trace) {
    const ModelConfig& cfg = model_.config();
    if (static_cast<int64_t>(rec.ls.size()) != cfg.n_pilots)
        throw std::invalid_argument("record has " + std::to_string(rec.ls.size()) +
                                    " pilots, model expects " + std::to_string(cfg.n_pilots));
    if (static_cast<int64_t>(rec.truth.size()) != cfg.grid.cells())
        throw std::invalid_argument("record frame size does not match the model grid");
    tape_.truncate(base_);
    ad::NodeId codes = -1;
    if (cfg.adaptive()) codes = condition_codes(rec.stats, trace);
    ad::NodeId in_re = tape_.input(part_of(rec.ls, true, {cfg.n_pilots, 1}));
    ad::NodeId in_im = tape_.input(part_of(rec.ls, false, {cfg.n_pilots, 1}));
    est_re = forward_part(in_re, codes, trace, true);
    est_im = forward_part(in_im, codes, trace, false);
    return codes;
}

ForwardResult ModelRunner::infer(const DataRecord& rec, ForwardTrace* trace) {
    ad::NodeId est_re = -1, est_im = -1;
    run_frame(rec, est_re, est_im, trace);
    const Tensor& re = tape_.value(est_re);
    const Tensor& im = tape_.value(est_im);
    ForwardResult out;
    out.estimate = ChannelFrame(model_.config().grid.n_subcarriers,
                                model_.config().grid.n_symbols);
    double acc = 0.0;
    for (size_t i = 0; i < rec.truth.size(); ++i) {
        out.estimate.values[i] = cplx{re.data[i], im.data[i]};
        const double dr = re.data[i] - rec.truth[i].real();
        const double di = im.data[i] - rec.truth[i].imag();
        acc += dr * dr + di * di;
    }
    out.mse = acc / static_cast<double>(rec.truth.size());
    tape_.truncate(base_);
    return out;
}

double ModelRunner::accumulate_gradients(const DataRecord& rec, std::vector<Tensor>& grads) {
    if (!with_grad_) throw std::logic_error("runner was built without gradients");
    if (grads.size() != param_ids_.size())
        throw std::invalid_argument("gradient accumulator count does not match parameters");
    ad::NodeId est_re = -1, est_im = -1;
    run_frame(rec, est_re, est_im, nullptr);
    const auto shape = std::vector<int64_t>{model_.config().grid.n_symbols,
                                            model_.config().grid.n_subcarriers};
    ad::NodeId truth_re = tape_.input(part_of(rec.truth, true, shape));
    ad::NodeId truth_im = tape_.input(part_of(rec.truth, false, shape));
    ad::NodeId loss = tape_.add(tape_.mse(est_re, truth_re), tape_.mse(est_im, truth_im));
    tape_.backward(loss);
    const double value = tape_.value(loss).data[0];
    for (size_t i = 0; i < param_ids_.size(); ++i) {
        if (!tape_.has_grad(param_ids_[i])) continue;
        const Tensor& g = tape_.grad(param_ids_[i]);
        kern::axpy(g.numel(), 1.0, g.ptr(), grads[i].ptr());
    }
    tape_.truncate(base_);
    return value;
}

double ModelRunner::loss_of(const DataRecord& rec) {
    ad::NodeId est_re = -1, est_im = -1;
    run_frame(rec, est_re, est_im, nullptr);
    const auto shape = std::vector<int64_t>{model_.config().grid.n_symbols,
                                            model_.config().grid.n_subcarriers};
    ad::NodeId truth_re = tape_.input(part_of(rec.truth, true, shape));
    ad::NodeId truth_im = tape_.input(part_of(rec.truth, false, shape));
    ad::NodeId loss = tape_.add(tape_.mse(est_re, truth_re), tape_.mse(est_im, truth_im));
    const double value = tape_.value(loss).data[0];
    tape_.truncate(base_);
    return value;
}

}  // namespace aft
