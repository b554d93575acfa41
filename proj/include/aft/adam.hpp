// Adam optimizer over named dense tensors. Moment buffers are keyed by
// position in the parameter list, which must stay stable across steps.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aft/tensor.hpp"

namespace aft {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    // One update over parallel lists of parameters and gradients. `names` is
    // used only for error messages and may be empty.
    void step(std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
              const std::vector<std::string>& names = {});

    void set_lr(double lr) { cfg_.lr = lr; }
    double lr() const { return cfg_.lr; }
    int64_t steps_taken() const { return t_; }

private:
    AdamConfig cfg_;
    int64_t t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

}  // namespace aft
