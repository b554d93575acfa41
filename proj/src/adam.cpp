#include "aft/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace aft {

void Adam::step(std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
                const std::vector<std::string>& names) {
    if (params.size() != grads.size())
        throw std::invalid_argument("adam: parameter and gradient counts differ");
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            m_[i] = Tensor(params[i]->shape);
            v_[i] = Tensor(params[i]->shape);
        }
    } else if (m_.size() != params.size()) {
        throw std::invalid_argument("adam: parameter count changed between steps");
    }

    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        if (!p.same_shape(g))
            throw std::invalid_argument("adam: gradient shape " + g.shape_str() +
                                        " does not match parameter " + p.shape_str());
        double gsum = 0.0;
        for (int64_t j = 0; j < g.numel(); ++j) gsum += g.data[j];
        if (!std::isfinite(gsum)) {
            for (int64_t j = 0; j < g.numel(); ++j) {
                if (!std::isfinite(g.data[j])) {
                    const std::string who = i < names.size() ? names[i] : std::to_string(i);
                    throw std::runtime_error("adam: non-finite gradient for parameter " + who);
                }
            }
        }
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (int64_t j = 0; j < p.numel(); ++j) {
            m.data[j] = cfg_.beta1 * m.data[j] + (1.0 - cfg_.beta1) * g.data[j];
            v.data[j] = cfg_.beta2 * v.data[j] + (1.0 - cfg_.beta2) * g.data[j] * g.data[j];
            const double mhat = m.data[j] / bc1;
            const double vhat = v.data[j] / bc2;
            p.data[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace aft
