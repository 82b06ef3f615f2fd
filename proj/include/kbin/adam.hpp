#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace kbin {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Flat-vector Adam with bias correction.
class Adam {
public:
    Adam(std::size_t size, double learning_rate, AdamConfig cfg = {})
        : lr_(learning_rate), cfg_(cfg), m_(size, 0.0), v_(size, 0.0) {}

    void step(std::span<double> params, std::span<const double> grads) {
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grads[i];
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m_[i] / c1;
            const double vhat = v_[i] / c2;
            params[i] -= lr_ * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }

private:
    double lr_;
    AdamConfig cfg_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

}  // namespace kbin
