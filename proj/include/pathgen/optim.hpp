#pragma once

#include <cmath>
#include <string>

#include "pathgen/error.hpp"
#include "pathgen/params.hpp"

namespace pathgen {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Linear warmup to base_lr over warmup_steps, then linear decay to zero at
// total_steps. step counts completed minibatches, 1-based at update time.
inline double lr_schedule(long step, double base_lr, long warmup_steps, long total_steps) {
    if (warmup_steps < 0 || total_steps <= warmup_steps)
        throw Error("lr_schedule: need 0 <= warmup < total");
    if (step < 0 || step > total_steps) throw Error("lr_schedule: step out of range");
    if (step < warmup_steps) return base_lr * static_cast<double>(step) / warmup_steps;
    return base_lr * static_cast<double>(total_steps - step) / (total_steps - warmup_steps);
}

// Scales all gradients so their joint L2 norm is at most max_norm.
template <typename T>
double clip_global_norm(ParamStore<T>& store, double max_norm) {
    double sq = 0;
    for (auto& [name, e] : store.entries)
        for (T g : e.grad.v) sq += static_cast<double>(g) * static_cast<double>(g);
    double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0) {
        double s = max_norm / norm;
        for (auto& [name, e] : store.entries)
            for (T& g : e.grad.v) g = static_cast<T>(g * s);
    }
    return norm;
}

// One Adam update with bias correction over every parameter in the store.
// Every entry must have received a gradient this step; a silent zero grad
// usually means a wiring bug, so it is an error instead.
template <typename T>
void adam_step(ParamStore<T>& store, const AdamConfig& cfg, double lr) {
    for (auto& [name, e] : store.entries)
        if (!e.grad_set) throw Error("adam_step: no gradient for param " + name);
    store.step += 1;
    double b1t = 1.0 - std::pow(cfg.beta1, static_cast<double>(store.step));
    double b2t = 1.0 - std::pow(cfg.beta2, static_cast<double>(store.step));
    for (auto& [name, e] : store.entries) {
        for (size_t i = 0; i < e.value.v.size(); ++i) {
            double g = e.grad.v[i];
            double m = cfg.beta1 * e.m.v[i] + (1.0 - cfg.beta1) * g;
            double v = cfg.beta2 * e.v.v[i] + (1.0 - cfg.beta2) * g * g;
            e.m.v[i] = static_cast<T>(m);
            e.v.v[i] = static_cast<T>(v);
            double mhat = m / b1t;
            double vhat = v / b2t;
            e.value.v[i] = static_cast<T>(e.value.v[i] - lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
    }
}

}  // namespace pathgen
