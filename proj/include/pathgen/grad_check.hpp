#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "pathgen/params.hpp"
#include "pathgen/rng.hpp"

namespace pathgen {

struct GradCheckReport {
    double worst_rel_err = 0;
    std::string worst_param;
    int worst_index = -1;
    double analytic = 0;
    double numeric = 0;
    long checked = 0;
    bool ok(double tol) const { return worst_rel_err < tol; }
};

// Compares analytic gradients against central finite differences on a
// double-precision store. build_loss must populate store grads (zero_grad
// is called here first) and return the loss value.
inline GradCheckReport grad_check(
    ParamStore<double>& store,
    const std::function<double(ParamStore<double>&)>& build_loss,
    uint64_t seed, long samples_per_param, double eps = 1e-5) {
    store.zero_grad();
    build_loss(store);

    // Frozen copy of the analytic grads; the probe calls below overwrite them.
    std::map<std::string, std::vector<double>> analytic;
    for (auto& [name, e] : store.entries) analytic[name] = e.grad.v;

    GradCheckReport rep;
    Rng rng(seed);
    for (auto& [name, e] : store.entries) {
        long n = static_cast<long>(e.value.v.size());
        long take = std::min(samples_per_param, n);
        for (long s = 0; s < take; ++s) {
            size_t i = (take == n) ? static_cast<size_t>(s)
                                   : static_cast<size_t>(rng.uniform_int(static_cast<uint64_t>(n)));
            double keep = e.value.v[i];
            e.value.v[i] = keep + eps;
            store.zero_grad();
            double lp = build_loss(store);
            e.value.v[i] = keep - eps;
            store.zero_grad();
            double lm = build_loss(store);
            e.value.v[i] = keep;
            double num = (lp - lm) / (2 * eps);
            double ana = analytic[name][i];
            double rel = std::fabs(ana - num) /
                         std::max({std::fabs(ana), std::fabs(num), 1.0});
            ++rep.checked;
            if (rel > rep.worst_rel_err) {
                rep.worst_rel_err = rel;
                rep.worst_param = name;
                rep.worst_index = static_cast<int>(i);
                rep.analytic = ana;
                rep.numeric = num;
            }
        }
    }
    // Leave the analytic grads in place for callers that inspect them.
    for (auto& [name, e] : store.entries) e.grad.v = analytic[name];
    return rep;
}

}  // namespace pathgen
