#pragma once

#include <map>
#include <string>

#include "pathgen/error.hpp"
#include "pathgen/tape.hpp"
#include "pathgen/tensor.hpp"

namespace pathgen {

// Named trainable tensors with Adam state. std::map keeps iteration order
// sorted by name, which fixes both the optimizer update order and the
// checkpoint serialization order.
template <typename T>
struct ParamStore {
    struct Entry {
        Tensor<T> value;
        Tensor<T> grad;
        Tensor<T> m;
        Tensor<T> v;
        bool grad_set = false;
    };

    std::map<std::string, Entry> entries;
    long step = 0;

    Entry& add(const std::string& name, Tensor<T> init) {
        if (entries.count(name)) throw Error("param already registered: " + name);
        Entry e;
        e.grad = Tensor<T>(init.rows, init.cols);
        e.m = Tensor<T>(init.rows, init.cols);
        e.v = Tensor<T>(init.rows, init.cols);
        e.value = std::move(init);
        return entries.emplace(name, std::move(e)).first->second;
    }

    Entry& at(const std::string& name) {
        auto it = entries.find(name);
        if (it == entries.end()) throw Error("unknown param: " + name);
        return it->second;
    }
    const Entry& at(const std::string& name) const {
        auto it = entries.find(name);
        if (it == entries.end()) throw Error("unknown param: " + name);
        return it->second;
    }
    bool has(const std::string& name) const { return entries.count(name) != 0; }

    void zero_grad() {
        for (auto& [name, e] : entries) {
            e.grad.fill(T(0));
            e.grad_set = false;
        }
    }

    // A batch may legitimately leave a table untouched (a relation absent
    // from the sample, an evidence stream empty for every choice). Declare
    // those grads zero so a dense optimizer step can proceed.
    void default_missing_grads_to_zero() {
        for (auto& [name, e] : entries) e.grad_set = true;
    }

    size_t param_count() const {
        size_t n = 0;
        for (auto& [name, e] : entries) n += e.value.size();
        return n;
    }

    template <typename U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        out.step = step;
        for (auto& [name, e] : entries) out.add(name, e.value.template cast<U>());
        return out;
    }

    // Values only; optimizer state is reset.
    ParamStore snapshot_values() const {
        ParamStore out;
        for (auto& [name, e] : entries) out.add(name, e.value);
        return out;
    }

    void load_values(const ParamStore& src) {
        for (auto& [name, e] : entries) {
            const Entry& s = src.at(name);
            if (!e.value.same_shape(s.value)) throw Error("param shape mismatch: " + name);
            e.value = s.value;
        }
    }
};

// Binds store entries as tape leaves on demand and pulls their gradients
// back into the store. One instance per tape. With trainable=false the
// leaves carry no gradient slots (frozen inference forward).
template <typename T>
class BoundParams {
   public:
    BoundParams(Tape<T>& tape, ParamStore<T>& store, bool trainable = true)
        : tape_(tape), store_(store), trainable_(trainable) {}

    typename Tape<T>::Handle operator[](const std::string& name) {
        auto it = handles_.find(name);
        if (it != handles_.end()) return it->second;
        auto& e = store_.at(name);
        auto h = tape_.leaf(e.value, trainable_);
        handles_.emplace(name, h);
        return h;
    }

    // Accumulate tape grads into the store, scaled (e.g. 1/batch for
    // gradient accumulation across per-example tapes).
    void pull_grads(double scale = 1.0) {
        if (!trainable_) throw Error("pull_grads on frozen parameters");
        for (auto& [name, h] : handles_) {
            auto& e = store_.at(name);
            const Tensor<T>& g = tape_.grad(h);
            for (size_t i = 0; i < g.v.size(); ++i)
                e.grad.v[i] += static_cast<T>(g.v[i] * scale);
            e.grad_set = true;
        }
    }

   private:
    Tape<T>& tape_;
    ParamStore<T>& store_;
    std::map<std::string, typename Tape<T>::Handle> handles_;
    bool trainable_ = true;
};

}  // namespace pathgen
