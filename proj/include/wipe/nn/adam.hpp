#pragma once

#include "wipe/nn/tensor.hpp"

#include <vector>

namespace wipe {

template <class S>
struct AdamState {
    std::vector<Vector<S>> m;
    std::vector<Vector<S>> v;
    long step_count = 0;
    S lr = S(1e-3);
    S beta1 = S(0.9);
    S beta2 = S(0.999);
    S eps = S(1e-8);
};

template <class S>
AdamState<S> make_adam(const std::vector<VectorMap<S>>& params, S lr)
{
    AdamState<S> st;
    st.lr = lr;
    for (const auto& p : params) {
        st.m.push_back(Vector<S>::Zero(p.size()));
        st.v.push_back(Vector<S>::Zero(p.size()));
    }
    return st;
}

// Bias-corrected Adam, same update as torch.optim.Adam without weight decay.
template <class S>
void adam_step(std::vector<VectorMap<S>>& params, const std::vector<VectorMap<S>>& grads, AdamState<S>& st)
{
    require(params.size() == grads.size() && params.size() == st.m.size(), "adam_step: parameter count mismatch");
    ++st.step_count;
    const S c1 = S(1) - std::pow(st.beta1, static_cast<S>(st.step_count));
    const S c2 = S(1) - std::pow(st.beta2, static_cast<S>(st.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        require(params[i].size() == grads[i].size() && params[i].size() == st.m[i].size(),
                "adam_step: parameter shape mismatch");
        auto& m = st.m[i];
        auto& v = st.v[i];
        m = st.beta1 * m + (S(1) - st.beta1) * grads[i];
        v = st.beta2 * v + (S(1) - st.beta2) * grads[i].cwiseAbs2();
        params[i].array() -= st.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + st.eps);
    }
}

} // namespace wipe
