#include "oneshot/optimizer.hpp"

#include <cmath>

namespace oneshot {

void adam_step(std::span<Parameter> params, AdamState& state) {
  for (const auto& p : params) {
    if (p.grad.empty() || p.grad.shape() != p.value.shape()) {
      throw ContractError("adam_step: gradient of '" + p.name + "' was never populated");
    }
  }
  if (state.m.empty() && state.v.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.value.shape());
      state.v.emplace_back(p.value.shape());
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ContractError("adam_step: optimizer state tracks " + std::to_string(state.m.size()) +
                        " parameters, got " + std::to_string(params.size()));
  }

  const AdamHyper& h = state.hyper;
  state.t += 1;
  const double correction1 = 1.0 - std::pow(h.beta1, double(state.t));
  const double correction2 = 1.0 - std::pow(h.beta2, double(state.t));

  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = params[k];
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    if (m.shape() != p.value.shape() || v.shape() != p.value.shape()) {
      throw ContractError("adam_step: moment shape mismatch for '" + p.name + "'");
    }
    auto value = p.value.data();
    auto grad = p.grad.data();
    auto mm = m.data();
    auto vv = v.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      const double m_new = h.beta1 * double(mm[i]) + (1.0 - h.beta1) * g;
      const double v_new = h.beta2 * double(vv[i]) + (1.0 - h.beta2) * g * g;
      mm[i] = static_cast<float>(m_new);
      vv[i] = static_cast<float>(v_new);
      const double m_hat = m_new / correction1;
      const double v_hat = v_new / correction2;
      value[i] = static_cast<float>(double(value[i]) - h.lr * m_hat / (std::sqrt(v_hat) + h.eps));
    }
  }
}

}  // namespace oneshot
