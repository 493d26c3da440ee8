#include "clsr/adamw.hpp"

#include <cmath>

namespace clsr {

void AdamW::step(std::span<const ParamSlot> params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.value.size(), 0.0);
      v_.emplace_back(p.value.size(), 0.0);
    }
  }
  require(m_.size() == params.size(), ErrorKind::State, "optimizer parameter list changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i].grad.size() == params[i].value.size() && m_[i].size() == params[i].value.size(),
            ErrorKind::State, "parameter " + std::to_string(i) + " has no gradient of matching size");
  }

  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bias1 = 1.0 - std::pow(cfg_.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i].value;
    auto grad = params[i].grad;
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j];
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      const double p = value[j];
      value[j] = static_cast<float>(p - cfg_.lr * (m_hat / (std::sqrt(v_hat) + cfg_.epsilon)) -
                                    cfg_.lr * cfg_.weight_decay * p);
    }
  }
}

void AdamW::step(Encoder& model) {
  std::vector<ParamSlot> slots;
  for (auto* p : model.parameters()) {
    require(p->has_grad(), ErrorKind::State, "parameter " + p->name + " has no gradient");
    slots.push_back({std::span<float>(p->data(), p->size()),
                     std::span<const float>(p->grad.data(), static_cast<std::size_t>(p->grad.size()))});
  }
  step(slots);
}

}  // namespace clsr
