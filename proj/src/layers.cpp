#include "l2rir/layers.hpp"

#include <cmath>

namespace l2rir::nn {

Var ParameterSet::add(const std::string& name, Tensor init) {
  if (find(name)) throw InvalidArgumentError("duplicate parameter name '" + name + "'");
  Var v = Var::leaf(std::move(init), true);
  items_.push_back({name, v, true});
  return v;
}

std::optional<Var> ParameterSet::find(const std::string& name) const {
  for (const auto& p : items_) {
    if (p.name == name) return p.var;
  }
  return std::nullopt;
}

void ParameterSet::set_trainable(const std::string& prefix, bool trainable) {
  for (auto& p : items_) {
    if (p.name.starts_with(prefix)) p.trainable = trainable;
  }
}

void ParameterSet::zero_grad() {
  for (auto& p : items_) p.var.zero_grad();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.var.value().numel();
  return n;
}

Conv2d make_conv(ParameterSet& params, const std::string& name, int in, int out, int kernel,
                 int stride, Rng& rng, double gain) {
  Tensor w(Shape{out, in, kernel, kernel});
  const double stddev = gain * std::sqrt(2.0 / (in * kernel * kernel));
  for (double& v : w.values()) v = stddev * rng.normal();
  Conv2d conv;
  conv.weight = params.add(name + ".weight", std::move(w));
  conv.bias = params.add(name + ".bias", Tensor(Shape{1, out, 1, 1}, 0.0));
  conv.stride = stride;
  conv.pad = kernel / 2;
  return conv;
}

InstanceNorm make_norm(ParameterSet& params, const std::string& name, int channels) {
  InstanceNorm norm;
  norm.gamma = params.add(name + ".gamma", Tensor(Shape{1, channels, 1, 1}, 1.0));
  norm.beta = params.add(name + ".beta", Tensor(Shape{1, channels, 1, 1}, 0.0));
  return norm;
}

Var ConvBlock::operator()(const Var& x) const {
  Var y = leaky_relu(norm1(conv1(x)), kLeakySlope);
  return leaky_relu(norm2(conv2(y)), kLeakySlope);
}

ConvBlock make_block(ParameterSet& params, const std::string& name, int in, int out, Rng& rng) {
  ConvBlock b;
  b.conv1 = make_conv(params, name + ".conv1", in, out, 3, 1, rng);
  b.norm1 = make_norm(params, name + ".norm1", out);
  b.conv2 = make_conv(params, name + ".conv2", out, out, 3, 1, rng);
  b.norm2 = make_norm(params, name + ".norm2", out);
  return b;
}

Adam::Adam(ParameterSet& params, double beta1, double beta2, double eps)
    : params_(params), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_.items()) {
    m_.emplace_back(p.var.shape(), 0.0);
    v_.emplace_back(p.var.shape(), 0.0);
  }
}

void Adam::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto& items = params_.items();
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (!items[k].trainable) continue;
    const Tensor& grad = items[k].var.grad();
    if (grad.empty()) continue;
    auto w = items[k].var.mutable_value().values();
    auto g = grad.values();
    auto m = m_[k].values();
    auto v = v_[k].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

}  // namespace l2rir::nn
