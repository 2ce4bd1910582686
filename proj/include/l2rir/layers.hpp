#pragma once

#include <optional>
#include <string>
#include <vector>

#include "l2rir/ops.hpp"
#include "l2rir/random.hpp"

namespace l2rir::nn {

struct NamedParameter {
  std::string name;
  Var var;
  bool trainable = true;
};

// Ordered registry of named parameter leaves. Names are unique.
class ParameterSet {
 public:
  Var add(const std::string& name, Tensor init);

  const std::vector<NamedParameter>& items() const noexcept { return items_; }
  std::vector<NamedParameter>& items() noexcept { return items_; }
  std::optional<Var> find(const std::string& name) const;

  // Marks every parameter whose name starts with `prefix`.
  void set_trainable(const std::string& prefix, bool trainable);

  void zero_grad();
  std::size_t scalar_count() const;

 private:
  std::vector<NamedParameter> items_;
};

constexpr double kLeakySlope = 0.2;

struct Conv2d {
  Var weight;
  Var bias;
  int stride = 1;
  int pad = 0;

  int out_channels() const { return weight.shape().n; }
  int in_channels() const { return weight.shape().c; }
  Var operator()(const Var& x) const { return conv2d(x, weight, bias, stride, pad); }
};

// He-normal weights scaled by `gain`, zero bias, padding kernel/2.
Conv2d make_conv(ParameterSet& params, const std::string& name, int in, int out, int kernel,
                 int stride, Rng& rng, double gain = 1.0);

struct InstanceNorm {
  Var gamma;
  Var beta;
  double eps = 1e-5;

  Var operator()(const Var& x) const { return instance_norm(x, gamma, beta, eps); }
};

InstanceNorm make_norm(ParameterSet& params, const std::string& name, int channels);

// Two rounds of conv3x3 -> instance norm -> leaky ReLU.
struct ConvBlock {
  Conv2d conv1;
  InstanceNorm norm1;
  Conv2d conv2;
  InstanceNorm norm2;

  Var operator()(const Var& x) const;
};

ConvBlock make_block(ParameterSet& params, const std::string& name, int in, int out, Rng& rng);

// Adam with bias correction. Skips parameters flagged non-trainable.
class Adam {
 public:
  Adam(ParameterSet& params, double beta1, double beta2, double eps = 1e-8);
  void step(double lr);
  long steps() const noexcept { return t_; }

 private:
  ParameterSet& params_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace l2rir::nn
