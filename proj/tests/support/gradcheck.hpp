#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "l2rir/autograd.hpp"
#include "l2rir/random.hpp"

namespace l2rir::testing {

struct GradProbe {
  std::string label;
  nn::Var leaf;
  std::size_t index = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  int checked = 0;
  std::string worst;
};

inline double relative_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / scale;
}

// Compares the reverse-mode gradient of loss() against central differences
// at every probe. loss() must rebuild the graph from the current leaf values.
inline GradCheckResult check_gradients(const std::function<nn::Var()>& loss, std::vector<GradProbe> probes,
                                       double h = 1e-5) {
  for (auto& p : probes) p.leaf.zero_grad();
  nn::Var root = loss();
  nn::backward(root);
  std::vector<double> analytic;
  for (const auto& p : probes) {
    analytic.push_back(p.leaf.grad().numel() ? p.leaf.grad().data()[p.index] : 0.0);
  }
  GradCheckResult result;
  nn::NoGradGuard no_grad;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    double& v = probes[k].leaf.mutable_value().data()[probes[k].index];
    const double saved = v;
    v = saved + h;
    const double up = loss().value().item();
    v = saved - h;
    const double down = loss().value().item();
    v = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double err = relative_error(analytic[k], numeric);
    result.max_abs_error = std::max(result.max_abs_error, std::abs(analytic[k] - numeric));
    if (err >= result.max_rel_error) {
      result.max_rel_error = err;
      result.worst = probes[k].label + "[" + std::to_string(probes[k].index) + "] analytic " +
                     std::to_string(analytic[k]) + " numeric " + std::to_string(numeric);
    }
    ++result.checked;
  }
  return result;
}

// Random entries of the given leaves, one probe per draw.
inline std::vector<GradProbe> sample_probes(const std::vector<std::pair<std::string, nn::Var>>& leaves, int count,
                                            Rng& rng) {
  std::vector<GradProbe> probes;
  for (int i = 0; i < count; ++i) {
    const auto& [name, var] = leaves[static_cast<std::size_t>(i) % leaves.size()];
    const auto n = static_cast<std::int64_t>(var.value().numel());
    probes.push_back({name, var, static_cast<std::size_t>(rng.uniform_int(0, n - 1))});
  }
  return probes;
}

}  // namespace l2rir::testing
