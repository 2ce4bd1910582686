#include "l2rir/ops.hpp"

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <limits>

#include "l2rir/fft.hpp"

namespace l2rir::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

Node& input(Node& self, std::size_t i) { return *self.inputs[i]; }

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
  }
}

struct ConvGeometry {
  int cin, h, w, k, stride, pad, ho, wo;
  std::size_t rows() const { return static_cast<std::size_t>(cin) * k * k; }
  std::size_t cols() const { return static_cast<std::size_t>(ho) * wo; }
  bool pointwise() const { return k == 1 && stride == 1 && pad == 0; }
};

void im2col(const double* x, const ConvGeometry& g, double* col) {
  const std::size_t cols = g.cols();
  for (int ci = 0; ci < g.cin; ++ci) {
    const double* plane = x + static_cast<std::size_t>(ci) * g.h * g.w;
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        double* dst = col + ((static_cast<std::size_t>(ci) * g.k + ky) * g.k + kx) * cols;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          double* row = dst + static_cast<std::size_t>(oy) * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(row, row + g.wo, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            row[ox] = (ix >= 0 && ix < g.w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, const ConvGeometry& g, double* dx) {
  const std::size_t cols = g.cols();
  for (int ci = 0; ci < g.cin; ++ci) {
    double* plane = dx + static_cast<std::size_t>(ci) * g.h * g.w;
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const double* src = col + ((static_cast<std::size_t>(ci) * g.k + ky) * g.k + kx) * cols;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          const double* row = src + static_cast<std::size_t>(oy) * g.wo;
          double* dst = plane + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.w) dst[ix] += row[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  out += b.value();
  return Var::from_op(std::move(out), {a, b}, [](Node& self) {
    for (std::size_t i = 0; i < 2; ++i) {
      if (input(self, i).requires_grad) input(self, i).grad_buffer() += self.grad;
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  auto o = out.values();
  auto bv = b.value().values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return Var::from_op(std::move(out), {a, b}, [](Node& self) {
    if (input(self, 0).requires_grad) input(self, 0).grad_buffer() += self.grad;
    if (input(self, 1).requires_grad) {
      auto g = input(self, 1).grad_buffer().values();
      auto gy = self.grad.values();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= gy[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  auto o = out.values();
  auto av = a.value().values(), bv = b.value().values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] * bv[i];
  return Var::from_op(std::move(out), {a, b}, [](Node& self) {
    Node& na = input(self, 0);
    Node& nb = input(self, 1);
    auto gy = self.grad.values();
    if (na.requires_grad) {
      auto g = na.grad_buffer().values();
      auto bv = nb.value.values();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy[i] * bv[i];
    }
    if (nb.requires_grad) {
      auto g = nb.grad_buffer().values();
      auto av = na.value.values();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy[i] * av[i];
    }
  });
}

Var scale(const Var& a, double s) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= s;
  return Var::from_op(std::move(out), {a}, [s](Node& self) {
    auto g = input(self, 0).grad_buffer().values();
    auto gy = self.grad.values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * gy[i];
  });
}

Var leaky_relu(const Var& x, double slope) {
  Tensor out = x.value();
  for (double& v : out.values()) v = v > 0.0 ? v : slope * v;
  return Var::from_op(std::move(out), {x}, [slope](Node& self) {
    Node& nx = input(self, 0);
    auto g = nx.grad_buffer().values();
    auto xv = nx.value.values();
    auto gy = self.grad.values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += xv[i] > 0.0 ? gy[i] : slope * gy[i];
  });
}

Var clamp(const Var& x, double lo, double hi) {
  Tensor out = x.value();
  for (double& v : out.values()) v = v < lo ? lo : (v > hi ? hi : v);
  return Var::from_op(std::move(out), {x}, [lo, hi](Node& self) {
    Node& nx = input(self, 0);
    auto g = nx.grad_buffer().values();
    auto xv = nx.value.values();
    auto gy = self.grad.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] >= lo && xv[i] <= hi) g[i] += gy[i];
    }
  });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (ws.c != xs.c || ws.h != ws.w) {
    throw DimensionError("conv2d: weight " + ws.str() + " incompatible with input " + xs.str());
  }
  if (stride < 1 || pad < 0) throw InvalidArgumentError("conv2d: stride >= 1 and pad >= 0 required");
  const bool has_bias = bias.defined();
  if (has_bias && bias.shape() != Shape{1, ws.n, 1, 1}) {
    throw DimensionError("conv2d: bias shape " + bias.shape().str());
  }
  ConvGeometry g{xs.c, xs.h, xs.w, ws.h, stride, pad, 0, 0};
  g.ho = (xs.h + 2 * pad - g.k) / stride + 1;
  g.wo = (xs.w + 2 * pad - g.k) / stride + 1;
  if (g.ho < 1 || g.wo < 1) throw DimensionError("conv2d: input " + xs.str() + " too small");

  const int cout = ws.n;
  Tensor out(Shape{xs.n, cout, g.ho, g.wo});
  ConstMatMap wm(weight.value().data(), cout, static_cast<Eigen::Index>(g.rows()));
  std::vector<double> col(g.pointwise() ? 0 : g.rows() * g.cols());
  for (int n = 0; n < xs.n; ++n) {
    const double* colp = x.value().sample(n);
    if (!g.pointwise()) {
      im2col(x.value().sample(n), g, col.data());
      colp = col.data();
    }
    ConstMatMap cm(colp, static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));
    MatMap om(out.sample(n), cout, static_cast<Eigen::Index>(g.cols()));
    om.noalias() = wm * cm;
    if (has_bias) {
      const double* b = bias.value().data();
      for (int co = 0; co < cout; ++co) om.row(co).array() += b[co];
    }
  }

  std::vector<Var> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return Var::from_op(std::move(out), std::move(inputs), [g, cout, has_bias](Node& self) {
    Node& nx = input(self, 0);
    Node& nw = input(self, 1);
    const int batch = nx.value.shape().n;
    const auto rows = static_cast<Eigen::Index>(g.rows());
    const auto cols = static_cast<Eigen::Index>(g.cols());
    ConstMatMap wm(nw.value.data(), cout, rows);
    std::vector<double> col(g.pointwise() ? 0 : g.rows() * g.cols());
    std::vector<double> dcol(g.pointwise() ? 0 : g.rows() * g.cols());
    for (int n = 0; n < batch; ++n) {
      ConstMatMap gy(self.grad.sample(n), cout, cols);
      if (nw.requires_grad) {
        const double* colp = nx.value.sample(n);
        if (!g.pointwise()) {
          im2col(nx.value.sample(n), g, col.data());
          colp = col.data();
        }
        ConstMatMap cm(colp, rows, cols);
        MatMap dw(nw.grad_buffer().data(), cout, rows);
        dw.noalias() += gy * cm.transpose();
      }
      if (has_bias && input(self, 2).requires_grad) {
        double* db = input(self, 2).grad_buffer().data();
        // Plain loop: Eigen's vectorized redux order depends on pointer alignment.
        const double* gp = self.grad.sample(n);
        for (int co = 0; co < cout; ++co) {
          double s = 0.0;
          for (Eigen::Index j = 0; j < cols; ++j) s += gp[co * cols + j];
          db[co] += s;
        }
      }
      if (nx.requires_grad) {
        if (g.pointwise()) {
          MatMap dx(nx.grad_buffer().sample(n), rows, cols);
          dx.noalias() += wm.transpose() * gy;
        } else {
          MatMap dc(dcol.data(), rows, cols);
          dc.noalias() = wm.transpose() * gy;
          col2im_add(dcol.data(), g, nx.grad_buffer().sample(n));
        }
      }
    }
  });
}

Var instance_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Shape& s = x.shape();
  if (gamma.shape() != Shape{1, s.c, 1, 1} || beta.shape() != Shape{1, s.c, 1, 1}) {
    throw DimensionError("instance_norm: affine parameters must be [1," + std::to_string(s.c) + ",1,1]");
  }
  const std::size_t hw = s.plane_size();
  Tensor out(s);
  Tensor xhat(s);
  std::vector<double> inv_std(static_cast<std::size_t>(s.n) * s.c);
  const double* gv = gamma.value().data();
  const double* bv = beta.value().data();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t off = (static_cast<std::size_t>(n) * s.c + c) * hw;
      const double* xp = x.value().data() + off;
      double m = 0.0;
      for (std::size_t i = 0; i < hw; ++i) m += xp[i];
      m /= static_cast<double>(hw);
      double var = 0.0;
      for (std::size_t i = 0; i < hw; ++i) var += (xp[i] - m) * (xp[i] - m);
      var /= static_cast<double>(hw);
      const double inv = 1.0 / std::sqrt(var + eps);
      inv_std[static_cast<std::size_t>(n) * s.c + c] = inv;
      double* hp = xhat.data() + off;
      double* op = out.data() + off;
      for (std::size_t i = 0; i < hw; ++i) {
        hp[i] = (xp[i] - m) * inv;
        op[i] = gv[c] * hp[i] + bv[c];
      }
    }
  }
  return Var::from_op(
      std::move(out), {x, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        Node& nx = input(self, 0);
        Node& ng = input(self, 1);
        Node& nb = input(self, 2);
        const Shape& s = nx.value.shape();
        const std::size_t hw = s.plane_size();
        const double* gv = ng.value.data();
        for (int n = 0; n < s.n; ++n) {
          for (int c = 0; c < s.c; ++c) {
            const std::size_t off = (static_cast<std::size_t>(n) * s.c + c) * hw;
            const double* gy = self.grad.data() + off;
            const double* hp = xhat.data() + off;
            double sum_g = 0.0, sum_gh = 0.0;
            for (std::size_t i = 0; i < hw; ++i) {
              sum_g += gy[i];
              sum_gh += gy[i] * hp[i];
            }
            if (ng.requires_grad) ng.grad_buffer().data()[c] += sum_gh;
            if (nb.requires_grad) nb.grad_buffer().data()[c] += sum_g;
            if (nx.requires_grad) {
              const double inv = inv_std[static_cast<std::size_t>(n) * s.c + c];
              const double mean_g = sum_g / static_cast<double>(hw);
              const double mean_gh = sum_gh / static_cast<double>(hw);
              double* dx = nx.grad_buffer().data() + off;
              for (std::size_t i = 0; i < hw; ++i) {
                dx[i] += gv[c] * inv * (gy[i] - mean_g - hp[i] * mean_gh);
              }
            }
          }
        }
      });
}

Var concat_channels(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidArgumentError("concat_channels: no inputs");
  const Shape& s0 = parts.front().shape();
  int total = 0;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    if (s.n != s0.n || s.h != s0.h || s.w != s0.w) {
      throw DimensionError("concat_channels: " + s.str() + " vs " + s0.str());
    }
    total += s.c;
  }
  Tensor out(Shape{s0.n, total, s0.h, s0.w});
  const std::size_t hw = s0.plane_size();
  for (int n = 0; n < s0.n; ++n) {
    double* dst = out.sample(n);
    for (const Var& p : parts) {
      const double* src = p.value().sample(n);
      std::copy(src, src + p.shape().c * hw, dst);
      dst += p.shape().c * hw;
    }
  }
  return Var::from_op(std::move(out), parts, [](Node& self) {
    const Shape& s = self.value.shape();
    const std::size_t hw = s.plane_size();
    for (int n = 0; n < s.n; ++n) {
      const double* src = self.grad.sample(n);
      for (auto& in : self.inputs) {
        const std::size_t len = in->value.shape().c * hw;
        if (in->requires_grad) {
          double* dst = in->grad_buffer().sample(n);
          for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
        }
        src += len;
      }
    }
  });
}

Var slice_channels(const Var& x, int begin, int count) {
  const Shape& s = x.shape();
  if (begin < 0 || count < 1 || begin + count > s.c) {
    throw DimensionError("slice_channels: range out of bounds for " + s.str());
  }
  const std::size_t hw = s.plane_size();
  Tensor out(Shape{s.n, count, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    const double* src = x.value().sample(n) + begin * hw;
    std::copy(src, src + count * hw, out.sample(n));
  }
  return Var::from_op(std::move(out), {x}, [begin, count](Node& self) {
    Node& nx = input(self, 0);
    const Shape& s = nx.value.shape();
    const std::size_t hw = s.plane_size();
    for (int n = 0; n < s.n; ++n) {
      double* dst = nx.grad_buffer().sample(n) + begin * hw;
      const double* src = self.grad.sample(n);
      for (std::size_t i = 0; i < count * hw; ++i) dst[i] += src[i];
    }
  });
}

Var concat_batch(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidArgumentError("concat_batch: no inputs");
  const Shape& s0 = parts.front().shape();
  int total = 0;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    if (s.c != s0.c || s.h != s0.h || s.w != s0.w) {
      throw DimensionError("concat_batch: " + s.str() + " vs " + s0.str());
    }
    total += s.n;
  }
  Tensor out(Shape{total, s0.c, s0.h, s0.w});
  double* dst = out.data();
  for (const Var& p : parts) dst = std::copy(p.value().data(), p.value().data() + p.value().numel(), dst);
  return Var::from_op(std::move(out), parts, [](Node& self) {
    const double* src = self.grad.data();
    for (auto& in : self.inputs) {
      const std::size_t len = in->value.numel();
      if (in->requires_grad) {
        double* g = in->grad_buffer().data();
        for (std::size_t i = 0; i < len; ++i) g[i] += src[i];
      }
      src += len;
    }
  });
}

Var slice_batch(const Var& x, int begin, int count) {
  const Shape& s = x.shape();
  if (begin < 0 || count < 1 || begin + count > s.n) {
    throw DimensionError("slice_batch: range out of bounds for " + s.str());
  }
  Tensor out(Shape{count, s.c, s.h, s.w});
  std::copy(x.value().sample(begin), x.value().sample(begin) + out.numel(), out.data());
  return Var::from_op(std::move(out), {x}, [begin](Node& self) {
    double* g = input(self, 0).grad_buffer().sample(begin);
    const double* gy = self.grad.data();
    for (std::size_t i = 0; i < self.grad.numel(); ++i) g[i] += gy[i];
  });
}

Var upsample_nearest2x(const Var& x) {
  const Shape& s = x.shape();
  Tensor out(Shape{s.n, s.c, 2 * s.h, 2 * s.w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < 2 * s.h; ++y) {
        for (int xx = 0; xx < 2 * s.w; ++xx) out.at(n, c, y, xx) = x.value().at(n, c, y / 2, xx / 2);
      }
    }
  }
  return Var::from_op(std::move(out), {x}, [](Node& self) {
    Node& nx = input(self, 0);
    Tensor& g = nx.grad_buffer();
    const Shape& s = self.value.shape();
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        for (int y = 0; y < s.h; ++y) {
          for (int xx = 0; xx < s.w; ++xx) g.at(n, c, y / 2, xx / 2) += self.grad.at(n, c, y, xx);
        }
      }
    }
  });
}

Var max_pool2x2(const Var& x) {
  const Shape& s = x.shape();
  if (s.h < 2 || s.w < 2) throw DimensionError("max_pool2x2: input " + s.str() + " too small");
  const Shape os{s.n, s.c, s.h / 2, s.w / 2};
  Tensor out(os);
  std::vector<std::size_t> argmax(os.numel());
  std::size_t k = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < os.h; ++y) {
        for (int xx = 0; xx < os.w; ++xx, ++k) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_i = 0;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t i = ((static_cast<std::size_t>(n) * s.c + c) * s.h + 2 * y + dy) * s.w + 2 * xx + dx;
              if (x.value().data()[i] > best) {
                best = x.value().data()[i];
                best_i = i;
              }
            }
          }
          out.data()[k] = best;
          argmax[k] = best_i;
        }
      }
    }
  }
  return Var::from_op(std::move(out), {x}, [argmax = std::move(argmax)](Node& self) {
    double* g = input(self, 0).grad_buffer().data();
    const double* gy = self.grad.data();
    for (std::size_t k = 0; k < argmax.size(); ++k) g[argmax[k]] += gy[k];
  });
}

Var global_avg_pool(const Var& x) {
  const Shape& s = x.shape();
  const std::size_t hw = s.plane_size();
  Tensor out(Shape{s.n, s.c, 1, 1});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* p = x.value().data() + (static_cast<std::size_t>(n) * s.c + c) * hw;
      double sum = 0.0;
      for (std::size_t i = 0; i < hw; ++i) sum += p[i];
      out.at(n, c, 0, 0) = sum / static_cast<double>(hw);
    }
  }
  return Var::from_op(std::move(out), {x}, [](Node& self) {
    Node& nx = input(self, 0);
    const Shape& s = nx.value.shape();
    const std::size_t hw = s.plane_size();
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        const double g = self.grad.at(n, c, 0, 0) / static_cast<double>(hw);
        double* p = nx.grad_buffer().data() + (static_cast<std::size_t>(n) * s.c + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) p[i] += g;
      }
    }
  });
}

Var rfft2(const Var& x) {
  const Shape& s = x.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) throw DimensionError("rfft2: spatial dims must be even, got " + s.str());
  const int wh = fft::half_width(s.w);
  const std::size_t half = static_cast<std::size_t>(s.h) * wh;
  Tensor out(Shape{s.n, 2 * s.c, s.h, wh});
  std::vector<fft::Complex> spec(half);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* plane = x.value().data() + (static_cast<std::size_t>(n) * s.c + c) * s.plane_size();
      fft::rfft2({plane, s.plane_size()}, spec, s.h, s.w);
      double* re = out.data() + (static_cast<std::size_t>(n) * 2 * s.c + c) * half;
      double* im = out.data() + (static_cast<std::size_t>(n) * 2 * s.c + s.c + c) * half;
      for (std::size_t i = 0; i < half; ++i) {
        re[i] = spec[i].real();
        im[i] = spec[i].imag();
      }
    }
  }
  return Var::from_op(std::move(out), {x}, [](Node& self) {
    // Adjoint: real part of the unitary inverse of the zero-extended half spectrum.
    Node& nx = input(self, 0);
    const Shape& s = nx.value.shape();
    const int wh = fft::half_width(s.w);
    const std::size_t half = static_cast<std::size_t>(s.h) * wh;
    std::vector<fft::Complex> full(s.plane_size()), back(s.plane_size());
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        const double* gre = self.grad.data() + (static_cast<std::size_t>(n) * 2 * s.c + c) * half;
        const double* gim = self.grad.data() + (static_cast<std::size_t>(n) * 2 * s.c + s.c + c) * half;
        std::fill(full.begin(), full.end(), fft::Complex{});
        for (int k = 0; k < s.h; ++k) {
          for (int l = 0; l < wh; ++l) full[k * s.w + l] = {gre[k * wh + l], gim[k * wh + l]};
        }
        fft::inverse(full, back, s.h, s.w);
        double* dx = nx.grad_buffer().data() + (static_cast<std::size_t>(n) * s.c + c) * s.plane_size();
        for (std::size_t i = 0; i < s.plane_size(); ++i) dx[i] += back[i].real();
      }
    }
  });
}

Var irfft2(const Var& spectrum, int width) {
  const Shape& s = spectrum.shape();
  if (s.c % 2 != 0) throw DimensionError("irfft2: channel count must be even (re/im stacks)");
  if (width % 2 != 0 || s.h % 2 != 0) throw DimensionError("irfft2: spatial dims must be even");
  if (s.w != fft::half_width(width)) throw DimensionError("irfft2: half-spectrum width mismatch");
  const int c_out = s.c / 2;
  const std::size_t half = s.plane_size();
  const std::size_t plane = static_cast<std::size_t>(s.h) * width;
  Tensor out(Shape{s.n, c_out, s.h, width});
  std::vector<fft::Complex> spec(half);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < c_out; ++c) {
      const double* re = spectrum.value().data() + (static_cast<std::size_t>(n) * s.c + c) * half;
      const double* im = spectrum.value().data() + (static_cast<std::size_t>(n) * s.c + c_out + c) * half;
      for (std::size_t i = 0; i < half; ++i) spec[i] = {re[i], im[i]};
      fft::irfft2(spec, {out.data() + (static_cast<std::size_t>(n) * c_out + c) * plane, plane}, s.h, width);
    }
  }
  return Var::from_op(std::move(out), {spectrum}, [width](Node& self) {
    // Adjoint: unitary forward transform of the real gradient, interior
    // columns doubled to account for their mirrored conjugates.
    Node& ns = input(self, 0);
    const Shape& s = ns.value.shape();
    const int c_out = s.c / 2;
    const int wh = s.w;
    const std::size_t half = s.plane_size();
    const std::size_t plane = static_cast<std::size_t>(s.h) * width;
    std::vector<fft::Complex> g(plane), spec(plane);
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < c_out; ++c) {
        const double* gy = self.grad.data() + (static_cast<std::size_t>(n) * c_out + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) g[i] = gy[i];
        fft::forward(g, spec, s.h, width);
        double* dre = ns.grad_buffer().data() + (static_cast<std::size_t>(n) * s.c + c) * half;
        double* dim = ns.grad_buffer().data() + (static_cast<std::size_t>(n) * s.c + c_out + c) * half;
        for (int k = 0; k < s.h; ++k) {
          for (int l = 0; l < wh; ++l) {
            const double m = (l == 0 || l == width / 2) ? 1.0 : 2.0;
            const fft::Complex v = spec[k * width + l];
            dre[k * wh + l] += m * v.real();
            dim[k * wh + l] += m * v.imag();
          }
        }
      }
    }
  });
}

Var mean_abs_diff(const Var& a, const Var& b) {
  require_same_shape(a, b, "mean_abs_diff");
  const std::size_t n = a.value().numel();
  auto av = a.value().values(), bv = b.value().values();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::abs(av[i] - bv[i]);
  return Var::from_op(Tensor::scalar(sum / static_cast<double>(n)), {a, b}, [n](Node& self) {
    Node& na = input(self, 0);
    Node& nb = input(self, 1);
    const double g = self.grad.item() / static_cast<double>(n);
    auto av = na.value.values(), bv = nb.value.values();
    for (std::size_t i = 0; i < n; ++i) {
      const double d = av[i] - bv[i];
      const double sg = d > 0.0 ? g : (d < 0.0 ? -g : 0.0);
      if (na.requires_grad) na.grad_buffer().values()[i] += sg;
      if (nb.requires_grad) nb.grad_buffer().values()[i] -= sg;
    }
  });
}

Var mean(const Var& x) {
  const std::size_t n = x.value().numel();
  double sum = 0.0;
  for (double v : x.value().values()) sum += v;
  return Var::from_op(Tensor::scalar(sum / static_cast<double>(n)), {x}, [n](Node& self) {
    const double g = self.grad.item() / static_cast<double>(n);
    for (double& v : input(self, 0).grad_buffer().values()) v += g;
  });
}

}  // namespace l2rir::nn
