#include "l2rir/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include "l2rir/error.hpp"

namespace l2rir::fft {
namespace {

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int height, int width, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(height, width, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<Complex> a(static_cast<std::size_t>(height) * width), b(a.size());
    fftw_plan plan = fftw_plan_dft_2d(height, width, reinterpret_cast<fftw_complex*>(a.data()),
                                      reinterpret_cast<fftw_complex*>(b.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw Error(ErrorCode::kInternal, "FFTW plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void run(std::span<const Complex> in, std::span<Complex> out, int height, int width, int sign) {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  if (in.size() != n || out.size() != n) throw DimensionError("fft buffer size mismatch");
  fftw_plan plan = cache().get(height, width, sign);
  // new-array execute does not modify the input for out-of-place c2c plans
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Complex& v : out) v *= scale;
}

}  // namespace

void forward(std::span<const Complex> in, std::span<Complex> out, int height, int width) {
  run(in, out, height, width, FFTW_FORWARD);
}

void inverse(std::span<const Complex> in, std::span<Complex> out, int height, int width) {
  run(in, out, height, width, FFTW_BACKWARD);
}

int half_width(int width) noexcept { return width / 2 + 1; }

void rfft2(std::span<const double> in, std::span<Complex> half, int height, int width) {
  const int wh = half_width(width);
  const std::size_t n = static_cast<std::size_t>(height) * width;
  if (in.size() != n || half.size() != static_cast<std::size_t>(height) * wh) {
    throw DimensionError("rfft2 buffer size mismatch");
  }
  std::vector<Complex> a(in.begin(), in.end()), b(n);
  forward(a, b, height, width);
  for (int k = 0; k < height; ++k) {
    for (int l = 0; l < wh; ++l) half[k * wh + l] = b[k * width + l];
  }
}

void irfft2(std::span<const Complex> half, std::span<double> out, int height, int width) {
  const int wh = half_width(width);
  const std::size_t n = static_cast<std::size_t>(height) * width;
  if (out.size() != n || half.size() != static_cast<std::size_t>(height) * wh) {
    throw DimensionError("irfft2 buffer size mismatch");
  }
  std::vector<Complex> full(n), b(n);
  for (int k = 0; k < height; ++k) {
    for (int l = 0; l < width; ++l) {
      full[k * width + l] = l < wh ? half[k * wh + l]
                                   : std::conj(half[((height - k) % height) * wh + (width - l)]);
    }
  }
  inverse(full, b, height, width);
  for (std::size_t i = 0; i < n; ++i) out[i] = b[i].real();
}

}  // namespace l2rir::fft
