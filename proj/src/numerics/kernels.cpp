#include "pwm/numerics/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pwm::kernels {

namespace {

// Below this many multiply-adds the fork/join costs more than it saves.
constexpr std::size_t kParallelWork = std::size_t{1} << 16;

inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
#pragma omp simd reduction(+ : s)
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline void affine_row(const double* __restrict xr, const double* __restrict w, const double* __restrict bias,
                       double* __restrict yr, std::size_t in, std::size_t out) {
  // short rows (network inputs) lose more to simd peeling than they gain
  if (in < 16) {
    for (std::size_t o = 0; o < out; ++o) {
      double s = bias ? bias[o] : 0.0;
      for (std::size_t i = 0; i < in; ++i) s += xr[i] * w[o * in + i];
      yr[o] = s;
    }
    return;
  }
  for (std::size_t o = 0; o < out; ++o) {
    const double s = dot(xr, w + o * in, in);
    yr[o] = bias ? s + bias[o] : s;
  }
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void affine_forward(const double* x, const double* w, const double* bias, double* y, std::size_t batch,
                    std::size_t in, std::size_t out) {
  const bool par = batch * in * out >= kParallelWork;
  const auto nb = static_cast<std::ptrdiff_t>(batch);
  const auto no = static_cast<std::ptrdiff_t>(out);
  if (batch >= 4) {
#pragma omp parallel for schedule(static) if (par)
    for (std::ptrdiff_t b = 0; b < nb; ++b) affine_row(x + b * in, w, bias, y + b * out, in, out);
  } else {
    // Few rows: split over output units instead.
    for (std::size_t b = 0; b < batch; ++b) {
      const double* xr = x + b * in;
      double* yr = y + b * out;
#pragma omp parallel for schedule(static) if (par)
      for (std::ptrdiff_t o = 0; o < no; ++o) {
        const double* wr = w + o * in;
        const double s = dot(xr, wr, in);
        yr[o] = bias ? s + bias[o] : s;
      }
    }
  }
}

void affine_backward(const double* x, const double* w, const double* dy, double* dx, double* dw, double* dbias,
                     std::size_t batch, std::size_t in, std::size_t out) {
  const bool par = batch * in * out >= kParallelWork;
  const auto nb = static_cast<std::ptrdiff_t>(batch);
  const auto no = static_cast<std::ptrdiff_t>(out);
  if (dx) {
#pragma omp parallel for schedule(static) if (par)
    for (std::ptrdiff_t b = 0; b < nb; ++b) {
      double* dxr = dx + b * in;
      const double* dyr = dy + b * out;
      for (std::size_t o = 0; o < out; ++o) {
        const double g = dyr[o];
        if (g == 0.0) continue;
        const double* wr = w + o * in;
#pragma omp simd
        for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wr[i];
      }
    }
  }
  if (dw || dbias) {
#pragma omp parallel for schedule(static) if (par)
    for (std::ptrdiff_t o = 0; o < no; ++o) {
      double* dwr = dw ? dw + o * in : nullptr;
      double db = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double g = dy[b * out + o];
        db += g;
        if (!dwr || g == 0.0) continue;
        const double* xr = x + b * in;
#pragma omp simd
        for (std::size_t i = 0; i < in; ++i) dwr[i] += g * xr[i];
      }
      if (dbias) dbias[o] += db;
    }
  }
}

void gru_gates(const double* gx, const double* gh, const double* h, double* r, double* z, double* n,
               double* h_new, std::size_t batch, std::size_t hidden) {
  const std::size_t g3 = 3 * hidden;
  const auto nb = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(static) if (batch * hidden >= kParallelWork / 8)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const double* gxr = gx + b * g3;
    const double* ghr = gh + b * g3;
    const double* hr = h + b * hidden;
    for (std::size_t j = 0; j < hidden; ++j) {
      const std::size_t k = b * hidden + j;
      const double rv = sigmoid(gxr[j] + ghr[j]);
      const double zv = sigmoid(gxr[hidden + j] + ghr[hidden + j]);
      const double nv = std::tanh(gxr[2 * hidden + j] + rv * ghr[2 * hidden + j]);
      r[k] = rv;
      z[k] = zv;
      n[k] = nv;
      h_new[k] = (1.0 - zv) * nv + zv * hr[j];
    }
  }
}

void gru_gates_backward(const double* gh, const double* h, const double* r, const double* z, const double* n,
                        const double* dh_new, double* dgx, double* dgh, double* dh, std::size_t batch,
                        std::size_t hidden) {
  const std::size_t g3 = 3 * hidden;
  const auto nb = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(static) if (batch * hidden >= kParallelWork / 8)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    for (std::size_t j = 0; j < hidden; ++j) {
      const std::size_t k = b * hidden + j;
      const double g = dh_new[k];
      const double rv = r[k], zv = z[k], nv = n[k];
      const double dn_pre = g * (1.0 - zv) * (1.0 - nv * nv);
      const double dz_pre = g * (h[k] - nv) * zv * (1.0 - zv);
      const double dr_pre = dn_pre * gh[b * g3 + 2 * hidden + j] * rv * (1.0 - rv);
      dgx[b * g3 + j] = dr_pre;
      dgx[b * g3 + hidden + j] = dz_pre;
      dgx[b * g3 + 2 * hidden + j] = dn_pre;
      dgh[b * g3 + j] = dr_pre;
      dgh[b * g3 + hidden + j] = dz_pre;
      dgh[b * g3 + 2 * hidden + j] = dn_pre * rv;
      dh[k] += g * zv;
    }
  }
}

namespace reference {

void affine_forward(const double* x, const double* w, const double* bias, double* y, std::size_t batch,
                    std::size_t in, std::size_t out) {
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < out; ++o) {
      double s = bias ? bias[o] : 0.0;
      for (std::size_t i = 0; i < in; ++i) s += x[b * in + i] * w[o * in + i];
      y[b * out + o] = s;
    }
}

void affine_backward(const double* x, const double* w, const double* dy, double* dx, double* dw, double* dbias,
                     std::size_t batch, std::size_t in, std::size_t out) {
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy[b * out + o];
      if (dbias) dbias[o] += g;
      for (std::size_t i = 0; i < in; ++i) {
        if (dx) dx[b * in + i] += g * w[o * in + i];
        if (dw) dw[o * in + i] += g * x[b * in + i];
      }
    }
}

void gru_gates(const double* gx, const double* gh, const double* h, double* r, double* z, double* n,
               double* h_new, std::size_t batch, std::size_t hidden) {
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t j = 0; j < hidden; ++j) {
      const std::size_t base = b * 3 * hidden;
      const std::size_t k = b * hidden + j;
      r[k] = 1.0 / (1.0 + std::exp(-(gx[base + j] + gh[base + j])));
      z[k] = 1.0 / (1.0 + std::exp(-(gx[base + hidden + j] + gh[base + hidden + j])));
      n[k] = std::tanh(gx[base + 2 * hidden + j] + r[k] * gh[base + 2 * hidden + j]);
      h_new[k] = (1.0 - z[k]) * n[k] + z[k] * h[k];
    }
}

}  // namespace reference

}  // namespace pwm::kernels
