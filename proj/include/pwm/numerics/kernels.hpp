#pragma once

#include <cstddef>

// Dense inner loops shared by the autodiff ops and the inference paths.
//
// Every kernel exists twice: `reference::` is a plain scalar loop nest kept as
// the test oracle, and the unqualified version is the OpenMP (simd + threads)
// kernel used everywhere else. Work is split over independent output rows, so
// results do not depend on the thread count.
namespace pwm::kernels {

// y[b, o] = sum_i x[b, i] * w[o, i] + bias[o]     (bias may be null)
void affine_forward(const double* x, const double* w, const double* bias, double* y, std::size_t batch,
                    std::size_t in, std::size_t out);

// Accumulating backward of affine_forward. Any output pointer may be null.
//   dx[b, i] += sum_o dy[b, o] * w[o, i]
//   dw[o, i] += sum_b dy[b, o] * x[b, i]
//   dbias[o] += sum_b dy[b, o]
void affine_backward(const double* x, const double* w, const double* dy, double* dx, double* dw, double* dbias,
                     std::size_t batch, std::size_t in, std::size_t out);

// Gate nonlinearities of a GRU cell given the two pre-activations
// gx = x W_ih^T + b_ih and gh = h W_hh^T + b_hh, each [batch, 3H] in (r, z, n)
// order. Writes r, z, n and the new hidden state.
void gru_gates(const double* gx, const double* gh, const double* h, double* r, double* z, double* n,
               double* h_new, std::size_t batch, std::size_t hidden);

// Backward of gru_gates. Writes dgx, dgh ([batch, 3H]); accumulates into dh.
void gru_gates_backward(const double* gh, const double* h, const double* r, const double* z, const double* n,
                        const double* dh_new, double* dgx, double* dgh, double* dh, std::size_t batch,
                        std::size_t hidden);

namespace reference {

void affine_forward(const double* x, const double* w, const double* bias, double* y, std::size_t batch,
                    std::size_t in, std::size_t out);
void affine_backward(const double* x, const double* w, const double* dy, double* dx, double* dw, double* dbias,
                     std::size_t batch, std::size_t in, std::size_t out);
void gru_gates(const double* gx, const double* gh, const double* h, double* r, double* z, double* n,
               double* h_new, std::size_t batch, std::size_t hidden);

}  // namespace reference

// Number of threads the parallel kernels may use (1 when built without OpenMP).
int max_threads();

}  // namespace pwm::kernels
