#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace oracle {

namespace {
double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }
}  // namespace

Vec affine(const Mat& w, const Vec& b, const Vec& x) {
  Vec y(w.size());
  for (std::size_t o = 0; o < w.size(); ++o) {
    double s = b[o];
    for (std::size_t i = 0; i < x.size(); ++i) s += w[o][i] * x[i];
    y[o] = s;
  }
  return y;
}

Vec gru(const Mat& w_ih, const Mat& w_hh, const Vec& b_ih, const Vec& b_hh, const Vec& x, const Vec& h) {
  const std::size_t hs = h.size();
  Vec gi = affine(w_ih, b_ih, x);
  Vec gh = affine(w_hh, b_hh, h);
  Vec out(hs);
  for (std::size_t j = 0; j < hs; ++j) {
    double r = sig(gi[j] + gh[j]);
    double z = sig(gi[hs + j] + gh[hs + j]);
    double n = std::tanh(gi[2 * hs + j] + r * gh[2 * hs + j]);
    out[j] = (1 - z) * n + z * h[j];
  }
  return out;
}

double kl_closed_form(const Vec& mean, const Vec& logvar) {
  double s = 0;
  for (std::size_t i = 0; i < mean.size(); ++i) s += std::exp(logvar[i]) + mean[i] * mean[i] - 1 - logvar[i];
  return 0.5 * s;
}

double kl_monte_carlo(const Vec& mean, const Vec& logvar, std::size_t samples, std::uint64_t seed) {
  // E_q[log q(x) - log p(x)]; the per-dimension sums share the ln(2 pi) term.
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd;
  double acc = 0;
  for (std::size_t k = 0; k < samples; ++k) {
    double lq = 0, lp = 0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double sd = std::exp(0.5 * logvar[i]);
      const double eps = nd(eng);
      const double x = mean[i] + sd * eps;
      lq += -0.5 * (logvar[i] + eps * eps);
      lp += -0.5 * x * x;
    }
    acc += lq - lp;
  }
  return acc / static_cast<double>(samples);
}

double gaussian_nll(const Vec& mean, const Vec& logvar, const Vec& target) {
  const double ln2pi = std::log(2 * M_PI);
  double s = 0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double d = target[i] - mean[i];
    s += logvar[i] + d * d / std::exp(logvar[i]) + ln2pi;
  }
  return 0.5 * s;
}

double adam_scalar(double param, const Vec& grads, double lr, double b1, double b2, double eps) {
  double m = 0, v = 0;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1];
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, double(t)));
    const double vh = v / (1 - std::pow(b2, double(t)));
    param -= lr * mh / (std::sqrt(vh) + eps);
  }
  return param;
}

Mat to_mat(const pwm::nn::Tensor& t) {
  Mat m(t.rows(), Vec(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t[r * t.cols() + c];
  return m;
}

Vec to_vec(const pwm::nn::Tensor& t) { return Vec(t.span().begin(), t.span().end()); }

pwm::nn::Tensor from_mat(const Mat& m) {
  std::vector<double> d;
  for (const auto& row : m) d.insert(d.end(), row.begin(), row.end());
  return pwm::nn::Tensor({m.size(), m[0].size()}, std::move(d));
}

GradCheck finite_difference_check(pwm::nn::ParameterSet& params, const std::function<double()>& loss,
                                  std::size_t probes, std::uint64_t seed, double eps, double floor) {
  std::vector<std::pair<std::string, std::size_t>> all;
  for (auto& [name, e] : params.entries())
    for (std::size_t i = 0; i < e.value.size(); ++i) all.emplace_back(name, i);
  std::mt19937_64 eng(seed);
  GradCheck out;
  for (std::size_t p = 0; p < probes; ++p) {
    const auto& [name, idx] = all[std::uniform_int_distribution<std::size_t>(0, all.size() - 1)(eng)];
    double& w = params.value(name)[idx];
    const double orig = w;
    w = orig + eps;
    const double up = loss();
    w = orig - eps;
    const double down = loss();
    w = orig;
    const double numeric = (up - down) / (2 * eps);
    const double analytic = params.grad(name)[idx];
    const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
    ++out.probes;
    if (rel > out.max_rel_error) {
      out.max_rel_error = rel;
      out.worst_analytic = analytic;
      out.worst_numeric = numeric;
    }
  }
  return out;
}

}  // namespace oracle
