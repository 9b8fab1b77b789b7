#include "gevbev/edl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gevbev/special_functions.hpp"

namespace gevbev {

void EdlBatch::validate() const {
  if (k < 2) throw std::invalid_argument("EDL batch needs K >= 2");
  if (alpha.size() != n * k || y.size() != n * k) {
    throw std::invalid_argument("EDL batch arrays must hold n*k entries");
  }
  if (!(a_max >= 1.0)) throw std::invalid_argument("A_max must be >= 1");
  for (std::size_t j = 0; j < n; ++j) {
    double row = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double yv = y[j * k + c];
      if (yv != 0.0 && yv != 1.0) throw std::invalid_argument("labels must be one-hot");
      row += yv;
      if (!(alpha[j * k + c] >= 1.0)) throw std::invalid_argument("alpha must be >= 1");
    }
    if (row != 1.0) throw std::invalid_argument("label rows must sum to 1");
  }
}

double annealing_coefficient(double epoch, double a_max) {
  return std::min(1.0, epoch / a_max);
}

double dirichlet_kl_to_uniform(std::span<const double> alpha) {
  double strength = 0.0;
  for (double a : alpha) {
    if (!(a > 0.0)) throw std::domain_error("Dirichlet parameters must be positive");
    strength += a;
  }
  const double kk = static_cast<double>(alpha.size());
  const double psi_s = digamma(strength);
  double kl = log_gamma(strength) - log_gamma(kk);
  for (double a : alpha) {
    kl -= log_gamma(a);
    kl += (a - 1.0) * (digamma(a) - psi_s);
  }
  return kl;
}

void dirichlet_kl_to_uniform_grad(std::span<const double> alpha, std::span<double> grad) {
  double strength = 0.0;
  for (double a : alpha) {
    if (!(a > 0.0)) throw std::domain_error("Dirichlet parameters must be positive");
    strength += a;
  }
  const double kk = static_cast<double>(alpha.size());
  // d/da_m = (a_m - 1) psi'(a_m) - (S - K) psi'(S)
  const double common = (strength - kk) * trigamma(strength);
  for (std::size_t m = 0; m < alpha.size(); ++m) {
    grad[m] = (alpha[m] - 1.0) * trigamma(alpha[m]) - common;
  }
}

RowLoss edl_row(std::span<const double> alpha, std::span<const double> y, double lambda_t,
                std::span<double> grad) {
  const std::size_t k = alpha.size();
  double strength = 0.0;
  for (double a : alpha) strength += a;

  RowLoss out;
  double sum_p2 = 0.0;
  double residual_dot_p = 0.0;  // sum_k (y_k - p_k) p_k
  constexpr std::size_t kStack = 8;
  double p_stack[kStack];
  std::vector<double> p_heap;
  double* p = p_stack;
  if (k > kStack) {
    p_heap.resize(k);
    p = p_heap.data();
  }
  for (std::size_t c = 0; c < k; ++c) {
    p[c] = alpha[c] / strength;
    const double r = y[c] - p[c];
    out.sq += r * r;
    sum_p2 += p[c] * p[c];
    residual_dot_p += r * p[c];
  }
  const double spread = 1.0 - sum_p2;  // sum_k p_k (1 - p_k)
  out.var = spread / (strength + 1.0);

  double a_tilde_stack[kStack];
  std::vector<double> a_tilde_heap;
  double* a_tilde = a_tilde_stack;
  if (k > kStack) {
    a_tilde_heap.resize(k);
    a_tilde = a_tilde_heap.data();
  }
  for (std::size_t c = 0; c < k; ++c) a_tilde[c] = alpha[c] * (1.0 - y[c]) + y[c];
  const std::span<const double> a_tilde_span(a_tilde, k);
  out.kl = dirichlet_kl_to_uniform(a_tilde_span);

  if (!grad.empty()) {
    double kl_grad_stack[kStack];
    std::vector<double> kl_grad_heap;
    double* kl_grad = kl_grad_stack;
    if (k > kStack) {
      kl_grad_heap.resize(k);
      kl_grad = kl_grad_heap.data();
    }
    dirichlet_kl_to_uniform_grad(a_tilde_span, std::span<double>(kl_grad, k));
    const double inv_s = 1.0 / strength;
    const double inv_s1 = 1.0 / (strength + 1.0);
    for (std::size_t m = 0; m < k; ++m) {
      // dp_k/da_m = (delta_km - p_k) / S
      const double d_sq = 2.0 * (residual_dot_p - (y[m] - p[m])) * inv_s;
      const double d_spread = -2.0 * (p[m] - sum_p2) * inv_s;
      const double d_var = d_spread * inv_s1 - spread * inv_s1 * inv_s1;
      const double d_kl = (1.0 - y[m]) * kl_grad[m];
      grad[m] = d_sq + d_var + lambda_t * d_kl;
    }
  }
  return out;
}

LossBreakdown edl_loss(const EdlBatch& batch, Reduction reduction) {
  batch.validate();
  LossBreakdown out;
  out.lambda_t = annealing_coefficient(batch.epoch, batch.a_max);
  const std::size_t k = batch.k;
  for (std::size_t j = 0; j < batch.n; ++j) {
    const RowLoss r = edl_row(std::span(batch.alpha).subspan(j * k, k),
                              std::span(batch.y).subspan(j * k, k), out.lambda_t, {});
    out.sq_term += r.sq;
    out.var_term += r.var;
    out.kl_term += r.kl;
  }
  if (reduction == Reduction::mean && batch.n > 0) {
    const double inv_n = 1.0 / static_cast<double>(batch.n);
    out.sq_term *= inv_n;
    out.var_term *= inv_n;
    out.kl_term *= inv_n;
  }
  out.total = out.sq_term + out.var_term + out.lambda_t * out.kl_term;
  return out;
}

std::vector<double> edl_grad(const EdlBatch& batch, Reduction reduction) {
  batch.validate();
  const double lambda_t = annealing_coefficient(batch.epoch, batch.a_max);
  const std::size_t k = batch.k;
  std::vector<double> grad(batch.n * k, 0.0);
  for (std::size_t j = 0; j < batch.n; ++j) {
    edl_row(std::span(batch.alpha).subspan(j * k, k), std::span(batch.y).subspan(j * k, k),
            lambda_t, std::span(grad).subspan(j * k, k));
  }
  if (reduction == Reduction::mean && batch.n > 0) {
    const double inv_n = 1.0 / static_cast<double>(batch.n);
    for (double& g : grad) g *= inv_n;
  }
  return grad;
}

}  // namespace gevbev
