#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gevbev {

/// Row-major N x K Dirichlet parameters and one-hot labels for the evidential loss.
struct EdlBatch {
  std::size_t n{0};
  std::size_t k{2};
  std::vector<double> alpha;  ///< n*k, every entry >= 1
  std::vector<double> y;      ///< n*k one-hot rows
  double epoch{0.0};          ///< A_epoch
  double a_max{10.0};         ///< A_max

  void validate() const;
};

struct LossBreakdown {
  double sq_term{0.0};
  double var_term{0.0};
  double kl_term{0.0};
  double lambda_t{0.0};
  double total{0.0};
};

enum class Reduction { sum, mean };

/// KL[Dir(alpha) || Dir(1)] in closed form. Throws std::domain_error on alpha <= 0.
double dirichlet_kl_to_uniform(std::span<const double> alpha);

/// Gradient of dirichlet_kl_to_uniform with respect to alpha.
void dirichlet_kl_to_uniform_grad(std::span<const double> alpha, std::span<double> grad);

/// min(1, epoch / a_max)
double annealing_coefficient(double epoch, double a_max);

/// Expected squared error, variance term and annealed KL regularizer summed (or averaged)
/// over rows. The KL only sees the non-target evidence: alpha~ = alpha (1 - y) + y.
LossBreakdown edl_loss(const EdlBatch& batch, Reduction reduction = Reduction::sum);

/// d total / d alpha, row-major n*k, consistent with edl_loss under the same reduction.
std::vector<double> edl_grad(const EdlBatch& batch, Reduction reduction = Reduction::sum);

/// Single-row kernels shared with the map fitter. `grad` may be empty to skip it.
/// Returns the row's (sq, var, kl) contributions.
struct RowLoss {
  double sq{0.0}, var{0.0}, kl{0.0};
};
RowLoss edl_row(std::span<const double> alpha, std::span<const double> y, double lambda_t,
                std::span<double> grad);

}  // namespace gevbev
