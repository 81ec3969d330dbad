#pragma once

// Transferable-utility matching equilibrium under Gumbel (logit) preference
// noise with scale beta. The fixed point is characterized by per-candidate and
// per-employer quadratics in the outside-option roots A_c = sqrt(mu_{c,0}),
// B_j = sqrt(mu_{0,j}):
//
//   A_c^2 + A_c * sum_j K(c,j) B_j = 1,   K(c,j) = exp((p_cj + p_jc) / (2 beta))
//   B_j^2 + B_j * sum_c K(c,j) A_c = 1
//   mu(c,j) = K(c,j) A_c B_j
//
// solved by alternating closed-form root updates (a full A sweep, then a full
// B sweep) until both the per-sweep change and the marginal-constraint
// violation drop below tol.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "matchmarket/core.hpp"

namespace matchmarket {

template <typename Scalar>
struct TUConfig {
  Scalar beta = Scalar(1);
  Scalar tol = Scalar(1e-9);
  Index max_iters = 100000;

  void validate() const {
    if (!(beta > Scalar(0)))
      throw std::invalid_argument("beta must be positive");
    if (!(tol > Scalar(0)))
      throw std::invalid_argument("tol must be positive");
    if (max_iters < 1)
      throw std::invalid_argument("max_iters must be >= 1");
  }
};

template <typename Scalar>
struct EquilibriumMatching {
  MatrixX<Scalar> mu;     // |C| x |J| matched mass per pair
  VectorX<Scalar> mu_c0;  // per-candidate unmatched mass
  VectorX<Scalar> mu_0j;  // per-employer unmatched mass
  Scalar beta = Scalar(1);
  Index iterations = 0;   // completed sweeps (one A pass + one B pass)
  Scalar residual = Scalar(0);  // max-abs marginal-constraint violation
  bool converged = false;
};

template <typename Scalar>
EquilibriumMatching<Scalar> solve_ipfp(const PreferenceMatrices<Scalar>& prefs,
                                       const TUConfig<Scalar>& config) {
  prefs.validate();
  config.validate();
  const Index C = prefs.num_candidates();
  const Index J = prefs.num_jobs();

  MatrixX<Scalar> K =
      ((prefs.p_cj + prefs.p_jc.transpose()) / (Scalar(2) * config.beta))
          .array()
          .exp();
  if (!K.allFinite())
    throw NumericalError(
        "surplus kernel exp((p+p)/(2*beta)) overflowed at beta=" +
        std::to_string(static_cast<double>(config.beta)) +
        "; rescale beta upward");

  // Positive root of x^2 + S x - 1 = 0 in the cancellation-free form
  // 1 / (sqrt(1 + (S/2)^2) + S/2); algebraically identical to
  // sqrt(1 + (S/2)^2) - S/2 but stable for large S.
  auto root = [](const VectorX<Scalar>& s) -> VectorX<Scalar> {
    return (((s.array() / 2).square() + Scalar(1)).sqrt() + s.array() / 2)
        .inverse();
  };

  VectorX<Scalar> A = VectorX<Scalar>::Ones(C);
  VectorX<Scalar> B = VectorX<Scalar>::Ones(J);
  VectorX<Scalar> s_c(C), s_j(J);
  Scalar delta = std::numeric_limits<Scalar>::infinity();
  Scalar residual = std::numeric_limits<Scalar>::infinity();
  Index iterations = 0;
  bool converged = false;

  while (true) {
    s_c.noalias() = K * B;
    if (iterations > 0) {
      // Marginal-constraint violations of the current iterate. The B-side
      // constraint is satisfied by construction of the last B update (s_j
      // still holds its sum), so its violation is float noise; the A-side
      // constraint sees the newer B through the freshly computed s_c.
      const Scalar row_violation =
          (A.array() * (A + s_c).array() - Scalar(1)).abs().maxCoeff();
      const Scalar col_violation =
          (B.array() * (B + s_j).array() - Scalar(1)).abs().maxCoeff();
      residual = std::max(row_violation, col_violation);
      if (delta < config.tol && residual < config.tol) {
        converged = true;
        break;
      }
      if (iterations >= config.max_iters) break;
    }
    VectorX<Scalar> a_new = root(s_c);
    const Scalar delta_a = (a_new - A).cwiseAbs().maxCoeff();
    A.swap(a_new);
    s_j.noalias() = K.transpose() * A;
    VectorX<Scalar> b_new = root(s_j);
    const Scalar delta_b = (b_new - B).cwiseAbs().maxCoeff();
    B.swap(b_new);
    delta = std::max(delta_a, delta_b);
    ++iterations;
  }

  EquilibriumMatching<Scalar> eq;
  eq.mu = K.array() * (A * B.transpose()).array();
  eq.mu_c0 = A.array().square();
  eq.mu_0j = B.array().square();
  eq.beta = config.beta;
  eq.iterations = iterations;
  eq.residual = residual;
  eq.converged = converged;
  return eq;
}

// Rank jobs for each candidate by matched mass mu(c, .) descending. Refuses
// unconverged equilibria unless force is set.
template <typename Scalar>
DeterministicPolicy tu_policy(const EquilibriumMatching<Scalar>& eq,
                              bool force = false) {
  if (!eq.converged && !force)
    throw NotConvergedError(
        "equilibrium not converged after " + std::to_string(eq.iterations) +
        " sweeps (residual " + std::to_string(static_cast<double>(eq.residual)) +
        "); pass force to rank the unconverged iterate");
  DeterministicPolicy policy;
  policy.rankings.reserve(static_cast<std::size_t>(eq.mu.rows()));
  for (Index c = 0; c < eq.mu.rows(); ++c)
    policy.rankings.push_back(ranking_from_scores(eq.mu.row(c)));
  return policy;
}

// Equilibrium transfers implied by the candidate-side softmax demand:
// tau(c,j) = beta * ln(mu(c,j) / mu(c,0)) - p_cj(c,j). At a true fixed point
// the employer-side demand evaluated at the same tau reproduces mu as well.
template <typename Scalar>
MatrixX<Scalar> recover_transfers(const PreferenceMatrices<Scalar>& prefs,
                                  const EquilibriumMatching<Scalar>& eq) {
  if (!eq.converged)
    throw NotConvergedError("transfers require a converged equilibrium");
  if ((eq.mu_c0.array() <= Scalar(0)).any() ||
      (eq.mu.array() <= Scalar(0)).any())
    throw NumericalError(
        "degenerate equilibrium: zero matched or outside-option mass");
  MatrixX<Scalar> tau(eq.mu.rows(), eq.mu.cols());
  for (Index c = 0; c < eq.mu.rows(); ++c)
    for (Index j = 0; j < eq.mu.cols(); ++j)
      tau(c, j) = eq.beta * std::log(eq.mu(c, j) / eq.mu_c0(c)) -
                  prefs.p_cj(c, j);
  return tau;
}

}  // namespace matchmarket
