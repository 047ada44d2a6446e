#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "ttman/completion.hpp"

namespace ttman {

struct CheckResult {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string detail;
};

struct CheckReport {
  std::vector<CheckResult> results;
  bool passed() const;
};

enum class CheckLevel { fast, full };

/// "fast" or "full"; throws std::invalid_argument otherwise.
CheckLevel parse_check_level(const std::string& s);

struct SuiteOptions {
  CheckLevel level = CheckLevel::fast;
  /// Negates R_0 of the base point used by the parametrization check.
  bool corrupt_r = false;
  std::uint64_t seed = 2024;
};

/// Completion problem with a random rank-r target, uniform sampling at the
/// given oversampling and an independent test set of the same size.
CompletionProblem make_completion_instance(const Shape& s, double oversampling, std::uint64_t seed);

namespace checks {

/// Symmetry and idempotence of the assembled projector, rank = manifold dim.
CheckResult projector_assembly(const Shape& s, std::uint64_t seed, double tol = 1e-10);
/// flatten(X, k) = X_{<=k} X_{>=k+1}^T.
CheckResult interface_factorization(const Shape& s, std::uint64_t seed, double tol = 1e-12);
/// Left interfaces of X and right interfaces of X~ are column-orthonormal.
CheckResult interface_orthonormality(const Shape& s, std::uint64_t seed, double tol = 1e-12);
/// R-factor identity and the gauged <-> first conversion, compared densely.
CheckResult param_conversion(const Shape& s, std::uint64_t seed, bool corrupt_r = false, double tol = 1e-12);
/// Projecting a densified tangent vector reproduces its cores.
CheckResult tangent_reprojection(const Shape& s, std::uint64_t seed, double tol = 1e-10);
/// Finite differences of the interface matrices equal the variational ones.
CheckResult variational_derivative(const Shape& s, std::uint64_t seed, double tol = 1e-6);
/// D_V(X_{<=k} X_{<=k}^T) = V_{<=k} X_{<=k}^T + X_{<=k} V_{<=k}^T.
CheckResult left_projector_derivative(const Shape& s, std::uint64_t seed, double tol = 1e-6);
/// V_{<=k}^T X_{<=k} = 0 for k < d.
CheckResult variational_cancellation(const Shape& s, std::uint64_t seed, double tol = 1e-10);
/// D_V(X~ X~^T) on right interfaces.
CheckResult right_projector_derivative(const Shape& s, std::uint64_t seed, double tol = 1e-6);
/// Weingarten map against P_X of the numeric projector derivative.
CheckResult weingarten_numeric(const Shape& s, Index trials, std::uint64_t seed, double tol = 1e-6);
/// Each diagonal term against P^k of the numeric derivative of P^k Z.
CheckResult diagonal_terms(const Shape& s, Index trials, std::uint64_t seed, double tol = 1e-6);
/// Each cross term (i != j) against -(numeric D_V P^i)(P^j Z).
CheckResult cross_terms(const Shape& s, Index trials, std::uint64_t seed, double tol = 1e-6);
/// Gram sequence and A/B/C families from the sparse path against explicit
/// dense contractions of the densified sparse tensor. nnz = 0 samples a third
/// of all entries.
CheckResult sparse_vs_dense(const Shape& s, Index trials, std::uint64_t seed, double tol = 1e-11, Index nnz = 0);
/// |<H V, W> - <V, H W>| / (||V|| ||W|| ||H||) on completion problems.
CheckResult hessian_symmetry(const Shape& s, Index pairs, std::uint64_t seed, double tol = 1e-8);
/// Exact against finite-difference Hessian-vector products, best step over a
/// small grid around the default.
CheckResult fd_hessian(const Shape& s, Index trials, std::uint64_t seed, double tol = 1e-4);
/// e(t/2) <= 0.3 e(t) for the retraction error e(t) = ||R(tV) - X - tV||.
CheckResult retraction_order(const Shape& s, std::uint64_t seed, double tol = 0.3);
/// One hess_apply at d, n, r with nnz samples: no dense allocation, runtime
/// below the limit.
CheckResult dimensionality_guard(Index d, Index n, Index r, Index nnz, std::uint64_t seed, double time_limit_s);

/// Seconds for one hess_apply on a completion-type sparse problem (best of
/// `repeats`).
double hess_apply_seconds(Index d, Index n, Index r, Index nnz, std::uint64_t seed, Index repeats);

}  // namespace checks

CheckReport check_suite(const SuiteOptions& opt);
void print_report(std::ostream& os, const CheckReport& report);

}  // namespace ttman
