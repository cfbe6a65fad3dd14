#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "freemul/measure.hpp"
#include "freemul/transform.hpp"

namespace freemul {

struct SolverConfig {
  double tol = 1e-13;            // relative fixed-point / Newton step tolerance
  int max_iter = 500;
  double damping = 1.0;          // initial Newton step fraction
  int path_steps = 32;
  double tol_residual = 1e-10;   // |Phi_t(omega) - z| <= tol_residual * max(1, |z|)
};

/// Anything with an eta-transform: a measure, or a semigroup member mu_t whose
/// eta is computed by subordination. `log_sigma0` is the logarithm of
/// Sigma(0) = lim z/eta(z) on the branch this source represents.
class EtaSource {
 public:
  virtual ~EtaSource() = default;
  virtual Space space() const = 0;
  virtual AnalyticValue eta(cplx z) const = 0;
  virtual cplx log_sigma0() const = 0;
};

class MeasureEta final : public EtaSource {
 public:
  explicit MeasureEta(const Measure& m);
  Space space() const override { return tr_.space(); }
  AnalyticValue eta(cplx z) const override { return tr_.eta(z); }
  cplx log_sigma0() const override { return log_sigma0_; }
  const Transformer& transformer() const noexcept { return tr_; }

 private:
  Transformer tr_;
  cplx log_sigma0_;
};

/// Continued logarithm of w/eta(w). On the half-line the principal branch is
/// the right one everywhere (it is real for w < 0); on the disk the branch is
/// carried along from the base point near 0.
struct BranchState {
  cplx log_ratio{0.0, 0.0};
  bool tracked = false;
};

BranchState initial_branch(const EtaSource& src);

struct OmegaResult {
  cplx z;
  cplx omega;
  cplx eta_t;
  cplx one_minus_eta_t{1.0, 0.0};
  double residual = 0.0;
  int iterations = 0;
  int branch_winding = 0;
  BranchState branch;
};

/// Phi_t(w) = w [w/eta(w)]^{t-1}; updates `branch` to the log used.
cplx phi_t(const EtaSource& src, double t, cplx w, BranchState& branch);

/// Solves Phi_t(omega) = z by the fixed-point map
///   omega -> eta(omega) [z/eta(omega)]^{1/t}
/// started at omega = z (half-line, with continuation from the base point as a
/// fallback) or continued from the base point near 0 (disk), with a guarded
/// Newton polish once the iteration has settled.
OmegaResult solve_omega(const EtaSource& src, double t, cplx z, const SolverConfig& cfg = {});

/// Same, warm-started from a nearby solution (its omega and branch).
OmegaResult solve_omega_from(const EtaSource& src, double t, cplx z, const OmegaResult& warm,
                             const SolverConfig& cfg = {});

/// omega = eta_t [z/eta_t]^{1/t} evaluated directly. The log of z/eta_t is the
/// principal one on the half-line and the one nearest `reference_log` on the
/// disk (pass t times the solver's branch log, or t log Sigma(0) near 0).
cplx omega_via_formula(cplx eta_t, cplx z, double t, Space space, cplx reference_log = {});

/// Solutions along a path from the base point (-1e-3 on the half-line,
/// 1e-3 z/|z| on the disk) to z; the last entry is the solution at z.
std::vector<OmegaResult> continuation_path(const EtaSource& src, double t, cplx z,
                                           const SolverConfig& cfg = {});

/// Solutions along caller-supplied points, each warm-started from the previous
/// one. The first point is solved cold.
std::vector<OmegaResult> solve_along(const EtaSource& src, double t,
                                     const std::vector<cplx>& points,
                                     const SolverConfig& cfg = {});

/// Sequential solver that warm-starts each request from the previous answer
/// and subdivides the step when the branch would jump.
class PathSolver {
 public:
  PathSolver(const EtaSource& src, double t, SolverConfig cfg = {})
      : src_(&src), t_(t), cfg_(cfg) {}

  const OmegaResult& advance(cplx z);
  void reset() { state_.reset(); }
  void seed(OmegaResult r) { state_ = std::move(r); }
  const std::optional<OmegaResult>& state() const noexcept { return state_; }

 private:
  OmegaResult step(const OmegaResult& from, cplx z, int depth);

  const EtaSource* src_;
  double t_;
  SolverConfig cfg_;
  std::optional<OmegaResult> state_;
};

/// eta of mu_t, computed as eta_mu(omega_t(z)).
class SemigroupEta final : public EtaSource {
 public:
  SemigroupEta(std::shared_ptr<const EtaSource> base, double t, SolverConfig cfg = {});
  Space space() const override { return base_->space(); }
  AnalyticValue eta(cplx z) const override;
  cplx log_sigma0() const override { return t_ * base_->log_sigma0(); }
  double t() const noexcept { return t_; }

 private:
  std::shared_ptr<const EtaSource> base_;
  double t_;
  SolverConfig cfg_;
};

struct GridValue {
  cplx z;
  bool ok = false;
  OmegaResult result;
  std::string error;
};

/// Batch evaluation of eta_t; a failing point is recorded, never fatal.
std::vector<GridValue> eta_t_grid(const EtaSource& src, double t, const std::vector<cplx>& points,
                                  const SolverConfig& cfg = {}, int threads = 1);

}  // namespace freemul
