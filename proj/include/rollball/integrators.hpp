// One-step ODE integrators with dense output on a fixed sample grid.
#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace rollball {

using RhsFn = std::function<void(double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx)>;
using ProjectFn = std::function<void(Eigen::VectorXd& x)>;
using JacobianFn = std::function<Eigen::MatrixXd(double t, const Eigen::VectorXd& x)>;

struct OdeSystem {
  RhsFn rhs;
  ProjectFn project;    // optional; applied after accepted steps and to samples
  JacobianFn jacobian;  // optional; central differences of rhs otherwise
  std::vector<double> breakpoints;  // times where rhs has kinks; steps end on them
};

enum class Method { rk4, rk45, implicit_trap };

std::string_view method_name(Method m);
/// Throws ValidationError for unknown names.
Method parse_method(std::string_view name);

struct IntegratorConfig {
  Method method = Method::rk45;
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  /// Initial step for rk45; the step for rk4, implicit_trap and fixed-step rk45.
  double h_init = 1e-3;
  double h_min = 1e-14;
  double h_max = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 50'000'000;
  bool projection = true;
  /// rk45 only: take steps of exactly h_init with no error control.
  bool fixed_step = false;
  std::size_t samples = 2001;

  /// Throws ValidationError naming the violated invariant.
  void validate() const;

  friend bool operator==(const IntegratorConfig&, const IntegratorConfig&) = default;
};

struct IntegrationStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
  std::size_t jacobian_evals = 0;
  std::size_t newton_iterations = 0;
  /// Largest |x_projected - x| over accepted steps (infinity norm).
  double max_projection_correction = 0.0;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x;
  IntegrationStats stats;

  std::size_t size() const { return t.size(); }
};

/// `samples` points a, ..., b spaced uniformly; the last one is exactly b.
std::vector<double> uniform_grid(double a, double b, std::size_t samples);

/// Integrates over [sample_times.front(), sample_times.back()] and reports the
/// state at each requested time. Throws StiffnessError, BudgetError,
/// DivergenceError or ImplicitStepError.
Trajectory integrate(const OdeSystem& system, const Eigen::VectorXd& x0, const std::vector<double>& sample_times,
                     const IntegratorConfig& config);

/// Uniform grid of config.samples points over [a, b].
Trajectory integrate(const OdeSystem& system, const Eigen::VectorXd& x0, double a, double b,
                     const IntegratorConfig& config);

/// Classic fourth-order Runge-Kutta step; `dx0` is rhs(t, x).
Eigen::VectorXd step_rk4(const RhsFn& rhs, double t, const Eigen::VectorXd& x, double h,
                         const Eigen::VectorXd& dx0);

struct Rk45Result {
  Eigen::VectorXd x_next;    // fifth-order solution
  Eigen::VectorXd error;     // fifth minus fourth order
  Eigen::VectorXd dx_next;   // rhs(t + h, x_next), reusable as the next dx0
  /// Coefficient of s^2 (1 - s)^2 that lifts the cubic Hermite interpolant on
  /// (x, dx0, x_next, dx_next) to the pair's fourth-order continuous extension.
  Eigen::VectorXd dense;
};

/// Dormand-Prince 5(4) step; `dx0` is rhs(t, x).
Rk45Result step_rk45(const RhsFn& rhs, double t, const Eigen::VectorXd& x, double h, const Eigen::VectorXd& dx0);

struct TrapResult {
  Eigen::VectorXd x_next;
  std::size_t iterations = 0;
};

/// Implicit trapezoid step solved by Newton iteration with the Jacobian at
/// (t, x). Throws ImplicitStepError if 25 iterations do not reach a 1e-12
/// (relative to max(1, |x|)) update.
TrapResult step_implicit_trap(const RhsFn& rhs, const Eigen::MatrixXd& jacobian, double t, const Eigen::VectorXd& x,
                              double h, const Eigen::VectorXd& dx0);

/// Central-difference Jacobian of rhs at (t, x), step 1e-6 * max(1, |x_j|).
Eigen::MatrixXd fd_jacobian(const RhsFn& rhs, double t, const Eigen::VectorXd& x);

}  // namespace rollball
