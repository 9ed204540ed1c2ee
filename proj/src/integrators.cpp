#include "rollball/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "rollball/errors.hpp"

namespace rollball {

namespace {

constexpr int kNewtonMaxIterations = 25;
constexpr double kNewtonTolerance = 1e-12;
constexpr double kSafety = 0.9;
constexpr double kGrowMin = 0.2;
constexpr double kGrowMax = 5.0;
// PI controller exponents for a fifth-order pair.
constexpr double kBeta = 0.04;
constexpr double kAlpha = 0.2 - 0.75 * kBeta;

// Dormand-Prince 5(4).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

std::string at_time(const std::string& what, double t) {
  std::ostringstream s;
  s.precision(17);
  s << what << " at t=" << t;
  return s.str();
}

// Counts evaluations and converts non-finite output into DivergenceError.
class CheckedRhs {
 public:
  CheckedRhs(const RhsFn& rhs, IntegrationStats& stats) : rhs_(rhs), stats_(stats) {}

  void operator()(double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx) const {
    ++stats_.rhs_evals;
    rhs_(t, x, dx);
    if (!finite(dx)) throw DivergenceError(at_time("right-hand side is not finite", t), t);
  }

  RhsFn as_fn() const {
    return [this](double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx) { (*this)(t, x, dx); };
  }

 private:
  const RhsFn& rhs_;
  IntegrationStats& stats_;
};

double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& x0, const Eigen::VectorXd& x1, double atol,
                  double rtol) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double scale = atol + rtol * std::max(std::abs(x0[i]), std::abs(x1[i]));
    worst = std::max(worst, std::abs(err[i]) / scale);
  }
  return worst;
}

// Cubic Hermite interpolation on [t0, t1], plus s^2 (1 - s)^2 * dense when given.
Eigen::VectorXd hermite(double t0, const Eigen::VectorXd& x0, const Eigen::VectorXd& f0, double t1,
                        const Eigen::VectorXd& x1, const Eigen::VectorXd& f1, const Eigen::VectorXd* dense,
                        double t) {
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  // Increment form keeps constant solutions exact.
  Eigen::VectorXd out = x0 + h01 * (x1 - x0) + (h10 * h) * f0 + (h11 * h) * f1;
  if (dense != nullptr) out += (s2 * (1 - s) * (1 - s)) * *dense;
  return out;
}

// Accepts steps, emits samples, enforces the step budget.
class Driver {
 public:
  Driver(const OdeSystem& sys, const IntegratorConfig& cfg, const std::vector<double>& times, Trajectory& out)
      : sys_(sys), cfg_(cfg), times_(times), out_(out) {}

  void start(const Eigen::VectorXd& x) {
    out_.t.push_back(times_.front());
    out_.x.push_back(x);
    next_sample_ = 1;
  }

  bool projecting() const { return cfg_.projection && static_cast<bool>(sys_.project); }

  // Projects x1 when enabled; returns true if it changed.
  bool project(Eigen::VectorXd& x1) {
    if (!projecting()) return false;
    const Eigen::VectorXd before = x1;
    sys_.project(x1);
    const double corr = (x1 - before).lpNorm<Eigen::Infinity>();
    out_.stats.max_projection_correction = std::max(out_.stats.max_projection_correction, corr);
    return corr != 0.0;
  }

  void accept(double t0, const Eigen::VectorXd& x0, const Eigen::VectorXd& f0, double t1, const Eigen::VectorXd& x1,
              const Eigen::VectorXd& f1, const Eigen::VectorXd* dense) {
    ++out_.stats.steps;
    if (out_.stats.steps > cfg_.max_steps)
      throw BudgetError(at_time("step budget of " + std::to_string(cfg_.max_steps) + " exhausted", t1), t1);
    while (next_sample_ < times_.size() && times_[next_sample_] <= t1) {
      const double ts = times_[next_sample_];
      Eigen::VectorXd xs = ts == t1 ? x1 : hermite(t0, x0, f0, t1, x1, f1, dense, ts);
      if (projecting()) sys_.project(xs);
      out_.t.push_back(ts);
      out_.x.push_back(std::move(xs));
      ++next_sample_;
    }
  }

 private:
  const OdeSystem& sys_;
  const IntegratorConfig& cfg_;
  const std::vector<double>& times_;
  Trajectory& out_;
  std::size_t next_sample_ = 0;
};

// Segment end points: interior breakpoints then b.
std::vector<double> stops(const std::vector<double>& breakpoints, double a, double b) {
  std::vector<double> out;
  for (double bp : breakpoints)
    if (bp > a && bp < b) out.push_back(bp);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  out.push_back(b);
  return out;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::rk4:
      return "rk4";
    case Method::rk45:
      return "rk45";
    case Method::implicit_trap:
      return "implicit_trap";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "rk4") return Method::rk4;
  if (name == "rk45") return Method::rk45;
  if (name == "implicit_trap") return Method::implicit_trap;
  throw ValidationError("unknown integration method '" + std::string(name) + "' (rk4|rk45|implicit_trap)");
}

void IntegratorConfig::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw ValidationError("integrator: tolerances must be positive");
  if (!(h_min > 0.0)) throw ValidationError("integrator: h_min must be positive");
  if (!(h_min <= h_init && h_init <= h_max)) throw ValidationError("integrator: need h_min <= h_init <= h_max");
  if (max_steps == 0) throw ValidationError("integrator: max_steps must be positive");
  if (samples < 2) throw ValidationError("integrator: need at least 2 samples");
}

std::vector<double> uniform_grid(double a, double b, std::size_t samples) {
  if (samples < 2) throw ValidationError("uniform_grid: need at least 2 samples");
  std::vector<double> t(samples);
  const double span = b - a;
  const double last = static_cast<double>(samples - 1);
  for (std::size_t k = 0; k < samples; ++k) t[k] = a + span * (static_cast<double>(k) / last);
  t.back() = b;
  return t;
}

Eigen::VectorXd step_rk4(const RhsFn& rhs, double t, const Eigen::VectorXd& x, double h,
                         const Eigen::VectorXd& dx0) {
  Eigen::VectorXd k2, k3, k4;
  rhs(t + 0.5 * h, x + (0.5 * h) * dx0, k2);
  rhs(t + 0.5 * h, x + (0.5 * h) * k2, k3);
  rhs(t + h, x + h * k3, k4);
  return x + (h / 6.0) * (dx0 + 2.0 * k2 + 2.0 * k3 + k4);
}

Rk45Result step_rk45(const RhsFn& rhs, double t, const Eigen::VectorXd& x, double h, const Eigen::VectorXd& dx0) {
  const Eigen::VectorXd& k1 = dx0;
  Eigen::VectorXd k2, k3, k4, k5, k6, k7;
  rhs(t + c2 * h, x + h * (a21 * k1), k2);
  rhs(t + c3 * h, x + h * (a31 * k1 + a32 * k2), k3);
  rhs(t + c4 * h, x + h * (a41 * k1 + a42 * k2 + a43 * k3), k4);
  rhs(t + c5 * h, x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5);
  rhs(t + h, x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
  Rk45Result r;
  r.x_next = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  rhs(t + h, r.x_next, k7);
  r.error = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  r.dense = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
  r.dx_next = std::move(k7);
  return r;
}

Eigen::MatrixXd fd_jacobian(const RhsFn& rhs, double t, const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd jac(n, n);
  Eigen::VectorXd fp, fm;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    rhs(t, xp, fp);
    rhs(t, xm, fm);
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

TrapResult step_implicit_trap(const RhsFn& rhs, const Eigen::MatrixXd& jacobian, double t, const Eigen::VectorXd& x,
                              double h, const Eigen::VectorXd& dx0) {
  const Eigen::Index n = x.size();
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) - (0.5 * h) * jacobian;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  const Eigen::VectorXd base = x + (0.5 * h) * dx0;
  TrapResult r;
  r.x_next = x + h * dx0;
  Eigen::VectorXd f;
  for (int it = 1; it <= kNewtonMaxIterations; ++it) {
    rhs(t + h, r.x_next, f);
    const Eigen::VectorXd residual = r.x_next - base - (0.5 * h) * f;
    const Eigen::VectorXd delta = lu.solve(residual);
    r.x_next -= delta;
    r.iterations = static_cast<std::size_t>(it);
    if (!finite(r.x_next)) break;
    const double scale = std::max(1.0, r.x_next.lpNorm<Eigen::Infinity>());
    if (delta.lpNorm<Eigen::Infinity>() <= kNewtonTolerance * scale) return r;
  }
  throw ImplicitStepError(at_time("implicit trapezoid: Newton iteration did not converge", t), t);
}

Trajectory integrate(const OdeSystem& system, const Eigen::VectorXd& x0, const std::vector<double>& sample_times,
                     const IntegratorConfig& config) {
  config.validate();
  if (!system.rhs) throw ValidationError("integrate: system has no right-hand side");
  if (sample_times.size() < 2) throw ValidationError("integrate: need at least two sample times");
  for (std::size_t k = 1; k < sample_times.size(); ++k)
    if (!(sample_times[k] > sample_times[k - 1])) throw ValidationError("integrate: sample times must increase");
  if (!finite(x0)) throw ValidationError("integrate: initial state is not finite");

  const double a = sample_times.front();
  const double b = sample_times.back();
  Trajectory out;
  out.t.reserve(sample_times.size());
  out.x.reserve(sample_times.size());
  Driver driver(system, config, sample_times, out);
  const CheckedRhs rhs(system.rhs, out.stats);
  const RhsFn rhs_fn = rhs.as_fn();

  double t = a;
  Eigen::VectorXd x = x0;
  driver.project(x);
  driver.start(x);
  Eigen::VectorXd f;
  rhs(t, x, f);

  // Finishes an accepted step: projection, fresh derivative, samples.
  // The interpolant uses the unprojected end point; samples are projected.
  auto finish = [&](double t1, Eigen::VectorXd x1, Eigen::VectorXd f1, const Eigen::VectorXd* dense) {
    if (!finite(x1)) throw DivergenceError(at_time("state is not finite", t1), t1);
    driver.accept(t, x, f, t1, x1, f1, dense);
    if (driver.project(x1)) rhs(t1, x1, f1);
    t = t1;
    x = std::move(x1);
    f = std::move(f1);
  };

  const bool fixed = config.method != Method::rk45 || config.fixed_step;
  double h_prop = std::min(config.h_init, config.h_max);
  double err_prev = 1.0;

  for (double t_stop : stops(system.breakpoints, a, b)) {
    if (fixed) {
      const double seg = t_stop - t;
      const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(seg / config.h_init - 1e-9)));
      const double h = seg / static_cast<double>(steps);
      const double t_seg = t;
      for (std::size_t i = 1; i <= steps; ++i) {
        const double t1 = i == steps ? t_stop : t_seg + static_cast<double>(i) * h;
        const double hs = t1 - t;
        switch (config.method) {
          case Method::rk4: {
            Eigen::VectorXd x1 = step_rk4(rhs_fn, t, x, hs, f);
            if (!finite(x1)) throw DivergenceError(at_time("state is not finite", t1), t1);
            Eigen::VectorXd f1;
            rhs(t1, x1, f1);
            finish(t1, std::move(x1), std::move(f1), nullptr);
            break;
          }
          case Method::rk45: {
            Rk45Result r = step_rk45(rhs_fn, t, x, hs, f);
            finish(t1, std::move(r.x_next), std::move(r.dx_next), &r.dense);
            break;
          }
          case Method::implicit_trap: {
            // On Newton failure the step is retried as two halves.
            std::vector<double> targets{t1};
            while (!targets.empty()) {
              const double tt = targets.back();
              const double hh = tt - t;
              ++out.stats.jacobian_evals;
              const Eigen::MatrixXd jac = system.jacobian ? system.jacobian(t, x) : fd_jacobian(rhs_fn, t, x);
              try {
                TrapResult r = step_implicit_trap(rhs_fn, jac, t, x, hh, f);
                out.stats.newton_iterations += r.iterations;
                Eigen::VectorXd f1;
                rhs(tt, r.x_next, f1);
                finish(tt, std::move(r.x_next), std::move(f1), nullptr);
                targets.pop_back();
              } catch (const ImplicitStepError&) {
                ++out.stats.rejected;
                if (0.5 * hh < config.h_min) throw;
                targets.push_back(t + 0.5 * hh);
              }
            }
            break;
          }
        }
      }
      continue;
    }

    while (t < t_stop) {
      if (h_prop < config.h_min)
        throw StiffnessError(at_time("step size " + std::to_string(h_prop) + " fell below h_min", t), t);
      double h = std::min(h_prop, config.h_max);
      bool lands = false;
      if (t + h >= t_stop - 1e-14 * std::max(1.0, std::abs(t_stop))) {
        h = t_stop - t;
        lands = true;
      }
      Rk45Result r = step_rk45(rhs_fn, t, x, h, f);
      const double err = error_norm(r.error, x, r.x_next, config.abs_tol, config.rel_tol);
      if (!std::isfinite(err)) throw DivergenceError(at_time("error estimate is not finite", t), t);
      if (err <= 1.0) {
        const double e = std::max(err, 1e-10);
        const double fac = std::clamp(std::pow(e, kAlpha) * std::pow(err_prev, -kBeta) / kSafety, 1.0 / kGrowMax,
                                      1.0 / kGrowMin);
        const double h_next = h / fac;
        err_prev = std::max(err, 1e-4);
        finish(lands ? t_stop : t + h, std::move(r.x_next), std::move(r.dx_next), &r.dense);
        // A step cut short to land on a stop does not shrink the proposal.
        h_prop = lands ? std::max(h_prop, h_next) : h_next;
      } else {
        ++out.stats.rejected;
        const double fac = std::min(std::pow(err, kAlpha) / kSafety, 1.0 / kGrowMin);
        h_prop = h / fac;
      }
    }
  }
  return out;
}

Trajectory integrate(const OdeSystem& system, const Eigen::VectorXd& x0, double a, double b,
                     const IntegratorConfig& config) {
  if (!(b > a)) throw ValidationError("integrate: need b > a");
  config.validate();
  return integrate(system, x0, uniform_grid(a, b, config.samples), config);
}

}  // namespace rollball
