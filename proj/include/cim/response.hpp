#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace cim {

// f on {0,...,B} with f(0)=0, increments nonnegative and nonincreasing.
// Values between grid points come from linear interpolation; beyond B the
// curve extends with the final increment held at zero (flat).
class ResponseCurve {
 public:
  ResponseCurve() : values_(Eigen::VectorXd::Zero(1)) {}
  explicit ResponseCurve(Eigen::VectorXd values, double tol = 1e-9);

  static ResponseCurve zero(int budget) {
    return ResponseCurve(Eigen::VectorXd::Zero(budget + 1));
  }

  int budget() const { return static_cast<int>(values_.size()) - 1; }
  const Eigen::VectorXd& values() const { return values_; }

  double at(int t) const;          // clamped to [0,B], flat beyond
  double interp(double x) const;   // piecewise-linear f-bar, x >= 0
  double increment(int t) const;   // f(t+1)-f(t), zero at and past B

  double curvature() const;        // max_t (inc(t-1) - inc(t)), 0 if B < 2

  // Shape check on an arbitrary vector; explains the first violation.
  static bool validate(const Eigen::VectorXd& values, double tol, std::string* why = nullptr);

 private:
  Eigen::VectorXd values_;
};

// Discrete Taylor envelope of f(t+u) around t for integer u >= 0:
//   f(t) + u inc(t) - (curvature/2) u(u-1)  <=  f(t+u)  <=  f(t) + u inc(t).
struct TaylorBounds {
  double lower = 0.0;
  double upper = 0.0;
};
TaylorBounds taylor_bounds(const ResponseCurve& f, int t, int u);

inline double falling2(double x) { return x * (x - 1.0); }

// Process-wide count of interp() calls clamped past the grid end.
long long interp_clamp_warnings();

// Weighted projection of y onto the shape cone {v0=0, increments >= 0,
// second differences <= 0}, minimizing sum w_t (y_t - v_t)^2. Active-set
// search over the increment representation; exact at convergence.
Eigen::VectorXd project_concave(const Eigen::VectorXd& y, const Eigen::VectorXd& w);

inline Eigen::VectorXd project_concave(const Eigen::VectorXd& y) {
  return project_concave(y, Eigen::VectorXd::Ones(y.size()));
}

// One logged observation row for the fit.
struct FitRow {
  int i = 0;        // node id (unused by the fit beyond bookkeeping)
  int z = 0;        // seed indicator
  int kp = 0;       // positive exposure
  int kn = 0;       // negative exposure
  double y = 0.0;   // outcome
  double w = 1.0;   // IPS weight
};

struct FitOptions {
  int budget_pos = -1;       // grid size; -1 means max observed kp
  int budget_neg = -1;
  double lambda = 0.0;       // total-variation penalty on each curve
  double tol = 1e-9;         // sup-norm parameter change per sweep
  int max_iter = 10000;
};

struct FitResult {
  double alpha = 0.0;
  ResponseCurve f_pos;
  ResponseCurve f_neg;
  double objective = 0.0;    // weighted MSE + lambda * (TV+ + TV-)
  int iterations = 0;
  bool converged = false;
  bool alpha_identified = true;  // false when no weighted z variation
  Eigen::VectorXd n_eff_pos;     // per-bin (sum w)^2 / sum w^2, zero for empty
  Eigen::VectorXd n_eff_neg;
};

// Block-coordinate weighted least squares with shape constraints:
// alpha in closed form, each curve by weighted cone projection of its
// partial-residual bin means. Objective is nonincreasing per sweep.
FitResult fit_response(const std::vector<FitRow>& rows, const FitOptions& opt = {});

}  // namespace cim
