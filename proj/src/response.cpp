#include "cim/response.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cim {

namespace {
std::atomic<long long> clamp_counter{0};
}

long long interp_clamp_warnings() { return clamp_counter.load(); }

ResponseCurve::ResponseCurve(Eigen::VectorXd values, double tol) : values_(std::move(values)) {
  std::string why;
  if (!validate(values_, tol, &why)) throw std::invalid_argument("response curve: " + why);
}

bool ResponseCurve::validate(const Eigen::VectorXd& values, double tol, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (values.size() < 1) return fail("empty value grid");
  for (Eigen::Index t = 0; t < values.size(); ++t)
    if (!std::isfinite(values[t])) return fail("non-finite value at t=" + std::to_string(t));
  if (std::abs(values[0]) > tol) {
    std::ostringstream os;
    os << "f(0) = " << values[0] << " != 0";
    return fail(os.str());
  }
  for (Eigen::Index t = 0; t + 1 < values.size(); ++t) {
    const double inc = values[t + 1] - values[t];
    if (inc < -tol) {
      std::ostringstream os;
      os << "negative increment " << inc << " at t=" << t;
      return fail(os.str());
    }
    if (t > 0) {
      const double prev = values[t] - values[t - 1];
      if (inc > prev + tol) {
        std::ostringstream os;
        os << "slope increases at t=" << t << " (" << prev << " -> " << inc << ")";
        return fail(os.str());
      }
    }
  }
  return true;
}

double ResponseCurve::at(int t) const {
  if (t <= 0) return values_[0];
  if (t >= budget()) return values_[budget()];
  return values_[t];
}

double ResponseCurve::increment(int t) const {
  if (t < 0 || t >= budget()) return 0.0;
  return values_[t + 1] - values_[t];
}

double ResponseCurve::interp(double x) const {
  if (x < 0.0) throw std::invalid_argument("interp at negative exposure");
  const int B = budget();
  if (x >= static_cast<double>(B)) {
    if (x > static_cast<double>(B)) clamp_counter.fetch_add(1);
    return values_[B];
  }
  const double fl = std::floor(x);
  const int m = static_cast<int>(fl);
  const double theta = x - fl;
  return (1.0 - theta) * values_[m] + theta * values_[m + 1];
}

double ResponseCurve::curvature() const {
  double kappa = 0.0;
  for (int t = 1; t < budget(); ++t)
    kappa = std::max(kappa, increment(t - 1) - increment(t));
  return kappa;
}

TaylorBounds taylor_bounds(const ResponseCurve& f, int t, int u) {
  if (t < 0 || u < 0) throw std::invalid_argument("taylor bounds need t, u >= 0");
  TaylorBounds b;
  const double base = f.at(t) + static_cast<double>(u) * f.increment(t);
  b.upper = base;
  b.lower = base - 0.5 * f.curvature() * falling2(static_cast<double>(u));
  return b;
}

namespace {

// Active-set solver for min (u - y)' W (u - y) over the homogeneous cone
// A u <= 0, with u = (v_1..v_B) after eliminating v_0 = 0. All constraint
// rows are homogeneous, so u = 0 is always feasible.
class ConeProjection {
 public:
  ConeProjection(const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    const int B = static_cast<int>(y.size()) - 1;
    y_ = y.tail(B);
    w_ = w.tail(B).cwiseMax(1e-300);
    rows_.resize(0, B);
    // monotonicity: v_t - v_{t+1} <= 0
    for (int t = 0; t < B; ++t) {
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(B);
      if (t >= 1) r[t - 1] = 1.0;
      r[t] = -1.0;
      append(r);
    }
    // concavity: v_{t-1} - 2 v_t + v_{t+1} <= 0
    for (int t = 1; t < B; ++t) {
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(B);
      if (t >= 2) r[t - 2] = 1.0;
      r[t - 1] = -2.0;
      r[t] = 1.0;
      append(r);
    }
  }

  Eigen::VectorXd solve() {
    const int B = static_cast<int>(y_.size());
    const int m = static_cast<int>(rows_.rows());
    Eigen::VectorXd u = Eigen::VectorXd::Zero(B);
    std::vector<char> active(static_cast<std::size_t>(m), 0);
    const int max_iter = 200 * (B + 1) + 200;
    for (int iter = 0; iter < max_iter; ++iter) {
      Eigen::VectorXd target, lambda;
      subspace_solution(active, target, lambda);
      const Eigen::VectorXd dir = target - u;
      if (dir.lpNorm<Eigen::Infinity>() <= 1e-13) {
        // On the working subspace; check multipliers for optimality.
        int worst = -1;
        double most_negative = -1e-11;
        int k = 0;
        for (int c = 0; c < m; ++c) {
          if (!active[static_cast<std::size_t>(c)]) continue;
          if (lambda[k] < most_negative) {
            most_negative = lambda[k];
            worst = c;
          }
          ++k;
        }
        if (worst < 0) return assemble(u);
        active[static_cast<std::size_t>(worst)] = 0;
        continue;
      }
      // Step toward the subspace minimizer, stopping at the first
      // violated inactive constraint.
      double alpha = 1.0;
      int blocking = -1;
      for (int c = 0; c < m; ++c) {
        if (active[static_cast<std::size_t>(c)]) continue;
        const double slope = rows_.row(c).dot(dir);
        if (slope <= 1e-13) continue;
        const double slack = -rows_.row(c).dot(u);  // >= 0
        const double a = slack / slope;
        if (a < alpha) {
          alpha = a;
          blocking = c;
        }
      }
      u += alpha * dir;
      if (blocking >= 0)
        active[static_cast<std::size_t>(blocking)] = 1;
      else if (alpha >= 1.0)
        continue;  // reached the subspace minimizer; multipliers next pass
    }
    throw std::runtime_error("cone projection failed to converge");
  }

 private:
  void append(const Eigen::RowVectorXd& r) {
    rows_.conservativeResize(rows_.rows() + 1, Eigen::NoChange);
    rows_.row(rows_.rows() - 1) = r;
  }

  // Minimize (u-y)' W (u-y) s.t. active rows = 0, via the KKT system.
  void subspace_solution(const std::vector<char>& active, Eigen::VectorXd& u,
                         Eigen::VectorXd& lambda) const {
    const int B = static_cast<int>(y_.size());
    int na = 0;
    for (char a : active) na += a;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(B + na, B + na);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(B + na);
    for (int i = 0; i < B; ++i) {
      kkt(i, i) = 2.0 * w_[i];
      rhs[i] = 2.0 * w_[i] * y_[i];
    }
    int k = 0;
    for (int c = 0; c < static_cast<int>(rows_.rows()); ++c) {
      if (!active[static_cast<std::size_t>(c)]) continue;
      kkt.block(B + k, 0, 1, B) = rows_.row(c);
      kkt.block(0, B + k, B, 1) = rows_.row(c).transpose();
      ++k;
    }
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    u = sol.head(B);
    lambda = sol.tail(na);
  }

  static Eigen::VectorXd assemble(const Eigen::VectorXd& u) {
    Eigen::VectorXd v(u.size() + 1);
    v[0] = 0.0;
    v.tail(u.size()) = u;
    return v;
  }

  Eigen::VectorXd y_, w_;
  Eigen::MatrixXd rows_;
};

}  // namespace

Eigen::VectorXd project_concave(const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  if (y.size() != w.size()) throw std::invalid_argument("projection weight length mismatch");
  if (y.size() == 0) throw std::invalid_argument("empty projection input");
  if ((w.array() < 0.0).any()) throw std::invalid_argument("negative projection weight");
  if (y.size() == 1) return Eigen::VectorXd::Zero(1);
  return ConeProjection(y, w).solve();
}

namespace {

struct BinReduction {
  Eigen::VectorXd weight;  // sum of row weights per bin
  Eigen::VectorXd wsum;    // weighted target sum per bin
  Eigen::VectorXd wsq;     // sum of squared weights (for n_eff)
};

// Projection inputs for one curve: observed-bin means, with empty interior
// bins given a tiny weight and a shape-feasible interpolated target so the
// projection stays strictly convex and deterministic.
struct CurveProblem {
  Eigen::VectorXd target, weight;
  int top = 0;  // largest observed bin; levels above extend flat
};

CurveProblem curve_problem(const BinReduction& bins, double lambda, double n_rows) {
  const int B = static_cast<int>(bins.weight.size()) - 1;
  CurveProblem p;
  p.top = 0;
  for (int t = 0; t <= B; ++t)
    if (bins.weight[t] > 0.0) p.top = t;
  p.target = Eigen::VectorXd::Zero(p.top + 1);
  p.weight = Eigen::VectorXd::Zero(p.top + 1);
  double mean_w = 0.0;
  int nonempty = 0;
  for (int t = 0; t <= p.top; ++t)
    if (bins.weight[t] > 0.0) {
      p.target[t] = bins.wsum[t] / bins.weight[t];
      p.weight[t] = bins.weight[t];
      mean_w += bins.weight[t];
      ++nonempty;
    }
  if (nonempty > 0) mean_w /= nonempty;
  const double tiny = std::max(mean_w, 1.0) * 1e-12;
  int prev = 0;
  double prev_v = 0.0;
  for (int t = 1; t <= p.top; ++t) {
    if (bins.weight[t] > 0.0) {
      prev = t;
      prev_v = p.target[t];
      continue;
    }
    int next = t + 1;
    while (bins.weight[next] <= 0.0) ++next;  // p.top is nonempty
    const double frac = static_cast<double>(t - prev) / static_cast<double>(next - prev);
    p.target[t] = prev_v + frac * ((bins.wsum[next] / bins.weight[next]) - prev_v);
    p.weight[t] = tiny;
  }
  // lambda * TV(f) = lambda * f(top) for nondecreasing f; folded into the
  // top bin's target by completing the square.
  if (lambda > 0.0 && p.top >= 1)
    p.target[p.top] -= 0.5 * lambda * n_rows / p.weight[p.top];
  return p;
}

Eigen::VectorXd fit_one_curve(const BinReduction& bins, double lambda, double n_rows) {
  const int B = static_cast<int>(bins.weight.size()) - 1;
  const CurveProblem p = curve_problem(bins, lambda, n_rows);
  const Eigen::VectorXd head = project_concave(p.target, p.weight);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(B + 1);
  full.head(p.top + 1) = head;
  for (int t = p.top + 1; t <= B; ++t) full[t] = head[p.top];
  return full;
}

}  // namespace

FitResult fit_response(const std::vector<FitRow>& rows, const FitOptions& opt) {
  if (rows.empty()) throw std::invalid_argument("no observations");
  if (opt.lambda < 0.0) throw std::invalid_argument("negative lambda");
  int max_kp = 0, max_kn = 0;
  double wz = 0.0;
  for (const FitRow& r : rows) {
    if (!std::isfinite(r.y)) throw std::invalid_argument("non-finite outcome");
    if (r.w < 0.0 || !std::isfinite(r.w)) throw std::invalid_argument("bad row weight");
    if (r.kp < 0 || r.kn < 0) throw std::invalid_argument("negative exposure count");
    max_kp = std::max(max_kp, r.kp);
    max_kn = std::max(max_kn, r.kn);
    wz += r.w * r.z;
  }
  const int Bp = opt.budget_pos < 0 ? max_kp : opt.budget_pos;
  const int Bn = opt.budget_neg < 0 ? max_kn : opt.budget_neg;
  if (Bp < max_kp || Bn < max_kn)
    throw std::invalid_argument("grid smaller than observed exposure");

  const double N = static_cast<double>(rows.size());
  FitResult res;
  res.alpha = 0.0;
  res.alpha_identified = wz > 0.0;
  Eigen::VectorXd fp = Eigen::VectorXd::Zero(Bp + 1), fn = Eigen::VectorXd::Zero(Bn + 1);

  auto value_at = [](const Eigen::VectorXd& f, int t) { return f[t]; };
  auto objective = [&] {
    double sq = 0.0;
    for (const FitRow& r : rows) {
      const double e = r.y - res.alpha * r.z - value_at(fp, r.kp) + value_at(fn, r.kn);
      sq += r.w * e * e;
    }
    return sq / N + opt.lambda * (fp[Bp] + fn[Bn]);
  };

  res.objective = objective();
  for (res.iterations = 1; res.iterations <= opt.max_iter; ++res.iterations) {
    const double alpha_old = res.alpha;
    const Eigen::VectorXd fp_old = fp, fn_old = fn;
    // alpha: weighted mean residual over seeded rows
    if (res.alpha_identified) {
      double num = 0.0;
      for (const FitRow& r : rows)
        if (r.z) num += r.w * (r.y - value_at(fp, r.kp) + value_at(fn, r.kn));
      res.alpha = num / wz;
    }
    // f+: cone projection of the partial-residual bin means
    {
      BinReduction bins{Eigen::VectorXd::Zero(Bp + 1), Eigen::VectorXd::Zero(Bp + 1),
                        Eigen::VectorXd::Zero(Bp + 1)};
      for (const FitRow& r : rows) {
        const double rho = r.y - res.alpha * r.z + value_at(fn, r.kn);
        bins.weight[r.kp] += r.w;
        bins.wsum[r.kp] += r.w * rho;
      }
      fp = fit_one_curve(bins, opt.lambda, N);
    }
    // f-: same, against the remaining residual with flipped sign
    {
      BinReduction bins{Eigen::VectorXd::Zero(Bn + 1), Eigen::VectorXd::Zero(Bn + 1),
                        Eigen::VectorXd::Zero(Bn + 1)};
      for (const FitRow& r : rows) {
        const double rho = res.alpha * r.z + value_at(fp, r.kp) - r.y;
        bins.weight[r.kn] += r.w;
        bins.wsum[r.kn] += r.w * rho;
      }
      fn = fit_one_curve(bins, opt.lambda, N);
    }
    res.objective = objective();
    // Sup-norm parameter movement: tracks recovery error directly, where the
    // objective change goes quadratically small near the optimum.
    const double moved = std::max({std::abs(res.alpha - alpha_old),
                                   (fp - fp_old).cwiseAbs().maxCoeff(),
                                   (fn - fn_old).cwiseAbs().maxCoeff()});
    if (moved <= opt.tol) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged) res.iterations = opt.max_iter;

  res.f_pos = ResponseCurve(fp);
  res.f_neg = ResponseCurve(fn);
  res.n_eff_pos = Eigen::VectorXd::Zero(Bp + 1);
  res.n_eff_neg = Eigen::VectorXd::Zero(Bn + 1);
  Eigen::VectorXd swp = Eigen::VectorXd::Zero(Bp + 1), swp2 = Eigen::VectorXd::Zero(Bp + 1);
  Eigen::VectorXd swn = Eigen::VectorXd::Zero(Bn + 1), swn2 = Eigen::VectorXd::Zero(Bn + 1);
  for (const FitRow& r : rows) {
    swp[r.kp] += r.w;
    swp2[r.kp] += r.w * r.w;
    swn[r.kn] += r.w;
    swn2[r.kn] += r.w * r.w;
  }
  for (int t = 0; t <= Bp; ++t)
    if (swp2[t] > 0.0) res.n_eff_pos[t] = swp[t] * swp[t] / swp2[t];
  for (int t = 0; t <= Bn; ++t)
    if (swn2[t] > 0.0) res.n_eff_neg[t] = swn[t] * swn[t] / swn2[t];
  return res;
}

}  // namespace cim
