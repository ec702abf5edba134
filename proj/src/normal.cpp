#include "tslr/normal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

namespace tslr {

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double norm_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double norm_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

namespace {

constexpr double kPivotEps = 1e-10;

struct OrderedFactor {
  Eigen::MatrixXd chol;
  std::vector<double> upper;
};

// Lower Cholesky factor with Genz-Bretz variable prioritization: at each step
// the remaining coordinate with the smallest conditional probability goes
// next, conditioning on the truncated means of those already placed. Zero
// pivots (semidefinite input) leave their column empty.
OrderedFactor ordered_cholesky(const Eigen::MatrixXd& corr,
                               std::span<const double> upper) {
  const Eigen::Index m = corr.rows();
  Eigen::MatrixXd c = corr;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
  std::vector<double> b(upper.begin(), upper.end());
  std::vector<double> y(static_cast<std::size_t>(m), 0.0);

  auto conditional = [&](Eigen::Index j, Eigen::Index i, double& num,
                         double& den2) {
    num = b[static_cast<std::size_t>(j)];
    den2 = c(j, j);
    for (Eigen::Index k = 0; k < i; ++k) {
      num -= l(j, k) * y[static_cast<std::size_t>(k)];
      den2 -= l(j, k) * l(j, k);
    }
  };

  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::Index best = i;
    double best_prob = 2.0;
    for (Eigen::Index j = i; j < m; ++j) {
      double num, den2;
      conditional(j, i, num, den2);
      // Degenerate candidates go last.
      const double prob =
          den2 > kPivotEps ? norm_cdf(num / std::sqrt(den2)) : 1.5;
      if (prob < best_prob) {
        best_prob = prob;
        best = j;
      }
    }
    if (best != i) {
      c.row(i).swap(c.row(best));
      c.col(i).swap(c.col(best));
      l.row(i).swap(l.row(best));
      std::swap(b[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(best)]);
    }

    double num, den2;
    conditional(i, i, num, den2);
    if (den2 < -1e-8) throw std::domain_error("correlation matrix not PSD");
    if (den2 <= kPivotEps) {
      y[static_cast<std::size_t>(i)] = 0.0;
      continue;
    }
    const double d = std::sqrt(den2);
    l(i, i) = d;
    for (Eigen::Index r = i + 1; r < m; ++r) {
      double t = c(r, i);
      for (Eigen::Index k = 0; k < i; ++k) t -= l(r, k) * l(i, k);
      l(r, i) = t / d;
    }
    // Mean of a standard normal truncated to (-inf, a].
    const double a = num / d;
    const double phi = std::exp(-0.5 * a * a) / std::sqrt(2.0 * std::numbers::pi);
    const double cdf = norm_cdf(a);
    y[static_cast<std::size_t>(i)] = cdf > 1e-300 ? -phi / cdf : a;
  }
  return {std::move(l), std::move(b)};
}

// Separation-of-variables integrand over the active (non-zero pivot)
// coordinates. A row with a zero pivot is a linear combination of earlier
// coordinates; its constraint is folded into the bounds of the last active
// coordinate it depends on, which keeps the integrand continuous.
class GenzIntegrand {
 public:
  GenzIntegrand(std::vector<double> upper, Eigen::MatrixXd chol)
      : b_(std::move(upper)), l_(std::move(chol)), y_(b_.size(), 0.0) {
    const auto m = static_cast<Eigen::Index>(b_.size());
    std::vector<std::vector<Constraint>> by_row(b_.size());
    for (Eigen::Index i = 0; i < m; ++i) {
      if (l_(i, i) > 0.0) {
        by_row[static_cast<std::size_t>(i)].push_back({i, l_(i, i)});
        continue;
      }
      Eigen::Index k = i - 1;
      while (k >= 0 && std::abs(l_(i, k)) <= kCoefEps) --k;
      if (k < 0) {
        if (b_[static_cast<std::size_t>(i)] < 0.0) impossible_ = true;
        continue;
      }
      by_row[static_cast<std::size_t>(k)].push_back({i, l_(i, k)});
    }
    for (Eigen::Index i = 0; i < m; ++i)
      if (l_(i, i) > 0.0)
        active_.push_back({i, std::move(by_row[static_cast<std::size_t>(i)])});
  }

  // Integration dimension; the last active coordinate needs no sample.
  std::size_t dims() const {
    return active_.empty() ? 0 : active_.size() - 1;
  }

  double operator()(std::span<const double> w) {
    if (impossible_) return 0.0;
    double f = 1.0;
    for (std::size_t a = 0; a < active_.size(); ++a) {
      const Variable& v = active_[a];
      double lo = -std::numeric_limits<double>::infinity();
      double hi = std::numeric_limits<double>::infinity();
      for (const Constraint& c : v.constraints) {
        double s = b_[static_cast<std::size_t>(c.row)];
        for (Eigen::Index k = 0; k < v.index; ++k)
          s -= l_(c.row, k) * y_[static_cast<std::size_t>(k)];
        const double bound = s / c.coef;
        if (c.coef > 0.0)
          hi = std::min(hi, bound);
        else
          lo = std::max(lo, bound);
      }
      if (!(hi > lo)) return 0.0;
      const double p_lo = norm_cdf(lo);
      const double e = norm_cdf(hi) - p_lo;
      f *= e;
      if (f <= 0.0) return 0.0;
      if (a + 1 < active_.size()) {
        const double u = std::clamp(p_lo + w[a] * e, 1e-300, 1.0 - 1e-16);
        y_[static_cast<std::size_t>(v.index)] = norm_quantile(u);
      }
    }
    return f;
  }

 private:
  static constexpr double kCoefEps = 1e-12;

  struct Constraint {
    Eigen::Index row;
    double coef;
  };
  struct Variable {
    Eigen::Index index;
    std::vector<Constraint> constraints;
  };

  std::vector<double> b_;
  Eigen::MatrixXd l_;
  std::vector<double> y_;
  std::vector<Variable> active_;
  bool impossible_ = false;
};

constexpr std::array<double, 8> kPrimes{2, 3, 5, 7, 11, 13, 17, 19};
constexpr int kShifts = 12;

}  // namespace

MvnResult mvn_lower_orthant(std::span<const double> upper,
                            const Eigen::MatrixXd& corr,
                            const MvnOptions& opts) {
  const std::size_t m = upper.size();
  if (m == 0 || corr.rows() != static_cast<Eigen::Index>(m) ||
      corr.cols() != static_cast<Eigen::Index>(m))
    throw std::invalid_argument("mvn_lower_orthant: dimension mismatch");
  if (m > kPrimes.size() + 1)
    throw std::invalid_argument("mvn_lower_orthant: dimension too large");

  OrderedFactor factor = ordered_cholesky(corr, upper);
  GenzIntegrand f(std::move(factor.upper), std::move(factor.chol));
  MvnResult res;
  const std::size_t dims = f.dims();
  if (dims == 0) {
    res.value = f({});
    res.points = 1;
    return res;
  }

  // Rank-1 lattice rules. In two dimensions the Fibonacci lattice is used;
  // beyond that, Richtmyer generators sqrt(prime) mod 1.
  std::uint64_t fib_prev = 233, fib = 377;
  std::uint64_t n = dims == 2 ? fib : 256;
  std::vector<double> gen(dims);
  auto set_generator = [&] {
    if (dims == 2) {
      gen[0] = 1.0 / static_cast<double>(n);
      gen[1] = static_cast<double>(fib_prev) / static_cast<double>(n);
      return;
    }
    for (std::size_t i = 0; i < dims; ++i) {
      const double r = std::sqrt(kPrimes[i]);
      gen[i] = r - std::floor(r);
    }
  };

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> x(dims), shift(dims);

  // Each round draws fresh shifts on a larger lattice. The estimate is the
  // mean over shifts of the lattice averages from the last round.
  while (true) {
    set_generator();
    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < kShifts; ++s) {
      for (auto& v : shift) v = unif(rng);
      double acc = 0.0;
      for (std::uint64_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < dims; ++i) {
          double t = static_cast<double>(k) * gen[i];
          t = t - std::floor(t) + shift[i];
          t -= std::floor(t);
          x[i] = std::abs(2.0 * t - 1.0);  // baker's transform
        }
        acc += f(x);
        for (auto& v : x) v = 1.0 - v;
        acc += f(x);
      }
      const double mean = acc / static_cast<double>(2 * n);
      sum += mean;
      sum_sq += mean * mean;
    }
    const std::uint64_t round_points =
        static_cast<std::uint64_t>(kShifts) * 2 * n;
    res.points += round_points;
    const double est = sum / kShifts;
    const double var =
        std::max(0.0, (sum_sq - kShifts * est * est) / (kShifts - 1)) /
        kShifts;
    res.value = est;
    res.error = 3.0 * std::sqrt(var);
    if (res.error <= opts.abs_tol ||
        res.points + 2 * round_points > opts.max_points)
      break;
    if (dims == 2) {
      const std::uint64_t next = fib + fib_prev;
      fib_prev = fib;
      fib = next;
      n = fib;
    } else {
      n *= 2;
    }
  }
  res.value = std::clamp(res.value, 0.0, 1.0);
  return res;
}

}  // namespace tslr
