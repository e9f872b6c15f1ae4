#include "ahx/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <queue>

namespace ahx {

namespace {

QuadRule build_gl(int n) {
  QuadRule r;
  r.x.assign(n, 0.0);
  r.w.assign(n, 0.0);
  if (n == 1) {
    r.w[0] = 2.0;
    return r;
  }
  const double pi = std::acos(-1.0);
  auto legendre = [n](double x, double& dp) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    return p1;
  };
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double dx = legendre(x, dp) / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre(x, dp);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    r.w[i] = w;
    r.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}

// Kronrod 15 / Gauss 7 abscissae and weights on [-1, 1].
constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Interval {
  double a, b, value, error;
  bool operator<(const Interval& o) const { return error < o.error; }
};

Interval gk15(const std::function<double(double)>& f, double a, double b, int& evals) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double resk = fc * kWgk[7];
  double resg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double f1 = f(c - dx), f2 = f(c + dx);
    resk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  evals += 15;
  return {a, b, resk * h, std::abs((resk - resg) * h)};
}

}  // namespace

const QuadRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, QuadRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_gl(n)).first;
  return it->second;
}

QuadRule gauss_legendre(int n, double a, double b) {
  QuadRule r = gauss_legendre(n);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    r.x[i] = c + h * r.x[i];
    r.w[i] *= h;
  }
  return r;
}

AdaptiveResult integrate_gk(const std::function<double(double)>& f, const std::vector<double>& breaks,
                            double abs_tol, double rel_tol, int max_intervals) {
  AdaptiveResult res;
  std::priority_queue<Interval> heap;
  double total = 0.0, err = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] == breaks[i]) continue;
    Interval iv = gk15(f, breaks[i], breaks[i + 1], res.evaluations);
    total += iv.value;
    err += iv.error;
    heap.push(iv);
  }
  int count = static_cast<int>(heap.size());
  while (!heap.empty() && err > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (count >= max_intervals) {
      res.converged = false;
      break;
    }
    Interval iv = heap.top();
    heap.pop();
    const double m = 0.5 * (iv.a + iv.b);
    if (m == iv.a || m == iv.b) {
      res.converged = false;
      break;
    }
    Interval l = gk15(f, iv.a, m, res.evaluations);
    Interval r = gk15(f, m, iv.b, res.evaluations);
    total += l.value + r.value - iv.value;
    err += l.error + r.error - iv.error;
    heap.push(l);
    heap.push(r);
    ++count;
  }
  // re-sum to limit cancellation drift
  double sum = 0.0, esum = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    esum += heap.top().error;
    heap.pop();
  }
  res.value = sum;
  res.error = esum;
  return res;
}

AdaptiveResult integrate_gk(const std::function<double(double)>& f, double a, double b, double abs_tol,
                            double rel_tol, int max_intervals) {
  return integrate_gk(f, std::vector<double>{a, b}, abs_tol, rel_tol, max_intervals);
}

}  // namespace ahx
