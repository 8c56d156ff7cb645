// SPDX-License-Identifier: Apache-2.0
#include "hfl/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "hfl/error.hpp"

namespace hfl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uintmax_t kRootIters = 200;

// Per-device constants of the edge problem. tau(b) is the upload time of one
// model over bandwidth b.
struct Terms {
  double a = 0.0;  // cycles per local round, L*u*D
  double c = 0.0;  // compute energy per f^2
  double p = 0.0;
  double y = 0.0;  // g*p/N0, in Hz
  double z = 0.0;
  double fmax = 0.0;

  double rate(double b) const { return b * std::log1p(y / b) / std::numbers::ln2; }
  double tau(double b) const { return z / rate(b); }
  double dtau(double b) const {
    const double x = y / b;
    const double l = std::log1p(x);
    const double r = b * l / std::numbers::ln2;
    const double dr = (l - x / (1.0 + x)) / std::numbers::ln2;
    return -z * dr / (r * r);
  }
  double tau_floor() const { return z * std::numbers::ln2 / y; }  // upload time as b -> inf
};

class EdgeSolver {
 public:
  explicit EdgeSolver(const AllocRequest& req) : req_(req) {
    bandwidth_ = req.edge.bandwidth_hz;
    fmin_ = req.min_freq_hz;
    bits_ = std::clamp(static_cast<int>(std::ceil(-std::log2(req.tolerance))), 4, 30);
    const auto& prm = req.params;
    for (const auto& m : req.members) {
      Terms t;
      t.a = prm.local_iters * m.device.cycles_per_sample * static_cast<double>(m.device.num_samples);
      t.c = prm.alpha / 2.0 * t.a;
      t.p = m.device.tx_power_w;
      t.y = m.gain * m.device.tx_power_w / prm.noise_psd_w_per_hz;
      t.z = prm.model_bits;
      t.fmax = m.device.max_freq_hz;
      if (!(t.y > 0.0) || !std::isfinite(t.y)) {
        throw InfeasibleError("device " + std::to_string(m.device.id) + " has no usable uplink to edge " +
                              std::to_string(req.edge.id));
      }
      if (!(t.fmax >= fmin_)) {
        throw InfeasibleError("device " + std::to_string(m.device.id) + " has f_max below the solver floor");
      }
      terms_.push_back(t);
    }
    b_.resize(terms_.size());
    f_.resize(terms_.size());
  }

  AllocResult solve() {
    const std::size_t n = terms_.size();
    const double t_feas = feasible_deadline();

    // At an unbounded deadline every device idles at f_min; the energy-only
    // bandwidth split bounds the useful deadline range.
    inner(kInf);
    double t_hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) t_hi = std::max(t_hi, terms_[i].a / fmin_ + terms_[i].tau(b_[i]));
    t_hi = std::max(t_hi, t_feas * (1.0 + 1e-6));

    const double q = req_.params.edge_iters;
    const double lambda = req_.params.lambda;
    const TimeEnergy cloud = cloud_cost(req_.edge, req_.cloud_gain, req_.params);
    const double cloud_objective = cloud.energy + lambda * cloud.time;
    auto outer = [&](double log_t) {
      const double t = std::exp(log_t);
      const double value = q * (inner(t) + lambda * t);
      if (req_.record_trace) trace_.emplace_back(t, cloud_objective + value);
      return value;
    };

    const int bits = std::min(bits_ + 4, std::numeric_limits<double>::digits / 2);
    std::uintmax_t outer_iters = std::min<std::uintmax_t>(req_.max_iterations, 500);
    const auto best = boost::math::tools::brent_find_minima(outer, std::log(t_feas), std::log(t_hi), bits,
                                                            outer_iters);
    iterations_ += outer_iters;
    if (outer_iters >= std::min<std::uintmax_t>(req_.max_iterations, 500)) converged_ = false;

    double t_best = std::exp(best.first);
    if (outer(std::log(t_feas)) < best.second) t_best = t_feas;
    inner(t_best);

    AllocResult res;
    for (std::size_t i = 0; i < n; ++i) {
      const DeviceId id = req_.members[i].device.id;
      res.allocation.bandwidth[id] = b_[i];
      res.allocation.frequency[id] = f_[i];
    }
    res.cost = evaluate(res.allocation);
    res.objective = res.cost.energy + lambda * res.cost.time;
    res.iterations = iterations_;
    res.converged = converged_ && std::isfinite(res.objective) && iterations_ <= req_.max_iterations;
    res.trace = std::move(trace_);
    return res;
  }

  TimeEnergy evaluate(const Allocation& alloc) const {
    const auto& prm = req_.params;
    double slowest = 0.0;
    double energy = 0.0;
    for (const auto& m : req_.members) {
      const double b = alloc.bandwidth.at(m.device.id);
      const double f = alloc.frequency.at(m.device.id);
      const TimeEnergy com = comm_time_energy(m.device, m.gain, b, prm);
      slowest = std::max(slowest, compute_time(m.device, f, prm.local_iters) + com.time);
      energy += compute_energy(m.device, f, prm.local_iters, prm.alpha) + com.energy;
    }
    const TimeEnergy cloud = cloud_cost(req_.edge, req_.cloud_gain, prm);
    return {cloud.time + prm.edge_iters * slowest, cloud.energy + prm.edge_iters * energy};
  }

 private:
  double freq(const Terms& d, double t, double b) const {
    if (t == kInf) return fmin_;
    const double slack = t - d.tau(b);
    if (slack <= d.a / d.fmax) return d.fmax;
    return std::max(fmin_, d.a / slack);
  }

  // Smallest bandwidth that meets deadline t at f_max; +inf when none does.
  double required_bandwidth(const Terms& d, double t) const {
    if (t == kInf) return 0.0;
    const double s = t - d.a / d.fmax;
    if (s <= d.tau_floor()) return kInf;
    const double target = d.z / s;
    double hi = bandwidth_;
    while (d.rate(hi) < target) {
      hi *= 2.0;
      if (!std::isfinite(hi)) return kInf;
    }
    double lo = hi / 2.0;
    while (d.rate(lo) >= target) {
      lo /= 2.0;
      if (lo < std::numeric_limits<double>::min()) return lo;
    }
    std::uintmax_t it = kRootIters;
    auto r = boost::math::tools::toms748_solve([&](double b) { return d.rate(b) - target; }, lo, hi,
                                               boost::math::tools::eps_tolerance<double>(bits_ + 16), it);
    return r.second;
  }

  // Minimal deadline for which the required bandwidths fit in B_m.
  double feasible_deadline() {
    const std::size_t n = terms_.size();
    double t0 = 0.0;
    double t_eq = 0.0;
    for (const auto& d : terms_) {
      t0 = std::max(t0, d.a / d.fmax + d.tau(bandwidth_));
      t_eq = std::max(t_eq, d.a / d.fmax + d.tau(bandwidth_ / static_cast<double>(n)));
    }
    auto excess = [&](double t) {
      double sum = 0.0;
      for (const auto& d : terms_) sum += required_bandwidth(d, t);
      return sum - bandwidth_;
    };
    const double e0 = excess(t0);
    if (e0 <= 0.0) return t0;
    if (excess(t_eq) > 0.0) t_eq *= 1.0 + 1e-12;
    std::uintmax_t it = kRootIters;
    auto r = boost::math::tools::toms748_solve(excess, t0, t_eq, e0, excess(t_eq),
                                               boost::math::tools::eps_tolerance<double>(bits_ + 16), it);
    iterations_ += it;
    double t = r.second;
    while (excess(t) > 0.0) t *= 1.0 + 1e-12;
    return t;
  }

  // Derivative of the device's priced energy w.r.t. its bandwidth, and the
  // derivative of that.
  std::pair<double, double> marginal(const Terms& d, double t, double b, double mu) const {
    constexpr double ln2 = std::numbers::ln2;
    const double x = d.y / b;
    const double l = std::log1p(x);
    const double r = b * l / ln2;
    const double dr = (l - x / (1.0 + x)) / ln2;
    const double ddr = -x * x / (b * (1.0 + x) * (1.0 + x) * ln2);
    const double dtau = -d.z * dr / (r * r);
    const double ddtau = -d.z * ddr / (r * r) + 2.0 * d.z * dr * dr / (r * r * r);
    double w = d.p;
    double dw = 0.0;
    if (t != kInf) {
      const double slack = t - d.z / r;
      if (d.a / slack > fmin_) {
        const double k = 2.0 * d.c * d.a * d.a;
        const double s3 = slack * slack * slack;
        w += k / s3;
        dw = 3.0 * k * dtau / (s3 * slack);
      }
    }
    return {dtau * w + mu, ddtau * w + dtau * dw};
  }

  // Safeguarded Newton on the stationarity condition, warm-started at `guess`.
  // Returns the bandwidth and its sensitivity to the price.
  std::pair<double, double> device_bandwidth(const Terms& d, double t, double mu, double lo, double guess) const {
    if (marginal(d, t, bandwidth_, mu).first <= 0.0) return {bandwidth_, 0.0};
    if (marginal(d, t, lo, mu).first >= 0.0) return {lo, 0.0};
    const double rel = std::ldexp(1.0, -(bits_ + 16));
    double left = lo;
    double right = bandwidth_;
    double b = (guess > left && guess < right) ? guess : std::sqrt(left * right);
    for (std::size_t it = 0; it < kRootIters; ++it) {
      const auto [g, dg] = marginal(d, t, b, mu);
      if (g < 0.0) {
        left = b;
      } else {
        right = b;
      }
      double next = b - g / dg;
      if (!(dg > 0.0) || !(next > left && next < right)) next = std::sqrt(left * right);
      if (std::abs(next - b) <= rel * b || right - left <= rel * right) {
        return {next, dg > 0.0 ? -1.0 / dg : 0.0};
      }
      b = next;
    }
    return {b, 0.0};
  }

  // Minimum device energy per edge iteration under deadline t; fills b_ and f_.
  double inner(double t) {
    const std::size_t n = terms_.size();
    std::vector<double> lo(n);
    double mu_hi = 0.0;
    double mu_lo = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = std::max(required_bandwidth(terms_[i], t), bandwidth_ * 1e-12);
      if (!std::isfinite(lo[i]) || lo[i] > bandwidth_) return kInf;
      mu_hi = std::max(mu_hi, -marginal(terms_[i], t, lo[i], 0.0).first);
      mu_lo = std::min(mu_lo, -marginal(terms_[i], t, bandwidth_, 0.0).first);
    }
    // Relative bandwidth excess at price exp(x) and its slope in x.
    auto excess = [&](double x) {
      const double mu = std::exp(x);
      double sum = 0.0;
      double slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto [b, db] = device_bandwidth(terms_[i], t, mu, lo[i], b_[i]);
        b_[i] = b;
        sum += b;
        slope += db * mu;
      }
      return std::make_pair(sum / bandwidth_ - 1.0, slope / bandwidth_);
    };

    // Below mu_lo every device takes the whole band, above mu_hi every device
    // sits at its deadline minimum. Newton on log(mu), bisection fallback.
    if (n > 1) {
      double left = std::log(mu_lo);
      double right = std::log(mu_hi) + 1e-9;
      double x = (last_log_mu_ > left && last_log_mu_ < right) ? last_log_mu_ : 0.5 * (left + right);
      const double eps = std::ldexp(1.0, -(bits_ + 10));
      std::size_t it = 0;
      for (; it < kRootIters; ++it) {
        const auto [e, de] = excess(x);
        if (std::abs(e) <= eps) break;
        if (e > 0.0) {
          left = x;
        } else {
          right = x;
        }
        double next = x - e / de;
        if (!(de < 0.0) || !(next > left && next < right)) next = 0.5 * (left + right);
        if (right - left <= eps * std::max(1.0, std::abs(x))) {
          x = next;
          excess(x);
          break;
        }
        x = next;
      }
      iterations_ += it + 1;
      if (it >= kRootIters) converged_ = false;
      last_log_mu_ = x;
    } else {
      b_[0] = bandwidth_;
    }

    // Hand any leftover spectrum back pro rata; this only shortens uploads.
    double sum = 0.0;
    for (double b : b_) sum += b;
    if (sum > 0.0) {
      for (double& b : b_) b *= bandwidth_ / sum;
    }

    double energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      f_[i] = freq(terms_[i], t, b_[i]);
      energy += terms_[i].c * f_[i] * f_[i] + terms_[i].p * terms_[i].tau(b_[i]);
    }
    return energy;
  }

  const AllocRequest& req_;
  std::vector<Terms> terms_;
  double bandwidth_ = 0.0;
  double fmin_ = 0.0;
  double last_log_mu_ = kInf;
  int bits_ = 14;  // binary digits implied by the objective tolerance
  std::vector<double> b_;
  std::vector<double> f_;
  std::size_t iterations_ = 0;
  bool converged_ = true;
  std::vector<std::pair<double, double>> trace_;
};

}  // namespace

AllocRequest make_request(const Topology& topo, EdgeId edge, const std::vector<DeviceId>& members,
                          const CostParams& params, double tolerance) {
  AllocRequest req;
  req.edge = topo.edges.at(edge);
  req.cloud_gain = topo.channel.cloud_gain(edge);
  req.params = params;
  req.tolerance = tolerance;
  for (DeviceId id : members) req.members.push_back({topo.devices.at(id), topo.channel.gain(id, edge)});
  return req;
}

AllocResult solve_edge(const AllocRequest& req) {
  if (req.members.empty()) throw ContractViolation("solve_edge: member set is empty");
  if (!(req.tolerance > 0.0)) throw ConfigError("solve_edge: tolerance must be positive");
  if (!(req.edge.bandwidth_hz > 0.0)) throw ConfigError("solve_edge: edge bandwidth must be positive");
  req.params.validate();
  EdgeSolver solver(req);
  return solver.solve();
}

SystemAllocation allocate_all(const AssignmentPattern& pattern, const Topology& topo, const CostParams& params,
                              double tolerance) {
  SystemAllocation out;
  out.per_edge.resize(pattern.num_edges());
  for (EdgeId m = 0; m < pattern.num_edges(); ++m) {
    if (pattern.groups[m].empty()) continue;
    try {
      out.per_edge[m] = solve_edge(make_request(topo, m, pattern.groups[m], params, tolerance));
    } catch (const InfeasibleError& e) {
      throw InfeasibleError("edge " + std::to_string(m) + ": " + e.what());
    }
    out.allocation.merge(out.per_edge[m].allocation);
  }
  out.report = round_report(pattern, out.allocation, topo, params);
  return out;
}

}  // namespace hfl
