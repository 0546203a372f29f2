#include "ppn/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ppn {

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::SpikePeak: return "spike_peak";
    case EventKind::UpCross: return "up_cross";
    case EventKind::DownCross: return "down_cross";
    case EventKind::StimulusEdge: return "stimulus_edge";
  }
  return "?";
}

Vec Trace::state_at(double t) const {
  if (times.empty()) throw ModelError("empty trace");
  if (t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  const size_t i = index_before(t);
  const double w = (t - times[i]) / (times[i + 1] - times[i]);
  return states[i] * (1.0 - w) + states[i + 1] * w;
}

size_t Trace::index_before(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0;
  return static_cast<size_t>(std::distance(times.begin(), it)) - 1;
}

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct ActivePiece {
  bool is_ramp = false;
  double level = 0, slope = 0, offset = 0, t0 = 0;
  double operator()(double t) const { return is_ramp ? offset + slope * (t - t0) : level; }
  double rate() const { return is_ramp ? slope : 0.0; }
};

ActivePiece active_piece(const Stimulus& stim, double t_mid) {
  for (const auto& p : stim.pieces)
    if (t_mid >= p.t0 && t_mid < p.t1)
      return ActivePiece{p.is_ramp, p.level, p.slope, p.offset, p.t0};
  return ActivePiece{false, stim.holding, 0, 0, 0};
}

// Continuous extension of one accepted step.
struct DenseSegment {
  double t = 0, h = 0;
  Vec r1, r2, r3, r4, r5;
  Vec eval(double theta) const {
    const double th1 = 1.0 - theta;
    return r1 + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)));
  }
  double eval_v(double theta) const {
    const double th1 = 1.0 - theta;
    return r1[0] + theta * (r2[0] + th1 * (r3[0] + theta * (r4[0] + th1 * r5[0])));
  }
};

// Golden-section maximization of V over the dense segment.
std::pair<double, double> max_v_on_segment(const DenseSegment& seg, double lo = 0.0,
                                           double hi = 1.0) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = seg.eval_v(x1), f2 = seg.eval_v(x2);
  for (int it = 0; it < 80 && (b - a) > 1e-12; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = seg.eval_v(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = seg.eval_v(x1);
    }
  }
  const double theta = 0.5 * (a + b);
  return {theta, seg.eval_v(theta)};
}

double cross_theta(const DenseSegment& seg, double thr, double lo, double hi) {
  double a = lo, b = hi;
  double fa = seg.eval_v(a) - thr;
  for (int it = 0; it < 90; ++it) {
    const double mid = 0.5 * (a + b);
    const double fm = seg.eval_v(mid) - thr;
    if (fa * fm <= 0.0) {
      b = mid;
    } else {
      a = mid;
      fa = fm;
    }
  }
  return 0.5 * (a + b);
}

struct EventTracker {
  double threshold;
  bool armed = false;
  std::vector<Event>* events;

  void scan(const DenseSegment& seg) {
    // Threshold crossings: scan a few subpoints for robustness.
    constexpr int kSub = 8;
    double tprev = 0.0, vprev = seg.eval_v(0.0);
    struct Hit {
      double theta;
      bool up;
    };
    std::vector<Hit> hits;
    for (int i = 1; i <= kSub; ++i) {
      const double th = static_cast<double>(i) / kSub;
      const double v = seg.eval_v(th);
      if ((vprev - threshold) * (v - threshold) < 0.0)
        hits.push_back({cross_theta(seg, threshold, tprev, th), v > vprev});
      tprev = th;
      vprev = v;
    }
    // Local maximum inside the step (dV/dt sign change is detected by the
    // caller via stage derivatives; here just locate it if V is above
    // threshold anywhere and we are armed).
    for (const auto& hit : hits) {
      const double t_ev = seg.t + hit.theta * seg.h;
      if (hit.up) {
        events->push_back({t_ev, EventKind::UpCross, threshold});
        armed = true;
      } else {
        events->push_back({t_ev, EventKind::DownCross, threshold});
        armed = false;
      }
    }
  }

  void scan_peak(const DenseSegment& seg, double dv_begin, double dv_end) {
    if (!armed || dv_begin <= 0.0 || dv_end >= 0.0) return;
    auto [theta, v] = max_v_on_segment(seg);
    if (v < threshold) return;
    events->push_back({seg.t + theta * seg.h, EventKind::SpikePeak, v});
    armed = false;
  }
};

}  // namespace

Trace integrate(const ModelSpec& m, const Vec& x0, const Stimulus& stim,
                std::pair<double, double> t_span, const IntegratorConfig& cfg) {
  const int n = m.dim();
  if (x0.size() != n) throw ModelError("state dimension mismatch");
  if (!(t_span.second > t_span.first)) throw ModelError("empty integration span");

  Trace tr;
  tr.names = m.names;

  const Vec atol = cfg.abs_tol_for(m);
  const double rtol = cfg.rel_tol;

  // Breakpoints from stimulus edges, clipped to the span.
  std::vector<double> cuts;
  cuts.push_back(t_span.first);
  for (double b : stim.breakpoints())
    if (b > t_span.first && b < t_span.second) cuts.push_back(b);
  cuts.push_back(t_span.second);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             cuts.end());

  // Dense sampling grid.
  const double dt = cfg.dense_output_dt;
  long sample_idx = 0;
  auto next_sample_time = [&]() { return t_span.first + dt * static_cast<double>(sample_idx); };

  Vec y = x0;
  auto push_sample = [&](double t, const Vec& s, double i_now) {
    tr.times.push_back(t);
    tr.states.push_back(s);
    tr.applied.push_back(i_now);
  };

  EventTracker tracker{cfg.spike_threshold, x0[0] >= cfg.spike_threshold, &tr.events};

  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y1(n), yerr(n);
  DenseSegment seg;

  for (size_t ci = 0; ci + 1 < cuts.size(); ++ci) {
    const double t_begin = cuts[ci], t_end = cuts[ci + 1];
    if (ci > 0) tr.events.push_back({t_begin, EventKind::StimulusEdge, y[0]});
    const ActivePiece current = active_piece(stim, 0.5 * (t_begin + t_end));

    if (ci == 0 && sample_idx == 0 && next_sample_time() <= t_begin + 1e-12) {
      push_sample(t_span.first, y, current(t_begin));
      ++sample_idx;
    }

    double t = t_begin;
    double h = std::min({cfg.init_step, cfg.max_step, t_end - t_begin});
    rhs(m, y, current(t), k1);
    bool rejected = false;

    while (t < t_end - 1e-12) {
      h = std::min(h, t_end - t);
      if (h < 1e-13 * std::max(1.0, std::abs(t))) {
        tr.failure = IntegrationFailure{t, "step size underflow"};
        return tr;
      }

      ytmp = y + h * (a21 * k1);
      rhs(m, ytmp, current(t + c2 * h), k2);
      ytmp = y + h * (a31 * k1 + a32 * k2);
      rhs(m, ytmp, current(t + c3 * h), k3);
      ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
      rhs(m, ytmp, current(t + c4 * h), k4);
      ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      rhs(m, ytmp, current(t + c5 * h), k5);
      ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      rhs(m, ytmp, current(t + h), k6);
      y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      rhs(m, y1, current(t + h), k7);
      yerr = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double err = 0.0;
      for (int i = 0; i < n; ++i) {
        const double sc = atol[i] + rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
        const double q = yerr[i] / sc;
        err += q * q;
      }
      err = std::sqrt(err / n);
      if (!std::isfinite(err)) err = 1e10;

      if (err <= 1.0) {
        // Accepted: build dense output, scan events, emit samples.
        seg.t = t;
        seg.h = h;
        seg.r1 = y;
        seg.r2 = y1 - y;
        seg.r3 = h * k1 - seg.r2;
        seg.r4 = seg.r2 - h * k7 - seg.r3;
        seg.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

        tracker.scan_peak(seg, k1[0], k7[0]);
        tracker.scan(seg);

        while (next_sample_time() <= t + h + 1e-12 && next_sample_time() <= t_span.second + 1e-12) {
          const double ts = next_sample_time();
          const double theta = std::clamp((ts - t) / h, 0.0, 1.0);
          push_sample(ts, seg.eval(theta), current(ts));
          ++sample_idx;
        }

        t += h;
        y = y1;
        k1 = k7;  // FSAL
        const double fac = std::clamp(0.9 * std::pow(err > 1e-30 ? 1.0 / err : 1e30, 0.2), 0.2,
                                      rejected ? 1.0 : 5.0);
        h = std::min(h * fac, cfg.max_step);
        rejected = false;
      } else {
        h *= std::clamp(0.9 * std::pow(1.0 / err, 0.2), 0.1, 0.9);
        rejected = true;
      }
    }
  }

  // Make sure the final time is present.
  if (tr.times.empty() || tr.times.back() < t_span.second - 1e-9) {
    push_sample(t_span.second, y, stim(t_span.second - 1e-9));
  }
  std::sort(tr.events.begin(), tr.events.end(),
            [](const Event& a, const Event& b) { return a.time < b.time; });
  return tr;
}

Vec integrate_to(const ModelSpec& m, const Vec& x0, double i_app, double duration,
                 const IntegratorConfig& cfg) {
  IntegratorConfig c = cfg;
  c.dense_output_dt = duration;  // endpoints only
  Trace tr = integrate(m, x0, Stimulus::constant(i_app), {0.0, duration}, c);
  if (tr.failure) throw ModelError("integration failure at t=" + std::to_string(tr.failure->time));
  return tr.states.back();
}

SettleResult settle(const ModelSpec& m, double i_hold, const IntegratorConfig& cfg,
                    double max_time, std::optional<Vec> start) {
  Vec x = start ? *start : initial_state(m);
  const int chunks = 8;
  const double chunk = max_time / chunks;
  double res = rhs(m, x, i_hold).cwiseAbs().maxCoeff();
  for (int i = 0; i < chunks && res > 1e-9; ++i) {
    x = integrate_to(m, x, i_hold, chunk, cfg);
    res = rhs(m, x, i_hold).cwiseAbs().maxCoeff();
  }

  SettleResult out;
  out.state = x;
  out.residual = res;

  auto newton_eq = [&](Vec xn) -> std::optional<Vec> {
    for (int it = 0; it < 60; ++it) {
      Vec f = rhs(m, xn, i_hold);
      if (f.cwiseAbs().maxCoeff() < 1e-11) return xn;
      Mat J = jacobian(m, xn, i_hold);
      Vec step = J.fullPivLu().solve(-f);
      if (!step.allFinite()) return std::nullopt;
      xn += step;
    }
    return std::nullopt;
  };
  auto max_re = [&](const Vec& xe) {
    Eigen::EigenSolver<Mat> es(jacobian(m, xe, i_hold));
    double r = -1e300;
    for (int i = 0; i < es.eigenvalues().size(); ++i) r = std::max(r, es.eigenvalues()[i].real());
    return r;
  };

  const Vec scales = state_scales(m);
  if (res <= 1e-3) {
    // The trajectory reached a stationary point; polish it.
    if (auto xe = newton_eq(x)) {
      if (((*xe - x).cwiseQuotient(scales)).cwiseAbs().maxCoeff() < 0.2) {
        out.state = *xe;
        out.residual = rhs(m, *xe, i_hold).cwiseAbs().maxCoeff();
        out.stationary = true;
        return out;
      }
    }
  }
  (void)max_re;
  return out;
}

SettleResult settle_to_equilibrium(const ModelSpec& m, double i_hold,
                                   const IntegratorConfig& cfg) {
  SettleResult out;
  auto roots = scalar_reduction_roots(m, i_hold);
  double best_mre = 1e300;
  bool found = false;
  for (double r : roots) {
    Vec xn = steady_state_at(m, r);
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      Vec f = rhs(m, xn, i_hold);
      if (f.cwiseAbs().maxCoeff() < 1e-11) {
        ok = true;
        break;
      }
      Mat J = jacobian(m, xn, i_hold);
      Vec step = J.fullPivLu().solve(-f);
      if (!step.allFinite()) break;
      xn += step;
    }
    if (!ok) continue;
    Eigen::EigenSolver<Mat> es(jacobian(m, xn, i_hold));
    double mre = -1e300;
    for (int i = 0; i < es.eigenvalues().size(); ++i) mre = std::max(mre, es.eigenvalues()[i].real());
    // prefer the most stable equilibrium
    if (!found || mre < best_mre) {
      out.state = xn;
      out.residual = rhs(m, xn, i_hold).cwiseAbs().maxCoeff();
      out.stationary = mre < 0.0;
      best_mre = mre;
      found = true;
    }
  }
  if (!found) return settle(m, i_hold, cfg);
  return out;
}

std::vector<double> detect_spikes(const Trace& tr, double threshold, double refractory) {
  std::vector<double> spikes;
  if (tr.times.size() < 3) return spikes;
  bool armed = tr.states.front()[0] >= threshold;
  double best_v = -1e300, best_t = 0;
  bool have_peak = false;
  auto flush = [&]() {
    if (!have_peak) return;
    if (spikes.empty() || best_t - spikes.back() >= refractory) spikes.push_back(best_t);
    have_peak = false;
    best_v = -1e300;
  };
  for (size_t i = 1; i < tr.times.size(); ++i) {
    const double v = tr.states[i][0];
    const double vp = tr.states[i - 1][0];
    if (!armed && vp < threshold && v >= threshold) armed = true;
    if (armed) {
      if (v > best_v) {
        best_v = v;
        best_t = tr.times[i];
        // parabolic refinement around the sample
        if (i + 1 < tr.times.size()) {
          const double y0 = vp, y1 = v, y2 = tr.states[i + 1][0];
          const double denom = y0 - 2 * y1 + y2;
          if (std::abs(denom) > 1e-14) {
            const double delta = 0.5 * (y0 - y2) / denom;
            if (std::abs(delta) <= 1.0)
              best_t = tr.times[i] + delta * (tr.times[i] - tr.times[i - 1]);
          }
        }
        have_peak = true;
      }
      if (v < threshold) {  // down-crossing closes the spike
        armed = false;
        flush();
      }
    }
  }
  return spikes;
}

std::vector<Peak> detect_peaks(const Trace& tr, double min_prominence) {
  std::vector<Peak> peaks;
  const size_t n = tr.times.size();
  if (n < 3) return peaks;
  std::vector<double> v(n);
  for (size_t i = 0; i < n; ++i) v[i] = tr.states[i][0];

  for (size_t i = 1; i + 1 < n; ++i) {
    if (!(v[i] > v[i - 1] && v[i] >= v[i + 1])) continue;
    // prominence: lowest point between this peak and the nearest higher
    // terrain on each side
    double left_min = v[i];
    for (size_t j = i; j-- > 0;) {
      left_min = std::min(left_min, v[j]);
      if (v[j] > v[i]) break;
    }
    double right_min = v[i];
    for (size_t j = i + 1; j < n; ++j) {
      right_min = std::min(right_min, v[j]);
      if (v[j] > v[i]) break;
    }
    const double prom = v[i] - std::max(left_min, right_min);
    if (prom < min_prominence) continue;
    double t = tr.times[i];
    const double denom = v[i - 1] - 2 * v[i] + v[i + 1];
    if (std::abs(denom) > 1e-14) {
      const double delta = 0.5 * (v[i - 1] - v[i + 1]) / denom;
      if (std::abs(delta) <= 1.0) t += delta * (tr.times[i] - tr.times[i - 1]);
    }
    peaks.push_back({t, v[i], prom});
  }
  return peaks;
}

std::vector<double> interspike_intervals(const std::vector<double>& spikes) {
  std::vector<double> isis;
  for (size_t i = 1; i < spikes.size(); ++i) isis.push_back(spikes[i] - spikes[i - 1]);
  return isis;
}

}  // namespace ppn
