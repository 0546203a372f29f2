// Numerical exploration harness used during development; not a shipped test.
#include <cstdio>
#include <string>

#include "ppn/integrate.hpp"
#include "ppn/model.hpp"
#include "ppn/protocol.hpp"

using namespace ppn;

static void rest_report(Variant v) {
  ModelSpec m = build_model(v);
  IntegratorConfig cfg;
  auto s = settle(m, 0.0, cfg);
  std::printf("%-2s rest at I=0: V=%.3f stationary=%d residual=%.2e Ca=%.2f\n",
              to_string(v).c_str(), s.state[0], s.stationary, s.residual,
              s.state[m.ca_index()]);
  auto roots = scalar_reduction_roots(m, 0.0);
  std::printf("   scalar roots:");
  for (double r : roots) std::printf(" %.3f", r);
  std::printf("\n");
}

int main(int argc, char** argv) {
  std::string what = argc > 1 ? argv[1] : "rest";
  IntegratorConfig cfg;

  if (what == "rest") {
    for (auto v : {Variant::C, Variant::CT, Variant::NC}) rest_report(v);
    // holding levels used by the protocols
    {
      ModelSpec nc = build_model(Variant::NC);
      auto s = settle(nc, -0.6, cfg);
      std::printf("NC at -0.6: V=%.3f (stationary=%d)\n", s.state[0], s.stationary);
      auto s2 = settle(nc, -0.415, cfg);
      std::printf("NC at -0.415: V=%.3f (stationary=%d)\n", s2.state[0], s2.stationary);
    }
    {
      ModelSpec ct = build_model(Variant::CT);
      auto s = settle(ct, -0.95, cfg);
      std::printf("CT at -0.95: V=%.3f (stationary=%d)\n", s.state[0], s.stationary);
      auto si = settle(ct, -3.45, cfg);
      std::printf("CT at -3.45: V=%.3f (stationary=%d)\n", si.state[0], si.stationary);
    }
    {
      ModelSpec c = build_model(Variant::C);
      auto s = settle(c, 1.3, cfg);
      std::printf("C at 1.3: stationary=%d residual=%.2e V=%.3f\n", s.stationary, s.residual,
                  s.state[0]);
      auto si = settle(c, -2.7, cfg);
      std::printf("C at -2.7: V=%.3f h_A=%.3f (stationary=%d)\n", si.state[0],
                  si.state[c.index_of("h_A")], si.stationary);
    }
  } else if (what == "proto") {
    for (const char* name : {"ramp", "sdp", "delay", "pir", "pif_nc", "pif_ct", "pif_c"}) {
      auto p = make_protocol(name);
      auto r = run_protocol(p, cfg);
      std::printf("%-7s spikes=%zu", name, r.spikes.size());
      for (const auto& [k, v] : r.metrics)
        if (k != "spike_count") std::printf(" %s=%.4g", k.c_str(), v);
      if (r.spikes.size() && r.spikes.size() <= 20) {
        std::printf("\n        spike times:");
        for (double t : r.spikes) std::printf(" %.1f", t);
      }
      std::printf("\n");
    }
  } else if (what == "eig") {
    // eigenvalues at the scalar-reduction equilibria for CT at PIF/PIR baselines
    for (double volume : {7.238, 2.0, 1.0, 0.5, 0.2}) {
      ModelSpec ct = build_model(Variant::CT);
      ct.calcium.volume_pl = volume;
      std::printf("volume_pl=%.3f (kappa=%.3f)\n", volume, ct.calcium.flux_per_current());
      for (double iapp : {0.0, -0.95}) {
        auto roots = scalar_reduction_roots(ct, iapp);
        for (double r : roots) {
          Vec x = steady_state_at(ct, r);
          Eigen::EigenSolver<Mat> es(jacobian(ct, x, iapp));
          double maxre = -1e300, maxre_im = 0;
          for (int i = 0; i < es.eigenvalues().size(); ++i) {
            if (es.eigenvalues()[i].real() > maxre) {
              maxre = es.eigenvalues()[i].real();
              maxre_im = es.eigenvalues()[i].imag();
            }
          }
          std::printf("  I=%.3f root V=%.3f Ca=%.1f  max Re lambda=%.5f (Im %.4f)\n", iapp, r,
                      ca_balance(ct, r), maxre, maxre_im);
        }
      }
    }
  } else if (what == "cttrace") {
    ModelSpec ct = build_model(Variant::CT);
    if (argc > 2) ct.calcium.volume_pl = std::stod(argv[2]);
    double iapp = argc > 3 ? std::stod(argv[3]) : -0.95;
    auto s = settle(ct, iapp, cfg);
    auto tr = integrate(ct, s.state, Stimulus::constant(iapp), {0.0, 1000.0}, cfg);
    auto spikes = detect_spikes(tr);
    double vmin = 1e300, vmax = -1e300, camax = -1e300;
    for (size_t i = tr.index_before(500.0); i < tr.times.size(); ++i) {
      vmin = std::min(vmin, tr.states[i][0]);
      vmax = std::max(vmax, tr.states[i][0]);
      camax = std::max(camax, tr.states[i][ct.ca_index()]);
    }
    std::printf("CT vol=%.3f I=%.2f: spikes(1s)=%zu V in [%.2f, %.2f] (last 500ms) Ca_max=%.1f\n",
                ct.calcium.volume_pl, iapp, spikes.size(), vmin, vmax, camax);
  } else if (what == "sweep") {
    // kappa calibration: all volume-sensitive anchors at once
    for (double volume : {7.238, 12.0, 20.0, 40.0, 80.0, 200.0}) {
      std::printf("== volume_pl=%.3f kappa=%.3f\n", volume, 1.0e6 / (2 * 96485.33212 * volume));
      auto mk = [&](Variant v) {
        ModelSpec m = build_model(v);
        m.calcium.volume_pl = volume;
        return m;
      };
      // CT baseline stability
      for (double iapp : {0.0, -0.95}) {
        ModelSpec ct = mk(Variant::CT);
        auto roots = scalar_reduction_roots(ct, iapp);
        std::printf("  CT I=%.2f:", iapp);
        for (double r : roots) {
          Eigen::EigenSolver<Mat> es(jacobian(ct, steady_state_at(ct, r), iapp));
          double maxre = -1e300;
          for (int i = 0; i < es.eigenvalues().size(); ++i)
            maxre = std::max(maxre, es.eigenvalues()[i].real());
          std::printf(" V=%.1f(maxRe=%+.4f)", r, maxre);
        }
        std::printf("\n");
      }
      // NC TTX Hopf location by bisection on equilibrium stability
      {
        ModelSpec nc = mk(Variant::NC).with_blocks({ChannelId::Na});
        auto maxre_at = [&](double iapp) {
          auto roots = scalar_reduction_roots(nc, iapp, -90, 20);
          double best = -1e300;
          if (roots.empty()) return best;
          // track the depolarized equilibrium (single root expected)
          Eigen::EigenSolver<Mat> es(jacobian(nc, steady_state_at(nc, roots.back()), iapp));
          for (int i = 0; i < es.eigenvalues().size(); ++i)
            if (std::abs(es.eigenvalues()[i].imag()) > 1e-4)
              best = std::max(best, es.eigenvalues()[i].real());
          return best;
        };
        double lo = 0.0, hi = 2.0;
        double flo = maxre_at(lo);
        double hopf = -1;
        for (double i = lo + 0.05; i <= hi + 1e-9; i += 0.05) {
          double f = maxre_at(i);
          if (flo < 0 && f >= 0) {
            double a = i - 0.05, b = i;
            for (int it = 0; it < 40; ++it) {
              double mid = 0.5 * (a + b);
              if (maxre_at(mid) >= 0)
                b = mid;
              else
                a = mid;
            }
            hopf = 0.5 * (a + b);
            break;
          }
          flo = f;
        }
        std::printf("  NC TTX equilibrium Hopf at I=%.4f\n", hopf);
      }
      // ramp onset + SDP + PIR quick metrics
      {
        auto pr = make_protocol("ramp");
        auto r = run_protocol(pr, mk(Variant::NC), cfg);
        std::printf("  ramp: peaks=%zu onset=%.3f first/last isi=%.1f/%.1f\n", r.peaks.size(),
                    r.metrics.count("onset_current") ? r.metrics["onset_current"] : -1.0,
                    r.metrics.count("first_isi_ms") ? r.metrics["first_isi_ms"] : -1.0,
                    r.metrics.count("last_isi_ms") ? r.metrics["last_isi_ms"] : -1.0);
      }
      {
        auto r = run_protocol(make_protocol("sdp"), mk(Variant::NC), cfg);
        std::printf("  sdp: spikes=%zu sep=%.1f return=%.0f ca=[%.0f,%.0f] stat=%d\n",
                    r.spikes.size(),
                    r.metrics.count("spike_separation_ms") ? r.metrics["spike_separation_ms"] : -1,
                    r.metrics.count("return_time_ms") ? r.metrics["return_time_ms"] : -1,
                    r.metrics["ca_min_nM"], r.metrics["ca_max_nM"], r.settled.stationary);
        if (r.spikes.size() <= 6)
          for (double t : r.spikes) std::printf("      spike %.1f\n", t);
      }
      {
        auto r = run_protocol(make_protocol("pir"), mk(Variant::CT), cfg);
        std::printf("  pir: spikes=%zu delay=%.0f repol=%.0f ca=[%.0f,%.0f] stat=%d dec=%.0f\n",
                    r.spikes.size(), r.delay_to_first_spike ? *r.delay_to_first_spike : -1,
                    r.metrics.count("repolarization_ms") ? r.metrics["repolarization_ms"] : -1,
                    r.metrics["ca_min_nM"], r.metrics["ca_max_nM"], r.settled.stationary,
                    r.metrics.count("amplitudes_decreasing") ? r.metrics["amplitudes_decreasing"]
                                                             : -1);
      }
      {
        auto r = run_protocol(make_protocol("delay"), mk(Variant::C), cfg);
        std::printf("  delay: spikes=%zu delay=%.1f cv=%.3f\n", r.spikes.size(),
                    r.delay_to_first_spike ? *r.delay_to_first_spike : -1,
                    r.metrics.count("isi_cv") ? r.metrics["isi_cv"] : -1);
      }
    }
  } else if (what == "ma") {
    for (double mhalf : {-16.5, -36.5, -41.5, -46.5, -51.5, -56.5, -61.5}) {
      std::printf("== m_A half = %.1f\n", mhalf);
      auto mk = [&](Variant v) {
        ModelSpec m = build_model(v);
        if (m.has_channel(ChannelId::A)) m.channel(ChannelId::A).activation->p_half = mhalf;
        return m;
      };
      {
        ModelSpec ct = mk(Variant::CT);
        for (double iapp : {0.0, -0.95}) {
          auto roots = scalar_reduction_roots(ct, iapp);
          std::printf("  CT I=%.2f:", iapp);
          for (double r : roots) {
            Eigen::EigenSolver<Mat> es(jacobian(ct, steady_state_at(ct, r), iapp));
            double maxre = -1e300;
            for (int i = 0; i < es.eigenvalues().size(); ++i)
              maxre = std::max(maxre, es.eigenvalues()[i].real());
            std::printf(" V=%.1f(maxRe=%+.4f)", r, maxre);
          }
          std::printf("\n");
        }
      }
      {
        auto r = run_protocol(make_protocol("delay"), mk(Variant::C), cfg);
        int base = 0, post = 0;
        std::vector<double> post_isis;
        double prev = -1;
        for (double t : r.spikes) {
          if (t < 100) base++;
          if (t > 400 && t < 660) {
            post++;
            if (prev > 0) post_isis.push_back(t - prev);
            prev = t;
          }
        }
        double cv = -1;
        if (post_isis.size() >= 2) {
          double mu = 0, ss = 0;
          for (double x : post_isis) mu += x;
          mu /= post_isis.size();
          for (double x : post_isis) ss += (x - mu) * (x - mu);
          cv = std::sqrt(ss / (post_isis.size() - 1)) / mu;
        }
        std::printf("  delay: base_spikes=%d post_spikes=%d delay=%.1f post_cv=%.3f\n", base,
                    post, r.delay_to_first_spike ? *r.delay_to_first_spike : -1, cv);
      }
      {
        auto r = run_protocol(make_protocol("pir"), mk(Variant::CT), cfg);
        std::printf("  pir: spikes=%zu delay=%.0f repol=%.0f ca=[%.0f,%.0f] dec=%.0f\n",
                    r.spikes.size(), r.delay_to_first_spike ? *r.delay_to_first_spike : -1,
                    r.metrics.count("repolarization_ms") ? r.metrics["repolarization_ms"] : -1,
                    r.metrics["ca_min_nM"], r.metrics["ca_max_nM"],
                    r.metrics.count("amplitudes_decreasing") ? r.metrics["amplitudes_decreasing"]
                                                             : -1);
      }
    }
  } else if (what == "ma4") {
    for (double kp : {5.14, 7.0, 9.0, 12.0}) {
      for (double mhalf : {-34.0, -38.0, -42.0, -46.0, -50.0}) {
        ModelSpec c = build_model(Variant::C);
        c.channel(ChannelId::A).activation->p_half = mhalf;
        c.channel(ChannelId::A).activation->k_p = kp;
        ModelSpec ct = build_model(Variant::CT);
        ct.channel(ChannelId::A).activation->p_half = mhalf;
        ct.channel(ChannelId::A).activation->k_p = kp;
        auto roots = scalar_reduction_roots(c, 1.3);
        double veq = roots.empty() ? 0 : roots[0];
        double heq = roots.empty() ? 0 : steady_state_at(c, veq)[c.index_of("h_A")];
        Vec xd = initial_state(c, -60.0);
        auto trd = integrate(c, xd, Stimulus::constant(1.3), {0.0, 600.0}, cfg);
        int tonic = 0;
        for (double t : detect_spikes(trd))
          if (t > 300) tonic++;
        double delay = -1, hmax_inter = -1;
        if (tonic > 0) {
          auto p = make_protocol("delay");
          auto tr2 = integrate(c, trd.states.back(), p.stimulus(), {0.0, 660.0}, cfg);
          auto sp = detect_spikes(tr2);
          std::vector<double> post;
          for (double t : sp)
            if (t > 400) post.push_back(t);
          if (!post.empty()) delay = post.front() - 400.0;
          if (post.size() >= 2) {
            // interspike h_A maximum between first two resumed spikes
            const int ih = c.index_of("h_A");
            hmax_inter = 0;
            for (size_t i = tr2.index_before(post[0]); i < tr2.index_before(post[1]); ++i)
              hmax_inter = std::max(hmax_inter, tr2.states[i][ih]);
          }
        }
        // CT baseline stability at -0.95
        double ctre = 0;
        {
          auto r2 = scalar_reduction_roots(ct, -0.95);
          if (!r2.empty()) {
            Eigen::EigenSolver<Mat> es(jacobian(ct, steady_state_at(ct, r2[0]), -0.95));
            ctre = -1e300;
            for (int i = 0; i < es.eigenvalues().size(); ++i)
              ctre = std::max(ctre, es.eigenvalues()[i].real());
          }
        }
        std::printf("k=%5.2f m=%5.1f | C eq(V=%.1f h=%.3f) tonic=%d delay=%6.1f hmax=%.3f | CT maxRe %+.4f\n",
                    kp, mhalf, veq, heq, tonic, delay, hmax_inter, ctre);
      }
    }
  } else if (what == "crheo") {
    ModelSpec c = build_model(Variant::C);
    if (argc > 2) c.channel(ChannelId::A).activation->p_half = std::stod(argv[2]);
    for (double i = 0.0; i <= 6.01; i += 0.25) {
      auto roots = scalar_reduction_roots(c, i);
      if (roots.empty()) continue;
      Vec x = steady_state_at(c, roots.back());
      Eigen::EigenSolver<Mat> es(jacobian(c, x, i));
      double maxre = -1e300, im = 0;
      for (int k = 0; k < es.eigenvalues().size(); ++k)
        if (es.eigenvalues()[k].real() > maxre) {
          maxre = es.eigenvalues()[k].real();
          im = es.eigenvalues()[k].imag();
        }
      std::printf("I=%5.2f V=%7.2f maxRe=%+.5f Im=%.4f\n", i, roots.back(), maxre, im);
    }
  } else if (what == "ma3") {
    for (double mhalf : {-34.6, -34.8, -35.0, -35.2, -35.4, -35.6, -35.8, -36.0}) {
      std::printf("== m_A half %.1f\n", mhalf);
      ModelSpec c = build_model(Variant::C);
      c.channel(ChannelId::A).activation->p_half = mhalf;
      ModelSpec ct = build_model(Variant::CT);
      ct.channel(ChannelId::A).activation->p_half = mhalf;
      // C equilibrium + tonic cycle at 1.3
      {
        auto roots = scalar_reduction_roots(c, 1.3);
        std::printf("  C@1.3 eq: V=%.2f h_A=%.3f", roots[0], steady_state_at(c, roots[0])[c.index_of("h_A")]);
        Vec x0 = initial_state(c, -40.0);
        x0[c.index_of("h_A")] = 0.02;
        auto tr = integrate(c, x0, Stimulus::constant(1.3), {0.0, 800.0}, cfg);
        auto spikes = detect_spikes(tr);
        int late = 0;
        for (double t : spikes)
          if (t > 400) late++;
        std::printf("  kick spikes=%zu late=%d", spikes.size(), late);
        Vec xd = initial_state(c, -60.0);
        auto trd = integrate(c, xd, Stimulus::constant(1.3), {0.0, 800.0}, cfg);
        auto spd = detect_spikes(trd);
        std::printf("  fromrest spikes=%zu\n", spd.size());
        if (late > 0) {
          auto p = make_protocol("delay");
          auto tr2 = integrate(c, tr.states.back(), p.stimulus(), {0.0, p.total_duration}, cfg);
          auto sp = detect_spikes(tr2);
          std::vector<double> post;
          for (double t : sp)
            if (t > 400 && t < 660) post.push_back(t);
          std::printf("  delay: post=%zu delay=%.1f", post.size(),
                      post.empty() ? -1.0 : post.front() - 400.0);
          if (post.size() >= 3) {
            std::printf(" isis:");
            for (size_t i = 1; i < post.size() && i < 7; ++i) std::printf(" %.1f", post[i] - post[i - 1]);
          }
          std::printf("\n");
        }
      }
      // CT stability + PIR
      {
        for (double iapp : {0.0, -0.95}) {
          auto roots = scalar_reduction_roots(ct, iapp);
          std::printf("  CT I=%.2f:", iapp);
          for (double r : roots) {
            Eigen::EigenSolver<Mat> es(jacobian(ct, steady_state_at(ct, r), iapp));
            double maxre = -1e300;
            for (int i = 0; i < es.eigenvalues().size(); ++i)
              maxre = std::max(maxre, es.eigenvalues()[i].real());
            std::printf(" V=%.1f(%+.4f)", r, maxre);
          }
        }
        auto r = run_protocol(make_protocol("pir"), ct, cfg);
        std::printf("\n  pir: spikes=%zu delay=%.0f ca=[%.0f,%.0f] dec=%.0f\n", r.spikes.size(),
                    r.delay_to_first_spike ? *r.delay_to_first_spike : -1, r.metrics["ca_min_nM"],
                    r.metrics["ca_max_nM"],
                    r.metrics.count("amplitudes_decreasing") ? r.metrics["amplitudes_decreasing"]
                                                             : -1);
      }
    }
  } else if (what == "ma2") {
    for (double mhalf : {-16.5, -41.5, -46.5, -51.5}) {
      ModelSpec c = build_model(Variant::C);
      c.channel(ChannelId::A).activation->p_half = mhalf;
      auto roots = scalar_reduction_roots(c, 1.3);
      std::printf("== m_A half %.1f  C@1.3 roots:", mhalf);
      for (double r : roots) {
        Eigen::EigenSolver<Mat> es(jacobian(c, steady_state_at(c, r), 1.3));
        double maxre = -1e300;
        for (int i = 0; i < es.eigenvalues().size(); ++i)
          maxre = std::max(maxre, es.eigenvalues()[i].real());
        std::printf(" V=%.2f h_A=%.3f maxRe=%+.4f", r, steady_state_at(c, r)[c.index_of("h_A")],
                    maxre);
      }
      std::printf("\n");
      // depolarized kick: does a tonic cycle exist at 1.3?
      Vec x0 = initial_state(c, -40.0);
      x0[c.index_of("h_A")] = 0.02;
      auto tr = integrate(c, x0, Stimulus::constant(1.3), {0.0, 800.0}, cfg);
      auto spikes = detect_spikes(tr);
      int late = 0;
      for (double t : spikes)
        if (t > 400) late++;
      std::printf("   kick@1.3: spikes=%zu late_spikes=%d", spikes.size(), late);
      if (spikes.size() >= 3)
        std::printf(" last isis %.1f %.1f", spikes[spikes.size() - 1] - spikes[spikes.size() - 2],
                    spikes[spikes.size() - 2] - spikes[spikes.size() - 3]);
      std::printf("\n");
      // delay protocol starting from the spiking attractor when present
      if (late > 0) {
        auto p = make_protocol("delay");
        Vec hold = tr.states.back();
        ModelSpec m = c;
        auto tr2 = integrate(m, hold, p.stimulus(), {0.0, p.total_duration}, cfg);
        auto sp = detect_spikes(tr2);
        double delay = -1;
        std::vector<double> post;
        for (double t : sp)
          if (t > 400 && t < 660) post.push_back(t);
        if (!post.empty()) delay = post.front() - 400.0;
        double cv = -1;
        if (post.size() >= 3) {
          std::vector<double> isis;
          for (size_t i = 1; i < post.size(); ++i) isis.push_back(post[i] - post[i - 1]);
          double mu = 0, ss = 0;
          for (double x : isis) mu += x;
          mu /= isis.size();
          for (double x : isis) ss += (x - mu) * (x - mu);
          cv = std::sqrt(ss / (isis.size() - 1)) / mu;
        }
        std::printf("   delay-from-cycle: base=%d post=%zu delay=%.1f cv=%.3f\n",
                    (int)std::count_if(sp.begin(), sp.end(), [](double t) { return t < 100; }),
                    post.size(), delay, cv);
      }
    }
  } else if (what == "ceig") {
    ModelSpec c = build_model(Variant::C);
    for (double iapp : {1.3, 0.5, 0.0}) {
      auto roots = scalar_reduction_roots(c, iapp);
      for (double r : roots) {
        Eigen::EigenSolver<Mat> es(jacobian(c, steady_state_at(c, r), iapp));
        double maxre = -1e300;
        for (int i = 0; i < es.eigenvalues().size(); ++i)
          maxre = std::max(maxre, es.eigenvalues()[i].real());
        std::printf("C I=%.2f root V=%.2f maxRe=%+.4f\n", iapp, r, maxre);
      }
    }
  } else if (what == "pif") {
    for (auto v : {Variant::NC, Variant::CT, Variant::C}) {
      auto verdict = pif_verdict(v, cfg);
      std::printf("PIF %-2s inh=%d exc=%d paired=%d facil=%d span=%.1f\n",
                  to_string(v).c_str(), verdict.inhibition_only, verdict.excitation_only,
                  verdict.paired, verdict.facilitation,
                  verdict.paired_last_spike - verdict.paired_first_spike);
    }
  }
  return 0;
}
