#pragma once

// Brute-force reference computations the unit and acceptance suites check the
// implementation against. Everything here is deliberately independent of the
// metering code paths: plain dense quadrature and bisection on the continuous
// waveforms.

#include "voltplug/simkernel.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracles {

/// RMS of a continuous signal by midpoint-rule quadrature.
inline double dense_rms(const std::function<double(double)>& f, double t0_s, double t1_s,
                        long points) {
    const double dt = (t1_s - t0_s) / static_cast<double>(points);
    double sum = 0.0;
    for (long k = 0; k < points; ++k) {
        const double x = f(t0_s + (static_cast<double>(k) + 0.5) * dt);
        sum += x * x;
    }
    return std::sqrt(sum / static_cast<double>(points));
}

/// Mean of f*g by midpoint-rule quadrature.
inline double dense_mean_product(const std::function<double(double)>& f,
                                 const std::function<double(double)>& g, double t0_s,
                                 double t1_s, long points) {
    const double dt = (t1_s - t0_s) / static_cast<double>(points);
    double sum = 0.0;
    for (long k = 0; k < points; ++k) {
        const double t = t0_s + (static_cast<double>(k) + 0.5) * dt;
        sum += f(t) * g(t);
    }
    return sum / static_cast<double>(points);
}

/// Downward (positive-to-negative) root of a continuous signal inside
/// [lo_s, hi_s], by bisection. The bracket must straddle the root.
inline double bisect_downward_root(const std::function<double(double)>& f, double lo_s,
                                   double hi_s) {
    double a = lo_s, b = hi_s;
    double fa = f(a), fb = f(b);
    if (!(fa > 0.0 && fb < 0.0))
        throw std::invalid_argument("bisect: bracket does not straddle a downward root");
    for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    return 0.5 * (a + b);
}

/// Two-point linear interpolation of a zero crossing; the independent mate of
/// the four-point rational expression.
inline double interp_crossing(double vp, double tp, double vn, double tn) {
    return tp + vp * (tn - tp) / (vp - vn);
}

/// Continuous line voltage of a spec, noise-free.
inline std::function<double(double)> voltage_of(const voltplug::sim::WaveformSpec& spec) {
    return [spec](double t_s) {
        return std::numbers::sqrt2 * spec.vrms_v *
               std::sin(2.0 * voltplug::sim::k_pi * spec.freq_hz * t_s +
                        voltplug::sim::deg_to_rad(spec.phase0_deg));
    };
}

} // namespace oracles
