#pragma once

#include "voltplug/errors.hpp"
#include "voltplug/simkernel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace voltplug::meter {

// ----------------------------------------------------------------------------
// Series types
// ----------------------------------------------------------------------------

struct TimedValue {
    double t_us = 0.0;
    double value = 0.0;
};

using Series = std::vector<TimedValue>;

/// Offset-free series. Points before warmup_count were centered with fewer
/// than `window` history samples and are flagged as warm-up.
struct CenteredSeries {
    Series points;
    int window = 70;
    std::size_t warmup_count = 0;

    /// Steady-state portion (warm-up dropped).
    [[nodiscard]] Series warmed() const {
        if (warmup_count >= points.size()) return {};
        return Series(points.begin() + static_cast<std::ptrdiff_t>(warmup_count),
                      points.end());
    }
};

// ----------------------------------------------------------------------------
// Code conversions
// ----------------------------------------------------------------------------

/// V = (D / 2^bits) * vref. The product is formed first and the divisor is a
/// power of two, so the result is exact for integer-millivolt references.
inline double adc_to_millivolts(int code, const sim::AdcModel& adc = {}) {
    if (code < 0 || code > adc.max_code())
        throw domain_error("adc_to_millivolts: code out of range");
    return static_cast<double>(code) * adc.vref_mv / static_cast<double>(adc.levels());
}

/// Raw (offset-bearing) amperes from an ADC code: I = ((D/2^bits)*vref)/S.
inline double code_to_current(int code, double sensitivity_mv_per_a,
                              const sim::AdcModel& adc = {}) {
    if (!(sensitivity_mv_per_a > 0.0))
        throw domain_error("code_to_current: sensitivity must be > 0");
    return adc_to_millivolts(code, adc) / sensitivity_mv_per_a;
}

// ----------------------------------------------------------------------------
// Offset removal
// ----------------------------------------------------------------------------

/// Subtract the mean of the last `window` raw values from each point. During
/// warm-up the mean runs over the shorter available prefix; those points are
/// flagged via warmup_count. The sum is taken relative to the current value,
/// which keeps constant runs (open relay, idle sensor) at exactly zero.
inline CenteredSeries remove_offset(const Series& raw, int window = 70) {
    if (window < 1) throw config_error("remove_offset: window must be >= 1");
    if (raw.size() < static_cast<std::size_t>(window))
        throw insufficient_data_error("remove_offset: series shorter than window");

    CenteredSeries out;
    out.window = window;
    out.warmup_count = static_cast<std::size_t>(window - 1);
    out.points.reserve(raw.size());

    const std::size_t w = static_cast<std::size_t>(window);
    for (std::size_t k = 0; k < raw.size(); ++k) {
        const std::size_t begin = k + 1 >= w ? k + 1 - w : 0;
        double acc = 0.0;
        for (std::size_t j = begin; j <= k; ++j) acc += raw[j].value - raw[k].value;
        // value - mean(window) with the common term cancelled analytically.
        out.points.push_back(
            {raw[k].t_us, -acc / static_cast<double>(k - begin + 1)});
    }
    return out;
}

/// |1 - H(f)| of the centering filter above, where H is the moving-average
/// response at the line frequency. Centering scales the fundamental by this
/// factor; the pipeline divides it back out.
inline double offset_filter_gain(int window, double dt_us, double freq_hz) {
    const double omega_dt = 2.0 * sim::k_pi * freq_hz * dt_us * 1e-6;
    std::complex<double> h{0.0, 0.0};
    for (int j = 0; j < window; ++j)
        h += std::polar(1.0, -omega_dt * j);
    h /= static_cast<double>(window);
    return std::abs(std::complex<double>{1.0, 0.0} - h);
}

// ----------------------------------------------------------------------------
// Zero crossings
// ----------------------------------------------------------------------------

/// The four-point record around a positive-to-negative transition.
struct CrossingPair {
    double vp = 0.0;   // last positive value
    double vn = 0.0;   // first negative value
    double tp_us = 0.0;
    double tn_us = 0.0;

    void validate() const {
        if (!(vp > 0.0)) throw domain_error("crossing pair: vp must be > 0");
        if (!(vn < 0.0)) throw domain_error("crossing pair: vn must be < 0");
        if (!(tn_us > tp_us)) throw domain_error("crossing pair: tn must be > tp");
    }
};

/// Crossing instant from the rational four-point expression
///   ( -Tp*Tn*Vp + Vp*Tn^2 + Vn*Tp^2 - Vn*Tp*Tn ) /
///   (  Vp*Tn - Tn*Vn - Tp*Vp + Tp*Vn ).
/// Algebraically this is two-point linear interpolation; the test suite holds
/// the two forms to each other.
inline double zero_crossing(const CrossingPair& p) {
    p.validate();
    const double num = -(p.tp_us * p.tn_us * p.vp) + p.vp * p.tn_us * p.tn_us +
                       p.vn * p.tp_us * p.tp_us - p.vn * p.tp_us * p.tn_us;
    const double den = p.vp * p.tn_us - p.tn_us * p.vn - p.tp_us * p.vp +
                       p.tp_us * p.vn;
    return num / den;
}

/// Times of all positive-to-negative crossings in a series. A sample that is
/// exactly zero after a positive run is itself the crossing.
inline std::vector<double> downward_crossings(const Series& pts) {
    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double a = pts[k].value;
        const double b = pts[k + 1].value;
        if (a > 0.0 && b < 0.0)
            out.push_back(zero_crossing({a, b, pts[k].t_us, pts[k + 1].t_us}));
        else if (a > 0.0 && b == 0.0)
            out.push_back(pts[k + 1].t_us);
    }
    return out;
}

// ----------------------------------------------------------------------------
// Lag
// ----------------------------------------------------------------------------

/// Zero-crossing difference and the phase it implies. Positive means the
/// current lags the voltage.
struct LagEstimate {
    double td_us = 0.0;
    double phi_deg = 0.0;
};

inline double wrap_degrees(double phi) {
    while (phi > 180.0) phi -= 360.0;
    while (phi <= -180.0) phi += 360.0;
    return phi;
}

/// Td = Zc - Zv, phi = Td * 1e-6 * 360 * f, wrapped to (-180, 180].
inline LagEstimate lag(double zc_current_us, double zv_voltage_us, double freq_hz) {
    const double td = zc_current_us - zv_voltage_us;
    return {td, wrap_degrees(td * 1e-6 * 360.0 * freq_hz)};
}

/// Pair each current crossing with the nearest voltage crossing within half a
/// period and return the per-pair lag estimates.
inline std::vector<LagEstimate> pair_crossings(const std::vector<double>& current_crossings,
                                               const std::vector<double>& voltage_crossings,
                                               double freq_hz) {
    if (current_crossings.empty() || voltage_crossings.empty())
        throw pairing_error("pair_crossings: a channel has no crossings");

    const double half_period_us = 0.5e6 / freq_hz;
    std::vector<LagEstimate> out;
    for (double zc : current_crossings) {
        auto it = std::lower_bound(voltage_crossings.begin(), voltage_crossings.end(), zc);
        double best = 0.0;
        double best_dist = std::numeric_limits<double>::infinity();
        if (it != voltage_crossings.end() && std::abs(*it - zc) < best_dist) {
            best = *it;
            best_dist = std::abs(*it - zc);
        }
        if (it != voltage_crossings.begin() && std::abs(*(it - 1) - zc) < best_dist) {
            best = *(it - 1);
            best_dist = std::abs(*(it - 1) - zc);
        }
        if (best_dist <= half_period_us) out.push_back(lag(zc, best, freq_hz));
    }
    if (out.empty())
        throw pairing_error("pair_crossings: no voltage crossing within half a period");
    return out;
}

// ----------------------------------------------------------------------------
// RMS and powers
// ----------------------------------------------------------------------------

/// V_rms = V_p / sqrt(2); the peak must come from at least one full cycle.
inline double rms_from_peak(double v_peak) {
    if (v_peak < 0.0) throw domain_error("rms_from_peak: peak must be >= 0");
    return v_peak / std::numbers::sqrt2;
}

/// Linear interpolation of a series at t (clamped at the ends).
inline double interpolate(const Series& pts, double t_us) {
    if (pts.empty()) throw insufficient_data_error("interpolate: empty series");
    if (t_us <= pts.front().t_us) return pts.front().value;
    if (t_us >= pts.back().t_us) return pts.back().value;
    auto it = std::lower_bound(pts.begin(), pts.end(), t_us,
                               [](const TimedValue& p, double t) { return p.t_us < t; });
    const TimedValue& b = *it;
    const TimedValue& a = *(it - 1);
    if (b.t_us == a.t_us) return a.value;
    const double w = (t_us - a.t_us) / (b.t_us - a.t_us);
    return a.value + w * (b.value - a.value);
}

namespace detail {

/// Trapezoidal mean of f(v, i) over [boundaries.front(), boundaries.back()],
/// where v and i share timestamps. Boundary nodes are linearly interpolated.
template <typename F>
double cycle_locked_mean(const Series& v, const Series& i,
                         const std::vector<double>& boundaries, F&& f) {
    if (boundaries.size() < 2)
        throw insufficient_data_error("cycle-locked mean: need at least one full cycle");
    const double t0 = boundaries.front();
    const double t1 = boundaries.back();
    if (!(t1 > t0)) throw insufficient_data_error("cycle-locked mean: empty span");

    double integral = 0.0;
    double prev_t = t0;
    double prev_f = f(interpolate(v, t0), interpolate(i, t0));
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double t = v[k].t_us;
        if (t <= t0) continue;
        if (t >= t1) break;
        const double cur = f(v[k].value, i[k].value);
        integral += 0.5 * (prev_f + cur) * (t - prev_t);
        prev_t = t;
        prev_f = cur;
    }
    const double end_f = f(interpolate(v, t1), interpolate(i, t1));
    integral += 0.5 * (prev_f + end_f) * (t1 - prev_t);
    return integral / (t1 - t0);
}

} // namespace detail

struct RmsResult {
    double rms = 0.0;
    int cycles_used = 0;
};

/// Root-mean-square over the largest integer number of cycles, delimited by
/// the supplied crossing times.
inline RmsResult true_rms(const Series& pts, const std::vector<double>& boundaries) {
    const double ms = detail::cycle_locked_mean(pts, pts, boundaries,
                                                [](double a, double) { return a * a; });
    return {std::sqrt(std::max(ms, 0.0)),
            static_cast<int>(boundaries.size()) - 1};
}

/// Mean instantaneous v*i over integer cycles. The series must already share
/// timestamps index-for-index (see resample_onto).
inline double active_power(const Series& v, const Series& i,
                           const std::vector<double>& boundaries) {
    if (v.size() != i.size())
        throw alignment_error("active_power: series sizes differ");
    for (std::size_t k = 0; k < v.size(); ++k)
        if (v[k].t_us != i[k].t_us)
            throw alignment_error("active_power: series timestamps differ");
    return detail::cycle_locked_mean(v, i, boundaries,
                                     [](double a, double b) { return a * b; });
}

/// Series resampled by linear interpolation onto another series' timestamps;
/// cancels the sequential-sampling skew before multiplying channels.
inline Series resample_onto(const Series& src, const Series& timeline) {
    Series out;
    out.reserve(timeline.size());
    for (const auto& p : timeline) out.push_back({p.t_us, interpolate(src, p.t_us)});
    return out;
}

/// S = Vrms * Irms.
inline double apparent_power(double vrms, double irms) {
    if (vrms < 0.0 || irms < 0.0)
        throw domain_error("apparent_power: inputs must be >= 0");
    return vrms * irms;
}

/// Q = sqrt(S^2 - P^2). Tiny violations of S >= |P| (from independent
/// quadratures) clamp to zero; larger ones are rejected.
inline double reactive_power(double s, double p, double rel_tol = 1e-9) {
    const double ap = std::abs(p);
    if (s < ap) {
        if (ap - s <= rel_tol * std::max(1.0, ap))
            return 0.0;
        throw inconsistency_error("reactive_power: apparent below active power");
    }
    return std::sqrt(s * s - p * p);
}

// ----------------------------------------------------------------------------
// Full pipeline
// ----------------------------------------------------------------------------

/// One reported snapshot. phi_deg is absent when the current channel shows no
/// crossings (open relay).
struct Measurement {
    double vrms = 0.0;
    double irms = 0.0;
    double p_active = 0.0;
    double s_apparent = 0.0;
    double q_reactive = 0.0;
    std::optional<double> phi_deg;
    std::int64_t t_us = 0;
    int cycles_used = 0;
};

struct MeterConfig {
    sim::AdcModel adc;
    double freq_hz = 60.0;
    int offset_window = 70;
    /// Use true current timestamps and interpolate onto the voltage grid.
    /// Off reproduces the firmware behaviour of treating the sequential reads
    /// as simultaneous.
    bool compensate_skew = true;
    /// Divide out the centering filter's known fundamental attenuation.
    bool compensate_filter_gain = true;
};

/// Everything the pipeline derives from one pair of streams; measure() is the
/// Measurement projection, the validation protocols use the rest.
struct PipelineResult {
    Series v;        // centered line volts, steady state
    Series i;        // centered amperes on the voltage timeline
    std::vector<double> v_crossings;
    std::vector<double> i_crossings;
    std::vector<LagEstimate> pair_lags;
    double v_peak = 0.0; // max positive centered sample inside the cycle span
    Measurement measurement;
};

inline PipelineResult run_pipeline(const sim::SampleStream& v_stream,
                                   const sim::SampleStream& i_stream,
                                   const sim::SensorChain& chain,
                                   const MeterConfig& cfg = {}) {
    chain.validate();
    cfg.adc.validate();
    if (v_stream.empty() || i_stream.empty())
        throw insufficient_data_error("measure: empty stream");
    if (v_stream.size() != i_stream.size())
        throw alignment_error("measure: voltage/current sample counts differ");
    for (const auto& s : v_stream)
        if (s.channel != sim::Channel::voltage)
            throw alignment_error("measure: non-voltage sample in voltage stream");
    for (const auto& s : i_stream)
        if (s.channel != sim::Channel::current)
            throw alignment_error("measure: non-current sample in current stream");

    const double span_s =
        static_cast<double>(v_stream.back().t_us - v_stream.front().t_us) * 1e-6;
    if (span_s * cfg.freq_hz < 2.0)
        throw insufficient_data_error("measure: streams cover fewer than 2 cycles");

    // Codes to raw (offset-bearing) line quantities.
    const double kv = chain.voltage_gain_mv_per_v();
    Series v_raw, i_raw;
    v_raw.reserve(v_stream.size());
    i_raw.reserve(i_stream.size());
    for (const auto& s : v_stream)
        v_raw.push_back({static_cast<double>(s.t_us),
                         adc_to_millivolts(s.code, cfg.adc) / kv});
    for (const auto& s : i_stream)
        i_raw.push_back({static_cast<double>(s.t_us),
                         code_to_current(s.code, chain.acs_sensitivity_mv_per_a, cfg.adc)});

    // Center, drop warm-up.
    Series v = remove_offset(v_raw, cfg.offset_window).warmed();
    Series i = remove_offset(i_raw, cfg.offset_window).warmed();
    if (v.size() < 4)
        throw insufficient_data_error("measure: nothing left after warm-up");

    // The centering filter scales the fundamental by a known factor.
    if (cfg.compensate_filter_gain && v.size() >= 2) {
        const double dt_us = (v.back().t_us - v.front().t_us) /
                             static_cast<double>(v.size() - 1);
        const double g = offset_filter_gain(cfg.offset_window, dt_us, cfg.freq_hz);
        if (g > 1e-9) {
            for (auto& p : v) p.value /= g;
            for (auto& p : i) p.value /= g;
        }
    }

    // Skew handling: either keep true current timestamps and interpolate, or
    // pretend each current sample was taken with its voltage partner.
    if (!cfg.compensate_skew)
        for (std::size_t k = 0; k < i.size(); ++k) i[k].t_us = v[k].t_us;

    PipelineResult res;
    res.v_crossings = downward_crossings(v);
    if (res.v_crossings.size() < 2)
        throw insufficient_data_error("measure: fewer than two voltage crossings");
    res.i_crossings = downward_crossings(i);

    if (!res.i_crossings.empty()) {
        // A current channel that cannot be paired (open relay, settle
        // transients) reports no phase rather than failing the snapshot.
        try {
            res.pair_lags = pair_crossings(res.i_crossings, res.v_crossings, cfg.freq_hz);
        } catch (const pairing_error&) {
            res.pair_lags.clear();
        }
        if (!res.pair_lags.empty()) {
            double sum = 0.0;
            for (const auto& l : res.pair_lags) sum += l.phi_deg;
            res.measurement.phi_deg = sum / static_cast<double>(res.pair_lags.size());
        }
    }

    Series i_on_v = cfg.compensate_skew ? resample_onto(i, v) : i;

    const auto& bounds = res.v_crossings;
    const RmsResult vr = true_rms(v, bounds);
    const RmsResult ir = true_rms(i_on_v, bounds);
    double p = active_power(v, i_on_v, bounds);
    double s = apparent_power(vr.rms, ir.rms);
    if (std::abs(p) > s) {
        // Same quadrature on both sides bounds this at rounding level.
        if (std::abs(p) - s > 1e-9 * std::max(1.0, std::abs(p)))
            throw inconsistency_error("measure: active power exceeds apparent power");
        s = std::abs(p);
    }

    res.measurement.vrms = vr.rms;
    res.measurement.irms = ir.rms;
    res.measurement.p_active = p;
    res.measurement.s_apparent = s;
    res.measurement.q_reactive = reactive_power(s, p);
    res.measurement.t_us = static_cast<std::int64_t>(std::llround(bounds.back()));
    res.measurement.cycles_used = vr.cycles_used;

    double peak = 0.0;
    for (const auto& pt : v)
        if (pt.t_us >= bounds.front() && pt.t_us <= bounds.back())
            peak = std::max(peak, pt.value);
    res.v_peak = peak;

    res.v = std::move(v);
    res.i = std::move(i_on_v);
    return res;
}

/// The full metering chain in one call: codes in, Measurement out.
inline Measurement measure(const sim::SampleStream& v_stream,
                           const sim::SampleStream& i_stream,
                           const sim::SensorChain& chain,
                           const MeterConfig& cfg = {}) {
    return run_pipeline(v_stream, i_stream, chain, cfg).measurement;
}

} // namespace voltplug::meter
