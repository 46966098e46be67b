#pragma once

#include "voltplug/errors.hpp"
#include "voltplug/rng.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace voltplug::sim {

constexpr double k_pi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * k_pi / 180.0; }

// ----------------------------------------------------------------------------
// World description
// ----------------------------------------------------------------------------

enum class LoadKind { resistive, inductive, switched };

/// One odd harmonic of a switched load, relative to the fundamental.
struct Harmonic {
    int order = 3;
    double amplitude = 0.0; // relative to the fundamental, 0..1
    double phase_deg = 0.0;
};

struct LoadModel {
    LoadKind kind = LoadKind::resistive;
    double resistance_ohm = 100.0; // resistive
    double phase_deg = 0.0;        // inductive: degrees current lags voltage
    double irms_a = 0.0;           // inductive/switched fundamental RMS
    std::vector<Harmonic> harmonics; // switched only

    void validate() const {
        switch (kind) {
        case LoadKind::resistive:
            if (!(resistance_ohm > 0.0))
                throw config_error("load: resistance must be > 0");
            break;
        case LoadKind::inductive:
            if (!(phase_deg > 0.0 && phase_deg < 90.0))
                throw config_error("load: inductive phase must be in (0, 90) deg");
            if (irms_a < 0.0) throw config_error("load: irms must be >= 0");
            break;
        case LoadKind::switched: {
            if (irms_a < 0.0) throw config_error("load: irms must be >= 0");
            std::set<int> seen;
            for (const auto& h : harmonics) {
                if (h.order < 3 || h.order % 2 == 0)
                    throw config_error("load: harmonic orders must be odd and >= 3");
                if (!seen.insert(h.order).second)
                    throw config_error("load: duplicate harmonic order");
                if (h.amplitude < 0.0 || h.amplitude > 1.0)
                    throw config_error("load: harmonic amplitude must be in [0, 1]");
            }
            break;
        }
        }
    }
};

/// Line-referred additive Gaussian noise; stands in for everything the
/// sensor chain model leaves out. Equal seeds give equal streams.
struct NoiseModel {
    double sigma_v = 0.0; // volts on the line voltage
    double sigma_i = 0.0; // amperes on the load current
    std::uint64_t seed = 0;

    void validate() const {
        if (sigma_v < 0.0 || sigma_i < 0.0)
            throw config_error("noise: sigmas must be >= 0");
    }
};

struct WaveformSpec {
    double vrms_v = 127.0;
    double freq_hz = 60.0;
    double phase0_deg = 0.0;
    LoadModel load;
    NoiseModel noise;

    void validate() const {
        if (!(vrms_v > 0.0)) throw config_error("waveform: vrms must be > 0");
        if (!(freq_hz > 0.0)) throw config_error("waveform: freq must be > 0");
        load.validate();
        noise.validate();
    }
};

// ----------------------------------------------------------------------------
// Sensor front end
// ----------------------------------------------------------------------------

/// Which transfer constant the voltage channel uses. The ideal chain is the
/// transformer ratio times the divider; the empirical mode is the single
/// measured constant (5.2 mV per line volt).
enum class VoltageSenseMode { ideal, empirical };

struct SensorChain {
    double acs_sensitivity_mv_per_a = 66.0; // 30 A part; 185 and 100 exist too
    double acs_vcc_mv = 5000.0;
    double acs_quiescent_mv = 2500.0;
    double xfmr_ratio = 0.06;        // 6:100 step-down
    double divider_gain = 1.2 / 13.2;
    double dc_level_mv = 2500.0;
    double k_v_empirical_mv_per_v = 5.2;
    VoltageSenseMode voltage_mode = VoltageSenseMode::empirical;

    /// Millivolts at the ADC pin per line volt, per the active mode.
    [[nodiscard]] double voltage_gain_mv_per_v() const {
        return voltage_mode == VoltageSenseMode::ideal
                   ? 1000.0 * xfmr_ratio * divider_gain
                   : k_v_empirical_mv_per_v;
    }

    void validate() const {
        if (!(acs_sensitivity_mv_per_a > 0.0))
            throw config_error("chain: sensitivity must be > 0");
        if (!(xfmr_ratio > 0.0 && xfmr_ratio < 1.0))
            throw config_error("chain: transformer ratio must be in (0, 1)");
        if (!(divider_gain > 0.0 && divider_gain < 1.0))
            throw config_error("chain: divider gain must be in (0, 1)");
        if (!(dc_level_mv > 0.0 && dc_level_mv < acs_vcc_mv))
            throw config_error("chain: DC level must be inside the supply range");
        if (!(k_v_empirical_mv_per_v > 0.0))
            throw config_error("chain: k_v must be > 0");
    }
};

struct AdcModel {
    int bits = 10;
    double vref_mv = 5000.0;

    [[nodiscard]] std::int64_t levels() const { return std::int64_t{1} << bits; }
    [[nodiscard]] std::int64_t max_code() const { return levels() - 1; }
    [[nodiscard]] double lsb_mv() const { return vref_mv / static_cast<double>(levels()); }

    void validate() const {
        if (bits < 1 || bits > 24) throw config_error("adc: bits must be in [1, 24]");
        if (!(vref_mv > 0.0)) throw config_error("adc: vref must be > 0");
    }
};

/// Sequential-sampling schedule: one converter serves both channels, so the
/// current sample trails its voltage sample by skew_us.
struct SamplerTiming {
    std::int64_t period_us = 500;
    std::int64_t skew_us = 112;
    std::int64_t start_us = 0;

    void validate() const {
        if (!(period_us > skew_us && skew_us >= 0))
            throw config_error("timing: need period_us > skew_us >= 0");
    }
};

// ----------------------------------------------------------------------------
// Samples
// ----------------------------------------------------------------------------

enum class Channel { voltage, current };

inline char channel_tag(Channel c) { return c == Channel::voltage ? 'V' : 'I'; }

struct Sample {
    std::int64_t t_us = 0;
    Channel channel = Channel::voltage;
    int code = 0;
    bool saturated = false;

    bool operator==(const Sample&) const = default;
};

using SampleStream = std::vector<Sample>;

// ----------------------------------------------------------------------------
// Operations
// ----------------------------------------------------------------------------

struct LinePoint {
    double v_line = 0.0; // volts
    double i_line = 0.0; // amperes
};

/// Noise-free line voltage and load current at t microseconds.
inline LinePoint instantaneous(const WaveformSpec& spec, std::int64_t t_us) {
    const double t = static_cast<double>(t_us) * 1e-6;
    const double theta = 2.0 * k_pi * spec.freq_hz * t + deg_to_rad(spec.phase0_deg);
    const double v = std::numbers::sqrt2 * spec.vrms_v * std::sin(theta);

    double i = 0.0;
    switch (spec.load.kind) {
    case LoadKind::resistive:
        i = v / spec.load.resistance_ohm;
        break;
    case LoadKind::inductive:
        i = std::numbers::sqrt2 * spec.load.irms_a *
            std::sin(theta - deg_to_rad(spec.load.phase_deg));
        break;
    case LoadKind::switched: {
        double shape = std::sin(theta);
        for (const auto& h : spec.load.harmonics)
            shape += h.amplitude * std::sin(h.order * theta + deg_to_rad(h.phase_deg));
        i = std::numbers::sqrt2 * spec.load.irms_a * shape;
        break;
    }
    }
    return {v, i};
}

struct SensedPoint {
    double v_sens_mv = 0.0;
    double i_sens_mv = 0.0;
};

/// Both sensor transfer functions: Hall sensor offset + sensitivity for the
/// current channel, transformer/divider (or the empirical constant) plus the
/// DC bias network for the voltage channel.
inline SensedPoint sense(double v_line, double i_line, const SensorChain& chain) {
    return {
        chain.dc_level_mv + chain.voltage_gain_mv_per_v() * v_line,
        chain.acs_quiescent_mv + chain.acs_sensitivity_mv_per_a * i_line,
    };
}

struct QuantizedValue {
    int code = 0;
    bool saturated = false;
};

/// code = floor(mv * 2^bits / vref), clamped to the code range. Clamping is
/// reported, never silent.
inline QuantizedValue quantize(double volts_mv, const AdcModel& adc) {
    const double raw = std::floor(volts_mv * static_cast<double>(adc.levels()) / adc.vref_mv);
    if (raw < 0.0) return {0, true};
    if (raw > static_cast<double>(adc.max_code()))
        return {static_cast<int>(adc.max_code()), true};
    return {static_cast<int>(raw), false};
}

/// Incremental sampler. Produces one voltage/current pair per period; the
/// caller can gate the load current off (relay open) per pair.
class SampleGenerator {
public:
    SampleGenerator(const WaveformSpec& spec, const SensorChain& chain,
                    const AdcModel& adc, const SamplerTiming& timing)
        : spec_(spec), chain_(chain), adc_(adc), timing_(timing),
          rng_(spec.noise.seed) {
        spec_.validate();
        chain_.validate();
        adc_.validate();
        timing_.validate();
    }

    struct Pair {
        Sample voltage;
        Sample current;
    };

    [[nodiscard]] std::int64_t next_voltage_time() const {
        return timing_.start_us + index_ * timing_.period_us;
    }

    /// Generate the next pair. The relay gate zeroes the load current after
    /// noise, so an open relay means identically zero current.
    Pair next(bool relay_closed = true) {
        const std::int64_t tv = next_voltage_time();
        const std::int64_t ti = tv + timing_.skew_us;
        ++index_;

        LinePoint at_v = instantaneous(spec_, tv);
        LinePoint at_i = instantaneous(spec_, ti);
        const double nv = rng_.next() * spec_.noise.sigma_v;
        const double ni = rng_.next() * spec_.noise.sigma_i;
        const double v = at_v.v_line + nv;
        double i = at_i.i_line + ni;
        if (!relay_closed) i = 0.0;

        const SensedPoint sv = sense(v, 0.0, chain_);
        const SensedPoint si = sense(0.0, i, chain_);
        const QuantizedValue qv = quantize(sv.v_sens_mv, adc_);
        const QuantizedValue qi = quantize(si.i_sens_mv, adc_);
        return {
            Sample{tv, Channel::voltage, qv.code, qv.saturated},
            Sample{ti, Channel::current, qi.code, qi.saturated},
        };
    }

private:
    WaveformSpec spec_;
    SensorChain chain_;
    AdcModel adc_;
    SamplerTiming timing_;
    GaussianRng rng_;
    std::int64_t index_ = 0;
};

/// Batch sampler over [start, start + duration). Voltage and current samples
/// are interleaved in time order.
inline SampleStream run_sampler(const WaveformSpec& spec, const SensorChain& chain,
                                const AdcModel& adc, const SamplerTiming& timing,
                                std::int64_t duration_us) {
    timing.validate();
    if (duration_us < timing.period_us)
        throw config_error("run_sampler: duration shorter than one period");

    SampleGenerator gen(spec, chain, adc, timing);
    SampleStream out;
    const std::int64_t end = timing.start_us + duration_us;
    while (gen.next_voltage_time() < end) {
        auto [v, i] = gen.next();
        out.push_back(v);
        out.push_back(i);
    }
    return out;
}

/// Samples of one channel, in stream order.
inline SampleStream select_channel(const SampleStream& stream, Channel ch) {
    SampleStream out;
    for (const auto& s : stream)
        if (s.channel == ch) out.push_back(s);
    return out;
}

// ----------------------------------------------------------------------------
// CSV interchange: t_us,channel,code,saturated
// ----------------------------------------------------------------------------

inline void write_csv(std::ostream& os, const SampleStream& stream) {
    os << "t_us,channel,code,saturated\n";
    for (const auto& s : stream)
        os << s.t_us << ',' << channel_tag(s.channel) << ',' << s.code << ','
           << (s.saturated ? 1 : 0) << '\n';
}

inline SampleStream read_csv(std::istream& is) {
    SampleStream out;
    std::string line;
    if (!std::getline(is, line) || line.rfind("t_us,channel,code,saturated", 0) != 0)
        throw domain_error("sample CSV: missing header");
    std::int64_t prev_t = std::numeric_limits<std::int64_t>::min();
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::array<std::string, 4> field;
        std::size_t pos = 0;
        for (int f = 0; f < 4; ++f) {
            const std::size_t comma = line.find(',', pos);
            if ((comma == std::string::npos) != (f == 3))
                throw domain_error("sample CSV: bad row: " + line);
            field[f] = line.substr(pos, comma - pos);
            pos = comma + 1;
        }
        Sample s;
        try {
            s.t_us = std::stoll(field[0]);
            s.code = std::stoi(field[2]);
            s.saturated = std::stoi(field[3]) != 0;
        } catch (const std::exception&) {
            throw domain_error("sample CSV: bad row: " + line);
        }
        if (field[1] == "V") s.channel = Channel::voltage;
        else if (field[1] == "I") s.channel = Channel::current;
        else throw domain_error("sample CSV: bad channel tag");
        if (s.code < 0) throw domain_error("sample CSV: negative code");
        if (s.t_us < prev_t) throw domain_error("sample CSV: time not monotone");
        prev_t = s.t_us;
        out.push_back(s);
    }
    return out;
}

} // namespace voltplug::sim
