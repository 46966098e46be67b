#pragma once

#include "voltplug/json_io.hpp"
#include "voltplug/metering.hpp"
#include "voltplug/simkernel.hpp"
#include "voltplug/wire.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace voltplug::device {

enum class Mode { at, data };

/// Boot-time serial-module configuration. AT mode is reachable only when the
/// key pin was high at power-on.
struct DeviceConfig {
    std::string name = "SMARTPLUG";
    std::string password = "1234";
    wire::Role role = wire::Role::slave;
    bool key_pin_at_boot = false;
};

struct DeviceOptions {
    int window_cycles = 2;           // cycles per measurement window
    double overcurrent_limit_a = 10; // relay rating
    bool auto_trip = false;          // open the relay on overcurrent
    meter::MeterConfig meter;
};

/// One entry of the persisted measurement log.
struct LogRecord {
    std::int64_t t_virtual_us = 0;
    meter::Measurement measurement;
    bool out_of_spec = false; // irms above the relay rating
    std::string scenario_id;
};

inline nlohmann::json log_record_to_json(const LogRecord& r) {
    return nlohmann::json{
        {"t_virtual_us", r.t_virtual_us},
        {"scenario", r.scenario_id},
        {"measurement", measurement_to_json(r.measurement)},
        {"out_of_spec", r.out_of_spec},
    };
}

// ----------------------------------------------------------------------------
// Virtual plug
// ----------------------------------------------------------------------------

/// The plug as one event-driven state machine: a relay, a sequential sampler
/// over the simulated world, the metering loop, and the dual-mode serial
/// endpoint. Callers own the event order; virtual time only moves via tick().
class VirtualPlug {
public:
    VirtualPlug(sim::WaveformSpec waveform, sim::SensorChain chain,
                sim::AdcModel adc, sim::SamplerTiming timing,
                DeviceConfig config = {}, DeviceOptions options = {},
                std::string scenario_id = "scenario")
        : waveform_(std::move(waveform)), chain_(chain), adc_(adc),
          timing_(timing), options_(options), scenario_id_(std::move(scenario_id)) {
        if (options_.window_cycles < 1)
            throw config_error("device: window_cycles must be >= 1");
        power_on(config);
    }

    /// Reset to the just-energized state. Idempotent for equal configs: the
    /// sampler reseeds, the relay opens, the log clears.
    void power_on(const DeviceConfig& config) {
        config_ = config;
        mode_ = config.key_pin_at_boot ? Mode::at : Mode::data;
        relay_closed_ = false;
        now_us_ = timing_.start_us;
        pair_count_ = 0;
        windows_done_ = 0;
        generator_.emplace(waveform_, chain_, adc_, timing_);
        v_samples_.clear();
        i_samples_.clear();
        log_.clear();

        const double period_s = 1.0 / waveform_.freq_hz;
        window_pairs_ = static_cast<std::size_t>(std::ceil(
            options_.window_cycles * period_s * 1e6 /
            static_cast<double>(timing_.period_us)));
        warmup_pairs_ = static_cast<std::size_t>(options_.meter.offset_window);
    }

    [[nodiscard]] Mode mode() const { return mode_; }
    [[nodiscard]] bool relay_closed() const { return relay_closed_; }
    [[nodiscard]] const DeviceConfig& config() const { return config_; }
    [[nodiscard]] const std::vector<LogRecord>& log() const { return log_; }
    [[nodiscard]] const sim::SampleStream& voltage_samples() const { return v_samples_; }
    [[nodiscard]] const sim::SampleStream& current_samples() const { return i_samples_; }

    /// Advance virtual time, consuming every sample due by now_us. Complete
    /// measurement windows append to the log; the newest one is returned.
    /// Time never moves backwards: stale calls are no-ops.
    std::optional<meter::Measurement> tick(std::int64_t now_us) {
        if (mode_ != Mode::data) return std::nullopt;
        now_us_ = std::max(now_us_, now_us);

        std::optional<meter::Measurement> latest;
        while (generator_->next_voltage_time() + timing_.skew_us <= now_us_) {
            auto pair = generator_->next(relay_closed_);
            v_samples_.push_back(pair.voltage);
            i_samples_.push_back(pair.current);
            ++pair_count_;
            if (auto m = maybe_measure()) latest = m;
        }
        return latest;
    }

    /// One serial line in, one response line out (terminators stripped/absent).
    std::string handle_line(std::string_view line) {
        auto decoded = wire::decode(line);
        if (auto* err = std::get_if<wire::ParseError>(&decoded))
            return mode_ == Mode::at ? at_error() : "ERROR:UNKNOWN " + err->token;
        const auto& cmd = std::get<wire::Command>(decoded);

        if (const auto* at = std::get_if<wire::AtCommand>(&cmd)) {
            if (mode_ != Mode::at) return "ERROR:MODE";
            return handle_at(*at);
        }
        if (mode_ != Mode::data) return at_error();

        struct Visitor {
            VirtualPlug& plug;
            std::string operator()(const wire::RelayOn&) const {
                plug.relay_closed_ = true;
                return "OK";
            }
            std::string operator()(const wire::RelayOff&) const {
                plug.relay_closed_ = false;
                return "OK";
            }
            std::string operator()(const wire::Read&) const {
                if (plug.log_.empty()) return "BUSY";
                return measurement_to_line(plug.log_.back().measurement);
            }
            std::string operator()(const wire::Status&) const {
                return "RELAY:" + std::string(plug.relay_closed_ ? "CLOSED" : "OPEN") +
                       " UPTIME_US:" + std::to_string(plug.now_us_ - plug.timing_.start_us) +
                       " MEASUREMENTS:" + std::to_string(plug.log_.size());
            }
            std::string operator()(const wire::AtCommand&) const { return "ERROR:MODE"; }
        };
        return std::visit(Visitor{*this}, cmd);
    }

private:
    static std::string at_error() { return "ERROR:(0)"; }

    std::string handle_at(const wire::AtCommand& at) {
        struct Visitor {
            VirtualPlug& plug;
            std::string operator()(const wire::AtPing&) const { return "OK"; }
            std::string operator()(const wire::AtName& c) const {
                plug.config_.name = c.name;
                return "OK";
            }
            std::string operator()(const wire::AtPswd& c) const {
                plug.config_.password = c.pswd;
                return "OK";
            }
            std::string operator()(const wire::AtRole& c) const {
                plug.config_.role = c.role;
                return "OK";
            }
        };
        return std::visit(Visitor{*this}, at);
    }

    /// Window k spans pairs [warmup + k*window, warmup + (k+1)*window). The
    /// preceding offset-window pairs ride along as centering context and are
    /// dropped again inside measure().
    std::optional<meter::Measurement> maybe_measure() {
        const std::size_t due = warmup_pairs_ + (windows_done_ + 1) * window_pairs_;
        if (pair_count_ < due) return std::nullopt;

        const std::size_t begin = windows_done_ * window_pairs_;
        sim::SampleStream v(v_samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                            v_samples_.begin() + static_cast<std::ptrdiff_t>(due));
        sim::SampleStream i(i_samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                            i_samples_.begin() + static_cast<std::ptrdiff_t>(due));
        ++windows_done_;

        meter::Measurement m = meter::measure(v, i, chain_, options_.meter);
        LogRecord rec{m.t_us, m, m.irms > options_.overcurrent_limit_a, scenario_id_};
        log_.push_back(rec);
        if (rec.out_of_spec && options_.auto_trip) relay_closed_ = false;
        return m;
    }

    sim::WaveformSpec waveform_;
    sim::SensorChain chain_;
    sim::AdcModel adc_;
    sim::SamplerTiming timing_;
    DeviceOptions options_;
    std::string scenario_id_;

    DeviceConfig config_;
    Mode mode_ = Mode::data;
    bool relay_closed_ = false;
    std::int64_t now_us_ = 0;
    std::size_t pair_count_ = 0;
    std::size_t windows_done_ = 0;
    std::size_t window_pairs_ = 0;
    std::size_t warmup_pairs_ = 0;
    std::optional<sim::SampleGenerator> generator_;
    sim::SampleStream v_samples_;
    sim::SampleStream i_samples_;
    std::vector<LogRecord> log_;
};

} // namespace voltplug::device
