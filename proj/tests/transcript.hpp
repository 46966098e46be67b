#pragma once

// Golden transcript replay. Format, one frame per line:
//   # key_pin=<0|1> step_us=<n>     header, first line
//   > <frame payload>               sent to the device
//   < <expected response>           response the device must produce
// Virtual time advances by step_us before each sent frame, mirroring the
// serve loop.

#include "voltplug/device.hpp"
#include "voltplug/scenario.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace transcript {

struct Session {
    bool key_pin = false;
    std::int64_t step_us = 100'000;
    std::vector<std::string> sent;      // '>' lines, payload only
    std::vector<std::string> expected;  // '<' lines, payload only
};

inline Session parse(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("transcript: cannot open " + path);
    Session s;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hdr(line.substr(1));
            std::string kv;
            while (hdr >> kv) {
                if (kv.rfind("key_pin=", 0) == 0) s.key_pin = kv.substr(8) == "1";
                if (kv.rfind("step_us=", 0) == 0) s.step_us = std::stoll(kv.substr(8));
            }
        } else if (line.rfind("> ", 0) == 0) {
            s.sent.push_back(line.substr(2));
        } else if (line.rfind("< ", 0) == 0) {
            s.expected.push_back(line.substr(2));
        } else {
            throw std::runtime_error("transcript: bad line: " + line);
        }
    }
    return s;
}

/// The fixed world the conformance transcripts run against.
inline voltplug::device::VirtualPlug make_device(bool key_pin) {
    voltplug::sim::WaveformSpec spec;
    spec.vrms_v = 127.0;
    spec.load.kind = voltplug::sim::LoadKind::resistive;
    spec.load.resistance_ohm = 25.4;
    voltplug::device::DeviceConfig cfg;
    cfg.key_pin_at_boot = key_pin;
    return voltplug::device::VirtualPlug(spec, voltplug::sim::SensorChain{},
                                         voltplug::sim::AdcModel{},
                                         voltplug::sim::SamplerTiming{}, cfg, {},
                                         "transcript");
}

inline std::vector<std::string> run(const Session& s) {
    auto plug = make_device(s.key_pin);
    std::vector<std::string> responses;
    std::int64_t now = 0;
    for (const auto& frame : s.sent) {
        now += s.step_us;
        plug.tick(now);
        responses.push_back(plug.handle_line(frame));
    }
    return responses;
}

struct ReplayResult {
    int mismatches = 0;
    std::string report;
};

/// Byte-exact comparison of device responses against the golden file.
inline ReplayResult replay(const std::string& path) {
    const Session s = parse(path);
    const auto got = run(s);
    ReplayResult r;
    if (got.size() != s.expected.size()) {
        r.mismatches = 1;
        r.report = "response count mismatch";
        return r;
    }
    for (std::size_t k = 0; k < got.size(); ++k) {
        if (got[k] != s.expected[k]) {
            ++r.mismatches;
            r.report += "frame '" + s.sent[k] + "': expected '" + s.expected[k] +
                        "' got '" + got[k] + "'\n";
        }
    }
    return r;
}

/// Regenerated transcript content for the fixture-update tool.
inline std::string regenerate(const std::string& path) {
    const Session s = parse(path);
    const auto got = run(s);
    std::ostringstream out;
    out << "# key_pin=" << (s.key_pin ? 1 : 0) << " step_us=" << s.step_us << "\n";
    for (std::size_t k = 0; k < s.sent.size(); ++k)
        out << "> " << s.sent[k] << "\n< " << got[k] << "\n";
    return out.str();
}

} // namespace transcript
