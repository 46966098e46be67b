// voltplug: drive the virtual smart plug from the command line.
//
// Subcommands: simulate, serve, relay on|off, read, status,
// validate lag|rms|power, log export. Exit codes: 0 success, 1 protocol
// error, 2 usage error.

#include "voltplug/voltplug.hpp"

#include "tcp.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace voltplug;

namespace {

constexpr std::uint16_t k_default_port = 9761;

/// Seed precedence: --seed flag, then VOLTPLUG_SEED, then the scenario file.
void apply_seed(Scenario& scenario, const std::optional<std::uint64_t>& cli_seed) {
    if (cli_seed) {
        scenario.waveform.noise.seed = *cli_seed;
        return;
    }
    if (const char* env = std::getenv("VOLTPLUG_SEED"))
        scenario.waveform.noise.seed = std::stoull(env);
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot open output file: " + path);
    return file;
}

device::VirtualPlug device_for(const Scenario& scenario, bool key_pin) {
    device::DeviceConfig cfg;
    cfg.key_pin_at_boot = key_pin;
    device::DeviceOptions opt;
    opt.meter = scenario.meter_config();
    return device::VirtualPlug(scenario.waveform, scenario.chain, scenario.adc,
                               scenario.timing, cfg, opt, scenario.id);
}

int run_simulate(const std::string& scenario_path, std::int64_t duration_us,
                 const std::optional<std::uint64_t>& seed, const std::string& out_path) {
    Scenario scenario = load_scenario(scenario_path);
    apply_seed(scenario, seed);
    const auto stream = sim::run_sampler(scenario.waveform, scenario.chain, scenario.adc,
                                         scenario.timing, duration_us);
    std::ofstream file;
    sim::write_csv(open_out(file, out_path), stream);
    return 0;
}

void append_log_records(const device::VirtualPlug& plug, std::size_t& written,
                        std::ofstream& log) {
    for (; written < plug.log().size(); ++written)
        log << device::log_record_to_json(plug.log()[written]).dump() << '\n';
    log.flush();
}

int run_serve(const std::string& scenario_path, std::uint16_t port, std::int64_t step_us,
              bool key_pin, const std::string& log_path, bool once) {
    Scenario scenario = load_scenario(scenario_path);
    apply_seed(scenario, std::nullopt);
    auto plug = device_for(scenario, key_pin);

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log) throw std::runtime_error("cannot open log file: " + log_path);
    }
    std::size_t written = 0;

    auto listener = voltplug_cli::listen_on(port);
    std::cerr << "voltplug: serving " << scenario.id << " on 127.0.0.1:" << port
              << " (virtual step " << step_us << " us per frame)\n";
    std::int64_t now = scenario.timing.start_us;
    for (;;) {
        auto client = voltplug_cli::accept_client(listener);
        voltplug_cli::LineReader reader(client);
        while (auto line = reader.next()) {
            now += step_us;
            plug.tick(now);
            voltplug_cli::send_all(client, plug.handle_line(*line) + "\n");
            if (log.is_open()) append_log_records(plug, written, log);
        }
        if (once) break;
    }
    return 0;
}

int response_exit_code(const std::string& response) {
    if (response == "BUSY" || response.rfind("ERROR", 0) == 0) return 1;
    return 0;
}

/// Run one wire command against a served plug or an in-process device.
int run_wire_command(const std::string& payload, const std::string& connect,
                     const std::string& scenario_path, std::int64_t advance_us,
                     bool relay_on_first) {
    std::string response;
    if (!connect.empty()) {
        const auto [host, port] = voltplug_cli::parse_endpoint(connect, k_default_port);
        auto sock = voltplug_cli::connect_to(host, port);
        voltplug_cli::send_all(sock, payload + "\n");
        voltplug_cli::LineReader reader(sock);
        const auto line = reader.next();
        if (!line) throw std::runtime_error("connection closed without a response");
        response = *line;
    } else {
        if (scenario_path.empty())
            throw CLI::ValidationError("either --connect or --scenario is required");
        Scenario scenario = load_scenario(scenario_path);
        apply_seed(scenario, std::nullopt);
        auto plug = device_for(scenario, false);
        if (relay_on_first) plug.handle_line("RELAY ON");
        plug.tick(scenario.timing.start_us + advance_us);
        response = plug.handle_line(payload);
    }
    std::cout << response << "\n";
    return response_exit_code(response);
}

int run_validate(const std::string& which, const std::string& scenario_path,
                 const std::optional<std::uint64_t>& seed, int n, double interval_s,
                 bool skew_compensated, const std::string& format,
                 const std::string& out_path) {
    Scenario scenario = load_scenario(scenario_path);
    apply_seed(scenario, seed);

    std::vector<host::ValidationReport> reports;
    if (which == "lag") {
        host::LagOptions opt;
        opt.n = n;
        opt.compensate_skew = skew_compensated;
        reports.push_back(host::run_lag_protocol(scenario, opt));
    } else if (which == "rms") {
        host::RmsOptions opt;
        opt.n = n;
        opt.interval_virtual_s = interval_s;
        const auto res = host::run_rms_protocol(scenario, opt);
        reports = {res.truth, res.peak, res.direct};
    } else {
        host::PowerOptions opt;
        opt.n = n;
        opt.interval_virtual_s = interval_s;
        reports.push_back(host::run_power_protocol(scenario, opt));
    }

    if (format == "table") std::cout << host::render_table(reports);
    else if (format == "json") std::cout << host::reports_to_json(reports).dump(2) << "\n";
    else std::cout << host::reports_to_csv(reports);

    if (!out_path.empty()) {
        std::ofstream file(out_path);
        if (!file) throw std::runtime_error("cannot open output file: " + out_path);
        file << host::reports_to_json(reports).dump(2) << "\n";
    }
    return 0;
}

int run_log_export(const std::string& in_path, const std::string& format,
                   const std::string& out_path) {
    std::ifstream in(in_path);
    if (!in) throw std::runtime_error("cannot open log file: " + in_path);
    std::ofstream file;
    std::ostream& out = open_out(file, out_path);

    if (format == "jsonl") {
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) out << line << '\n';
        return 0;
    }
    out << "t_virtual_us,scenario,out_of_spec,vrms,irms,p_active,s_apparent,"
           "q_reactive,phi_deg,t_us,cycles_used\n";
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        const auto& m = j.at("measurement");
        out << j.at("t_virtual_us").get<std::int64_t>() << ','
            << j.at("scenario").get<std::string>() << ','
            << (j.at("out_of_spec").get<bool>() ? 1 : 0) << ','
            << m.at("vrms").get<double>() << ',' << m.at("irms").get<double>() << ','
            << m.at("p_active").get<double>() << ',' << m.at("s_apparent").get<double>()
            << ',' << m.at("q_reactive").get<double>() << ',';
        if (m.contains("phi_deg")) out << m.at("phi_deg").get<double>();
        out << ',' << m.at("t_us").get<std::int64_t>() << ','
            << m.at("cycles_used").get<int>() << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"virtual smart-plug simulator, meter, and validation harness"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    std::string scenario_path, out_path, connect, format = "table", log_path, in_path;
    std::int64_t duration_us = 1'000'000;
    std::int64_t step_us = 100'000;
    std::int64_t advance_us = 300'000;
    std::uint16_t port = k_default_port;
    int n = 30;
    double interval_s = 60.0;
    bool skew_compensated = false, key_pin = false, once = false, relay_on_first = false;

    auto* simulate = app.add_subcommand("simulate", "scenario JSON -> sample CSV");
    simulate->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    simulate->add_option("--duration-us", duration_us, "virtual capture length");
    simulate->add_option("--seed", seed, "noise seed override");
    simulate->add_option("--out", out_path, "output file (default stdout)");

    auto* serve = app.add_subcommand("serve", "run a virtual plug on a localhost socket");
    serve->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    serve->add_option("--port", port, "TCP port (default 9761)");
    serve->add_option("--step-us", step_us, "virtual time advance per received frame");
    serve->add_flag("--key-pin", key_pin, "raise the key pin at boot (AT mode)");
    serve->add_option("--log", log_path, "append measurements to a JSONL file");
    serve->add_flag("--once", once, "exit after the first client disconnects");

    auto add_wire_opts = [&](CLI::App* cmd) {
        cmd->add_option("--connect", connect, "host:port of a served plug");
        cmd->add_option("--scenario", scenario_path, "run in-process on this scenario");
        cmd->add_option("--advance-us", advance_us,
                        "virtual time to advance before the command (in-process)");
        cmd->add_flag("--relay-on", relay_on_first,
                      "close the relay before the command (in-process)");
    };
    auto* relay = app.add_subcommand("relay", "switch the load relay");
    auto* relay_on = relay->add_subcommand("on", "close the relay");
    auto* relay_off = relay->add_subcommand("off", "open the relay");
    relay->require_subcommand(1);
    add_wire_opts(relay_on);
    add_wire_opts(relay_off);
    auto* read = app.add_subcommand("read", "fetch the latest measurement as JSON");
    add_wire_opts(read);
    auto* status = app.add_subcommand("status", "fetch relay state and uptime");
    add_wire_opts(status);

    auto* validate = app.add_subcommand("validate", "run a validation protocol");
    std::string which;
    validate->add_option("protocol", which, "lag | rms | power")
        ->required()
        ->check(CLI::IsMember({"lag", "rms", "power"}));
    validate->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    validate->add_option("--n", n, "readings per batch (default 30)");
    validate->add_option("--seed", seed, "noise seed override");
    validate->add_option("--interval-s", interval_s, "virtual seconds between readings");
    validate->add_flag("--skew-compensated", skew_compensated,
                       "resample away the sequential-read skew (lag protocol)");
    validate->add_option("--format", format, "table | json | csv")
        ->check(CLI::IsMember({"table", "json", "csv"}));
    validate->add_option("--out", out_path, "also write the JSON report here");

    auto* log_cmd = app.add_subcommand("log", "measurement log tooling");
    auto* log_export = log_cmd->add_subcommand("export", "JSONL log -> CSV or JSONL");
    log_cmd->require_subcommand(1);
    log_export->add_option("--in", in_path, "JSONL log file")->required();
    log_export->add_option("--format", format, "csv | jsonl")
        ->check(CLI::IsMember({"csv", "jsonl"}));
    log_export->add_option("--out", out_path, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (simulate->parsed())
            return run_simulate(scenario_path, duration_us, seed, out_path);
        if (serve->parsed())
            return run_serve(scenario_path, port, step_us, key_pin, log_path, once);
        if (relay_on->parsed())
            return run_wire_command("RELAY ON", connect, scenario_path, advance_us,
                                    relay_on_first);
        if (relay_off->parsed())
            return run_wire_command("RELAY OFF", connect, scenario_path, advance_us,
                                    relay_on_first);
        if (read->parsed())
            return run_wire_command("READ", connect, scenario_path, advance_us,
                                    relay_on_first);
        if (status->parsed())
            return run_wire_command("STATUS", connect, scenario_path, advance_us,
                                    relay_on_first);
        if (validate->parsed()) {
            if (format == "jsonl") format = "table";
            return run_validate(which, scenario_path, seed, n, interval_s,
                                skew_compensated, format, out_path);
        }
        if (log_export->parsed()) {
            if (format == "table") format = "csv";
            return run_log_export(in_path, format, out_path);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
