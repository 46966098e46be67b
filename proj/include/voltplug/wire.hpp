#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <variant>

namespace voltplug::wire {

/// Longest accepted frame payload (terminator excluded).
inline constexpr std::size_t max_payload_bytes = 256;

enum class Role { slave, master };

// ----------------------------------------------------------------------------
// Commands
// ----------------------------------------------------------------------------

struct AtPing {
    bool operator==(const AtPing&) const = default;
};
struct AtName {
    std::string name;
    bool operator==(const AtName&) const = default;
};
struct AtPswd {
    std::string pswd;
    bool operator==(const AtPswd&) const = default;
};
struct AtRole {
    Role role = Role::slave;
    bool operator==(const AtRole&) const = default;
};

using AtCommand = std::variant<AtPing, AtName, AtPswd, AtRole>;

struct RelayOn {
    bool operator==(const RelayOn&) const = default;
};
struct RelayOff {
    bool operator==(const RelayOff&) const = default;
};
struct Read {
    bool operator==(const Read&) const = default;
};
struct Status {
    bool operator==(const Status&) const = default;
};

using Command = std::variant<RelayOn, RelayOff, Read, Status, AtCommand>;

/// Structured decode failure; never an exception so that decode stays total
/// over arbitrary bytes.
struct ParseError {
    std::string message;
    std::string token;
};

template <typename T>
using Result = std::variant<T, ParseError>;

template <typename T>
[[nodiscard]] bool ok(const Result<T>& r) {
    return std::holds_alternative<T>(r);
}

// ----------------------------------------------------------------------------
// Grammar
// ----------------------------------------------------------------------------

inline bool printable_ascii(std::string_view s) {
    for (unsigned char c : s)
        if (c < 0x20 || c > 0x7e) return false;
    return true;
}

namespace detail {

inline std::string first_token(std::string_view line) {
    const std::size_t cut = line.find_first_of(" =");
    std::string t(line.substr(0, std::min(cut, std::size_t{32})));
    return t;
}

} // namespace detail

/// AT grammar: `AT`, `AT+NAME=<1..32 chars>`, `AT+PSWD=<4 digits>`,
/// `AT+ROLE=0|1`. Case-sensitive, whitespace-exact.
inline Result<AtCommand> parse_at(std::string_view line) {
    if (line == "AT") return AtCommand{AtPing{}};
    if (line.rfind("AT+NAME=", 0) == 0) {
        std::string_view arg = line.substr(8);
        if (arg.empty() || arg.size() > 32)
            return ParseError{"name must be 1..32 characters", detail::first_token(line)};
        return AtCommand{AtName{std::string(arg)}};
    }
    if (line.rfind("AT+PSWD=", 0) == 0) {
        std::string_view arg = line.substr(8);
        if (arg.size() != 4)
            return ParseError{"password must be 4 digits", detail::first_token(line)};
        for (unsigned char c : arg)
            if (!std::isdigit(c))
                return ParseError{"password must be 4 digits", detail::first_token(line)};
        return AtCommand{AtPswd{std::string(arg)}};
    }
    if (line.rfind("AT+ROLE=", 0) == 0) {
        std::string_view arg = line.substr(8);
        if (arg == "0") return AtCommand{AtRole{Role::slave}};
        if (arg == "1") return AtCommand{AtRole{Role::master}};
        return ParseError{"role must be 0 or 1", detail::first_token(line)};
    }
    return ParseError{"unknown AT command", detail::first_token(line)};
}

/// Total decoder over a frame payload (terminator already stripped). Returns
/// a Command or a structured error carrying the offending token.
inline Result<Command> decode(std::string_view payload) {
    if (payload.size() > max_payload_bytes)
        return ParseError{"frame too long", std::string(payload.substr(0, 16))};
    if (!printable_ascii(payload))
        return ParseError{"frame contains non-printable bytes", {}};

    if (payload == "RELAY ON") return Command{RelayOn{}};
    if (payload == "RELAY OFF") return Command{RelayOff{}};
    if (payload == "READ") return Command{Read{}};
    if (payload == "STATUS") return Command{Status{}};
    if (payload.rfind("AT", 0) == 0) {
        auto at = parse_at(payload);
        if (auto* err = std::get_if<ParseError>(&at)) return *err;
        return Command{std::get<AtCommand>(at)};
    }
    return ParseError{"unknown verb", detail::first_token(payload)};
}

inline std::string encode(const AtCommand& cmd) {
    struct Visitor {
        std::string operator()(const AtPing&) const { return "AT"; }
        std::string operator()(const AtName& c) const { return "AT+NAME=" + c.name; }
        std::string operator()(const AtPswd& c) const { return "AT+PSWD=" + c.pswd; }
        std::string operator()(const AtRole& c) const {
            return c.role == Role::slave ? "AT+ROLE=0" : "AT+ROLE=1";
        }
    };
    return std::visit(Visitor{}, cmd);
}

/// Inverse of decode for every constructible command.
inline std::string encode(const Command& cmd) {
    struct Visitor {
        std::string operator()(const RelayOn&) const { return "RELAY ON"; }
        std::string operator()(const RelayOff&) const { return "RELAY OFF"; }
        std::string operator()(const Read&) const { return "READ"; }
        std::string operator()(const Status&) const { return "STATUS"; }
        std::string operator()(const AtCommand& at) const { return encode(at); }
    };
    return std::visit(Visitor{}, cmd);
}

/// Payload plus the LF terminator, ready for a byte stream.
inline std::string encode_frame(const Command& cmd) { return encode(cmd) + '\n'; }

} // namespace voltplug::wire
