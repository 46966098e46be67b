#pragma once

// Minimal blocking TCP helpers for the serve/connect subcommands. The wire
// protocol is newline-terminated ASCII over any reliable byte stream; this is
// the localhost flavour.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdint>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace voltplug_cli {

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
    Socket& operator=(Socket&& other) noexcept {
        if (this != &other) {
            close_fd();
            fd_ = other.fd_;
            other.fd_ = -1;
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close_fd(); }

    [[nodiscard]] int fd() const { return fd_; }
    [[nodiscard]] bool valid() const { return fd_ >= 0; }

private:
    void close_fd() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }
    int fd_ = -1;
};

inline Socket listen_on(std::uint16_t port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("socket() failed");
    Socket sock(fd);
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw std::runtime_error("bind() failed on port " + std::to_string(port));
    if (::listen(fd, 1) != 0) throw std::runtime_error("listen() failed");
    return sock;
}

inline Socket accept_client(const Socket& listener) {
    const int fd = ::accept(listener.fd(), nullptr, nullptr);
    if (fd < 0) throw std::runtime_error("accept() failed");
    return Socket(fd);
}

inline Socket connect_to(const std::string& host, std::uint16_t port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("socket() failed");
    Socket sock(fd);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw std::runtime_error("bad host address: " + host);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw std::runtime_error("connect() failed to " + host + ":" + std::to_string(port));
    return sock;
}

inline void send_all(const Socket& sock, std::string_view data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        const ssize_t n = ::send(sock.fd(), data.data() + sent, data.size() - sent, 0);
        if (n <= 0) throw std::runtime_error("send() failed");
        sent += static_cast<std::size_t>(n);
    }
}

/// Buffered line reader; returns nullopt on clean EOF.
class LineReader {
public:
    explicit LineReader(const Socket& sock) : fd_(sock.fd()) {}

    std::optional<std::string> next() {
        for (;;) {
            const std::size_t nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return line;
            }
            char chunk[512];
            const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n < 0) throw std::runtime_error("recv() failed");
            if (n == 0) return std::nullopt;
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    int fd_;
    std::string buffer_;
};

/// host:port with a default port when omitted.
inline std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& spec,
                                                            std::uint16_t default_port) {
    const std::size_t colon = spec.find(':');
    if (colon == std::string::npos) return {spec, default_port};
    return {spec.substr(0, colon),
            static_cast<std::uint16_t>(std::stoi(spec.substr(colon + 1)))};
}

} // namespace voltplug_cli
