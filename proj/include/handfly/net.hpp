#pragma once

#include <netinet/in.h>

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace handfly::net
{
class PortBindFailure : public std::runtime_error
{
public:
        using std::runtime_error::runtime_error;
};

class NetError : public std::runtime_error
{
public:
        using std::runtime_error::runtime_error;
};

struct Endpoint
{
        sockaddr_in addr{};

        /// IPv4 literal or resolvable host name.
        static Endpoint resolve(const std::string& host, std::uint16_t port);

        [[nodiscard]] std::uint16_t port() const { return ntohs(addr.sin_port); }
};

/// RAII IPv4 UDP socket.
class UdpSocket
{
public:
        /// Unbound socket for sending only.
        UdpSocket();

        /// Binds to host:port; port 0 picks an ephemeral port. Throws PortBindFailure.
        static UdpSocket bind(const std::string& host, std::uint16_t port);

        ~UdpSocket();
        UdpSocket(UdpSocket&& other) noexcept;
        UdpSocket& operator=(UdpSocket&& other) noexcept;
        UdpSocket(const UdpSocket&) = delete;
        UdpSocket& operator=(const UdpSocket&) = delete;

        [[nodiscard]] std::uint16_t local_port() const;

        /// Best effort; returns false if the datagram was not handed to the kernel.
        bool send_to(const Endpoint& to, std::string_view data) const;

        struct Received
        {
                std::string data;
                Endpoint from;
        };

        /// Waits up to `timeout` for one datagram.
        [[nodiscard]] std::optional<Received> receive(std::chrono::milliseconds timeout) const;

private:
        explicit UdpSocket(int fd) : fd_(fd) {}

        int fd_ = -1;
};
}
