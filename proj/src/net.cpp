#include "handfly/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <utility>

namespace handfly::net
{
Endpoint Endpoint::resolve(const std::string& host, std::uint16_t port)
{
        Endpoint ep;
        ep.addr.sin_family = AF_INET;
        ep.addr.sin_port = htons(port);
        if (inet_pton(AF_INET, host.c_str(), &ep.addr.sin_addr) == 1)
        {
                return ep;
        }
        addrinfo hints{};
        hints.ai_family = AF_INET;
        hints.ai_socktype = SOCK_DGRAM;
        addrinfo* result = nullptr;
        if (getaddrinfo(host.c_str(), nullptr, &hints, &result) != 0 || result == nullptr)
        {
                throw NetError("cannot resolve host " + host);
        }
        ep.addr.sin_addr = reinterpret_cast<sockaddr_in*>(result->ai_addr)->sin_addr;
        freeaddrinfo(result);
        return ep;
}

UdpSocket::UdpSocket() : fd_(::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0))
{
        if (fd_ < 0)
        {
                throw NetError(std::string("socket: ") + std::strerror(errno));
        }
}

UdpSocket UdpSocket::bind(const std::string& host, std::uint16_t port)
{
        UdpSocket s;
        const Endpoint ep = Endpoint::resolve(host, port);
        if (::bind(s.fd_, reinterpret_cast<const sockaddr*>(&ep.addr), sizeof(ep.addr)) != 0)
        {
                throw PortBindFailure("cannot bind udp " + host + ":" + std::to_string(port) + ": "
                                      + std::strerror(errno));
        }
        return s;
}

UdpSocket::~UdpSocket()
{
        if (fd_ >= 0)
        {
                ::close(fd_);
        }
}

UdpSocket::UdpSocket(UdpSocket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}

UdpSocket& UdpSocket::operator=(UdpSocket&& other) noexcept
{
        if (this != &other)
        {
                if (fd_ >= 0)
                {
                        ::close(fd_);
                }
                fd_ = std::exchange(other.fd_, -1);
        }
        return *this;
}

std::uint16_t UdpSocket::local_port() const
{
        sockaddr_in addr{};
        socklen_t len = sizeof(addr);
        if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
        {
                return 0;
        }
        return ntohs(addr.sin_port);
}

bool UdpSocket::send_to(const Endpoint& to, std::string_view data) const
{
        const auto n = ::sendto(fd_, data.data(), data.size(), 0, reinterpret_cast<const sockaddr*>(&to.addr),
                                sizeof(to.addr));
        return n == static_cast<ssize_t>(data.size());
}

std::optional<UdpSocket::Received> UdpSocket::receive(std::chrono::milliseconds timeout) const
{
        pollfd pfd{fd_, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
        if (ready <= 0 || (pfd.revents & POLLIN) == 0)
        {
                return std::nullopt;
        }
        std::array<char, 65536> buf;
        Received r;
        socklen_t len = sizeof(r.from.addr);
        const auto n = ::recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&r.from.addr), &len);
        if (n < 0)
        {
                return std::nullopt;
        }
        r.data.assign(buf.data(), static_cast<std::size_t>(n));
        return r;
}
}
