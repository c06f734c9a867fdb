#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

namespace handfly
{
/// WebSocket bridge for the operator console: `/ws` on the pipeline's HTTP port. Outbound
/// messages are broadcast to every connected client; inbound text frames go to the handler
/// (called on the server thread).
class ConsoleServer
{
public:
        using Handler = std::function<void(const std::string&)>;

        /// Port 0 picks an ephemeral port. Throws net::PortBindFailure.
        ConsoleServer(const std::string& host, std::uint16_t port, Handler on_message);
        ~ConsoleServer();
        ConsoleServer(const ConsoleServer&) = delete;
        ConsoleServer& operator=(const ConsoleServer&) = delete;

        [[nodiscard]] std::uint16_t port() const;
        [[nodiscard]] std::size_t clients() const;

        void broadcast(std::string message);

private:
        struct Impl;
        std::shared_ptr<Impl> impl_;
};
}
