#include "handfly/console_server.hpp"

#include "handfly/net.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <deque>
#include <mutex>
#include <set>
#include <thread>

namespace handfly
{
namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace
{
class Session;

struct Registry
{
        std::mutex mutex;
        std::set<std::shared_ptr<Session>> sessions;
};

class Session : public std::enable_shared_from_this<Session>
{
public:
        Session(tcp::socket socket, std::shared_ptr<Registry> registry, ConsoleServer::Handler handler)
                : ws_(std::move(socket)), registry_(std::move(registry)), handler_(std::move(handler))
        {
        }

        void start()
        {
                http::async_read(ws_.next_layer(), buffer_, request_,
                                 [self = shared_from_this()](beast::error_code ec, std::size_t) {
                                         self->on_request(ec);
                                 });
        }

        // Must run on the io thread.
        void send(std::shared_ptr<const std::string> message)
        {
                if (!open_)
                {
                        return;
                }
                queue_.push_back(std::move(message));
                if (queue_.size() > 256)
                {
                        queue_.pop_front(); // slow client: drop oldest
                }
                if (!writing_)
                {
                        write_next();
                }
        }

        void close()
        {
                beast::error_code ec;
                ws_.next_layer().close(ec);
        }

private:
        void on_request(beast::error_code ec)
        {
                if (ec)
                {
                        return;
                }
                if (!websocket::is_upgrade(request_) || request_.target() != "/ws")
                {
                        auto res = std::make_shared<http::response<http::string_body>>(
                                request_.target() == "/ws" ? http::status::bad_request : http::status::ok,
                                request_.version());
                        res->set(http::field::content_type, "text/plain");
                        res->body() = "handfly pipeline; console websocket at /ws\n";
                        res->prepare_payload();
                        res->keep_alive(false);
                        http::async_write(ws_.next_layer(), *res,
                                          [self = shared_from_this(), res](beast::error_code, std::size_t) {
                                                  self->close();
                                          });
                        return;
                }
                ws_.text(true);
                ws_.async_accept(request_, [self = shared_from_this()](beast::error_code accept_ec) {
                        if (accept_ec)
                        {
                                return;
                        }
                        self->open_ = true;
                        {
                                std::lock_guard lock(self->registry_->mutex);
                                self->registry_->sessions.insert(self);
                        }
                        self->read_next();
                });
        }

        void read_next()
        {
                ws_.async_read(incoming_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
                        if (ec)
                        {
                                self->drop();
                                return;
                        }
                        const std::string text = beast::buffers_to_string(self->incoming_.data());
                        self->incoming_.consume(self->incoming_.size());
                        if (self->handler_)
                        {
                                self->handler_(text);
                        }
                        self->read_next();
                });
        }

        void write_next()
        {
                if (queue_.empty())
                {
                        writing_ = false;
                        return;
                }
                writing_ = true;
                auto message = queue_.front();
                queue_.pop_front();
                ws_.async_write(asio::buffer(*message),
                                [self = shared_from_this(), message](beast::error_code ec, std::size_t) {
                                        if (ec)
                                        {
                                                self->drop();
                                                return;
                                        }
                                        self->write_next();
                                });
        }

        void drop()
        {
                open_ = false;
                std::lock_guard lock(registry_->mutex);
                registry_->sessions.erase(shared_from_this());
        }

        websocket::stream<tcp::socket> ws_;
        beast::flat_buffer buffer_;
        beast::flat_buffer incoming_;
        http::request<http::string_body> request_;
        std::shared_ptr<Registry> registry_;
        ConsoleServer::Handler handler_;
        std::deque<std::shared_ptr<const std::string>> queue_;
        bool writing_ = false;
        bool open_ = false;
};
}

struct ConsoleServer::Impl
{
        asio::io_context io;
        tcp::acceptor acceptor{io};
        std::shared_ptr<Registry> registry = std::make_shared<Registry>();
        Handler handler;
        std::thread thread;

        void accept_next()
        {
                acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
                        if (ec)
                        {
                                return;
                        }
                        std::make_shared<Session>(std::move(socket), registry, handler)->start();
                        accept_next();
                });
        }
};

ConsoleServer::ConsoleServer(const std::string& host, std::uint16_t port, Handler on_message)
        : impl_(std::make_shared<Impl>())
{
        impl_->handler = std::move(on_message);
        beast::error_code ec;
        const tcp::endpoint ep(asio::ip::make_address(host, ec), port);
        if (ec)
        {
                throw net::NetError("bad console address " + host);
        }
        impl_->acceptor.open(ep.protocol(), ec);
        if (!ec)
        {
                impl_->acceptor.set_option(asio::socket_base::reuse_address(true), ec);
                impl_->acceptor.bind(ep, ec);
        }
        if (!ec)
        {
                impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
        }
        if (ec)
        {
                throw net::PortBindFailure("cannot bind console port " + std::to_string(port) + ": " + ec.message());
        }
        impl_->accept_next();
        impl_->thread = std::thread([impl = impl_] { impl->io.run(); });
}

ConsoleServer::~ConsoleServer()
{
        asio::post(impl_->io, [impl = impl_] {
                beast::error_code ec;
                impl->acceptor.close(ec);
                std::lock_guard lock(impl->registry->mutex);
                for (const auto& s : impl->registry->sessions)
                {
                        s->close();
                }
                impl->io.stop();
        });
        if (impl_->thread.joinable())
        {
                impl_->thread.join();
        }
        std::lock_guard lock(impl_->registry->mutex);
        impl_->registry->sessions.clear();
}

std::uint16_t ConsoleServer::port() const
{
        return impl_->acceptor.local_endpoint().port();
}

std::size_t ConsoleServer::clients() const
{
        std::lock_guard lock(impl_->registry->mutex);
        return impl_->registry->sessions.size();
}

void ConsoleServer::broadcast(std::string message)
{
        auto shared = std::make_shared<const std::string>(std::move(message));
        asio::post(impl_->io, [impl = impl_, shared] {
                std::vector<std::shared_ptr<Session>> targets;
                {
                        std::lock_guard lock(impl->registry->mutex);
                        targets.assign(impl->registry->sessions.begin(), impl->registry->sessions.end());
                }
                for (const auto& s : targets)
                {
                        s->send(shared);
                }
        });
}
}
