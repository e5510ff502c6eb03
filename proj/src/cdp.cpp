#include "xborder/cdp.hpp"

#include <atomic>
#include <boost/asio/connect.hpp>
#include <boost/asio/executor_work_guard.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <deque>
#include <future>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "xborder/url.hpp"

namespace xborder::cdp {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

struct Connection::Impl {
  asio::io_context ioc;
  asio::executor_work_guard<asio::io_context::executor_type> work{ioc.get_executor()};
  websocket::stream<beast::tcp_stream> ws{ioc};
  beast::flat_buffer read_buffer;
  std::deque<std::string> outbox;  // io thread only
  std::thread runner;

  std::mutex mutex;
  std::uint64_t next_id = 0;
  std::map<std::uint64_t, std::promise<Json>> pending;
  std::uint64_t next_token = 0;
  std::map<std::uint64_t, std::pair<std::string, EventHandler>> handlers;
  std::function<void()> on_close;
  std::atomic<bool> open{false};

  void start_read() {
    ws.async_read(read_buffer, [this](beast::error_code ec, std::size_t) {
      if (ec) {
        shutdown("connection closed: " + ec.message());
        return;
      }
      const std::string text = beast::buffers_to_string(read_buffer.data());
      read_buffer.consume(read_buffer.size());
      dispatch(text);
      start_read();
    });
  }

  void dispatch(const std::string& text) {
    Json msg = Json::parse(text, nullptr, false);
    if (msg.is_discarded() || !msg.is_object()) return;
    if (auto id = msg.find("id"); id != msg.end() && id->is_number_unsigned()) {
      std::promise<Json> promise;
      {
        std::lock_guard lock(mutex);
        auto it = pending.find(id->get<std::uint64_t>());
        if (it == pending.end()) return;
        promise = std::move(it->second);
        pending.erase(it);
      }
      promise.set_value(std::move(msg));
      return;
    }
    auto method = msg.find("method");
    if (method == msg.end() || !method->is_string()) return;
    const std::string session = msg.value("sessionId", std::string{});
    const Json params = msg.value("params", Json::object());
    std::vector<EventHandler> targets;
    {
      std::lock_guard lock(mutex);
      for (const auto& [token, entry] : handlers)
        if (entry.first == kAllSessions || entry.first == session) targets.push_back(entry.second);
    }
    const std::string name = method->get<std::string>();
    for (auto& h : targets) {
      try {
        h(name, params, session);
      } catch (const std::exception&) {
        // A failing observer must not take the reader down.
      }
    }
  }

  void enqueue(std::string text) {
    asio::post(ioc, [this, text = std::move(text)]() mutable {
      outbox.push_back(std::move(text));
      if (outbox.size() == 1) write_next();
    });
  }

  void write_next() {
    ws.text(true);
    ws.async_write(asio::buffer(outbox.front()), [this](beast::error_code ec, std::size_t) {
      if (ec) {
        shutdown("write failed: " + ec.message());
        return;
      }
      outbox.pop_front();
      if (!outbox.empty()) write_next();
    });
  }

  void shutdown(const std::string& reason) {
    if (!open.exchange(false)) return;
    std::map<std::uint64_t, std::promise<Json>> orphaned;
    std::function<void()> closed;
    {
      std::lock_guard lock(mutex);
      orphaned.swap(pending);
      closed = on_close;
    }
    for (auto& [id, p] : orphaned) p.set_exception(std::make_exception_ptr(ConnectionClosed(reason)));
    if (closed) closed();
  }
};

Connection::Connection(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

std::shared_ptr<Connection> Connection::open(const std::string& ws_url,
                                             std::chrono::milliseconds timeout) {
  const auto parsed = url::parse(ws_url);
  if (!parsed || (parsed->scheme != "ws") || parsed->host.empty())
    throw ConnectionClosed("not a ws:// debugger URL: " + ws_url);

  auto impl = std::make_unique<Impl>();
  tcp::resolver resolver(impl->ioc);
  beast::error_code ec;
  auto results = resolver.resolve(parsed->host, std::to_string(parsed->effective_port()), ec);
  if (ec) throw ConnectionClosed("cannot resolve " + parsed->host + ": " + ec.message());

  auto& stream = beast::get_lowest_layer(impl->ws);
  stream.expires_after(timeout);
  stream.connect(results, ec);
  if (ec) throw ConnectionClosed("cannot connect to " + ws_url + ": " + ec.message());
  stream.expires_never();

  impl->ws.read_message_max(256u << 20);
  std::string target = parsed->path.empty() ? "/" : parsed->path;
  if (parsed->query) target += "?" + *parsed->query;
  const std::string host_header = parsed->host + ":" + std::to_string(parsed->effective_port());
  impl->ws.handshake(host_header, target, ec);
  if (ec) throw ConnectionClosed("WebSocket handshake with " + ws_url + " failed: " + ec.message());

  impl->open = true;
  auto conn = std::shared_ptr<Connection>(new Connection(std::move(impl)));
  Impl* raw = conn->impl_.get();
  raw->start_read();
  raw->runner = std::thread([raw] { raw->ioc.run(); });
  return conn;
}

Connection::~Connection() {
  close();
  if (impl_->runner.joinable()) impl_->runner.join();
}

Json Connection::call(std::string_view method, Json params, const std::string& session,
                      std::chrono::milliseconds timeout) {
  if (!impl_->open) throw ConnectionClosed("connection closed");
  std::uint64_t id;
  std::future<Json> reply;
  {
    std::lock_guard lock(impl_->mutex);
    id = ++impl_->next_id;
    reply = impl_->pending[id].get_future();
  }
  Json msg{{"id", id}, {"method", method}, {"params", std::move(params)}};
  if (!session.empty()) msg["sessionId"] = session;
  impl_->enqueue(msg.dump());

  if (reply.wait_for(timeout) != std::future_status::ready) {
    std::lock_guard lock(impl_->mutex);
    impl_->pending.erase(id);
    throw TimeoutError(std::string(method) + ": no reply within " +
                       std::to_string(timeout.count()) + " ms");
  }
  Json result = reply.get();
  if (auto err = result.find("error"); err != result.end())
    throw ProtocolError(std::string(method), err->value("message", std::string("unknown error")),
                        err->value("code", 0));
  return result.value("result", Json::object());
}

void Connection::send(std::string_view method, Json params, const std::string& session) {
  if (!impl_->open) return;
  std::uint64_t id;
  {
    std::lock_guard lock(impl_->mutex);
    id = ++impl_->next_id;
  }
  Json msg{{"id", id}, {"method", method}, {"params", std::move(params)}};
  if (!session.empty()) msg["sessionId"] = session;
  impl_->enqueue(msg.dump());
}

std::uint64_t Connection::subscribe(std::string session, EventHandler handler) {
  std::lock_guard lock(impl_->mutex);
  const auto token = ++impl_->next_token;
  impl_->handlers.emplace(token, std::make_pair(std::move(session), std::move(handler)));
  return token;
}

void Connection::unsubscribe(std::uint64_t token) {
  std::lock_guard lock(impl_->mutex);
  impl_->handlers.erase(token);
}

void Connection::set_close_handler(std::function<void()> handler) {
  std::lock_guard lock(impl_->mutex);
  impl_->on_close = std::move(handler);
}

bool Connection::is_open() const { return impl_->open; }

void Connection::close() {
  Impl* impl = impl_.get();
  asio::post(impl->ioc, [impl] {
    if (impl->ws.is_open()) {
      beast::error_code ignored;
      beast::get_lowest_layer(impl->ws).socket().shutdown(tcp::socket::shutdown_both, ignored);
      beast::get_lowest_layer(impl->ws).close();
    }
    impl->work.reset();
  });
  impl->shutdown("connection closed by client");
}

}  // namespace xborder::cdp
