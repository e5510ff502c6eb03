#include "ws_client.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

namespace xborder::testing {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;

struct WsClient::Impl {
  asio::io_context io;
  websocket::stream<asio::ip::tcp::socket> ws{io};
  std::thread reader;
  std::mutex mutex;
  std::condition_variable cv;
  std::deque<std::string> frames;
  bool closed = false;
};

WsClient::WsClient(const std::string& host, std::uint16_t port, const std::string& path)
    : impl_(std::make_unique<Impl>()) {
  asio::ip::tcp::resolver resolver(impl_->io);
  asio::connect(impl_->ws.next_layer(), resolver.resolve(host, std::to_string(port)));
  impl_->ws.handshake(host + ":" + std::to_string(port), path);
  impl_->reader = std::thread([impl = impl_.get()] {
    while (true) {
      beast::flat_buffer buf;
      beast::error_code ec;
      impl->ws.read(buf, ec);
      std::lock_guard lock(impl->mutex);
      if (ec) {
        impl->closed = true;
        impl->cv.notify_all();
        return;
      }
      impl->frames.push_back(beast::buffers_to_string(buf.data()));
      impl->cv.notify_all();
    }
  });
}

WsClient::~WsClient() {
  beast::error_code ec;
  impl_->ws.next_layer().shutdown(asio::ip::tcp::socket::shutdown_both, ec);
  impl_->ws.next_layer().close(ec);
  if (impl_->reader.joinable()) impl_->reader.join();
}

std::optional<std::string> WsClient::read(std::chrono::milliseconds timeout) {
  std::unique_lock lock(impl_->mutex);
  impl_->cv.wait_for(lock, timeout, [&] { return impl_->closed || !impl_->frames.empty(); });
  if (impl_->frames.empty()) return std::nullopt;
  auto f = std::move(impl_->frames.front());
  impl_->frames.pop_front();
  return f;
}

void WsClient::write(const std::string& text) { impl_->ws.write(asio::buffer(text)); }

}  // namespace xborder::testing
