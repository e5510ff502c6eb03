#include "xborder/event_stream.hpp"

#include <boost/asio/executor_work_guard.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <atomic>
#include <deque>
#include <set>
#include <thread>

#include "xborder/classify.hpp"

namespace xborder {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

// Pending frames beyond this are dropped for a subscriber that stopped
// reading.
constexpr std::size_t kMaxQueuedPerSubscriber = 10000;

class Subscriber : public std::enable_shared_from_this<Subscriber> {
 public:
  Subscriber(tcp::socket socket, std::function<void(Subscriber*)> on_gone)
      : ws_(std::move(socket)), on_gone_(std::move(on_gone)) {}

  void start(std::function<void(std::shared_ptr<Subscriber>)> on_ready) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this(), on_ready](beast::error_code ec) {
      if (ec) return;
      on_ready(self);
      self->read();
    });
  }

  void send(std::shared_ptr<const std::string> line) {
    if (closed_ || queue_.size() >= kMaxQueuedPerSubscriber) return;
    queue_.push_back(std::move(line));
    if (queue_.size() == 1) write_next();
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    beast::get_lowest_layer(ws_).close();
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->buffer_.consume(self->buffer_.size());
      if (ec) {
        self->gone();
        return;
      }
      self->read();
    });
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->gone();
                        return;
                      }
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->write_next();
                    });
  }

  void gone() {
    if (closed_ && !on_gone_) return;
    closed_ = true;
    if (auto cb = std::exchange(on_gone_, nullptr)) cb(this);
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  std::function<void(Subscriber*)> on_gone_;
  bool closed_ = false;
};

}  // namespace

struct EventStreamServer::Impl {
  asio::io_context ioc;
  asio::executor_work_guard<asio::io_context::executor_type> work{ioc.get_executor()};
  tcp::acceptor acceptor{ioc};
  std::set<std::shared_ptr<Subscriber>> subscribers;  // io thread only
  std::atomic<std::size_t> count{0};
  std::uint16_t port = 0;
  std::thread runner;
  std::atomic<bool> stopped{false};

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto sub = std::make_shared<Subscriber>(std::move(socket), [this](Subscriber* gone) {
        for (auto it = subscribers.begin(); it != subscribers.end(); ++it)
          if (it->get() == gone) {
            subscribers.erase(it);
            break;
          }
        count = subscribers.size();
      });
      sub->start([this](std::shared_ptr<Subscriber> ready) {
        subscribers.insert(std::move(ready));
        count = subscribers.size();
      });
      accept();
    });
  }
};

EventStreamServer::EventStreamServer(std::uint16_t port, const std::string& bind_address)
    : impl_(std::make_unique<Impl>()) {
  const tcp::endpoint endpoint(asio::ip::make_address(bind_address), port);
  impl_->acceptor.open(endpoint.protocol());
  impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
  impl_->acceptor.bind(endpoint);
  impl_->acceptor.listen();
  impl_->port = impl_->acceptor.local_endpoint().port();
  impl_->accept();
  impl_->runner = std::thread([impl = impl_.get()] { impl->ioc.run(); });
}

EventStreamServer::~EventStreamServer() { stop(); }

void EventStreamServer::stop() {
  if (impl_->stopped.exchange(true)) return;
  asio::post(impl_->ioc, [impl = impl_.get()] {
    beast::error_code ignored;
    impl->acceptor.close(ignored);
    for (const auto& s : impl->subscribers) s->close();
    impl->subscribers.clear();
    impl->count = 0;
    impl->work.reset();
  });
  if (impl_->runner.joinable()) impl_->runner.join();
}

void EventStreamServer::publish(const std::string& line) {
  if (impl_->stopped) return;
  auto shared = std::make_shared<const std::string>(line);
  asio::post(impl_->ioc, [impl = impl_.get(), shared] {
    for (const auto& s : impl->subscribers) s->send(shared);
  });
}

std::uint16_t EventStreamServer::port() const { return impl_->port; }
std::size_t EventStreamServer::subscriber_count() const { return impl_->count; }

std::string format_stream_message(std::string_view type, const json& payload) {
  return json{{"type", type}, {"payload", payload}}.dump() + "\n";
}

LiveMonitor::LiveMonitor(const Blacklist& blacklist, const AttributionMap& attribution,
                         EventPublisher& publisher)
    : blacklist_(blacklist), attribution_(attribution), publisher_(publisher) {}

void LiveMonitor::emit(std::string_view type, json payload) {
  publisher_.publish(format_stream_message(type, payload));
}

json LiveMonitor::summary_payload() const {
  return {{"pages", counts_.pages},
          {"requests", counts_.requests},
          {"bad_requests", counts_.bad_requests},
          {"by_company", counts_.by_company},
          {"by_country", counts_.by_country},
          {"by_group", counts_.by_group}};
}

void LiveMonitor::on_page(const PageVisit& visit) {
  std::lock_guard lock(mutex_);
  ++counts_.pages;
  emit("page", {{"page_url", visit.page_url}, {"observed_at", format_timestamp(visit.observed_at)}});
}

void LiveMonitor::on_request(const SessionRequest& event) {
  const auto& req = event.request;
  const auto match = blacklist_.match_url(req.request_url);
  std::lock_guard lock(mutex_);
  ++counts_.requests;
  const auto observed = format_timestamp(req.observed_at);
  emit("request", {{"request_url", req.request_url},
                   {"resource_hint", to_string(req.resource_hint)},
                   {"observed_at", observed},
                   {"page_url", event.page_url}});
  if (!match) return;
  const auto attr = resolve_attribution(*match, attribution_, nullptr);
  ++counts_.bad_requests;
  ++counts_.by_company[attr.company];
  ++counts_.by_country[attr.country];
  ++counts_.by_group[match->group_name];
  emit("bad_request", {{"request_url", req.request_url},
                       {"page_url", event.page_url},
                       {"matched_pattern", match->matched_pattern},
                       {"group_name", match->group_name},
                       {"company", attr.company},
                       {"country", attr.country},
                       {"service_type", to_string(attr.service_type)},
                       {"resource_hint", to_string(req.resource_hint)},
                       {"observed_at", observed}});
  emit("summary", summary_payload());
}

SessionEvents LiveMonitor::sink() {
  return {[this](const PageVisit& v) { on_page(v); },
          [this](const SessionRequest& r) { on_request(r); }};
}

LiveCounts LiveMonitor::counts() const {
  std::lock_guard lock(mutex_);
  return counts_;
}

LiveCounts stream_events(BrowserOptions options, EventPublisher& endpoint,
                         const Blacklist& blacklist, const AttributionMap& attribution,
                         const std::optional<std::string>& start_url,
                         const std::function<void(InteractiveSession&)>& on_open) {
  LiveMonitor monitor(blacklist, attribution, endpoint);
  auto session = open_interactive_session(std::move(options), monitor.sink());
  if (start_url) session->navigate(*start_url);
  if (on_open) on_open(*session);
  session->wait_closed();
  session->close();
  return monitor.counts();
}

}  // namespace xborder
