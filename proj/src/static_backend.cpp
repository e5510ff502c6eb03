#include "xborder/static_backend.hpp"

#include <netdb.h>
#include <sys/socket.h>

#include <future>
#include <httplib.h>
#include <memory>
#include <thread>

#include "xborder/html_resources.hpp"
#include "xborder/url.hpp"

namespace xborder {
namespace {

using std::chrono::milliseconds;

std::optional<std::string> resolve_host(const std::string& host) {
  std::string name = host;
  if (name.starts_with('[') && name.ends_with(']')) name = name.substr(1, name.size() - 2);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(name.c_str(), nullptr, &hints, &res);
  if (res) ::freeaddrinfo(res);
  if (rc != 0) return std::string("getaddrinfo: ") + ::gai_strerror(rc);
  return std::nullopt;
}

bool looks_like_html(const httplib::Response& res) {
  if (!res.has_header("Content-Type")) return true;
  const auto type = url::to_lower_ascii(res.get_header_value("Content-Type"));
  return type.find("html") != std::string::npos || type.find("text/plain") != std::string::npos;
}

std::string describe_error(httplib::Error err, long verify_result) {
  std::string msg = "httplib: " + httplib::to_string(err);
  if (err == httplib::Error::SSLServerVerification && verify_result != 0)
    msg += std::string(" (") + X509_verify_cert_error_string(verify_result) + ")";
  return msg;
}

CaptureResult fetch(const std::string& target, const StaticBackendOptions& opts,
                    const CaptureTimeouts& timeouts) {
  const auto start = now_ms();
  const auto deadline = start + timeouts.nav_timeout;
  auto elapsed = [&] { return std::chrono::duration_cast<milliseconds>(now_ms() - start); };
  auto fail = [&](std::string msg) {
    return CaptureResult::failure(target, BackendKind::Static, std::move(msg), elapsed());
  };

  CaptureResult result;
  result.target_url = target;
  result.backend = BackendKind::Static;

  std::string current = target;
  for (int hop = 0;; ++hop) {
    const auto parsed = url::parse(current);
    if (!parsed || !parsed->has_authority || parsed->host.empty())
      return fail("invalid URL: " + current);
    if (parsed->scheme != "http" && parsed->scheme != "https")
      return fail("unsupported scheme: " + parsed->scheme);
    result.requests.push_back({current, ResourceHint::Document, now_ms()});

    if (auto dns_error = resolve_host(parsed->host)) return fail(*dns_error);

    const auto remaining = std::chrono::duration_cast<milliseconds>(deadline - now_ms());
    if (remaining.count() <= 0)
      return fail("navigation timeout after " + std::to_string(timeouts.nav_timeout.count()) +
                  " ms");

    httplib::Client client(parsed->origin());
    client.set_follow_location(false);
    client.set_connection_timeout(remaining);
    client.set_read_timeout(remaining);
    client.set_write_timeout(remaining);
    client.set_keep_alive(false);
    client.enable_server_certificate_verification(true);
    if (opts.ca_cert_file) client.set_ca_cert_path(*opts.ca_cert_file);

    std::string path = parsed->path.empty() ? "/" : parsed->path;
    if (parsed->query) path += "?" + *parsed->query;
    httplib::Headers headers{{"User-Agent", opts.user_agent},
                             {"Accept", "text/html,application/xhtml+xml,*/*;q=0.8"}};
    auto res = client.Get(path, headers);
    if (!res) return fail(describe_error(res.error(), client.get_openssl_verify_result()));

    const int status = res->status;
    if (status >= 300 && status < 400 && res->has_header("Location")) {
      if (hop >= opts.max_redirects)
        return fail("too many redirects (limit " + std::to_string(opts.max_redirects) + ")");
      auto next = url::resolve(current, res->get_header_value("Location"));
      if (!next) return fail("unparseable redirect Location: " + res->get_header_value("Location"));
      current = *next;
      continue;
    }

    if (looks_like_html(*res)) {
      const auto observed = now_ms();
      for (auto& ref : extract_static_resources(res->body, current))
        result.requests.push_back({std::move(ref.url), ref.hint, observed});
    }
    result.duration = elapsed();
    return result;
  }
}

}  // namespace

std::string default_user_agent() { return "xborder/" + std::string(kToolVersion); }

StaticBackend::StaticBackend(StaticBackendOptions options) : options_(std::move(options)) {}

CaptureResult StaticBackend::capture_page(const std::string& url, const CaptureTimeouts& timeouts) {
  const auto start = now_ms();
  // The worker owns copies of everything it touches so it can outlive this
  // call when name resolution hangs past the deadline.
  auto task = std::make_shared<std::packaged_task<CaptureResult()>>(
      [url, opts = options_, timeouts]() {
        try {
          return fetch(url, opts, timeouts);
        } catch (const std::exception& e) {
          return CaptureResult::failure(url, BackendKind::Static, e.what(), milliseconds{0});
        }
      });
  auto future = task->get_future();
  std::thread([task] { (*task)(); }).detach();

  const auto budget = timeouts.nav_timeout + timeouts.settle_timeout;
  if (future.wait_for(budget) != std::future_status::ready)
    return CaptureResult::failure(
        url, BackendKind::Static,
        "navigation timeout after " + std::to_string(timeouts.nav_timeout.count()) + " ms",
        std::chrono::duration_cast<milliseconds>(now_ms() - start));
  return future.get();
}

}  // namespace xborder
