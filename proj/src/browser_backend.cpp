#include "xborder/browser_backend.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/prctl.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "xborder/cdp.hpp"
#include "xborder/error.hpp"
#include "xborder/url.hpp"

namespace xborder {
namespace fs = std::filesystem;
using std::chrono::milliseconds;
using cdp::Json;

namespace {

constexpr std::string_view kRemediation =
    "set XBORDER_BROWSER (or --browser) to a Chromium, Chrome or headless_shell binary";

milliseconds until(Timestamp deadline) {
  const auto left = std::chrono::duration_cast<milliseconds>(deadline - now_ms());
  return left.count() > 0 ? left : milliseconds{1};
}

std::string read_tail(const fs::path& path, std::size_t max_bytes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (text.size() > max_bytes) text = text.substr(text.size() - max_bytes);
  return text;
}

std::optional<std::string> read_active_port(const fs::path& profile) {
  std::ifstream in(profile / "DevToolsActivePort");
  std::string port, path;
  if (!std::getline(in, port) || !std::getline(in, path) || port.empty() || path.empty())
    return std::nullopt;
  return "ws://127.0.0.1:" + port + path;
}

std::shared_ptr<cdp::Connection> connect_browser(const BrowserOptions& options,
                                                 std::unique_ptr<BrowserProcess>& process) {
  std::string endpoint;
  if (options.attach_endpoint) {
    endpoint = *options.attach_endpoint;
  } else {
    process = BrowserProcess::launch(options);
    endpoint = process->ws_endpoint();
  }
  try {
    return cdp::Connection::open(endpoint, options.startup_timeout);
  } catch (const std::exception& e) {
    throw BrowserUnavailable(std::string(e.what()) + "; " + std::string(kRemediation));
  }
}

bool is_web_url(std::string_view u) {
  return u.starts_with("http://") || u.starts_with("https://");
}

}  // namespace

std::optional<std::string> locate_browser(const std::optional<std::string>& explicit_path) {
  auto executable = [](const std::string& p) { return ::access(p.c_str(), X_OK) == 0; };
  if (explicit_path && !explicit_path->empty())
    return executable(*explicit_path) ? explicit_path : std::nullopt;
  if (const char* env = std::getenv(kBrowserEnvVar); env && *env)
    return executable(env) ? std::optional<std::string>(env) : std::nullopt;
  const char* path_env = std::getenv("PATH");
  if (!path_env) return std::nullopt;
  std::stringstream dirs(path_env);
  std::string dir;
  std::vector<std::string> dir_list;
  while (std::getline(dirs, dir, ':'))
    if (!dir.empty()) dir_list.push_back(dir);
  for (const char* name : {"chromium", "chromium-browser", "google-chrome", "google-chrome-stable",
                           "chrome", "headless_shell"})
    for (const auto& d : dir_list)
      if (auto candidate = d + "/" + name; executable(candidate)) return candidate;
  return std::nullopt;
}

std::unique_ptr<BrowserProcess> BrowserProcess::launch(const BrowserOptions& options) {
  const auto binary = locate_browser(options.binary);
  if (!binary) throw BrowserUnavailable("no browser binary found; " + std::string(kRemediation));

  std::string templ = (fs::temp_directory_path() / "xborder-profile-XXXXXX").string();
  if (!::mkdtemp(templ.data()))
    throw BrowserUnavailable("cannot create a temporary browser profile directory");

  std::unique_ptr<BrowserProcess> proc(new BrowserProcess());
  proc->profile_dir_ = templ;

  std::vector<std::string> args{*binary,
                                "--remote-debugging-port=" + std::to_string(options.debug_port),
                                "--remote-debugging-address=127.0.0.1",
                                "--user-data-dir=" + templ,
                                "--no-first-run",
                                "--no-default-browser-check",
                                "--disable-background-networking",
                                "--disable-component-update",
                                "--disable-sync",
                                "--disable-default-apps",
                                "--password-store=basic",
                                "--use-mock-keychain"};
  if (options.headless) args.push_back("--headless=new");
  // Chromium refuses to start its sandbox as root.
  if (::geteuid() == 0) args.push_back("--no-sandbox");
  for (const auto& a : options.extra_args) args.push_back(a);
  args.push_back("about:blank");

  const std::string log_path = (fs::path(templ) / "browser.log").string();
  const pid_t parent = ::getpid();
  const pid_t pid = ::fork();
  if (pid < 0) throw BrowserUnavailable("fork failed");
  if (pid == 0) {
    ::prctl(PR_SET_PDEATHSIG, SIGKILL);
    if (::getppid() != parent) ::_exit(127);
    ::setpgid(0, 0);
    const int fd = ::open(log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    if (fd >= 0) {
      ::dup2(fd, STDOUT_FILENO);
      ::dup2(fd, STDERR_FILENO);
      ::close(fd);
    }
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    ::execv(argv[0], argv.data());
    ::_exit(127);
  }
  proc->pid_ = pid;

  const auto deadline = now_ms() + options.startup_timeout;
  while (now_ms() < deadline) {
    if (auto endpoint = read_active_port(templ)) {
      proc->ws_endpoint_ = *endpoint;
      return proc;
    }
    int status = 0;
    if (::waitpid(pid, &status, WNOHANG) == pid) {
      proc->pid_ = -1;
      throw BrowserUnavailable("browser exited during startup (" + *binary + "): " +
                               read_tail(log_path, 600) + "; " + std::string(kRemediation));
    }
    std::this_thread::sleep_for(milliseconds(50));
  }
  throw BrowserUnavailable("browser did not expose a debugging endpoint within " +
                           std::to_string(options.startup_timeout.count()) + " ms: " +
                           read_tail(log_path, 600));
}

bool BrowserProcess::running() const {
  if (pid_ <= 0) return false;
  return ::waitpid(pid_, nullptr, WNOHANG) == 0;
}

BrowserProcess::~BrowserProcess() {
  if (pid_ > 0) {
    ::kill(-pid_, SIGTERM);
    ::kill(pid_, SIGTERM);
    const auto deadline = now_ms() + milliseconds(3000);
    bool reaped = false;
    while (now_ms() < deadline) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
        reaped = true;
        break;
      }
      std::this_thread::sleep_for(milliseconds(20));
    }
    if (!reaped) {
      ::kill(-pid_, SIGKILL);
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }
  if (!profile_dir_.empty()) {
    std::error_code ec;
    fs::remove_all(profile_dir_, ec);
  }
}

ResourceHint hint_from_cdp_type(std::string_view type, bool main_frame) {
  if (type == "Document") return main_frame ? ResourceHint::Document : ResourceHint::Frame;
  if (type == "Script") return ResourceHint::Script;
  if (type == "Stylesheet") return ResourceHint::Stylesheet;
  if (type == "Image") return ResourceHint::Image;
  if (type == "Font") return ResourceHint::Font;
  if (type == "Media" || type == "TextTrack") return ResourceHint::Media;
  if (type == "XHR" || type == "Fetch" || type == "EventSource") return ResourceHint::Xhr;
  return ResourceHint::Other;
}

// ---------------------------------------------------------------------------
// Batch capture

namespace {

struct PageCapture {
  std::mutex mutex;
  std::condition_variable cv;
  std::string target_id;
  std::vector<CapturedRequest> requests;
  std::vector<std::uint64_t> tokens;
  std::set<std::string> sessions;
  bool loaded = false;
  std::optional<std::string> crashed;
  Timestamp last_activity{};
};

void observe_session(const std::shared_ptr<cdp::Connection>& conn,
                     const std::shared_ptr<PageCapture>& state, const std::string& session);

void handle_page_event(const std::shared_ptr<cdp::Connection>& conn,
                       const std::shared_ptr<PageCapture>& state, const std::string& method,
                       const Json& params) {
  if (method == "Network.requestWillBeSent") {
    const auto& request = params.value("request", Json::object());
    std::string request_url = request.value("url", std::string{});
    if (!is_network_url(request_url)) return;
    const bool main_frame = params.value("frameId", std::string{}) == state->target_id;
    const auto hint = hint_from_cdp_type(params.value("type", std::string{"Other"}), main_frame);
    std::lock_guard lock(state->mutex);
    const auto at = now_ms();
    state->requests.push_back({std::move(request_url), hint, at});
    state->last_activity = at;
    state->cv.notify_all();
  } else if (method == "Page.loadEventFired") {
    std::lock_guard lock(state->mutex);
    state->loaded = true;
    state->cv.notify_all();
  } else if (method == "Inspector.targetCrashed") {
    std::lock_guard lock(state->mutex);
    state->crashed = "target crashed";
    state->cv.notify_all();
  } else if (method == "Target.attachedToTarget") {
    const std::string child = params.value("sessionId", std::string{});
    if (child.empty()) return;
    observe_session(conn, state, child);
    conn->send("Network.enable", Json::object(), child);
    conn->send("Network.setCacheDisabled", {{"cacheDisabled", true}}, child);
    conn->send("Target.setAutoAttach",
               {{"autoAttach", true}, {"waitForDebuggerOnStart", true}, {"flatten", true}}, child);
    conn->send("Runtime.runIfWaitingForDebugger", Json::object(), child);
  }
}

void observe_session(const std::shared_ptr<cdp::Connection>& conn,
                     const std::shared_ptr<PageCapture>& state, const std::string& session) {
  {
    std::lock_guard lock(state->mutex);
    if (!state->sessions.insert(session).second) return;
  }
  std::weak_ptr<cdp::Connection> weak = conn;
  const auto token = conn->subscribe(
      session, [weak, state](const std::string& method, const Json& params, const std::string&) {
        if (auto c = weak.lock()) handle_page_event(c, state, method, params);
      });
  std::lock_guard lock(state->mutex);
  state->tokens.push_back(token);
}

}  // namespace

BrowserBackend::BrowserBackend(BrowserOptions options) {
  connection_ = connect_browser(options, process_);
}

BrowserBackend::~BrowserBackend() {
  if (connection_) connection_->close();
  connection_.reset();
  process_.reset();
}

CaptureResult BrowserBackend::capture_page(const std::string& url,
                                           const CaptureTimeouts& timeouts) {
  const auto start = now_ms();
  const auto nav_deadline = start + timeouts.nav_timeout;
  auto elapsed = [&] { return std::chrono::duration_cast<milliseconds>(now_ms() - start); };
  auto state = std::make_shared<PageCapture>();
  std::string context_id;
  std::string target_id;

  auto cleanup = [&] {
    std::vector<std::uint64_t> tokens;
    {
      std::lock_guard lock(state->mutex);
      tokens.swap(state->tokens);
    }
    for (auto t : tokens) connection_->unsubscribe(t);
    if (!target_id.empty()) connection_->send("Target.closeTarget", {{"targetId", target_id}});
    if (!context_id.empty())
      connection_->send("Target.disposeBrowserContext", {{"browserContextId", context_id}});
  };
  auto fail = [&](std::string message) {
    cleanup();
    return CaptureResult::failure(url, BackendKind::Browser, std::move(message), elapsed());
  };

  try {
    if (!connection_->is_open()) return fail("browser connection lost");
    context_id = connection_->call("Target.createBrowserContext", {{"disposeOnDetach", true}}, {},
                                   until(nav_deadline))
                     .value("browserContextId", std::string{});
    target_id = connection_
                    ->call("Target.createTarget",
                           {{"url", "about:blank"}, {"browserContextId", context_id}}, {},
                           until(nav_deadline))
                    .value("targetId", std::string{});
    state->target_id = target_id;
    const std::string session =
        connection_
            ->call("Target.attachToTarget", {{"targetId", target_id}, {"flatten", true}}, {},
                   until(nav_deadline))
            .value("sessionId", std::string{});
    observe_session(connection_, state, session);

    connection_->call("Page.enable", Json::object(), session, until(nav_deadline));
    connection_->call("Network.enable", Json::object(), session, until(nav_deadline));
    connection_->call("Network.setCacheDisabled", {{"cacheDisabled", true}}, session,
                      until(nav_deadline));
    connection_->call("Target.setAutoAttach",
                      {{"autoAttach", true}, {"waitForDebuggerOnStart", true}, {"flatten", true}},
                      session, until(nav_deadline));

    const Json nav = connection_->call("Page.navigate", {{"url", url}}, session, until(nav_deadline));
    if (auto err = nav.value("errorText", std::string{}); !err.empty()) return fail(err);

    std::unique_lock lock(state->mutex);
    if (!state->cv.wait_until(lock, nav_deadline,
                              [&] { return state->loaded || state->crashed.has_value(); })) {
      lock.unlock();
      return fail("navigation timeout after " + std::to_string(timeouts.nav_timeout.count()) +
                  " ms");
    }
    if (state->crashed) {
      const std::string msg = *state->crashed;
      lock.unlock();
      return fail(msg);
    }

    const auto loaded_at = now_ms();
    const auto settle_deadline = loaded_at + timeouts.settle_timeout;
    while (true) {
      const auto activity = std::max(state->last_activity, loaded_at);
      const auto quiet_deadline = activity + timeouts.quiet_window;
      const auto stop = std::min(settle_deadline, quiet_deadline);
      if (now_ms() >= stop) break;
      state->cv.wait_until(lock, stop);
    }

    CaptureResult result;
    result.target_url = url;
    result.backend = BackendKind::Browser;
    result.requests = std::move(state->requests);
    lock.unlock();
    cleanup();
    result.duration = elapsed();
    return result;
  } catch (const cdp::TimeoutError&) {
    return fail("navigation timeout after " + std::to_string(timeouts.nav_timeout.count()) + " ms");
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

// ---------------------------------------------------------------------------
// Interactive session

struct InteractiveSession::State {
  std::mutex mutex;
  std::condition_variable cv;
  SessionEvents sink;
  bool closed = false;
  std::string primary_session;
  // session id -> page target session id (itself for pages)
  std::map<std::string, std::string> root_of;
  // page session -> main frame id / current page URL / last timestamp
  std::map<std::string, std::string> main_frame;
  std::map<std::string, std::string> page_url;
  std::map<std::string, Timestamp> last_seen;
};

namespace {

using SessionState = InteractiveSession::State;

void attach_child(const std::shared_ptr<cdp::Connection>& conn, SessionState& st,
                  const std::string& parent_root, const Json& params) {
  const std::string child = params.value("sessionId", std::string{});
  const auto info = params.value("targetInfo", Json::object());
  const std::string type = info.value("type", std::string{});
  if (child.empty()) return;
  {
    std::lock_guard lock(st.mutex);
    if (type == "page") {
      st.root_of[child] = child;
      st.main_frame[child] = info.value("targetId", std::string{});
      if (st.primary_session.empty()) st.primary_session = child;
    } else {
      st.root_of[child] = parent_root.empty() ? child : parent_root;
    }
    st.cv.notify_all();
  }
  if (type == "page") conn->send("Page.enable", Json::object(), child);
  conn->send("Network.enable", Json::object(), child);
  conn->send("Target.setAutoAttach",
             {{"autoAttach", true}, {"waitForDebuggerOnStart", true}, {"flatten", true}}, child);
  conn->send("Runtime.runIfWaitingForDebugger", Json::object(), child);
}

void on_session_event(const std::shared_ptr<cdp::Connection>& conn, SessionState& st,
                      const std::string& method, const Json& params, const std::string& session) {
  if (method == "Target.targetCreated" && session.empty()) {
    const auto info = params.value("targetInfo", Json::object());
    if (info.value("type", std::string{}) == "page" && !info.value("attached", false))
      conn->send("Target.attachToTarget",
                 {{"targetId", info.value("targetId", std::string{})}, {"flatten", true}});
    return;
  }
  if (method == "Target.attachedToTarget") {
    std::string root;
    {
      std::lock_guard lock(st.mutex);
      if (auto it = st.root_of.find(session); it != st.root_of.end()) root = it->second;
    }
    attach_child(conn, st, root, params);
    return;
  }
  if (method == "Target.detachedFromTarget") {
    std::lock_guard lock(st.mutex);
    st.root_of.erase(params.value("sessionId", std::string{}));
    return;
  }
  if (method == "Network.requestWillBeSent") {
    const auto request = params.value("request", Json::object());
    std::string request_url = request.value("url", std::string{});
    if (!is_network_url(request_url)) return;
    std::optional<PageVisit> visit;
    SessionRequest event;
    {
      std::lock_guard lock(st.mutex);
      auto root_it = st.root_of.find(session);
      if (root_it == st.root_of.end()) return;
      const std::string root = root_it->second;
      const bool main_frame = params.value("frameId", std::string{}) == st.main_frame[root];
      const std::string type = params.value("type", std::string{"Other"});
      const auto hint = hint_from_cdp_type(type, main_frame && root == session);
      Timestamp at = std::max(now_ms(), st.last_seen[root]);
      st.last_seen[root] = at;
      if (hint == ResourceHint::Document && is_web_url(request_url)) {
        // A main-frame document starts a new page; redirect hops only update it.
        const bool redirect = params.contains("redirectResponse");
        st.page_url[root] = request_url;
        if (!redirect) visit = PageVisit{request_url, at};
      }
      event.request = {std::move(request_url), hint, at};
      event.page_url = st.page_url[root];
    }
    if (visit && st.sink.on_page) st.sink.on_page(*visit);
    if (st.sink.on_request) st.sink.on_request(event);
    return;
  }
  if (method == "Page.frameNavigated") {
    const auto frame = params.value("frame", Json::object());
    if (frame.contains("parentId")) return;
    std::lock_guard lock(st.mutex);
    const std::string u = frame.value("url", std::string{});
    if (is_web_url(u)) st.page_url[session] = u;
  }
}

}  // namespace

SessionHandle open_interactive_session(BrowserOptions options, SessionEvents sink) {
  SessionHandle handle(new InteractiveSession());
  handle->state_ = std::make_shared<SessionState>();
  handle->state_->sink = std::move(sink);
  handle->connection_ = connect_browser(options, handle->process_);

  auto conn = handle->connection_;
  std::weak_ptr<cdp::Connection> weak = conn;
  auto st = handle->state_;
  conn->set_close_handler([st] {
    std::lock_guard lock(st->mutex);
    st->closed = true;
    st->cv.notify_all();
  });
  conn->subscribe(std::string(cdp::Connection::kAllSessions),
                  [weak, st](const std::string& method, const Json& params,
                             const std::string& session) {
                    if (auto c = weak.lock()) on_session_event(c, *st, method, params, session);
                  });
  try {
    conn->call("Target.setDiscoverTargets", {{"discover", true}});
  } catch (const std::exception& e) {
    throw BrowserUnavailable(std::string("cannot enable target discovery: ") + e.what());
  }
  return handle;
}

InteractiveSession::~InteractiveSession() { close(); }

void InteractiveSession::navigate(const std::string& url) {
  std::string session;
  {
    std::unique_lock lock(state_->mutex);
    state_->cv.wait_for(lock, std::chrono::seconds(10),
                        [&] { return !state_->primary_session.empty() || state_->closed; });
    session = state_->primary_session;
  }
  if (session.empty()) throw BrowserUnavailable("no browser tab available to navigate");
  connection_->call("Page.navigate", {{"url", url}}, session);
}

void InteractiveSession::close() {
  if (!state_) return;
  {
    std::lock_guard lock(state_->mutex);
    if (state_->closed && !connection_) return;
    state_->closed = true;
    state_->cv.notify_all();
  }
  if (connection_) {
    connection_->close();
    connection_.reset();
  }
  process_.reset();
}

bool InteractiveSession::closed() const {
  std::lock_guard lock(state_->mutex);
  return state_->closed;
}

void InteractiveSession::wait_closed() {
  std::unique_lock lock(state_->mutex);
  state_->cv.wait(lock, [&] { return state_->closed; });
}

bool InteractiveSession::wait_closed_for(std::chrono::milliseconds timeout) {
  std::unique_lock lock(state_->mutex);
  return state_->cv.wait_for(lock, timeout, [&] { return state_->closed; });
}

}  // namespace xborder
