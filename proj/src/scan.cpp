#include "xborder/scan.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "xborder/error.hpp"

namespace xborder {
namespace fs = std::filesystem;
using std::chrono::milliseconds;

std::string_view to_string(Disposition d) {
  return d == Disposition::DoneOk ? "DONE_OK" : "DONE_ERROR";
}

std::optional<Disposition> parse_disposition(std::string_view text) {
  if (text == "DONE_OK") return Disposition::DoneOk;
  if (text == "DONE_ERROR") return Disposition::DoneError;
  return std::nullopt;
}

const csv::Row& bad_requests_header() {
  static const csv::Row header{"ipa_code",   "entity_name",     "category_name", "request_url",
                               "matched_pattern", "group_name", "company",       "country",
                               "service_type", "resource_hint", "observed_at"};
  return header;
}

const csv::Row& done_header() {
  static const csv::Row header{"ipa_code", "disposition", "error_message", "finished_at"};
  return header;
}

csv::Row to_row(const BadRequest& r) {
  return {r.ipa_code,
          r.entity_name,
          r.category_name,
          r.request_url,
          r.matched_pattern,
          r.group_name,
          r.company,
          r.country,
          std::string(to_string(r.service_type)),
          std::string(to_string(r.resource_hint)),
          format_timestamp(r.observed_at)};
}

csv::Row to_row(const ScanRecord& r) {
  return {r.ipa_code, std::string(to_string(r.disposition)), r.error_message.value_or(""),
          format_timestamp(r.finished_at)};
}

BadRequest bad_request_from_row(const csv::Row& row) {
  if (row.size() != bad_requests_header().size())
    throw ConsistencyError("bad-requests row has " + std::to_string(row.size()) +
                           " fields, expected " + std::to_string(bad_requests_header().size()));
  BadRequest r;
  r.ipa_code = row[0];
  r.entity_name = row[1];
  r.category_name = row[2];
  r.request_url = row[3];
  r.matched_pattern = row[4];
  r.group_name = row[5];
  r.company = row[6];
  r.country = row[7];
  const auto service = parse_service_type(row[8]);
  const auto hint = parse_resource_hint(row[9]);
  const auto at = parse_timestamp(row[10]);
  if (!service || !hint || !at)
    throw ConsistencyError("bad-requests row for '" + r.ipa_code + "' has an invalid field");
  r.service_type = *service;
  r.resource_hint = *hint;
  r.observed_at = *at;
  return r;
}

ScanRecord scan_record_from_row(const csv::Row& row) {
  if (row.size() != done_header().size())
    throw ConsistencyError("done row has " + std::to_string(row.size()) + " fields, expected " +
                           std::to_string(done_header().size()));
  ScanRecord r;
  r.ipa_code = row[0];
  const auto disposition = parse_disposition(row[1]);
  const auto at = parse_timestamp(row[3]);
  if (!disposition || !at)
    throw ConsistencyError("done row for '" + r.ipa_code + "' has an invalid field");
  r.disposition = *disposition;
  if (!row[2].empty() || r.disposition == Disposition::DoneError) r.error_message = row[2];
  r.finished_at = *at;
  return r;
}

namespace {

// File contents up to and including the last newline.
std::string read_complete_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const auto last = text.rfind('\n');
  text.resize(last == std::string::npos ? 0 : last + 1);
  return text;
}

csv::Table read_table(const std::string& path, const csv::Row& expected_header) {
  std::istringstream in(read_complete_lines(path));
  if (in.str().empty()) return {};
  auto table = csv::read(in, ',');
  if (table.header != expected_header)
    throw ConsistencyError(path + ": unexpected header");
  return table;
}

void write_all(int fd, const std::string& data, const std::string& what) {
  std::size_t off = 0;
  while (off < data.size()) {
    const auto n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw OutputError("write to " + what + " failed: " + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

class AppendFile {
 public:
  AppendFile(const fs::path& path, const csv::Row& header) : path_(path.string()) {
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw OutputError("cannot open " + path_ + ": " + std::strerror(errno));
    if (::lseek(fd_, 0, SEEK_END) == 0) append(csv::format_row(header));
  }
  ~AppendFile() {
    if (fd_ >= 0) ::close(fd_);
  }
  AppendFile(const AppendFile&) = delete;
  AppendFile& operator=(const AppendFile&) = delete;

  void append(const std::string& data) {
    if (data.empty()) return;
    write_all(fd_, data, path_);
    ::fdatasync(fd_);
  }

 private:
  std::string path_;
  int fd_ = -1;
};

void truncate_torn_tail(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) return;
  const auto size = fs::file_size(path, ec);
  const auto complete = read_complete_lines(path.string()).size();
  if (!ec && complete < size) fs::resize_file(path, complete, ec);
}

// Drops bad-request rows whose entity has no done record (crash between the
// two appends). Rewrites via a temporary file and rename.
void prune_orphans(const fs::path& bad_path, const std::unordered_set<std::string>& done,
                   Warnings* warnings) {
  std::error_code ec;
  if (!fs::exists(bad_path, ec)) return;
  const auto table = read_table(bad_path.string(), bad_requests_header());
  std::string kept = csv::format_row(bad_requests_header());
  std::size_t dropped = 0;
  for (const auto& row : table.rows) {
    if (!row.empty() && done.contains(row[0])) kept += csv::format_row(row);
    else ++dropped;
  }
  const bool torn = read_complete_lines(bad_path.string()).size() != fs::file_size(bad_path, ec);
  if (dropped == 0 && !torn) return;
  const fs::path tmp = bad_path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw OutputError("cannot write " + tmp.string());
    out << kept;
    out.flush();
    if (!out) throw OutputError("cannot write " + tmp.string());
  }
  fs::rename(tmp, bad_path, ec);
  if (ec) throw OutputError("cannot replace " + bad_path.string() + ": " + ec.message());
  if (dropped) warn(warnings, "resume: discarded " + std::to_string(dropped) +
                                  " bad-request rows of unfinished entities");
}

class LaunchRamp {
 public:
  explicit LaunchRamp(double per_second)
      : interval_(per_second > 0 ? milliseconds(static_cast<long long>(1000.0 / per_second))
                                 : milliseconds(0)) {}

  void acquire() {
    if (interval_.count() == 0) return;
    Timestamp slot;
    {
      std::lock_guard lock(mutex_);
      const auto now = now_ms();
      slot = std::max(now, next_);
      next_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  milliseconds interval_;
  std::mutex mutex_;
  Timestamp next_{};
};

struct Completed {
  const EnrichedEntity* entity;
  Classification classification;
  ScanRecord record;
};

// Owns both output files; appends happen in completion order.
class Writer {
 public:
  Writer(const fs::path& dir, ScanSummary& summary, const ScanProgress& progress)
      : bad_(dir / kBadRequestsFile, bad_requests_header()),
        done_(dir / kDoneFile, done_header()),
        summary_(summary),
        progress_(progress),
        thread_([this] { loop(); }) {}

  ~Writer() { stop(); }

  void submit(Completed item) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(item));
    }
    cv_.notify_one();
  }

  // Drains the queue, then rethrows the first write failure if any.
  void finish() {
    stop();
    if (failure_) std::rethrow_exception(failure_);
  }

  bool failed() const { return failed_; }

 private:
  void stop() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    cv_.notify_one();
    if (thread_.joinable()) thread_.join();
  }

  void loop() {
    while (true) {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      Completed item = std::move(queue_.front());
      queue_.pop_front();
      lock.unlock();
      if (failure_) continue;
      try {
        write(item);
      } catch (...) {
        failure_ = std::current_exception();
        failed_ = true;
      }
    }
  }

  void write(const Completed& item) {
    std::string rows;
    for (const auto& r : item.classification.bad_requests) rows += csv::format_row(to_row(r));
    bad_.append(rows);
    done_.append(csv::format_row(to_row(item.record)));

    const auto& status = item.classification.status;
    ++summary_.processed;
    summary_.bad_requests += item.classification.bad_requests.size();
    switch (status.status) {
      case EntityState::Good: ++summary_.good; break;
      case EntityState::Bad: ++summary_.bad; break;
      case EntityState::Error: ++summary_.error; break;
    }
    if (progress_) progress_(*item.entity, status);
  }

  AppendFile bad_;
  AppendFile done_;
  ScanSummary& summary_;
  const ScanProgress& progress_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Completed> queue_;
  bool stopping_ = false;
  std::exception_ptr failure_;
  std::atomic<bool> failed_{false};
  std::thread thread_;
};

}  // namespace

std::vector<BadRequest> read_bad_requests(const std::string& path) {
  std::vector<BadRequest> out;
  for (const auto& row : read_table(path, bad_requests_header()).rows)
    out.push_back(bad_request_from_row(row));
  return out;
}

std::vector<ScanRecord> read_done(const std::string& path) {
  std::vector<ScanRecord> out;
  for (const auto& row : read_table(path, done_header()).rows)
    out.push_back(scan_record_from_row(row));
  return out;
}

void validate(const ScanConfig& config) {
  if (config.concurrency < 1) throw std::invalid_argument("concurrency must be >= 1");
  if (config.timeouts.nav_timeout.count() <= 0 || config.timeouts.settle_timeout.count() <= 0 ||
      config.timeouts.quiet_window.count() <= 0)
    throw std::invalid_argument("timeouts must be positive");
  if (config.out_dir.empty()) throw std::invalid_argument("output directory not set");
}

ScanSummary run_scan(const std::vector<EnrichedEntity>& entities, const ScanConfig& config,
                     const Blacklist& blacklist, const AttributionMap& attribution,
                     CaptureBackend& backend, Warnings* warnings, const ScanProgress& progress) {
  validate(config);
  const fs::path dir(config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw OutputError("cannot create output directory " + dir.string() +
                      (ec ? ": " + ec.message() : ""));

  const fs::path bad_path = dir / kBadRequestsFile;
  const fs::path done_path = dir / kDoneFile;
  std::unordered_set<std::string> done_codes;
  if (config.resume) {
    truncate_torn_tail(done_path);
    for (const auto& r : read_done(done_path.string())) done_codes.insert(r.ipa_code);
    prune_orphans(bad_path, done_codes, warnings);
  } else {
    for (const auto& p : {bad_path, done_path}) {
      fs::remove(p, ec);
      if (ec) throw OutputError("cannot reset " + p.string() + ": " + ec.message());
    }
  }

  ScanSummary summary;
  std::vector<const EnrichedEntity*> pending;
  std::unordered_set<std::string> queued;
  for (const auto& e : entities) {
    if (done_codes.contains(e.ipa_code)) {
      ++summary.skipped;
      continue;
    }
    if (!queued.insert(e.ipa_code).second) {
      warn(warnings, "duplicate ipa_code '" + e.ipa_code + "' in scan input, skipped");
      continue;
    }
    pending.push_back(&e);
  }

  std::atomic<std::size_t> invalid{0};
  {
    Writer writer(dir, summary, progress);
    LaunchRamp ramp(config.launch_rate);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
      while (true) {
        const auto i = next.fetch_add(1);
        if (i >= pending.size() || writer.failed()) return;
        const EnrichedEntity& entity = *pending[i];
        Completed item{&entity, {}, {}};
        item.record.ipa_code = entity.ipa_code;

        const auto validation = validate_url(entity.website_url);
        if (validation.verdict != UrlVerdict::Valid) {
          ++invalid;
          std::string message = "invalid URL (" + std::string(to_string(validation.verdict)) +
                                "): " + validation.reason;
          item.classification.status = {entity.ipa_code, EntityState::Error, 0, message};
        } else {
          ramp.acquire();
          const auto capture = backend.capture_page(*validation.normalized_url, config.timeouts);
          item.classification =
              classify_requests(entity, capture, blacklist, attribution, warnings);
        }
        const auto& status = item.classification.status;
        item.record.disposition =
            status.status == EntityState::Error ? Disposition::DoneError : Disposition::DoneOk;
        item.record.error_message = status.error_message;
        item.record.finished_at = now_ms();
        writer.submit(std::move(item));
      }
    };

    const auto n = std::min<std::size_t>(static_cast<std::size_t>(config.concurrency),
                                         std::max<std::size_t>(pending.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    writer.finish();
  }
  summary.invalid_url = invalid;
  return summary;
}

}  // namespace xborder
