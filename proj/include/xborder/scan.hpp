#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "xborder/blacklist.hpp"
#include "xborder/capture.hpp"
#include "xborder/classify.hpp"
#include "xborder/csv.hpp"
#include "xborder/diagnostics.hpp"
#include "xborder/registry.hpp"

namespace xborder {

inline constexpr std::string_view kBadRequestsFile = "bad-requests.csv";
inline constexpr std::string_view kDoneFile = "done.csv";

enum class Disposition { DoneOk, DoneError };
std::string_view to_string(Disposition d);
std::optional<Disposition> parse_disposition(std::string_view text);

struct ScanRecord {
  std::string ipa_code;
  Disposition disposition = Disposition::DoneOk;
  std::optional<std::string> error_message;
  Timestamp finished_at{};

  bool operator==(const ScanRecord&) const = default;
};

// bad-requests.csv / done.csv schemas.
const csv::Row& bad_requests_header();
const csv::Row& done_header();
csv::Row to_row(const BadRequest& r);
csv::Row to_row(const ScanRecord& r);
// Throw ConsistencyError on rows that do not fit the schema.
BadRequest bad_request_from_row(const csv::Row& row);
ScanRecord scan_record_from_row(const csv::Row& row);

// Readers tolerate a torn (newline-less) final line left by a crash and
// ignore it. A missing file reads as empty.
std::vector<BadRequest> read_bad_requests(const std::string& path);
std::vector<ScanRecord> read_done(const std::string& path);

struct ScanConfig {
  int concurrency = 8;
  CaptureTimeouts timeouts{};
  std::string out_dir;
  bool resume = false;
  // New capture sessions per second across all workers; <= 0 disables.
  double launch_rate = 4.0;
};

// Throws std::invalid_argument for concurrency < 1 or non-positive timeouts.
void validate(const ScanConfig& config);

struct ScanSummary {
  std::size_t processed = 0;
  std::size_t good = 0;
  std::size_t bad = 0;
  std::size_t error = 0;        // includes invalid_url
  std::size_t invalid_url = 0;  // rejected before any capture
  std::size_t skipped = 0;      // already in done.csv on resume
  std::size_t bad_requests = 0;

  bool operator==(const ScanSummary&) const = default;
};

// Called on the writer thread after an entity's records are durable.
using ScanProgress = std::function<void(const EnrichedEntity&, const EntityStatus&)>;

// Scans every entity not yet in done.csv. For each one the bad requests are
// appended and synced before its done.csv record, so a crash never leaves a
// done record without its evidence. On resume, bad-request rows of entities
// that never reached done.csv are discarded before scanning restarts.
// `backend` must tolerate concurrent capture_page calls.
// Throws OutputError if the output directory cannot be prepared.
ScanSummary run_scan(const std::vector<EnrichedEntity>& entities, const ScanConfig& config,
                     const Blacklist& blacklist, const AttributionMap& attribution,
                     CaptureBackend& backend, Warnings* warnings = nullptr,
                     const ScanProgress& progress = {});

}  // namespace xborder
