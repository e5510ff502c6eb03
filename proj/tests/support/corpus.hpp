#pragma once

#include <string>
#include <vector>

#include "xborder/classify.hpp"
#include "xborder/scan.hpp"

namespace xborder::testing {

// Golden bad-request rows with a fixed timestamp in place of the mask.
std::vector<BadRequest> golden_bad_requests();

// done.csv of the twenty-site corpus: s19 and s20 unreachable.
std::vector<ScanRecord> corpus_done();

}  // namespace xborder::testing
