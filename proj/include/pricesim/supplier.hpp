#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pricesim/core.hpp"

namespace pricesim {

struct SupplierConfig {
  int qps_limit = 10;  // total accepted requests per second across all DCs
  int n_datacentres = 1;
  // Per-second budget per DC; empty means "split qps_limit evenly, remainder
  // to the lowest dc ids". Sum must not exceed qps_limit.
  std::vector<int> per_dc_allocation;

  void validate() const;
  std::vector<int> resolved_allocation() const;
};

// Ground-truth price for an itinerary at a moment, in minor units (0 == sold
// out).
using PriceSource = std::function<std::int64_t(const Itinerary&, SimTime)>;

struct UtilizationReport {
  int n_datacentres = 0;
  // [dc][second]; sized to the last second that saw any fetch call.
  std::vector<std::vector<std::uint32_t>> accepted;
  std::vector<std::vector<std::uint32_t>> rejected;
  std::uint64_t total_accepted = 0;
  std::uint64_t total_rejected = 0;

  std::size_t horizon_seconds() const {
    return accepted.empty() ? 0 : accepted[0].size();
  }
  std::uint32_t accepted_in_second(SimTime s) const;
  std::uint32_t max_total_accepted_per_second() const;
  // dc_id,second,accepted,rejected — seconds with no traffic are skipped.
  std::string to_csv() const;
};

// Rate-limited price supplier; fixed 1-second windows, per-DC budgets,
// rejected calls dropped with no side effects. Responses carry ttl = 0: the
// serving policy assigns the TTL when storing the quote.
class Supplier {
 public:
  Supplier(SupplierConfig config, PriceSource source);

  // Throws std::out_of_range for an unknown dc_id, std::invalid_argument for
  // negative time.
  std::optional<PriceQuote> fetch(const Itinerary& it, int dc_id, SimTime now);

  // Accepted fetches so far in second `s` across all DCs (how much of μ is
  // already spent).
  std::uint32_t accepted_in_second(SimTime s) const;
  // Budget the DC still has in second `s`.
  int remaining_in_dc(int dc_id, SimTime s) const;

  int qps_limit() const { return config_.qps_limit; }
  // What the per-DC allocations actually admit per second (≤ qps_limit).
  int effective_qps() const;
  const UtilizationReport& report() const { return report_; }

 private:
  SupplierConfig config_;
  std::vector<int> allocation_;
  PriceSource source_;
  UtilizationReport report_;
  void ensure_second(SimTime s);
};

}  // namespace pricesim
