#include "pricesim/supplier.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace pricesim {

void SupplierConfig::validate() const {
  if (qps_limit <= 0) throw std::invalid_argument("qps_limit must be > 0");
  if (n_datacentres < 1)
    throw std::invalid_argument("n_datacentres must be >= 1");
  if (!per_dc_allocation.empty()) {
    if (static_cast<int>(per_dc_allocation.size()) != n_datacentres)
      throw std::invalid_argument(
          "per_dc_allocation size must equal n_datacentres");
    int sum = 0;
    for (int a : per_dc_allocation) {
      if (a < 0) throw std::invalid_argument("per-DC allocation must be >= 0");
      sum += a;
    }
    if (sum > qps_limit)
      throw std::invalid_argument("per-DC allocations exceed qps_limit");
  }
}

std::vector<int> SupplierConfig::resolved_allocation() const {
  validate();
  if (!per_dc_allocation.empty()) return per_dc_allocation;
  std::vector<int> alloc(static_cast<std::size_t>(n_datacentres),
                         qps_limit / n_datacentres);
  for (int i = 0; i < qps_limit % n_datacentres; ++i) ++alloc[i];
  return alloc;
}

std::uint32_t UtilizationReport::accepted_in_second(SimTime s) const {
  if (s < 0 || static_cast<std::size_t>(s) >= horizon_seconds()) return 0;
  std::uint32_t total = 0;
  for (const auto& dc : accepted) total += dc[static_cast<std::size_t>(s)];
  return total;
}

std::uint32_t UtilizationReport::max_total_accepted_per_second() const {
  std::uint32_t best = 0;
  for (std::size_t s = 0; s < horizon_seconds(); ++s) {
    std::uint32_t total = 0;
    for (const auto& dc : accepted) total += dc[s];
    best = std::max(best, total);
  }
  return best;
}

std::string UtilizationReport::to_csv() const {
  std::string out = "dc_id,second,accepted,rejected\n";
  char buf[96];
  for (int dc = 0; dc < n_datacentres; ++dc) {
    const auto& acc = accepted[static_cast<std::size_t>(dc)];
    const auto& rej = rejected[static_cast<std::size_t>(dc)];
    for (std::size_t s = 0; s < acc.size(); ++s) {
      if (acc[s] == 0 && rej[s] == 0) continue;
      std::snprintf(buf, sizeof buf, "%d,%zu,%u,%u\n", dc, s, acc[s], rej[s]);
      out += buf;
    }
  }
  return out;
}

Supplier::Supplier(SupplierConfig config, PriceSource source)
    : config_(std::move(config)),
      allocation_(config_.resolved_allocation()),
      source_(std::move(source)) {
  if (!source_) throw std::invalid_argument("price source must be callable");
  report_.n_datacentres = config_.n_datacentres;
  report_.accepted.resize(static_cast<std::size_t>(config_.n_datacentres));
  report_.rejected.resize(static_cast<std::size_t>(config_.n_datacentres));
}

void Supplier::ensure_second(SimTime s) {
  std::size_t need = static_cast<std::size_t>(s) + 1;
  if (report_.accepted[0].size() >= need) return;
  for (auto& dc : report_.accepted) dc.resize(need, 0);
  for (auto& dc : report_.rejected) dc.resize(need, 0);
}

std::optional<PriceQuote> Supplier::fetch(const Itinerary& it, int dc_id,
                                          SimTime now) {
  if (dc_id < 0 || dc_id >= config_.n_datacentres)
    throw std::out_of_range("unknown dc_id " + std::to_string(dc_id));
  if (now < 0) throw std::invalid_argument("fetch before simulation start");
  ensure_second(now);
  auto s = static_cast<std::size_t>(now);
  auto d = static_cast<std::size_t>(dc_id);
  std::uint32_t total_this_second = 0;
  for (const auto& dc : report_.accepted) total_this_second += dc[s];
  bool dc_ok = report_.accepted[d][s] <
               static_cast<std::uint32_t>(allocation_[d]);
  bool total_ok =
      total_this_second < static_cast<std::uint32_t>(config_.qps_limit);
  if (!dc_ok || !total_ok) {
    ++report_.rejected[d][s];
    ++report_.total_rejected;
    return std::nullopt;
  }
  ++report_.accepted[d][s];
  ++report_.total_accepted;
  PriceQuote q;
  q.itinerary = it;
  q.price_minor = source_(it, now);
  q.fetched_at = now;
  q.ttl = 0;  // policy assigns
  return q;
}

std::uint32_t Supplier::accepted_in_second(SimTime s) const {
  return report_.accepted_in_second(s);
}

int Supplier::remaining_in_dc(int dc_id, SimTime s) const {
  auto d = static_cast<std::size_t>(dc_id);
  int used = 0;
  if (s >= 0 && static_cast<std::size_t>(s) < report_.accepted[d].size())
    used = static_cast<int>(report_.accepted[d][static_cast<std::size_t>(s)]);
  return allocation_[d] - used;
}

int Supplier::effective_qps() const {
  int total = 0;
  for (int a : allocation_) total += a;
  return std::min(total, config_.qps_limit);
}

}  // namespace pricesim
