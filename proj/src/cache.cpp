#include "pricesim/cache.hpp"

#include <algorithm>
#include <stdexcept>

namespace pricesim {

std::optional<PriceQuote> PriceDb::get(const Itinerary& it, SimTime now) {
  auto found = map_.find(it);
  if (found == map_.end()) return std::nullopt;
  if (!found->second.live_at(now)) {
    if (now >= found->second.fetched_at + found->second.ttl) map_.erase(found);
    return std::nullopt;
  }
  return found->second;
}

void PriceDb::put(PriceQuote quote) {
  if (quote.ttl <= 0) throw std::invalid_argument("quote ttl must be > 0");
  map_[quote.itinerary] = std::move(quote);
}

LruSearchCache::LruSearchCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("lru capacity must be > 0");
}

std::optional<Itinerary> LruSearchCache::admit(const Itinerary& it) {
  auto found = map_.find(it);
  if (found != map_.end()) {
    order_.splice(order_.begin(), order_, found->second.order_pos);
    found->second.last_touch = ++touch_counter_;
    return std::nullopt;
  }
  order_.push_front(it);
  Entry e;
  e.order_pos = order_.begin();
  e.last_touch = ++touch_counter_;
  map_.emplace(it, e);
  if (map_.size() <= capacity_) return std::nullopt;
  Itinerary victim = order_.back();
  order_.pop_back();
  map_.erase(victim);
  return victim;
}

void LruSearchCache::update_quote(const Itinerary& it, SimTime fetched_at,
                                  SimTime ttl) {
  auto found = map_.find(it);
  if (found == map_.end()) return;  // evicted since the fetch was issued
  found->second.expiry = fetched_at + ttl;
}

std::vector<Itinerary> LruSearchCache::pull_expiring(SimTime now,
                                                     std::size_t k) const {
  // now only shifts the sort key uniformly, so ordering by expiry alone is
  // equivalent; never-fetched entries carry the minimal sentinel and sort
  // first.
  (void)now;
  struct Candidate {
    SimTime expiry;
    std::uint64_t last_touch;
    const Itinerary* it;
  };
  std::vector<Candidate> cands;
  cands.reserve(map_.size());
  for (const auto& [it, e] : map_) {
    cands.push_back({e.expiry, e.last_touch, &it});
  }
  auto before = [](const Candidate& a, const Candidate& b) {
    if (a.expiry != b.expiry) return a.expiry < b.expiry;
    return a.last_touch > b.last_touch;  // MRU first among ties
  };
  if (k < cands.size()) {
    std::nth_element(cands.begin(), cands.begin() + static_cast<long>(k),
                     cands.end(), before);
    cands.resize(k);
  }
  std::sort(cands.begin(), cands.end(), before);
  std::vector<Itinerary> out;
  out.reserve(cands.size());
  for (const auto& c : cands) out.push_back(*c.it);
  return out;
}

}  // namespace pricesim
