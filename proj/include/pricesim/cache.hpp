#pragma once

#include <cstdint>
#include <limits>
#include <list>
#include <optional>
#include <unordered_map>
#include <vector>

#include "pricesim/core.hpp"

namespace pricesim {

// Quote store keyed by itinerary. One quote per itinerary; a put replaces
// whatever was there regardless of remaining life.
class PriceDb {
 public:
  // Returns the stored quote only if it is live at `now` (half-open
  // [fetched_at, fetched_at + ttl)). Expired entries are dropped lazily.
  std::optional<PriceQuote> get(const Itinerary& it, SimTime now);

  // Throws std::invalid_argument if quote.ttl <= 0.
  void put(PriceQuote quote);

  std::size_t size() const { return map_.size(); }

 private:
  std::unordered_map<Itinerary, PriceQuote, ItineraryHash> map_;
};

// Recency tracker for the aggressive-LRU refresh policy. Keys are bare
// itineraries: which user searched does not matter for refresh priority.
// Admission touches recency; refreshes deliberately do not.
class LruSearchCache {
 public:
  explicit LruSearchCache(std::size_t capacity);

  // Marks `it` most recently used, inserting if absent. Returns the evicted
  // itinerary when the insert pushed the cache over capacity.
  std::optional<Itinerary> admit(const Itinerary& it);
  std::optional<Itinerary> admit(const UserSearch& s) {
    return admit(s.itinerary);
  }

  // Records the latest fetch metadata. No recency change: refreshing a cold
  // entry must not keep it resident.
  void update_quote(const Itinerary& it, SimTime fetched_at, SimTime ttl);

  // The k residents most in need of refresh: already-expired first (never-
  // fetched counts as expired), then soonest expiry. Ties broken by recency,
  // most recently used first.
  std::vector<Itinerary> pull_expiring(SimTime now, std::size_t k) const;

  bool contains(const Itinerary& it) const { return map_.count(it) > 0; }
  std::size_t size() const { return map_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  static constexpr SimTime kNeverFetched = std::numeric_limits<SimTime>::min();

  struct Entry {
    std::list<Itinerary>::iterator order_pos;
    SimTime expiry = kNeverFetched;
    std::uint64_t last_touch = 0;  // monotone admit counter, larger == newer
  };

  std::size_t capacity_;
  std::uint64_t touch_counter_ = 0;
  std::list<Itinerary> order_;  // front == most recently used
  std::unordered_map<Itinerary, Entry, ItineraryHash> map_;
};

}  // namespace pricesim
