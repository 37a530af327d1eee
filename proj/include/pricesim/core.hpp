#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "pricesim/rng.hpp"
#include "pricesim/time.hpp"

namespace pricesim {

// Occupancy + stay window. Two criteria are the same iff all fields match.
struct SearchCriteria {
  CivilDate checkin;
  CivilDate checkout;
  int adults = 2;
  int children = 0;
  int rooms = 1;

  friend bool operator==(const SearchCriteria&, const SearchCriteria&) =
      default;
};

struct CriteriaBounds {
  int max_adults = 8;
  int max_children = 8;
  int max_rooms = 4;
  int max_stay_nights = 30;
};

// Throws std::invalid_argument naming the offending field.
void validate_criteria(const SearchCriteria& c,
                       const CriteriaBounds& bounds = {});

// The cache key: a hotel queried with specific criteria.
struct Itinerary {
  std::string hotel_id;
  SearchCriteria criteria;

  friend bool operator==(const Itinerary&, const Itinerary&) = default;
};

std::uint64_t hash_itinerary(const Itinerary& it);

struct ItineraryHash {
  std::size_t operator()(const Itinerary& it) const {
    return static_cast<std::size_t>(hash_itinerary(it));
  }
};

struct UserSearch {
  std::string user_id;
  Itinerary itinerary;
  SimTime timestamp = 0;
};

// A supplier response as held in the cache. `ttl` is assigned by the serving
// policy, not by the supplier.
struct PriceQuote {
  Itinerary itinerary;
  std::int64_t price_minor = 0;  // minor currency units; 0 == sold out
  SimTime fetched_at = 0;
  SimTime ttl = 0;

  // Live on [fetched_at, fetched_at + ttl).
  bool live_at(SimTime now) const {
    return fetched_at <= now && now < fetched_at + ttl;
  }
};

// Per-search stage probabilities: displayed, booked-if-displayed,
// accurate-if-booked.
struct SearchOutcome {
  double p_display = 1.0;
  double p_book = 0.0;
  double p_accurate = 1.0;
};

void validate_outcome(const SearchOutcome& o);

// Expected bookings over a batch of searches: sum of the per-search products.
double expected_bookings(std::span<const SearchOutcome> outcomes);

}  // namespace pricesim
