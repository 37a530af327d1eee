#include "pricesim/scheduler.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "pricesim/csv.hpp"

namespace pricesim {

std::int64_t itinerary_frequency(SimTime ttl) {
  if (ttl <= 0) throw std::invalid_argument("ttl must be > 0");
  return (kSecondsPerDay + ttl - 1) / ttl;
}

double itinerary_value(std::span<const std::pair<double, double>> searches) {
  double total = 0.0;
  for (const auto& [p_b, p_a] : searches) {
    if (!(p_b >= 0.0 && p_b <= 1.0) || !(p_a >= 0.0 && p_a <= 1.0))
      throw std::invalid_argument("probabilities must be in [0, 1]");
    total += p_b * p_a;
  }
  return total;
}

ItineraryPlanEntry make_plan_entry(Itinerary it, SimTime ttl, double value) {
  ItineraryPlanEntry e;
  e.itinerary = std::move(it);
  e.ttl = ttl;
  e.frequency = itinerary_frequency(ttl);
  e.value = value;
  e.value_per_request = value / static_cast<double>(e.frequency);
  return e;
}

std::vector<ItineraryPlanEntry> select_top_requests(
    std::vector<ItineraryPlanEntry> entries, std::int64_t budget,
    AdmissionGranularity granularity) {
  if (budget < 0) throw std::invalid_argument("budget must be >= 0");
  std::vector<std::size_t> order(entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = entries[a];
    const auto& eb = entries[b];
    if (ea.value_per_request != eb.value_per_request)
      return ea.value_per_request > eb.value_per_request;
    if (ea.value != eb.value) return ea.value > eb.value;
    return a < b;
  });
  std::vector<ItineraryPlanEntry> selected;
  std::int64_t remaining = budget;
  for (std::size_t idx : order) {
    if (remaining == 0) break;
    ItineraryPlanEntry& e = entries[idx];
    if (e.frequency <= remaining) {
      remaining -= e.frequency;
      selected.push_back(std::move(e));
    } else if (granularity == AdmissionGranularity::kPerRequest) {
      // Truncated admission: fewer sends than the ttl needs, so the plan
      // cannot keep this itinerary continuously cached (audits will say so).
      ItineraryPlanEntry t = std::move(e);
      double fraction = static_cast<double>(remaining) /
                        static_cast<double>(t.frequency);
      t.frequency = remaining;
      t.value *= fraction;
      t.value_per_request = t.value / static_cast<double>(t.frequency);
      selected.push_back(std::move(t));
      remaining = 0;
    }
  }
  return selected;
}

SchedulePlan build_schedule(std::span<const ItineraryPlanEntry> selected,
                            int mu) {
  if (mu <= 0) throw std::invalid_argument("mu must be > 0");
  std::int64_t total = 0;
  for (const auto& e : selected) {
    if (e.frequency <= 0)
      throw std::invalid_argument("plan entry with nonpositive frequency");
    total += e.frequency;
  }
  if (total > static_cast<std::int64_t>(mu) * kSecondsPerDay)
    throw std::invalid_argument("selected entries exceed the daily budget");

  SchedulePlan plan;
  plan.items.reserve(selected.size());
  plan.buckets.assign(static_cast<std::size_t>(kSecondsPerDay), {});

  // Group by (frequency, ttl); ordered map keeps construction deterministic
  // regardless of input order.
  std::map<std::pair<std::int64_t, SimTime>, std::vector<std::uint32_t>>
      groups;
  for (const auto& e : selected) {
    auto idx = static_cast<std::uint32_t>(plan.items.size());
    plan.items.push_back(SchedulePlan::Item{e.itinerary, e.ttl, e.frequency});
    groups[{e.frequency, e.ttl}].push_back(idx);
  }

  // Place the most frequent (narrowest-window) groups first; each entry
  // takes the first slot whose repeats are all under mu. A blocked slot
  // stays blocked for every later entry of the group, so the cursor never
  // revisits it and placement stays linear in mu * 86400.
  std::vector<std::uint32_t> load(static_cast<std::size_t>(kSecondsPerDay), 0);
  for (auto g = groups.rbegin(); g != groups.rend(); ++g) {
    const std::int64_t f = g->first.first;
    const SimTime window = kSecondsPerDay / f;  // slots per repeat
    std::vector<SimTime> offsets(static_cast<std::size_t>(f));
    for (std::int64_t m = 0; m < f; ++m)
      offsets[static_cast<std::size_t>(m)] = m * kSecondsPerDay / f;
    SimTime cursor = 0;
    for (std::uint32_t member : g->second) {
      SimTime slot = -1;
      for (SimTime tried = 0; tried < window; ++tried) {
        const SimTime s = (cursor + tried) % window;
        bool fits = true;
        for (SimTime offset : offsets) {
          if (load[static_cast<std::size_t>(offset + s)] >=
              static_cast<std::uint32_t>(mu)) {
            fits = false;
            break;
          }
        }
        if (fits) {
          slot = s;
          cursor = (s + 1) % window;
          break;
        }
      }
      if (slot < 0)
        throw std::runtime_error(
            "no collision-free slot for " +
            plan.items[member].itinerary.hotel_id + " at frequency " +
            std::to_string(f));
      for (SimTime offset : offsets) {
        ++load[static_cast<std::size_t>(offset + slot)];
        plan.buckets[static_cast<std::size_t>(offset + slot)].push_back(
            member);
      }
    }
  }

  for (std::size_t s = 0; s < plan.buckets.size(); ++s) {
    if (plan.buckets[s].size() > static_cast<std::size_t>(mu))
      throw std::logic_error("schedule overloads second " +
                             std::to_string(s));  // unreachable by placement
    plan.total_sends += plan.buckets[s].size();
  }
  return plan;
}

std::string SchedulePlan::to_csv() const {
  std::string out = "second,hotel_id,checkin,checkout,adults,children,rooms\n";
  char buf[160];
  for (std::size_t s = 0; s < buckets.size(); ++s) {
    for (std::uint32_t idx : buckets[s]) {
      const Itinerary& it = items[idx].itinerary;
      std::snprintf(buf, sizeof buf, "%zu,%s,%s,%s,%d,%d,%d\n", s,
                    it.hotel_id.c_str(),
                    format_date(it.criteria.checkin).c_str(),
                    format_date(it.criteria.checkout).c_str(),
                    it.criteria.adults, it.criteria.children,
                    it.criteria.rooms);
      out += buf;
    }
  }
  return out;
}

SchedulePlan SchedulePlan::from_csv_file(const std::string& path,
                                         const TtlTable* ttl_table,
                                         CivilDate plan_date) {
  SchedulePlan plan;
  plan.buckets.assign(static_cast<std::size_t>(kSecondsPerDay), {});
  std::unordered_map<Itinerary, std::uint32_t, ItineraryHash> index;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    if (line.empty()) return;
    if (line_no == 1) {
      if (line.rfind("second,", 0) != 0)
        throw std::runtime_error(path + ": unexpected plan header");
      return;
    }
    auto f = split_csv(line);
    if (f.size() != 7)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 7 fields");
    SimTime second = parse_i64(f[0], "second");
    if (second < 0 || second >= kSecondsPerDay)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": second out of range");
    Itinerary it;
    it.hotel_id = f[1];
    auto checkin = parse_date(f[2]);
    auto checkout = parse_date(f[3]);
    if (!checkin || !checkout)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad date");
    it.criteria.checkin = *checkin;
    it.criteria.checkout = *checkout;
    it.criteria.adults = static_cast<int>(parse_i64(f[4], "adults"));
    it.criteria.children = static_cast<int>(parse_i64(f[5], "children"));
    it.criteria.rooms = static_cast<int>(parse_i64(f[6], "rooms"));
    auto found = index.find(it);
    std::uint32_t idx;
    if (found == index.end()) {
      idx = static_cast<std::uint32_t>(plan.items.size());
      SimTime ttl = 0;
      if (ttl_table) {
        ttl = ttl_table->lookup(it.criteria.checkin - plan_date, true);
      }
      plan.items.push_back(Item{it, ttl, 0});
      index.emplace(std::move(it), idx);
    } else {
      idx = found->second;
    }
    ++plan.items[idx].frequency;
    plan.buckets[static_cast<std::size_t>(second)].push_back(idx);
    ++plan.total_sends;
  });
  return plan;
}

PlanAudit audit_plan(const SchedulePlan& plan, int mu) {
  PlanAudit audit;
  auto flag = [&](std::string msg) {
    audit.ok = false;
    if (audit.violations.size() < 20) audit.violations.push_back(std::move(msg));
  };

  for (std::size_t s = 0; s < plan.buckets.size(); ++s) {
    auto load = static_cast<std::uint32_t>(plan.buckets[s].size());
    audit.max_second_load = std::max(audit.max_second_load, load);
    audit.total_sends += load;
    if (load > static_cast<std::uint32_t>(mu))
      flag("second " + std::to_string(s) + " load " + std::to_string(load) +
           " exceeds mu " + std::to_string(mu));
  }
  if (audit.total_sends >
      static_cast<std::uint64_t>(mu) * static_cast<std::uint64_t>(kSecondsPerDay))
    flag("total sends exceed mu*86400");

  std::vector<std::vector<SimTime>> sends(plan.items.size());
  for (std::size_t s = 0; s < plan.buckets.size(); ++s) {
    for (std::uint32_t idx : plan.buckets[s])
      sends[idx].push_back(static_cast<SimTime>(s));
  }
  for (std::size_t i = 0; i < sends.size(); ++i) {
    const auto& item = plan.items[i];
    if (item.ttl <= 0) continue;  // unknown ttl: cadence checks not possible
    const auto& ts = sends[i];
    if (static_cast<std::int64_t>(ts.size()) != itinerary_frequency(item.ttl))
      flag(item.itinerary.hotel_id + ": " + std::to_string(ts.size()) +
           " sends, frequency says " +
           std::to_string(itinerary_frequency(item.ttl)));
    for (std::size_t j = 0; j < ts.size(); ++j) {
      SimTime gap = j + 1 < ts.size()
                        ? ts[j + 1] - ts[j]
                        : ts[0] + kSecondsPerDay - ts[j];  // wrap to next day
      if (gap > item.ttl)
        flag(item.itinerary.hotel_id + ": gap " + std::to_string(gap) +
             " exceeds ttl " + std::to_string(item.ttl));
    }
  }
  return audit;
}

std::vector<Itinerary> lru_refresh_batch(const LruSearchCache& cache, int mu,
                                         int mu_passive_this_second,
                                         SimTime now) {
  if (mu_passive_this_second > mu)
    throw std::invalid_argument("passive usage exceeds mu");
  int budget = mu - mu_passive_this_second;
  if (budget <= 0) return {};
  return cache.pull_expiring(now, static_cast<std::size_t>(budget));
}

}  // namespace pricesim
