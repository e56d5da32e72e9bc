#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace storesim {

// ISO-8601 calendar date. Stored as a civil day count so ordering, day-of-week
// and lag arithmetic are exact.
struct Date {
  std::int64_t days = 0;  // days since 1970-01-01

  static Date from_ymd(int year, int month, int day);
  static Date parse(const std::string& iso);  // "YYYY-MM-DD"
  std::string to_string() const;

  // 0 = Sunday ... 6 = Saturday.
  int day_of_week() const {
    return static_cast<int>(((days % 7) + 11) % 7);  // 1970-01-01 is a Thursday
  }

  Date plus_days(std::int64_t n) const { return Date{days + n}; }
  auto operator<=>(const Date&) const = default;
};

struct SalesRecord {
  Date date;
  int region_id = 0;
  int product_id = 0;
  double quantity = 0.0;  // non-negative; daily counts in the source data
  double price = 0.0;     // positive unit price
};

struct PlacementRecord {
  Date date;
  int region_id = 0;
  int product_id = 0;
};

// A validated, date-sorted dataset: every sales row has a matching placement.
struct Dataset {
  std::vector<SalesRecord> sales;           // sorted by (date, region, product)
  std::vector<PlacementRecord> placements;  // sorted by (date, region, product)

  bool empty() const { return sales.empty(); }
  Date min_date() const { return sales.front().date; }
  Date max_date() const { return sales.back().date; }
};

}  // namespace storesim
