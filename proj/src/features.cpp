#include "storesim/features.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace storesim::features {

SalesScaler fit_scaler(const std::vector<double>& revenues) {
  if (revenues.empty()) throw std::invalid_argument("fit_scaler: empty input");
  double mean = 0.0;
  for (double v : revenues) mean += v;
  mean /= static_cast<double>(revenues.size());
  double var = 0.0;
  for (double v : revenues) var += (v - mean) * (v - mean);
  var /= static_cast<double>(revenues.size());
  SalesScaler s;
  s.mean = mean;
  s.std = std::max(std::sqrt(var), kScalerStdFloor);
  return s;
}

Eigen::VectorXd extract_features(int day, int region, int product,
                                 double prev_product_revenue,
                                 const SalesScaler& scaler,
                                 const FeatureLayout& layout) {
  if (day < 0 || day > 6) throw std::out_of_range("extract_features: day");
  if (region < 0 || region >= layout.n_regions)
    throw std::out_of_range("extract_features: region");
  if (product < 0 || product >= layout.n_products)
    throw std::out_of_range("extract_features: product");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(layout.dim());
  x[layout.day_offset() + day] = 1.0;
  x[layout.region_offset() + region] = 1.0;
  x[layout.product_offset() + product] = 1.0;
  x[layout.prev_sales_offset()] = scaler.scale(prev_product_revenue);
  return x;
}

std::vector<double> product_day_revenues(const Dataset& dataset) {
  std::map<std::pair<std::int64_t, int>, double> acc;
  for (const auto& r : dataset.sales)
    acc[{r.date.days, r.product_id}] += r.price * r.quantity;
  std::vector<double> out;
  out.reserve(acc.size());
  for (const auto& [key, v] : acc) out.push_back(v);
  return out;
}

DesignMatrix build_design_matrix(const Dataset& dataset,
                                 const retail::RetailEnvironmentSpec& env,
                                 const SalesScaler& scaler) {
  if (dataset.sales.empty())
    throw std::invalid_argument("build_design_matrix: empty dataset");
  for (std::size_t i = 1; i < dataset.sales.size(); ++i)
    if (dataset.sales[i].date < dataset.sales[i - 1].date)
      throw std::invalid_argument("build_design_matrix: dataset not sorted by date");

  FeatureLayout layout{env.n_regions, env.n_products};

  // Product-level revenue per day, for lag lookups.
  std::map<std::int64_t, std::vector<double>> day_product_rev;
  for (const auto& r : dataset.sales) {
    auto& v = day_product_rev[r.date.days];
    if (v.empty()) v.assign(static_cast<std::size_t>(env.n_products), 0.0);
    v[static_cast<std::size_t>(r.product_id)] += r.price * r.quantity;
  }

  const Date first = dataset.min_date();
  std::vector<const SalesRecord*> usable;
  usable.reserve(dataset.sales.size());
  for (const auto& r : dataset.sales) {
    if (r.date == first) continue;  // no lag available
    if (r.quantity < 0.0)
      throw std::invalid_argument("build_design_matrix: negative quantity");
    usable.push_back(&r);
  }

  DesignMatrix d;
  d.layout = layout;
  d.X.resize(static_cast<long>(usable.size()), layout.dim());
  d.y.resize(static_cast<long>(usable.size()));
  d.dates.reserve(usable.size());
  d.regions.reserve(usable.size());
  d.products.reserve(usable.size());
  for (std::size_t idx = 0; idx < usable.size(); ++idx) {
    const SalesRecord& r = *usable[idx];
    const auto it = day_product_rev.find(r.date.days - 1);
    const double prev = it == day_product_rev.end()
                            ? 0.0
                            : it->second[static_cast<std::size_t>(r.product_id)];
    d.X.row(static_cast<long>(idx)) =
        extract_features(r.date.day_of_week(), r.region_id, r.product_id, prev,
                         scaler, layout);
    d.y[static_cast<long>(idx)] = r.quantity;
    d.dates.push_back(r.date);
    d.regions.push_back(r.region_id);
    d.products.push_back(r.product_id);
  }
  return d;
}

}  // namespace storesim::features
