#pragma once

#include <Eigen/Dense>
#include <vector>

#include "storesim/records.hpp"
#include "storesim/retail.hpp"

// Feature extraction: x = [x_t | x_r | x_p | x_s] with one-hot day-of-week,
// region and product blocks plus the standardized previous-day product
// revenue, and the design matrix used for model fitting.
namespace storesim::features {

// Column layout of the feature vector for an environment with n regions and
// k products. Total width 7 + n + k + 1.
struct FeatureLayout {
  int n_regions = 0;
  int n_products = 0;

  int day_offset() const { return 0; }
  int region_offset() const { return 7; }
  int product_offset() const { return 7 + n_regions; }
  int prev_sales_offset() const { return 7 + n_regions + n_products; }
  int dim() const { return 7 + n_regions + n_products + 1; }
};

// z-scoring moments of product-level previous-day revenue (population
// convention, std floored at 1e-8).
struct SalesScaler {
  double mean = 0.0;
  double std = 1.0;

  double scale(double v) const { return (v - mean) / std; }
  double unscale(double z) const { return mean + z * std; }
};

inline constexpr double kScalerStdFloor = 1e-8;

// Moments of the given product-level revenue values; throws on empty input.
SalesScaler fit_scaler(const std::vector<double>& revenues);

Eigen::VectorXd extract_features(int day, int region, int product,
                                 double prev_product_revenue,
                                 const SalesScaler& scaler,
                                 const FeatureLayout& layout);

// One design-matrix row per observed (date, region, product) whose previous
// calendar day lies inside the dataset; rows of the first date carry no lag
// and are dropped.
struct DesignMatrix {
  Eigen::MatrixXd X;          // rows x layout.dim()
  Eigen::VectorXd y;          // observed quantities
  std::vector<Date> dates;    // per-row labels
  std::vector<int> regions;
  std::vector<int> products;
  FeatureLayout layout;

  long rows() const { return X.rows(); }
};

DesignMatrix build_design_matrix(const Dataset& dataset,
                                 const retail::RetailEnvironmentSpec& env,
                                 const SalesScaler& scaler);

// Product-level revenue per (date, product): rho_j = sum_i p_j q_ij. Used for
// scaler fitting and for lag lookups. Values are returned date-major in the
// order the dataset visits (date, product) pairs with any sales row.
std::vector<double> product_day_revenues(const Dataset& dataset);

}  // namespace storesim::features
