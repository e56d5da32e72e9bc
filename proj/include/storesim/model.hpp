#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "storesim/features.hpp"
#include "storesim/rng.hpp"
#include "storesim/stats.hpp"

// The generative demand model: truncated-normal quantity likelihood whose
// mean is linear in [x_t | x_r | x_p | x_s], with multivariate-normal weight
// blocks, LKJ-Cholesky correlation priors on the product and temporal
// covariances, half-Cauchy scales, and an inverse-gamma observation scale.
namespace storesim::model {

// Prior hyperparameters. Defaults follow the fitted configuration shipped
// with the library; all scales must be strictly positive.
struct Hyperparams {
  Eigen::VectorXd mu_r;        // region prior mean, length n (default zeros)
  double gamma_r = 25.0;       // region prior covariance scale: Q_r = gamma * I
  Eigen::VectorXd delta_p;     // product hypermean, length k (default 2.5)
  double gamma_p = 25.0;       // product hypermean covariance scale
  double sigma_p = 2.5;        // half-Cauchy scale of product stds
  Eigen::VectorXd delta_t;     // temporal hypermean (default [5,5,5,5,10,15,0])
  double gamma_t = 10.0;       // temporal hypermean covariance scale
  double sigma_t = 2.5;        // half-Cauchy scale of temporal stds
  double phi_s = 1.0;          // half-Cauchy scale of mu_s
  double psi_s = 2.5;          // half-Cauchy scale of sigma_s
  double alpha_q = 1.0;        // inverse-gamma shape for sigma_q
  double beta_q = 1.0;         // inverse-gamma scale for sigma_q
  double b_scale = 10.0;       // std of the normal prior on the bias
  double lkj_eta = 2.0;        // LKJ concentration
  bool hierarchical = false;   // per-cell region weights (hierarchical means)

  static Hyperparams defaults(int n_regions, int n_products);
  void validate(int n_regions, int n_products) const;
};

// All model parameters in constrained space. Lower-triangular Cholesky
// factors parameterize the two correlation matrices; `unconstrained_cache`
// is set by ParamPacker::unpack so pack() can invert the packing exactly.
template <typename T>
struct ModelParamsT {
  std::vector<T> w_t;                           // 7 temporal weights
  std::vector<T> w_r;                           // n region weights
  std::vector<std::vector<T>> w_r_cell;         // n x k (hierarchical only)
  std::vector<T> w_p;                           // k product weights
  T w_s{};                                      // autoregressive weight, >= 0
  T b{};                                        // bias
  T sigma_q{};                                  // observation scale, > 0
  std::vector<T> mu_t;                          // 7
  std::vector<std::vector<T>> temp_corr_chol;   // 7 x 7 lower, unit rows
  std::vector<T> temp_stds;                     // 7, > 0
  std::vector<T> mu_p;                          // k
  std::vector<std::vector<T>> prod_corr_chol;   // k x k lower, unit rows
  std::vector<T> prod_stds;                     // k, > 0
  T mu_s{};                                     // > 0
  T sigma_s{};                                  // > 0
};

struct ModelParams : ModelParamsT<double> {
  std::optional<Eigen::VectorXd> unconstrained_cache;
};

// Flat unconstrained coordinates <-> ModelParams. Positive scalars and std
// vectors travel through log; correlation Cholesky factors through the
// tanh / partial-correlation construction; everything else is identity.
class ParamPacker {
 public:
  ParamPacker(int n_regions, int n_products, bool hierarchical);

  int dim() const { return dim_; }
  int n_regions() const { return n_; }
  int n_products() const { return k_; }
  bool hierarchical() const { return hier_; }
  const std::vector<std::string>& names() const { return names_; }

  // theta -> params; adds the log-Jacobian of the constraining transform to
  // *log_jacobian when non-null.
  ModelParams unpack(const Eigen::VectorXd& theta, double* log_jacobian = nullptr) const;

  // params -> theta. Returns the cached coordinates when params came from
  // unpack(); otherwise inverts the transforms numerically.
  Eigen::VectorXd pack(const ModelParams& params) const;

 private:
  int n_, k_, dim_;
  bool hier_;
  std::vector<std::string> names_;
};

// Sum of all prior log-densities. The LKJ terms omit their normalizing
// constants (they depend only on the dimension and concentration). Returns
// -inf when a parameter invariant is violated.
double log_prior(const ModelParams& params, const Hyperparams& hyper);

// Likelihood of the design matrix under the truncated-normal quantity model.
double log_likelihood(const ModelParams& params, const Hyperparams& hyper,
                      const features::DesignMatrix& design);

// Ancestral draw from the prior; correlation matrices via the onion method.
ModelParams sample_prior(const Hyperparams& hyper, int n_regions,
                         int n_products, RngStream& rng);

// Weight vector [w_t | w_r | w_p | w_s] matching the design-matrix columns.
Eigen::VectorXd assemble_weights(const ModelParams& params);

// One posterior-predictive quantity draw for a feature vector (non-
// hierarchical weight assembly): sample_trunc_normal(x'w + b, sigma_q).
double predictive_quantity(const ModelParams& params, const Eigen::VectorXd& feature,
                           RngStream& rng);

// The parameters the simulator and predictors consume. w_region holds the
// per-cell region weight (a broadcast of w_r when the model is not
// hierarchical).
struct PredictiveParams {
  Eigen::VectorXd w_t;       // 7
  Eigen::MatrixXd w_region;  // n x k
  Eigen::VectorXd w_p;       // k
  double w_s = 0.0;
  double b = 0.0;
  double sigma_q = 1.0;
};

PredictiveParams predictive_view(const ModelParams& params, int n_regions,
                                 int n_products, bool hierarchical);

inline double predictive_mu(const PredictiveParams& p, int day, int region,
                            int product, double scaled_prev_revenue) {
  return p.w_t[day] + p.w_region(region, product) + p.w_p[product] +
         p.w_s * scaled_prev_revenue + p.b;
}

// Log-posterior over unconstrained coordinates with exact gradients.
// Evaluations are pure; concurrent calls from different threads are safe.
class LogPosterior {
 public:
  LogPosterior(Hyperparams hyper, features::DesignMatrix design);

  int dim() const { return packer_.dim(); }
  const ParamPacker& packer() const { return packer_; }
  const Hyperparams& hyper() const { return hyper_; }
  const features::DesignMatrix& design() const { return design_; }

  // log prior + log likelihood + log-Jacobian at unpack(theta).
  double value(const Eigen::VectorXd& theta) const;

  // Same, filling grad. Non-finite intermediates yield -inf with zero grad.
  double value_and_grad(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const;

 private:
  Hyperparams hyper_;
  features::DesignMatrix design_;
  ParamPacker packer_;
};

// Names of the constrained weight coordinates checked in calibration runs:
// w_t[0..6], w_r[0..n-1], w_p[0..k-1], w_s, b.
std::vector<std::pair<std::string, double>> weight_coordinates(const ModelParams& params);

}  // namespace storesim::model
