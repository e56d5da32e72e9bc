#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "storesim/features.hpp"
#include "storesim/model.hpp"
#include "storesim/records.hpp"
#include "storesim/retail.hpp"

// Fitting machinery: gradient-ascent MAP, mean-field ADVI, multinomial NUTS
// with dual-averaging step size and diagonal mass adaptation, convergence
// diagnostics, and posterior-predictive revenue summaries.
namespace storesim::inference {

// Log density with exact gradient. When the gradient pointer is null only the
// value is required. Implementations must be pure and safe to call from
// multiple threads.
using GradTarget =
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

GradTarget make_target(const model::LogPosterior& lp);

// ---------------------------------------------------------------- MAP

struct MapOptions {
  int max_iters = 10000;
  double grad_tol = 1e-6;   // infinity norm
  double init_step = 1.0;
};

struct MapResult {
  Eigen::VectorXd point;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Gradient ascent with Armijo backtracking. On a non-finite objective the
// last valid iterate is returned with converged=false.
MapResult map_estimate(const GradTarget& target, const Eigen::VectorXd& init,
                       const MapOptions& opts = {});

// ---------------------------------------------------------------- ADVI

struct AdviOptions {
  long iterations = 200000;
  double learning_rate = 1e-2;  // AdaGrad base step
  std::uint64_t seed = 0;
};

struct AdviResult {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_std;
  std::vector<double> elbo_trace;  // one single-sample ELBO estimate per step
  bool ok = false;
  std::string message;
};

// Mean-field Gaussian ELBO maximization with the reparameterization trick,
// one Monte-Carlo sample per step. Aborts after 100 consecutive non-finite
// ELBO evaluations.
AdviResult advi_fit(const GradTarget& target, const Eigen::VectorXd& init,
                    const AdviOptions& opts = {});

// ---------------------------------------------------------------- NUTS

struct NutsOptions {
  int chains = 4;
  int tune = 5000;
  int draws = 5000;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  std::uint64_t seed = 0;
  int threads = 1;               // chains run concurrently up to this many
  double init_jitter = 0.0;      // per-chain N(0, jitter^2) around init
  std::optional<Eigen::VectorXd> init_inv_mass;  // e.g. ADVI stds squared
};

struct ChainStats {
  int divergences = 0;
  double step_size = 0.0;
  double mean_accept = 0.0;
  int max_depth_hits = 0;
};

struct Diagnostics {
  bool has_rhat = false;       // requires >= 2 chains
  Eigen::VectorXd rhat;        // split R-hat per coordinate (floored at 1)
  Eigen::VectorXd ess;         // bulk effective sample size per coordinate
};

struct PosteriorDraws {
  Eigen::MatrixXd draws;       // (chains * samples_per_chain) x dim, chain-major
  int chain_count = 0;
  int tune = 0;
  int samples_per_chain = 0;
  std::vector<ChainStats> chain_stats;
  Diagnostics diagnostics;
  bool failed = false;         // >25% divergent transitions in some chain
  std::vector<std::string> param_names;

  long total_draws() const { return draws.rows(); }
};

PosteriorDraws nuts_sample(const GradTarget& target, const Eigen::VectorXd& init,
                           const NutsOptions& opts);

// Split R-hat and bulk ESS per coordinate; draws must be chain-major with
// equal chain lengths. With a single chain R-hat is reported as absent.
Diagnostics compute_diagnostics(const Eigen::MatrixXd& draws, int chains);

// One leapfrog trajectory (exposed for the energy-conservation probe).
// inv_mass is the diagonal of M^{-1}; p is updated in place alongside theta.
void leapfrog(const GradTarget& target, Eigen::VectorXd& theta, Eigen::VectorXd& p,
              const Eigen::VectorXd& inv_mass, double step_size, int steps);

double hamiltonian(const GradTarget& target, const Eigen::VectorXd& theta,
                   const Eigen::VectorXd& p, const Eigen::VectorXd& inv_mass);

// ------------------------------------------------- posterior prediction

struct PredictionRow {
  Date date;
  int region = 0, product = 0;
  double truth = 0.0;   // realized revenue p_j * q_ij
  double mean = 0.0, lo95 = 0.0, hi95 = 0.0;
};

struct PredictionDay {
  Date date;
  double truth = 0.0, mean = 0.0, lo95 = 0.0, hi95 = 0.0;
};

struct PredictionSummary {
  std::vector<PredictionRow> rows;
  std::vector<PredictionDay> days;  // store-level daily aggregates
};

struct PredictOptions {
  int thin_draws = 500;       // posterior draws used per prediction
  std::uint64_t seed = 0;
  std::optional<Date> from_date;  // predict rows on/after this date only
};

// Posterior-predictive revenue for every design row of `dataset` (first day
// dropped for the lag), sampling one quantity per thinned draw per row.
PredictionSummary predict_revenue(const PosteriorDraws& draws,
                                  const model::ParamPacker& packer,
                                  const model::Hyperparams& hyper,
                                  const Dataset& dataset,
                                  const retail::RetailEnvironmentSpec& env,
                                  const features::SalesScaler& scaler,
                                  const PredictOptions& opts = {});

}  // namespace storesim::inference
