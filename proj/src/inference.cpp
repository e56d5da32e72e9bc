#include "storesim/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

#include "storesim/rng.hpp"
#include "storesim/stats.hpp"

namespace storesim::inference {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double logaddexp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct PhasePoint {
  Eigen::VectorXd theta, p, grad;
  double logp = -kInf;
};

struct TreeEnds {
  Eigen::VectorXd theta_first, psharp_first;  // in visit order
  Eigen::VectorXd theta_last, psharp_last;
};

struct TreeResult {
  PhasePoint rep;
  double lsw = -kInf;  // log sum of multinomial weights exp(h0 - H)
  bool diverged = false;
  bool turning = false;
  TreeEnds ends;
};

// No-U-turn condition over a span in visit order; dir restores time order.
bool is_turning(const TreeEnds& e, double dir) {
  const Eigen::VectorXd span = dir * (e.theta_last - e.theta_first);
  return span.dot(e.psharp_first) < 0.0 || span.dot(e.psharp_last) < 0.0;
}

// One NUTS chain worker. Holds the adaptation state and per-iteration
// scratch so the recursion stays allocation-light.
class NutsChain {
 public:
  NutsChain(const GradTarget& target, int dim, double target_accept,
            int max_depth, RngStream rng)
      : target_(target),
        dim_(dim),
        target_accept_(target_accept),
        max_depth_(max_depth),
        rng_(std::move(rng)),
        inv_mass_(Eigen::VectorXd::Ones(dim)) {}

  const Eigen::VectorXd& inv_mass() const { return inv_mass_; }
  void set_inv_mass(const Eigen::VectorXd& m) { inv_mass_ = m; }
  double step_size() const { return std::exp(log_eps_); }

  void init_position(const Eigen::VectorXd& theta) {
    z_.theta = theta;
    z_.grad.resize(dim_);
    z_.logp = target_(z_.theta, &z_.grad);
    if (!std::isfinite(z_.logp))
      throw std::runtime_error("NUTS: non-finite log density at the initial point");
    z_.p = Eigen::VectorXd::Zero(dim_);
  }

  const Eigen::VectorXd& position() const { return z_.theta; }

  double kinetic(const Eigen::VectorXd& p) const {
    return 0.5 * (p.array().square() * inv_mass_.array()).sum();
  }

  void sample_momentum(Eigen::VectorXd& p) {
    for (int i = 0; i < dim_; ++i) p[i] = rng_.normal() / std::sqrt(inv_mass_[i]);
  }

  // Hoffman & Gelman's step-size heuristic, run from the current position.
  double find_reasonable_epsilon() {
    double eps = 1.0;
    Eigen::VectorXd p0(dim_);
    sample_momentum(p0);
    const double h0 = -z_.logp + kinetic(p0);
    auto delta_h = [&](double e) {
      PhasePoint z = z_;
      z.p = p0;
      if (!leapfrog_step(z, e)) return -kInf;
      return h0 - (-z.logp + kinetic(z.p));
    };
    double dh = delta_h(eps);
    const double a = dh > std::log(0.5) ? 1.0 : -1.0;
    for (int it = 0; it < 100; ++it) {
      if (!(a * dh > -a * std::log(2.0))) break;
      eps *= std::pow(2.0, a);
      if (eps < 1e-10 || eps > 1e7) break;
      dh = delta_h(eps);
    }
    return std::clamp(eps, 1e-10, 1e7);
  }

  void restart_step_adaptation(double eps) {
    log_eps_ = std::log(eps);
    mu_ = std::log(10.0 * eps);
    log_eps_bar_ = 0.0;
    h_bar_ = 0.0;
    adapt_count_ = 0;
  }

  void adapt_step(double accept_stat) {
    ++adapt_count_;
    const double t0 = 10.0, gamma = 0.05, kappa = 0.75;
    const double m = static_cast<double>(adapt_count_);
    h_bar_ = (1.0 - 1.0 / (m + t0)) * h_bar_ +
             (target_accept_ - accept_stat) / (m + t0);
    log_eps_ = mu_ - std::sqrt(m) / gamma * h_bar_;
    const double w = std::pow(m, -kappa);
    log_eps_bar_ = w * log_eps_ + (1.0 - w) * log_eps_bar_;
  }

  double averaged_step() const { return std::exp(log_eps_bar_); }

  struct IterStats {
    double accept_stat = 0.0;
    bool diverged = false;
    bool hit_max_depth = false;
  };

  // One transition; updates the current position.
  IterStats transition(double eps) {
    eps_ = eps;
    sum_metro_ = 0.0;
    n_leapfrog_ = 0;
    diverged_iter_ = false;

    PhasePoint left = z_, right = z_;
    sample_momentum(left.p);
    right.p = left.p;
    h0_ = -z_.logp + kinetic(left.p);

    PhasePoint rep = z_;
    double tree_lsw = 0.0;
    TreeEnds ends{z_.theta, inv_mass_.cwiseProduct(left.p), z_.theta,
                  inv_mass_.cwiseProduct(left.p)};

    IterStats stats;
    int depth = 0;
    for (; depth < max_depth_; ++depth) {
      const double dir = rng_.uniform() < 0.5 ? -1.0 : 1.0;
      PhasePoint& end = dir > 0 ? right : left;
      TreeResult sub = build_tree(end, depth, dir);
      if (sub.diverged) {
        stats.diverged = true;
        break;
      }
      if (sub.turning) break;
      // biased progressive sampling toward the new subtree
      if (std::log(rng_.uniform()) < sub.lsw - tree_lsw) rep = sub.rep;
      tree_lsw = logaddexp(tree_lsw, sub.lsw);
      if (dir > 0) {
        ends.theta_last = sub.ends.theta_last;
        ends.psharp_last = sub.ends.psharp_last;
      } else {
        ends.theta_first = sub.ends.theta_last;
        ends.psharp_first = sub.ends.psharp_last;
      }
      // full-trajectory check in time order (first == backward end)
      const Eigen::VectorXd span = ends.theta_last - ends.theta_first;
      if (span.dot(ends.psharp_first) < 0.0 || span.dot(ends.psharp_last) < 0.0)
        break;
    }
    stats.hit_max_depth = depth == max_depth_;
    stats.accept_stat = n_leapfrog_ > 0 ? sum_metro_ / static_cast<double>(n_leapfrog_) : 0.0;
    z_ = rep;
    return stats;
  }

 private:
  bool leapfrog_step(PhasePoint& z, double eps) {
    z.p.noalias() += 0.5 * eps * z.grad;
    z.theta.noalias() += eps * inv_mass_.cwiseProduct(z.p);
    z.logp = target_(z.theta, &z.grad);
    if (!std::isfinite(z.logp)) return false;
    z.p.noalias() += 0.5 * eps * z.grad;
    return true;
  }

  TreeResult build_tree(PhasePoint& end, int depth, double dir) {
    if (depth == 0) {
      TreeResult t;
      const bool finite = leapfrog_step(end, dir * eps_);
      ++n_leapfrog_;
      const double h = finite ? -end.logp + kinetic(end.p) : kInf;
      const double lw = h0_ - h;
      t.diverged = !finite || h - h0_ > 1000.0;
      sum_metro_ += std::exp(std::min(0.0, lw));
      if (!t.diverged) {
        t.lsw = lw;
        t.rep = end;
      }
      t.ends.theta_first = end.theta;
      t.ends.psharp_first = inv_mass_.cwiseProduct(end.p);
      t.ends.theta_last = t.ends.theta_first;
      t.ends.psharp_last = t.ends.psharp_first;
      return t;
    }
    TreeResult inner = build_tree(end, depth - 1, dir);
    if (inner.diverged || inner.turning) return inner;
    TreeResult outer = build_tree(end, depth - 1, dir);
    if (outer.diverged || outer.turning) {
      inner.diverged = outer.diverged;
      inner.turning = outer.turning;
      return inner;
    }
    TreeResult merged;
    merged.lsw = logaddexp(inner.lsw, outer.lsw);
    merged.rep = std::log(rng_.uniform()) < outer.lsw - merged.lsw ? outer.rep : inner.rep;
    merged.ends.theta_first = inner.ends.theta_first;
    merged.ends.psharp_first = inner.ends.psharp_first;
    merged.ends.theta_last = outer.ends.theta_last;
    merged.ends.psharp_last = outer.ends.psharp_last;
    merged.turning = is_turning(merged.ends, dir);
    return merged;
  }

  const GradTarget& target_;
  int dim_;
  double target_accept_;
  int max_depth_;
  RngStream rng_;
  Eigen::VectorXd inv_mass_;
  PhasePoint z_;

  // dual averaging state
  double log_eps_ = 0.0, mu_ = 0.0, log_eps_bar_ = 0.0, h_bar_ = 0.0;
  long adapt_count_ = 0;

  // per-iteration accumulators
  double eps_ = 1.0, h0_ = 0.0, sum_metro_ = 0.0;
  long n_leapfrog_ = 0;
  bool diverged_iter_ = false;
};

struct Welford {
  long n = 0;
  Eigen::VectorXd mean, m2;

  void reset(int dim) {
    n = 0;
    mean = Eigen::VectorXd::Zero(dim);
    m2 = Eigen::VectorXd::Zero(dim);
  }
  void add(const Eigen::VectorXd& x) {
    ++n;
    const Eigen::VectorXd d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d.cwiseProduct(x - mean);
  }
  // Regularized sample variance (shrunk toward 1e-3, Stan-style).
  Eigen::VectorXd regularized_variance() const {
    const double nn = static_cast<double>(n);
    Eigen::VectorXd var = m2 / std::max(1.0, nn - 1.0);
    return (nn / (nn + 5.0)) * var.array() + 1e-3 * (5.0 / (nn + 5.0));
  }
};

// Mass-adaptation windows within the tuning phase: a step-size-only opening
// buffer, doubling variance-estimation windows, and a closing buffer.
std::vector<std::pair<int, int>> adaptation_windows(int tune, int& init_buffer,
                                                    int& term_buffer) {
  init_buffer = 75;
  term_buffer = 50;
  int base = 25;
  std::vector<std::pair<int, int>> windows;
  if (tune < 20) {
    init_buffer = tune;
    term_buffer = 0;
    return windows;
  }
  if (init_buffer + base + term_buffer > tune) {
    init_buffer = static_cast<int>(0.15 * tune);
    term_buffer = static_cast<int>(0.10 * tune);
    base = tune - init_buffer - term_buffer;
  }
  int start = init_buffer;
  int width = base;
  const int end_limit = tune - term_buffer;
  while (start < end_limit) {
    int end = start + width;
    if (end + 2 * width > end_limit) end = end_limit;  // absorb the remainder
    windows.emplace_back(start, end);
    start = end;
    width *= 2;
  }
  return windows;
}

void run_chain(int chain_id, const GradTarget& target, const Eigen::VectorXd& init,
               const NutsOptions& opts, Eigen::MatrixXd* out, long row0,
               ChainStats* stats) {
  RngStream rng = RngStream::derive(opts.seed, 0x10000u + static_cast<unsigned>(chain_id));
  const int dim = static_cast<int>(init.size());

  NutsChain chain(target, dim, opts.target_accept, opts.max_tree_depth,
                  RngStream::derive(opts.seed, 0x20000u + static_cast<unsigned>(chain_id)));
  if (opts.init_inv_mass) {
    if (opts.init_inv_mass->size() != dim)
      throw std::invalid_argument("init_inv_mass dimension mismatch");
    chain.set_inv_mass(*opts.init_inv_mass);
  }

  Eigen::VectorXd theta = init;
  if (opts.init_jitter > 0.0)
    for (int i = 0; i < dim; ++i) theta[i] += opts.init_jitter * rng.normal();
  chain.init_position(theta);
  chain.restart_step_adaptation(chain.find_reasonable_epsilon());

  int init_buffer = 0, term_buffer = 0;
  const auto windows = adaptation_windows(opts.tune, init_buffer, term_buffer);
  std::size_t window_idx = 0;
  Welford acc;
  acc.reset(dim);

  double eps_final = chain.step_size();
  double accept_sum = 0.0;
  for (int iter = 0; iter < opts.tune + opts.draws; ++iter) {
    const bool warm = iter < opts.tune;
    const double eps = warm ? chain.step_size() : eps_final;
    const auto it_stats = chain.transition(eps);
    if (warm) {
      chain.adapt_step(it_stats.accept_stat);
      if (window_idx < windows.size()) {
        const auto [w_start, w_end] = windows[window_idx];
        if (iter >= w_start && iter < w_end) acc.add(chain.position());
        if (iter + 1 == w_end) {
          chain.set_inv_mass(acc.regularized_variance());
          acc.reset(dim);
          ++window_idx;
          chain.restart_step_adaptation(chain.find_reasonable_epsilon());
        }
      }
      if (iter + 1 == opts.tune) eps_final = chain.averaged_step();
    } else {
      out->row(row0 + (iter - opts.tune)) = chain.position();
      if (it_stats.diverged) ++stats->divergences;
      if (it_stats.hit_max_depth) ++stats->max_depth_hits;
      accept_sum += it_stats.accept_stat;
    }
  }
  stats->step_size = eps_final;
  stats->mean_accept = opts.draws > 0 ? accept_sum / opts.draws : 0.0;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - std::floor(pos);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

GradTarget make_target(const model::LogPosterior& lp) {
  return [&lp](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
    return grad ? lp.value_and_grad(theta, *grad) : lp.value(theta);
  };
}

MapResult map_estimate(const GradTarget& target, const Eigen::VectorXd& init,
                       const MapOptions& opts) {
  MapResult res;
  res.point = init;
  Eigen::VectorXd grad(init.size());
  res.value = target(res.point, &grad);
  if (!std::isfinite(res.value)) return res;

  double step = opts.init_step;
  Eigen::VectorXd cand(init.size()), cand_grad(init.size());
  for (res.iterations = 0; res.iterations < opts.max_iters; ++res.iterations) {
    if (grad.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
      res.converged = true;
      break;
    }
    const double slope = grad.squaredNorm();
    bool accepted = false;
    while (step > 1e-20) {
      cand = res.point + step * grad;
      const double v = target(cand, &cand_grad);
      if (std::isfinite(v) && v >= res.value + 1e-4 * step * slope) {
        res.point = cand;
        res.value = v;
        grad = cand_grad;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // stalled: report the last valid iterate
    step = std::min(step * 2.0, 1e3);
  }
  return res;
}

AdviResult advi_fit(const GradTarget& target, const Eigen::VectorXd& init,
                    const AdviOptions& opts) {
  const int dim = static_cast<int>(init.size());
  AdviResult res;
  res.mean = init;
  res.log_std = Eigen::VectorXd::Constant(dim, std::log(0.1));
  res.elbo_trace.reserve(static_cast<std::size_t>(opts.iterations));

  RngStream rng = RngStream::derive(opts.seed, 0xADC1u);
  Eigen::VectorXd acc_mu = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd acc_om = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd zeta(dim), theta(dim), grad(dim);
  const double entropy_const = 0.5 * dim * (math::kLog2Pi + 1.0);

  int consecutive_bad = 0;
  for (long it = 0; it < opts.iterations; ++it) {
    for (int i = 0; i < dim; ++i) zeta[i] = rng.normal();
    const Eigen::VectorXd stds = res.log_std.array().exp();
    theta = res.mean + stds.cwiseProduct(zeta);
    const double v = target(theta, &grad);
    const double elbo = v + res.log_std.sum() + entropy_const;
    res.elbo_trace.push_back(elbo);
    if (!std::isfinite(elbo)) {
      if (++consecutive_bad >= 100) {
        res.message = "ELBO non-finite for 100 consecutive steps at iteration " +
                      std::to_string(it);
        return res;
      }
      continue;
    }
    consecutive_bad = 0;
    // AdaGrad ascent on (mean, log_std)
    const Eigen::VectorXd g_mu = grad;
    const Eigen::VectorXd g_om =
        grad.cwiseProduct(zeta).cwiseProduct(stds) + Eigen::VectorXd::Ones(dim);
    acc_mu += g_mu.cwiseProduct(g_mu);
    acc_om += g_om.cwiseProduct(g_om);
    res.mean += opts.learning_rate *
                g_mu.cwiseQuotient((acc_mu.array().sqrt() + 1e-8).matrix());
    res.log_std += opts.learning_rate *
                   g_om.cwiseQuotient((acc_om.array().sqrt() + 1e-8).matrix());
  }
  res.ok = true;
  return res;
}

PosteriorDraws nuts_sample(const GradTarget& target, const Eigen::VectorXd& init,
                           const NutsOptions& opts) {
  if (opts.chains < 1 || opts.draws < 1)
    throw std::invalid_argument("nuts_sample: chains and draws must be positive");
  const int dim = static_cast<int>(init.size());

  PosteriorDraws out;
  out.chain_count = opts.chains;
  out.tune = opts.tune;
  out.samples_per_chain = opts.draws;
  out.draws.resize(static_cast<long>(opts.chains) * opts.draws, dim);
  out.chain_stats.assign(static_cast<std::size_t>(opts.chains), ChainStats{});

  const int workers = std::max(1, std::min(opts.threads, opts.chains));
  if (workers == 1) {
    for (int c = 0; c < opts.chains; ++c)
      run_chain(c, target, init, opts, &out.draws,
                static_cast<long>(c) * opts.draws, &out.chain_stats[static_cast<std::size_t>(c)]);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        try {
          for (int c = w; c < opts.chains; c += workers)
            run_chain(c, target, init, opts, &out.draws,
                      static_cast<long>(c) * opts.draws,
                      &out.chain_stats[static_cast<std::size_t>(c)]);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  for (const auto& cs : out.chain_stats)
    if (cs.divergences > 0.25 * opts.draws) out.failed = true;
  out.diagnostics = compute_diagnostics(out.draws, opts.chains);
  return out;
}

Diagnostics compute_diagnostics(const Eigen::MatrixXd& draws, int chains) {
  Diagnostics d;
  const long total = draws.rows();
  const int dim = static_cast<int>(draws.cols());
  if (chains < 1 || total % chains != 0)
    throw std::invalid_argument("diagnostics: draws not divisible into chains");
  const long per = total / chains;
  d.rhat = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::quiet_NaN());
  d.ess = Eigen::VectorXd::Zero(dim);
  d.has_rhat = chains >= 2;

  // Split every chain in half; both R-hat and ESS use the split chains.
  const long half = per / 2;
  if (half < 2) return d;
  const int m = 2 * chains;

  for (int coord = 0; coord < dim; ++coord) {
    std::vector<Eigen::VectorXd> sub;
    sub.reserve(static_cast<std::size_t>(m));
    for (int c = 0; c < chains; ++c) {
      sub.push_back(draws.col(coord).segment(c * per, half));
      sub.push_back(draws.col(coord).segment(c * per + (per - half), half));
    }
    Eigen::VectorXd means(m), vars(m);
    for (int j = 0; j < m; ++j) {
      means[j] = sub[static_cast<std::size_t>(j)].mean();
      vars[j] = (sub[static_cast<std::size_t>(j)].array() - means[j]).square().sum() /
                static_cast<double>(half - 1);
    }
    const double w = vars.mean();
    const double mean_of_means = means.mean();
    const double b_over_n = (means.array() - mean_of_means).square().sum() /
                            static_cast<double>(m - 1);
    const double var_plus =
        (static_cast<double>(half - 1) / static_cast<double>(half)) * w + b_over_n;
    if (d.has_rhat) {
      // A between-chain term of exactly zero (duplicated chains) floors at 1.
      d.rhat[coord] = w > 0.0 ? std::max(1.0, std::sqrt(var_plus / w)) : 1.0;
    }

    if (!(var_plus > 0.0)) {
      d.ess[coord] = static_cast<double>(total);
      continue;
    }
    // Combined autocorrelations with Geyer's initial-monotone truncation.
    double tau = 1.0;
    double prev_pair = kInf;
    double rho_sum = 0.0;
    bool done = false;
    for (long t = 1; t + 1 < half && !done; t += 2) {
      double pair = 0.0;
      for (int lag_off = 0; lag_off < 2; ++lag_off) {
        const long lag = t + lag_off;
        double acov = 0.0;
        for (int j = 0; j < m; ++j) {
          const auto& x = sub[static_cast<std::size_t>(j)];
          double s = 0.0;
          for (long i = 0; i + lag < half; ++i)
            s += (x[i] - means[j]) * (x[i + lag] - means[j]);
          acov += s / static_cast<double>(half);
        }
        acov /= static_cast<double>(m);
        pair += 1.0 - (w - acov) / var_plus;
      }
      if (pair < 0.0) break;
      pair = std::min(pair, prev_pair);  // enforce monotone decrease
      prev_pair = pair;
      rho_sum += pair;
      if (t + 2 >= half) done = true;
    }
    tau = std::max(1e-12, -1.0 + 2.0 * (0.5 + rho_sum));
    // rho_0 = 1 contributes the leading 0.5 pair term above.
    double ess = static_cast<double>(m) * static_cast<double>(half) / tau;
    ess = std::min(ess, static_cast<double>(m) * static_cast<double>(half) *
                            std::log10(static_cast<double>(m * half)));
    d.ess[coord] = ess;
  }
  return d;
}

void leapfrog(const GradTarget& target, Eigen::VectorXd& theta, Eigen::VectorXd& p,
              const Eigen::VectorXd& inv_mass, double step_size, int steps) {
  Eigen::VectorXd grad(theta.size());
  target(theta, &grad);
  for (int s = 0; s < steps; ++s) {
    p.noalias() += 0.5 * step_size * grad;
    theta.noalias() += step_size * inv_mass.cwiseProduct(p);
    target(theta, &grad);
    p.noalias() += 0.5 * step_size * grad;
  }
}

double hamiltonian(const GradTarget& target, const Eigen::VectorXd& theta,
                   const Eigen::VectorXd& p, const Eigen::VectorXd& inv_mass) {
  const double logp = target(theta, nullptr);
  return -logp + 0.5 * (p.array().square() * inv_mass.array()).sum();
}

PredictionSummary predict_revenue(const PosteriorDraws& draws,
                                  const model::ParamPacker& packer,
                                  const model::Hyperparams& hyper,
                                  const Dataset& dataset,
                                  const retail::RetailEnvironmentSpec& env,
                                  const features::SalesScaler& scaler,
                                  const PredictOptions& opts) {
  const features::DesignMatrix design = features::build_design_matrix(dataset, env, scaler);
  std::vector<long> keep;
  for (long r = 0; r < design.rows(); ++r) {
    if (design.regions[static_cast<std::size_t>(r)] >= env.n_regions ||
        design.products[static_cast<std::size_t>(r)] >= env.n_products)
      throw std::invalid_argument("predict_revenue: unknown region/product index");
    if (!opts.from_date || design.dates[static_cast<std::size_t>(r)] >= *opts.from_date)
      keep.push_back(r);
  }

  const long total = draws.total_draws();
  const long used = std::min<long>(opts.thin_draws, total);
  if (used < 1) throw std::invalid_argument("predict_revenue: no posterior draws");

  RngStream rng = RngStream::derive(opts.seed, 0x9D1Cu);
  const auto xs_col = design.layout.prev_sales_offset();

  std::vector<std::vector<double>> row_samples(keep.size(),
                                               std::vector<double>(static_cast<std::size_t>(used)));
  std::map<std::int64_t, std::vector<double>> day_samples;
  std::map<std::int64_t, double> day_truth;
  for (std::size_t ri = 0; ri < keep.size(); ++ri) {
    const long r = keep[ri];
    const auto date = design.dates[static_cast<std::size_t>(r)];
    if (!day_samples.count(date.days))
      day_samples[date.days].assign(static_cast<std::size_t>(used), 0.0);
    day_truth[date.days] += design.y[r] * env.prices[design.products[static_cast<std::size_t>(r)]];
  }

  for (long s = 0; s < used; ++s) {
    const long draw_idx = s * total / used;
    const model::ModelParams params = packer.unpack(draws.draws.row(draw_idx).transpose());
    const model::PredictiveParams view =
        model::predictive_view(params, env.n_regions, env.n_products, hyper.hierarchical);
    for (std::size_t ri = 0; ri < keep.size(); ++ri) {
      const long r = keep[ri];
      const int region = design.regions[static_cast<std::size_t>(r)];
      const int product = design.products[static_cast<std::size_t>(r)];
      const int dow = design.dates[static_cast<std::size_t>(r)].day_of_week();
      const double mu =
          model::predictive_mu(view, dow, region, product, design.X(r, xs_col));
      const double q = math::sample_trunc_normal(mu, view.sigma_q, rng);
      const double rev = q * env.prices[product];
      row_samples[ri][static_cast<std::size_t>(s)] = rev;
      day_samples[design.dates[static_cast<std::size_t>(r)].days][static_cast<std::size_t>(s)] += rev;
    }
  }

  PredictionSummary out;
  out.rows.reserve(keep.size());
  for (std::size_t ri = 0; ri < keep.size(); ++ri) {
    const long r = keep[ri];
    auto& samples = row_samples[ri];
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(samples.size());
    std::sort(samples.begin(), samples.end());
    PredictionRow row;
    row.date = design.dates[static_cast<std::size_t>(r)];
    row.region = design.regions[static_cast<std::size_t>(r)];
    row.product = design.products[static_cast<std::size_t>(r)];
    row.truth = design.y[r] * env.prices[row.product];
    row.mean = mean;
    row.lo95 = quantile_sorted(samples, 0.025);
    row.hi95 = quantile_sorted(samples, 0.975);
    out.rows.push_back(row);
  }
  for (auto& [day, samples] : day_samples) {
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(samples.size());
    std::sort(samples.begin(), samples.end());
    PredictionDay pd;
    pd.date = Date{day};
    pd.truth = day_truth[day];
    pd.mean = mean;
    pd.lo95 = quantile_sorted(samples, 0.025);
    pd.hi95 = quantile_sorted(samples, 0.975);
    out.days.push_back(pd);
  }
  return out;
}

}  // namespace storesim::inference
