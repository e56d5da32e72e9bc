#include "storesim/model.hpp"

#include <cmath>
#include <stdexcept>

#include "storesim/ad.hpp"

namespace storesim::model {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// double-path twins of the ad::Var primitives, so the generic code below
// reads identically under both scalar types.
inline double square(double x) { return x * x; }
inline double log_ndtr(double x) { return math::log_ndtr(x); }

struct DoubleReader {
  const double* p;
  double next() { return *p++; }
  double constant(double v) const { return v; }
};

struct VarReader {
  ad::Tape* tape;
  const double* p;
  std::vector<ad::Var>* inputs;
  ad::Var next() {
    ad::Var v = tape->input(*p++);
    inputs->push_back(v);
    return v;
  }
  ad::Var constant(double v) const { return tape->input(v); }
};

// theta -> constrained parameters, accumulating the transform log-Jacobian.
// Layout: w_t(7) w_r(n) [w_r_cell(n*k)] w_p(k) log_w_s b log_sigma_q
//         mu_t(7) corr_t_z(21) log_std_t(7) mu_p(k) corr_p_z log_std_p(k)
//         log_mu_s log_sigma_s
template <typename T, typename Reader>
ModelParamsT<T> constrain_impl(Reader& r, int n, int k, bool hier, T& logjac) {
  using std::exp;
  using std::log1p;
  using std::sqrt;
  using std::tanh;

  auto vec = [&](int len) {
    std::vector<T> v;
    v.reserve(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) v.push_back(r.next());
    return v;
  };
  auto pos_scalar = [&]() {
    T t = r.next();
    logjac = logjac + t;
    return exp(t);
  };
  auto pos_vec = [&](int len) {
    std::vector<T> v;
    v.reserve(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) v.push_back(pos_scalar());
    return v;
  };
  // Unit-row lower-triangular Cholesky factor of a correlation matrix from
  // K(K-1)/2 unconstrained coordinates via tanh partial correlations.
  auto corr_chol = [&](int K) {
    std::vector<std::vector<T>> L(static_cast<std::size_t>(K));
    L[0].push_back(r.constant(1.0));
    for (int i = 1; i < K; ++i) {
      L[static_cast<std::size_t>(i)].reserve(static_cast<std::size_t>(i + 1));
      T sum_sqs = r.constant(0.0);
      for (int j = 0; j < i; ++j) {
        T z = tanh(r.next());
        logjac = logjac + log1p(-square(z));
        if (j > 0) logjac = logjac + 0.5 * log1p(-sum_sqs);
        T x = z * sqrt(1.0 - sum_sqs);
        L[static_cast<std::size_t>(i)].push_back(x);
        sum_sqs = sum_sqs + square(x);
      }
      L[static_cast<std::size_t>(i)].push_back(sqrt(1.0 - sum_sqs));
    }
    return L;
  };

  ModelParamsT<T> p;
  p.w_t = vec(7);
  p.w_r = vec(n);
  if (hier) {
    p.w_r_cell.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p.w_r_cell[static_cast<std::size_t>(i)] = vec(k);
  }
  p.w_p = vec(k);
  p.w_s = pos_scalar();
  p.b = r.next();
  p.sigma_q = pos_scalar();
  p.mu_t = vec(7);
  p.temp_corr_chol = corr_chol(7);
  p.temp_stds = pos_vec(7);
  p.mu_p = vec(k);
  p.prod_corr_chol = corr_chol(k);
  p.prod_stds = pos_vec(k);
  p.mu_s = pos_scalar();
  p.sigma_s = pos_scalar();
  return p;
}

template <typename T>
T normal_lp(const T& x, double mean, double sd) {
  return -0.5 * square((x - mean) / sd) - std::log(sd) - 0.5 * math::kLog2Pi;
}

// Independent normals with shared variance `var` (an isotropic MVN).
template <typename T>
T mvn_iso_lp(const std::vector<T>& x, const Eigen::VectorXd& mean, double var, const T& zero) {
  T acc = zero;
  for (std::size_t i = 0; i < x.size(); ++i) acc = acc + square(x[i] - mean[static_cast<long>(i)]);
  const double kdim = static_cast<double>(x.size());
  return -0.5 / var * acc - 0.5 * kdim * (std::log(var) + math::kLog2Pi);
}

// MVN whose covariance is (diag(stds) * Lc)(diag(stds) * Lc)'.
template <typename T>
T mvn_chol_lp(const std::vector<T>& x, const std::vector<T>& mu,
              const std::vector<std::vector<T>>& Lc, const std::vector<T>& stds,
              const T& zero) {
  using std::log;
  const std::size_t K = x.size();
  std::vector<T> a;
  a.reserve(K);
  T quad = zero, logdet = zero;
  for (std::size_t i = 0; i < K; ++i) {
    T resid = x[i] - mu[i];
    T partial = zero;
    for (std::size_t j = 0; j < i; ++j)
      partial = partial + stds[i] * Lc[i][j] * a[j];
    T ai = (resid - partial) / (stds[i] * Lc[i][i]);
    a.push_back(ai);
    quad = quad + square(ai);
    logdet = logdet + log(stds[i]) + log(Lc[i][i]);
  }
  return -0.5 * quad - logdet - 0.5 * static_cast<double>(K) * math::kLog2Pi;
}

template <typename T>
T half_cauchy_lp(const T& x, double scale) {
  using std::log1p;
  return std::log(2.0 / M_PI) - std::log(scale) - log1p(square(x / scale));
}

template <typename T>
T trunc_normal_lp(const T& q, const T& mu, const T& sigma) {
  using std::log;
  return -0.5 * square((q - mu) / sigma) - log(sigma) - 0.5 * math::kLog2Pi -
         log_ndtr(mu / sigma);
}

template <typename T>
T inv_gamma_lp(const T& x, double shape, double scale) {
  using std::log;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * log(x) -
         scale / x;
}

// LKJ density over the Cholesky factor, up to the (eta, K)-only constant:
// sum over rows i >= 1 of (K - i + 2 eta - 3) log L[i][i], 0-indexed.
template <typename T>
T lkj_chol_lp(const std::vector<std::vector<T>>& L, double eta, const T& zero) {
  using std::log;
  const int K = static_cast<int>(L.size());
  T acc = zero;
  for (int i = 1; i < K; ++i) {
    const double coef = static_cast<double>(K - i) + 2.0 * eta - 3.0;
    acc = acc + coef * log(L[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)]);
  }
  return acc;
}

template <typename T>
T log_prior_impl(const ModelParamsT<T>& p, const Hyperparams& h, const T& zero) {
  T lp = zero;
  lp = lp + mvn_iso_lp(p.w_r, h.mu_r, h.gamma_r, zero);
  if (h.hierarchical) {
    const double sd = std::sqrt(h.gamma_r);
    for (std::size_t i = 0; i < p.w_r_cell.size(); ++i)
      for (const T& cell : p.w_r_cell[i]) {
        T z = (cell - p.w_r[i]) / sd;
        lp = lp + (-0.5 * square(z) - std::log(sd) - 0.5 * math::kLog2Pi);
      }
  }
  lp = lp + mvn_chol_lp(p.w_p, p.mu_p, p.prod_corr_chol, p.prod_stds, zero);
  lp = lp + mvn_iso_lp(p.mu_p, h.delta_p, h.gamma_p, zero);
  lp = lp + lkj_chol_lp(p.prod_corr_chol, h.lkj_eta, zero);
  for (const T& s : p.prod_stds) lp = lp + half_cauchy_lp(s, h.sigma_p);
  lp = lp + mvn_chol_lp(p.w_t, p.mu_t, p.temp_corr_chol, p.temp_stds, zero);
  lp = lp + mvn_iso_lp(p.mu_t, h.delta_t, h.gamma_t, zero);
  lp = lp + lkj_chol_lp(p.temp_corr_chol, h.lkj_eta, zero);
  for (const T& s : p.temp_stds) lp = lp + half_cauchy_lp(s, h.sigma_t);
  lp = lp + trunc_normal_lp(p.w_s, p.mu_s, p.sigma_s);
  lp = lp + half_cauchy_lp(p.mu_s, h.phi_s);
  lp = lp + half_cauchy_lp(p.sigma_s, h.psi_s);
  lp = lp + inv_gamma_lp(p.sigma_q, h.alpha_q, h.beta_q);
  lp = lp + normal_lp(p.b, 0.0, h.b_scale);
  return lp;
}

template <typename T>
ModelParamsT<double> values_of(const ModelParamsT<T>& p);

template <>
ModelParamsT<double> values_of(const ModelParamsT<ad::Var>& p) {
  ModelParamsT<double> d;
  auto vals = [](const std::vector<ad::Var>& v) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) out.push_back(x.val());
    return out;
  };
  d.w_t = vals(p.w_t);
  d.w_r = vals(p.w_r);
  for (const auto& row : p.w_r_cell) d.w_r_cell.push_back(vals(row));
  d.w_p = vals(p.w_p);
  d.w_s = p.w_s.val();
  d.b = p.b.val();
  d.sigma_q = p.sigma_q.val();
  d.mu_t = vals(p.mu_t);
  for (const auto& row : p.temp_corr_chol) d.temp_corr_chol.push_back(vals(row));
  d.temp_stds = vals(p.temp_stds);
  d.mu_p = vals(p.mu_p);
  for (const auto& row : p.prod_corr_chol) d.prod_corr_chol.push_back(vals(row));
  d.prod_stds = vals(p.prod_stds);
  d.mu_s = p.mu_s.val();
  d.sigma_s = p.sigma_s.val();
  return d;
}

bool params_finite(const ModelParamsT<double>& p) {
  auto ok = [](const std::vector<double>& v) {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  if (!ok(p.w_t) || !ok(p.w_r) || !ok(p.w_p) || !ok(p.mu_t) || !ok(p.mu_p) ||
      !ok(p.temp_stds) || !ok(p.prod_stds))
    return false;
  for (const auto& row : p.w_r_cell)
    if (!ok(row)) return false;
  for (const auto& row : p.temp_corr_chol)
    if (!ok(row)) return false;
  for (const auto& row : p.prod_corr_chol)
    if (!ok(row)) return false;
  return std::isfinite(p.w_s) && std::isfinite(p.b) && std::isfinite(p.sigma_q) &&
         std::isfinite(p.mu_s) && std::isfinite(p.sigma_s) && p.sigma_q > 0.0 &&
         p.mu_s > 0.0 && p.sigma_s > 0.0 && p.w_s >= 0.0;
}

// Per-row truncated-normal log-likelihood with analytic derivatives.
struct LikelihoodEval {
  double value = 0.0;
  Eigen::VectorXd grad_w;    // d/d [w_t | w_r | w_p | w_s]
  double grad_b = 0.0;
  double grad_sigma = 0.0;
  Eigen::MatrixXd grad_cell; // n x k, hierarchical only
  bool finite = true;
};

LikelihoodEval likelihood_eval(const ModelParamsT<double>& p, const Hyperparams& h,
                               const features::DesignMatrix& d, bool with_grad) {
  const auto& lay = d.layout;
  const int n = lay.n_regions, k = lay.n_products;
  LikelihoodEval out;
  if (with_grad) {
    out.grad_w = Eigen::VectorXd::Zero(lay.dim());
    if (h.hierarchical) out.grad_cell = Eigen::MatrixXd::Zero(n, k);
  }
  if (d.rows() == 0) return out;

  const double sigma = p.sigma_q;
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    out.finite = false;
    return out;
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(lay.dim());
  for (int i = 0; i < 7; ++i) w[lay.day_offset() + i] = p.w_t[static_cast<std::size_t>(i)];
  if (!h.hierarchical)
    for (int i = 0; i < n; ++i) w[lay.region_offset() + i] = p.w_r[static_cast<std::size_t>(i)];
  for (int j = 0; j < k; ++j) w[lay.product_offset() + j] = p.w_p[static_cast<std::size_t>(j)];
  w[lay.prev_sales_offset()] = p.w_s;

  Eigen::VectorXd mu = d.X * w;
  mu.array() += p.b;
  if (h.hierarchical) {
    for (long r = 0; r < d.rows(); ++r)
      mu[r] += p.w_r_cell[static_cast<std::size_t>(d.regions[static_cast<std::size_t>(r)])]
                         [static_cast<std::size_t>(d.products[static_cast<std::size_t>(r)])];
  }

  const double log_sigma = std::log(sigma);
  double ll = 0.0, grad_b = 0.0, grad_sigma = 0.0;
  Eigen::VectorXd v;
  if (with_grad) v.resize(d.rows());
  for (long r = 0; r < d.rows(); ++r) {
    const double z = (d.y[r] - mu[r]) / sigma;
    const double alpha = mu[r] / sigma;
    ll += -0.5 * z * z - log_sigma - 0.5 * math::kLog2Pi - math::log_ndtr(alpha);
    if (with_grad) {
      const double hz = math::ndtr_logpdf_ratio(alpha);
      const double dmu = (z - hz) / sigma;
      v[r] = dmu;
      grad_b += dmu;
      grad_sigma += (z * z - 1.0 + alpha * hz) / sigma;
    }
  }
  if (!std::isfinite(ll)) {
    out.finite = false;
    return out;
  }
  out.value = ll;
  if (with_grad) {
    out.grad_w.noalias() = d.X.transpose() * v;
    out.grad_b = grad_b;
    out.grad_sigma = grad_sigma;
    if (h.hierarchical) {
      out.grad_w.segment(lay.region_offset(), n).setZero();
      for (long r = 0; r < d.rows(); ++r)
        out.grad_cell(d.regions[static_cast<std::size_t>(r)],
                      d.products[static_cast<std::size_t>(r)]) += v[r];
    }
  }
  return out;
}

// Lower-triangular Cholesky of an LKJ(eta)-distributed correlation matrix
// via the onion method.
std::vector<std::vector<double>> onion_corr_chol(int K, double eta, RngStream& rng) {
  std::vector<std::vector<double>> L(static_cast<std::size_t>(K));
  L[0].push_back(1.0);
  if (K == 1) return L;
  double beta = eta + 0.5 * (K - 2.0);
  {
    const double r = 2.0 * rng.beta(beta, beta) - 1.0;
    L[1] = {r, std::sqrt(1.0 - r * r)};
  }
  for (int m = 2; m < K; ++m) {
    beta -= 0.5;
    const double y = rng.beta(0.5 * m, beta);
    // uniform direction on the (m-1)-sphere
    Eigen::VectorXd u(m);
    for (int i = 0; i < m; ++i) u[i] = rng.normal();
    u /= u.norm();
    auto& row = L[static_cast<std::size_t>(m)];
    row.resize(static_cast<std::size_t>(m) + 1);
    const double s = std::sqrt(y);
    for (int i = 0; i < m; ++i) row[static_cast<std::size_t>(i)] = s * u[i];
    row[static_cast<std::size_t>(m)] = std::sqrt(1.0 - y);
  }
  return L;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

Hyperparams Hyperparams::defaults(int n_regions, int n_products) {
  Hyperparams h;
  h.mu_r = Eigen::VectorXd::Zero(n_regions);
  h.delta_p = Eigen::VectorXd::Constant(n_products, 2.5);
  h.delta_t = Eigen::VectorXd(7);
  h.delta_t << 5, 5, 5, 5, 10, 15, 0;
  return h;
}

void Hyperparams::validate(int n_regions, int n_products) const {
  if (mu_r.size() != n_regions) throw std::invalid_argument("mu_r size mismatch");
  if (delta_p.size() != n_products) throw std::invalid_argument("delta_p size mismatch");
  if (delta_t.size() != 7) throw std::invalid_argument("delta_t must have 7 entries");
  for (double s : {gamma_r, gamma_p, sigma_p, gamma_t, sigma_t, phi_s, psi_s,
                   alpha_q, beta_q, b_scale, lkj_eta})
    if (!(s > 0.0)) throw std::invalid_argument("hyperparameter scales must be positive");
}

ParamPacker::ParamPacker(int n_regions, int n_products, bool hierarchical)
    : n_(n_regions), k_(n_products), hier_(hierarchical) {
  auto push_vec = [&](const std::string& base, int len) {
    for (int i = 0; i < len; ++i) names_.push_back(base + "[" + std::to_string(i) + "]");
  };
  auto push_corr = [&](const std::string& base, int K) {
    for (int m = 0; m < K * (K - 1) / 2; ++m)
      names_.push_back(base + "[" + std::to_string(m) + "]");
  };
  push_vec("w_t", 7);
  push_vec("w_r", n_);
  if (hier_)
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < k_; ++j)
        names_.push_back("w_r_cell[" + std::to_string(i) + "," + std::to_string(j) + "]");
  push_vec("w_p", k_);
  names_.push_back("log_w_s");
  names_.push_back("b");
  names_.push_back("log_sigma_q");
  push_vec("mu_t", 7);
  push_corr("corr_t_z", 7);
  push_vec("log_std_t", 7);
  push_vec("mu_p", k_);
  push_corr("corr_p_z", k_);
  push_vec("log_std_p", k_);
  names_.push_back("log_mu_s");
  names_.push_back("log_sigma_s");
  dim_ = static_cast<int>(names_.size());
}

ModelParams ParamPacker::unpack(const Eigen::VectorXd& theta, double* log_jacobian) const {
  if (theta.size() != dim_) throw std::invalid_argument("unpack: wrong dimension");
  DoubleReader reader{theta.data()};
  double jac = 0.0;
  ModelParams p;
  static_cast<ModelParamsT<double>&>(p) =
      constrain_impl<double>(reader, n_, k_, hier_, jac);
  p.unconstrained_cache = theta;
  if (log_jacobian) *log_jacobian += jac;
  return p;
}

Eigen::VectorXd ParamPacker::pack(const ModelParams& p) const {
  if (p.unconstrained_cache && p.unconstrained_cache->size() == dim_)
    return *p.unconstrained_cache;
  Eigen::VectorXd theta(dim_);
  long at = 0;
  auto put_vec = [&](const std::vector<double>& v) {
    for (double x : v) theta[at++] = x;
  };
  auto put_log = [&](double x) { theta[at++] = std::log(x); };
  auto put_corr = [&](const std::vector<std::vector<double>>& L) {
    const int K = static_cast<int>(L.size());
    for (int i = 1; i < K; ++i) {
      double sum_sqs = 0.0;
      for (int j = 0; j < i; ++j) {
        const double x = L[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        const double cpc = x / std::sqrt(1.0 - sum_sqs);
        theta[at++] = std::atanh(cpc);
        sum_sqs += x * x;
      }
    }
  };
  put_vec(p.w_t);
  put_vec(p.w_r);
  if (hier_)
    for (const auto& row : p.w_r_cell) put_vec(row);
  put_vec(p.w_p);
  put_log(p.w_s);
  theta[at++] = p.b;
  put_log(p.sigma_q);
  put_vec(p.mu_t);
  put_corr(p.temp_corr_chol);
  for (double s : p.temp_stds) put_log(s);
  put_vec(p.mu_p);
  put_corr(p.prod_corr_chol);
  for (double s : p.prod_stds) put_log(s);
  put_log(p.mu_s);
  put_log(p.sigma_s);
  if (at != dim_) throw std::logic_error("pack: layout mismatch");
  return theta;
}

double log_prior(const ModelParams& p, const Hyperparams& h) {
  if (!params_finite(p)) return kNegInf;
  for (const auto& L : {p.temp_corr_chol, p.prod_corr_chol}) {
    for (std::size_t i = 0; i < L.size(); ++i) {
      if (L[i].size() != i + 1) return kNegInf;
      if (!(L[i][i] > 0.0)) return kNegInf;
    }
  }
  for (double s : p.temp_stds)
    if (!(s > 0.0)) return kNegInf;
  for (double s : p.prod_stds)
    if (!(s > 0.0)) return kNegInf;
  const double zero = 0.0;
  return log_prior_impl<double>(p, h, zero);
}

double log_likelihood(const ModelParams& p, const Hyperparams& h,
                      const features::DesignMatrix& d) {
  const LikelihoodEval e = likelihood_eval(p, h, d, /*with_grad=*/false);
  return e.finite ? e.value : kNegInf;
}

ModelParams sample_prior(const Hyperparams& h, int n, int k, RngStream& rng) {
  ModelParams p;
  // temporal block
  p.mu_t.resize(7);
  for (int i = 0; i < 7; ++i)
    p.mu_t[static_cast<std::size_t>(i)] = h.delta_t[i] + std::sqrt(h.gamma_t) * rng.normal();
  p.temp_corr_chol = onion_corr_chol(7, h.lkj_eta, rng);
  p.temp_stds.resize(7);
  for (auto& s : p.temp_stds) s = rng.half_cauchy(h.sigma_t);
  {
    Eigen::VectorXd zeta(7);
    for (int i = 0; i < 7; ++i) zeta[i] = rng.normal();
    p.w_t.resize(7);
    for (int i = 0; i < 7; ++i) {
      double acc = p.mu_t[static_cast<std::size_t>(i)];
      for (int j = 0; j <= i; ++j)
        acc += p.temp_stds[static_cast<std::size_t>(i)] *
               p.temp_corr_chol[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
               zeta[j];
      p.w_t[static_cast<std::size_t>(i)] = acc;
    }
  }
  // region block
  p.w_r.resize(static_cast<std::size_t>(n));
  for (auto& w : p.w_r) w = 0.0;
  for (int i = 0; i < n; ++i)
    p.w_r[static_cast<std::size_t>(i)] = h.mu_r[i] + std::sqrt(h.gamma_r) * rng.normal();
  if (h.hierarchical) {
    p.w_r_cell.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      auto& row = p.w_r_cell[static_cast<std::size_t>(i)];
      row.resize(static_cast<std::size_t>(k));
      for (int j = 0; j < k; ++j)
        row[static_cast<std::size_t>(j)] =
            p.w_r[static_cast<std::size_t>(i)] + std::sqrt(h.gamma_r) * rng.normal();
    }
  }
  // product block
  p.mu_p.resize(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j)
    p.mu_p[static_cast<std::size_t>(j)] = h.delta_p[j] + std::sqrt(h.gamma_p) * rng.normal();
  p.prod_corr_chol = onion_corr_chol(k, h.lkj_eta, rng);
  p.prod_stds.resize(static_cast<std::size_t>(k));
  for (auto& s : p.prod_stds) s = rng.half_cauchy(h.sigma_p);
  {
    Eigen::VectorXd zeta(k);
    for (int j = 0; j < k; ++j) zeta[j] = rng.normal();
    p.w_p.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      double acc = p.mu_p[static_cast<std::size_t>(i)];
      for (int j = 0; j <= i; ++j)
        acc += p.prod_stds[static_cast<std::size_t>(i)] *
               p.prod_corr_chol[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
               zeta[j];
      p.w_p[static_cast<std::size_t>(i)] = acc;
    }
  }
  // autoregressive block, noise scale, bias
  p.mu_s = rng.half_cauchy(h.phi_s);
  p.sigma_s = rng.half_cauchy(h.psi_s);
  p.w_s = math::sample_trunc_normal(p.mu_s, p.sigma_s, rng);
  p.sigma_q = h.beta_q / rng.gamma(h.alpha_q);
  p.b = h.b_scale * rng.normal();
  return p;
}

Eigen::VectorXd assemble_weights(const ModelParams& p) {
  const long n = static_cast<long>(p.w_r.size());
  const long k = static_cast<long>(p.w_p.size());
  Eigen::VectorXd w(7 + n + k + 1);
  for (long i = 0; i < 7; ++i) w[i] = p.w_t[static_cast<std::size_t>(i)];
  for (long i = 0; i < n; ++i) w[7 + i] = p.w_r[static_cast<std::size_t>(i)];
  for (long j = 0; j < k; ++j) w[7 + n + j] = p.w_p[static_cast<std::size_t>(j)];
  w[7 + n + k] = p.w_s;
  return w;
}

double predictive_quantity(const ModelParams& p, const Eigen::VectorXd& feature,
                           RngStream& rng) {
  const Eigen::VectorXd w = assemble_weights(p);
  if (feature.size() != w.size())
    throw std::invalid_argument("predictive_quantity: feature dimension mismatch");
  return math::sample_trunc_normal(w.dot(feature) + p.b, p.sigma_q, rng);
}

PredictiveParams predictive_view(const ModelParams& p, int n, int k, bool hierarchical) {
  PredictiveParams v;
  v.w_t = Eigen::Map<const Eigen::VectorXd>(p.w_t.data(), 7);
  v.w_p = Eigen::Map<const Eigen::VectorXd>(p.w_p.data(), k);
  v.w_region.resize(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j)
      v.w_region(i, j) = hierarchical
                             ? p.w_r_cell[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                             : p.w_r[static_cast<std::size_t>(i)];
  v.w_s = p.w_s;
  v.b = p.b;
  v.sigma_q = p.sigma_q;
  return v;
}

LogPosterior::LogPosterior(Hyperparams hyper, features::DesignMatrix design)
    : hyper_(std::move(hyper)),
      design_(std::move(design)),
      packer_(design_.layout.n_regions, design_.layout.n_products, hyper_.hierarchical) {
  hyper_.validate(design_.layout.n_regions, design_.layout.n_products);
}

double LogPosterior::value(const Eigen::VectorXd& theta) const {
  double jac = 0.0;
  const ModelParams p = packer_.unpack(theta, &jac);
  if (!params_finite(p) || !std::isfinite(jac)) return kNegInf;
  const double prior = log_prior(p, hyper_);
  const double like = log_likelihood(p, hyper_, design_);
  const double total = prior + like + jac;
  return std::isfinite(total) ? total : kNegInf;
}

double LogPosterior::value_and_grad(const Eigen::VectorXd& theta,
                                    Eigen::VectorXd& grad) const {
  grad = Eigen::VectorXd::Zero(packer_.dim());
  if (theta.size() != packer_.dim())
    throw std::invalid_argument("value_and_grad: wrong dimension");

  thread_local ad::Tape tape;
  thread_local std::vector<ad::Var> inputs;
  tape.clear();
  inputs.clear();
  inputs.reserve(static_cast<std::size_t>(packer_.dim()));

  VarReader reader{&tape, theta.data(), &inputs};
  ad::Var logjac = tape.input(0.0);
  ModelParamsT<ad::Var> p = constrain_impl<ad::Var>(
      reader, packer_.n_regions(), packer_.n_products(), packer_.hierarchical(), logjac);

  const ModelParamsT<double> pd = values_of(p);
  if (!params_finite(pd) || !std::isfinite(logjac.val())) return kNegInf;

  const LikelihoodEval like = likelihood_eval(pd, hyper_, design_, /*with_grad=*/true);
  if (!like.finite) return kNegInf;

  ad::Var zero = tape.input(0.0);
  ad::Var prior = log_prior_impl<ad::Var>(p, hyper_, zero);
  const double total = prior.val() + logjac.val() + like.value;
  if (!std::isfinite(total)) return kNegInf;

  const auto& lay = design_.layout;
  for (int i = 0; i < 7; ++i) tape.seed(p.w_t[static_cast<std::size_t>(i)], like.grad_w[lay.day_offset() + i]);
  if (!hyper_.hierarchical) {
    for (int i = 0; i < packer_.n_regions(); ++i)
      tape.seed(p.w_r[static_cast<std::size_t>(i)], like.grad_w[lay.region_offset() + i]);
  } else {
    for (int i = 0; i < packer_.n_regions(); ++i)
      for (int j = 0; j < packer_.n_products(); ++j)
        tape.seed(p.w_r_cell[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                  like.grad_cell(i, j));
  }
  for (int j = 0; j < packer_.n_products(); ++j)
    tape.seed(p.w_p[static_cast<std::size_t>(j)], like.grad_w[lay.product_offset() + j]);
  tape.seed(p.w_s, like.grad_w[lay.prev_sales_offset()]);
  tape.seed(p.b, like.grad_b);
  tape.seed(p.sigma_q, like.grad_sigma);

  ad::Var root = prior + logjac;
  tape.backward(root);
  for (int i = 0; i < packer_.dim(); ++i)
    grad[i] = tape.adjoint(inputs[static_cast<std::size_t>(i)]);
  if (!grad.allFinite()) {
    grad.setZero();
    return kNegInf;
  }
  return total;
}

std::vector<std::pair<std::string, double>> weight_coordinates(const ModelParams& p) {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < p.w_t.size(); ++i)
    out.emplace_back("w_t[" + std::to_string(i) + "]", p.w_t[i]);
  for (std::size_t i = 0; i < p.w_r.size(); ++i)
    out.emplace_back("w_r[" + std::to_string(i) + "]", p.w_r[i]);
  for (std::size_t j = 0; j < p.w_p.size(); ++j)
    out.emplace_back("w_p[" + std::to_string(j) + "]", p.w_p[j]);
  out.emplace_back("w_s", p.w_s);
  out.emplace_back("b", p.b);
  return out;
}

}  // namespace storesim::model
