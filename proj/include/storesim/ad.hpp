#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

#include "storesim/stats.hpp"

// Minimal reverse-mode tape. Nodes hold at most two parents with precomputed
// local partials, so one backward sweep per evaluation suffices. The tape is
// rebuilt on every evaluation; for the densities recorded here that is a few
// thousand nodes and costs microseconds.
namespace storesim::ad {

class Tape;

class Var {
 public:
  Var() = default;
  double val() const { return val_; }

 private:
  friend class Tape;
  friend Var make_node(Tape* t, double v, int p0, double d0, int p1, double d1);
  Var(Tape* t, int idx, double v) : tape_(t), idx_(idx), val_(v) {}

  Tape* tape_ = nullptr;
  int idx_ = -1;
  double val_ = 0.0;

  friend Var operator+(const Var&, const Var&);
  friend Var operator+(const Var&, double);
  friend Var operator-(const Var&, const Var&);
  friend Var operator-(const Var&, double);
  friend Var operator-(double, const Var&);
  friend Var operator-(const Var&);
  friend Var operator*(const Var&, const Var&);
  friend Var operator*(const Var&, double);
  friend Var operator/(const Var&, const Var&);
  friend Var operator/(const Var&, double);
  friend Var operator/(double, const Var&);
  friend Var log(const Var&);
  friend Var log1p(const Var&);
  friend Var exp(const Var&);
  friend Var sqrt(const Var&);
  friend Var tanh(const Var&);
  friend Var square(const Var&);
  friend Var log_ndtr(const Var&);
};

class Tape {
 public:
  Var input(double v) { return emit(v, -1, 0.0, -1, 0.0); }

  // Accumulate an externally computed adjoint (e.g. the likelihood gradient
  // with respect to a constrained parameter node).
  void seed(const Var& v, double adj) {
    touch(v.idx_);
    seeds_[static_cast<std::size_t>(v.idx_)] += adj;
  }

  // Reverse sweep from `root` (seeded with 1) plus any accumulated seeds.
  void backward(const Var& root) {
    touch(root.idx_);
    seeds_[static_cast<std::size_t>(root.idx_)] += 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      const double a = seeds_[static_cast<std::size_t>(i)];
      if (a == 0.0) continue;
      const Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.p0 >= 0) seeds_[static_cast<std::size_t>(n.p0)] += a * n.d0;
      if (n.p1 >= 0) seeds_[static_cast<std::size_t>(n.p1)] += a * n.d1;
    }
  }

  double adjoint(const Var& v) const {
    return seeds_[static_cast<std::size_t>(v.idx_)];
  }

  void clear() {
    nodes_.clear();
    seeds_.clear();
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  friend Var make_node(Tape* t, double v, int p0, double d0, int p1, double d1);

  struct Node {
    int p0, p1;
    double d0, d1;
  };

  Var emit(double v, int p0, double d0, int p1, double d1) {
    nodes_.push_back({p0, p1, d0, d1});
    seeds_.push_back(0.0);
    return Var(this, static_cast<int>(nodes_.size()) - 1, v);
  }

  void touch(int idx) {
    assert(idx >= 0 && static_cast<std::size_t>(idx) < nodes_.size());
  }

  std::vector<Node> nodes_;
  std::vector<double> seeds_;
};

inline Var make_node(Tape* t, double v, int p0, double d0, int p1, double d1) {
  return t->emit(v, p0, d0, p1, d1);
}

inline Var operator+(const Var& a, const Var& b) {
  return make_node(a.tape_, a.val_ + b.val_, a.idx_, 1.0, b.idx_, 1.0);
}
inline Var operator+(const Var& a, double c) {
  return make_node(a.tape_, a.val_ + c, a.idx_, 1.0, -1, 0.0);
}
inline Var operator+(double c, const Var& a) { return a + c; }

inline Var operator-(const Var& a, const Var& b) {
  return make_node(a.tape_, a.val_ - b.val_, a.idx_, 1.0, b.idx_, -1.0);
}
inline Var operator-(const Var& a, double c) { return a + (-c); }
inline Var operator-(double c, const Var& a) {
  return make_node(a.tape_, c - a.val_, a.idx_, -1.0, -1, 0.0);
}
inline Var operator-(const Var& a) { return 0.0 - a; }

inline Var operator*(const Var& a, const Var& b) {
  return make_node(a.tape_, a.val_ * b.val_, a.idx_, b.val_, b.idx_, a.val_);
}
inline Var operator*(const Var& a, double c) {
  return make_node(a.tape_, a.val_ * c, a.idx_, c, -1, 0.0);
}
inline Var operator*(double c, const Var& a) { return a * c; }

inline Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.val_;
  return make_node(a.tape_, a.val_ * inv, a.idx_, inv, b.idx_,
                   -a.val_ * inv * inv);
}
inline Var operator/(const Var& a, double c) { return a * (1.0 / c); }
inline Var operator/(double c, const Var& a) {
  const double inv = 1.0 / a.val_;
  return make_node(a.tape_, c * inv, a.idx_, -c * inv * inv, -1, 0.0);
}

inline Var log(const Var& a) {
  return make_node(a.tape_, std::log(a.val_), a.idx_, 1.0 / a.val_, -1, 0.0);
}
inline Var log1p(const Var& a) {
  return make_node(a.tape_, std::log1p(a.val_), a.idx_, 1.0 / (1.0 + a.val_),
                   -1, 0.0);
}
inline Var exp(const Var& a) {
  const double e = std::exp(a.val_);
  return make_node(a.tape_, e, a.idx_, e, -1, 0.0);
}
inline Var sqrt(const Var& a) {
  const double s = std::sqrt(a.val_);
  return make_node(a.tape_, s, a.idx_, 0.5 / s, -1, 0.0);
}
inline Var tanh(const Var& a) {
  const double t = std::tanh(a.val_);
  return make_node(a.tape_, t, a.idx_, 1.0 - t * t, -1, 0.0);
}
inline Var square(const Var& a) {
  return make_node(a.tape_, a.val_ * a.val_, a.idx_, 2.0 * a.val_, -1, 0.0);
}
inline Var log_ndtr(const Var& a) {
  return make_node(a.tape_, math::log_ndtr(a.val_), a.idx_,
                   math::ndtr_logpdf_ratio(a.val_), -1, 0.0);
}

}  // namespace storesim::ad
