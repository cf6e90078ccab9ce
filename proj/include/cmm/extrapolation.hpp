#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <stdexcept>
#include <vector>

#include "cmm/hermite.hpp"

namespace cmm {

/// Lagrange basis weights for the polynomial through `times`, evaluated at t.
inline std::vector<double> lagrange_weights(std::span<const double> times, double t) {
  const std::size_t n = times.size();
  if (n == 0) throw std::invalid_argument("lagrange_weights: no nodes");
  std::vector<double> w(n, 1.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b) w[a] *= (t - times[b]) / (times[a] - times[b]);
  return w;
}

/// Ring buffer of the most recent `order` snapshots with strictly increasing
/// times. Evaluation in time is the Lagrange polynomial through all stored
/// snapshots, so a partially filled buffer extrapolates at lower order.
template <class Field>
class SnapshotHistory {
 public:
  explicit SnapshotHistory(std::size_t order = 3) : order_(order) {
    if (order_ == 0) throw std::invalid_argument("extrapolation order must be >= 1");
  }

  std::size_t order() const { return order_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  void clear() { items_.clear(); }

  void push(double t, Field f) {
    if (!items_.empty() && !(t > items_.back().time))
      throw std::invalid_argument("snapshot times must be strictly increasing");
    items_.push_back({t, std::move(f)});
    while (items_.size() > order_) items_.pop_front();
  }

  void pop_newest() {
    if (!items_.empty()) items_.pop_back();
  }

  double newest_time() const {
    if (items_.empty()) throw std::logic_error("empty history");
    return items_.back().time;
  }

  std::vector<double> times() const {
    std::vector<double> t;
    for (const auto& it : items_) t.push_back(it.time);
    return t;
  }

  const Field& field(std::size_t k) const { return items_.at(k).field; }
  double time(std::size_t k) const { return items_.at(k).time; }

  /// Combined field at time t (exact where t is a stored time).
  Field at(double t) const {
    if (items_.empty()) throw std::logic_error("extrapolation from empty history");
    const auto ts = times();
    const auto w = lagrange_weights(ts, t);
    std::vector<const Field*> ptrs;
    for (const auto& it : items_) ptrs.push_back(&it.field);
    return linear_combination<Field>(ptrs, w);
  }

 private:
  struct Item {
    double time;
    Field field;
  };
  std::size_t order_;
  std::deque<Item> items_;
};

using VelocityHistory = SnapshotHistory<VectorHermite>;
using SourceHistory = SnapshotHistory<HermiteField>;

}  // namespace cmm
