#pragma once

#include <cstdint>
#include <map>
#include <utility>

#include <boost/rational.hpp>

#include "flexnet/model.hpp"

namespace flexnet {

using Rational = boost::rational<std::int64_t>;

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

/// Per-edge convex weights: for every server u the weights over its
/// compatible dispatchers sum to one. Keys are (dispatcher index, server
/// index); missing keys are zero.
struct WeightFunction {
  std::map<std::pair<std::size_t, std::size_t>, Rational> weights;

  Rational at(std::size_t d, std::size_t u) const;
};

/// Server average of the smallest degree among each server's dispatchers.
Rational alpha(const BipartiteGraph& graph);

/// Average dispatcher degree.
Rational beta(const BipartiteGraph& graph);

/// Throws ModelError when a weight sits off the edge set, is outside [0, 1],
/// or a server's weights do not sum to one.
void validate_weights(const BipartiteGraph& graph, const WeightFunction& theta);

/// Weighted generalization of alpha; always >= alpha(graph).
Rational theta_metric(const BipartiteGraph& graph, const WeightFunction& theta);

/// Weights supported on each server's minimum-degree dispatchers, uniform
/// over ties. theta_metric of the result equals alpha.
WeightFunction min_weight(const BipartiteGraph& graph);

}  // namespace flexnet
