#pragma once

#include <array>
#include <vector>

#include "cbem/errors.hpp"

namespace cbem {

/// Symmetric Gauss rule on the reference triangle. Points are barycentric,
/// weights sum to 1, so a physical integral is  A * sum_i w_i f(x_i).
struct QuadratureRule {
  std::vector<std::array<double, 3>> points;  // barycentric (b0, b1, b2)
  std::vector<double> weights;
  int degree = 0;  // exact for total polynomial degree <= degree

  std::size_t size() const { return points.size(); }
};

/// Rules for 1, 3, 6 and 12 points (degrees 1, 2, 4, 6).
inline const QuadratureRule& triangle_rule(int npoints) {
  static const QuadratureRule r1 = {
      {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}},
      {1.0},
      1};

  auto perm3 = [](std::vector<std::array<double, 3>>& pts, double a) {
    double b = 1.0 - 2.0 * a;
    pts.push_back({b, a, a});
    pts.push_back({a, b, a});
    pts.push_back({a, a, b});
  };

  static const QuadratureRule r3 = [&] {
    QuadratureRule r;
    perm3(r.points, 1.0 / 6.0);
    r.weights.assign(3, 1.0 / 3.0);
    r.degree = 2;
    return r;
  }();

  static const QuadratureRule r6 = [&] {
    QuadratureRule r;
    perm3(r.points, 0.445948490915965);
    perm3(r.points, 0.091576213509771);
    r.weights.assign(3, 0.223381589678011);
    r.weights.insert(r.weights.end(), 3, 0.109951743655322);
    r.degree = 4;
    return r;
  }();

  static const QuadratureRule r12 = [&] {
    QuadratureRule r;
    perm3(r.points, 0.249286745170910);
    perm3(r.points, 0.063089014491502);
    // six permutations of an asymmetric point
    const double a = 0.310352451033785;
    const double b = 0.636502499121399;
    const double c = 0.053145049844816;
    r.points.push_back({a, b, c});
    r.points.push_back({b, c, a});
    r.points.push_back({c, a, b});
    r.points.push_back({a, c, b});
    r.points.push_back({c, b, a});
    r.points.push_back({b, a, c});
    r.weights.assign(3, 0.116786275726379);
    r.weights.insert(r.weights.end(), 3, 0.050844906370207);
    r.weights.insert(r.weights.end(), 6, 0.082851075618374);
    r.degree = 6;
    return r;
  }();

  switch (npoints) {
    case 1: return r1;
    case 3: return r3;
    case 6: return r6;
    case 12: return r12;
    default:
      throw InvalidParam("triangle_rule: unsupported point count " +
                         std::to_string(npoints));
  }
}

}  // namespace cbem
