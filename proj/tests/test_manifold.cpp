#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "chernoff_heat/manifold.hpp"

using namespace chernoff_heat;
using std::numbers::pi;

namespace {

using Vec3 = std::array<double, 3>;

Vec3 point3(const EmbeddedManifold& m, double a, double b) {
  const auto p = m.embed({a, b});
  return {p.ambient()[0], p.ambient()[1], p.ambient()[2]};
}

Vec3 sub(Vec3 a, Vec3 b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double dot(Vec3 a, Vec3 b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 cross(Vec3 a, Vec3 b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
Vec3 scale(Vec3 a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }

// Gauss curvature from the first and second fundamental forms of the
// embedding, derivatives by central differences. Scalar curvature is 2K.
double fd_scalar_curvature(const EmbeddedManifold& m, double th, double ph) {
  const double h = 1e-4;
  auto X = [&](double a, double b) { return point3(m, a, b); };
  const Vec3 xu = scale(sub(X(th + h, ph), X(th - h, ph)), 1.0 / (2 * h));
  const Vec3 xv = scale(sub(X(th, ph + h), X(th, ph - h)), 1.0 / (2 * h));
  const Vec3 c = X(th, ph);
  auto second = [&](Vec3 p, Vec3 q) { return scale(sub(sub(p, c), sub(c, q)), 1.0 / (h * h)); };
  const Vec3 xuu = second(X(th + h, ph), X(th - h, ph));
  const Vec3 xvv = second(X(th, ph + h), X(th, ph - h));
  const Vec3 xuv = scale(sub(sub(X(th + h, ph + h), X(th + h, ph - h)), sub(X(th - h, ph + h), X(th - h, ph - h))),
                         1.0 / (4 * h * h));
  Vec3 n = cross(xu, xv);
  n = scale(n, 1.0 / std::sqrt(dot(n, n)));
  const double E = dot(xu, xu), F = dot(xu, xv), G = dot(xv, xv);
  const double L = dot(xuu, n), M = dot(xuv, n), N = dot(xvv, n);
  return 2.0 * (L * N - M * M) / (E * G - F * F);
}

// Fourth-difference stencils in normal coordinates, Richardson-extrapolated.
double fd_biharmonic_1d(const std::function<double(double)>& f) {
  auto d4 = [&](double h) { return (f(2 * h) - 4 * f(h) + 6 * f(0) - 4 * f(-h) + f(-2 * h)) / std::pow(h, 4); };
  const double h = 0.04;
  return (4 * d4(h / 2) - d4(h)) / 3.0;
}

double fd_biharmonic_2d(const std::function<double(double, double)>& f) {
  auto bilap = [&](double h) {
    auto d4x = (f(2 * h, 0) - 4 * f(h, 0) + 6 * f(0, 0) - 4 * f(-h, 0) + f(-2 * h, 0));
    auto d4y = (f(0, 2 * h) - 4 * f(0, h) + 6 * f(0, 0) - 4 * f(0, -h) + f(0, -2 * h));
    double mixed = 0.0;
    const double w[3] = {1, -2, 1};
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j) mixed += w[i + 1] * w[j + 1] * f(i * h, j * h);
    return (d4x + d4y + 2 * mixed) / std::pow(h, 4);
  };
  const double h = 0.04;
  return (4 * bilap(h / 2) - bilap(h)) / 3.0;
}

}  // namespace

TEST(Embedding, NamedPoints) {
  const auto c = EmbeddedManifold::circle();
  auto p = c.embed({0.0});
  EXPECT_DOUBLE_EQ(p.ambient()[0], 1.0);
  EXPECT_DOUBLE_EQ(p.ambient()[1], 0.0);

  const auto s = EmbeddedManifold::sphere();
  p = s.embed({pi / 2, 0.0});
  EXPECT_NEAR(p.ambient()[0], 1.0, 1e-15);
  EXPECT_NEAR(p.ambient()[1], 0.0, 1e-15);
  EXPECT_NEAR(p.ambient()[2], 0.0, 1e-15);

  const auto t = EmbeddedManifold::torus(1.0, 1.0);
  p = t.embed({0.0, 0.0});
  const std::vector<double> want{1, 0, 1, 0};
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(p.ambient()[i], want[i]);
}

TEST(Embedding, PeriodicCoordinatesWrap) {
  const auto c = EmbeddedManifold::circle(2.0);
  const auto a = c.embed({0.3});
  const auto b = c.embed({0.3 + 2 * pi});
  EXPECT_NEAR(a.params()[0], b.params()[0], 1e-14);
  EXPECT_NEAR(c.chordal_distance(a, b), 0.0, 1e-14);
  const auto neg = c.embed({-0.5});
  EXPECT_GE(neg.params()[0], 0.0);
  EXPECT_LT(neg.params()[0], 2 * pi);
}

TEST(Embedding, RejectsBadInput) {
  const auto s = EmbeddedManifold::sphere();
  EXPECT_THROW(s.embed({4.0, 0.0}), InvalidArgument);
  EXPECT_THROW(s.embed({-0.1, 0.0}), InvalidArgument);
  EXPECT_THROW(s.embed({std::nan(""), 0.0}), InvalidArgument);
  EXPECT_THROW(s.embed({0.1}), InvalidArgument);
  const auto c = EmbeddedManifold::circle();
  EXPECT_THROW(c.embed({std::numeric_limits<double>::infinity()}), InvalidArgument);
  EXPECT_THROW(EmbeddedManifold::circle(-1.0), InvalidArgument);
  EXPECT_THROW(EmbeddedManifold::torus(1.0, 0.0), InvalidArgument);
}

TEST(Embedding, ForeignPointsRejected) {
  const auto c1 = EmbeddedManifold::circle(1.0);
  const auto c2 = EmbeddedManifold::circle(2.0);
  const auto a = c1.embed({0.0});
  const auto b = c2.embed({0.0});
  EXPECT_FALSE(c1.owns(b));
  EXPECT_THROW(c1.geodesic_distance(a, b), InvalidArgument);
  EXPECT_THROW(c1.chordal_distance(a, b), InvalidArgument);
  EXPECT_THROW(c1.scalar_curvature(b), InvalidArgument);
}

TEST(Embedding, FromName) {
  const std::vector<double> r{2.0, 0.5};
  EXPECT_EQ(EmbeddedManifold::from_name("torus", r), EmbeddedManifold::torus(2.0, 0.5));
  EXPECT_EQ(EmbeddedManifold::from_name("sphere"), EmbeddedManifold::sphere(1.0));
  EXPECT_THROW(EmbeddedManifold::from_name("klein"), InvalidArgument);
  EXPECT_THROW(EmbeddedManifold::from_name("circle", r), InvalidArgument);
}

TEST(Distance, NamedValues) {
  const auto c = EmbeddedManifold::circle();
  const auto a = c.embed({0.0});
  const auto b = c.embed({pi});
  EXPECT_NEAR(c.geodesic_distance(a, b), pi, 1e-15);
  EXPECT_NEAR(c.chordal_distance(a, b), 2.0, 1e-15);
  EXPECT_EQ(c.chordal_distance(a, a), 0.0);

  const auto s = EmbeddedManifold::sphere();
  const auto n = s.embed({0.0, 0.0});
  const auto south = s.embed({pi, 0.0});
  EXPECT_NEAR(s.geodesic_distance(n, south), pi, 1e-15);
  const auto eq = s.embed({pi / 2, 1.0});
  EXPECT_NEAR(s.geodesic_distance(n, eq), pi / 2, 1e-15);
  EXPECT_NEAR(s.chordal_distance(n, eq), std::sqrt(2.0), 1e-15);
}

TEST(Distance, CircleWrapsTheShortWay) {
  const auto c = EmbeddedManifold::circle(3.0);
  const auto a = c.embed({0.1});
  const auto b = c.embed({2 * pi - 0.1});
  EXPECT_NEAR(c.geodesic_distance(a, b), 3.0 * 0.2, 1e-14);
}

TEST(Distance, TorusMatchesLatticeBruteForce) {
  for (auto [r1, r2] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.7}}) {
    const auto t = EmbeddedManifold::torus(r1, r2);
    const std::vector<std::array<double, 4>> cases{{0, 0, pi, pi}, {0.2, 6.0, 5.9, 0.4}, {1.0, 2.0, 4.5, 3.0}};
    for (const auto& c : cases) {
      const auto x = t.embed({c[0], c[1]});
      const auto y = t.embed({c[2], c[3]});
      double best = std::numeric_limits<double>::infinity();
      for (int k1 = -3; k1 <= 3; ++k1)
        for (int k2 = -3; k2 <= 3; ++k2)
          best = std::min(best, std::hypot(r1 * (c[2] - c[0] + 2 * pi * k1), r2 * (c[3] - c[1] + 2 * pi * k2)));
      EXPECT_NEAR(t.geodesic_distance(x, y), best, 1e-13);
    }
  }
  const auto t = EmbeddedManifold::torus(1.0, 1.0);
  EXPECT_NEAR(t.geodesic_distance(t.embed({0.0, 0.0}), t.embed({pi, pi})), pi * std::sqrt(2.0), 1e-14);
}

TEST(Distance, SphereMatchesArcLength) {
  // Length of the projected chord, a great-circle arc, by fine polyline.
  const auto s = EmbeddedManifold::sphere(1.5);
  const std::vector<std::array<double, 4>> cases{{0.3, 0.2, 2.8, 4.0}, {1.0, 0.0, 1.1, 0.05}, {0.01, 0.0, 3.1, 3.0}};
  for (const auto& c : cases) {
    const auto x = s.embed({c[0], c[1]});
    const auto y = s.embed({c[2], c[3]});
    const Vec3 a{x.ambient()[0], x.ambient()[1], x.ambient()[2]};
    const Vec3 b{y.ambient()[0], y.ambient()[1], y.ambient()[2]};
    auto length = [&](int segments) {
      double total = 0.0;
      Vec3 prev = a;
      for (int i = 1; i <= segments; ++i) {
        const double u = static_cast<double>(i) / segments;
        Vec3 q{(1 - u) * a[0] + u * b[0], (1 - u) * a[1] + u * b[1], (1 - u) * a[2] + u * b[2]};
        q = scale(q, 1.5 / std::sqrt(dot(q, q)));
        const Vec3 d = sub(q, prev);
        total += std::sqrt(dot(d, d));
        prev = q;
      }
      return total;
    };
    const double arc = (4 * length(1 << 15) - length(1 << 14)) / 3.0;
    EXPECT_NEAR(s.geodesic_distance(x, y), arc, 1e-8);
  }
}

TEST(Distance, ChordalNeverExceedsGeodesic) {
  const auto s = EmbeddedManifold::sphere(0.8);
  for (int i = 0; i < 50; ++i) {
    const auto x = s.embed({0.06 * i, 0.3 * i});
    const auto y = s.embed({3.0 - 0.05 * i, 0.7 * i});
    EXPECT_LE(s.chordal_distance(x, y), s.geodesic_distance(x, y) + 1e-15);
  }
}

TEST(Curvature, SphereMatchesGaussEquation) {
  for (double r : {1.0, 2.5}) {
    const auto s = EmbeddedManifold::sphere(r);
    for (auto [th, ph] : {std::pair{0.7, 0.3}, std::pair{2.0, 4.0}}) {
      const double fd = fd_scalar_curvature(s, th, ph);
      EXPECT_NEAR(fd, 2.0 / (r * r), 1e-5);
      EXPECT_DOUBLE_EQ(s.scalar_curvature(s.embed({th, ph})), 2.0 / (r * r));
    }
  }
  const auto c = EmbeddedManifold::circle();
  EXPECT_EQ(c.scalar_curvature(c.embed({1.0})), 0.0);
  const auto t = EmbeddedManifold::torus(1.0, 1.0);
  EXPECT_EQ(t.scalar_curvature(t.embed({1.0, 2.0})), 0.0);
}

TEST(Biharmonic, CircleMatchesNormalCoordinateStencil) {
  for (double r : {1.0, 0.5, 3.0}) {
    const auto c = EmbeddedManifold::circle(r);
    const auto x = c.embed({0.4});
    const double fd = fd_biharmonic_1d([&](double s) {
      const auto y = c.embed({0.4 + s / r});
      const double d = c.chordal_distance(x, y);
      return d * d;
    });
    EXPECT_NEAR(c.chordal_biharmonic(x), fd, 1e-6 / (r * r));
    EXPECT_NEAR(c.chordal_biharmonic(x), -2.0 / (r * r), 1e-14);
  }
}

TEST(Biharmonic, SphereMatchesNormalCoordinateStencil) {
  for (double r : {1.0, 2.0}) {
    const auto s = EmbeddedManifold::sphere(r);
    const auto x = s.embed({0.0, 0.0});
    // exp map at the north pole: polar angle |v|/r in the direction of v
    const double fd = fd_biharmonic_2d([&](double v1, double v2) {
      const double rho = std::hypot(v1, v2);
      const auto y = s.embed({rho / r, rho > 0 ? std::atan2(v2, v1) : 0.0});
      const double d = s.chordal_distance(x, y);
      return d * d;
    });
    EXPECT_NEAR(s.chordal_biharmonic(x), fd, 1e-5 / (r * r));
    EXPECT_NEAR(s.chordal_biharmonic(s.embed({1.2, 2.0})), -16.0 / (3.0 * r * r), 1e-13);
  }
}

TEST(Biharmonic, TorusIsSumOfFactors) {
  const auto t = EmbeddedManifold::torus(1.5, 0.6);
  const auto x = t.embed({0.2, 0.9});
  const double fd = fd_biharmonic_2d([&](double v1, double v2) {
    const auto y = t.embed({0.2 + v1 / 1.5, 0.9 + v2 / 0.6});
    const double d = t.chordal_distance(x, y);
    return d * d;
  });
  const double sum = EmbeddedManifold::circle(1.5).chordal_biharmonic(EmbeddedManifold::circle(1.5).embed({0.0})) +
                     EmbeddedManifold::circle(0.6).chordal_biharmonic(EmbeddedManifold::circle(0.6).embed({0.0}));
  EXPECT_NEAR(t.chordal_biharmonic(x), fd, 1e-5);
  EXPECT_NEAR(t.chordal_biharmonic(x), sum, 1e-14);
}

TEST(Volume, TotalVolume) {
  EXPECT_NEAR(EmbeddedManifold::circle(2.0).total_volume(), 4 * pi, 1e-14);
  EXPECT_NEAR(EmbeddedManifold::sphere(2.0).total_volume(), 16 * pi, 1e-13);
  EXPECT_NEAR(EmbeddedManifold::torus(1.0, 2.0).total_volume(), 8 * pi * pi, 1e-13);
}
