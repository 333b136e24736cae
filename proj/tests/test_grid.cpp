#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wulffflow/grid.hpp"
#include "wulffflow/harmonics.hpp"

#include <cmath>

using namespace wulffflow;

namespace {

ScalarField sample(const SphereGrid<2>& g, const std::function<double(const AmbientVec<2>&)>& f) {
  ScalarField out(g.node_count());
  for (int i = 0; i < g.node_count(); ++i) out[i] = f(g.direction(i));
  return out;
}

}  // namespace

TEST_CASE("circle grid: weights, quadrature, derivatives") {
  SphereGrid<1> g(8);
  CHECK(g.weight(0) == doctest::Approx(M_PI / 4.0).epsilon(1e-15));
  CHECK(g.surface_measure() == doctest::Approx(2.0 * M_PI));

  SphereGrid<1> f(64);
  ScalarField one(f.node_count(), 1.0);
  CHECK(f.integrate(one) == doctest::Approx(2.0 * M_PI).epsilon(1e-14));

  // Trig polynomials: spectral-exact quadrature, 4th-order stencils.
  ScalarField c2(f.node_count());
  for (int i = 0; i < f.node_count(); ++i) {
    const auto& d = f.direction(i);
    c2[i] = d[0] * d[0];  // cos^2 = (1 + cos 2t)/2
  }
  CHECK(f.integrate(c2) == doctest::Approx(M_PI).epsilon(1e-14));
  FieldDerivs dv;
  f.compute_derivs(c2, dv);
  for (int i = 0; i < f.node_count(); ++i) {
    const double t = f.angular_spacing() * i;
    CHECK(dv.g1[i] == doctest::Approx(-std::sin(2.0 * t)).scale(1).epsilon(1e-4));
    CHECK(dv.h11[i] == doctest::Approx(-2.0 * std::cos(2.0 * t)).scale(1).epsilon(2e-4));
  }
  CHECK_THROWS_AS(SphereGrid<1>(4), ConfigError);
}

TEST_CASE("sphere grid: exact total weight and basic quadrature") {
  for (int nt : {16, 32}) {
    SphereGrid<2> g(nt);
    double total = 0.0;
    for (int i = 0; i < g.node_count(); ++i) total += g.weight(i);
    CHECK(std::abs(total - 4.0 * M_PI) < 1e-12);
    CHECK(g.weight(g.north_index()) == 0.0);

    auto one = sample(g, [](const AmbientVec<2>&) { return 1.0; });
    CHECK(std::abs(g.integrate(one) - 4.0 * M_PI) < 1e-12);

    // Polynomial moments are quadrature-exact: <x,e3>^2 and <x,e1>^2
    // integrate to 4 pi / 3, odd moments vanish.
    auto z2 = sample(g, [](const AmbientVec<2>& x) { return x[2] * x[2]; });
    CHECK(g.integrate(z2) == doctest::Approx(4.0 * M_PI / 3.0).epsilon(1e-13));
    auto x2 = sample(g, [](const AmbientVec<2>& x) { return x[0] * x[0]; });
    CHECK(g.integrate(x2) == doctest::Approx(4.0 * M_PI / 3.0).epsilon(1e-13));
    auto z = sample(g, [](const AmbientVec<2>& x) { return x[2]; });
    CHECK(std::abs(g.integrate(z)) < 1e-12);
  }
  CHECK_THROWS_AS(SphereGrid<2>(8), ConfigError);
}

TEST_CASE("sphere grid: harmonics integrate to zero, squares to one") {
  SphereGrid<2> g(24);
  for (HarmonicTerm t : {HarmonicTerm{2, 0, 1.0}, HarmonicTerm{3, 2, 1.0}}) {
    auto y = sample(g, [&](const AmbientVec<2>& x) { return eval_harmonic<2>(t, x); });
    CHECK(std::abs(g.integrate(y)) < 1e-13);
    auto y2 = sample(g, [&](const AmbientVec<2>& x) {
      const double v = eval_harmonic<2>(t, x);
      return v * v;
    });
    CHECK(g.integrate(y2) == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("linear restrictions are Hessian eigenfields") {
  // f = <x, c> on the sphere has grad f = c - f x and Hess f = -f g.
  const AmbientVec<2> c(0.4, -0.7, 0.55);
  SphereGrid<2> g(64);
  auto f = sample(g, [&](const AmbientVec<2>& x) { return c.dot(x); });
  FieldDerivs d;
  g.compute_derivs(f, d);
  double eg = 0.0, eh = 0.0;
  for (int i = 0; i < g.regular_count(); ++i) {
    const AmbientVec<2> x = g.direction(i);
    const FrameMat<2> t = g.frame(i);
    const AmbientVec<2> grad_exact = c - f[i] * x;
    eg = std::max(eg, std::abs(d.g1[i] - t.col(0).dot(grad_exact)));
    eg = std::max(eg, std::abs(d.g2[i] - t.col(1).dot(grad_exact)));
    eh = std::max(eh, std::abs(d.h11[i] + f[i]));
    eh = std::max(eh, std::abs(d.h12[i]));
    eh = std::max(eh, std::abs(d.h22[i] + f[i]));
  }
  CHECK(eg < 1e-6);
  CHECK(eh < 5e-4);
}

TEST_CASE("degree-2 harmonic is a Laplacian eigenfield") {
  SphereGrid<2> g(64);
  auto f = sample(g, [](const AmbientVec<2>& x) { return eval_harmonic<2>({2, 0, 1.0}, x); });
  FieldDerivs d;
  g.compute_derivs(f, d);
  double err = 0.0;
  for (int i = 0; i < g.regular_count(); ++i)
    err = std::max(err, std::abs(d.h11[i] + d.h22[i] + 6.0 * f[i]));
  CHECK(err < 1e-5);
}

TEST_CASE("covariant Hessian converges at better than third order") {
  auto field = [](const AmbientVec<2>& x) {
    return std::exp(0.3 * x[0] + 0.2 * x[1] - 0.4 * x[2]);
  };
  auto hess_error = [&](int nt) {
    SphereGrid<2> g(nt);
    auto f = sample(g, field);
    FieldDerivs d;
    g.compute_derivs(f, d);
    // Oracle: Hess f = (grad_amb f tangential part products ...) is messy;
    // instead use the identity Lap f = trace and compare against a much
    // finer grid through the smooth closed form of the ambient extension.
    // Simpler and sufficient: Richardson against analytic Laplacian of the
    // degree-0-extended field, computed symbolically below.
    double e = 0.0;
    const AmbientVec<2> a(0.3, 0.2, -0.4);
    for (int i = 0; i < g.regular_count(); ++i) {
      const AmbientVec<2> x = g.direction(i);
      const double fx = f[i];
      const AmbientVec<2> gt = a - a.dot(x) * x;  // tangential gradient / f
      // Lap (e^{a.x}) on S^2: f (|a_t|^2 - 2 a.x) with a_t tangential part.
      const double lap = fx * (gt.squaredNorm() - 2.0 * a.dot(x));
      e = std::max(e, std::abs(d.h11[i] + d.h22[i] - lap));
    }
    return e;
  };
  const double e24 = hess_error(24);
  const double e48 = hess_error(48);
  CHECK(e48 < 1e-4);
  CHECK(e24 / e48 > 6.0);  // order ~3 near the poles, 4 elsewhere
}

TEST_CASE("integration by parts") {
  SphereGrid<2> g(64);
  auto f = sample(g, [](const AmbientVec<2>& x) { return x[0] * x[2]; });
  auto w = sample(g, [](const AmbientVec<2>& x) { return std::cos(x[1] + 0.3 * x[0]); });
  FieldDerivs df, dw;
  g.compute_derivs(f, df);
  g.compute_derivs(w, dw);
  ScalarField lhs(g.node_count(), 0.0), rhs(g.node_count(), 0.0);
  for (int i = 0; i < g.regular_count(); ++i) {
    lhs[i] = w[i] * (df.h11[i] + df.h22[i]);
    rhs[i] = -(df.g1[i] * dw.g1[i] + df.g2[i] * dw.g2[i]);
  }
  CHECK(g.integrate(lhs) == doctest::Approx(g.integrate(rhs)).scale(1).epsilon(5e-4));
}

TEST_CASE("pole closure sets the adjacent row mean") {
  SphereGrid<2> g(32);
  auto f = sample(g, [](const AmbientVec<2>& x) { return x[2]; });
  f[g.north_index()] = f[g.south_index()] = 0.0;
  g.apply_pole_closure(f);
  const double ct = std::cos(0.5 * g.angular_spacing());
  CHECK(f[g.north_index()] == doctest::Approx(ct).epsilon(1e-12));
  CHECK(f[g.south_index()] == doctest::Approx(-ct).epsilon(1e-12));
}

TEST_CASE("longitude filter: projection, low modes kept, high modes cut near poles") {
  SphereGrid<2> g(32);
  CHECK(g.row_mmax(0) == 2);  // floor: m = 2 always survives
  CHECK(g.row_filtered(0));
  CHECK(g.row_mmax(g.n_theta() / 2) > 20);  // near-equator rows keep most modes

  // An m <= 2 field passes through bitwise-near unchanged.
  auto low = sample(g, [](const AmbientVec<2>& x) {
    return 1.0 + x[0] + (x[0] * x[0] - x[1] * x[1]);
  });
  ScalarField low2 = low;
  g.apply_longitude_filter(low2);
  double dmax = 0.0;
  for (int i = 0; i < g.regular_count(); ++i) dmax = std::max(dmax, std::abs(low2[i] - low[i]));
  CHECK(dmax < 1e-13);

  // An m=6 field is annihilated on rows with row_mmax < 6, untouched at the
  // equator, and the filter is idempotent.
  ScalarField high(g.node_count(), 0.0);
  for (int j = 0; j < g.n_theta(); ++j)
    for (int k = 0; k < g.n_phi(); ++k)
      high[j * g.n_phi() + k] = std::cos(6.0 * k * 2.0 * M_PI / g.n_phi());
  ScalarField once = high;
  g.apply_longitude_filter(once);
  ScalarField twice = once;
  g.apply_longitude_filter(twice);
  for (int j = 0; j < g.n_theta(); ++j) {
    for (int k = 0; k < g.n_phi(); ++k) {
      const int i = j * g.n_phi() + k;
      if (g.row_mmax(j) < 6) {
        CHECK(std::abs(once[i]) < 1e-13);
      } else {
        CHECK(once[i] == doctest::Approx(high[i]).scale(1).epsilon(1e-13));
      }
      CHECK(twice[i] == doctest::Approx(once[i]).scale(1).epsilon(1e-13));
    }
  }
}

TEST_CASE("node stiffness bounds the discrete symbol") {
  SphereGrid<2> g(32);
  // The fastest kept phi mode at the pole row must be reflected in the
  // stiffness: pole rows are stiffer than the equator row.
  const double pole = g.node_stiffness(0);
  const double equator = g.node_stiffness((g.n_theta() / 2) * g.n_phi());
  CHECK(pole > equator);
  const double ht = g.angular_spacing();
  CHECK(pole >= 16.0 / (3.0 * ht * ht));
}
