#include <algorithm>
#include <cmath>
#include <string>
#include <cstdlib>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "gevbev/evmap.hpp"

using namespace gevbev;

namespace {

std::vector<CenterPoint> random_centers(std::mt19937_64& rng, int n, double extent) {
  std::uniform_real_distribution<double> pos(-extent, extent), ev(0.0, 3.0), var(0.0, 1.0);
  std::vector<CenterPoint> out;
  for (int i = 0; i < n; ++i) {
    CenterPoint c;
    c.pos = {pos(rng), pos(rng)};
    c.o_cls = {ev(rng), i % 7 == 0 ? 0.0 : ev(rng)};
    c.o_var = {{{var(rng), var(rng)}, {var(rng), var(rng)}}};
    out.push_back(c);
  }
  return out;
}

// Sum over every center, written without the spatial index.
Evidence evidence_oracle(const std::vector<CenterPoint>& centers, Vec2 x, const MapParams& p) {
  Evidence ev;
  for (const CenterPoint& c : centers) {
    const double dx = x.x - c.pos.x, dy = x.y - c.pos.y;
    if (dx * dx + dy * dy >= p.nu * p.nu) continue;
    ev.observed = true;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      const double m = dx * dx / (c.o_var[k][0] + p.sigma0_sq) + dy * dy / (c.o_var[k][1] + p.sigma0_sq);
      ev.e[k] += c.o_cls[k] * std::exp(-0.5 * m);
    }
  }
  return ev;
}

}  // namespace

TEST_CASE("density weight") {
  CenterPoint c;
  c.o_var = {{{0.99, 0.09}, {0.0, 0.0}}};
  CHECK(mahalanobis_sq({1.0, 0.0}, c, 0, 0.01) == doctest::Approx(1.0));
  CHECK(density_weight({1.0, 0.0}, c, 0, 0.01) == doctest::Approx(std::exp(-0.5)));
  CHECK(density_weight({0.0, 0.1}, c, 0, 0.01) == doctest::Approx(std::exp(-0.05)));
  CHECK(density_weight({0.0, 0.0}, c, 1, 0.01) == 1.0);
}

TEST_CASE("Dirichlet from evidence") {
  const DirichletResult d = dirichlet_from_evidence({3.0, 1.0}, true);
  CHECK(d.strength == 6.0);
  CHECK(d.p_hat[kFg] == doctest::Approx(2.0 / 3.0));
  CHECK(d.u == doctest::Approx(1.0 / 3.0));
  const DirichletResult z = dirichlet_from_evidence({0.0, 0.0}, false);
  CHECK(z.u == 1.0);
  CHECK(z.p_hat[kFg] == 0.5);
}

TEST_CASE("neighbour search equals brute force, strict radius") {
  std::mt19937_64 rng(1);
  std::vector<CenterPoint> centers = random_centers(rng, 500, 20.0);
  CenterPoint edge;
  edge.pos = {2.0, 0.0};
  centers.push_back(edge);
  const EvidentialMap map(centers, Layer::road);
  std::uniform_real_distribution<double> q(-25.0, 25.0);
  for (int i = 0; i < 500; ++i) {
    const Vec2 x{q(rng), q(rng)};
    std::vector<std::size_t> want;
    for (std::size_t j = 0; j < centers.size(); ++j) {
      if ((centers[j].pos - x).squared_norm() < 4.0) want.push_back(j);
    }
    CHECK(map.neighbors(x) == want);
  }
  const std::vector<std::size_t> at_origin = map.neighbors({0.0, 0.0});
  CHECK(std::find(at_origin.begin(), at_origin.end(), centers.size() - 1) == at_origin.end());
}

TEST_CASE("evidence and rasterization match the oracle") {
  std::mt19937_64 rng(2);
  const std::vector<CenterPoint> centers = random_centers(rng, 300, 8.0);
  const MapParams params{2.0, 0.01};
  const EvidentialMap map(centers, Layer::object, params);
  const GridSpec grid{-10.0, -10.0, 0.4, 50, 50};
  const BevGrid r = rasterize(map, grid);
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    const Evidence want = evidence_oracle(centers, grid.cell_center(i), params);
    CHECK(r.e_fg[i] == doctest::Approx(want.e[kFg]).epsilon(1e-12));
    CHECK(r.e_bg[i] == doctest::Approx(want.e[kBg]).epsilon(1e-12));
    CHECK(static_cast<bool>(r.observed[i]) == want.observed);
    const DirichletResult d = r.cell(i);
    if (!want.observed) CHECK(d.u == 1.0);
  }
  setenv("GEVBEV_THREADS", "3", 1);
  const BevGrid r3 = rasterize(map, grid);
  setenv("GEVBEV_THREADS", "1", 1);
  CHECK(r3.e_fg == r.e_fg);
  CHECK(r3.observed == r.observed);
}

TEST_CASE("map construction checks") {
  CenterPoint bad;
  bad.o_cls = {-1.0, 0.0};
  CHECK_THROWS_AS(EvidentialMap({bad}, Layer::road), std::invalid_argument);
  CenterPoint ok;
  const EvidentialMap map({ok}, Layer::road);
  CHECK_THROWS(map.with_centers({}));
  CHECK_THROWS(EvidentialMap({ok}, Layer::road, MapParams{0.0, 0.01}));
  CHECK(parse_layer("object") == Layer::object);
  CHECK(std::string(layer_name(Layer::road)) == "road");
  CHECK_THROWS(parse_layer("lanes"));
}

TEST_CASE("coordinate expansion") {
  CenterPoint c;
  c.o_cls = {1.0, 2.0};
  c.o_var = {{{0.3, 0.3}, {0.1, 0.1}}};
  const EvidentialMap one({c}, Layer::object);
  const EvidentialMap e = expand_centers(one, 1.2, 0.4);
  // Lattice points with i^2 + j^2 <= 9, the origin excluded.
  CHECK(e.size() == 1u + 28u);
  for (std::size_t i = 1; i < e.size(); ++i) {
    const CenterPoint& x = e.centers()[i];
    const double r2 = x.pos.squared_norm();
    CHECK(r2 <= 1.44 + 1e-9);
    CHECK(x.o_cls[0] == doctest::Approx(std::exp(-r2 / 0.02)));
    CHECK(x.o_cls[1] == doctest::Approx(2.0 * std::exp(-r2 / 0.02)));
    CHECK(x.o_var[0][0] == 0.3);
  }
  // Overlapping discs do not stack centers closer than half a step.
  CenterPoint d = c;
  d.pos = {0.4, 0.0};
  const EvidentialMap two = expand_centers(EvidentialMap({c, d}, Layer::object), 1.2, 0.4);
  for (std::size_t i = 0; i < two.size(); ++i) {
    for (std::size_t j = i + 1; j < two.size(); ++j) {
      CHECK((two.centers()[i].pos - two.centers()[j].pos).squared_norm() >= 0.04 - 1e-12);
    }
  }
  CHECK(expand_centers(one, 0.0, 0.4).size() == 1u);
  CHECK_THROWS(expand_centers(one, 1.0, 0.0));
}

TEST_CASE("centers from a cloud") {
  const PointCloud cloud{make_point(0.1, 0.1, -2.0, 0.2, PointLabel::road),
                         make_point(0.3, 0.3, -2.0, 0.2, PointLabel::road),
                         make_point(5.1, 0.1, -1.0, 0.6, PointLabel::vehicle),
                         make_point(9.0, 9.0, -1.8, kFreeSpaceIntensity, PointLabel::other)};
  const EvidentialMap road = build_from_cloud(cloud, Layer::road, {});
  CHECK(road.size() == 3u);
  CHECK(road.centers()[0].pos.x == doctest::Approx(0.2));
  const EvidentialMap obj = build_from_cloud(cloud, Layer::object, {});
  CHECK(obj.size() == 2u);
  CenterInit labelled;
  labelled.mode = CenterInit::Mode::per_label;
  labelled.label_evidence = 2.0;
  const EvidentialMap lab = build_from_cloud(cloud, Layer::object, labelled);
  CHECK(lab.centers()[0].o_cls[kBg] == 2.0);
  CHECK(lab.centers()[1].o_cls[kFg] == 2.0);
  const PointCloud only_free{make_point(1, 1, -2, kFreeSpaceIntensity, PointLabel::road)};
  CHECK_THROWS_AS(build_from_cloud(only_free, Layer::object, {}), std::runtime_error);
}
