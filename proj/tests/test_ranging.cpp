// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#include "upsim/ranging.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

#include "support/generators.hpp"
#include "support/grid_oracle.hpp"
#include "upsim/errors.hpp"
#include "upsim/rng.hpp"

using namespace upsim;
using namespace upsim::ranging;
using geom::vec2;
using geom::vec3;
using timebase::Instant;
using testsupport::grid_search_2d;
using testsupport::random_vec;

namespace {

RangeObservation obs_at(geom::Vec pos, double bound) {
  RangeObservation o;
  o.station_pos = std::move(pos);
  o.bound_m = bound;
  return o;
}

std::vector<RangeObservation> exact_instance(std::span<const geom::Vec> stations,
                                             const geom::Vec& truth) {
  std::vector<RangeObservation> obs;
  for (const auto& s : stations) obs.push_back(obs_at(s, (truth - s).norm()));
  return obs;
}

const std::vector<geom::Vec> kRefStations = {vec2(0, 0), vec2(4, 0), vec2(0, 4)};

}  // namespace

TEST_SUITE("ranging") {

TEST_CASE("distance bound from emission and receipt times") {
  CHECK(distance_bound(Instant{5}, Instant{5}, 3e8) == 0.0);
  // one microsecond of flight at 3e8 m/s is 300 m
  CHECK(distance_bound(Instant{0}, Instant{1'000'000}, 3e8) ==
        doctest::Approx(300.0).epsilon(1e-12));
  CHECK_THROWS_AS(distance_bound(Instant{2}, Instant{1}, 3e8), FutureTimestampError);
}

TEST_CASE("distance bound is strictly increasing in the receipt time") {
  SplitMix64 rng(301);
  for (int i = 0; i < 1000; ++i) {
    const Instant t_s{static_cast<std::int64_t>(rng.next_below(1'000'000'000))};
    const auto d1 = static_cast<std::int64_t>(rng.next_below(1'000'000'000));
    const auto d2 = d1 + 1 + static_cast<std::int64_t>(rng.next_below(1'000'000));
    CHECK(distance_bound(t_s, timebase::advanced(t_s, d1), 3e8) <
          distance_bound(t_s, timebase::advanced(t_s, d2), 3e8));
  }
}

TEST_CASE("exact bounds recover the reference truth") {
  const geom::Vec truth = vec2(1, 1);
  const auto obs = exact_instance(kRefStations, truth);
  CHECK(obs[0].bound_m == doctest::Approx(std::sqrt(2.0)));
  CHECK(obs[1].bound_m == doctest::Approx(std::sqrt(10.0)));
  CHECK(obs[2].bound_m == doctest::Approx(std::sqrt(10.0)));

  const Fix fix = solve_position(obs, 2);
  CHECK((fix.position - truth).norm() <= 1e-6);
  CHECK(fix.error_range_m <= 1e-6);
  REQUIRE(fix.residuals_m.size() == 3);
  for (double r : fix.residuals_m) CHECK(std::abs(r) <= 1e-6);
}

TEST_CASE("a zero bound anchors the solution at that station") {
  const geom::Vec truth = vec2(0, 0);  // at the first station
  const auto obs = exact_instance(kRefStations, truth);
  CHECK(obs[0].bound_m == 0.0);
  const Fix fix = solve_position(obs, 2);
  CHECK((fix.position - truth).norm() <= 1e-6);
}

TEST_CASE("exact random instances are recovered to a micrometer") {
  // truth inside the station hull: the regime the protocol accepts anyway
  // (the containment step requires it) and where the least-squares
  // landscape has a single basin
  SplitMix64 rng(302);
  for (int trial = 0; trial < 120; ++trial) {
    const int dims = trial % 3 == 2 ? 3 : 2;
    const int n_stations = dims + 1 + static_cast<int>(rng.next_below(3));
    std::vector<geom::Vec> stations;
    for (int i = 0; i < n_stations; ++i) stations.push_back(random_vec(rng, dims, 0.0, 100.0));
    // keep the anchor simplex in general position
    const geom::Simplex anchor = geom::make_simplex(
        std::span<const geom::Vec>(stations.data(), static_cast<std::size_t>(dims) + 1));
    if (std::abs(geom::signed_measure(anchor)) < (dims == 2 ? 400.0 : 3000.0)) {
      --trial;
      continue;
    }
    // truth as a well-interior mix of the anchor stations
    Eigen::VectorXd weights(dims + 1);
    for (int i = 0; i <= dims; ++i) weights[i] = rng.uniform(0.15, 1.0);
    weights /= weights.sum();
    geom::Vec truth = geom::Vec::Zero(dims);
    for (int i = 0; i <= dims; ++i) truth += weights[i] * anchor.vertex(i);

    const Fix fix = solve_position(exact_instance(stations, truth), dims);
    CHECK((fix.position - truth).norm() <= 1e-6);
  }
}

TEST_CASE("solver objective never exceeds the grid oracle minimum") {
  SplitMix64 rng(303);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<geom::Vec> stations = {
        vec2(rng.uniform(0, 2), rng.uniform(0, 2)),
        vec2(rng.uniform(6, 8), rng.uniform(0, 2)),
        vec2(rng.uniform(2, 6), rng.uniform(6, 8)),
        vec2(rng.uniform(3, 5), rng.uniform(2, 5)),
    };
    const geom::Vec truth = vec2(rng.uniform(2.5, 5.5), rng.uniform(2.5, 5.0));
    auto obs = exact_instance(stations, truth);
    for (auto& o : obs) o.bound_m += rng.uniform(0.0, 0.4);  // delays only lengthen

    const Fix fix = solve_position(obs, 2);
    const auto grid = grid_search_2d(obs, 0.01);
    CHECK(objective(obs, fix.position) <= grid.objective + 1e-12);
  }
}

TEST_CASE("noisy instance lands within two cells of a fine-grid argmin") {
  // millimeter grid over the station bounding box; the cluster is kept
  // small so the exhaustive scan stays around 10^7 points
  SplitMix64 rng(306);
  std::vector<geom::Vec> stations = {vec2(30.2, 41.1), vec2(33.9, 41.4),
                                     vec2(32.1, 44.6), vec2(30.6, 43.9)};
  const geom::Vec truth = vec2(31.8, 42.7);
  auto obs = exact_instance(stations, truth);
  for (auto& o : obs) o.bound_m += rng.uniform(0.0, 0.15);

  const Fix fix = solve_position(obs, 2);
  const auto grid = grid_search_2d(obs, 1e-3);
  CHECK(objective(obs, fix.position) <= grid.objective + 1e-12);
  CHECK((fix.position - grid.argmin).norm() <= 2.0 * 1e-3 * std::sqrt(2.0));
}

TEST_CASE("underdetermined and degenerate instances are typed errors") {
  CHECK_THROWS_AS(solve_position(exact_instance(
                      std::vector<geom::Vec>{vec2(0, 0), vec2(4, 0)}, vec2(1, 1)), 2),
                  UnderdeterminedError);

  // collinear stations: the mirror ambiguity has no resolution
  const std::vector<geom::Vec> line = {vec2(0, 0), vec2(5, 0), vec2(10, 0)};
  CHECK_THROWS_AS(solve_position(exact_instance(line, vec2(3, 2)), 2),
                  DegenerateGeometryError);

  // coplanar stations in 3D
  const std::vector<geom::Vec> plane = {vec3(0, 0, 1), vec3(5, 0, 1), vec3(0, 5, 1),
                                        vec3(5, 5, 1)};
  CHECK_THROWS_AS(solve_position(exact_instance(plane, vec3(2, 2, 3)), 3),
                  DegenerateGeometryError);
}

TEST_CASE("iteration budget exhaustion is NoConvergence") {
  const auto obs = exact_instance(kRefStations, vec2(1.3, 0.9));
  SolveOptions options;
  options.max_iterations = 1;
  options.gradient_tol = 1e-15;
  CHECK_THROWS_AS(solve_position(obs, 2, options), NoConvergenceError);
}

TEST_CASE("error range is zero only for perfectly consistent bounds") {
  const auto obs = exact_instance(kRefStations, vec2(1, 1));
  const Fix fix = solve_position(obs, 2);
  CHECK(fix.error_range_m <= 1e-9);
}

TEST_CASE("a consistent +100 m delay on all bounds blows up the error range") {
  auto obs = exact_instance(kRefStations, vec2(1, 1));
  for (auto& o : obs) o.bound_m += 100.0;
  const Fix fix = solve_position(obs, 2);
  CHECK(fix.error_range_m > 10.0);
}

TEST_CASE("error range scales linearly with the residuals") {
  SplitMix64 rng(304);
  for (int trial = 0; trial < 100; ++trial) {
    const int dims = trial % 2 == 0 ? 2 : 3;
    const auto n = static_cast<Eigen::Index>(dims) + 2;
    Eigen::VectorXd residuals(n);
    Eigen::MatrixXd jacobian(n, dims);
    for (Eigen::Index i = 0; i < n; ++i) {
      residuals[i] = rng.uniform(-3.0, 3.0);
      for (int j = 0; j < dims; ++j) jacobian(i, j) = rng.uniform(-1.0, 1.0);
    }
    const double k = rng.uniform(0.1, 20.0);
    const double base = error_range(residuals, jacobian, dims);
    const double scaled = error_range((k * residuals).eval(), jacobian, dims);
    CHECK(scaled == doctest::Approx(k * base).epsilon(1e-9));
  }
}

TEST_CASE("error range rejects singular geometry") {
  Eigen::VectorXd residuals = Eigen::VectorXd::Zero(3);
  Eigen::MatrixXd jacobian(3, 2);
  jacobian << 1, 0, 1, 0, 1, 0;  // all rows parallel
  CHECK_THROWS_AS(error_range(residuals, jacobian, 2), DegenerateGeometryError);
}

TEST_CASE("identical inputs give bit-identical fixes") {
  SplitMix64 rng(305);
  std::vector<geom::Vec> stations;
  for (int i = 0; i < 5; ++i) stations.push_back(random_vec(rng, 2, 0.0, 60.0));
  auto obs = exact_instance(stations, vec2(31.0, 27.0));
  for (auto& o : obs) o.bound_m += rng.uniform(0.0, 1.0);

  const Fix a = solve_position(obs, 2);
  const Fix b = solve_position(obs, 2);
  CHECK(std::memcmp(a.position.data(), b.position.data(), sizeof(double) * 2) == 0);
  CHECK(std::memcmp(&a.error_range_m, &b.error_range_m, sizeof(double)) == 0);
  REQUIRE(a.residuals_m.size() == b.residuals_m.size());
  CHECK(std::memcmp(a.residuals_m.data(), b.residuals_m.data(),
                    sizeof(double) * a.residuals_m.size()) == 0);
  CHECK(a.iterations == b.iterations);
}

}  // TEST_SUITE
