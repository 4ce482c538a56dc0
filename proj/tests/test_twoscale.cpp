#include <random>
#include <set>

#include "doctest.h"
#include "morphon/sensitivity.hpp"
#include "morphon/twoscale.hpp"
#include "test_support.hpp"

using namespace morphon;
using namespace morphon::testing;

TEST_CASE("coarse map dimensions") {
  const auto fine = build_grid(40, 20, 20, {2, 1, 1});
  const CoarseMap map(fine, 5);
  CHECK(map.coarse_grid().nelx() == 8);
  CHECK(map.coarse_grid().nely() == 4);
  CHECK(map.coarse_grid().nelz() == 4);
  CHECK(map.num_blocks() == 128);
  CHECK(map.feature_dim() == 152);
  CHECK(map.target_dim() == 125);
  CHECK(map.coarse_grid().lengths() == fine.lengths());

  CHECK_THROWS_WITH_AS(CoarseMap(build_grid(41, 20, 20, {2, 1, 1}), 5),
                       "nelx = 41 is not divisible by block size 5", std::invalid_argument);
  CHECK_THROWS_AS(CoarseMap(fine, 0), std::invalid_argument);
}

TEST_CASE("blocks partition the fine grid") {
  const auto fine = build_grid(6, 4, 2, {3, 2, 1});
  const CoarseMap map(fine, 2);
  std::set<Index> seen;
  for (Index b = 0; b < map.num_blocks(); ++b) {
    const auto members = map.block_elements(b);
    CHECK(Index(members.size()) == 8);
    const auto [ci, cj, ck] = map.coarse_grid().element_coords(b);
    for (size_t local = 0; local < members.size(); ++local) {
      const Index e = members[local];
      CHECK(map.block_of(e) == b);
      CHECK(seen.insert(e).second);
      const auto [i, j, k] = fine.element_coords(e);
      CHECK(i / 2 == ci);
      CHECK(j / 2 == cj);
      CHECK(k / 2 == ck);
      CHECK(Index(i % 2 + 2 * (j % 2) + 4 * (k % 2)) == Index(local));
    }
  }
  CHECK(Index(seen.size()) == fine.num_elements());
  CHECK_THROWS_AS(map.block_elements(map.num_blocks()), std::out_of_range);
}

TEST_CASE("coarsening takes block means") {
  const auto fine = build_grid(4, 4, 4, {1, 1, 1});
  const CoarseMap map(fine, 2);
  std::mt19937_64 rng(2);
  const auto z = random_vector(size_t(fine.num_elements()), 0, 1, rng);
  const auto zc = coarsen_density(z, map);
  for (Index b = 0; b < map.num_blocks(); ++b) {
    double s = 0.0;
    for (Index e = 0; e < fine.num_elements(); ++e)
      if (map.block_of(e) == b) s += z[size_t(e)];
    CHECK(zc[size_t(b)] == doctest::Approx(s / 8).epsilon(1e-14));
  }
  const std::vector<double> c(size_t(fine.num_elements()), 0.37);
  for (double x : coarsen_density(c, map)) CHECK(x == doctest::Approx(0.37).epsilon(1e-15));
  CHECK_THROWS_AS(coarsen_density(std::vector<double>(3), map), std::invalid_argument);
}

TEST_CASE("nearest coarse node, ties round up") {
  const auto fine = build_grid(4, 2, 2, {2, 1, 1});
  const CoarseMap map(fine, 2);
  const auto& cg = map.coarse_grid();
  CHECK(map.coarse_node_of(fine.node_index(0, 0, 0)) == cg.node_index(0, 0, 0));
  CHECK(map.coarse_node_of(fine.node_index(1, 0, 0)) == cg.node_index(1, 0, 0));
  CHECK(map.coarse_node_of(fine.node_index(2, 1, 2)) == cg.node_index(1, 1, 1));
  CHECK(map.coarse_node_of(fine.node_index(4, 2, 2)) == cg.node_index(2, 1, 1));

  const CoarseMap map5(build_grid(10, 5, 5, {2, 1, 1}), 5);
  CHECK(map5.coarse_node_of(map5.fine_grid().node_index(2, 2, 2)) == map5.coarse_grid().node_index(0, 0, 0));
  CHECK(map5.coarse_node_of(map5.fine_grid().node_index(3, 3, 3)) == map5.coarse_grid().node_index(1, 1, 1));
  CHECK(map5.coarse_node_of(map5.fine_grid().node_index(7, 0, 0)) == map5.coarse_grid().node_index(1, 0, 0));
  CHECK(map5.coarse_node_of(map5.fine_grid().node_index(8, 0, 0)) == map5.coarse_grid().node_index(2, 0, 0));
}

TEST_CASE("restricted cantilever conditions") {
  const auto fine = build_grid(10, 10, 10, {2, 1, 1});
  const CoarseMap map(fine, 5);
  const auto fbc = cantilever_preset(fine, 1.0);
  const auto cbc = restrict_bc(fbc, map);
  const auto& cg = map.coarse_grid();
  CHECK(cbc.fixed_dofs.size() == 27);  // the 9 nodes of the coarse x=0 face
  for (Index d : cbc.fixed_dofs) CHECK(cg.node_coords(d / 3)[0] == 0);
  double fsum = 0.0, csum = 0.0;
  for (const auto& [d, f] : fbc.loads) fsum += f;
  for (const auto& [d, f] : cbc.loads) {
    csum += f;
    CHECK(d % 3 == 2);
    const auto ijk = cg.node_coords(d / 3);
    CHECK(ijk[0] == 2);
    CHECK(ijk[2] == 0);
  }
  CHECK(csum == doctest::Approx(fsum).epsilon(1e-14));
  CHECK_NOTHROW(validate(cbc, cg));
}

TEST_CASE("coarse solve on the restricted problem") {
  const auto fine = build_grid(10, 10, 10, {2, 1, 1});
  const CoarseMap map(fine, 5);
  const auto cbc = restrict_bc(cantilever_preset(fine, 1.0), map);
  const std::vector<double> zc(size_t(map.num_blocks()), 0.5);
  const auto res = solve_coarse(zc, map.coarse_grid(), cbc, MaterialModel{}, {}, 1e-10, 10000);
  CHECK(res.stats.converged);
  CHECK(res.stats.final_relative_residual <= 1e-10);
  CHECK(compliance(cbc.load_vector(map.coarse_grid().num_dofs()), res.u) > 0.0);
}

TEST_CASE("features layout and normalization") {
  const auto fine = build_grid(10, 10, 10, {2, 1, 1});
  const CoarseMap map(fine, 5);
  const auto& cg = map.coarse_grid();
  const auto cbc = restrict_bc(cantilever_preset(fine, 1.0), map);
  std::mt19937_64 rng(12);
  const auto z = random_vector(size_t(fine.num_elements()), 0, 1, rng);
  const auto mask = cbc.fixed_mask(cg.num_dofs());
  const auto res = solve_coarse(coarsen_density(z, map), cg, cbc, MaterialModel{}, {}, 1e-10, 10000);

  double s = 0.0;
  int free = 0;
  for (size_t d = 0; d < res.u.size(); ++d)
    if (!mask[d]) {
      s += res.u[d] * res.u[d];
      ++free;
    }
  const double rms = std::sqrt(s / free);
  CHECK(coarse_displacement_rms(res.u, mask) == doctest::Approx(rms).epsilon(1e-14));

  const auto X = make_all_features(z, res.u, mask, map);
  CHECK(X.rows() == 152);
  CHECK(X.cols() == map.num_blocks());
  for (Index b = 0; b < map.num_blocks(); ++b) {
    const auto f = make_features(z, res.u, mask, map, b);
    REQUIRE(f.size() == 152);
    for (Index r = 0; r < 152; ++r) CHECK(X(r, b) == f[size_t(r)]);
    const auto members = map.block_elements(b);
    for (size_t l = 0; l < 125; ++l) CHECK(f[l] == z[size_t(members[l])]);
    const auto nodes = cg.element_nodes(b);
    for (int c = 0; c < 8; ++c)
      for (int d = 0; d < 3; ++d)
        CHECK(f[size_t(125 + 3 * c + d)] ==
              doctest::Approx(res.u[size_t(3 * nodes[size_t(c)] + d)] / rms).epsilon(1e-14));
    const auto [i, j, k] = cg.element_coords(b);
    CHECK(f[149] == doctest::Approx((i + 0.5) / 2));
    CHECK(f[150] == doctest::Approx((j + 0.5) / 2));
    CHECK(f[151] == doctest::Approx((k + 0.5) / 2));
  }

  // Zero displacement field yields zero displacement features.
  const std::vector<double> zero(res.u.size(), 0.0);
  const auto f0 = make_features(z, zero, mask, map, 0);
  for (size_t r = 125; r < 149; ++r) CHECK(f0[r] == 0.0);
  CHECK_THROWS_AS(make_features(z, res.u, mask, map, 8), std::out_of_range);
}

TEST_CASE("mirror-symmetric design gives mirrored features") {
  // The cantilever is symmetric about y = Ly/2: u_y flips sign, u_x and u_z do not.
  const auto fine = build_grid(10, 10, 10, {2, 1, 1});
  const CoarseMap map(fine, 5);
  const auto& cg = map.coarse_grid();
  const auto cbc = restrict_bc(cantilever_preset(fine, 1.0), map);
  const auto mask = cbc.fixed_mask(cg.num_dofs());
  std::mt19937_64 rng(99);
  std::vector<double> z(size_t(fine.num_elements()));
  for (int k = 0; k < 10; ++k)
    for (int j = 0; j < 5; ++j)
      for (int i = 0; i < 10; ++i) {
        const double v = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
        z[size_t(fine.element_index(i, j, k))] = v;
        z[size_t(fine.element_index(i, 9 - j, k))] = v;
      }
  const auto res = solve_coarse(coarsen_density(z, map), cg, cbc, MaterialModel{}, {}, 1e-12, 10000);
  REQUIRE(res.stats.converged);
  for (int bk = 0; bk < 2; ++bk)
    for (int bi = 0; bi < 2; ++bi) {
      const auto fa = make_features(z, res.u, mask, map, cg.element_index(bi, 0, bk));
      const auto fb = make_features(z, res.u, mask, map, cg.element_index(bi, 1, bk));
      for (int lk = 0; lk < 5; ++lk)
        for (int lj = 0; lj < 5; ++lj)
          for (int li = 0; li < 5; ++li)
            CHECK(fa[size_t(li + 5 * (lj + 5 * lk))] == fb[size_t(li + 5 * ((4 - lj) + 5 * lk))]);
      const double scale = max_abs(std::span<const double>(fa).subspan(125, 24));
      for (int c = 0; c < 8; ++c) {
        const auto& pc = kHexCorners[size_t(c)];
        int m = 0;
        for (int q = 0; q < 8; ++q)
          if (kHexCorners[size_t(q)][0] == pc[0] && kHexCorners[size_t(q)][1] == 1 - pc[1] &&
              kHexCorners[size_t(q)][2] == pc[2])
            m = q;
        for (int d = 0; d < 3; ++d) {
          const double sign = d == 1 ? -1.0 : 1.0;
          CHECK(std::abs(fa[size_t(125 + 3 * c + d)] - sign * fb[size_t(125 + 3 * m + d)]) <= 1e-7 * scale);
        }
      }
      CHECK(fa[150] == doctest::Approx(1.0 - fb[150]));
    }
}

TEST_CASE("samples carry log-magnitude targets in block order") {
  const auto fine = build_grid(4, 2, 2, {2, 1, 1});
  const CoarseMap map(fine, 2);
  const auto cbc = restrict_bc(cantilever_preset(fine, 1.0), map);
  const auto mask = cbc.fixed_mask(map.coarse_grid().num_dofs());
  std::mt19937_64 rng(6);
  const auto z = random_vector(size_t(fine.num_elements()), 0, 1, rng);
  auto g = random_vector(size_t(fine.num_elements()), -5, -1e-3, rng);
  g[3] = 0.0;
  g[5] = 2.0;
  const std::vector<double> uc(size_t(map.coarse_grid().num_dofs()), 0.1);
  const auto samples = make_samples(z, uc, mask, map, g, 7, 1e-12);
  REQUIRE(Index(samples.size()) == map.num_blocks());
  for (Index b = 0; b < map.num_blocks(); ++b) {
    const auto& s = samples[size_t(b)];
    CHECK(s.iteration == 7);
    CHECK(Index(s.features.size()) == map.feature_dim());
    const auto members = map.block_elements(b);
    for (size_t l = 0; l < members.size(); ++l) {
      const double gi = g[size_t(members[l])];
      CHECK(s.target_log[l] == doctest::Approx(gi < 0 ? std::log10(-gi) : -12.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("target transform statistics") {
  std::mt19937_64 rng(10);
  const auto a = random_vector(300, -8, -1, rng);
  const auto b = random_vector(200, -6, 0, rng);
  TargetTransform tf;
  tf.ingest_log(a);
  tf.ingest_log(b);
  std::vector<double> all(a);
  all.insert(all.end(), b.begin(), b.end());
  double mean = 0.0;
  for (double x : all) mean += x;
  mean /= double(all.size());
  double var = 0.0;
  for (double x : all) var += (x - mean) * (x - mean);
  var /= double(all.size());
  CHECK(tf.count() == 500);
  CHECK(tf.mean() == doctest::Approx(mean).epsilon(1e-13));
  CHECK(tf.stddev() == doctest::Approx(std::sqrt(var)).epsilon(1e-12));

  const std::vector<double> g{-1e-3, -2.5, -7e-6};
  const auto y = tf.transform(g);
  const auto back = tf.inverse(y);
  for (size_t i = 0; i < g.size(); ++i) CHECK(back[i] == doctest::Approx(g[i]).epsilon(1e-12));
  CHECK(tf.standardize(mean) == doctest::Approx(0.0).scale(1.0));
  CHECK(tf.inverse_one(-1e6) == -tf.g_floor());
  CHECK(tf.log_magnitude(1.0) == -12.0);

  TargetTransform empty;
  CHECK_THROWS_AS(empty.standardize(0.0), std::logic_error);
  TargetTransform constant;
  constant.ingest_log(std::vector<double>(5, -3.0));
  CHECK_THROWS_AS(constant.inverse_one(0.0), std::logic_error);
  CHECK_THROWS_AS(TargetTransform(0.0), std::invalid_argument);

  TargetTransform copy;
  copy.restore(tf.count(), tf.mean(), tf.m2(), tf.g_floor());
  CHECK(copy.stddev() == tf.stddev());
}
