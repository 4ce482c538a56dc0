#include <Eigen/Dense>
#include <set>

#include "doctest.h"
#include "morphon/fem.hpp"
#include "morphon/mesh.hpp"

using namespace morphon;

TEST_CASE("grid counts") {
  const auto one = build_grid(1, 1, 1, {1, 1, 1});
  CHECK(one.num_nodes() == 8);
  CHECK(one.num_elements() == 1);
  CHECK(one.num_dofs() == 24);

  const auto two = build_grid(2, 1, 1, {2, 1, 1});
  CHECK(two.num_nodes() == 12);
  CHECK(two.num_elements() == 2);
  CHECK(two.num_dofs() == 36);

  const auto big = build_grid(40, 20, 20, {2, 1, 1});
  CHECK(big.num_elements() == 16000);
  CHECK(big.num_dofs() == 54243);  // 3 * 41 * 21 * 21
  CHECK(big.element_size()[0] == doctest::Approx(0.05));
}

TEST_CASE("grid rejects non-positive dimensions") {
  CHECK_THROWS_AS(build_grid(0, 1, 1, {1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(1, -2, 1, {1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(1, 1, 1, {1, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(1, 1, 1, {1, 1, -3}), std::invalid_argument);
}

TEST_CASE("element dofs of a single element are a permutation of 0..23") {
  const auto g = build_grid(1, 1, 1, {1, 1, 1});
  const auto dofs = element_dofs(g, 0);
  std::set<Index> s(dofs.begin(), dofs.end());
  CHECK(s.size() == 24);
  CHECK(*s.begin() == 0);
  CHECK(*s.rbegin() == 23);
  CHECK_THROWS_AS(element_dofs(g, 1), std::out_of_range);
  CHECK_THROWS_AS(element_dofs(g, -1), std::out_of_range);
}

TEST_CASE("neighbouring elements share the face dofs") {
  const auto g = build_grid(2, 1, 1, {2, 1, 1});
  const auto a = element_dofs(g, 0), b = element_dofs(g, 1);
  std::set<Index> sa(a.begin(), a.end());
  int shared = 0;
  for (Index d : b) shared += int(sa.count(d));
  CHECK(shared == 12);
}

TEST_CASE("element dof maps follow the documented corner ordering (brute force)") {
  for (int nx = 1; nx <= 3; ++nx)
    for (int ny = 1; ny <= 3; ++ny)
      for (int nz = 1; nz <= 3; ++nz) {
        const auto g = build_grid(nx, ny, nz, {1.0 * nx, 0.5 * ny, 2.0 * nz});
        std::vector<int> hits(size_t(g.num_dofs()), 0);
        for (Index e = 0; e < g.num_elements(); ++e) {
          const auto dofs = g.element_dofs(e);
          std::set<Index> distinct(dofs.begin(), dofs.end());
          REQUIRE(distinct.size() == 24);
          const auto c = g.element_centroid(e);
          for (int corner = 0; corner < 8; ++corner) {
            const Index node = dofs[size_t(3 * corner)] / 3;
            for (int d = 0; d < 3; ++d) CHECK(dofs[size_t(3 * corner + d)] == 3 * node + d);
            const auto p = g.node_position(node);
            for (int a = 0; a < 3; ++a) {
              const double expected = c[a] + (kHexCorners[size_t(corner)][size_t(a)] - 0.5) * g.element_size()[a];
              CHECK(p[a] == doctest::Approx(expected));
            }
          }
          for (Index d : dofs) ++hits[size_t(d)];
        }
        for (int h : hits) CHECK(h >= 1);
      }
}

TEST_CASE("lexicographic numbering, x fastest") {
  const auto g = build_grid(3, 2, 2, {3, 2, 2});
  CHECK(g.element_index(1, 0, 0) == 1);
  CHECK(g.element_index(0, 1, 0) == 3);
  CHECK(g.element_index(0, 0, 1) == 6);
  CHECK(g.node_index(0, 1, 0) == 4);
  CHECK(g.node_index(0, 0, 1) == 12);
  for (Index e = 0; e < g.num_elements(); ++e) {
    const auto [i, j, k] = g.element_coords(e);
    CHECK(g.element_index(i, j, k) == e);
  }
}

TEST_CASE("cantilever preset") {
  const auto g = build_grid(4, 2, 2, {2, 1, 1});
  const auto bc = cantilever_preset(g, 1.0);
  CHECK(bc.fixed_dofs.size() == 27);
  for (Index d : bc.fixed_dofs) CHECK(g.node_position(d / 3)[0] == 0.0);

  double fz = 0.0;
  for (const auto& [d, v] : bc.loads) {
    CHECK(d % 3 == 2);
    const auto p = g.node_position(d / 3);
    CHECK(p[0] == doctest::Approx(2.0));
    CHECK(p[2] == 0.0);
    CHECK(!std::binary_search(bc.fixed_dofs.begin(), bc.fixed_dofs.end(), d));
    fz += v;
  }
  // Trapezoidal weights over 3 edge nodes of spacing 0.5: 0.25 + 0.5 + 0.25.
  CHECK(fz == doctest::Approx(-1.0 * g.lengths()[1]).epsilon(1e-14));
  CHECK(bc.loads.size() == 3);
  CHECK(bc.loads.begin()->second == doctest::Approx(-0.25));

  const auto scaled = cantilever_preset(build_grid(4, 2, 2, {2, 3, 1}), 2.0);
  double sum = 0.0;
  for (const auto& [d, v] : scaled.loads) sum += v;
  CHECK(sum == doctest::Approx(-6.0));
  CHECK_NOTHROW(validate(bc, g));
}

TEST_CASE("mbb preset") {
  const auto g = build_grid(6, 2, 2, {6, 1, 2});
  const auto bc = mbb_preset(g, 1.0);
  REQUIRE(bc.loads.size() == 1);
  const auto [dof, value] = *bc.loads.begin();
  CHECK(value == -1.0);
  CHECK(dof % 3 == 2);
  const auto p = g.node_position(dof / 3);
  CHECK(p[0] == doctest::Approx(3.0));
  CHECK(p[1] == doctest::Approx(0.5));
  CHECK(p[2] == doctest::Approx(2.0));
  CHECK_NOTHROW(validate(bc, g));

  CHECK_THROWS_AS(mbb_preset(build_grid(5, 2, 2, {6, 1, 2}), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(mbb_preset(build_grid(6, 3, 2, {6, 1, 2}), 1.0), std::invalid_argument);
}

TEST_CASE("mbb supports remove all rigid-body modes") {
  const auto g = build_grid(6, 2, 2, {6, 1, 2});
  const auto bc = mbb_preset(g, 1.0);
  const ElasticOperator op(g, MaterialModel{});
  const std::vector<double> E(size_t(g.num_elements()), 1.0);
  const auto mask = bc.fixed_mask(g.num_dofs());
  const Eigen::MatrixXd K = op.assemble_dense(E, mask);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
  CHECK(eig.eigenvalues().minCoeff() > 1e-8);
}

TEST_CASE("presets are deterministic") {
  const auto g = build_grid(6, 4, 2, {6, 1, 2});
  CHECK(cantilever_preset(g, 1.0) == cantilever_preset(g, 1.0));
  CHECK(mbb_preset(g, 1.0) == mbb_preset(g, 1.0));
}

TEST_CASE("boundary condition validation") {
  const auto g = build_grid(2, 1, 1, {2, 1, 1});
  BoundaryConditions bc = cantilever_preset(g, 1.0);
  bc.loads[bc.fixed_dofs.front()] = 1.0;
  CHECK_THROWS_AS(validate(bc, g), std::invalid_argument);
  BoundaryConditions few;
  few.fixed_dofs = {0, 1, 2};
  CHECK_THROWS_AS(validate(few, g), std::invalid_argument);
  BoundaryConditions out_of_range = cantilever_preset(g, 1.0);
  out_of_range.loads[g.num_dofs()] = 1.0;
  CHECK_THROWS_AS(validate(out_of_range, g), std::invalid_argument);
}
