#include <Eigen/Dense>
#include <random>

#include "doctest.h"
#include "morphon/fem.hpp"
#include "morphon/parallel.hpp"
#include "test_support.hpp"

using namespace morphon;
using namespace morphon::testing;

TEST_CASE("hex8 stiffness: symmetry, rigid modes, nullity 6") {
  for (const Vec3 h : {Vec3{1, 1, 1}, Vec3{0.05, 0.05, 0.05}, Vec3{0.5, 1.0, 2.0}}) {
    const ElementMatrix ke = hex8_stiffness(0.3, h);
    CHECK((ke - ke.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * ke.cwiseAbs().maxCoeff());
    for (int d = 0; d < 3; ++d) {
      ElementVector t = ElementVector::Zero();
      for (int c = 0; c < 8; ++c) t[3 * c + d] = 1.0;
      CHECK((ke * t).cwiseAbs().maxCoeff() <= 1e-12 * ke.cwiseAbs().maxCoeff());
    }
    Eigen::SelfAdjointEigenSolver<ElementMatrix> eig(ke);
    const double lmax = eig.eigenvalues().maxCoeff();
    int zeros = 0;
    for (int i = 0; i < 24; ++i) {
      CHECK(eig.eigenvalues()[i] > -1e-9 * lmax);
      zeros += std::abs(eig.eigenvalues()[i]) <= 1e-9 * lmax;
    }
    CHECK(zeros == 6);
  }
}

TEST_CASE("hex8 stiffness reproduces the strain energy of a uniform strain") {
  // u_x = eps * x: energy = eps^2 (lambda + 2 mu) V for E = 1.
  const double nu = 0.3, eps = 1e-3;
  const Vec3 h{0.5, 1.0, 2.0};
  const ElementMatrix ke = hex8_stiffness(nu, h);
  ElementVector u = ElementVector::Zero();
  for (int c = 0; c < 8; ++c) u[3 * c] = eps * kHexCorners[size_t(c)][0] * h[0];
  const double lambda = nu / ((1 + nu) * (1 - 2 * nu)), mu = 1 / (2 * (1 + nu));
  CHECK(u.dot(ke * u) == doctest::Approx(eps * eps * (lambda + 2 * mu) * h[0] * h[1] * h[2]).epsilon(1e-12));

  // Pure shear u_x = gamma * y: energy = gamma^2 mu V.
  ElementVector s = ElementVector::Zero();
  for (int c = 0; c < 8; ++c) s[3 * c] = eps * kHexCorners[size_t(c)][1] * h[1];
  CHECK(s.dot(ke * s) == doctest::Approx(eps * eps * mu * h[0] * h[1] * h[2]).epsilon(1e-12));
}

TEST_CASE("simp modulus") {
  MaterialModel mat;
  CHECK(simp_modulus(1.0, mat) == mat.E0);
  CHECK(simp_modulus(0.0, mat) == mat.Emin);
  CHECK(simp_modulus(0.5, mat) == doctest::Approx(0.125 * (1 - 1e-9) + 1e-9).epsilon(1e-15));
  CHECK_THROWS(simp_modulus(-0.01, mat));
  CHECK_THROWS(simp_modulus(1.01, mat));
}

TEST_CASE("material validation") {
  CHECK_THROWS(MaterialModel{1.0, 0.0, 0.3, 3.0}.validate());
  CHECK_THROWS(MaterialModel{1.0, 1e-9, 0.5, 3.0}.validate());
  CHECK_THROWS(MaterialModel{1.0, 1e-9, 0.3, 0.5}.validate());
  CHECK_NOTHROW(MaterialModel{}.validate());
}

TEST_CASE("apply_stiffness basics") {
  const auto g = build_grid(1, 1, 1, {1, 1, 1});
  const MaterialModel mat;
  const std::vector<double> z{1.0};
  const std::vector<Index> none;
  std::vector<double> zero(24, 0.0);
  CHECK(max_abs(apply_stiffness(g, mat, z, zero, none)) == 0.0);

  std::mt19937_64 rng(3);
  const auto u = random_vector(24, -1, 1, rng);
  const auto y = apply_stiffness(g, mat, z, u, none);
  // Global dofs follow lexicographic node numbering; KE follows the corner order.
  const auto dofs = g.element_dofs(0);
  ElementVector ue;
  for (int i = 0; i < 24; ++i) ue[i] = u[size_t(dofs[size_t(i)])];
  const ElementVector ref = hex8_stiffness(mat.nu, g.element_size()) * ue;
  for (int i = 0; i < 24; ++i)
    CHECK(std::abs(y[size_t(dofs[size_t(i)])] - ref[i]) <= 1e-14 * ref.cwiseAbs().maxCoeff());

  std::vector<double> u3(u);
  for (double& x : u3) x *= 3.7;
  const auto y3 = apply_stiffness(g, mat, z, u3, none);
  for (size_t i = 0; i < 24; ++i) CHECK(y3[i] == doctest::Approx(3.7 * y[i]).epsilon(1e-12));

  CHECK_THROWS_AS(apply_stiffness(g, mat, z, std::vector<double>(23), none), std::invalid_argument);
  CHECK_THROWS_AS(apply_stiffness(g, mat, std::vector<double>(2, 1.0), u, none), std::invalid_argument);
}

TEST_CASE("matrix-free apply agrees with dense assembly on small grids") {
  std::mt19937_64 rng(11);
  const MaterialModel mat;
  for (int nx = 1; nx <= 3; ++nx)
    for (int ny = 1; ny <= 3; ++ny)
      for (int nz = 1; nz <= 3; ++nz) {
        const auto g = build_grid(nx, ny, nz, {0.7 * nx, 0.4 * ny, 0.9 * nz});
        const auto bc = cantilever_preset(g, 1.0);
        const ElasticOperator op(g, mat);
        const auto z = random_vector(size_t(g.num_elements()), 0, 1, rng);
        const auto u = random_vector(size_t(g.num_dofs()), -1, 1, rng);
        const auto E = op.moduli(z);
        const auto mask = bc.fixed_mask(g.num_dofs());
        std::vector<double> y(u.size());
        op.apply(E, u, mask, y);
        const Eigen::MatrixXd K = op.assemble_dense(E, mask);
        const Eigen::VectorXd ref = K * Eigen::Map<const Eigen::VectorXd>(u.data(), Eigen::Index(u.size()));
        CHECK(rel_diff2(y, std::span<const double>(ref.data(), size_t(ref.size()))) <= 1e-10);
        for (Index d : bc.fixed_dofs) CHECK(y[size_t(d)] == u[size_t(d)]);

        // Energy positivity on the free subspace.
        std::vector<double> free_u(u);
        for (Index d : bc.fixed_dofs) free_u[size_t(d)] = 0.0;
        op.apply(E, free_u, mask, y);
        double energy = 0.0;
        for (size_t i = 0; i < y.size(); ++i) energy += free_u[i] * y[i];
        CHECK(energy > 0.0);
      }
}

TEST_CASE("jacobi diagonal") {
  const MaterialModel mat;
  const auto one = build_grid(1, 1, 1, {1, 1, 1});
  const auto d1 = jacobi_diagonal(one, mat, std::vector<double>{1.0}, std::vector<Index>{});
  const ElementMatrix ke = hex8_stiffness(mat.nu, one.element_size());
  const auto dofs = one.element_dofs(0);
  for (int i = 0; i < 24; ++i) CHECK(d1[size_t(dofs[size_t(i)])] == doctest::Approx(ke(i, i)).epsilon(1e-14));

  std::mt19937_64 rng(5);
  const auto g = build_grid(3, 2, 2, {3, 2, 2});
  const auto bc = cantilever_preset(g, 1.0);
  const auto z = random_vector(size_t(g.num_elements()), 0, 1, rng);
  const auto diag = jacobi_diagonal(g, mat, z, bc.fixed_dofs);
  const ElasticOperator op(g, mat);
  const Eigen::MatrixXd K = op.assemble_dense(op.moduli(z), bc.fixed_mask(g.num_dofs()));
  for (size_t i = 0; i < diag.size(); ++i) {
    CHECK(diag[i] > 0.0);
    CHECK(diag[i] == doctest::Approx(K(Eigen::Index(i), Eigen::Index(i))).epsilon(1e-14));
  }
  for (Index d : bc.fixed_dofs) CHECK(diag[size_t(d)] == 1.0);

  // With a negligible void modulus, uniform density c scales free entries by c^p.
  MaterialModel hard{1.0, 1e-300, 0.3, 3.0};
  const std::vector<double> full(size_t(g.num_elements()), 1.0), half(size_t(g.num_elements()), 0.5);
  const auto dfull = jacobi_diagonal(g, hard, full, bc.fixed_dofs);
  const auto dhalf = jacobi_diagonal(g, hard, half, bc.fixed_dofs);
  const auto mask = bc.fixed_mask(g.num_dofs());
  for (size_t i = 0; i < dfull.size(); ++i)
    if (!mask[i]) CHECK(dhalf[i] == doctest::Approx(0.125 * dfull[i]).epsilon(1e-13));
}

TEST_CASE("apply result is independent of worker count") {
  std::mt19937_64 rng(9);
  const auto g = build_grid(8, 5, 4, {2, 1, 1});
  const auto bc = cantilever_preset(g, 1.0);
  const ElasticOperator op(g, MaterialModel{});
  const auto E = op.moduli(random_vector(size_t(g.num_elements()), 0, 1, rng));
  const auto u = random_vector(size_t(g.num_dofs()), -1, 1, rng);
  const auto mask = bc.fixed_mask(g.num_dofs());
  std::vector<double> y1(u.size()), y4(u.size());
  set_thread_count(1);
  op.apply(E, u, mask, y1);
  set_thread_count(4);
  op.apply(E, u, mask, y4);
  set_thread_count(0);
  CHECK(y1 == y4);
}
