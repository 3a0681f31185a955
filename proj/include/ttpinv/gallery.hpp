#pragma once

// Generators for the four experiment families, all emitted directly in TT
// form. Dense construction is used only where structure requires it
// (circulant spectra, manufactured right-hand sides) and stays behind the
// desk-scale guard.

#include <cstdint>
#include <optional>
#include <string>

#include "ttpinv/tt.hpp"

namespace ttpinv {

enum class Family {
  circulant_prescribed,
  random_svd,
  laplace,
  convection_diffusion,
};

struct ProblemSpec {
  Family family = Family::laplace;
  std::size_t n = 4;                 // sites (N = 3M for convection)
  double b_param = 0.5;              // circulant spectrum parameter B > 0
  double k0 = 0.5;                   // random-svd decay, 0 < K0 <= 1
  std::optional<double> c_override;  // convection coefficient
  std::uint64_t seed = 0;

  void validate() const;
  std::string describe() const;  // sidecar metadata text
};

// 2^N x 2^N tridiag(-1, 2, -1), rank <= 3 after rounding.
TTMatrix gen_laplace(std::size_t n_sites);

// Lower shift S (S[i,j] = 1 iff i = j + 1) as a rank-2 train; building block
// for the difference operators.
TTMatrix gen_shift_lower(std::size_t n_sites);

// 2^{N+1} x 2^N stack (1/sqrt(2)) [C; C] of a circulant with spectrum
// sigma_j = (1/B) max(0, |j/J - 0.5| + B - 0.5); dense IFFT construction,
// desk scale only.
TTMatrix gen_circulant_prescribed(std::size_t n_sites, double b_param);

// 2^N x 2^N product U Sigma V^T of Kronecker-orthogonal factors with
// sigma_j = 10^{-j/(J K0)}; all TT-ranks are 1.
TTMatrix gen_random_svd(std::size_t n_sites, double k0, std::uint64_t seed);

struct ConvectionDiffusionProblem {
  TTMatrix a;   // 2^{3M} x 2^{3M}
  TTVector b;   // manufactured right-hand side A u_exact
  double c;     // convection coefficient actually used
  double h;     // grid spacing
};

// h^2-scaled central-difference discretization of
// u_xx + u_yy + u_zz + c u_x on the unit cube, 2^M interior points per axis,
// Dirichlet boundaries; b is manufactured from the exact solution
// exp(xyz) sin(pi x) sin(pi y) sin(pi z).
ConvectionDiffusionProblem gen_convection_diffusion(
    std::size_t m_sites, std::optional<double> c_override = {});

struct GeneratedProblem {
  TTMatrix a;
  std::optional<TTVector> b;
  std::string metadata;
};

GeneratedProblem generate(const ProblemSpec& spec);

}  // namespace ttpinv
