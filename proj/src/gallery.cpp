#include "ttpinv/gallery.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ttpinv {

namespace {

constexpr double kPi = 3.14159265358979323846;

DenseTensor slice_e01() {  // row 0, col 1
  DenseTensor m({2, 2});
  m(0, 1) = 1.0;
  return m;
}

DenseTensor slice_e10() {  // row 1, col 0
  DenseTensor m({2, 2});
  m(1, 0) = 1.0;
  return m;
}

void put_slice(DenseTensor& core, std::size_t s_in, std::size_t s_out,
               const DenseTensor& m) {
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t i = 0; i < 2; ++i) core(s_in, i, j, s_out) = m(i, j);
}

// Embed a train over `m_sites` sites into `n_sites` total, placing it at
// site offset `at` with identity cores elsewhere.
TTMatrix embed(const TTMatrix& op, std::size_t n_sites, std::size_t at) {
  std::vector<DenseTensor> cores;
  cores.reserve(n_sites);
  for (std::size_t n = 0; n < n_sites; ++n) {
    if (n >= at && n < at + op.order()) {
      cores.push_back(op.core(n - at));
    } else {
      DenseTensor c({1, 2, 2, 1});
      c(0, 0, 0, 0) = 1.0;
      c(0, 1, 1, 0) = 1.0;
      cores.push_back(std::move(c));
    }
  }
  return TTMatrix(std::move(cores));
}

double convection_default_c(std::size_t n_sites) {
  return std::pow(2.0, static_cast<double>(n_sites) - 10.0);
}

}  // namespace

void ProblemSpec::validate() const {
  switch (family) {
    case Family::circulant_prescribed:
      if (b_param <= 0.0)
        throw std::invalid_argument("circulant: B must be positive");
      if (n < 2 || n > 11)
        throw std::invalid_argument(
            "circulant: N must be in [2, 11] (dense construction guard)");
      break;
    case Family::random_svd:
      if (!(k0 > 0.0 && k0 <= 1.0))
        throw std::invalid_argument("random-svd: K0 must be in (0, 1]");
      if (n < 2) throw std::invalid_argument("random-svd: N must be >= 2");
      break;
    case Family::laplace:
      if (n < 2) throw std::invalid_argument("laplace: N must be >= 2");
      break;
    case Family::convection_diffusion:
      if (n < 1 || n > 8)
        throw std::invalid_argument(
            "convection: M must be in [1, 8] (dense solution guard)");
      break;
  }
}

std::string ProblemSpec::describe() const {
  std::ostringstream os;
  switch (family) {
    case Family::circulant_prescribed:
      os << "family: circulant\nN: " << n << "\nB: " << b_param << "\n";
      break;
    case Family::random_svd:
      os << "family: random-svd\nN: " << n << "\nK0: " << k0
         << "\nseed: " << seed << "\n";
      break;
    case Family::laplace:
      os << "family: laplace\nN: " << n << "\n";
      break;
    case Family::convection_diffusion:
      os << "family: convection\nM: " << n << "\nN: " << 3 * n
         << "\nc: " << c_override.value_or(convection_default_c(3 * n)) << "\n";
      break;
  }
  return os.str();
}

TTMatrix gen_shift_lower(std::size_t n_sites) {
  if (n_sites == 0) throw std::invalid_argument("gen_shift_lower: empty train");
  const DenseTensor d = slice_e01();  // carry keeps propagating
  const DenseTensor u = slice_e10();  // carry absorbed
  const DenseTensor eye = DenseTensor::identity(2);
  if (n_sites == 1) {
    DenseTensor c({1, 2, 2, 1});
    put_slice(c, 0, 0, u);
    return TTMatrix({std::move(c)});
  }
  std::vector<DenseTensor> cores;
  cores.reserve(n_sites);
  {
    DenseTensor first({1, 2, 2, 2});
    put_slice(first, 0, 0, d);
    put_slice(first, 0, 1, u);
    cores.push_back(std::move(first));
  }
  for (std::size_t n = 1; n + 1 < n_sites; ++n) {
    DenseTensor mid({2, 2, 2, 2});
    put_slice(mid, 0, 0, d);
    put_slice(mid, 0, 1, u);
    put_slice(mid, 1, 1, eye);
    cores.push_back(std::move(mid));
  }
  {
    DenseTensor last({2, 2, 2, 1});
    put_slice(last, 0, 0, u);
    put_slice(last, 1, 0, eye);
    cores.push_back(std::move(last));
  }
  return TTMatrix(std::move(cores));
}

TTMatrix gen_laplace(std::size_t n_sites) {
  if (n_sites < 2) throw std::invalid_argument("gen_laplace: N must be >= 2");
  std::vector<std::size_t> modes(n_sites, 2);
  TTMatrix eye = TTMatrix::identity(modes);
  TTMatrix shift = gen_shift_lower(n_sites);
  TTMatrix a = tt_axpby(2.0, eye, -1.0, shift);
  a = tt_axpby(1.0, a, -1.0, tt_transpose(shift));
  return tt_round(a, 1e-13);
}

TTMatrix gen_circulant_prescribed(std::size_t n_sites, double b_param) {
  ProblemSpec spec;
  spec.family = Family::circulant_prescribed;
  spec.n = n_sites;
  spec.b_param = b_param;
  spec.validate();

  const std::size_t j_total = std::size_t{1} << n_sites;
  std::vector<double> sigma(j_total);
  for (std::size_t j = 0; j < j_total; ++j) {
    const double x = std::abs(static_cast<double>(j) / static_cast<double>(j_total) - 0.5);
    sigma[j] = std::max(0.0, x + b_param - 0.5) / b_param;
  }

  // Inverse transform of the even spectrum; the imaginary part vanishes.
  std::vector<double> c(j_total, 0.0);
  double max_imag = 0.0;
  for (std::size_t k = 0; k < j_total; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t j = 0; j < j_total; ++j) {
      const double phi = 2.0 * kPi * static_cast<double>(j) *
                         static_cast<double>(k) / static_cast<double>(j_total);
      re += sigma[j] * std::cos(phi);
      im += sigma[j] * std::sin(phi);
    }
    c[k] = re / static_cast<double>(j_total);
    max_imag = std::max(max_imag, std::abs(im) / static_cast<double>(j_total));
  }
  if (max_imag > 1e-10)
    throw std::runtime_error("gen_circulant_prescribed: spectrum not symmetric");

  const double w = 1.0 / std::sqrt(2.0);
  DenseTensor a({2 * j_total, j_total});
  for (std::size_t col = 0; col < j_total; ++col)
    for (std::size_t row = 0; row < j_total; ++row) {
      const double v = w * c[(row + j_total - col) % j_total];
      a(row, col) = v;
      a(row + j_total, col) = v;
    }

  std::vector<std::size_t> rows(n_sites + 1, 2);
  std::vector<std::size_t> cols(n_sites + 1, 2);
  cols[n_sites] = 1;
  const double delta = 1e-12 * fro_norm(a) /
                       std::sqrt(static_cast<double>(n_sites));
  return tt_matrix_from_dense(a, rows, cols, delta);
}

TTMatrix gen_random_svd(std::size_t n_sites, double k0, std::uint64_t seed) {
  ProblemSpec spec;
  spec.family = Family::random_svd;
  spec.n = n_sites;
  spec.k0 = k0;
  spec.validate();

  NormalRng rng(seed);
  const double j_total = std::pow(2.0, static_cast<double>(n_sites));
  std::vector<DenseTensor> cores;
  cores.reserve(n_sites);
  for (std::size_t n = 0; n < n_sites; ++n) {
    auto haar_o2 = [&rng]() {
      const double theta = 2.0 * kPi * rng.uniform01();
      const bool reflect = rng.uniform01() < 0.5;
      DenseTensor q({2, 2});
      q(0, 0) = std::cos(theta);
      q(1, 0) = std::sin(theta);
      if (reflect) {
        q(0, 1) = std::sin(theta);
        q(1, 1) = -std::cos(theta);
      } else {
        q(0, 1) = -std::sin(theta);
        q(1, 1) = std::cos(theta);
      }
      return q;
    };
    DenseTensor u = haar_o2();
    DenseTensor v = haar_o2();
    const double decay =
        std::pow(10.0, -std::pow(2.0, static_cast<double>(n)) / (j_total * k0));
    DenseTensor ud({2, 2});
    for (std::size_t i = 0; i < 2; ++i) {
      ud(i, 0) = u(i, 0);
      ud(i, 1) = u(i, 1) * decay;
    }
    DenseTensor g = matmul(ud, v, false, true);  // U diag(1, decay) V^T
    DenseTensor core({1, 2, 2, 1});
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t i = 0; i < 2; ++i) core(0, i, j, 0) = g(i, j);
    cores.push_back(std::move(core));
  }
  return TTMatrix(std::move(cores));
}

ConvectionDiffusionProblem gen_convection_diffusion(
    std::size_t m_sites, std::optional<double> c_override) {
  ProblemSpec spec;
  spec.family = Family::convection_diffusion;
  spec.n = m_sites;
  spec.validate();

  const std::size_t n_sites = 3 * m_sites;
  const std::size_t grid = std::size_t{1} << m_sites;  // interior points per axis
  const double h = 1.0 / static_cast<double>(grid + 1);
  const double c = c_override.value_or(convection_default_c(n_sites));

  std::vector<std::size_t> axis_modes(m_sites, 2);
  TTMatrix eye_axis = TTMatrix::identity(axis_modes);
  TTMatrix shift = gen_shift_lower(m_sites);
  TTMatrix lap1 = tt_axpby(2.0, eye_axis, -1.0, shift);
  lap1 = tt_round(tt_axpby(1.0, lap1, -1.0, tt_transpose(shift)), 1e-13);

  // -h^2 (u_xx + u_yy + u_zz + c u_x) with central differences:
  // sum over axes of tridiag(-1,2,-1) plus (c h / 2)(S - S^T) on the x axis.
  TTMatrix a = embed(lap1, n_sites, 0);
  a = tt_axpby(1.0, a, 1.0, embed(lap1, n_sites, m_sites));
  a = tt_axpby(1.0, a, 1.0, embed(lap1, n_sites, 2 * m_sites));
  TTMatrix conv =
      tt_axpby(1.0, embed(shift, n_sites, 0), -1.0,
               embed(tt_transpose(shift), n_sites, 0));
  a = tt_axpby(1.0, a, c * h / 2.0, conv);
  a = tt_round(a, 1e-13);

  // Manufactured right-hand side from the exact solution on the interior grid.
  DenseTensor u(std::vector<std::size_t>(n_sites, 2));
  {
    auto coord = [h](std::size_t idx) {
      return h * static_cast<double>(idx + 1);
    };
    std::vector<double>& vals = u.values();
    for (std::size_t lin = 0; lin < vals.size(); ++lin) {
      const std::size_t ix = lin % grid;
      const std::size_t iy = (lin / grid) % grid;
      const std::size_t iz = lin / (grid * grid);
      const double x = coord(ix), y = coord(iy), z = coord(iz);
      vals[lin] = std::exp(x * y * z) * std::sin(kPi * x) * std::sin(kPi * y) *
                  std::sin(kPi * z);
    }
  }
  const double u_delta = 1e-13 * fro_norm(u) /
                         std::sqrt(static_cast<double>(n_sites - 1));
  TTVector u_tt = tt_from_dense(u, u_delta);
  TTVector b = tt_round(tt_matvec(a, u_tt), 1e-13);

  return ConvectionDiffusionProblem{std::move(a), std::move(b), c, h};
}

GeneratedProblem generate(const ProblemSpec& spec) {
  spec.validate();
  GeneratedProblem out;
  out.metadata = spec.describe();
  switch (spec.family) {
    case Family::circulant_prescribed:
      out.a = gen_circulant_prescribed(spec.n, spec.b_param);
      break;
    case Family::random_svd:
      out.a = gen_random_svd(spec.n, spec.k0, spec.seed);
      break;
    case Family::laplace:
      out.a = gen_laplace(spec.n);
      break;
    case Family::convection_diffusion: {
      auto prob = gen_convection_diffusion(spec.n, spec.c_override);
      out.a = std::move(prob.a);
      out.b = std::move(prob.b);
      break;
    }
  }
  return out;
}

}  // namespace ttpinv
