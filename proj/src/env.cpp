#include "ttpinv/env.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ttpinv {

namespace {

void check_core4(const DenseTensor& c, const char* who) {
  if (c.order() != 4)
    throw std::invalid_argument(std::string(who) + ": expected a 4th-order core, got " +
                                c.shape_str());
}

void check_mode_match(const DenseTensor& p, const DenseTensor& a) {
  if (p.dim(1) != a.dim(1) || p.dim(2) != a.dim(2))
    throw std::invalid_argument("env: core mode sizes differ, " + p.shape_str() +
                                " vs " + a.shape_str());
}

}  // namespace

SiteBlocks site_blocks(const DenseTensor& p, const DenseTensor& a) {
  check_core4(p, "site_blocks");
  check_core4(a, "site_blocks");
  check_mode_match(p, a);

  // T1[r,j,rho,s,j',sigma]   = sum_i  P[r,i,j,rho] A[s,i,j',sigma]
  // T2[s',j',sigma',t,j,tau] = sum_i' A[s',i',j',sigma'] P[t,i',j,tau]
  DenseTensor t1 = contract(p, {1}, a, {1});
  DenseTensor t2 = contract(a, {1}, p, {1});
  // Z1[(r,rho,s,sigma),(s',sigma',t,tau)] over shared j, j'.
  DenseTensor z = contract(t1, {1, 4}, t2, {4, 1});
  // Kronecker flattening (P, A, A, P) with the last factor fastest:
  // row = (t, s', s, r) little-endian, col analogous.
  DenseTensor z1 = permute(z, {6, 4, 2, 0, 7, 5, 3, 1});
  const std::size_t rr = p.dim(0) * a.dim(0);
  const std::size_t rc = p.dim(3) * a.dim(3);
  SiteBlocks out;
  out.z1 = std::move(z1).reshaped({rr * rr, rc * rc});

  DenseTensor z2 = contract(p, {1, 2}, a, {1, 2});  // (r, rho, s, sigma)
  out.z2 = permute(z2, {2, 0, 3, 1}).reshaped({rr, rc});
  return out;
}

DenseTensor env_as_z_vector(const DenseTensor& env) {
  if (env.order() == 2) return permute(env, {1, 0}).reshaped({env.size()});
  if (env.order() == 4)
    return permute(env, {3, 2, 1, 0}).reshaped({env.size()});
  throw std::invalid_argument("env_as_z_vector: expected order 2 or 4, got " +
                              env.shape_str());
}

DenseTensor scalar_env1() {
  DenseTensor e({1, 1, 1, 1});
  e[0] = 1.0;
  return e;
}

DenseTensor scalar_env2() {
  DenseTensor e({1, 1});
  e[0] = 1.0;
  return e;
}

DenseTensor advance_left_l1(const DenseTensor& l1, const DenseTensor& p,
                            const DenseTensor& a) {
  check_core4(p, "advance_left_l1");
  check_core4(a, "advance_left_l1");
  // L1'[rho,sigma,sigma',tau]
  //   = sum L1[r,s,s',t] P[r,i,j,rho] A[s,i,j',sigma] A[s',i',j',sigma'] P[t,i',j,tau]
  DenseTensor u = contract(l1, {0}, p, {0});        // (s,s',t,i,j,rho)
  u = contract(u, {0, 3}, a, {0, 1});               // (s',t,j,rho,j',sigma)
  u = contract(u, {0, 4}, a, {0, 2});               // (t,j,rho,sigma,i',sigma')
  u = contract(u, {0, 4, 1}, p, {0, 1, 2});         // (rho,sigma,sigma',tau)
  return u;
}

DenseTensor advance_left_l2(const DenseTensor& l2, const DenseTensor& p,
                            const DenseTensor& a) {
  DenseTensor u = contract(l2, {0}, p, {0});        // (s,i,j,rho)
  return contract(u, {0, 1, 2}, a, {0, 1, 2});      // (rho,sigma)
}

DenseTensor advance_right_r1(const DenseTensor& r1, const DenseTensor& p,
                             const DenseTensor& a) {
  check_core4(p, "advance_right_r1");
  check_core4(a, "advance_right_r1");
  // R1'[r,s,s',t]
  //   = sum P[r,i,j,rho] A[s,i,j',sigma] A[s',i',j',sigma'] P[t,i',j,tau] R1[rho,sigma,sigma',tau]
  DenseTensor w = contract(p, {3}, r1, {0});        // (r,i,j,sigma,sigma',tau)
  w = contract(w, {1, 3}, a, {1, 3});               // (r,j,sigma',tau,s,j')
  w = contract(w, {5, 2}, a, {2, 3});               // (r,j,tau,s,s',i')
  w = contract(w, {5, 1, 2}, p, {1, 2, 3});         // (r,s,s',t)
  return w;
}

DenseTensor advance_right_r2(const DenseTensor& r2, const DenseTensor& p,
                             const DenseTensor& a) {
  DenseTensor w = contract(p, {3}, r2, {0});        // (r,i,j,sigma)
  return contract(w, {1, 2, 3}, a, {1, 2, 3});      // (r,s)
}

EnvBlocks EnvBlocks::boundaries(std::size_t n_sites) {
  EnvBlocks env;
  env.l1.resize(n_sites + 1);
  env.l2.resize(n_sites + 1);
  env.r1.resize(n_sites + 1);
  env.r2.resize(n_sites + 1);
  env.l1[0] = scalar_env1();
  env.l2[0] = scalar_env2();
  env.r1[n_sites] = scalar_env1();
  env.r2[n_sites] = scalar_env2();
  return env;
}

void EnvBlocks::update_left(std::size_t m, const DenseTensor& p_core,
                            const DenseTensor& a_core) {
  if (m + 1 >= l1.size() || l1[m].order() == 0)
    throw std::invalid_argument("EnvBlocks::update_left: missing predecessor at " +
                                std::to_string(m));
  l1[m + 1] = advance_left_l1(l1[m], p_core, a_core);
  l2[m + 1] = advance_left_l2(l2[m], p_core, a_core);
}

void EnvBlocks::update_right(std::size_t m, const DenseTensor& p_core,
                             const DenseTensor& a_core) {
  if (m + 1 >= r1.size() || r1[m + 1].order() == 0)
    throw std::invalid_argument("EnvBlocks::update_right: missing successor at " +
                                std::to_string(m + 1));
  r1[m] = advance_right_r1(r1[m + 1], p_core, a_core);
  r2[m] = advance_right_r2(r2[m + 1], p_core, a_core);
}

std::vector<double> assemble_local_rhs(const DenseTensor& l2,
                                       const DenseTensor& r2,
                                       const DenseTensor& a_left,
                                       const DenseTensor& a_right) {
  if (l2.order() != 2 || r2.order() != 2)
    throw std::invalid_argument("assemble_local_rhs: missing environments");
  DenseTensor b = contract(l2, {1}, a_left, {0});   // (r, i1, j1, sm)
  b = contract(b, {3}, a_right, {0});               // (r, i1, j1, i2, j2, sb)
  b = contract(b, {5}, r2, {1});                    // (r, i1, j1, i2, j2, r2)
  return std::move(b.values());
}

LocalProblem::LocalProblem(DenseTensor l1, DenseTensor r1, DenseTensor l2,
                           DenseTensor r2, DenseTensor a_left,
                           DenseTensor a_right, double lambda, std::size_t site)
    : l1_(std::move(l1)),
      r1_(std::move(r1)),
      a_left_(std::move(a_left)),
      a_right_(std::move(a_right)),
      lambda_(lambda),
      site_(site) {
  check_core4(a_left_, "LocalProblem");
  check_core4(a_right_, "LocalProblem");
  if (l1_.order() != 4 || r1_.order() != 4)
    throw std::invalid_argument("LocalProblem: environments must be 4th-order");
  if (l1_.dim(1) != a_left_.dim(0) || a_left_.dim(3) != a_right_.dim(0) ||
      r1_.dim(1) != a_right_.dim(3))
    throw std::invalid_argument("LocalProblem: rank chain mismatch: L1 " +
                                l1_.shape_str() + ", A_n " + a_left_.shape_str() +
                                ", A_n+1 " + a_right_.shape_str() + ", R1 " +
                                r1_.shape_str());
  x_shape_ = {l1_.dim(0),    a_left_.dim(1),  a_left_.dim(2),
              a_right_.dim(1), a_right_.dim(2), r1_.dim(0)};
  dim_ = 1;
  for (std::size_t d : x_shape_) dim_ *= d;
  rhs_ = assemble_local_rhs(l2, r2, a_left_, a_right_);
  if (rhs_.size() != dim_)
    throw std::invalid_argument("LocalProblem: rhs size mismatch");
}

std::vector<double> LocalProblem::apply(std::span<const double> x) const {
  if (x.size() != dim_)
    throw std::invalid_argument("LocalProblem::apply: input length " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(dim_));
  for (double v : x)
    if (!std::isfinite(v))
      throw std::invalid_argument("LocalProblem::apply: non-finite input");

  DenseTensor xt(x_shape_, std::vector<double>(x.begin(), x.end()));
  // Staging follows the left-to-right network contraction: L1 first, then
  // the site-n operator pair, the site-(n+1) pair, then R1.
  DenseTensor t = contract(l1_, {0}, xt, {0});      // (s,s',t,i1,j1,i2,j2,r2)
  t = contract(t, {0, 3}, a_left_, {0, 1});         // (s',t,j1,i2,j2,r2,j1',sm)
  t = contract(t, {0, 6}, a_left_, {0, 2});         // (t,j1,i2,j2,r2,sm,i1',sm')
  t = contract(t, {5, 2}, a_right_, {0, 1});        // (t,j1,j2,r2,i1',sm',j2',sb)
  t = contract(t, {5, 6}, a_right_, {0, 2});        // (t,j1,j2,r2,i1',sb,i2',sb')
  t = contract(t, {3, 5, 7}, r1_, {0, 1, 2});       // (t,j1,j2,i1',i2',t2)
  t = permute(t, {0, 3, 1, 4, 2, 5});               // (t,i1',j1,i2',j2,t2)
  return std::move(t.values());
}

}  // namespace ttpinv
