#include "nudgepf/sks.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nudgepf {
namespace {

// 4-point Gauss-Legendre on [0, 1]; exact to degree 7.
struct Gauss4 {
  std::array<double, 4> x;
  std::array<double, 4> w;
};

const Gauss4& gauss4() {
  static const Gauss4 rule = [] {
    const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
    const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
    Gauss4 g{{0.5 * (1 - b), 0.5 * (1 - a), 0.5 * (1 + a), 0.5 * (1 + b)},
             {0.5 * wb, 0.5 * wa, 0.5 * wa, 0.5 * wb}};
    return g;
  }();
  return rule;
}

thread_local int g_last_newton_iterations = 0;

}  // namespace

void SksParams::validate() const {
  if (n_cells < 4) throw std::invalid_argument("SksParams: n_cells must be >= 4");
  if (!(eta > 0.0)) throw std::invalid_argument("SksParams: eta must be positive");
  if (!(L > 0.0) || !(dt > 0.0)) throw std::invalid_argument("SksParams: L and dt must be positive");
  if (!(newton_tol > 0.0) || newton_max_iter < 1) {
    throw std::invalid_argument("SksParams: invalid Newton settings");
  }
  if (n_obs < 1) throw std::invalid_argument("SksParams: need at least one observation point");
}

PeriodicP2Mesh::PeriodicP2Mesh(double length, int n_cells) : length_(length), n_cells_(n_cells) {
  if (n_cells < 4) throw std::invalid_argument("PeriodicP2Mesh: n_cells must be >= 4");
  if (!(length > 0.0)) throw std::invalid_argument("PeriodicP2Mesh: length must be positive");
}

double p2_basis(int a, double xi) {
  switch (a) {
    case 0: return (1.0 - xi) * (1.0 - 2.0 * xi);
    case 1: return 4.0 * xi * (1.0 - xi);
    default: return xi * (2.0 * xi - 1.0);
  }
}

double p2_basis_dxi(int a, double xi) {
  switch (a) {
    case 0: return 4.0 * xi - 3.0;
    case 1: return 4.0 - 8.0 * xi;
    default: return 4.0 * xi - 1.0;
  }
}

Matrix assemble_mass(const PeriodicP2Mesh& mesh) {
  const double h = mesh.h();
  const double local[3][3] = {{4, 2, -1}, {2, 16, 2}, {-1, 2, 4}};
  Matrix M = Matrix::Zero(mesh.n_dofs(), mesh.n_dofs());
  for (int i = 0; i < mesh.n_cells(); ++i) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) M(mesh.dof(i, a), mesh.dof(i, b)) += h / 30.0 * local[a][b];
    }
  }
  return M;
}

Matrix assemble_stiffness(const PeriodicP2Mesh& mesh) {
  const double h = mesh.h();
  const double local[3][3] = {{7, -8, 1}, {-8, 16, -8}, {1, -8, 7}};
  Matrix S = Matrix::Zero(mesh.n_dofs(), mesh.n_dofs());
  for (int i = 0; i < mesh.n_cells(); ++i) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) S(mesh.dof(i, a), mesh.dof(i, b)) += local[a][b] / (3.0 * h);
    }
  }
  return S;
}

Matrix assemble_cip(const PeriodicP2Mesh& mesh, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("assemble_cip: eta must be positive");
  const int n = mesh.n_cells();
  const int nd = mesh.n_dofs();
  const double h = mesh.h();
  Matrix A = Matrix::Zero(nd, nd);

  // Broken (u_xx, v_xx): u_xx is constant on a cell, (4, -8, 4) / h^2.
  const std::array<double, 3> second = {4.0, -8.0, 4.0};
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) A(mesh.dof(i, a), mesh.dof(i, b)) += second[a] * second[b] / (h * h * h);
    }
  }

  // Vertex i joins cell i-1 (dofs 2i-2, 2i-1, 2i) and cell i (2i, 2i+1, 2i+2).
  const std::array<double, 5> jump = {-1.0 / h, 4.0 / h, -6.0 / h, 4.0 / h, -1.0 / h};
  const std::array<double, 5> avg = {2.0 / (h * h), -4.0 / (h * h), 4.0 / (h * h),
                                     -4.0 / (h * h), 2.0 / (h * h)};
  for (int v = 0; v < n; ++v) {
    std::array<int, 5> d{};
    for (int k = 0; k < 5; ++k) d[k] = ((2 * v - 2 + k) % nd + nd) % nd;
    for (int a = 0; a < 5; ++a) {
      for (int b = 0; b < 5; ++b) {
        A(d[a], d[b]) += avg[a] * jump[b] + jump[a] * avg[b] + eta / h * jump[a] * jump[b];
      }
    }
  }
  return A;
}

Vector nonlinear_form(const Vector& u, const PeriodicP2Mesh& mesh, double gamma) {
  const auto& q = gauss4();
  Vector out = Vector::Zero(mesh.n_dofs());
  for (int i = 0; i < mesh.n_cells(); ++i) {
    const double u0 = u[mesh.dof(i, 0)], u1 = u[mesh.dof(i, 1)], u2 = u[mesh.dof(i, 2)];
    for (int k = 0; k < 4; ++k) {
      const double xi = q.x[k];
      const double uq = u0 * p2_basis(0, xi) + u1 * p2_basis(1, xi) + u2 * p2_basis(2, xi);
      // h (quadrature) cancels 1/h (derivative).
      const double coef = -0.5 * gamma * uq * uq * q.w[k];
      for (int a = 0; a < 3; ++a) out[mesh.dof(i, a)] += coef * p2_basis_dxi(a, xi);
    }
  }
  return out;
}

Matrix nonlinear_jacobian(const Vector& u, const PeriodicP2Mesh& mesh, double gamma) {
  const auto& q = gauss4();
  Matrix J = Matrix::Zero(mesh.n_dofs(), mesh.n_dofs());
  for (int i = 0; i < mesh.n_cells(); ++i) {
    const double u0 = u[mesh.dof(i, 0)], u1 = u[mesh.dof(i, 1)], u2 = u[mesh.dof(i, 2)];
    for (int k = 0; k < 4; ++k) {
      const double xi = q.x[k];
      const double uq = u0 * p2_basis(0, xi) + u1 * p2_basis(1, xi) + u2 * p2_basis(2, xi);
      const double coef = -gamma * uq * q.w[k];
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          J(mesh.dof(i, a), mesh.dof(i, b)) += coef * p2_basis_dxi(a, xi) * p2_basis(b, xi);
        }
      }
    }
  }
  return J;
}

Matrix noise_projection_matrix(const PeriodicP2Mesh& mesh) {
  const double h = mesh.h();
  const double scale = h / std::sqrt(h);
  const std::array<double, 3> cell_integral = {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0};
  Matrix B = Matrix::Zero(mesh.n_dofs(), mesh.n_cells());
  for (int i = 0; i < mesh.n_cells(); ++i) {
    for (int a = 0; a < 3; ++a) B(mesh.dof(i, a), i) += scale * cell_integral[a];
  }
  return B;
}

Vector noise_projection(const PeriodicP2Mesh& mesh, const Vector& dW) {
  if (dW.size() != mesh.n_cells()) {
    throw std::invalid_argument("noise_projection: need one increment per cell");
  }
  return noise_projection_matrix(mesh) * dW;
}

Matrix point_evaluation_matrix(const PeriodicP2Mesh& mesh, const std::vector<double>& points) {
  Matrix H = Matrix::Zero(static_cast<Eigen::Index>(points.size()), mesh.n_dofs());
  const double L = mesh.length();
  for (std::size_t j = 0; j < points.size(); ++j) {
    double x = std::fmod(points[j], L);
    if (x < 0) x += L;
    const double s = x / mesh.h();
    int cell = static_cast<int>(std::floor(s));
    if (cell >= mesh.n_cells()) cell = mesh.n_cells() - 1;
    const double xi = s - cell;
    for (int a = 0; a < 3; ++a) {
      H(static_cast<Eigen::Index>(j), mesh.dof(cell, a)) += p2_basis(a, xi);
    }
  }
  return H;
}

Vector interpolate(const PeriodicP2Mesh& mesh, const std::function<double(double)>& f) {
  Vector u(mesh.n_dofs());
  for (int k = 0; k < mesh.n_dofs(); ++k) u[k] = f(mesh.dof_coordinate(k));
  return u;
}

double sks_initial_profile(double x) {
  const double c1 = 403.0 / 15.0;
  const double c2 = 203.0 / 15.0;
  return 0.4 / (std::exp(x - c1) + std::exp(-x + c1)) + 1.0 / (std::exp(x - c2) + std::exp(-x + c2));
}

SksModel::SksModel(const SksParams& p) : p_(p), mesh_(p.L, p.n_cells) {
  p_.validate();
  M_ = assemble_mass(mesh_);
  S_ = assemble_stiffness(mesh_);
  A_ = assemble_cip(mesh_, p_.eta);
  linear_ = -p_.beta * S_ + p_.alpha * A_;
  B_ = noise_projection_matrix(mesh_);
  for (int j = 0; j < p_.n_obs; ++j) obs_points_.push_back(j * p_.L / p_.n_obs);
  H_ = point_evaluation_matrix(mesh_, obs_points_);
}

int SksModel::last_newton_iterations() { return g_last_newton_iterations; }

Vector SksModel::residual(const Vector& u_next, const Vector& u, const Vector& increment) const {
  const Vector mid = 0.5 * (u + u_next);
  return M_ * (u_next - u) + p_.dt * (linear_ * mid + nonlinear_form(mid, mesh_, p_.gamma)) -
         p_.c * (B_ * increment);
}

Matrix SksModel::jacobian(const Vector& u_next, const Vector& u) const {
  const Vector mid = 0.5 * (u + u_next);
  return M_ + 0.5 * p_.dt * (linear_ + nonlinear_jacobian(mid, mesh_, p_.gamma));
}

Vector SksModel::step(const Vector& u, const Vector& increment) const {
  Vector u_next = u;
  Vector r = residual(u_next, u, increment);
  double rnorm = r.norm();
  int it = 0;
  while (rnorm >= p_.newton_tol) {
    if (it == p_.newton_max_iter || !std::isfinite(rnorm)) {
      g_last_newton_iterations = it;
      std::ostringstream msg;
      msg << "SKS Newton solve did not converge: residual " << rnorm << " after " << it
          << " iterations";
      throw PropagationError(msg.str(), 0);
    }
    u_next -= jacobian(u_next, u).partialPivLu().solve(r);
    r = residual(u_next, u, increment);
    rnorm = r.norm();
    ++it;
  }
  g_last_newton_iterations = it;
  return u_next;
}

StepAdjoint SksModel::step_adjoint(const Vector& u, const Vector& u_next,
                                   const Vector& /*increment*/, const Vector& adj_next) const {
  const Vector mid = 0.5 * (u + u_next);
  const Matrix spatial = 0.5 * p_.dt * (linear_ + nonlinear_jacobian(mid, mesh_, p_.gamma));
  const Matrix j_new = M_ + spatial;
  const Eigen::PartialPivLU<Matrix> lu(j_new.transpose());
  const Vector mu = lu.solve(adj_next);
  if (!mu.allFinite()) throw GradientError("SKS adjoint solve produced non-finite values");
  StepAdjoint sa;
  sa.state = -((spatial - M_).transpose() * mu);
  sa.increment = p_.c * (B_.transpose() * mu);
  return sa;
}

ModelState spin_up_initial(const SksParams& p, int steps, RngStream& stream) {
  SksModel model(p);
  Vector u = interpolate(model.mesh(), sks_initial_profile);
  for (int s = 0; s < steps; ++s) {
    const Vector dW = sample_brownian(stream, model.noise_dim(), p.dt);
    try {
      u = model.step(u, dW);
    } catch (const PropagationError& e) {
      throw PropagationError(e.what(), s + 1);
    }
  }
  return ModelState{u, 0};
}

}  // namespace nudgepf
