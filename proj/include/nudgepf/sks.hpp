#pragma once

#include <functional>

#include "nudgepf/model.hpp"
#include "nudgepf/rng.hpp"

namespace nudgepf {

/// Stochastic Kuramoto-Sivashinsky parameters,
///   du + (alpha u_xxxx + beta u_xx + gamma u u_x) dt = c dW  on a periodic [0, L].
struct SksParams {
  double L = 4.0;
  int n_cells = 100;
  double alpha = 0.03;
  double beta = 1.1;
  double gamma = 1.0;
  double c = 2.5;
  double eta = 5.0;
  double dt = 0.01;
  double newton_tol = 1e-9;
  int newton_max_iter = 30;
  int n_obs = 10;

  void validate() const;
};

/// Uniform periodic mesh with continuous P2 elements.
///
/// Global dof 2i is vertex i (x = i h), dof 2i+1 the midpoint of cell i, so
/// dof k sits at x = k h / 2. Cell i owns dofs (2i, 2i+1, 2i+2 mod 2n).
class PeriodicP2Mesh {
 public:
  PeriodicP2Mesh(double length, int n_cells);

  int n_cells() const { return n_cells_; }
  int n_dofs() const { return 2 * n_cells_; }
  double length() const { return length_; }
  double h() const { return length_ / n_cells_; }

  /// Global index of local dof a in {0, 1, 2} of cell i.
  int dof(int cell, int a) const { return (2 * cell + a) % n_dofs(); }
  double dof_coordinate(int k) const { return 0.5 * k * h(); }

 private:
  double length_;
  int n_cells_;
};

/// Reference P2 basis on [0, 1] with nodes 0, 1/2, 1.
double p2_basis(int a, double xi);
double p2_basis_dxi(int a, double xi);

Matrix assemble_mass(const PeriodicP2Mesh& mesh);
/// (u_x, v_x)
Matrix assemble_stiffness(const PeriodicP2Mesh& mesh);
/// C0 interior-penalty form
///   (u_xx, v_xx) + <{u_xx}, [v_x]> + <{v_xx}, [u_x]> + (eta/h) <[u_x], [v_x]>
/// with averages and jumps at every (periodic) vertex.
Matrix assemble_cip(const PeriodicP2Mesh& mesh, double eta);

/// Entries -int (gamma/2) u_h^2 v_x dx for every basis function v.
Vector nonlinear_form(const Vector& u, const PeriodicP2Mesh& mesh, double gamma);
/// Jacobian of nonlinear_form with respect to u.
Matrix nonlinear_jacobian(const Vector& u, const PeriodicP2Mesh& mesh, double gamma);

/// Cellwise-constant noise load h^{-1/2} sum_i (int_cell_i v dx) dW_i.
/// Throws std::invalid_argument if dW.size() != n_cells.
Vector noise_projection(const PeriodicP2Mesh& mesh, const Vector& dW);
/// The same map as a (n_dofs x n_cells) matrix.
Matrix noise_projection_matrix(const PeriodicP2Mesh& mesh);

/// Rows evaluate u_h at the given points (wrapped into [0, L)).
Matrix point_evaluation_matrix(const PeriodicP2Mesh& mesh, const std::vector<double>& points);

/// Nodal interpolant of f.
Vector interpolate(const PeriodicP2Mesh& mesh, const std::function<double(double)>& f);

/// Initial profile used before spin-up (sum of two sech-type bumps).
double sks_initial_profile(double x);

/// Implicit-midpoint P2/CIP discretisation, solved with Newton's method.
class SksModel final : public Model {
 public:
  explicit SksModel(const SksParams& p);

  std::string_view name() const override { return "sks"; }
  Eigen::Index state_dim() const override { return mesh_.n_dofs(); }
  Eigen::Index noise_dim() const override { return mesh_.n_cells(); }
  Eigen::Index obs_dim() const override { return H_.rows(); }
  double dt() const override { return p_.dt; }

  Vector step(const Vector& u, const Vector& increment) const override;
  StepAdjoint step_adjoint(const Vector& u, const Vector& u_next, const Vector& increment,
                           const Vector& adj_next) const override;
  Vector observe(const Vector& u) const override { return H_ * u; }
  Vector observe_adjoint(const Vector& dh) const override { return H_.transpose() * dh; }

  /// Midpoint residual; zero at the accepted u_next.
  Vector residual(const Vector& u_next, const Vector& u, const Vector& increment) const;
  /// d residual / d u_next.
  Matrix jacobian(const Vector& u_next, const Vector& u) const;

  const SksParams& params() const { return p_; }
  const PeriodicP2Mesh& mesh() const { return mesh_; }
  const Matrix& mass() const { return M_; }
  const Matrix& cip() const { return A_; }
  const Matrix& stiffness() const { return S_; }
  const Matrix& observation_matrix() const { return H_; }
  const std::vector<double>& obs_points() const { return obs_points_; }

  /// Newton iterations used by the most recent call on this thread.
  static int last_newton_iterations();

 private:
  SksParams p_;
  PeriodicP2Mesh mesh_;
  Matrix M_, S_, A_;
  Matrix linear_;  // -beta S + alpha A
  Matrix B_;       // noise projection
  Matrix H_;       // observation
  std::vector<double> obs_points_;
};

/// Interpolate the initial profile and advance `steps` stochastic steps.
ModelState spin_up_initial(const SksParams& p, int steps, RngStream& stream);

}  // namespace nudgepf
