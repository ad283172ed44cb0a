#include "branchsim/hamiltonian.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <numbers>
#include <sstream>

namespace branchsim {

Eigen::VectorXd Grid1D::positions() const {
  Eigen::VectorXd xs(n);
  for (Eigen::Index i = 0; i < n; ++i) xs[i] = x(i);
  return xs;
}

Operator pauli_x() {
  Operator s(2, 2);
  s << 0, 1, 1, 0;
  return s;
}

Operator pauli_y() {
  Operator s(2, 2);
  s << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  return s;
}

Operator pauli_z() {
  Operator s(2, 2);
  s << 1, 0, 0, -1;
  return s;
}

Operator grid_kinetic(const Grid1D& grid, double hbar) {
  const Eigen::Index n = grid.n;
  const double dx = grid.spacing;
  Operator t = Operator::Zero(n, n);
  if (grid.kinetic == KineticKind::SecondDifference) {
    const double c = hbar * hbar / (2.0 * grid.mass * dx * dx);
    for (Eigen::Index i = 0; i < n; ++i) {
      t(i, i) = 2.0 * c;
      if (i + 1 < n) {
        t(i, i + 1) = -c;
        t(i + 1, i) = -c;
      }
    }
    if (grid.boundary == Boundary::Periodic && n > 2) {
      t(0, n - 1) = -c;
      t(n - 1, 0) = -c;
    }
  } else {
    // Torus-exact form: F^dag diag(hbar^2 k^2 / 2m) F. Circulant with a real
    // even generator (the sine parts cancel pairwise), built that way directly
    // so the matrix is symmetric to the last bit.
    const double length = double(n) * dx;
    std::vector<double> gen(n, 0.0);
    for (Eigen::Index m = 0; m < n; ++m) {
      const double m_signed = (m <= n / 2) ? double(m) : double(m) - double(n);
      const double k = 2.0 * std::numbers::pi * m_signed / length;
      const double e = hbar * hbar * k * k / (2.0 * grid.mass);
      for (Eigen::Index r = 0; r < n; ++r)
        gen[r] += e * std::cos(2.0 * std::numbers::pi * double(m) * double(r) / double(n)) /
                  double(n);
    }
    for (Eigen::Index r = 1; 2 * r < n; ++r) {
      const double avg = 0.5 * (gen[r] + gen[n - r]);
      gen[r] = avg;
      gen[n - r] = avg;
    }
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) t(i, j) = gen[((i - j) % n + n) % n];
  }
  return t;
}

Operator grid_derivative(const Grid1D& grid) {
  const Eigen::Index n = grid.n;
  const double dx = grid.spacing;
  Operator d = Operator::Zero(n, n);
  if (grid.kinetic == KineticKind::Spectral) {
    // real antisymmetric circulant: ik cos terms cancel pairwise, -k sin add
    const double length = double(n) * dx;
    std::vector<double> gen(n, 0.0);
    for (Eigen::Index m = 0; m < n; ++m) {
      if (2 * m == n) continue;  // drop the unpaired Nyquist mode
      const double m_signed = (m <= n / 2) ? double(m) : double(m) - double(n);
      const double k = 2.0 * std::numbers::pi * m_signed / length;
      for (Eigen::Index r = 0; r < n; ++r)
        gen[r] -= k * std::sin(2.0 * std::numbers::pi * double(m) * double(r) / double(n)) /
                  double(n);
    }
    gen[0] = 0.0;
    for (Eigen::Index r = 1; 2 * r < n; ++r) {
      const double anti = 0.5 * (gen[r] - gen[n - r]);
      gen[r] = anti;
      gen[n - r] = -anti;
    }
    if (n % 2 == 0) gen[n / 2] = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) d(i, j) = gen[((i - j) % n + n) % n];
    return d;
  }
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    d(i, i + 1) = 1.0 / (2.0 * dx);
    d(i, i - 1) = -1.0 / (2.0 * dx);
  }
  if (grid.boundary == Boundary::Periodic && n > 2) {
    d(0, 1) = 1.0 / (2.0 * dx);
    d(0, n - 1) = -1.0 / (2.0 * dx);
    d(n - 1, 0) = 1.0 / (2.0 * dx);
    d(n - 1, n - 2) = -1.0 / (2.0 * dx);
  } else {
    // one-sided rows at the walls
    d(0, 1) = 1.0 / dx;
    d(0, 0) = -1.0 / dx;
    d(n - 1, n - 1) = 1.0 / dx;
    d(n - 1, n - 2) = -1.0 / dx;
  }
  return d;
}

Operator grid_momentum(const Grid1D& grid, double hbar) {
  return Complex(0.0, -hbar) * grid_derivative(grid);
}

void HamiltonianSpec::validate() const {
  require_hermitian(h_a, "hA");
  require_hermitian(h_b, "hB");
  for (std::size_t k = 0; k < interaction.size(); ++k) {
    const auto& term = interaction[k];
    require_hermitian(term.op_a, "interaction A factor");
    require_hermitian(term.op_b, "interaction B factor");
    if (term.op_a.rows() != dim_a() || term.op_b.rows() != dim_b())
      throw ShapeError("interaction term dimension mismatch");
  }
  if (hbar <= 0.0) throw ConfigError("hbar must be positive");
}

namespace {

bool matrix_is_diagonal(const Operator& op) {
  for (Eigen::Index i = 0; i < op.rows(); ++i)
    for (Eigen::Index j = 0; j < op.cols(); ++j)
      if (i != j && std::abs(op(i, j)) > 1e-15) return false;
  return true;
}

}  // namespace

void HamiltonianSpec::compile() {
  for (auto& term : interaction) {
    term.a_diagonal = matrix_is_diagonal(term.op_a);
    term.b_diagonal = matrix_is_diagonal(term.op_b);
    if (term.a_diagonal) term.a_diag = term.op_a.diagonal();
    if (term.b_diagonal) term.b_diag = term.op_b.diagonal();
  }
  h_a_zero = h_a.isZero(0.0);
  h_b_zero = h_b.isZero(0.0);
  compiled = true;
}

Operator HamiltonianSpec::interaction_joint(Eigen::Index max_joint_dim) const {
  const Eigen::Index da = dim_a(), db = dim_b();
  if (da * db > max_joint_dim) throw CapacityExceeded("interaction_joint: joint dim too large");
  Operator h = Operator::Zero(da * db, da * db);
  for (const auto& term : interaction)
    for (Eigen::Index a = 0; a < da; ++a)
      for (Eigen::Index a2 = 0; a2 < da; ++a2) {
        const Complex w = term.coupling * term.op_a(a, a2);
        if (w == Complex(0.0)) continue;
        h.block(a * db, a2 * db, db, db) += w * term.op_b;
      }
  return h;
}

Operator HamiltonianSpec::assemble_joint(Eigen::Index max_joint_dim) const {
  const Eigen::Index da = dim_a(), db = dim_b();
  if (da * db > max_joint_dim) throw CapacityExceeded("assemble_joint: joint dim too large");
  Operator h = interaction_joint(max_joint_dim);
  for (Eigen::Index a = 0; a < da; ++a)
    for (Eigen::Index a2 = 0; a2 < da; ++a2)
      if (h_a(a, a2) != Complex(0.0))
        h.block(a * db, a2 * db, db, db) += h_a(a, a2) * Operator::Identity(db, db);
  for (Eigen::Index a = 0; a < da; ++a) h.block(a * db, a * db, db, db) += h_b;
  return h;
}

StateVector HamiltonianSpec::apply_joint(const StateVector& joint, double scale) const {
  const BipartiteSpace sp = space();
  const auto x = as_matrix(joint, sp);
  using RowMajorMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajorMat y;
  if (!compiled || !h_a_zero)
    y = h_a * x;
  else
    y = RowMajorMat::Zero(sp.dim_a, sp.dim_b);
  if (!compiled || !h_b_zero) y += x * h_b.transpose();
  for (const auto& term : interaction) {
    const double g = scale * term.coupling;
    if (g == 0.0) continue;
    if (compiled && term.a_diagonal && term.b_diagonal) {
      for (Eigen::Index a = 0; a < sp.dim_a; ++a) {
        const Complex ga = g * term.a_diag[a];
        y.row(a) += ga * (x.row(a).array() * term.b_diag.transpose().array()).matrix();
      }
    } else if (compiled && term.b_diagonal) {
      RowMajorMat ax = term.op_a * x;
      for (Eigen::Index b = 0; b < sp.dim_b; ++b) ax.col(b) *= g * term.b_diag[b];
      y += ax;
    } else {
      y += g * (term.op_a * x * term.op_b.transpose());
    }
  }
  return Eigen::Map<const StateVector>(y.data(), joint.size());
}

namespace {

Eigen::VectorXd harmonic_diag(const Grid1D& grid, double mass, double omega) {
  Eigen::VectorXd v(grid.n);
  for (Eigen::Index i = 0; i < grid.n; ++i) v[i] = 0.5 * mass * omega * omega * grid.x(i) * grid.x(i);
  return v;
}

}  // namespace

HamiltonianSpec build_grid_pair(const GridPairParams& p) {
  if (p.n_a < 2 || p.n_b < 2) throw ConfigError("build_grid_pair: grids need at least 2 points");
  if (p.softening <= 0.0)
    throw SingularPotential("build_grid_pair: softening must be > 0 (bare 1/0 on coincident points)");
  if (p.n_a * p.n_b > p.max_joint_dim)
    throw CapacityExceeded("build_grid_pair: joint grid exceeds capacity");

  HamiltonianSpec spec;
  spec.hbar = p.hbar;
  Grid1D ga{p.n_a, p.spacing, p.mass_a, p.boundary, KineticKind::SecondDifference};
  Grid1D gb{p.n_b, p.spacing, p.mass_b, p.boundary, KineticKind::SecondDifference};
  spec.grid_a = ga;
  spec.grid_b = gb;
  spec.h_a = grid_kinetic(ga, p.hbar);
  spec.h_b = grid_kinetic(gb, p.hbar);
  if (p.trap_omega_a > 0.0) spec.h_a += harmonic_diag(ga, p.mass_a, p.trap_omega_a).asDiagonal();
  if (p.trap_omega_b > 0.0) spec.h_b += harmonic_diag(gb, p.mass_b, p.trap_omega_b).asDiagonal();

  if (p.q_product != 0.0) {
    // M_ij = q / (|x_i - y_j| + s), factored exactly into diagonal products.
    Eigen::MatrixXd m(p.n_a, p.n_b);
    for (Eigen::Index i = 0; i < p.n_a; ++i)
      for (Eigen::Index j = 0; j < p.n_b; ++j)
        m(i, j) = p.q_product / (std::abs(ga.x(i) - gb.x(j)) + p.softening);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = sv.size() ? sv[0] * 1e-14 : 0.0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
      if (sv[k] <= cutoff) break;
      ProductTerm term;
      term.coupling = sv[k];
      term.op_a = svd.matrixU().col(k).cast<Complex>().asDiagonal();
      term.op_b = svd.matrixV().col(k).cast<Complex>().asDiagonal();
      spec.interaction.push_back(std::move(term));
    }
  }
  spec.validate();
  spec.compile();
  return spec;
}

HamiltonianSpec build_dephasing_model(int bath_qubits, const std::vector<double>& couplings,
                                      const Operator& system_hamiltonian,
                                      Eigen::Index max_joint_dim) {
  if (bath_qubits < 1) throw ConfigError("build_dephasing_model: need at least one bath qubit");
  if (static_cast<int>(couplings.size()) != bath_qubits)
    throw ShapeError("build_dephasing_model: couplings size must equal bath qubit count");
  if (system_hamiltonian.rows() != 2 || system_hamiltonian.cols() != 2)
    throw ShapeError("build_dephasing_model: system Hamiltonian must be 2x2");
  const Eigen::Index dim_b = Eigen::Index(1) << bath_qubits;
  if (2 * dim_b > max_joint_dim)
    throw CapacityExceeded("build_dephasing_model: joint dimension exceeds capacity");

  HamiltonianSpec spec;
  spec.h_a = system_hamiltonian;
  spec.h_b = Operator::Zero(dim_b, dim_b);
  for (int k = 0; k < bath_qubits; ++k) {
    if (couplings[k] == 0.0) continue;
    // sigma_z on qubit k (qubit 0 is the slowest bath index)
    Eigen::VectorXcd diag(dim_b);
    const Eigen::Index stride = dim_b >> (k + 1);
    for (Eigen::Index b = 0; b < dim_b; ++b) diag[b] = ((b / stride) % 2 == 0) ? 1.0 : -1.0;
    ProductTerm term;
    term.coupling = couplings[k];
    term.op_a = pauli_z();
    term.op_b = diag.asDiagonal();
    spec.interaction.push_back(std::move(term));
  }
  spec.validate();
  spec.compile();
  return spec;
}

HamiltonianSpec build_external_grid(const Grid1D& grid, const Eigen::VectorXd& potential,
                                    double hbar) {
  if (potential.size() != grid.n) throw ShapeError("build_external_grid: potential size mismatch");
  HamiltonianSpec spec;
  spec.hbar = hbar;
  spec.grid_a = grid;
  spec.h_a = grid_kinetic(grid, hbar);
  spec.h_b = Operator::Zero(1, 1);
  ProductTerm term;
  term.coupling = 1.0;
  term.op_a = potential.cast<Complex>().asDiagonal();
  term.op_b = Operator::Identity(1, 1);
  spec.interaction.push_back(std::move(term));
  spec.validate();
  spec.compile();
  return spec;
}

Complex term_expect_a(const ProductTerm& term, const StateVector& v) {
  if (term.a_diagonal) {
    Complex acc(0.0, 0.0);
    for (Eigen::Index i = 0; i < v.size(); ++i) acc += term.a_diag[i] * std::norm(v[i]);
    return acc;
  }
  return (v.adjoint() * term.op_a * v).value();
}

Complex term_expect_b(const ProductTerm& term, const StateVector& v) {
  if (term.b_diagonal) {
    Complex acc(0.0, 0.0);
    for (Eigen::Index i = 0; i < v.size(); ++i) acc += term.b_diag[i] * std::norm(v[i]);
    return acc;
  }
  return (v.adjoint() * term.op_b * v).value();
}

EffectivePotential mean_field_potential(const HamiltonianSpec& spec, const StateVector& psi,
                                        double time, double scale) {
  require_unit_norm(psi, "mean_field_potential: psi");
  if (psi.size() != spec.dim_b()) throw ShapeError("mean_field_potential: psi dimension mismatch");
  bool all_diag = spec.compiled;
  for (const auto& term : spec.interaction) all_diag = all_diag && term.a_diagonal;
  Operator v = Operator::Zero(spec.dim_a(), spec.dim_a());
  if (all_diag) {
    Eigen::VectorXcd diag = Eigen::VectorXcd::Zero(spec.dim_a());
    for (const auto& term : spec.interaction)
      diag += (scale * term.coupling * term_expect_b(term, psi).real()) * term.a_diag;
    v.diagonal() = diag;
  } else {
    for (const auto& term : spec.interaction)
      v += (scale * term.coupling * term_expect_b(term, psi).real()) * term.op_a;
  }
  return {std::move(v), time};
}

EffectivePotential mean_field_potential_b(const HamiltonianSpec& spec, const StateVector& phi,
                                          double time, double scale) {
  require_unit_norm(phi, "mean_field_potential_b: phi");
  if (phi.size() != spec.dim_a()) throw ShapeError("mean_field_potential_b: phi dimension mismatch");
  bool all_diag = spec.compiled;
  for (const auto& term : spec.interaction) all_diag = all_diag && term.b_diagonal;
  Operator v = Operator::Zero(spec.dim_b(), spec.dim_b());
  if (all_diag) {
    Eigen::VectorXcd diag = Eigen::VectorXcd::Zero(spec.dim_b());
    for (const auto& term : spec.interaction)
      diag += (scale * term.coupling * term_expect_a(term, phi).real()) * term.b_diag;
    v.diagonal() = diag;
  } else {
    for (const auto& term : spec.interaction)
      v += (scale * term.coupling * term_expect_a(term, phi).real()) * term.op_b;
  }
  return {std::move(v), time};
}

}  // namespace branchsim
