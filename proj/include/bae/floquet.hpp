#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bae/classical.hpp"
#include "bae/errors.hpp"
#include "bae/model.hpp"
#include "bae/parallel.hpp"

namespace bae {

/// Classical amplitudes and rates that enter the linearised fluctuation equations.
struct FluctuationModel {
  double kappa = 0.0;
  double gamma = 0.0;
  double g0 = 0.0;
  double omega_eff = 0.0;
  double omega_d = 0.0;
  double delta_tilde = 0.0;
  complex alpha_minus{0.0, 0.0};
  complex alpha_c{0.0, 0.0};
  complex alpha_plus{0.0, 0.0};
  complex beta_1{0.0, 0.0};

  void validate() const {
    if (!(kappa > 0.0) || !(gamma > 0.0)) throw InvalidParameter("kappa and gamma must be positive");
    if (!(omega_d > 0.0) || !(omega_eff > 0.0)) throw InvalidParameter("frequencies must be positive");
  }
};

inline FluctuationModel make_fluctuation_model(const ClassicalProblem& p, const HarmonicDecomposition& h) {
  FluctuationModel m;
  m.kappa = p.system.kappa;
  m.gamma = p.system.gamma;
  m.g0 = p.system.g0;
  m.omega_eff = p.derived.omega_eff;
  m.omega_d = p.drive.omega_d;
  m.delta_tilde = shifted_detuning(p.drive.delta_pump, p.system.g0, h.beta_0);
  m.alpha_minus = h.alpha_minus;
  m.alpha_c = h.alpha_c;
  m.alpha_plus = h.alpha_plus;
  m.beta_1 = h.beta_1;
  return m;
}

struct NoiseConfig {
  double n_th_cavity = 0.0;
  double n_th_mech = 0.0;
  int floquet_order = 1;
  std::vector<double> freq_grid;
  double theta = 0.0;
  // theta is measured from the quadrature the two pumps couple to.
  bool theta_relative_to_pumps = true;
  double quad_rel_tol = 1e-9;
  double cond_limit = 1e12;

  void validate() const {
    if (!(n_th_cavity >= 0.0) || !(n_th_mech >= 0.0)) throw InvalidParameter("thermal occupancies must be >= 0");
    if (floquet_order < 1) throw InvalidParameter("Floquet order must be at least 1");
    for (std::size_t i = 1; i < freq_grid.size(); ++i)
      if (!(freq_grid[i] > freq_grid[i - 1])) throw InvalidParameter("frequency grid must be strictly increasing");
  }
};

/// Operator components per Fourier index, in the order (d, c, d^dag, c^dag).
enum Component : int { comp_d = 0, comp_c = 1, comp_d_dag = 2, comp_c_dag = 3 };

using Block = Eigen::Matrix4cd;

struct CouplingBlocks {
  Block a0;       // same Fourier index
  Block a_minus;  // multiplies x^(n+1) in the equation for x^(n)
  Block a_plus;   // multiplies x^(n-1)
};

inline CouplingBlocks coupling_blocks(const FluctuationModel& m) {
  const complex i{0.0, 1.0};
  const complex g = m.g0;
  const complex ac = m.alpha_c, acs = std::conj(m.alpha_c);
  const complex am = m.alpha_minus, ams = std::conj(m.alpha_minus);
  const complex ap = m.alpha_plus, aps = std::conj(m.alpha_plus);
  const complex b1 = m.beta_1, b1s = std::conj(m.beta_1);
  const double dt = m.delta_tilde, we = m.omega_eff, hk = 0.5 * m.kappa, hg = 0.5 * m.gamma;
  CouplingBlocks cb;
  cb.a0 << -i * dt + hk, -i * g * ac, 0.0, -i * g * ac,
           -i * g * acs, i * we + hg, -i * g * ac, 0.0,
           0.0, i * g * acs, i * dt + hk, i * g * acs,
           i * g * acs, 0.0, i * g * ac, -i * we + hg;
  Block am1;
  am1 << b1, ap, 0.0, ap,
         ams, 0.0, ap, 0.0,
         0.0, -ams, -b1, -ams,
         -ams, 0.0, -ap, 0.0;
  cb.a_minus = -i * g * am1;
  Block ap1;
  ap1 << b1s, am, 0.0, am,
         aps, 0.0, am, 0.0,
         0.0, -aps, -b1s, -aps,
         -aps, 0.0, -am, 0.0;
  cb.a_plus = -i * g * ap1;
  return cb;
}

/// M(omega) x = s * x_in for Fourier indices n = -N..N, inputs only at n = 0.
struct FloquetSystem {
  int order = 1;
  double omega = 0.0;
  Eigen::MatrixXcd M;
  Eigen::Vector4cd input_scale;

  int blocks() const { return 2 * order + 1; }
  static int index(int order, int n, int comp) { return 4 * (n + order) + comp; }
};

inline FloquetSystem build_block_matrix(double omega, const FluctuationModel& m, int order) {
  m.validate();
  if (order < 1) throw InvalidParameter("Floquet order must be at least 1");
  const auto cb = coupling_blocks(m);
  const complex i{0.0, 1.0};
  FloquetSystem s;
  s.order = order;
  s.omega = omega;
  const int nb = s.blocks();
  s.M = Eigen::MatrixXcd::Zero(4 * nb, 4 * nb);
  for (int b = 0; b < nb; ++b) {
    const int n = b - order;
    s.M.block<4, 4>(4 * b, 4 * b) = cb.a0 - i * (omega - double(n) * m.omega_d) * Block::Identity();
    if (b > 0) s.M.block<4, 4>(4 * b, 4 * (b - 1)) = cb.a_plus;
    if (b + 1 < nb) s.M.block<4, 4>(4 * b, 4 * (b + 1)) = cb.a_minus;
  }
  const double sk = std::sqrt(m.kappa), sg = std::sqrt(m.gamma);
  s.input_scale << -sk, -sg, -sk, -sg;
  return s;
}

/// Columns: the four input channels; rows: every Fourier operator component.
struct TransferMatrix {
  int order = 1;
  double omega = 0.0;
  Eigen::Matrix<complex, Eigen::Dynamic, 4> T;
  double condition = 1.0;

  /// Row for component `comp` of Fourier index n, zero outside the truncation.
  Eigen::RowVector4cd row(int comp, int n) const {
    if (n < -order || n > order) return Eigen::RowVector4cd::Zero();
    return T.row(FloquetSystem::index(order, n, comp));
  }
};

inline TransferMatrix solve_fourier_operators(const FloquetSystem& s, double cond_limit = 1e12) {
  const int dim = int(s.M.rows());
  // Row equilibration, so the condition estimate ignores the trivial spread of
  // the -i omega diagonal at large |omega|.
  Eigen::VectorXd scale(dim);
  for (int r = 0; r < dim; ++r) {
    const double mx = s.M.row(r).cwiseAbs().maxCoeff();
    if (!(mx > 0.0)) throw SingularMatrixError("zero row in Floquet matrix");
    scale[r] = 1.0 / mx;
  }
  const Eigen::MatrixXcd A = scale.asDiagonal() * s.M;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
  const double rc = lu.rcond();
  const double cond = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  if (!(cond <= cond_limit)) {
    std::ostringstream os;
    os << "Floquet matrix at omega = " << s.omega << " rad/s has condition number " << cond;
    throw SingularMatrixError(os.str());
  }
  Eigen::Matrix<complex, Eigen::Dynamic, 4> rhs = Eigen::Matrix<complex, Eigen::Dynamic, 4>::Zero(dim, 4);
  for (int j = 0; j < 4; ++j) rhs(FloquetSystem::index(s.order, 0, j), j) = s.input_scale[j] * scale[FloquetSystem::index(s.order, 0, j)];
  TransferMatrix t;
  t.order = s.order;
  t.omega = s.omega;
  t.T = lu.solve(rhs);
  t.condition = cond;
  return t;
}

/// Linear combination of the four operator components.
struct OperatorSelector {
  std::array<complex, 4> coef{};

  static OperatorSelector single(int comp) {
    OperatorSelector o;
    o.coef[comp] = 1.0;
    return o;
  }
  static OperatorSelector d() { return single(comp_d); }
  static OperatorSelector c() { return single(comp_c); }
  static OperatorSelector d_dag() { return single(comp_d_dag); }
  static OperatorSelector c_dag() { return single(comp_c_dag); }
  static OperatorSelector x() {
    OperatorSelector o;
    o.coef[comp_c] = 1.0;
    o.coef[comp_c_dag] = 1.0;
    return o;
  }
};

/// Input correlators <z_in(w) z_in'(w')> = 2 pi N[z][z'] delta(w + w').
inline Eigen::Matrix4d input_correlator(double n_cavity, double n_mech) {
  Eigen::Matrix4d n = Eigen::Matrix4d::Zero();
  n(comp_d, comp_d_dag) = n_cavity + 1.0;
  n(comp_d_dag, comp_d) = n_cavity;
  n(comp_c, comp_c_dag) = n_mech + 1.0;
  n(comp_c_dag, comp_c) = n_mech;
  return n;
}

/// Transfer matrices at one Floquet order with a bounded memo.
class FloquetSolver {
 public:
  FloquetSolver(FluctuationModel model, int order, double n_cavity = 0.0, double n_mech = 0.0,
                double cond_limit = 1e12)
      : model_(model), order_(order), noise_(input_correlator(n_cavity, n_mech)), cond_limit_(cond_limit) {
    model_.validate();
    if (order < 1) throw InvalidParameter("Floquet order must be at least 1");
  }

  const FluctuationModel& model() const { return model_; }
  int order() const { return order_; }
  const Eigen::Matrix4d& noise() const { return noise_; }

  const TransferMatrix& transfer(double omega) {
    auto it = cache_.find(omega);
    if (it != cache_.end()) return it->second;
    if (cache_.size() > 4096) cache_.clear();
    auto t = solve_fourier_operators(build_block_matrix(omega, model_, order_), cond_limit_);
    return cache_.emplace(omega, std::move(t)).first->second;
  }

 private:
  FluctuationModel model_;
  int order_;
  Eigen::Matrix4d noise_;
  double cond_limit_;
  std::unordered_map<double, TransferMatrix> cache_;
};

inline Eigen::RowVector4cd select_row(const OperatorSelector& o, const TransferMatrix& t, int n) {
  Eigen::RowVector4cd r = Eigen::RowVector4cd::Zero();
  for (int k = 0; k < 4; ++k)
    if (o.coef[k] != 0.0) r += o.coef[k] * t.row(k, n);
  return r;
}

/// S^(m)_{O O'}(omega) = sum_n int dw'/2pi <O^(n)(omega + n omega_d) O'^(m-n)(w')>.
inline complex spectrum_component(const OperatorSelector& o, const OperatorSelector& o2, int m, double omega,
                                  FloquetSolver& solver) {
  const int N = solver.order();
  if (m < -2 * N || m > 2 * N) {
    std::ostringstream os;
    os << "spectral component m = " << m << " outside the range allowed by order " << N;
    throw RangeError(os.str());
  }
  const double wd = solver.model().omega_d;
  complex total = 0.0;
  for (int n = -N; n <= N; ++n) {
    const int k = m - n;
    if (k < -N || k > N) continue;
    const double w = omega + double(n) * wd;
    const Eigen::RowVector4cd r1 = select_row(o, solver.transfer(w), n);
    const Eigen::RowVector4cd r2 = select_row(o2, solver.transfer(-w), k);
    total += (r1 * solver.noise().cast<complex>() * r2.transpose())(0, 0);
  }
  return total;
}

/// Quadrature angle coupled to the pumps: X_theta ~ alpha_- c + alpha_+ c^dag.
inline double pump_reference_angle(const FluctuationModel& m) {
  if (m.alpha_minus == 0.0 || m.alpha_plus == 0.0) return 0.0;
  return 0.5 * (std::arg(m.alpha_minus) - std::arg(m.alpha_plus));
}

/// Integrand of the quadrature variance before the final 1/2pi.
inline complex variance_integrand(double omega, double theta_abs, FloquetSolver& solver) {
  const double wd = solver.model().omega_d;
  using O = OperatorSelector;
  const complex e2 = std::polar(1.0, 2.0 * theta_abs);
  return 0.5 * (spectrum_component(O::c(), O::c(), -2, omega + wd, solver) * e2 +
                spectrum_component(O::c(), O::c_dag(), 0, omega + wd, solver) +
                spectrum_component(O::c_dag(), O::c_dag(), 2, omega - wd, solver) * std::conj(e2) +
                spectrum_component(O::c_dag(), O::c(), 0, omega - wd, solver));
}

struct VarianceResult {
  double variance = 0.0;
  double error_estimate = 0.0;
  double theta_abs = 0.0;
  double max_imag_ratio = 0.0;
  std::size_t evaluations = 0;
};

/// Break points of the variance integral: slow-quadrature peak at the drive
/// detuning and optical features at multiples of omega_d.
inline std::vector<double> variance_breakpoints(const FluctuationModel& m) {
  const double G = m.gamma, wd = m.omega_d, d0 = m.omega_eff - m.omega_d;
  std::vector<double> pts;
  for (double c : {d0, -d0})
    for (double off : {0.0, G, -G, 5 * G, -5 * G, 50 * G, -50 * G}) pts.push_back(c + off);
  for (int k : {-2, -1, 1, 2})
    for (double off : {-50 * G, 50 * G}) pts.push_back(k * wd + off);
  pts.push_back(-3 * wd);
  pts.push_back(3 * wd);
  std::sort(pts.begin(), pts.end());
  std::vector<double> out;
  for (double p : pts)
    if (out.empty() || p - out.back() > 1e-9 * wd) out.push_back(p);
  return out;
}

/// <X_theta^2> in units where the vacuum gives 1/2.
inline VarianceResult quadrature_variance(const FluctuationModel& m, const NoiseConfig& nc) {
  nc.validate();
  FloquetSolver solver(m, nc.floquet_order, nc.n_th_cavity, nc.n_th_mech, nc.cond_limit);
  VarianceResult res;
  res.theta_abs = nc.theta + (nc.theta_relative_to_pumps ? pump_reference_angle(m) : 0.0);
  double max_re = 0.0, max_im = 0.0;
  auto f = [&](double w) {
    const complex v = variance_integrand(w, res.theta_abs, solver);
    ++res.evaluations;
    max_re = std::max(max_re, std::abs(v.real()));
    max_im = std::max(max_im, std::abs(v.imag()));
    return v.real();
  };
  const auto edges = variance_breakpoints(m);
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0, err = 0.0, l1 = 0.0;
  auto accumulate = [&](auto&& g, double a, double b) {
    double e = 0.0, seg_l1 = 0.0;
    total += GK::integrate(g, a, b, 20, nc.quad_rel_tol, &e, &seg_l1);
    err += e;
    l1 += seg_l1;
  };
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) accumulate(f, edges[k], edges[k + 1]);
  // Tails decay like 1/omega^2; omega = edge/u maps them onto (0, 1].
  const double lo = edges.front(), hi = edges.back();
  accumulate([&](double u) { return f(hi / u) * hi / (u * u); }, 0.0, 1.0);
  accumulate([&](double u) { return f(lo / u) * -lo / (u * u); }, 0.0, 1.0);
  res.variance = total / two_pi;
  res.error_estimate = err / two_pi;
  res.max_imag_ratio = max_re > 0.0 ? max_im / max_re : 0.0;
  if (!(err <= 1e-6 * std::max(l1, 1e-300)) || !std::isfinite(total)) {
    std::ostringstream os;
    os << "variance integral did not converge (error estimate " << err / two_pi << ")";
    throw IntegrationError(os.str());
  }
  if (res.max_imag_ratio > 1e-8) {
    std::ostringstream os;
    os << "variance integrand has imaginary residue " << res.max_imag_ratio << " of its peak";
    throw IntegrationError(os.str());
  }
  return res;
}

struct SpectrumResult {
  std::vector<double> freq_grid;
  std::vector<double> values;
  std::string label;
  std::optional<double> variance;
  double max_imag_ratio = 0.0;
};

namespace detail {

inline void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidParameter("frequency grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw InvalidParameter("frequency grid must be strictly increasing");
}

inline void finish_spectrum(SpectrumResult& r, const std::vector<complex>& raw, double scale) {
  double mx = 0.0, im = 0.0;
  r.values.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    r.values[i] = scale * raw[i].real();
    mx = std::max(mx, std::abs(raw[i].real()));
    im = std::max(im, std::abs(raw[i].imag()));
  }
  r.max_imag_ratio = mx > 0.0 ? im / mx : 0.0;
}

}  // namespace detail

/// kappa S^(0)_{d^dag d} from the full Floquet solve. The optical operator
/// couples to x one index further out, so it is solved at order N + 1.
inline SpectrumResult optical_spectrum_full(const std::vector<double>& grid, const FluctuationModel& m,
                                            const NoiseConfig& nc, unsigned threads = 1) {
  nc.validate();
  detail::check_grid(grid);
  SpectrumResult r;
  r.label = "S_out_full";
  r.freq_grid = grid;
  std::vector<complex> raw(grid.size());
  const std::size_t chunks = std::max<std::size_t>(1, threads);
  parallel_for(chunks, threads, [&](std::size_t c) {
    FloquetSolver solver(m, nc.floquet_order + 1, nc.n_th_cavity, nc.n_th_mech, nc.cond_limit);
    for (std::size_t i = c; i < grid.size(); i += chunks)
      raw[i] = spectrum_component(OperatorSelector::d_dag(), OperatorSelector::d(), 0, grid[i], solver);
  });
  detail::finish_spectrum(r, raw, m.kappa);
  return r;
}

/// Cavity susceptibility [kappa/2 - i(u + delta_tilde)]^-1.
inline complex cavity_susceptibility(const FluctuationModel& m, double u) {
  return 1.0 / complex(0.5 * m.kappa, -(u + m.delta_tilde));
}

/// Dressed amplitudes after eliminating the neighbouring optical sidebands.
struct DressedAmplitudes {
  complex chi;
  complex alpha_minus;
  complex alpha_c;
  complex alpha_plus;
};

/// Evaluated at u = -omega, which is where d^(0)dag(omega) picks up its response.
inline DressedAmplitudes dressed_amplitudes(const FluctuationModel& m, double omega) {
  const complex i{0.0, 1.0};
  const double u = -omega, wd = m.omega_d, g = m.g0;
  const complex chi0 = cavity_susceptibility(m, u);
  const complex chi_lo = cavity_susceptibility(m, u - wd);
  const complex chi_hi = cavity_susceptibility(m, u + wd);
  const double b2 = std::norm(m.beta_1);
  DressedAmplitudes a;
  a.chi = 1.0 / (1.0 / chi0 + g * g * b2 * (chi_lo + chi_hi));
  a.alpha_minus = m.alpha_minus + i * g * std::conj(m.beta_1) * chi_hi * m.alpha_c;
  a.alpha_plus = m.alpha_plus + i * g * m.beta_1 * chi_lo * m.alpha_c;
  a.alpha_c = m.alpha_c + i * g * m.beta_1 * chi_lo * m.alpha_minus + i * g * std::conj(m.beta_1) * chi_hi * m.alpha_plus;
  return a;
}

/// Nine-term reduced expression built on the mechanical S_xx^(m) components.
inline complex reduced_optical_density(double omega, const FluctuationModel& m, FloquetSolver& solver) {
  const auto x = OperatorSelector::x();
  const double wd = m.omega_d;
  auto S = [&](int k, double w) { return spectrum_component(x, x, k, w, solver); };
  const auto a = dressed_amplitudes(m, omega);
  const complex am = a.alpha_minus, ap = a.alpha_plus, ac = a.alpha_c;
  const complex lo0 = S(0, omega - wd), hi0 = S(0, omega + wd);
  complex sum = std::norm(am) * lo0 + std::norm(ap) * hi0 + std::conj(am) * ap * S(2, omega - wd) +
                std::conj(ap) * am * S(-2, omega + wd);
  if (ac != 0.0) {
    sum += std::norm(ac) * S(0, omega) + std::conj(am) * ac * S(1, omega - wd) +
           std::conj(ap) * ac * S(-1, omega + wd) + std::conj(ac) * am * S(-1, omega) +
           std::conj(ac) * ap * S(1, omega);
  }
  return std::norm(a.chi) * m.g0 * m.g0 * sum;
}

inline SpectrumResult optical_spectrum_reduced(const std::vector<double>& grid, const FluctuationModel& m,
                                               const NoiseConfig& nc, unsigned threads = 1) {
  nc.validate();
  detail::check_grid(grid);
  SpectrumResult r;
  r.label = "S_out_reduced";
  r.freq_grid = grid;
  std::vector<complex> raw(grid.size());
  const std::size_t chunks = std::max<std::size_t>(1, threads);
  parallel_for(chunks, threads, [&](std::size_t c) {
    FloquetSolver solver(m, nc.floquet_order, nc.n_th_cavity, nc.n_th_mech, nc.cond_limit);
    for (std::size_t i = c; i < grid.size(); i += chunks) raw[i] = reduced_optical_density(grid[i], m, solver);
  });
  detail::finish_spectrum(r, raw, m.kappa);
  return r;
}

struct VariancePoint {
  double x = 0.0;           // detuning [rad/s] or target |beta_1|
  double variance = std::numeric_limits<double>::quiet_NaN();
  double abs_beta_1 = std::numeric_limits<double>::quiet_NaN();
  double linearization_ratio = std::numeric_limits<double>::quiet_NaN();
  bool linearization_warning = false;
  std::string status = "ok";
};

/// omega_eff - omega_d swept at fixed drive and pump frequencies.
inline std::vector<VariancePoint> variance_vs_detuning(const ClassicalProblem& base, const IntegratorConfig& cfg,
                                                      const NoiseConfig& nc, const std::vector<double>& detunings,
                                                      unsigned threads = 1) {
  std::vector<VariancePoint> out(detunings.size());
  parallel_for(detunings.size(), threads, [&](std::size_t k) {
    auto& pt = out[k];
    pt.x = detunings[k];
    try {
      ClassicalProblem p = base;
      p.derived.omega_eff = p.drive.omega_d + detunings[k];
      const auto h = steady_state(p, cfg);
      pt.abs_beta_1 = std::abs(h.beta_1);
      pt.linearization_ratio = h.linearization_ratio;
      pt.linearization_warning = !h.linearization_ok;
      pt.variance = quadrature_variance(make_fluctuation_model(p, h), nc).variance;
    } catch (const Error& e) {
      pt.status = e.code();
    }
  });
  return out;
}

/// Resonant drive scaled to reach each target |beta_1|.
inline std::vector<VariancePoint> variance_vs_drive(const ClassicalProblem& base, const IntegratorConfig& cfg,
                                                   const NoiseConfig& nc, const std::vector<double>& targets,
                                                   unsigned threads = 1) {
  std::vector<VariancePoint> out(targets.size());
  parallel_for(targets.size(), threads, [&](std::size_t k) {
    auto& pt = out[k];
    pt.x = targets[k];
    try {
      ClassicalProblem p = base;
      p.drive.omega_d = p.derived.omega_eff;
      p.drive.beta_in_mag = drive_for_amplitude(p.system, p.derived.omega_eff, p.drive.omega_d, targets[k]);
      const auto h = steady_state(p, retarget(cfg, base.drive.omega_d, p.drive.omega_d));
      pt.abs_beta_1 = std::abs(h.beta_1);
      pt.linearization_ratio = h.linearization_ratio;
      pt.linearization_warning = !h.linearization_ok;
      pt.variance = quadrature_variance(make_fluctuation_model(p, h), nc).variance;
    } catch (const Error& e) {
      pt.status = e.code();
    }
  });
  return out;
}

}  // namespace bae
