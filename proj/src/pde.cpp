#include "zrp/pde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#ifndef M_PI
#define M_PI 3.14159265358979323846
#endif

namespace zrp {

std::vector<double> DensityProfile::total() const {
  std::vector<double> t(static_cast<std::size_t>(grid_size()), 0.0);
  for (const auto& c : comps)
    for (std::size_t j = 0; j < t.size(); ++j) t[j] += c[j];
  return t;
}

double DensityProfile::mean(int colour) const {
  const auto& c = comps.at(static_cast<std::size_t>(colour));
  double s = 0.0;
  for (double v : c) s += v;
  return s / static_cast<double>(c.size());
}

std::vector<double> make_profile(const std::string& kind, int m_grid, double a, double b,
                                 int z) {
  if (m_grid < 2) throw std::invalid_argument("profile grid must have >= 2 points");
  std::vector<double> g(static_cast<std::size_t>(m_grid));
  for (int j = 0; j < m_grid; ++j) {
    const double x = static_cast<double>(j) / m_grid;
    double v = 0.0;
    if (kind == "constant") v = a;
    else if (kind == "sinusoid") v = a + b * std::sin(2.0 * M_PI * z * x);
    else if (kind == "step") v = (x < 0.5) ? a : b;
    else throw std::invalid_argument("unknown profile kind: " + kind);
    if (v < 0.0) throw std::invalid_argument("profile must be nonnegative");
    g[static_cast<std::size_t>(j)] = v;
  }
  return g;
}

double basis_value(int z, double x) {
  if (z == 0) return 1.0;
  if (z > 0) return std::sqrt(2.0) * std::cos(2.0 * M_PI * z * x);
  return std::sqrt(2.0) * std::sin(2.0 * M_PI * (-z) * x);
}

TestFunction basis_e(int z, int m_grid) {
  TestFunction f;
  f.samples.resize(static_cast<std::size_t>(m_grid));
  for (int j = 0; j < m_grid; ++j)
    f.samples[static_cast<std::size_t>(j)] = basis_value(z, static_cast<double>(j) / m_grid);
  f.smoothness = 3;
  return f;
}

std::vector<double> grid_coefficients(const std::vector<double>& grid_fn, int z_max) {
  const int m = static_cast<int>(grid_fn.size());
  if (2 * z_max >= m)
    throw std::invalid_argument("z_max too large for the grid (aliasing)");
  std::vector<double> coeffs(static_cast<std::size_t>(2 * z_max) + 1, 0.0);
  for (int z = -z_max; z <= z_max; ++z) {
    double acc = 0.0;
    for (int j = 0; j < m; ++j)
      acc += grid_fn[static_cast<std::size_t>(j)] * basis_value(z, static_cast<double>(j) / m);
    coeffs[static_cast<std::size_t>(z + z_max)] = acc / m;
  }
  return coeffs;
}

RhoPath::RhoPath(std::vector<double> times, std::vector<DensityProfile> frames)
    : times_(std::move(times)), frames_(std::move(frames)) {
  if (times_.size() != frames_.size() || times_.size() < 2)
    throw std::invalid_argument("RhoPath needs >= 2 frames");
}

RhoPath RhoPath::constant(DensityProfile profile, double t0, double t1) {
  if (!(t1 > t0)) t1 = t0 + 1.0;
  std::vector<double> times{t0, t1};
  std::vector<DensityProfile> frames{profile, profile};
  frames[0].time = t0;
  frames[1].time = t1;
  return RhoPath(std::move(times), std::move(frames));
}

std::pair<std::size_t, double> RhoPath::locate(double t) const {
  const double eps = 1e-12 * (1.0 + std::abs(times_.back()));
  if (t < times_.front() - eps || t > times_.back() + eps)
    throw std::out_of_range("RhoPath: time outside stored segment");
  t = std::clamp(t, times_.front(), times_.back());
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t i = static_cast<std::size_t>(std::distance(times_.begin(), it));
  if (i == 0) i = 1;
  if (i >= times_.size()) i = times_.size() - 1;
  const double w = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
  return {i - 1, w};
}

void RhoPath::comp_at(double t, int colour, std::vector<double>& out) const {
  const auto [i, w] = locate(t);
  const auto& a = frames_[i].comps.at(static_cast<std::size_t>(colour));
  const auto& b = frames_[i + 1].comps.at(static_cast<std::size_t>(colour));
  out.resize(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = (1.0 - w) * a[j] + w * b[j];
}

void RhoPath::total_at(double t, std::vector<double>& out) const {
  const auto [i, w] = locate(t);
  out.assign(static_cast<std::size_t>(grid_size()), 0.0);
  for (int c = 0; c < n_colours(); ++c) {
    const auto& a = frames_[i].comps[static_cast<std::size_t>(c)];
    const auto& b = frames_[i + 1].comps[static_cast<std::size_t>(c)];
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] += (1.0 - w) * a[j] + w * b[j];
  }
}

DensityProfile RhoPath::at(double t) const {
  DensityProfile p;
  p.time = t;
  p.comps.resize(static_cast<std::size_t>(n_colours()));
  for (int c = 0; c < n_colours(); ++c) comp_at(t, c, p.comps[static_cast<std::size_t>(c)]);
  return p;
}

namespace {

// Edge fluxes of the colour system.  On each edge the secant of phi defines
// the colour-blind coefficient, so summing the colour fluxes reproduces the
// scalar stencil 1/2 Lap_M phi(rho) exactly.
void hydro_rhs(const FugacityInterpolant& phi, double c1, const std::vector<std::vector<double>>& rho,
               const std::vector<double>& total, std::vector<std::vector<double>>& rhs,
               std::vector<double>& flux_scratch) {
  const int k = static_cast<int>(rho.size());
  const int m = static_cast<int>(total.size());
  const double m2 = static_cast<double>(m) * m;
  auto& flux = flux_scratch;  // [colour * m + edge j (between j and j+1)]
  flux.assign(static_cast<std::size_t>(k) * m, 0.0);

  for (int j = 0; j < m; ++j) {
    const int jn = (j + 1 == m) ? 0 : j + 1;
    const double ra = total[static_cast<std::size_t>(j)];
    const double rb = total[static_cast<std::size_t>(jn)];
    const double drho = rb - ra;
    const double rbar = 0.5 * (ra + rb);
    double d_edge;
    if (std::abs(drho) > 1e-12 * (1.0 + rbar))
      d_edge = (phi.phi(rb) - phi.phi(ra)) / drho;
    else
      d_edge = phi.dphi(rbar);
    if (k == 1) {
      flux[static_cast<std::size_t>(j)] = d_edge * drho;
      continue;
    }
    const double s_edge = rbar > 1e-12 ? phi.phi(rbar) / rbar : c1;
    for (int c = 0; c < k; ++c) {
      const double ca = rho[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
      const double cb = rho[static_cast<std::size_t>(c)][static_cast<std::size_t>(jn)];
      const double share = rbar > 1e-12 ? 0.5 * (ca + cb) / rbar : 1.0 / k;
      flux[static_cast<std::size_t>(c) * m + j] =
          s_edge * (cb - ca) + (d_edge - s_edge) * share * drho;
    }
  }
  for (int c = 0; c < k; ++c) {
    auto& r = rhs[static_cast<std::size_t>(c)];
    r.resize(static_cast<std::size_t>(m));
    const double* fl = flux.data() + static_cast<std::size_t>(c) * m;
    for (int j = 0; j < m; ++j) {
      const int jp = (j == 0) ? m - 1 : j - 1;
      r[static_cast<std::size_t>(j)] = 0.5 * m2 * (fl[j] - fl[jp]);
    }
  }
}

}  // namespace

HydroResult solve_hydro_path(const ThermoTable& thermo, const DensityProfile& rho0,
                             double t, int n_frames) {
  if (!(t >= 0.0)) throw std::invalid_argument("solve_hydro: t must be >= 0");
  if (rho0.n_colours() < 1 || rho0.grid_size() < 4)
    throw std::invalid_argument("solve_hydro: bad initial profile");
  if (n_frames < 2) n_frames = 2;
  const int k = rho0.n_colours();
  const int m = rho0.grid_size();
  const double m2 = static_cast<double>(m) * m;

  double rho_max = 0.0;
  for (const auto& c : rho0.comps)
    for (double v : c) {
      if (!(v >= 0.0)) throw std::invalid_argument("solve_hydro: rho0 must be >= 0");
    }
  for (double v : rho0.total()) rho_max = std::max(rho_max, v);
  const auto phi = thermo.fugacity_interpolant(std::max(1.0, 1.25 * rho_max + 1.0));
  const double c1 = thermo.rate()(1);

  HydroResult out;
  out.path = RhoPath();  // filled below
  std::vector<double> frame_times;
  std::vector<DensityProfile> frames;
  frame_times.reserve(static_cast<std::size_t>(n_frames));
  frames.reserve(static_cast<std::size_t>(n_frames));

  DensityProfile state = rho0;
  state.time = 0.0;
  frame_times.push_back(0.0);
  frames.push_back(state);

  if (t == 0.0) {
    frame_times.push_back(1.0);
    frames.push_back(state);
    out.final = state;
    out.path = RhoPath(std::move(frame_times), std::move(frames));
    return out;
  }

  std::vector<std::vector<double>> k1(static_cast<std::size_t>(k)), k2(k1), k3(k1), k4(k1);
  std::vector<std::vector<double>> stage(static_cast<std::size_t>(k));
  std::vector<double> total, flux_scratch;
  const double dt_floor = t / 4e9;

  const double frame_dt = t / (n_frames - 1);
  for (int fr = 1; fr < n_frames; ++fr) {
    double remaining = frame_dt;
    while (remaining > 0.0) {
      total = (k == 1) ? state.comps[0] : state.total();
      double max_dphi = 0.0;
      for (double v : total) max_dphi = std::max(max_dphi, phi.dphi(v));
      if (!(max_dphi > 0.0) || !std::isfinite(max_dphi))
        throw std::runtime_error("solve_hydro: CFL violation (degenerate phi')");
      double dt = 0.4 / (m2 * max_dphi);
      if (dt < dt_floor)
        throw std::runtime_error("solve_hydro: CFL violation (max phi' blew up)");
      dt = std::min(dt, remaining);

      hydro_rhs(phi, c1, state.comps, total, k1, flux_scratch);
      for (int c = 0; c < k; ++c) {
        stage[static_cast<std::size_t>(c)].resize(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j)
          stage[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] =
              state.comps[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] +
              0.5 * dt * k1[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
      }
      total = (k == 1) ? stage[0] : [&] {
        std::vector<double> tt(static_cast<std::size_t>(m), 0.0);
        for (const auto& c : stage)
          for (int j = 0; j < m; ++j) tt[static_cast<std::size_t>(j)] += c[static_cast<std::size_t>(j)];
        return tt;
      }();
      hydro_rhs(phi, c1, stage, total, k2, flux_scratch);
      for (int c = 0; c < k; ++c)
        for (int j = 0; j < m; ++j)
          stage[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] =
              state.comps[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] +
              0.5 * dt * k2[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
      total = (k == 1) ? stage[0] : [&] {
        std::vector<double> tt(static_cast<std::size_t>(m), 0.0);
        for (const auto& c : stage)
          for (int j = 0; j < m; ++j) tt[static_cast<std::size_t>(j)] += c[static_cast<std::size_t>(j)];
        return tt;
      }();
      hydro_rhs(phi, c1, stage, total, k3, flux_scratch);
      for (int c = 0; c < k; ++c)
        for (int j = 0; j < m; ++j)
          stage[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] =
              state.comps[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] +
              dt * k3[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
      total = (k == 1) ? stage[0] : [&] {
        std::vector<double> tt(static_cast<std::size_t>(m), 0.0);
        for (const auto& c : stage)
          for (int j = 0; j < m; ++j) tt[static_cast<std::size_t>(j)] += c[static_cast<std::size_t>(j)];
        return tt;
      }();
      hydro_rhs(phi, c1, stage, total, k4, flux_scratch);

      for (int c = 0; c < k; ++c) {
        auto& rc = state.comps[static_cast<std::size_t>(c)];
        for (int j = 0; j < m; ++j) {
          const std::size_t cj = static_cast<std::size_t>(j);
          rc[cj] += dt / 6.0 *
                    (k1[static_cast<std::size_t>(c)][cj] + 2.0 * k2[static_cast<std::size_t>(c)][cj] +
                     2.0 * k3[static_cast<std::size_t>(c)][cj] + k4[static_cast<std::size_t>(c)][cj]);
          if (rc[cj] < 0.0) {
            rc[cj] = 0.0;
            ++out.clip_events;
          }
        }
      }
      ++out.steps;
      remaining -= dt;
    }
    state.time = frame_dt * fr;
    frame_times.push_back(state.time);
    frames.push_back(state);
  }

  out.final = state;
  out.path = RhoPath(std::move(frame_times), std::move(frames));
  return out;
}

DensityProfile solve_hydro(const ThermoTable& thermo, const DensityProfile& rho0, double t) {
  return solve_hydro_path(thermo, rho0, t, 2).final;
}

namespace {

// Fourth-order periodic Laplacian times 1/2 coef(x).
void semigroup_rhs(const std::vector<double>& coef, const std::vector<double>& g,
                   double m2, std::vector<double>& out) {
  const int m = static_cast<int>(g.size());
  out.resize(g.size());
  for (int j = 0; j < m; ++j) {
    const int jp1 = (j + 1) % m, jp2 = (j + 2) % m;
    const int jm1 = (j + m - 1) % m, jm2 = (j + m - 2) % m;
    const double lap =
        (-g[static_cast<std::size_t>(jp2)] + 16.0 * g[static_cast<std::size_t>(jp1)] -
         30.0 * g[static_cast<std::size_t>(j)] + 16.0 * g[static_cast<std::size_t>(jm1)] -
         g[static_cast<std::size_t>(jm2)]) /
        12.0 * m2;
    out[static_cast<std::size_t>(j)] = 0.5 * coef[static_cast<std::size_t>(j)] * lap;
  }
}

void fill_coef(const FugacityInterpolant& phi, double c1, SemigroupKind kind,
               const std::vector<double>& rho, std::vector<double>& coef) {
  coef.resize(rho.size());
  if (kind == SemigroupKind::D) {
    for (std::size_t j = 0; j < rho.size(); ++j) coef[j] = phi.dphi(rho[j]);
  } else {
    for (std::size_t j = 0; j < rho.size(); ++j)
      coef[j] = rho[j] > 1e-12 ? phi.phi(rho[j]) / rho[j] : c1;
  }
}

double path_rho_max(const RhoPath& path) {
  double rho_max = 0.0;
  for (const auto& fr : path.frames())
    for (const auto& c : fr.comps)
      for (double v : c) rho_max = std::max(rho_max, v);
  return rho_max;
}

TestFunction semigroup_apply_impl(const FugacityInterpolant& phi, double c1,
                                  const TestFunction& f, double s, double t,
                                  SemigroupKind kind, const RhoPath& path) {
  TestFunction g = f;
  if (s == t) return g;

  const int m = path.grid_size();
  const double m2 = static_cast<double>(m) * m;
  std::vector<double> rho, coef, k1, k2, k3, k4, stage(g.samples.size());
  double u = s;
  const double horizon = t - s;
  while (u < t) {
    path.total_at(u, rho);
    fill_coef(phi, c1, kind, rho, coef);
    double cmax = 0.0;
    for (double v : coef) cmax = std::max(cmax, v);
    if (!(cmax > 0.0)) throw std::runtime_error("semigroup_apply: degenerate coefficient");
    double dt = 0.35 / (m2 * cmax);
    if (dt < horizon / 4e9) throw std::runtime_error("semigroup_apply: CFL violation");
    dt = std::min(dt, t - u);

    semigroup_rhs(coef, g.samples, m2, k1);
    for (std::size_t j = 0; j < stage.size(); ++j) stage[j] = g.samples[j] + 0.5 * dt * k1[j];
    path.total_at(std::min(u + 0.5 * dt, t), rho);
    fill_coef(phi, c1, kind, rho, coef);
    semigroup_rhs(coef, stage, m2, k2);
    for (std::size_t j = 0; j < stage.size(); ++j) stage[j] = g.samples[j] + 0.5 * dt * k2[j];
    semigroup_rhs(coef, stage, m2, k3);
    for (std::size_t j = 0; j < stage.size(); ++j) stage[j] = g.samples[j] + dt * k3[j];
    path.total_at(std::min(u + dt, t), rho);
    fill_coef(phi, c1, kind, rho, coef);
    semigroup_rhs(coef, stage, m2, k4);
    for (std::size_t j = 0; j < stage.size(); ++j)
      g.samples[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    u += dt;
  }
  return g;
}

}  // namespace

TestFunction semigroup_apply(const ThermoTable& thermo, const TestFunction& f, double s,
                             double t, SemigroupKind kind, const RhoPath& path) {
  if (s > t) throw std::invalid_argument("semigroup_apply: requires s <= t");
  if (static_cast<int>(f.samples.size()) != path.grid_size())
    throw std::invalid_argument("semigroup_apply: grid mismatch between f and path");
  const auto phi = thermo.fugacity_interpolant(std::max(1.0, 1.25 * path_rho_max(path) + 1.0));
  return semigroup_apply_impl(phi, thermo.rate()(1), f, s, t, kind, path);
}

TestFunction colour_drift_apply(const ThermoTable& thermo, const TestFunction& h,
                                int colour, const RhoPath& path, double t) {
  if (static_cast<int>(h.samples.size()) != path.grid_size())
    throw std::invalid_argument("colour_drift_apply: grid mismatch");
  const int m = path.grid_size();
  const double m2 = static_cast<double>(m) * m;
  const auto phi =
      thermo.fugacity_interpolant(std::max(1.0, 1.25 * path_rho_max(path) + 1.0));
  const double c1 = thermo.rate()(1);

  std::vector<double> rho, rho_i, lap;
  path.total_at(t, rho);
  path.comp_at(t, colour, rho_i);
  semigroup_rhs(std::vector<double>(h.samples.size(), 2.0), h.samples, m2, lap);  // plain Lap

  TestFunction out = h;
  for (int j = 0; j < m; ++j) {
    const std::size_t ji = static_cast<std::size_t>(j);
    const double r = rho[ji];
    const double s_coef = r > 1e-12 ? phi.phi(r) / r : c1;
    const double d_coef = phi.dphi(r);
    out.samples[ji] = (d_coef - s_coef) / std::max(r, 1e-300) * rho_i[ji] * lap[ji];
    if (r <= 1e-12) out.samples[ji] = 0.0;
  }
  return out;
}

double ou_variance(const ThermoTable& thermo, const TestFunction& f, double s, double t,
                   NoiseKind kind, const RhoPath& path, int colour, int quad_nodes) {
  if (s > t) throw std::invalid_argument("ou_variance: requires s <= t");
  if (s == t) return 0.0;
  if (quad_nodes < 2) quad_nodes = 2;
  const int m = path.grid_size();
  const auto phi = thermo.fugacity_interpolant(std::max(1.0, 1.25 * path_rho_max(path) + 1.0));
  const double c1 = thermo.rate()(1);
  const SemigroupKind sg = (kind == NoiseKind::colour_blind) ? SemigroupKind::D : SemigroupKind::S;

  std::vector<double> rho, rho_i;
  auto integrand = [&](double u) {
    const TestFunction g = semigroup_apply_impl(phi, c1, f, u, t, sg, path);
    path.total_at(u, rho);
    if (kind != NoiseKind::colour_blind) path.comp_at(u, colour, rho_i);
    // forward differences at half-integer points; noise at the midpoint
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
      const int jn = (j + 1) % m;
      const double grad = (g.samples[static_cast<std::size_t>(jn)] -
                           g.samples[static_cast<std::size_t>(j)]) *
                          m;
      const double r = 0.5 * (rho[static_cast<std::size_t>(j)] + rho[static_cast<std::size_t>(jn)]);
      double noise = 0.0;
      if (kind == NoiseKind::colour_blind) {
        noise = phi.phi(r);
      } else {
        const double ri =
            0.5 * (rho_i[static_cast<std::size_t>(j)] + rho_i[static_cast<std::size_t>(jn)]);
        const double s_coef = r > 1e-12 ? phi.phi(r) / r : c1;
        if (kind == NoiseKind::colour_i) {
          noise = s_coef * ri;  // [chi D]/rho * rho^i = S rho^i
        } else {
          noise = r > 1e-12 ? s_coef * ri * (1.0 - ri / r) : 0.0;
        }
      }
      acc += noise * grad * grad;
    }
    return acc / m;
  };

  const double h = (t - s) / (quad_nodes - 1);
  double sum = 0.5 * (integrand(s) + integrand(t));
  for (int q = 1; q < quad_nodes - 1; ++q) sum += integrand(s + h * q);
  return sum * h;
}

}  // namespace zrp
