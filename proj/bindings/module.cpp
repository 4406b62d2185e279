#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "zrp/config.hpp"
#include "zrp/experiments.hpp"
#include "zrp/fields.hpp"
#include "zrp/kmc.hpp"
#include "zrp/measures.hpp"
#include "zrp/pde.hpp"
#include "zrp/stats.hpp"
#include "zrp/thermo.hpp"

namespace py = pybind11;
using namespace zrp;

namespace {

Configuration config_from_counts(const std::vector<std::int32_t>& counts) {
  Configuration c;
  c.counts = counts;
  c.recompute_total();
  return c;
}

}  // namespace

PYBIND11_MODULE(_zrp, m) {
  m.doc() = "Zero-range process simulation and verification toolkit";
  m.attr("__version__") = kVersion;

  py::class_<RateFunction>(m, "RateFunction")
      .def_static("linear", &RateFunction::linear, py::arg("theta") = 1.0)
      .def_static("e1_piecewise", &RateFunction::e1_piecewise, py::arg("theta"),
                  py::arg("K0"), py::arg("head") = std::vector<double>{})
      .def_static("e2_parity", &RateFunction::e2_parity, py::arg("theta1"),
                  py::arg("theta2"), py::arg("K0"))
      .def_static("custom_table", &RateFunction::custom_table, py::arg("table"))
      .def("__call__", &RateFunction::operator(), py::arg("k"))
      .def_property_readonly("family",
                             [](const RateFunction& r) { return to_string(r.family()); })
      .def_property("gap_k0", &RateFunction::gap_k0, &RateFunction::set_gap_k0);

  m.def(
      "validate_assumptions",
      [](const RateFunction& r, int k_max) {
        const AssumptionReport rep = validate_assumptions(r, k_max);
        py::dict d;
        d["a1"] = rep.a1;
        d["a2"] = rep.a2;
        d["lg_ok"] = rep.lg_ok;
        d["m_ok"] = rep.m_ok;
        d["c1"] = rep.c1;
        d["c2"] = rep.c2;
        d["k_max"] = rep.k_max;
        d["k0"] = rep.k0;
        d["conclusive"] = rep.conclusive;
        return d;
      },
      py::arg("rate"), py::arg("k_max"));

  py::class_<ThermoTable>(m, "ThermoTable")
      .def(py::init<RateFunction, double, double>(), py::arg("rate"),
           py::arg("series_tol") = 1e-14, py::arg("phi_max") = 1e9)
      .def("partition_function", &ThermoTable::partition_function, py::arg("phi"),
           py::arg("order") = 0)
      .def("density_of_fugacity", &ThermoTable::density_of_fugacity, py::arg("phi"))
      .def("fugacity_of_density", &ThermoTable::fugacity_of_density, py::arg("rho"))
      .def("moment", &ThermoTable::moment, py::arg("j"), py::arg("rho"))
      .def(
          "transport_coefficients",
          [](const ThermoTable& t, double rho) {
            const Transport tc = t.transport_coefficients(rho);
            py::dict d;
            d["D"] = tc.D;
            d["S"] = tc.S;
            d["chi"] = tc.chi;
            d["sigma2"] = tc.sigma2;
            d["Sprime_rho"] = tc.Sprime_rho;
            return d;
          },
          py::arg("rho"))
      .def(
          "colour_coefficients",
          [](const ThermoTable& t, const std::vector<double>& rho_vec) {
            const ColourCoefficients cc = t.colour_coefficients(rho_vec);
            py::dict d;
            d["k"] = cc.k;
            d["phi_vec"] = cc.phi_vec;
            d["A_diag"] = cc.A_diag;
            std::vector<std::vector<double>> mat(static_cast<std::size_t>(cc.k));
            for (int i = 0; i < cc.k; ++i)
              mat[static_cast<std::size_t>(i)] = std::vector<double>(
                  cc.D_matrix.begin() + static_cast<std::ptrdiff_t>(i) * cc.k,
                  cc.D_matrix.begin() + static_cast<std::ptrdiff_t>(i + 1) * cc.k);
            d["D_matrix"] = mat;
            return d;
          },
          py::arg("rho_vec"));

  m.def("site_marginal_pmf", &site_marginal_pmf, py::arg("thermo"), py::arg("k"),
        py::arg("phi"));
  m.def(
      "sample_grand_canonical",
      [](const ThermoTable& t, int n, double rho, std::uint64_t seed, std::uint64_t replica) {
        RandomStream rng = RandomStream::for_replica(seed, replica, 2);
        return sample_grand_canonical(t, n, rho, rng).counts;
      },
      py::arg("thermo"), py::arg("n_sites"), py::arg("rho"), py::arg("seed"),
      py::arg("replica") = 0);
  m.def(
      "sample_canonical",
      [](const ThermoTable& t, int n, std::int64_t total, std::uint64_t seed,
         std::uint64_t replica) {
        RandomStream rng = RandomStream::for_replica(seed, replica, 2);
        return sample_canonical(t, n, total, rng).counts;
      },
      py::arg("thermo"), py::arg("n_sites"), py::arg("n_total"), py::arg("seed"),
      py::arg("replica") = 0);
  m.def("exact_total_pmf", &exact_total_pmf, py::arg("thermo"), py::arg("n_sites"),
        py::arg("n"), py::arg("phi"));
  m.def("total_pmf_table", &total_pmf_table, py::arg("thermo"), py::arg("n_sites"),
        py::arg("phi"));
  m.def("hermite", &hermite, py::arg("m"), py::arg("x"));
  m.def("edgeworth_pmf_approx", &edgeworth_pmf_approx, py::arg("thermo"),
        py::arg("n_sites"), py::arg("n"), py::arg("rho"), py::arg("J"));
  m.def(
      "colour_split",
      [](const std::vector<std::int32_t>& counts, const std::vector<double>& p,
         std::uint64_t seed) {
        RandomStream rng(seed);
        return colour_split(config_from_counts(counts), p, rng).counts_i;
      },
      py::arg("counts"), py::arg("p"), py::arg("seed"));

  py::class_<SimState>(m, "SimState")
      .def(py::init([](const RateFunction& rate, const std::vector<std::int32_t>& counts,
                       std::uint64_t seed, std::uint64_t replica, bool registry) {
             auto main = RandomStream::for_replica(seed, replica, 0);
             auto label = RandomStream::for_replica(seed, replica, 1);
             if (registry)
               return SimState(rate, config_from_counts(counts), main, label,
                               std::vector<int>{});
             return SimState(rate, config_from_counts(counts), main, label);
           }),
           py::arg("rate"), py::arg("counts"), py::arg("seed"), py::arg("replica") = 0,
           py::arg("registry") = false)
      .def(py::init([](const RateFunction& rate,
                       const std::vector<std::vector<std::int32_t>>& colour_counts,
                       std::uint64_t seed, std::uint64_t replica) {
             ColourConfiguration cc;
             cc.counts_i = colour_counts;
             return SimState(rate, std::move(cc), RandomStream::for_replica(seed, replica, 0),
                             RandomStream::for_replica(seed, replica, 1));
           }),
           py::arg("rate"), py::arg("colour_counts"), py::arg("seed"), py::arg("replica") = 0)
      .def("run_until_macro", &SimState::run_until_macro, py::arg("t_macro"))
      .def("step",
           [](SimState& s) {
             const Event ev = s.step();
             py::dict d;
             d["occurred"] = ev.occurred;
             d["site_from"] = ev.site_from;
             d["site_to"] = ev.site_to;
             d["colour"] = ev.colour;
             d["particle_id"] = ev.particle_id;
             d["dt_micro"] = ev.dt_micro;
             return d;
           })
      .def_property_readonly("counts", &SimState::counts)
      .def("colour_counts", &SimState::colour_counts, py::arg("colour"))
      .def_property_readonly("t_micro", &SimState::t_micro)
      .def_property_readonly("t_macro", &SimState::t_macro)
      .def_property_readonly("event_count", &SimState::event_count)
      .def_property_readonly("n_particles", &SimState::n_particles)
      .def_property_readonly("total_rate", &SimState::total_rate)
      .def("tagged_displacement", &SimState::tagged_displacement, py::arg("particle_id"))
      .def("snapshot_density",
           [](const SimState& s, int bin) { return s.snapshot_density(bin).comps; },
           py::arg("bin"))
      .def("audit_weights", &SimState::audit_weights);

  m.def("make_profile", &make_profile, py::arg("kind"), py::arg("m_grid"), py::arg("a"),
        py::arg("b") = 0.0, py::arg("z") = 1);
  m.def(
      "basis_e", [](int z, int m_grid) { return basis_e(z, m_grid).samples; }, py::arg("z"),
      py::arg("m_grid"));
  m.def("grid_coefficients", &grid_coefficients, py::arg("grid_fn"), py::arg("z_max"));
  m.def(
      "solve_hydro",
      [](const ThermoTable& t, const std::vector<std::vector<double>>& comps, double time) {
        DensityProfile p;
        p.comps = comps;
        return solve_hydro(t, p, time).comps;
      },
      py::arg("thermo"), py::arg("rho0"), py::arg("t"));
  m.def(
      "semigroup_apply",
      [](const ThermoTable& t, const std::vector<double>& f, double s, double time,
         const std::string& kind, const std::vector<std::vector<double>>& rho_constant) {
        DensityProfile p;
        p.comps = rho_constant;
        const RhoPath path = RhoPath::constant(p, 0.0, std::max(time, 1.0));
        TestFunction tf;
        tf.samples = f;
        const SemigroupKind k = (kind == "D") ? SemigroupKind::D : SemigroupKind::S;
        return semigroup_apply(t, tf, s, time, k, path).samples;
      },
      py::arg("thermo"), py::arg("f"), py::arg("s"), py::arg("t"), py::arg("kind"),
      py::arg("rho_constant"));
  m.def(
      "ou_variance_equilibrium",
      [](const ThermoTable& t, const std::vector<double>& f, double s, double time,
         const std::string& kind, const std::vector<std::vector<double>>& rho_constant,
         int colour, int quad_nodes) {
        DensityProfile p;
        p.comps = rho_constant;
        const RhoPath path = RhoPath::constant(p, 0.0, std::max(time, 1.0));
        TestFunction tf;
        tf.samples = f;
        NoiseKind nk = NoiseKind::colour_blind;
        if (kind == "colour_i") nk = NoiseKind::colour_i;
        if (kind == "deviation_i") nk = NoiseKind::deviation_i;
        return ou_variance(t, tf, s, time, nk, path, colour, quad_nodes);
      },
      py::arg("thermo"), py::arg("f"), py::arg("s"), py::arg("t"), py::arg("kind"),
      py::arg("rho_constant"), py::arg("colour") = 0, py::arg("quad_nodes") = 129);

  m.def("fluctuation_field", &fluctuation_field, py::arg("counts"), py::arg("centering"),
        py::arg("f"));
  m.def("h_minus_m_norm", &h_minus_m_norm, py::arg("coefficients_by_z"), py::arg("m"));
  m.def("star_norm", &star_norm, py::arg("f"));

  m.def(
      "estimate_moments",
      [](const std::vector<double>& samples) {
        const Moments mo = estimate_moments(samples);
        py::dict d;
        d["n"] = mo.n;
        d["mean"] = mo.mean;
        d["var"] = mo.var;
        d["skew"] = mo.skew;
        d["ex_kurt"] = mo.ex_kurt;
        d["se_mean"] = mo.se_mean;
        d["se_var"] = mo.se_var;
        return d;
      },
      py::arg("samples"));
  m.def(
      "compare_to_prediction",
      [](double var, double se_var, double predicted, double k_sigma) {
        const Verdict v = compare_to_prediction(var, se_var, predicted, k_sigma);
        return py::make_tuple(v.pass, v.z_score);
      },
      py::arg("var"), py::arg("se_var"), py::arg("predicted"), py::arg("k_sigma") = 3.0);
  m.def("chi_square_gof", &chi_square_gof, py::arg("counts"), py::arg("expected_pmf"));

  m.def(
      "run_experiment",
      [](const std::string& config_text, const std::string& experiment,
         const std::string& out_dir, int threads) {
        const ExperimentResult r =
            run_experiment(Config::from_string(config_text), experiment, out_dir, threads);
        py::dict d;
        d["pass"] = r.pass;
        d["summary"] = r.summary;
        d["metrics"] = r.metrics;
        return d;
      },
      py::arg("config_text"), py::arg("experiment"), py::arg("out_dir"),
      py::arg("threads") = 0);
}
