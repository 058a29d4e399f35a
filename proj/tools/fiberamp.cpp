// Command-line front end: mode / solve / couple / sweep subcommands with
// plain-CSV outputs.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fiberamp/driver.hpp"
#include "fiberamp/io.hpp"

namespace {

using namespace fiberamp;

struct GlobalOpts {
    std::string config_path;
    std::string out_dir = "out";
    bool reproducible = false;
    int threads = 1;
};

SimulationConfig load_config(const GlobalOpts& g) {
    if (g.config_path.empty()) {
        SimulationConfig cfg;
        cfg.validate();
        return cfg;
    }
    std::ifstream in(g.config_path);
    if (!in) throw io_error("cannot read config file " + g.config_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

int run_mode(const GlobalOpts& g) {
    SimulationConfig cfg = load_config(g);
    OutputManifest manifest(g.out_dir);
    try {
        Driver drv(cfg);
        const Mesh& mesh = drv.mesh();
        const auto& ms = drv.mode(FieldId::signal);
        const auto& mp = drv.mode(FieldId::pump);
        double Vs = v_number(drv.phys(), drv.phys().lambda_s);
        double Vp = v_number(drv.phys(), drv.phys().lambda_p);
        std::cout << "signal: n_eff = " << ms.n_eff << ", beta = " << ms.beta
                  << " [1/l_0], V = " << Vs << "\n";
        std::cout << "pump:   n_eff = " << mp.n_eff << ", beta = " << mp.beta
                  << " [1/l_0], V = " << Vp << "\n";
        CsvTable tab({"x_m", "profile_signal", "profile_pump"});
        int samples_per_elem = 8;
        for (int ix = 0; ix < mesh.n_x; ++ix) {
            double x0 = mesh.x_breaks[ix], x1 = mesh.x_breaks[ix + 1];
            for (int q = 0; q < samples_per_elem; ++q) {
                double x = x0 + (x1 - x0) * q / samples_per_elem;
                tab.add_row({x * drv.scales().l_0, ms.profile(x), mp.profile(x)});
            }
        }
        tab.add_row({mesh.x_breaks.back() * drv.scales().l_0,
                     ms.profile(mesh.x_breaks.back()), mp.profile(mesh.x_breaks.back())});
        tab.write(manifest.path_for("mode.csv"), g.reproducible);
        manifest.finalize_complete();
        return 0;
    } catch (const std::exception& e) {
        manifest.finalize_incomplete(e.what());
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

void write_power_csv(OutputManifest& manifest, const Driver& drv,
                     const std::vector<double>& P_s, const std::vector<double>& P_p,
                     bool reproducible) {
    CsvTable tab({"z_m", "P_signal_W", "P_pump_W"});
    const Mesh& mesh = drv.mesh();
    for (int j = 0; j <= mesh.n_z_interior; ++j)
        tab.add_row({mesh.z_breaks[j] * drv.scales().l_0, P_s[j] * drv.scales().P_0,
                     P_p[j] * drv.scales().P_0});
    tab.write(manifest.path_for("power.csv"), reproducible);
}

void write_residual_csv(OutputManifest& manifest, const PicardResult& pr, bool reproducible) {
    CsvTable tab({"iter", "rel_change", "eta_s", "eta_p"});
    for (std::size_t i = 0; i < pr.rel_change.size(); ++i)
        tab.add_row({static_cast<double>(i + 1), pr.rel_change[i],
                     i < pr.eta_s.size() ? pr.eta_s[i] : 0.0,
                     i < pr.eta_p.size() ? pr.eta_p[i] : 0.0});
    tab.write(manifest.path_for("residual.csv"), reproducible);
}

int run_solve(const GlobalOpts& g) {
    SimulationConfig cfg = load_config(g);
    OutputManifest manifest(g.out_dir);
    try {
        Driver drv(cfg);
        MaterialState ambient{};
        PicardResult pr = drv.picard_solve(ambient, nullptr, nullptr, true);
        std::vector<double> P_s, P_p;
        drv.power_curves(pr, P_s, P_p);
        write_power_csv(manifest, drv, P_s, P_p, g.reproducible);
        write_residual_csv(manifest, pr, g.reproducible);
        std::vector<double> eta = efficiency_curve(P_s, P_p);
        std::cout << "picard iterations: " << pr.iterations
                  << (pr.converged ? " (converged)" : " (NOT converged)") << "\n";
        std::cout << "P_signal(L) = " << P_s.back() * drv.scales().P_0
                  << " W, P_pump(L) = " << P_p.back() * drv.scales().P_0
                  << " W, efficiency = " << eta.back() << "\n";
        manifest.finalize_complete();
        return pr.converged ? 0 : 2;
    } catch (const std::exception& e) {
        manifest.finalize_incomplete(e.what());
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_couple(const GlobalOpts& g) {
    SimulationConfig cfg = load_config(g);
    OutputManifest manifest(g.out_dir);
    try {
        Driver drv(cfg);
        const Mesh& mesh = drv.mesh();
        CoupledResult res = drv.coupled_run([](const StepRecord& rec) {
            std::cout << "t = " << rec.t_hat << ": picard " << rec.picard_iters
                      << " iters, peak dT = " << rec.peak_dT << "\n";
        });
        const StepRecord& last = res.history.back();
        write_power_csv(manifest, drv, last.P_s, last.P_p, g.reproducible);
        write_residual_csv(manifest, res.fields, g.reproducible);

        // temperature field on a per-element sample grid
        {
            CsvTable tab({"x_m", "z_m", "dT_kelvin"});
            const double pts[3] = {-1.0, 0.0, 1.0};
            int n_elem = mesh.n_x * mesh.n_z_interior;
            for (int e = 0; e < n_elem; ++e) {
                const Mesh::Elem& el = mesh.elems[e];
                for (double b : pts)
                    for (double a : pts) {
                        double x = 0.5 * (el.x0 + el.x1) + 0.5 * (el.x1 - el.x0) * a;
                        double z = 0.5 * (el.z0 + el.z1) + 0.5 * (el.z1 - el.z0) * b;
                        tab.add_row({x * drv.scales().l_0, z * drv.scales().l_0,
                                     res.dT.eval(mesh, e, x, z) * drv.scales().T_0});
                    }
            }
            tab.write(manifest.path_for("temperature.csv"), g.reproducible);
        }

        // refractive index along x in the peak-temperature z slice
        {
            double zs = last.peak_dT_z;
            MaterialState mat{std::make_shared<HeatState>(res.dT)};
            CsvTable tab({"x_m", "n"});
            for (int ix = 0; ix < mesh.n_x; ++ix) {
                double x0 = mesh.x_breaks[ix], x1 = mesh.x_breaks[ix + 1];
                for (int q = 0; q < 8; ++q) {
                    double x = x0 + (x1 - x0) * (q + 0.5) / 8;
                    int e = mesh.locate(x, zs);
                    tab.add_row({x * drv.scales().l_0, drv.refractive_index(mat, e, x, zs)});
                }
            }
            tab.write(manifest.path_for("refindex.csv"), g.reproducible);
        }

        {
            CsvTable tab({"t_hat", "picard_iters", "rel_change", "peak_dT_kelvin",
                          "peak_dT_x_m", "peak_dT_z_m", "boundary_flux", "volumetric_heat",
                          "efficiency_out"});
            for (const StepRecord& r : res.history) {
                std::vector<double> eta = efficiency_curve(r.P_s, r.P_p);
                tab.add_row({r.t_hat, static_cast<double>(r.picard_iters), r.picard_rel_change,
                             r.peak_dT * drv.scales().T_0, r.peak_dT_x * drv.scales().l_0,
                             r.peak_dT_z * drv.scales().l_0, r.boundary_flux,
                             r.volumetric_heat, eta.back()});
            }
            tab.write(manifest.path_for("history.csv"), g.reproducible);
        }
        manifest.finalize_complete();
        return 0;
    } catch (const std::exception& e) {
        manifest.finalize_incomplete(e.what());
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_sweep(const GlobalOpts& g) {
    SimulationConfig base = load_config(g);
    OutputManifest manifest(g.out_dir);
    const std::vector<int> lengths = {15, 30, 60, 120};
    const std::vector<double> gains = {1.25e3, 2.5e3, 5e3, 1e4, 2e4, 4e4};
    try {
        std::vector<std::string> header = {"num_wavelengths"};
        for (double ga : gains) header.push_back("ga_" + io::format_number(ga));
        CsvTable tab(header);
        for (int nl : lengths) {
            std::vector<double> row = {static_cast<double>(nl)};
            for (double ga : gains) {
                SimulationConfig cfg = base;
                cfg.num_wavelengths = nl;
                cfg.gain_scale = ga;
                cfg.validate();
                Driver drv(cfg);
                MaterialState ambient{};
                PicardResult pr = drv.picard_solve(ambient);
                row.push_back(static_cast<double>(pr.converged ? pr.iterations : -1));
                std::cout << "N_lambda = " << nl << ", gain_scale = " << ga << ": "
                          << pr.iterations << " iterations"
                          << (pr.converged ? "" : " (NOT converged)") << "\n";
            }
            tab.add_row(row);
        }
        tab.write(manifest.path_for("iterations.csv"), g.reproducible);
        manifest.finalize_complete();
        return 0;
    } catch (const std::exception& e) {
        manifest.finalize_incomplete(e.what());
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Yb-doped fiber amplifier DPG simulator"};
    app.require_subcommand(1);
    GlobalOpts g;
    app.add_option("--config", g.config_path, "configuration file (key = value lines)");
    app.add_option("--out", g.out_dir, "output directory");
    app.add_flag("--reproducible", g.reproducible, "suppress timestamps for byte-identical output");
    app.add_option("--threads", g.threads, "worker thread count (current solver is serial)");

    auto* mode = app.add_subcommand("mode", "solve the fundamental slab modes");
    auto* solve = app.add_subcommand("solve", "one Picard solve at ambient temperature");
    auto* couple = app.add_subcommand("couple", "full thermally coupled time loop");
    auto* sweep = app.add_subcommand("sweep", "iteration-count grid over length and gain scale");
    // let the global flags appear after the subcommand too
    for (CLI::App* sub : {mode, solve, couple, sweep}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);
    try {
        if (mode->parsed()) return run_mode(g);
        if (solve->parsed()) return run_solve(g);
        if (couple->parsed()) return run_couple(g);
        if (sweep->parsed()) return run_sweep(g);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
