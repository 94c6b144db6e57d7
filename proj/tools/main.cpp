// rischest: single trials, SNR sweeps and self-checks for the 1-bit
// semi-passive RIS channel estimator.

#include "rischest/baselines.hpp"
#include "rischest/channel.hpp"
#include "rischest/gamp.hpp"
#include "rischest/harness.hpp"
#include "rischest/observation.hpp"
#include "rischest/transform.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace rischest;

namespace {

struct CommonFlags {
    std::string config;
    std::string seed;
    std::string snr_grid;
    std::string trials;
    std::string estimators;
    std::string out;
    bool paper_scale = false;
    std::map<std::string, std::string> keys;
};

void add_common(CLI::App* app, CommonFlags& f)
{
    app->add_option("--config", f.config, "key = value configuration file");
    app->add_option("--seed", f.seed, "base seed");
    app->add_option("--snr-grid", f.snr_grid, "SNRs in dB: 'a,b,c' or 'lo:step:hi'");
    app->add_option("--trials", f.trials, "Monte-Carlo trials per cell");
    app->add_option("--estimators", f.estimators, "comma list of proposed, qiht, omp");
    app->add_option("--out", f.out, "output path");
    app->add_flag("--paper-scale", f.paper_scale, "32x32 RIS, 2x8 UE, 64 sub-bands");
    for (const auto& k : config_keys()) {
        const std::string name = k.name;
        if (name == "seed" || name == "trials" || name == "estimators" || name == "out" || name == "snr_grid")
            continue;
        app->add_option("--" + name, f.keys[name], k.help);
    }
}

// Defaults, then --paper-scale, then the config file, then individual flags.
ExperimentSpec build_spec(const CommonFlags& f)
{
    ExperimentSpec spec;
    if (f.paper_scale)
        spec.system = SystemConfig::paper_scale();
    if (!f.config.empty())
        apply_config_file(spec, f.config);
    const std::pair<const char*, const std::string*> named[] = {{"seed", &f.seed},
                                                                {"snr_grid", &f.snr_grid},
                                                                {"trials", &f.trials},
                                                                {"estimators", &f.estimators},
                                                                {"out", &f.out}};
    for (const auto& [key, value] : named)
        if (!value->empty())
            apply_config_value(spec, key, *value);
    for (const auto& [key, value] : f.keys)
        if (!value.empty())
            apply_config_value(spec, key, value);
    spec.validate();
    return spec;
}

nlohmann::json spec_json(const ExperimentSpec& s)
{
    return {{"rx", {s.system.rx.horizontal, s.system.rx.vertical}},
            {"tx", {s.system.tx.horizontal, s.system.tx.vertical}},
            {"subcarriers", s.system.subcarriers},
            {"pilots", s.system.pilots},
            {"sampling_ratio", s.system.sampling_ratio},
            {"clusters", s.system.clusters},
            {"subpaths", s.system.subpaths},
            {"seed", s.seed},
            {"quantized", s.quantized}};
}

int cmd_run(const CommonFlags& f, int trial)
{
    ExperimentSpec spec = build_spec(f);
    const double snr = f.snr_grid.empty() ? spec.system.snr_db : spec.snr_db.front();
    nlohmann::json results = nlohmann::json::array();
    bool ok = true;
    for (const auto& e : spec.estimators) {
        const TrialResult r = run_trial(spec, e, snr, trial);
        ok = ok && r.ok;
        results.push_back(to_json(r));
    }
    const nlohmann::json doc = {{"config", spec_json(spec)}, {"results", results}};
    std::cout << doc.dump(2) << '\n';
    if (!ok)
        std::cerr << "run: at least one estimator failed (see \"error\")\n";
    return ok ? 0 : 1;
}

int cmd_sweep(const CommonFlags& f, bool quiet)
{
    ExperimentSpec spec = build_spec(f);
    const std::size_t total = spec.estimators.size() * spec.snr_db.size() * static_cast<std::size_t>(spec.trials);
    std::size_t done = 0;
    const SweepResult result = sweep(spec, [&](const TrialResult& r) {
        ++done;
        if (!r.ok)
            std::cerr << "trial failed: " << r.estimator << " snr " << r.snr_db << " trial " << r.trial << ": "
                      << r.error << '\n';
        else if (!quiet)
            std::cerr << '[' << done << '/' << total << "] " << r.estimator << " snr " << r.snr_db << " trial "
                      << r.trial << " nmse " << r.nmse_db << " dB\n";
    });
    std::ofstream out(spec.out);
    if (!out) {
        std::cerr << "sweep: cannot write '" << spec.out << "'\n";
        return 2;
    }
    write_sweep_csv(out, result.rows);
    int failures = 0;
    for (const auto& row : result.rows)
        failures += row.failures;
    if (failures > 0) {
        std::cerr << "sweep: " << failures << " failed trial(s)\n";
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// selftest

struct Check {
    std::string name;
    std::function<bool(std::string&)> run;
};

std::string sci(double v)
{
    std::ostringstream os;
    os << std::scientific << std::setprecision(2) << v;
    return os.str();
}

double rel_err(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

Vec random_vec(Eigen::Index n, Rng& rng)
{
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = rng.complex_normal();
    return v;
}

std::vector<Check> selftests()
{
    std::vector<Check> checks;
    SystemConfig small;
    small.rx = {4, 2};
    small.tx = {2, 2};
    small.subcarriers = 4;
    small.pilots = 5;

    checks.push_back({"dictionary adjoint identity", [small](std::string& msg) {
                          Rng rng(11);
                          const Dictionary psi(ModelDims::from(small), zc_pilot_block(small).c);
                          const Vec x = random_vec(psi.cols(), rng);
                          const Vec z = random_vec(psi.rows(), rng);
                          const double err = std::abs(z.dot(psi.forward(x)) - psi.adjoint(z).dot(x)) /
                                             (z.norm() * psi.forward(x).norm());
                          msg = "relative mismatch " + sci(err);
                          return err < 1e-10;
                      }});
    checks.push_back({"joint basis is unitary", [small](std::string& msg) {
                          Rng rng(12);
                          const JointBasis s(ModelDims::from(small));
                          const Vec h = random_vec(s.size(), rng);
                          const double err = std::max(std::abs(s.forward(h).norm() - h.norm()) / h.norm(),
                                                      rel_err(s.adjoint(s.forward(h)), h));
                          msg = "error " + sci(err);
                          return err < 1e-10;
                      }});
    checks.push_back({"dictionary reproduces the received block", [small](std::string& msg) {
                          Rng rng(13);
                          const ChannelRealization ch = draw_channel(small, rng);
                          const StackedChannel st = stack_channel(ch, small);
                          const PilotBlock pb = zc_pilot_block(small);
                          const Dictionary psi(ModelDims::from(small), pb.c);
                          const Mat z = noiseless_block(st.x, psi);
                          double worst = 0.0;
                          for (int k = 0; k < small.subcarriers; ++k) {
                              const Mat hk = channel_at(ch, k * small.subcarrier_spacing_hz) * pb.t;
                              for (int r = 0; r < small.n_rx(); ++r)
                                  worst = std::max(worst, (z.row(r * small.subcarriers + k) - hk.row(r)).norm() /
                                                              hk.norm());
                          }
                          msg = "worst row error " + sci(worst);
                          return worst < 1e-10;
                      }});
    checks.push_back({"1-bit quantizer alphabet", [](std::string& msg) {
                          const double a = std::sqrt(0.5);
                          const bool ok = quantize_1bit(cplx(0.3, -2.0)) == cplx(a, -a) &&
                                          quantize_1bit(cplx(0.0, 0.0)) == cplx(a, a);
                          msg = ok ? "ok" : "unexpected symbol";
                          return ok;
                      }});
    checks.push_back({"nmse alignment", [](std::string& msg) {
                          Rng rng(14);
                          const Vec x = random_vec(16, rng);
                          const double a = nmse(cplx(0, 5) * x, x);
                          msg = "nmse(5j x, x) = " + sci(a);
                          return a < 1e-20;
                      }});
    checks.push_back({"probit output moments shrink variance", [](std::string& msg) {
                          const ScalarMoments m = one_bit_output_moments(cplx(1, 1), cplx(0, 0), 1.0, 1.0);
                          const double expect = 0.5 * std::sqrt(2.0 / std::numbers::pi);
                          msg = "mean " + std::to_string(m.mean.real()) + ", variance " + std::to_string(m.variance);
                          return std::abs(m.mean.real() - expect) < 1e-12 && m.variance < 1.0;
                      }});
    checks.push_back({"sweep CSV round trip", [](std::string& msg) {
                          std::vector<SweepRow> rows = {{"proposed", 20.0, -7.123456789012345, 0.25, 50, 0},
                                                        {"omp", 0.1, -0.3333333333333333, 1e-17, 3, 0}};
                          std::stringstream ss;
                          write_sweep_csv(ss, rows);
                          const auto back = read_sweep_csv(ss);
                          msg = std::to_string(back.size()) + " rows parsed";
                          return back == rows;
                      }});
    checks.push_back({"trial determinism", [](std::string& msg) {
                          ExperimentSpec spec;
                          spec.system.rx = {8, 8};
                          spec.system.subcarriers = 8;
                          spec.system.pilots = 8;
                          spec.proposed.em.max_outer = 3;
                          spec.proposed.admm_max_iterations = 20;
                          const TrialResult a = run_trial(spec, "proposed", 10.0, 3);
                          const TrialResult b = run_trial(spec, "proposed", 10.0, 3);
                          msg = "nmse " + std::to_string(a.nmse_db) + " dB" + (a.ok ? "" : ", error: " + a.error);
                          return a.ok && a.same_outcome(b);
                      }});
    return checks;
}

int cmd_selftest()
{
    int failed = 0;
    for (const auto& c : selftests()) {
        std::string msg;
        bool ok = false;
        try {
            ok = c.run(msg);
        } catch (const std::exception& e) {
            msg = std::string("exception: ") + e.what();
        }
        std::cout << (ok ? "PASS " : "FAIL ") << c.name << " (" << msg << ")\n";
        failed += ok ? 0 : 1;
    }
    std::cout << (failed == 0 ? "selftest: all checks passed\n" : "selftest: " + std::to_string(failed) + " check(s) failed\n");
    return failed == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"1-bit semi-passive RIS channel estimation experiments"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    int trial = 0;
    auto* run = app.add_subcommand("run", "one trial per estimator, JSON to stdout");
    add_common(run, run_flags);
    run->add_option("--trial", trial, "trial index (seeds derive from --seed and this)");

    CommonFlags sweep_flags;
    bool quiet = false;
    auto* sw = app.add_subcommand("sweep", "SNR sweep, CSV to --out");
    add_common(sw, sweep_flags);
    sw->add_flag("--quiet", quiet, "no per-trial progress on stderr");

    auto* st = app.add_subcommand("selftest", "invariant checks");

    CLI11_PARSE(app, argc, argv);
    try {
        if (run->parsed())
            return cmd_run(run_flags, trial);
        if (sw->parsed())
            return cmd_sweep(sweep_flags, quiet);
        if (st->parsed())
            return cmd_selftest();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
