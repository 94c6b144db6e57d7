#pragma once

// Seeded Monte-Carlo trials, SNR sweeps, the NMSE metric, the flat
// key-value configuration format and the sweep CSV.

#include "rischest/baselines.hpp"
#include "rischest/channel.hpp"
#include "rischest/config.hpp"
#include "rischest/estimator.hpp"
#include "rischest/observation.hpp"
#include "rischest/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rischest {

enum class Alignment { optimal, unit_norm };

// ||c x_hat - x||^2 / ||x||^2 with c the least-squares complex scalar
// (or c = ||x|| / ||x_hat|| for unit-norm alignment).
inline double nmse(const Vec& estimate, const Vec& truth, Alignment alignment = Alignment::optimal)
{
    if (estimate.size() != truth.size())
        throw std::invalid_argument("nmse: length mismatch");
    const double energy = truth.squaredNorm();
    if (!(energy > 0))
        throw std::invalid_argument("nmse: reference vector is zero");
    const double e2 = estimate.squaredNorm();
    if (e2 == 0.0)
        return 1.0;
    const cplx c = alignment == Alignment::optimal ? estimate.dot(truth) / e2 : cplx(std::sqrt(energy / e2), 0.0);
    return (c * estimate - truth).squaredNorm() / energy;
}

inline double to_db(double v) { return 10.0 * std::log10(v); }

struct ExperimentSpec {
    SystemConfig system;
    std::vector<double> snr_db{0, 5, 10, 15, 20, 25, 30};
    int trials = 50;
    std::vector<std::string> estimators{"proposed", "qiht", "omp"};
    std::uint64_t seed = 1;
    std::string out = "sweep.csv";
    ProposedOptions proposed;
    int qiht_iterations = 100;
    double oracle_energy = 0.95;  // oracle K captures this share of ||x||^2
    int omp_subband = 0;
    bool quantized = true;        // false: unquantized debug data path
    bool on_grid = false;         // draw grid-aligned channels
    Alignment alignment = Alignment::optimal;
    int threads = 0;              // 0: hardware concurrency

    void validate() const
    {
        system.validate();
        proposed.validate();
        if (trials < 1)
            throw std::invalid_argument("ExperimentSpec: trials must be >= 1");
        if (snr_db.empty())
            throw std::invalid_argument("ExperimentSpec: snr grid is empty");
        if (estimators.empty())
            throw std::invalid_argument("ExperimentSpec: no estimators selected");
        for (const auto& e : estimators)
            if (e != "proposed" && e != "qiht" && e != "omp")
                throw std::invalid_argument("ExperimentSpec: unknown estimator '" + e + "'");
        if (omp_subband < 0 || omp_subband >= system.subcarriers)
            throw std::invalid_argument("ExperimentSpec: omp_subband out of range");
        if (!(oracle_energy > 0 && oracle_energy <= 1))
            throw std::invalid_argument("ExperimentSpec: oracle_energy must lie in (0, 1]");
        if (qiht_iterations < 0)
            throw std::invalid_argument("ExperimentSpec: qiht_iterations must be >= 0");
    }
};

struct TrialResult {
    std::string estimator;
    double snr_db = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    double nmse = 1.0;
    double nmse_db = 0.0;
    double wall_seconds = 0.0;
    int iterations = 0;           // ADMM / QIHT / OMP atoms
    int inner_iterations = 0;     // EM-GAMP: total GAMP iterations
    int sparsity = 0;             // oracle K granted to baselines
    double sparsity_rate = 0.0;   // EM-learned eta (proposed)
    bool ok = true;
    std::string error;

    bool same_outcome(const TrialResult& o) const
    {
        return estimator == o.estimator && snr_db == o.snr_db && trial == o.trial && seed == o.seed &&
               nmse == o.nmse && iterations == o.iterations && inner_iterations == o.inner_iterations &&
               sparsity == o.sparsity && sparsity_rate == o.sparsity_rate && ok == o.ok && error == o.error;
    }
};

inline nlohmann::json to_json(const TrialResult& r)
{
    return {{"estimator", r.estimator},       {"snr_db", r.snr_db},
            {"trial", r.trial},               {"seed", r.seed},
            {"nmse", r.nmse},                 {"nmse_db", r.nmse_db},
            {"wall_seconds", r.wall_seconds}, {"iterations", r.iterations},
            {"inner_iterations", r.inner_iterations}, {"sparsity", r.sparsity},
            {"sparsity_rate", r.sparsity_rate}, {"ok", r.ok},
            {"error", r.error}};
}

inline std::uint64_t trial_seed(std::uint64_t base, int trial)
{
    return derive_seed(base, static_cast<std::uint64_t>(trial));
}

// Random streams of one trial. Channel, noise and mask are shared by every
// estimator and SNR of the trial (common random numbers).
enum TrialStream : std::uint64_t { channel_stream = 1, noise_stream = 2, mask_stream = 3, solver_stream = 4 };

struct TrialData {
    SystemConfig system;
    StackedChannel channel;
    PilotBlock pilots;
    Mat noisy;            // Z + W (before quantization)
    double noise_variance = 0.0;
};

inline TrialData draw_trial(const ExperimentSpec& spec, double snr_db, std::uint64_t seed)
{
    TrialData d;
    d.system = spec.system;
    Rng channel_rng(derive_seed(seed, channel_stream));
    const ChannelRealization ch =
        spec.on_grid ? draw_on_grid_channel(spec.system, channel_rng) : draw_channel(spec.system, channel_rng);
    d.channel = stack_channel(ch, spec.system);
    d.pilots = zc_pilot_block(spec.system);
    const Dictionary psi(ModelDims::from(spec.system), d.pilots.c);
    const Mat z = noiseless_block(d.channel.x, psi);
    Rng noise_rng(derive_seed(seed, noise_stream));
    NoisyBlock noisy = add_awgn(z, snr_db, noise_rng);
    d.noisy = std::move(noisy.values);
    d.noise_variance = noisy.noise_variance;
    return d;
}

// One (estimator, snr, trial) cell. Estimator failures are recorded in the
// result; the trial is not aborted.
inline TrialResult run_trial(const ExperimentSpec& spec, const std::string& estimator, double snr_db, int trial)
{
    TrialResult r;
    r.estimator = estimator;
    r.snr_db = snr_db;
    r.trial = trial;
    r.seed = trial_seed(spec.seed, trial);
    const auto start = std::chrono::steady_clock::now();
    try {
        const TrialData d = draw_trial(spec, snr_db, r.seed);
        const SystemConfig& sys = spec.system;
        const Dictionary psi(ModelDims::from(sys), d.pilots.c);
        const Mat data = spec.quantized ? quantize_1bit(d.noisy) : d.noisy;

        if (estimator == "proposed") {
            Rng mask_rng(derive_seed(r.seed, mask_stream));
            const SamplingMask mask = sys.sampling_ratio >= 1.0
                                          ? SamplingMask::full(sys.n_rx(), sys.pilots)
                                          : SamplingMask::random(sys.n_rx(), sys.pilots, sys.sampling_ratio, mask_rng);
            const Observation obs = sample(data, mask, sys.subcarriers, d.noise_variance, spec.quantized);
            const ProposedResult est =
                run_proposed(obs, psi, sys.n_paths(), spec.proposed, derive_seed(r.seed, solver_stream));
            r.nmse = nmse(est.x, d.channel.x, spec.alignment);
            r.iterations = est.admm_iterations;
            r.inner_iterations = est.em.gamp_iterations;
            r.sparsity_rate = est.em.prior.sparsity;
        } else if (estimator == "qiht") {
            const Vec y = Eigen::Map<const Vec>(data.data(), data.size());
            BaselineConfig bc;
            bc.sparsity = oracle_sparsity(d.channel.x, spec.oracle_energy);
            bc.max_iterations = spec.qiht_iterations;
            const QihtResult est = qiht(spec.quantized ? y : Vec(quantize_1bit(y)), psi, bc);
            r.nmse = nmse(est.x, d.channel.x, spec.alignment);
            r.iterations = est.best_iteration;
            r.sparsity = bc.sparsity;
        } else if (estimator == "omp") {
            const SubbandOperator op(sys.rx, d.pilots.c);
            const Vec truth = subband_coefficients(d.channel.x, psi.dims(), spec.omp_subband);
            const Vec y = subband_measurements(data, sys.subcarriers, spec.omp_subband);
            const int k = oracle_sparsity(truth, spec.oracle_energy);
            const OmpResult est = omp(y, op, k);
            r.nmse = nmse(est.x, truth, spec.alignment);
            r.iterations = static_cast<int>(est.support.size());
            r.sparsity = k;
        } else {
            throw std::invalid_argument("run_trial: unknown estimator '" + estimator + "'");
        }
        r.nmse_db = to_db(r.nmse);
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
        r.nmse = 1.0;
        r.nmse_db = 0.0;
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepRow {
    std::string estimator;
    double snr_db = 0.0;
    double nmse_db_mean = 0.0;    // 10 log10 of the mean linear NMSE
    double nmse_db_stderr = 0.0;  // standard error mapped to dB (first order)
    int trials = 0;               // successful trials
    int failures = 0;

    bool operator==(const SweepRow& o) const
    {
        return estimator == o.estimator && snr_db == o.snr_db && nmse_db_mean == o.nmse_db_mean &&
               nmse_db_stderr == o.nmse_db_stderr && trials == o.trials;
    }
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<TrialResult> trials;  // ordered by (estimator, snr, trial)
};

inline SweepRow summarize(const std::string& estimator, double snr_db, const std::vector<TrialResult>& cell)
{
    SweepRow row;
    row.estimator = estimator;
    row.snr_db = snr_db;
    double sum = 0.0;
    double sum2 = 0.0;
    for (const auto& t : cell) {
        if (!t.ok) {
            ++row.failures;
            continue;
        }
        ++row.trials;
        sum += t.nmse;
        sum2 += t.nmse * t.nmse;
    }
    if (row.trials == 0) {
        row.nmse_db_mean = std::numeric_limits<double>::quiet_NaN();
        row.nmse_db_stderr = std::numeric_limits<double>::quiet_NaN();
        return row;
    }
    const double n = row.trials;
    const double mean = sum / n;
    const double var = n > 1 ? std::max(0.0, (sum2 - n * mean * mean) / (n - 1)) : 0.0;
    row.nmse_db_mean = to_db(mean);
    row.nmse_db_stderr = mean > 0 ? 10.0 / std::log(10.0) * std::sqrt(var / n) / mean : 0.0;
    return row;
}

using ProgressFn = std::function<void(const TrialResult&)>;

inline SweepResult sweep(const ExperimentSpec& spec, const ProgressFn& progress = {})
{
    spec.validate();
    struct Job {
        std::size_t estimator;
        std::size_t snr;
        int trial;
    };
    std::vector<Job> jobs;
    for (std::size_t e = 0; e < spec.estimators.size(); ++e)
        for (std::size_t s = 0; s < spec.snr_db.size(); ++s)
            for (int t = 0; t < spec.trials; ++t)
                jobs.push_back({e, s, t});

    std::vector<TrialResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const Job& j = jobs[i];
            results[i] = run_trial(spec, spec.estimators[j.estimator], spec.snr_db[j.snr], j.trial);
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(results[i]);
            }
        }
    };
    int n_threads = spec.threads > 0 ? spec.threads : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::clamp(n_threads, 1, static_cast<int>(jobs.size()));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < n_threads; ++i)
            pool.emplace_back(worker);
    }

    SweepResult out;
    for (std::size_t e = 0; e < spec.estimators.size(); ++e)
        for (std::size_t s = 0; s < spec.snr_db.size(); ++s) {
            std::vector<TrialResult> cell;
            for (std::size_t i = 0; i < jobs.size(); ++i)
                if (jobs[i].estimator == e && jobs[i].snr == s)
                    cell.push_back(results[i]);
            out.rows.push_back(summarize(spec.estimators[e], spec.snr_db[s], cell));
        }
    out.trials = std::move(results);
    return out;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s)
{
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf" || s == "+inf")
        return std::numeric_limits<double>::infinity();
    if (s == "-inf")
        return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("parse_double: not a number: '" + s + "'");
    return v;
}

inline constexpr const char* sweep_csv_header = "estimator,snr_db,nmse_db_mean,nmse_db_stderr,trials";

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows)
{
    os << sweep_csv_header << '\n';
    for (const auto& r : rows)
        os << r.estimator << ',' << format_double(r.snr_db) << ',' << format_double(r.nmse_db_mean) << ','
           << format_double(r.nmse_db_stderr) << ',' << r.trials << '\n';
}

inline std::vector<SweepRow> read_sweep_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != sweep_csv_header)
        throw std::runtime_error("read_sweep_csv: missing or unexpected header");
    std::vector<SweepRow> rows;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');)
            f.push_back(cell);
        if (f.size() != 5)
            throw std::runtime_error("read_sweep_csv: expected 5 fields in '" + line + "'");
        SweepRow r;
        r.estimator = f[0];
        r.snr_db = parse_double(f[1]);
        r.nmse_db_mean = parse_double(f[2]);
        r.nmse_db_stderr = parse_double(f[3]);
        r.trials = std::stoi(f[4]);
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Flat key-value configuration

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

inline bool parse_bool(const std::string& v)
{
    if (v == "1" || v == "true" || v == "yes" || v == "on")
        return true;
    if (v == "0" || v == "false" || v == "no" || v == "off")
        return false;
    throw std::invalid_argument("not a boolean: '" + v + "'");
}

inline int parse_int(const std::string& v)
{
    std::size_t pos = 0;
    const int i = std::stoi(v, &pos);
    if (pos != v.size())
        throw std::invalid_argument("not an integer: '" + v + "'");
    return i;
}

} // namespace detail

// Parses "a, b, c" or "lo:step:hi" into an SNR grid.
inline std::vector<double> parse_snr_grid(const std::string& text)
{
    const std::string t = detail::trim(text);
    if (t.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(t);
        for (std::string p; std::getline(ss, p, ':');)
            parts.push_back(detail::trim(p));
        if (parts.size() != 3)
            throw std::invalid_argument("snr grid range must be lo:step:hi");
        const double lo = parse_double(parts[0]);
        const double step = parse_double(parts[1]);
        const double hi = parse_double(parts[2]);
        if (!(step > 0) || hi < lo)
            throw std::invalid_argument("snr grid range needs step > 0 and hi >= lo");
        std::vector<double> grid;
        for (int i = 0; lo + i * step <= hi + 1e-9; ++i)
            grid.push_back(lo + i * step);
        return grid;
    }
    std::vector<double> grid;
    for (const auto& item : detail::split_list(t))
        grid.push_back(parse_double(item));
    if (grid.empty())
        throw std::invalid_argument("snr grid is empty");
    return grid;
}

using ConfigSetter = std::function<void(ExperimentSpec&, const std::string&)>;

struct ConfigKey {
    const char* name;
    const char* help;
    ConfigSetter set;
};

// Every key accepted in a config file (and as a --key CLI flag).
inline const std::vector<ConfigKey>& config_keys()
{
    using detail::parse_bool;
    using detail::parse_int;
    static const std::vector<ConfigKey> keys = {
        {"rx_horizontal", "RIS elements per row", [](ExperimentSpec& s, const std::string& v) { s.system.rx.horizontal = parse_int(v); }},
        {"rx_vertical", "RIS elements per column", [](ExperimentSpec& s, const std::string& v) { s.system.rx.vertical = parse_int(v); }},
        {"tx_horizontal", "UE elements per row", [](ExperimentSpec& s, const std::string& v) { s.system.tx.horizontal = parse_int(v); }},
        {"tx_vertical", "UE elements per column", [](ExperimentSpec& s, const std::string& v) { s.system.tx.vertical = parse_int(v); }},
        {"subcarriers", "sub-bands N_k", [](ExperimentSpec& s, const std::string& v) { s.system.subcarriers = parse_int(v); }},
        {"subcarrier_spacing_hz", "sub-band spacing", [](ExperimentSpec& s, const std::string& v) { s.system.subcarrier_spacing_hz = parse_double(v); }},
        {"carrier_hz", "carrier frequency", [](ExperimentSpec& s, const std::string& v) { s.system.carrier_hz = parse_double(v); }},
        {"pilots", "pilot symbols N_p", [](ExperimentSpec& s, const std::string& v) { s.system.pilots = parse_int(v); }},
        {"sampling_ratio", "fraction rho of RIS elements sampled", [](ExperimentSpec& s, const std::string& v) { s.system.sampling_ratio = parse_double(v); }},
        {"snr_db", "SNR of a single run", [](ExperimentSpec& s, const std::string& v) { s.system.snr_db = parse_double(v); }},
        {"clusters", "scattering clusters", [](ExperimentSpec& s, const std::string& v) { s.system.clusters = parse_int(v); }},
        {"subpaths", "paths per cluster", [](ExperimentSpec& s, const std::string& v) { s.system.subpaths = parse_int(v); }},
        {"angular_spread_deg", "intra-cluster angular spread", [](ExperimentSpec& s, const std::string& v) { s.system.angular_spread_deg = parse_double(v); }},
        {"element_spacing", "element spacing in wavelengths", [](ExperimentSpec& s, const std::string& v) { s.system.element_spacing_wavelengths = parse_double(v); }},
        {"snr_grid", "sweep SNRs: 'a,b,c' or 'lo:step:hi'", [](ExperimentSpec& s, const std::string& v) { s.snr_db = parse_snr_grid(v); }},
        {"trials", "Monte-Carlo trials per cell", [](ExperimentSpec& s, const std::string& v) { s.trials = parse_int(v); }},
        {"estimators", "comma list of proposed, qiht, omp", [](ExperimentSpec& s, const std::string& v) { s.estimators = detail::split_list(v); }},
        {"seed", "base seed", [](ExperimentSpec& s, const std::string& v) { s.seed = std::stoull(v); }},
        {"out", "output path", [](ExperimentSpec& s, const std::string& v) { s.out = v; }},
        {"threads", "worker threads (0: all cores)", [](ExperimentSpec& s, const std::string& v) { s.threads = parse_int(v); }},
        {"quantized", "1-bit data (false: unquantized debug path)", [](ExperimentSpec& s, const std::string& v) { s.quantized = parse_bool(v); }},
        {"on_grid", "grid-aligned channels", [](ExperimentSpec& s, const std::string& v) { s.on_grid = parse_bool(v); }},
        {"alignment", "NMSE alignment: optimal or unit", [](ExperimentSpec& s, const std::string& v) {
             if (v == "optimal")
                 s.alignment = Alignment::optimal;
             else if (v == "unit")
                 s.alignment = Alignment::unit_norm;
             else
                 throw std::invalid_argument("alignment must be optimal or unit");
         }},
        {"admm_nuclear_scale", "nuclear radius scale", [](ExperimentSpec& s, const std::string& v) { s.proposed.nuclear_scale = parse_double(v); }},
        {"admm_masked", "data term on observed entries only", [](ExperimentSpec& s, const std::string& v) { s.proposed.masked_residual = parse_bool(v); }},
        {"admm_exact_projection", "certified nuclear projection", [](ExperimentSpec& s, const std::string& v) { s.proposed.exact_projection = parse_bool(v); }},
        {"admm_max_iterations", "ADMM iteration cap", [](ExperimentSpec& s, const std::string& v) { s.proposed.admm_max_iterations = parse_int(v); }},
        {"admm_rank_hint", "partial-SVD rank hint", [](ExperimentSpec& s, const std::string& v) { s.proposed.admm_rank_hint = parse_int(v); }},
        {"admm_mu0", "initial penalty", [](ExperimentSpec& s, const std::string& v) { s.proposed.admm_mu0 = parse_double(v); }},
        {"admm_growth", "penalty growth factor", [](ExperimentSpec& s, const std::string& v) { s.proposed.admm_growth = parse_double(v); }},
        {"em_max_outer", "EM iterations t_max", [](ExperimentSpec& s, const std::string& v) { s.proposed.em.max_outer = parse_int(v); }},
        {"em_inner_iterations", "GAMP iterations per E-step", [](ExperimentSpec& s, const std::string& v) { s.proposed.em.inner_iterations = parse_int(v); }},
        {"em_tolerance", "relative stopping tolerance", [](ExperimentSpec& s, const std::string& v) { s.proposed.em.tolerance = parse_double(v); }},
        {"em_damping", "GAMP damping weight", [](ExperimentSpec& s, const std::string& v) { s.proposed.em.damping = parse_double(v); }},
        {"em_components", "mixture components L", [](ExperimentSpec& s, const std::string& v) { s.proposed.components = parse_int(v); }},
        {"em_initial_sparsity", "initial eta", [](ExperimentSpec& s, const std::string& v) { s.proposed.initial_sparsity = parse_double(v); }},
        {"fill_noise_ratio", "filled-entry noise / output power (0: homogeneous)", [](ExperimentSpec& s, const std::string& v) { s.proposed.fill_noise_ratio = parse_double(v); }},
        {"qiht_iterations", "QIHT iterations", [](ExperimentSpec& s, const std::string& v) { s.qiht_iterations = parse_int(v); }},
        {"oracle_energy", "energy share defining oracle K", [](ExperimentSpec& s, const std::string& v) { s.oracle_energy = parse_double(v); }},
        {"omp_subband", "sub-band index for OMP", [](ExperimentSpec& s, const std::string& v) { s.omp_subband = parse_int(v); }},
    };
    return keys;
}

inline void apply_config_value(ExperimentSpec& spec, const std::string& key, const std::string& value)
{
    for (const auto& k : config_keys())
        if (key == k.name) {
            try {
                k.set(spec, detail::trim(value));
            } catch (const std::exception& e) {
                throw std::invalid_argument("config key '" + key + "': " + e.what());
            }
            return;
        }
    throw std::invalid_argument("unknown config key '" + key + "'");
}

// "key = value" lines; '#' starts a comment.
inline void apply_config(ExperimentSpec& spec, std::istream& is)
{
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        apply_config_value(spec, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
}

inline void apply_config_file(ExperimentSpec& spec, const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file '" + path + "'");
    apply_config(spec, in);
}

} // namespace rischest
