#include "test_support.hpp"

#include "rischest/harness.hpp"

#include <doctest.h>

#include <limits>
#include <sstream>

using namespace rischest;
using namespace testing;

namespace {

ExperimentSpec small_spec()
{
    ExperimentSpec s;
    s.system.rx = {8, 8};
    s.system.tx = {2, 2};
    s.system.subcarriers = 8;
    s.system.pilots = 8;
    s.system.clusters = 2;
    s.system.subpaths = 2;
    s.system.sampling_ratio = 0.25;
    s.trials = 3;
    s.snr_db = {10.0};
    s.proposed.em.max_outer = 5;
    s.proposed.admm_max_iterations = 30;
    s.qiht_iterations = 20;
    s.threads = 1;
    return s;
}

} // namespace

TEST_CASE("nmse: identity, scalar alignment, orthogonal and zero estimates")
{
    Rng rng(1);
    const Vec x = random_vec(32, rng);
    CHECK(nmse(x, x) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(nmse(cplx(0, 5) * x, x) < 1e-24);
    Vec e = Vec::Zero(4);
    Vec f = Vec::Zero(4);
    e(0) = 1.0;
    f(1) = cplx(0, 2);
    CHECK(nmse(f, e) == doctest::Approx(1.0));
    CHECK(nmse(Vec::Zero(32), x) == 1.0);
    CHECK(nmse(random_vec(32, rng), x) >= 0.0);
    CHECK(nmse(2.0 * x, x, Alignment::unit_norm) < 1e-24);
    CHECK(nmse(-x, x, Alignment::unit_norm) == doctest::Approx(4.0));
    CHECK_THROWS_AS(nmse(x, Vec::Zero(32)), std::invalid_argument);
    CHECK_THROWS_AS(nmse(Vec::Zero(3), x), std::invalid_argument);
}

TEST_CASE("trials are bit-identical for the same seed")
{
    const ExperimentSpec spec = small_spec();
    for (const std::string e : {"proposed", "qiht", "omp"}) {
        const TrialResult a = run_trial(spec, e, 10.0, 2);
        const TrialResult b = run_trial(spec, e, 10.0, 2);
        CAPTURE(e);
        CHECK(a.ok);
        CHECK(a.same_outcome(b));
        CHECK(a.nmse >= 0.0);
    }
    CHECK(run_trial(spec, "proposed", 10.0, 2).seed != run_trial(spec, "proposed", 10.0, 3).seed);
}

TEST_CASE("estimator failures are recorded, not thrown")
{
    const TrialResult r = run_trial(small_spec(), "nonsense", 10.0, 0);
    CHECK_FALSE(r.ok);
    CHECK(r.error.find("unknown estimator") != std::string::npos);
}

TEST_CASE("noiseless unquantized fully sampled proposed estimate is exact")
{
    ExperimentSpec spec = small_spec();
    spec.quantized = false;
    spec.system.sampling_ratio = 1.0;
    spec.proposed.em.max_outer = 25;
    spec.proposed.em.inner_iterations = 50;
    spec.proposed.em.tolerance = 1e-9;
    const TrialResult r = run_trial(spec, "proposed", std::numeric_limits<double>::infinity(), 0);
    CHECK(r.ok);
    CHECK(r.nmse <= 1e-4);
}

TEST_CASE("one estimator, one SNR, one trial gives one CSV row")
{
    ExperimentSpec spec = small_spec();
    spec.trials = 1;
    spec.estimators = {"omp"};
    const SweepResult res = sweep(spec);
    REQUIRE(res.rows.size() == 1);
    std::stringstream ss;
    write_sweep_csv(ss, res.rows);
    std::string line;
    int lines = 0;
    while (std::getline(ss, line))
        ++lines;
    CHECK(lines == 2);
    CHECK(res.rows[0].trials == 1);
}

TEST_CASE("sweep means equal the replayed trials, in any thread count")
{
    ExperimentSpec spec = small_spec();
    spec.snr_db = {0.0, 20.0};
    spec.estimators = {"proposed", "omp"};
    const SweepResult one = sweep(spec);
    spec.threads = 3;
    const SweepResult many = sweep(spec);
    REQUIRE(one.rows.size() == 4);
    CHECK(one.rows == many.rows);
    for (const SweepRow& row : one.rows) {
        std::vector<TrialResult> replay;
        double sum = 0.0;
        for (int t = 0; t < spec.trials; ++t) {
            replay.push_back(run_trial(spec, row.estimator, row.snr_db, t));
            sum += replay.back().nmse;
        }
        CHECK(summarize(row.estimator, row.snr_db, replay) == row);
        CHECK(row.nmse_db_mean == doctest::Approx(to_db(sum / spec.trials)));
    }
}

TEST_CASE("summary of a cell with failures")
{
    std::vector<TrialResult> cell(3);
    cell[0].nmse = 0.1;
    cell[1].nmse = 0.3;
    cell[2].ok = false;
    const SweepRow row = summarize("qiht", 5.0, cell);
    CHECK(row.trials == 2);
    CHECK(row.failures == 1);
    CHECK(row.nmse_db_mean == doctest::Approx(to_db(0.2)));
    CHECK(std::isnan(summarize("qiht", 5.0, {cell[2]}).nmse_db_mean));
}

TEST_CASE("sweep CSV round-trips exactly")
{
    const std::vector<SweepRow> rows = {{"proposed", 20.0, -7.123456789012345, 0.25, 50, 0},
                                        {"omp", 0.1, -1.0 / 3.0, 1e-300, 3, 0},
                                        {"qiht", -5.0, std::numeric_limits<double>::quiet_NaN(), 0.0, 0, 2}};
    std::stringstream ss;
    write_sweep_csv(ss, rows);
    const std::string text = ss.str();
    CHECK(text.rfind("estimator,snr_db,nmse_db_mean,nmse_db_stderr,trials\n", 0) == 0);
    const auto back = read_sweep_csv(ss);
    REQUIRE(back.size() == 3);
    CHECK(back[0] == rows[0]);
    CHECK(back[1] == rows[1]);
    CHECK(std::isnan(back[2].nmse_db_mean));
    std::stringstream again;
    write_sweep_csv(again, back);
    CHECK(again.str() == text);

    std::stringstream bad("wrong,header\n");
    CHECK_THROWS_AS(read_sweep_csv(bad), std::runtime_error);
    std::stringstream short_row(std::string(sweep_csv_header) + "\nproposed,1,2\n");
    CHECK_THROWS_AS(read_sweep_csv(short_row), std::runtime_error);
}

TEST_CASE("paper-scale configuration")
{
    const SystemConfig c = SystemConfig::paper_scale();
    CHECK(c.n_rx() == 1024);
    CHECK(c.n_tx() == 16);
    CHECK(c.subcarriers == 64);
    CHECK(c.pilots == 16);
    CHECK(c.sampling_ratio == 0.08);
    ExperimentSpec spec;
    spec.system = c;
    apply_config_value(spec, "pilots", "32");
    CHECK_NOTHROW(spec.validate());
    CHECK(ModelDims::from(spec.system).n_coefficients() == 64 * 1024 * 16);
}

TEST_CASE("desk-scale defaults")
{
    const ExperimentSpec spec;
    CHECK(spec.system.n_rx() == 256);
    CHECK(spec.system.n_tx() == 8);
    CHECK(spec.system.subcarriers == 16);
    CHECK(spec.system.pilots == 16);
    CHECK(spec.system.n_paths() == 20);
    CHECK(spec.trials == 50);
    CHECK(spec.snr_db == std::vector<double>{0, 5, 10, 15, 20, 25, 30});
}

TEST_CASE("config files set every key and reject junk")
{
    ExperimentSpec spec;
    std::stringstream cfg("# comment\n"
                          "rx_horizontal = 8   # trailing\n"
                          "rx_vertical=4\n"
                          "\n"
                          "snr_grid = 0:10:20\n"
                          "estimators = omp, qiht\n"
                          "quantized = false\n"
                          "alignment = unit\n"
                          "em_max_outer = 7\n"
                          "seed = 99\n");
    apply_config(spec, cfg);
    CHECK(spec.system.rx == ArrayShape{8, 4});
    CHECK(spec.snr_db == std::vector<double>{0, 10, 20});
    CHECK(spec.estimators == std::vector<std::string>{"omp", "qiht"});
    CHECK_FALSE(spec.quantized);
    CHECK(spec.alignment == Alignment::unit_norm);
    CHECK(spec.proposed.em.max_outer == 7);
    CHECK(spec.seed == 99);

    std::stringstream unknown("no_such_key = 1\n");
    CHECK_THROWS_AS(apply_config(spec, unknown), std::invalid_argument);
    std::stringstream missing_eq("trials 5\n");
    CHECK_THROWS_AS(apply_config(spec, missing_eq), std::invalid_argument);
    CHECK_THROWS_AS(apply_config_value(spec, "trials", "five"), std::invalid_argument);
    CHECK_THROWS_AS(apply_config_value(spec, "quantized", "maybe"), std::invalid_argument);
    CHECK_THROWS_AS(apply_config_file(spec, "/nonexistent/config.txt"), std::runtime_error);

    ExperimentSpec invalid;
    invalid.trials = 0;
    CHECK_THROWS_AS(invalid.validate(), std::invalid_argument);
    invalid = ExperimentSpec{};
    invalid.snr_db.clear();
    CHECK_THROWS_AS(invalid.validate(), std::invalid_argument);
    invalid = ExperimentSpec{};
    invalid.estimators = {"lasso"};
    CHECK_THROWS_AS(invalid.validate(), std::invalid_argument);
}

TEST_CASE("snr grid parsing")
{
    CHECK(parse_snr_grid("0,5, 10") == std::vector<double>{0, 5, 10});
    CHECK(parse_snr_grid("0:5:30").size() == 7);
    CHECK(parse_snr_grid("-10:2.5:-5") == std::vector<double>{-10, -7.5, -5});
    CHECK(std::isinf(parse_snr_grid("inf").front()));
    CHECK_THROWS_AS(parse_snr_grid(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_snr_grid("0:0:10"), std::invalid_argument);
    CHECK_THROWS_AS(parse_snr_grid("0:5"), std::invalid_argument);
    CHECK_THROWS_AS(parse_snr_grid("a,b"), std::invalid_argument);
}

TEST_CASE("double formatting is shortest round-trip")
{
    for (double v : {0.1, -7.123456789012345, 1e-300, 30.0, 1.0 / 3.0})
        CHECK(parse_double(format_double(v)) == v);
    CHECK(format_double(20.0) == "20");
    CHECK_THROWS_AS(parse_double("1.0x"), std::invalid_argument);
}

TEST_CASE("trial JSON carries every field")
{
    const TrialResult r = run_trial(small_spec(), "omp", 10.0, 0);
    const nlohmann::json j = to_json(r);
    for (const char* key : {"estimator", "snr_db", "trial", "seed", "nmse", "nmse_db", "wall_seconds", "iterations",
                            "inner_iterations", "sparsity", "sparsity_rate", "ok", "error"})
        CHECK(j.contains(key));
    CHECK(j["nmse_db"].get<double>() == doctest::Approx(to_db(r.nmse)));
}
