#include "test_support.hpp"

#include "rischest/observation.hpp"
#include "rischest/transform.hpp"

#include <doctest.h>

#include <thread>
#include <vector>

using namespace rischest;
using namespace testing;

TEST_CASE("dft of an impulse is flat")
{
    const DftBasis f(4);
    Vec e = Vec::Zero(4);
    e(0) = 1.0;
    const Vec out = f.forward(e);
    for (Eigen::Index i = 0; i < 4; ++i)
        CHECK(std::abs(out(i) - cplx(0.5, 0.0)) < 1e-15);
}

TEST_CASE("dft of a constant is an impulse")
{
    const Vec out = DftBasis(4).forward(Vec::Ones(4));
    CHECK(std::abs(out(0) - cplx(2.0, 0.0)) < 1e-14);
    for (Eigen::Index i = 1; i < 4; ++i)
        CHECK(std::abs(out(i)) < 1e-14);
}

TEST_CASE("dft matches the explicit matrix")
{
    Rng rng(1);
    for (int n : {1, 2, 3, 5, 8, 16, 17}) {
        const Vec v = random_vec(n, rng);
        const DftBasis f(n);
        CHECK(rel_err(f.forward(v), dft(n) * v) < 1e-12);
        CHECK(rel_err(f.adjoint(v), dft(n).adjoint() * v) < 1e-12);
    }
}

TEST_CASE("transforms reject wrong lengths")
{
    CHECK_THROWS_AS(DftBasis(4).forward(Vec::Zero(5)), std::invalid_argument);
    CHECK_THROWS_AS(UpaBasis({2, 2}).apply(Vec::Zero(3)), std::invalid_argument);
    const ModelDims d{{2, 2}, {2, 1}, 2, 2};
    const Dictionary psi(d, Mat::Identity(2, 2));
    CHECK_THROWS_AS(psi.forward(Vec::Zero(psi.cols() + 1)), std::invalid_argument);
    CHECK_THROWS_AS(psi.adjoint(Vec::Zero(psi.rows() - 1)), std::invalid_argument);
    CHECK_THROWS_AS(JointBasis(d).forward(Vec::Zero(3)), std::invalid_argument);
}

TEST_CASE("upa basis: impulse, unitarity and the Kronecker oracle")
{
    const UpaBasis b22({2, 2});
    Vec e = Vec::Zero(4);
    e(0) = 1.0;
    const Vec flat = b22.apply(e);
    for (Eigen::Index i = 0; i < 4; ++i)
        CHECK(std::abs(flat(i) - cplx(0.5, 0.0)) < 1e-15);

    Rng rng(2);
    for (ArrayShape s : {ArrayShape{2, 4}, ArrayShape{4, 2}, ArrayShape{3, 5}, ArrayShape{8, 8}}) {
        const UpaBasis b(s);
        const Vec v = random_vec(s.size(), rng);
        CHECK(rel_err(b.apply(b.apply(v), true), v) < 1e-10);
        CHECK(rel_err(b.apply(v), upa(s) * v) < 1e-10);
        CHECK(rel_err(b.apply(v, true), upa(s).adjoint() * v) < 1e-10);
    }
}

TEST_CASE("upa basis applies column by column")
{
    Rng rng(3);
    const ArrayShape s{4, 2};
    const Mat m = random_mat(s.size(), 5, rng);
    CHECK(rel_err(UpaBasis(s).apply_columns(m), Mat(upa(s) * m)) < 1e-12);
    CHECK(rel_err(UpaBasis(s).apply_columns(m, true), Mat(upa(s).adjoint() * m)) < 1e-12);
}

TEST_CASE("dictionary: zero maps to zero")
{
    const ModelDims d{{2, 2}, {2, 1}, 2, 2};
    const Dictionary psi(d, Mat::Identity(2, 2));
    CHECK(psi.forward(Vec::Zero(psi.cols())).norm() == 0.0);
}

TEST_CASE("dictionary matches the explicit 16x16 matrix")
{
    Rng rng(4);
    const ModelDims d{{2, 2}, {2, 1}, 2, 2};
    const Mat c = random_mat(2, 2, rng);
    const Dictionary psi(d, c);
    REQUIRE(psi.rows() == 16);
    REQUIRE(psi.cols() == 16);
    const Mat dense = dense_dictionary(d, c);
    const Vec x = random_vec(16, rng);
    const Vec z = random_vec(16, rng);
    CHECK(rel_err(psi.forward(x), dense * x) < 1e-10);
    CHECK(rel_err(psi.adjoint(z), dense.adjoint() * z) < 1e-10);
}

TEST_CASE("dictionary rejects a missing or misshapen pilot matrix")
{
    const ModelDims d{{2, 2}, {2, 1}, 2, 2};
    CHECK_THROWS_AS(Dictionary(d, Mat()), std::invalid_argument);
    CHECK_THROWS_AS(Dictionary(d, Mat::Identity(3, 2)), std::invalid_argument);
}

TEST_CASE("fft paths equal explicit matrices on every small instance")
{
    Rng rng(5);
    const std::vector<ModelDims> shapes = {
        {{2, 2}, {2, 1}, 2, 2}, {{2, 1}, {1, 2}, 4, 3}, {{4, 2}, {2, 1}, 2, 4},
        {{3, 1}, {1, 1}, 5, 2}, {{2, 2}, {2, 2}, 4, 4}, {{4, 4}, {2, 1}, 2, 1},
    };
    for (const auto& d : shapes) {
        CAPTURE(d.n_coefficients());
        REQUIRE(d.n_coefficients() <= 256);
        const Mat c = random_mat(d.n_tx(), d.pilots, rng);
        const Dictionary psi(d, c);
        const Mat dense_psi = dense_dictionary(d, c);
        const JointBasis s(d);
        const Mat dense_s = dense_joint_basis(d);
        const Vec x = random_vec(psi.cols(), rng);
        const Vec z = random_vec(psi.rows(), rng);
        CHECK(rel_err(psi.forward(x), dense_psi * x) < 1e-10);
        CHECK(rel_err(psi.adjoint(z), dense_psi.adjoint() * z) < 1e-10);
        CHECK(rel_err(s.forward(x), dense_s * x) < 1e-10);
        CHECK(rel_err(s.adjoint(x), dense_s.adjoint() * x) < 1e-10);

        const RVec v = RVec::Random(psi.cols()).cwiseAbs();
        const RVec w = RVec::Random(psi.rows()).cwiseAbs();
        const Eigen::MatrixXd a2 = dense_psi.cwiseAbs2();
        CHECK((psi.abs2_forward(v) - a2 * v).norm() <= 1e-10 * (a2 * v).norm());
        CHECK((psi.abs2_adjoint(w) - a2.transpose() * w).norm() <= 1e-10 * (a2.transpose() * w).norm());
    }
}

TEST_CASE("adjoint identity for the dictionary and the joint basis")
{
    Rng rng(6);
    const SystemConfig cfg;  // desk scale
    const ModelDims d = ModelDims::from(cfg);
    const Dictionary psi(d, zc_pilot_block(cfg).c);
    const JointBasis s(d);
    for (int trial = 0; trial < 3; ++trial) {
        const Vec u = random_vec(psi.cols(), rng);
        const Vec v = random_vec(psi.rows(), rng);
        CHECK(std::abs(v.dot(psi.forward(u)) - psi.adjoint(v).dot(u)) <= 1e-8 * u.norm() * v.norm());
        const Vec h = random_vec(s.size(), rng);
        const Vec g = random_vec(s.size(), rng);
        CHECK(std::abs(g.dot(s.forward(h)) - s.adjoint(g).dot(h)) <= 1e-8 * h.norm() * g.norm());
    }
}

TEST_CASE("joint basis is unitary")
{
    Rng rng(7);
    const JointBasis s(ModelDims{{4, 4}, {2, 2}, 8, 1});
    for (int trial = 0; trial < 3; ++trial) {
        const Vec h = random_vec(s.size(), rng);
        CHECK(std::abs(s.forward(h).norm() - h.norm()) <= 1e-10 * h.norm());
        CHECK(rel_err(s.adjoint(s.forward(h)), h) < 1e-10);
        CHECK(rel_err(s.forward(s.adjoint(h)), h) < 1e-10);
    }
}

TEST_CASE("transforms are linear")
{
    Rng rng(8);
    const ModelDims d{{4, 2}, {2, 1}, 4, 3};
    const Dictionary psi(d, random_mat(d.n_tx(), d.pilots, rng));
    const JointBasis s(d);
    const cplx a = rng.complex_normal();
    const cplx b = rng.complex_normal();
    const Vec u = random_vec(psi.cols(), rng);
    const Vec v = random_vec(psi.cols(), rng);
    CHECK(rel_err(psi.forward(a * u + b * v), a * psi.forward(u) + b * psi.forward(v)) < 1e-10);
    CHECK(rel_err(s.forward(a * u + b * v), a * s.forward(u) + b * s.forward(v)) < 1e-10);
    const Vec z1 = random_vec(psi.rows(), rng);
    const Vec z2 = random_vec(psi.rows(), rng);
    CHECK(rel_err(psi.adjoint(a * z1 + b * z2), a * psi.adjoint(z1) + b * psi.adjoint(z2)) < 1e-10);
}

TEST_CASE("dictionary after joint basis reproduces H[f_k] T per sub-band")
{
    Rng rng(9);
    const ModelDims d{{4, 2}, {2, 2}, 4, 5};
    const Mat t = random_mat(d.n_tx(), d.pilots, rng);
    const Mat c = upa(d.tx).adjoint() * t;
    const Dictionary psi(d, c);
    const JointBasis s(d);
    const Mat h = random_mat(static_cast<Eigen::Index>(d.subcarriers) * d.n_rx(), d.n_tx(), rng);
    const Vec z = psi.forward(s.forward(Eigen::Map<const Vec>(h.data(), h.size())));
    const Eigen::Map<const Mat> zm(z.data(), static_cast<Eigen::Index>(d.subcarriers) * d.n_rx(), d.pilots);
    for (int k = 0; k < d.subcarriers; ++k) {
        const Mat hk_t = h.middleRows(static_cast<Eigen::Index>(k) * d.n_rx(), d.n_rx()) * t;
        for (int r = 0; r < d.n_rx(); ++r)
            CHECK((zm.row(static_cast<Eigen::Index>(r) * d.subcarriers + k) - hk_t.row(r)).norm() <=
                  1e-10 * hk_t.norm());
    }
}

TEST_CASE("spectral norm of the dictionary equals that of C")
{
    Rng rng(10);
    const ModelDims d{{2, 2}, {2, 1}, 2, 3};
    const Mat c = random_mat(2, 3, rng);
    const Dictionary psi(d, c);
    const double dense = Eigen::JacobiSVD<Mat>(dense_dictionary(d, c)).singularValues()(0);
    CHECK(std::abs(psi.spectral_norm() - dense) < 1e-10 * dense);
}

TEST_CASE("operators are safe to share across threads")
{
    Rng rng(11);
    const SystemConfig cfg;
    const Dictionary psi(ModelDims::from(cfg), zc_pilot_block(cfg).c);
    const Vec x = random_vec(psi.cols(), rng);
    const Vec expect = psi.forward(x);
    std::vector<double> errs(4, 1.0);
    {
        std::vector<std::jthread> pool;
        for (int i = 0; i < 4; ++i)
            pool.emplace_back([&, i] {
                double worst = 0.0;
                for (int rep = 0; rep < 5; ++rep)
                    worst = std::max(worst, (psi.forward(x) - expect).norm());
                errs[i] = worst;
            });
    }
    for (double e : errs)
        CHECK(e == 0.0);
}
