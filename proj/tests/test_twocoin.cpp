#include <doctest.h>

#include <cmath>

#include "dds/error.hpp"
#include "dds/sampling.hpp"
#include "dds/twocoin.hpp"

using namespace dds;

TEST_CASE("two-coin channel")
{
    for (int y : {-1, 0, 1})
        for (int v : {-1, 1}) {
            const double p2 = channel_two_coin(y, {0.7, 0.7}, v, 9.0, 0.2, 100);
            const double p1 = channel_probability(y, 0.7 * v / std::sqrt(100.0), 9.0, 0.2);
            CHECK(p2 == doctest::Approx(p1).epsilon(1e-14));
        }
    CHECK(channel_two_coin(1, {0.3, 1.0}, -1, 4.0, 0.0, 100) == doctest::Approx(0.4));
    CHECK(channel_two_coin(1, {1.0, 0.3}, 1, 4.0, 0.0, 100) == doctest::Approx(0.6));
    CHECK(channel_two_coin(0, {0.3, 0.2}, 1, 4.0, 1.0, 100) == 1.0);
    CHECK_THROWS_AS(channel_two_coin(1, {10.0, 0.0}, 1, 4.0, 0.0, 100), DomainError);
}

TEST_CASE("two-atom label denoiser")
{
    const Mat2 a{0.7, 0.2, 0.2, 1.3};
    for (double beta : {0.5, 0.2})
        for (double b0 : {-1.0, 0.4})
            for (double b1 : {-0.6, 2.0}) {
                const auto d = denoise_label2(LabelPrior{beta}, a, {b0, b1});
                // Atom (1,0): exponent -a00/2 + b0. Atom (0,-1): -a11/2 - b1.
                const double w1 = (1 - beta) * std::exp(-a[0] / 2 + b0), w2 = beta * std::exp(-a[3] / 2 - b1);
                const double r = w1 / (w1 + w2);
                CHECK(d.mean[0] == doctest::Approx(r).epsilon(1e-14));
                CHECK(d.mean[1] == doctest::Approx(r - 1).epsilon(1e-14));
                CHECK(d.log_partition == doctest::Approx(std::log(w1 + w2)).epsilon(1e-14));
                CHECK(d.cov[0] == doctest::Approx(r * (1 - r)));
                CHECK(d.cov[1] == doctest::Approx(r * (1 - r)));
            }
}

TEST_CASE("two-dimensional worker denoiser")
{
    const Tabulated s{{-0.5, 0.0, 1.0, 1.5}, {0.1, 0.3, 0.4, 0.2}}, t{{0.0, 0.8}, {0.6, 0.4}};
    const TwoCoinPrior prior{s, t, false};
    const Mat2 a{1.2, 0.3, 0.3, 0.8};
    const std::array<double, 2> b{0.4, -0.7};
    double z = 0, m0 = 0, m1 = 0, c00 = 0, c01 = 0, c11 = 0;
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t l = 0; l < 2; ++l) {
            const double x = s.nodes[k], y = t.nodes[l];
            const double quad = a[0] * x * x + 2 * a[1] * x * y + a[3] * y * y;
            const double w = s.weights[k] * t.weights[l] * std::exp(-quad / 2 + b[0] * x + b[1] * y);
            z += w;
            m0 += w * x;
            m1 += w * y;
            c00 += w * x * x;
            c01 += w * x * y;
            c11 += w * y * y;
        }
    m0 /= z;
    m1 /= z;
    const auto d = denoise_worker2(prior, a, b);
    CHECK(d.mean[0] == doctest::Approx(m0).epsilon(1e-13));
    CHECK(d.mean[1] == doctest::Approx(m1).epsilon(1e-13));
    CHECK(d.cov[0] == doctest::Approx(c00 / z - m0 * m0).epsilon(1e-12));
    CHECK(d.cov[1] == doctest::Approx(c01 / z - m0 * m1).epsilon(1e-12));
    CHECK(d.cov[3] == doctest::Approx(c11 / z - m1 * m1).epsilon(1e-12));
    CHECK(d.log_partition == doctest::Approx(std::log(z)).epsilon(1e-13));
}

TEST_CASE("coarsening keeps mass and mean")
{
    Tabulated fine;
    for (int k = 0; k < 513; ++k) {
        fine.nodes.push_back(std::sin(k * 0.37));
        fine.weights.push_back(1.0 / 513);
    }
    const Tabulated c = coarsen(fine, 63);
    CHECK(c.nodes.size() <= 63);
    double w = 0, m = 0, mf = 0;
    for (std::size_t k = 0; k < c.nodes.size(); ++k) {
        w += c.weights[k];
        m += c.weights[k] * c.nodes[k];
    }
    for (std::size_t k = 0; k < fine.nodes.size(); ++k) mf += fine.weights[k] * fine.nodes[k];
    CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m == doctest::Approx(mf).epsilon(1e-12));
    CHECK(coarsen(Tabulated{{1.0, 2.0}, {0.5, 0.5}}, 63).nodes.size() == 2);
}

TEST_CASE("no answers leave the label prior mean")
{
    const AnswerMatrix empty(10, 12, {});
    AmpConfig cfg;
    cfg.init = AmpInit::PriorMean;
    const auto r = amp_rank2_run(FisherScore(empty, 1.0), 1.0, TwoCoinPrior{}, LabelPrior{0.3}, cfg, 1);
    for (std::size_t j = 0; j < 12; ++j) {
        CHECK(r.v_hat[2 * j] == doctest::Approx(0.7));
        CHECK(r.v_hat[2 * j + 1] == doctest::Approx(-0.3));
    }
}

TEST_CASE("tied two-coin reduces to rank one")
{
    const WorkerPrior wp = RademacherBernoulli{0.6, 0.2};
    const LabelPrior lp{0.45};
    const ModelParams p{80, 100, 10.0, 0.2};
    const auto gt = sample_two_coin_truth(p, wp, wp, lp, true, 3);
    const auto y = sample_two_coin_answers(gt, p, 3);
    const FisherScore s(y, p.nu);
    AmpConfig cfg;
    cfg.init = AmpInit::PriorMean;
    cfg.tol = 1e-300;
    cfg.max_iter = 25;
    const double delta = 1.0 / ((1 - p.rho) * p.nu);
    const auto r1 = amp_run(s, delta, wp, lp, cfg, 1);
    const auto r2 = amp_rank2_run(s, delta, TwoCoinPrior{wp, wp, true}, lp, cfg, 1);
    for (std::size_t i = 0; i < p.n_workers; ++i) {
        CHECK(r2.theta_hat[2 * i] == doctest::Approx(r1.theta_hat[i]).epsilon(1e-9));
        CHECK(r2.theta_hat[2 * i + 1] == doctest::Approx(r1.theta_hat[i]).epsilon(1e-9));
    }
    for (std::size_t j = 0; j < p.n_tasks; ++j)
        CHECK(r2.v_hat[2 * j] + r2.v_hat[2 * j + 1] == doctest::Approx(r1.v_hat[j]).epsilon(1e-9));
    CHECK(r2.labels == r1.labels);
}

TEST_CASE("rank-two iterates")
{
    const WorkerPrior ps = RademacherBernoulli{0.7, 0.1}, pt = RademacherBernoulli{0.4, 0.1};
    const ModelParams p{150, 150, 20.0, 0.3};
    const auto gt = sample_two_coin_truth(p, ps, pt, LabelPrior{}, false, 5);
    const auto y = sample_two_coin_answers(gt, p, 5);
    AmpConfig cfg;
    cfg.damping = 0.3;
    const auto r = amp_rank2_run(FisherScore(y, p.nu), 1.0 / ((1 - p.rho) * p.nu), TwoCoinPrior{ps, pt, false},
                                 LabelPrior{}, cfg, 5);
    for (double e : r.min_eigenvalue) CHECK(e >= -1e-10);
    for (std::size_t j = 0; j < p.n_tasks; ++j) {
        // On the segment between (1,0) and (0,-1).
        CHECK(r.v_hat[2 * j] - r.v_hat[2 * j + 1] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.v_hat[2 * j] >= 0.0);
        CHECK(r.v_hat[2 * j] <= 1.0);
    }
    const auto again = amp_rank2_run(FisherScore(y, p.nu), 1.0 / ((1 - p.rho) * p.nu), TwoCoinPrior{ps, pt, false},
                                     LabelPrior{}, cfg, 5);
    CHECK(again.v_hat == r.v_hat);
}
