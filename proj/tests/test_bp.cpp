#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dds/amp.hpp"
#include "dds/bp.hpp"
#include "dds/error.hpp"
#include "dds/rng.hpp"
#include "dds/sampling.hpp"
#include "oracles.hpp"

using namespace dds;

namespace {

BpConfig exact_config(const ReliabilityPrior& rel)
{
    BpConfig cfg;
    cfg.tol = 1e-15;
    cfg.max_iter = 200;
    cfg.damping = 0.0;
    cfg.init_noise = 0.0;
    cfg.reliability = rel;
    return cfg;
}

}  // namespace

TEST_CASE("single factor")
{
    const AnswerMatrix y(1, 1, {{0, 0, 1}});
    const auto r = bp_run(FactorGraph::from_answers(y), exact_config({{0.9}, {1.0}}), LabelPrior{0.5}, 1);
    CHECK(r.marginals[0] == doctest::Approx(0.9).epsilon(1e-14));
}

TEST_CASE("uninformative workers return the label prior")
{
    const ModelParams p{30, 40, 4.0, 0.5};
    const auto gt = sample_ground_truth(p, RademacherBernoulli{0.5, 0.5}, LabelPrior{}, 1);
    const auto y = sample_answers_dense(gt, p, 1);
    const auto r = bp_run(FactorGraph::from_answers(y), exact_config({{0.5}, {1.0}}), LabelPrior{0.3}, 1);
    for (double m : r.marginals) CHECK(m == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("reliability atoms")
{
    const auto r = reliability_prior(RademacherBernoulli{0.2, 0.25}, 25.0, 100);
    REQUIRE(r.p.size() == 3);
    CHECK(r.p[0] == 0.5);
    CHECK(r.p[1] == doctest::Approx(0.75));
    CHECK(r.p[2] == doctest::Approx(0.25));
    CHECK(r.weight[1] == doctest::Approx(0.15));
    CHECK_THROWS_AS(reliability_prior(GaussianMixture{}, 1.0, 10), InvalidArgument);
    CHECK_THROWS_AS(reliability_prior(RademacherBernoulli{0.2, 0.25}, 400.0, 100), DomainError);
}

TEST_CASE("trees match enumeration")
{
    const ReliabilityPrior rel{{0.5, 0.85, 0.2}, {0.5, 0.35, 0.15}};
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const std::size_t n = 4 + seed % 5, m = 16 - n;
        const AnswerMatrix y = oracle::random_tree(n, m, seed);
        const LabelPrior lp{seed % 2 ? 0.5 : 0.35};
        const auto r = bp_run(FactorGraph::from_answers(y), exact_config(rel), lp, seed);
        REQUIRE(r.converged);
        const auto exact = oracle::enumerate_marginals(y, rel, lp);
        for (std::size_t j = 0; j < m; ++j) CHECK(std::abs(r.marginals[j] - exact[j]) < 1e-10);
    }
}

TEST_CASE("messages stay valid and permuting workers permutes nothing else")
{
    const ModelParams p{200, 200, 0.0, 0.0};
    const auto gt = sample_ground_truth(p, RademacherBernoulli{0.3, 0.0}, LabelPrior{}, 5);
    const auto y = sample_answers_sparse(gt, SparseRegimeConfig{8, 0.5}, p, 5);
    BpConfig cfg;
    cfg.reliability = reliability_prior(RademacherBernoulli{0.3, 0.0}, 0.5 * 200, 200);
    const auto r = bp_run(FactorGraph::from_answers(y), cfg, LabelPrior{}, 3);
    for (double m : r.task_messages) {
        CHECK(m >= 0.0);
        CHECK(m <= 1.0);
    }
    for (double m : r.marginals) {
        CHECK(m >= 0.0);
        CHECK(m <= 1.0);
    }

    std::vector<std::uint32_t> perm(200);
    std::iota(perm.begin(), perm.end(), 0u);
    std::reverse(perm.begin(), perm.end());
    std::vector<Answer> shuffled;
    for (const Answer& a : y.triplets()) shuffled.push_back({perm[a.worker], a.task, a.value});
    const AnswerMatrix y2(200, 200, shuffled);
    cfg.init_noise = 0.0;
    const auto a = bp_run(FactorGraph::from_answers(y), cfg, LabelPrior{}, 3);
    const auto b = bp_run(FactorGraph::from_answers(y2), cfg, LabelPrior{}, 3);
    REQUIRE(a.iterations == b.iterations);
    for (std::size_t j = 0; j < 200; ++j) CHECK(a.marginals[j] == doctest::Approx(b.marginals[j]).epsilon(1e-12));
}

TEST_CASE("easy regime has a unique fixed point")
{
    const ModelParams p{1000, 1000, 0.0, 0.0};
    const WorkerPrior wp = RademacherBernoulli{0.3, 0.0};
    const auto gt = sample_ground_truth(p, wp, LabelPrior{}, 8);
    const auto y = sample_answers_sparse(gt, SparseRegimeConfig{40, 1.0}, p, 8);
    BpConfig cfg;
    cfg.reliability = reliability_prior(wp, 1000.0, 1000);
    const auto rep = bp_two_init_compare(FactorGraph::from_answers(y), cfg, LabelPrior{}, gt.v0, 8);
    CHECK_FALSE(rep.coexistence);
    CHECK(rep.er_uninformative == doctest::Approx(rep.er_informative).epsilon(1e-12));
    CHECK(rep.er_informative < 0.05);
}

TEST_CASE("bp matches amp at moderate degree")
{
    // Sparse mapping at n = 1/4 with enough degree; both should land near the same error.
    const std::size_t n = 1000;
    const WorkerPrior wp = RademacherBernoulli{0.5, 0.0};
    const ModelParams p{n, n, 0.0, 0.0};
    double er_bp = 0, er_amp = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto gt = sample_ground_truth(p, wp, LabelPrior{}, seed);
        const SparseRegimeConfig sc{30, 0.25};
        const auto y = sample_answers_sparse(gt, sc, p, seed);
        BpConfig cfg;
        cfg.reliability = reliability_prior(wp, 0.25 * n, n);
        er_bp += error_rate(bp_run(FactorGraph::from_answers(y), cfg, LabelPrior{}, seed).labels, gt.v0) / 5;
        AmpConfig ac;
        ac.damping = 0.5;
        const double delta = effective_noise(y.missing_fraction(), 0.25 * n);
        er_amp += error_rate(amp_run(FisherScore(y, 0.25 * n), delta, wp, LabelPrior{}, ac, seed).labels, gt.v0) / 5;
    }
    CHECK(std::abs(er_bp - er_amp) < 0.02);
}

TEST_CASE("bp input checks")
{
    const AnswerMatrix empty(3, 3, {});
    BpConfig cfg;
    cfg.reliability = {{0.5}, {1.0}};
    CHECK_THROWS_AS(bp_run(FactorGraph::from_answers(empty), cfg, LabelPrior{}, 1), InvalidArgument);
    const AnswerMatrix y(1, 1, {{0, 0, 1}});
    cfg.init = BpInit::Informative;
    CHECK_THROWS_AS(bp_run(FactorGraph::from_answers(y), cfg, LabelPrior{}, 1), InvalidArgument);
}
