// Acceptance checks; `dds_acceptance <k>` runs criterion k and prints one PASS/FAIL line.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "dds/amp.hpp"
#include "dds/bp.hpp"
#include "dds/cli.hpp"
#include "dds/denoisers.hpp"
#include "dds/phase.hpp"
#include "dds/quadrature.hpp"
#include "dds/rng.hpp"
#include "dds/sampling.hpp"
#include "dds/state_evolution.hpp"
#include "dds/twocoin.hpp"
#include "oracles.hpp"

using namespace dds;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string strf(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string strf(const char* fmt, ...)
{
    char buf[4096];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    return buf;
}

double mean(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

double std_error(const std::vector<double>& x)
{
    const double m = mean(x);
    double s = 0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / (x.size() - 1) / x.size());
}

const QuadratureRule& quad() { return default_gaussian_rule(); }

// 1. Numerically detected instability of the uninformative point against sqrt(alpha) mu.
Outcome criterion1()
{
    double worst = 0;
    std::string detail;
    for (double alpha : {0.25, 1.0, 4.0})
        for (double mu : {0.02, 0.1, 0.5}) {
            const WorkerPrior wp = RademacherBernoulli{mu, 0.5};
            const double expect = std::sqrt(alpha) * mu;
            const double found = detect_instability(alpha, wp, LabelPrior{0.5}, {0.5 * expect, 2.0 * expect}, 1e-6, quad());
            worst = std::max(worst, std::abs(found - expect) / expect);
        }
    return {worst < 1e-3, strf("worst relative error %.2e over 9 (alpha, mu) pairs (tol 1e-3)", worst)};
}

// 2. Hard phase at alpha = 1, mu = 0.02.
Outcome criterion2()
{
    const WorkerPrior wp = RademacherBernoulli{0.02, 0.5};
    const LabelPrior lp{0.5};
    const PhaseThresholds t = find_thresholds(1.0, wp, lp, {0.004, 0.06}, quad());
    if (!t.delta_alg || !t.delta_it || !t.delta_sp) return {false, "no coexistence window found: " + t.note};
    const double a = *t.delta_alg, i = *t.delta_it, s = *t.delta_sp;
    const bool ordered = a <= i && i <= s && a < s;
    const double rel = std::abs(a - 0.02) / 0.02;
    double worst_er = 0;
    for (double f : {0.1, 0.5, 0.9}) {
        const double d = i + f * (s - i);
        const SEFixedPoint u = se_fixed_point(InitKind::Uninformative, 1.0, d, wp, lp, quad());
        worst_er = std::max(worst_er, std::abs(u.er_v - 0.5));
    }
    const bool pass = ordered && rel < 0.05 && worst_er < 1e-4;
    return {pass, strf("delta_alg %.5f delta_it %.5f delta_sp %.5f; |delta_alg-0.02|/0.02 = %.2e (tol 5e-2); "
                       "max |ER_uninf - 1/2| in (delta_it, delta_sp) = %.1e (tol 1e-4)",
                       a, i, s, rel, worst_er)};
}

bool has_window(double alpha, double mu)
{
    return fixed_point_branch(alpha, RademacherBernoulli{mu, 0.5}, LabelPrior{0.5}, quad()).window.has_value();
}

// Largest mu whose fold window is nonempty: scan, then bisect the last sign change.
double tricritical(double alpha)
{
    double last = -1;
    for (double mu = 0.02; mu <= 0.15 + 1e-12; mu += 0.005)
        if (has_window(alpha, mu)) last = mu;
    if (last < 0) return -1;
    double lo = last, hi = last + 0.005;
    while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        (has_window(alpha, mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// 3. Tricritical points.
Outcome criterion3()
{
    const double a = tricritical(0.25), b = tricritical(4.0);
    const bool pass = std::abs(a - 0.048) <= 0.005 && std::abs(b - 0.077) <= 0.005;
    return {pass, strf("mu* = %.4f at alpha=1/4 (target 0.048 +- 0.005), %.4f at alpha=4 (target 0.077 +- 0.005)", a, b)};
}

struct AmpAverage {
    double er;
    double se;
    std::size_t unconverged;
};

// Flip-invariant AMP error on dense instances, averaged over seeds.
AmpAverage dense_amp_er(std::size_t n, double delta, const WorkerPrior& wp, std::size_t seeds, std::uint64_t base)
{
    std::vector<double> ers;
    std::size_t unconverged = 0;
    const double nu = 1.0 / delta;
    for (std::size_t k = 0; k < seeds; ++k) {
        const std::uint64_t seed = derive_seed(base, k);
        const ModelParams p{n, n, nu, 0.0};
        const GroundTruth gt = sample_ground_truth(p, wp, LabelPrior{0.5}, seed);
        const AnswerMatrix y = sample_answers_dense(gt, p, seed);
        AmpConfig cfg;
        cfg.tol = 1e-12;
        cfg.init_scale = 1e-3;
        const AmpResult r = amp_run(FisherScore(y, nu), delta, wp, LabelPrior{0.5}, cfg, seed);
        ers.push_back(flip_invariant_error_rate(r.labels, gt.v0));
        unconverged += !r.converged;
    }
    return {mean(ers), std_error(ers), unconverged};
}

// 4. Dense AMP against SE, N = M = 4000, 20 seeds, tolerance 0.02, at noise levels 10% or more from delta_alg.
Outcome criterion4()
{
    const WorkerPrior wp = RademacherBernoulli{0.02, 0.5};
    const PhaseThresholds t = find_thresholds(1.0, wp, LabelPrior{0.5}, {0.004, 0.06}, quad());
    if (!t.delta_alg) return {false, "no algorithmic threshold found: " + t.note};
    std::string detail = strf(" delta_alg=%.5f;", *t.delta_alg);
    double worst = 0;
    for (double r : {0.25, 0.5, 0.75, 0.9, 1.1, 1.5, 2.0}) {
        const double delta = r * *t.delta_alg;
        const SEFixedPoint se = se_fixed_point(InitKind::Uninformative, 1.0, delta, wp, LabelPrior{0.5}, quad());
        const AmpAverage a = dense_amp_er(4000, delta, wp, 20, 400 + static_cast<std::uint64_t>(r * 100));
        worst = std::max(worst, std::abs(a.er - se.er_v));
        detail += strf(" delta=%.4f: AMP %.4f+-%.4f (%zu unconverged) SE %.4f;", delta, a.er, a.se, a.unconverged, se.er_v);
    }
    return {worst < 0.02, strf("max |ER_AMP - ER_SE| = %.4f (tol 0.02);", worst) + detail};
}

// 5. Sparse AMP approaches SE as d grows at fixed delta = alpha / (n d).
Outcome criterion5()
{
    const std::size_t n_workers = 1000;
    const double delta = 0.25;
    const WorkerPrior wp = RademacherBernoulli{0.5, 0.5};
    const SEFixedPoint se = se_fixed_point(InitKind::Uninformative, 1.0, delta, wp, LabelPrior{0.5}, quad());
    std::vector<double> dev, err;
    std::string detail;
    for (std::size_t d : {10, 20, 30, 50}) {
        const double n_scale = 1.0 / (delta * d);
        std::vector<double> ers;
        for (std::uint64_t k = 0; k < 100; ++k) {
            const std::uint64_t seed = derive_seed(500 + d, k);
            ModelParams p{n_workers, n_workers, n_scale * n_workers, 0.0};
            const SparseRegimeConfig sparse{d, n_scale};
            p.rho = sparse.implied_rho(n_workers);
            const GroundTruth gt = sample_ground_truth(p, wp, LabelPrior{0.5}, seed);
            const AnswerMatrix y = sample_answers_sparse(gt, sparse, p, seed);
            AmpConfig cfg;
            cfg.tol = 1e-12;
            const AmpResult r = amp_run(FisherScore(y, p.nu), effective_noise(y.missing_fraction(), p.nu), wp,
                                        LabelPrior{0.5}, cfg, seed);
            ers.push_back(flip_invariant_error_rate(r.labels, gt.v0));
        }
        dev.push_back(std::abs(mean(ers) - se.er_v) / se.er_v);
        err.push_back(std_error(ers) / se.er_v);
        detail += strf(" d=%zu: ER %.4f rel.dev %.4f+-%.4f;", d, mean(ers), dev.back(), err.back());
    }
    bool monotone = true;
    for (std::size_t k = 1; k < dev.size(); ++k)
        monotone = monotone && dev[k] <= dev[k - 1] + 2.0 * std::hypot(err[k], err[k - 1]);
    const bool pass = dev.back() < dev.front() && monotone;
    return {pass, strf("SE ER %.4f at delta %.2f; dev(50) < dev(10): %s; monotone within 2 s.e.: %s;", se.er_v, delta,
                       dev.back() < dev.front() ? "yes" : "no", monotone ? "yes" : "no") +
                      detail};
}

// 6. BP coexistence under a Bernoulli prior: scan 1/d for informative and uninformative fixed points that differ.
Outcome criterion6()
{
    const std::size_t n = 10000;
    const double n_scale = 0.5;
    const WorkerPrior wp = RademacherBernoulli{0.01, 0.0};
    std::string detail;
    std::size_t window = 0;
    for (std::size_t d : {60, 80, 90, 100, 110, 120, 130, 140, 160, 200}) {
        const std::uint64_t seed = derive_seed(600, d);
        ModelParams p{n, n, n_scale * n, 0.0};
        const SparseRegimeConfig sparse{d, n_scale};
        p.rho = sparse.implied_rho(n);
        const GroundTruth gt = sample_ground_truth(p, wp, LabelPrior{0.5}, seed);
        const AnswerMatrix y = sample_answers_sparse(gt, sparse, p, seed);
        BpConfig cfg;
        cfg.max_iter = 2000;
        cfg.reliability = reliability_prior(wp, p.nu, n);
        const CoexistenceReport r = bp_two_init_compare(FactorGraph::from_answers(y), cfg, LabelPrior{0.5}, gt.v0, seed);
        const bool hit = r.coexistence && r.er_informative < r.er_uninformative;
        window += hit;
        detail += strf(" 1/d=%.4f: ER uninf %.4f inf %.4f%s;", 1.0 / d, r.er_uninformative, r.er_informative,
                       hit ? " (coexist)" : "");
    }
    return {window > 0, strf("%zu of 10 degrees show coexistence with lower informative ER;", window) + detail};
}

Tabulated gaussian_grid(std::size_t n, double half_width)
{
    Tabulated t;
    double total = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double z = -half_width + 2.0 * half_width * k / (n - 1);
        t.nodes.push_back(z);
        t.weights.push_back(std::exp(-z * z / 2));
        total += t.weights.back();
    }
    for (double& w : t.weights) w /= total;
    return t;
}

// 7. Property suites.
Outcome criterion7()
{
    std::vector<std::string> failed;
    std::string detail;
    auto record = [&](const std::string& name, bool ok, const std::string& what) {
        if (!ok) failed.push_back(name);
        detail += " " + name + ": " + what + ";";
    };

    // Closed-form denoisers against the tabulated path.
    double worst = 0;
    const Tabulated grid = gaussian_grid(4001, 12.0);
    const RademacherBernoulli rb{0.3, 0.2};
    const Tabulated rb_tab{{-1.0, 0.0, 1.0}, {0.3 * 0.2, 0.7, 0.3 * 0.8}};
    const LabelPrior lp{0.35};
    const Tabulated label_tab{{-1.0, 1.0}, {0.35, 0.65}};
    for (double a = 0.0; a <= 5.0; a += 0.5)
        for (double b = -5.0; b <= 5.0; b += 0.5) {
            const GaussianChannelParams c{a, b};
            const auto diff = [&](const DenoiseResult& x, const DenoiseResult& y) {
                worst = std::max({worst, std::abs(x.mean - y.mean), std::abs(x.variance - y.variance)});
            };
            diff(denoise_worker_gm({1.0, 0.0, 0.0, 1.0, 1.0}, c), denoise_tabulated(grid, c));
            diff(denoise_worker_rb(rb, c), denoise_tabulated(rb_tab, c));
            diff(denoise_label(lp, c), denoise_tabulated(label_tab, c));
        }
    record("denoisers vs tabulated", worst < 1e-6, strf("%.1e (tol 1e-6)", worst));

    // sigma against a central difference of the posterior mean in B.
    worst = 0;
    const double h = 1e-5;
    const GaussianMixture gm{0.4, -0.5, 0.8, 0.3, 0.2};
    for (double a : {0.0, 0.1, 1.0, 10.0})
        for (double b = -5.0; b <= 5.0; b += 0.5) {
            const auto check = [&](auto&& f) {
                const double fd = (f({a, b + h}).mean - f({a, b - h}).mean) / (2 * h);
                worst = std::max(worst, std::abs(fd - f({a, b}).variance));
            };
            check([&](GaussianChannelParams c) { return denoise_label(lp, c); });
            check([&](GaussianChannelParams c) { return denoise_worker_rb(rb, c); });
            check([&](GaussianChannelParams c) { return denoise_worker_gm(gm, c); });
        }
    record("sigma vs d f / dB", worst < 1e-6, strf("%.1e (tol 1e-6)", worst));

    // phi(0, 0) = 0 and stationarity at fixed points.
    bool zero = true;
    double grad = 0;
    struct Case {
        double alpha, delta;
        WorkerPrior wp;
        LabelPrior lp;
    };
    const Case cases[] = {{1.0, 0.01, RademacherBernoulli{0.02, 0.5}, LabelPrior{0.5}},
                          {1.0, 0.025, RademacherBernoulli{0.02, 0.5}, LabelPrior{0.5}},
                          {0.25, 0.2, RademacherBernoulli{0.5, 0.5}, LabelPrior{0.5}},
                          {0.5, 0.05, RademacherBernoulli{0.1, 0.2}, LabelPrior{0.4}},
                          {2.0, 0.3, GaussianMixture{0.4, -0.2, 0.6, 0.3, 0.2}, LabelPrior{0.5}}};
    for (const Case& c : cases) {
        zero = zero && bethe_free_energy({0.0, 0.0}, c.alpha, c.delta, c.wp, c.lp, quad()) == 0.0;
        for (InitKind k : {InitKind::Informative, InitKind::Uninformative}) {
            const SEFixedPoint fp = se_fixed_point(k, c.alpha, c.delta, c.wp, c.lp, quad());
            const SEState st = fp.state;
            const double e = 1e-6;
            const auto phi = [&](double mt, double mv) {
                return bethe_free_energy({mt, mv}, c.alpha, c.delta, c.wp, c.lp, quad());
            };
            // Second-order one-sided stencil near the origin, where the overlaps cannot go negative.
            const double p0 = phi(st.m_theta, st.m_v);
            const double gt = st.m_theta > e
                                  ? (phi(st.m_theta + e, st.m_v) - phi(st.m_theta - e, st.m_v)) / (2 * e)
                                  : (4 * phi(st.m_theta + e, st.m_v) - phi(st.m_theta + 2 * e, st.m_v) - 3 * p0) / (2 * e);
            const double gv = st.m_v > e
                                  ? (phi(st.m_theta, st.m_v + e) - phi(st.m_theta, st.m_v - e)) / (2 * e)
                                  : (4 * phi(st.m_theta, st.m_v + e) - phi(st.m_theta, st.m_v + 2 * e) - 3 * p0) / (2 * e);
            grad = std::max(grad, std::hypot(gt, gv));
        }
    }
    record("phi(0,0) == 0", zero, zero ? "exact" : "nonzero");
    record("stationarity", grad < 1e-5, strf("max gradient %.1e (tol 1e-5)", grad));

    // BP against exhaustive enumeration on trees of 20 variables.
    worst = 0;
    const ReliabilityPrior rel{{0.5, 0.85, 0.2}, {0.5, 0.35, 0.15}};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t n = 6 + seed % 5, m = 20 - n;
        const AnswerMatrix y = oracle::random_tree(n, m, seed);
        const LabelPrior tl{seed % 2 ? 0.5 : 0.3};
        BpConfig cfg;
        cfg.tol = 1e-15;
        cfg.max_iter = 200;
        cfg.damping = 0.0;
        cfg.init_noise = 0.0;
        cfg.reliability = rel;
        const BpResult r = bp_run(FactorGraph::from_answers(y), cfg, tl, seed);
        const auto exact = oracle::enumerate_marginals(y, rel, tl);
        for (std::size_t j = 0; j < m; ++j) worst = std::max(worst, std::abs(r.marginals[j] - exact[j]));
    }
    record("BP vs enumeration", worst < 1e-10, strf("%.1e (tol 1e-10)", worst));

    // Rank-two with s = t: exact on a tied prior, statistical on an untied one.
    {
        const WorkerPrior wp = RademacherBernoulli{0.6, 0.2};
        const ModelParams p{80, 100, 10.0, 0.2};
        const TwoCoinTruth gt = sample_two_coin_truth(p, wp, wp, LabelPrior{0.45}, true, 3);
        const AnswerMatrix y = sample_two_coin_answers(gt, p, 3);
        const FisherScore sc(y, p.nu);
        AmpConfig cfg;
        cfg.init = AmpInit::PriorMean;
        cfg.tol = 1e-300;
        cfg.max_iter = 25;
        const double delta = effective_noise(p.rho, p.nu);
        const AmpResult r1 = amp_run(sc, delta, wp, LabelPrior{0.45}, cfg, 1);
        const Rank2Result r2 = amp_rank2_run(sc, delta, TwoCoinPrior{wp, wp, true}, LabelPrior{0.45}, cfg, 1);
        double dev = 0;
        for (std::size_t j = 0; j < p.n_tasks; ++j)
            dev = std::max(dev, std::abs(r2.v_hat[2 * j] + r2.v_hat[2 * j + 1] - r1.v_hat[j]));
        record("tied rank-2 = rank-1", dev < 1e-9 && r1.labels == r2.labels, strf("max |v diff| %.1e (tol 1e-9)", dev));
    }
    {
        const WorkerPrior wp = RademacherBernoulli{0.5, 0.5};
        const double delta = 0.25;
        std::vector<double> e1, e2;
        for (std::uint64_t k = 0; k < 20; ++k) {
            const std::uint64_t seed = derive_seed(700, k);
            const ModelParams p{2000, 2000, 1.0 / delta, 0.0};
            const TwoCoinTruth gt = sample_two_coin_truth(p, wp, wp, LabelPrior{0.5}, true, seed);
            const AnswerMatrix y = sample_two_coin_answers(gt, p, seed);
            const FisherScore sc(y, p.nu);
            AmpConfig cfg;
            const AmpResult r1 = amp_run(sc, delta, wp, LabelPrior{0.5}, cfg, seed);
            const Rank2Result r2 = amp_rank2_run(sc, delta, TwoCoinPrior{wp, wp, false}, LabelPrior{0.5}, cfg, seed);
            e1.push_back(flip_invariant_error_rate(r1.labels, gt.v0));
            e2.push_back(flip_invariant_error_rate(r2.labels, gt.v0));
        }
        const double diff = std::abs(mean(e1) - mean(e2));
        record("untied rank-2 vs rank-1 at N=M=2000", diff < 0.01,
               strf("ER %.4f vs %.4f, difference %.4f (tol 0.01)", mean(e2), mean(e1), diff));
    }

    // Majority vote and tie-breaking.
    {
        const AnswerMatrix y(4, 3, {{0, 0, 1}, {1, 0, 1}, {2, 0, -1}, {0, 2, -1}, {1, 2, -1}, {2, 2, 1}, {3, 2, 1}});
        const auto mv = majority_vote(y);
        const bool ok = mv == std::vector<std::int8_t>{1, 1, 1} &&
                        sign_labels(std::vector<double>{0.0, -0.1, 0.2}) == std::vector<std::int8_t>{1, -1, 1};
        record("majority vote and ties to +1", ok, ok ? "ok" : "mismatch");
    }

    std::string head = failed.empty() ? "all property suites hold;" : "failed:";
    for (const auto& f : failed) head += " " + f + ";";
    return {failed.empty(), head + detail};
}

// 8. Two-coin AMP against symmetric AMP on asymmetric synthetic data, plus the early-stop flag.
Outcome criterion8()
{
    const fs::path dir = fs::temp_directory_path() / "dds_acceptance_8";
    std::vector<double> sym, two;
    std::size_t wins = 0;
    const std::string n = "39", m = "108";
    auto call = [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        if (code != 0) throw std::runtime_error("dds " + args[0] + " failed: " + err.str());
        return nlohmann::json::parse(out.str());
    };
    for (std::uint64_t k = 0; k < 20; ++k) {
        const fs::path d = dir / std::to_string(k);
        fs::remove_all(d);
        std::ostringstream out, err;
        if (run_cli({"generate", "--n", n, "--m", m, "--nu", n, "--prior", "beta:3,1", "--prior-t", "beta:1.2,1",
                     "--seed", std::to_string(800 + k), "--out", d.string()},
                    out, err) != 0)
            return {false, "generate failed: " + err.str()};
        const std::vector<std::string> common = {"--answers", (d / "answers.csv").string(), "--dims",
                                                 (d / "meta.json").string(), "--truth-v", (d / "truth_v.csv").string(),
                                                 "--prior", "beta:2,1", "--init", "majority", "--damping", "0.5",
                                                 "--seed", "1"};
        auto args = [&](const char* algo, std::vector<std::string> extra) {
            std::vector<std::string> a = {"infer", "--algo", algo};
            a.insert(a.end(), common.begin(), common.end());
            a.insert(a.end(), extra.begin(), extra.end());
            return a;
        };
        const double e1 = call(args("amp", {}))["er"];
        const double e2 = call(args("amp2", {"--prior-t", "beta:2,1"}))["er"];
        sym.push_back(e1);
        two.push_back(e2);
        wins += e2 <= e1;
    }
    const auto stopped = call({"infer", "--algo", "amp", "--answers", (dir / "0" / "answers.csv").string(), "--dims",
                               (dir / "0" / "meta.json").string(), "--prior", "beta:2,1", "--tol", "1e-300",
                               "--early-stop", "3"});
    const bool early = stopped["iterations"] == 3 && stopped["early_stopped"] == true;
    fs::remove_all(dir);
    const bool pass = mean(two) <= mean(sym) && early;
    return {pass, strf("mean ER two-coin %.4f vs symmetric %.4f over 20 seeds (two-coin <= symmetric on %zu); "
                       "early stop after 3 iterations: %s",
                       mean(two), mean(sym), wins, early ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv)
{
    if (argc != 2) {
        std::fprintf(stderr, "usage: dds_acceptance <criterion 1-8>\n");
        return 2;
    }
    const int k = std::atoi(argv[1]);
    const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4, criterion5, criterion6, criterion7, criterion8};
    if (k < 1 || k > static_cast<int>(criteria.size())) {
        std::fprintf(stderr, "unknown criterion %s\n", argv[1]);
        return 2;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const Outcome o = criteria[k - 1]();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s (%.1f s) %s\n", k, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    return o.pass ? 0 : 1;
}
