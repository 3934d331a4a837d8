#include "dds/phase.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include <boost/math/tools/toms748_solve.hpp>

#include "dds/error.hpp"

namespace dds {

namespace {

// Shrinks [good, bad] around the boundary of pred, where pred(good) is false and pred(bad) true.
double bisect(double good, double bad, const std::function<bool(double)>& pred, double rel_tol, std::size_t cap)
{
    for (std::size_t it = 0; it < cap; ++it) {
        if (std::abs(bad - good) <= rel_tol * std::max(std::abs(good), std::abs(bad))) break;
        const double mid = 0.5 * (good + bad);
        (pred(mid) ? bad : good) = mid;
    }
    return 0.5 * (good + bad);
}

struct PointEval {
    double delta;
    SEFixedPoint unf, inf;
    bool distinct;
};

void run_parallel(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& task)
{
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) task(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

const char* to_string(Phase p)
{
    switch (p) {
    case Phase::Easy: return "Easy";
    case Phase::Hard: return "Hard";
    case Phase::Impossible: return "Impossible";
    }
    return "?";
}

double bethe_free_energy(SEState s, double alpha, double delta, const WorkerPrior& wp, const LabelPrior& lp,
                         const QuadratureRule& quad)
{
    if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
    return alpha * s.m_theta * s.m_v / (2.0 * delta) - alpha * label_log_partition_mean(s.m_theta / delta, lp, quad) -
           worker_log_partition_mean(alpha * s.m_v / delta, wp, quad);
}

double critical_noise(double alpha, const WorkerPrior& wp, const LabelPrior& lp)
{
    if (!is_zero_mean(wp, lp)) throw NonZeroMeanPrior("critical noise needs zero-mean worker and label priors");
    return std::sqrt(alpha) * prior_second_moment(wp) * lp.second_moment();
}

double uninformative_growth_factor(double alpha, double delta, const WorkerPrior& wp, const LabelPrior& lp,
                                   const QuadratureRule& quad, double eps)
{
    const double base = lp.mean() * lp.mean();
    return (se_step({0.0, base + eps}, alpha, delta, wp, lp, quad).m_v - base) / eps;
}

double detect_instability(double alpha, const WorkerPrior& wp, const LabelPrior& lp, std::pair<double, double> bracket,
                          double rel_tol, const QuadratureRule& quad)
{
    auto unstable = [&](double d) { return uninformative_growth_factor(alpha, d, wp, lp, quad) > 1.0; };
    if (!unstable(bracket.first) || unstable(bracket.second))
        throw BracketTooNarrow("growth factor does not cross 1 inside the bracket");
    // Larger noise is stable, so "stable" plays the role of the true predicate.
    return bisect(bracket.first, bracket.second, [&](double d) { return !unstable(d); }, rel_tol, 200);
}

FixedPointBranch fixed_point_branch(double alpha, const WorkerPrior& wp, const LabelPrior& lp,
                                    const QuadratureRule& quad, std::size_t n_points)
{
    FixedPointBranch out;
    const double floor_m = lp.mean() * lp.mean();
    const double top_m = lp.second_moment();
    const double span = top_m - floor_m;
    if (span <= 0.0 || n_points < 3) return out;
    const double scale = std::max(std::sqrt(alpha) * prior_second_moment(wp), 1e-12);

    auto excess = [&](double m, double log_delta) {
        return se_step({0.0, m}, alpha, std::exp(log_delta), wp, lp, quad).m_v - m;
    };
    const double lo_frac = 1e-6, hi_frac = 1.0 - 1e-4;
    for (std::size_t k = 0; k < n_points; ++k) {
        const double frac = lo_frac * std::pow(hi_frac / lo_frac, static_cast<double>(k) / (n_points - 1));
        const double m = floor_m + frac * span;
        double a = std::log(scale) - 3.0, b = std::log(scale) + 3.0;
        double fa = excess(m, a), fb = excess(m, b);
        for (int grow = 0; grow < 40 && fa < 0.0; ++grow) fa = excess(m, a -= 2.0);
        for (int grow = 0; grow < 40 && fb > 0.0; ++grow) fb = excess(m, b += 2.0);
        if (!(fa >= 0.0 && fb <= 0.0)) continue;
        std::uintmax_t iters = 200;
        const auto root = boost::math::tools::toms748_solve(
            [&](double x) { return excess(m, x); }, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(48), iters);
        out.points.push_back({m, std::exp(0.5 * (root.first + root.second))});
    }

    const auto& p = out.points;
    if (p.size() < 3) return out;
    constexpr double rise = 1e-9;
    std::optional<double> lower, upper;
    bool rising_from_start = p[1].delta > p[0].delta * (1.0 + rise);
    for (std::size_t k = 1; k + 1 < p.size(); ++k) {
        const double prev = p[k - 1].delta, cur = p[k].delta, next = p[k + 1].delta;
        if (cur >= prev && next < cur && (cur > prev * (1.0 + rise) || rising_from_start || lower))
            upper = std::max(upper.value_or(cur), cur);
        if (cur < prev && next > cur * (1.0 + rise)) lower = std::min(lower.value_or(cur), cur);
    }
    if (rising_from_start && !lower) lower = p[0].delta;
    if (lower && upper && *lower < *upper) out.window = std::make_pair(*lower, *upper);
    return out;
}

PhaseThresholds find_thresholds(double alpha, const WorkerPrior& wp, const LabelPrior& lp,
                                std::pair<double, double> bracket, const QuadratureRule& quad,
                                const ThresholdOptions& opt)
{
    auto [lo, hi] = bracket;
    if (!(lo > 0.0) || !(hi > lo)) throw InvalidArgument("delta bracket must satisfy 0 < lo < hi");
    if (opt.scan_points < 2) throw InvalidArgument("scan needs at least two points");
    PhaseThresholds th;
    if (is_zero_mean(wp, lp)) th.delta_c = critical_noise(alpha, wp, lp);

    std::vector<double> grid(opt.scan_points);
    for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = lo + (hi - lo) * k / (grid.size() - 1);
    if (opt.refine_with_branch) {
        const auto branch = fixed_point_branch(alpha, wp, lp, quad);
        if (branch.window) {
            const double a = std::max(lo, branch.window->first), b = std::min(hi, branch.window->second);
            for (int k = 1; a < b && k < 26; ++k) grid.push_back(a + (b - a) * k / 26.0);
        }
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    }

    auto evaluate = [&](double d) {
        PointEval e{d, se_fixed_point(InitKind::Uninformative, alpha, d, wp, lp, quad, opt.se),
                    se_fixed_point(InitKind::Informative, alpha, d, wp, lp, quad, opt.se), false};
        e.distinct = std::abs(e.unf.state.m_theta - e.inf.state.m_theta) > opt.distinct_tol;
        return e;
    };
    std::vector<PointEval> scan;
    scan.reserve(grid.size());
    for (double d : grid) scan.push_back(evaluate(d));

    std::size_t first = scan.size(), last = scan.size();
    for (std::size_t k = 0; k < scan.size(); ++k)
        if (scan[k].distinct) {
            if (first == scan.size()) first = k;
            last = k;
        }
    if (first == scan.size()) {
        th.note = "no coexistence window on the scan";
        return th;
    }
    if (first == 0 || last + 1 == scan.size())
        throw BracketTooNarrow("coexistence window touches the delta bracket edge");

    auto distinct = [&](double d) { return evaluate(d).distinct; };
    double alg_good = scan[first - 1].delta, alg_bad = scan[first].delta;
    th.alg_gap = std::abs(scan[first - 1].unf.state.m_theta - scan[first - 1].inf.state.m_theta);
    for (std::size_t it = 0; it < opt.max_bisections; ++it) {
        if (alg_bad - alg_good <= opt.rel_tol * alg_bad) break;
        const double mid = 0.5 * (alg_good + alg_bad);
        const PointEval e = evaluate(mid);
        if (e.distinct) {
            alg_bad = mid;
        } else {
            alg_good = mid;
            th.alg_gap = std::abs(e.unf.state.m_theta - e.inf.state.m_theta);
        }
    }
    th.delta_alg = 0.5 * (alg_good + alg_bad);
    const double sp_in = scan[last].delta, sp_out = scan[last + 1].delta;
    double sp_lo = sp_in, sp_hi = sp_out;
    for (std::size_t it = 0; it < opt.max_bisections; ++it) {
        if (sp_hi - sp_lo <= opt.rel_tol * sp_hi) break;
        const double mid = 0.5 * (sp_lo + sp_hi);
        (distinct(mid) ? sp_lo : sp_hi) = mid;
    }
    th.delta_sp = 0.5 * (sp_lo + sp_hi);

    // Free-energy difference phi_unf - phi_inf: positive where the informative point is global.
    auto gap_phi = [&](const PointEval& e) {
        return bethe_free_energy(e.unf.state, alpha, e.delta, wp, lp, quad) -
               bethe_free_energy(e.inf.state, alpha, e.delta, wp, lp, quad);
    };
    std::vector<std::pair<double, double>> signs;
    signs.emplace_back(alg_bad, gap_phi(evaluate(alg_bad)));
    for (std::size_t k = first; k <= last; ++k)
        if (scan[k].distinct && scan[k].delta > alg_bad && scan[k].delta < sp_lo) signs.emplace_back(scan[k].delta, gap_phi(scan[k]));
    signs.emplace_back(sp_lo, gap_phi(evaluate(sp_lo)));

    std::optional<std::size_t> change;
    for (std::size_t k = 0; k + 1 < signs.size(); ++k)
        if (signs[k].second > 0.0 && signs[k + 1].second <= 0.0) {
            change = k;
            break;
        }
    if (change) {
        th.delta_it = bisect(signs[*change].first, signs[*change + 1].first,
                             [&](double d) { return gap_phi(evaluate(d)) <= 0.0; }, opt.rel_tol, opt.max_bisections);
    } else if (signs.front().second <= 0.0) {
        th.delta_it = th.delta_alg;
        th.note = "uninformative point is global across the window";
    } else {
        th.delta_it = th.delta_sp;
        th.note = "informative point is global across the window";
    }
    return th;
}

PhaseLabel classify_phase(double alpha, double delta, const WorkerPrior& wp, const LabelPrior& lp,
                          const QuadratureRule& quad, const SEOptions& se, double distinct_tol)
{
    PhaseLabel out;
    out.uninformative = se_fixed_point(InitKind::Uninformative, alpha, delta, wp, lp, quad, se);
    out.informative = se_fixed_point(InitKind::Informative, alpha, delta, wp, lp, quad, se);
    out.phi_uninformative = bethe_free_energy(out.uninformative.state, alpha, delta, wp, lp, quad);
    out.phi_informative = bethe_free_energy(out.informative.state, alpha, delta, wp, lp, quad);
    out.converged = out.uninformative.converged && out.informative.converged;

    const bool zero_mean = is_zero_mean(wp, lp);
    const double gap = std::abs(out.uninformative.state.m_theta - out.informative.state.m_theta);
    const bool trivial = zero_mean && out.uninformative.state.m_theta <= distinct_tol;
    if (gap <= distinct_tol)
        out.phase = trivial ? Phase::Impossible : Phase::Easy;
    else if (out.phi_informative < out.phi_uninformative)
        out.phase = Phase::Hard;
    else
        out.phase = trivial ? Phase::Impossible : Phase::Easy;
    return out;
}

std::vector<GridAxis> parse_grid(const std::string& text)
{
    static const std::vector<std::string> known{"mu", "delta", "alpha", "lambda", "beta"};
    std::vector<GridAxis> axes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw InvalidArgument("grid axis '" + item + "' lacks '='");
        GridAxis axis;
        axis.name = item.substr(0, eq);
        if (std::find(known.begin(), known.end(), axis.name) == known.end())
            throw InvalidArgument("unknown grid parameter '" + axis.name + "'");
        std::vector<std::string> parts;
        std::stringstream rs(item.substr(eq + 1));
        std::string part;
        while (std::getline(rs, part, ':')) parts.push_back(part);
        try {
            if (parts.size() == 1) {
                axis.values = {std::stod(parts[0])};
            } else if (parts.size() == 3) {
                const double a = std::stod(parts[0]), b = std::stod(parts[1]);
                const long n = std::stol(parts[2]);
                if (n < 1) throw InvalidArgument("grid axis '" + axis.name + "' needs a positive count");
                for (long k = 0; k < n; ++k) axis.values.push_back(n == 1 ? a : a + (b - a) * k / (n - 1));
            } else {
                throw InvalidArgument("grid axis '" + item + "' must be name=value or name=lo:hi:count");
            }
        } catch (const std::logic_error&) {
            throw InvalidArgument("grid axis '" + item + "' has a malformed number");
        }
        axes.push_back(std::move(axis));
    }
    if (axes.empty() || axes.size() > 2) throw InvalidArgument("grid needs one or two axes");
    if (axes.size() == 2 && axes[0].name == axes[1].name) throw InvalidArgument("grid axes must differ");
    return axes;
}

namespace {

void apply_parameter(SweepBase& b, const std::string& name, double value)
{
    if (name == "delta") {
        b.delta = value;
    } else if (name == "alpha") {
        b.alpha = value;
    } else if (name == "beta") {
        b.lp.beta = value;
    } else if (name == "mu") {
        if (auto* rb = std::get_if<RademacherBernoulli>(&b.wp))
            rb->mu = value;
        else if (auto* gm = std::get_if<GaussianMixture>(&b.wp))
            gm->mu = value;
        else
            throw InvalidArgument("mu applies to rb or gm priors only");
    } else if (name == "lambda") {
        auto* rb = std::get_if<RademacherBernoulli>(&b.wp);
        if (!rb) throw InvalidArgument("lambda applies to rb priors only");
        rb->lambda = value;
    }
}

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

}  // namespace

std::vector<SweepRow> sweep_grid(const std::vector<GridAxis>& axes, const SweepBase& base, const QuadratureRule& quad,
                                 const SweepOptions& opt)
{
    if (axes.empty() || axes.size() > 2) throw InvalidArgument("grid needs one or two axes");
    for (const auto& a : axes)
        if (a.values.empty()) throw InvalidArgument("grid axis '" + a.name + "' is empty");
    const std::size_t n2 = axes.size() == 2 ? axes[1].values.size() : 1;
    std::vector<SweepRow> rows(axes[0].values.size() * n2);
    std::vector<SweepBase> points(rows.size(), base);
    for (std::size_t i = 0; i < axes[0].values.size(); ++i)
        for (std::size_t j = 0; j < n2; ++j) {
            SweepRow& r = rows[i * n2 + j];
            r.param1 = axes[0].values[i];
            if (axes.size() == 2) r.param2 = axes[1].values[j];
            try {
                apply_parameter(points[i * n2 + j], axes[0].name, r.param1);
                if (r.param2) apply_parameter(points[i * n2 + j], axes[1].name, *r.param2);
            } catch (const Error& e) {
                r.error = e.what();
            }
        }

    // Thresholds depend on everything but delta, so they are shared along the delta axis.
    std::map<std::vector<double>, std::size_t> key_index;
    std::vector<std::size_t> row_key(rows.size(), 0);
    std::vector<SweepBase> key_points;
    if (opt.thresholds) {
        for (std::size_t r = 0; r < rows.size(); ++r) {
            std::vector<double> key;
            if (axes[0].name != "delta") key.push_back(rows[r].param1);
            if (rows[r].param2 && axes[1].name != "delta") key.push_back(*rows[r].param2);
            auto [it, fresh] = key_index.emplace(key, key_points.size());
            if (fresh) key_points.push_back(points[r]);
            row_key[r] = it->second;
        }
    }
    std::optional<std::pair<double, double>> bracket = opt.threshold_bracket;
    for (const auto& a : axes)
        if (!bracket && a.name == "delta" && a.values.size() > 1)
            bracket = std::make_pair(*std::min_element(a.values.begin(), a.values.end()),
                                     *std::max_element(a.values.begin(), a.values.end()));
    std::vector<PhaseThresholds> key_thresholds(key_points.size());
    run_parallel(key_points.size(), opt.threads, [&](std::size_t k) {
        const SweepBase& p = key_points[k];
        try {
            validate(p.wp);
            p.lp.validate();
            if (!bracket) throw InvalidArgument("thresholds need a delta bracket");
            key_thresholds[k] = find_thresholds(p.alpha, p.wp, p.lp, *bracket, quad, opt.threshold_opt);
        } catch (const Error& e) {
            key_thresholds[k].note = e.what();
        }
    });

    run_parallel(rows.size(), opt.threads, [&](std::size_t r) {
        SweepRow& row = rows[r];
        if (!row.error.empty()) return;
        const SweepBase& p = points[r];
        try {
            validate(p.wp);
            p.lp.validate();
            row.label = classify_phase(p.alpha, p.delta, p.wp, p.lp, quad, opt.se, opt.threshold_opt.distinct_tol);
            if (opt.thresholds) row.thresholds = key_thresholds[row_key[r]];
            if (is_zero_mean(p.wp, p.lp)) row.thresholds.delta_c = critical_noise(p.alpha, p.wp, p.lp);
        } catch (const Error& e) {
            row.label.reset();
            row.error = e.what();
        }
    });
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows)
{
    out << "param1,param2,m_theta_uninf,m_v_uninf,m_theta_inf,m_v_inf,mse_uninf,er_uninf,mse_inf,er_inf,phi_uninf,"
           "phi_inf,phase,delta_c,delta_alg,delta_it,delta_sp\n";
    for (const SweepRow& r : rows) {
        out << fmt(r.param1) << ',' << fmt(r.param2) << ',';
        if (r.label) {
            const auto& u = r.label->uninformative;
            const auto& i = r.label->informative;
            out << fmt(u.state.m_theta) << ',' << fmt(u.state.m_v) << ',' << fmt(i.state.m_theta) << ','
                << fmt(i.state.m_v) << ',' << fmt(u.mse_theta) << ',' << fmt(u.er_v) << ',' << fmt(i.mse_theta) << ','
                << fmt(i.er_v) << ',' << fmt(r.label->phi_uninformative) << ',' << fmt(r.label->phi_informative) << ','
                << (r.label->converged ? to_string(r.label->phase) : "Unconverged");
        } else {
            out << ",,,,,,,,,,Failed";
        }
        const auto& t = r.thresholds;
        out << ',' << fmt(t.delta_c) << ',' << fmt(t.delta_alg) << ',' << fmt(t.delta_it) << ',' << fmt(t.delta_sp)
            << '\n';
    }
}

}  // namespace dds
