#include "dds/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dds/amp.hpp"
#include "dds/bp.hpp"
#include "dds/error.hpp"
#include "dds/io.hpp"
#include "dds/phase.hpp"
#include "dds/rng.hpp"
#include "dds/sampling.hpp"
#include "dds/state_evolution.hpp"
#include "dds/twocoin.hpp"

namespace dds {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

unsigned default_threads()
{
    if (const char* env = std::getenv("DDS_THREADS")) {
        try {
            const long n = std::stol(env);
            if (n > 0) return static_cast<unsigned>(n);
        } catch (const std::exception&) {
        }
    }
    return 1;
}

// Every option of a subcommand with its resolved value, defaults included.
json resolved_spec(const CLI::App& app)
{
    json spec;
    spec["command"] = app.get_name();
    for (const CLI::Option* opt : app.get_options()) {
        const std::string name = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
        if (name == "help") continue;
        if (opt->get_expected_max() == 0) {
            spec[name] = opt->count() > 0;
        } else if (!opt->results().empty()) {
            std::string joined;
            for (const auto& r : opt->results()) joined += (joined.empty() ? "" : " ") + r;
            spec[name] = joined;
        } else if (!opt->get_default_str().empty()) {
            spec[name] = opt->get_default_str();
        } else {
            spec[name] = nullptr;
        }
    }
    return spec;
}

void write_json(const std::string& path, const json& j)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
}

std::pair<double, double> parse_pair(const std::string& text, const std::string& what)
{
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw InvalidArgument(what + " must be lo:hi");
    try {
        return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
    } catch (const std::exception&) {
        throw InvalidArgument(what + " must be lo:hi");
    }
}

AmpInit parse_init(const std::string& s)
{
    if (s == "prior-sample") return AmpInit::PriorSample;
    if (s == "prior-mean") return AmpInit::PriorMean;
    if (s == "majority") return AmpInit::MajorityVote;
    if (s == "truth") return AmpInit::GroundTruth;
    throw InvalidArgument("unknown init '" + s + "'");
}

json trajectory_json(const std::vector<AmpIteration>& t)
{
    json a = json::array();
    for (const AmpIteration& it : t)
        a.push_back({{"iteration", it.iteration},
                     {"change", it.change},
                     {"q_theta", it.q_theta},
                     {"q_v", it.q_v},
                     {"sigma_theta", it.sigma_theta},
                     {"sigma_v", it.sigma_v}});
    return a;
}

std::vector<int> as_ints(const std::vector<std::int8_t>& v) { return {v.begin(), v.end()}; }

// Writes a CSV either to `path` (with a `.meta.json` sidecar holding the spec) or to `out`.
void emit_csv(const std::string& path, const std::string& body, const json& spec, std::ostream& out)
{
    if (path.empty() || path == "-") {
        out << body;
        return;
    }
    std::ofstream f(path);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << body;
    write_json(path + ".meta.json", json{{"spec", spec}});
}

struct PriorFlags {
    std::string prior = "rb:0.02,0.5";
    double beta = 0.5;
};

void add_prior_flags(CLI::App* app, PriorFlags& p)
{
    app->add_option("--prior", p.prior, "worker prior: rb:<mu>,<lambda> | gm:<mu>,<mL>,<mR>,<vL>,<vR> | tab:<path> | beta:<a>,<b>");
    app->add_option("--beta", p.beta, "label prior P(v = -1)");
}

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string fmt_opt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Dawid-Skene crowdsourcing: AMP, state evolution, phase analysis and baselines", "dds"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);

    // generate
    struct {
        bool sparse = false;
        std::size_t n = 1000, m = 1000, d = 10;
        std::optional<double> nu;
        double rho = 0.0, n_scale = 1.0;
        std::optional<std::uint64_t> seed;
        std::string out_dir = ".";
        std::string prior_t;
        bool tied = false;
        PriorFlags prior;
    } gen;
    auto* g = app.add_subcommand("generate", "sample a synthetic instance");
    g->add_flag("--dense", "dense channel (default)");
    g->add_flag("--sparse", gen.sparse, "d random tasks per worker, nu = n_scale * N");
    g->add_option("--n", gen.n, "workers N");
    g->add_option("--m", gen.m, "tasks M");
    g->add_option("--nu", gen.nu, "signal scale nu (required for dense)");
    g->add_option("--rho", gen.rho, "fraction unanswered (dense)");
    g->add_option("--d", gen.d, "tasks per worker (sparse)");
    g->add_option("--n-scale", gen.n_scale, "n with nu = n N (sparse)");
    g->add_option("--seed", gen.seed, "master seed; drawn from entropy when absent");
    g->add_option("--out", gen.out_dir, "output directory");
    g->add_option("--prior-t", gen.prior_t, "specificity prior; turns on the two-coin channel");
    g->add_flag("--tied", gen.tied, "two-coin with s = t");
    add_prior_flags(g, gen.prior);

    // infer
    struct {
        std::string answers, dims, truth_theta, truth_v, algo = "amp", init = "prior-sample", onsager = "derived",
                                                          sigma_init = "one", bp_init = "uninformative", prior_t, out;
        std::optional<double> nu, rho, delta;
        double damping = 0.0, tol = 1e-8, init_scale = 1.0;
        std::size_t max_iter = 1000;
        std::optional<std::size_t> early_stop;
        std::optional<std::uint64_t> seed;
        bool tied = false;
        PriorFlags prior;
    } inf;
    auto* in = app.add_subcommand("infer", "run an inference algorithm on an answer matrix");
    in->add_option("--answers", inf.answers, "answers CSV (worker,task,answer)")->required();
    in->add_option("--dims", inf.dims, "sidecar JSON with n_workers and n_tasks");
    in->add_option("--truth-theta", inf.truth_theta, "CSV index,theta0");
    in->add_option("--truth-v", inf.truth_v, "CSV index,v0");
    in->add_option("--algo", inf.algo, "amp | amp2 | bp | majority | oracle")
        ->check(CLI::IsMember({"amp", "amp2", "bp", "majority", "oracle"}));
    in->add_option("--nu", inf.nu, "signal scale; defaults to N");
    in->add_option("--rho", inf.rho, "missing fraction; defaults to the empirical one");
    in->add_option("--delta", inf.delta, "effective noise; defaults to 1 / ((1 - rho) nu)");
    in->add_option("--init", inf.init, "prior-sample | prior-mean | majority | truth");
    in->add_option("--init-scale", inf.init_scale, "shrink prior-sample starts toward the prior mean");
    in->add_option("--onsager", inf.onsager, "derived | printed")->check(CLI::IsMember({"derived", "printed"}));
    in->add_option("--sigma-init", inf.sigma_init, "one | prior")->check(CLI::IsMember({"one", "prior"}));
    in->add_option("--damping", inf.damping, "iterate damping in [0,1)");
    in->add_option("--tol", inf.tol, "convergence tolerance");
    in->add_option("--max-iter", inf.max_iter, "iteration cap");
    in->add_option("--early-stop", inf.early_stop, "stop after this many iterations");
    in->add_option("--bp-init", inf.bp_init, "uninformative | informative")
        ->check(CLI::IsMember({"uninformative", "informative"}));
    in->add_option("--prior-t", inf.prior_t, "specificity prior for amp2; defaults to --prior");
    in->add_flag("--tied", inf.tied, "amp2 with s = t");
    in->add_option("--seed", inf.seed, "seed for prior-sample initialization");
    in->add_option("--out", inf.out, "results JSON; stdout when absent");
    add_prior_flags(in, inf.prior);

    // se and analyze se
    struct SeFlags {
        double alpha = 1.0, delta = 0.05;
        std::string init = "both", out;
        bool trajectory = false;
        std::size_t nodes = 127;
        PriorFlags prior;
    };
    SeFlags se_top, se_an;
    auto add_se = [](CLI::App* c, SeFlags& f) {
        c->add_option("--alpha", f.alpha, "M / N");
        c->add_option("--delta", f.delta, "effective noise");
        c->add_option("--init", f.init, "both | informative | uninformative")
            ->check(CLI::IsMember({"both", "informative", "uninformative"}));
        c->add_flag("--trajectory", f.trajectory, "emit per-iteration overlaps instead of fixed points");
        c->add_option("--nodes", f.nodes, "Gauss-Hermite nodes");
        c->add_option("--out", f.out, "CSV path; stdout when absent");
        add_prior_flags(c, f.prior);
    };
    auto* se = app.add_subcommand("se", "state-evolution fixed points");
    add_se(se, se_top);

    auto* an = app.add_subcommand("analyze", "phase analysis");
    an->require_subcommand(1);
    auto* an_se = an->add_subcommand("se", "state-evolution fixed points");
    add_se(an_se, se_an);

    struct {
        double alpha = 1.0, rel_tol = 1e-4;
        std::string bracket, out;
        std::size_t scan_points = 200;
        PriorFlags prior;
    } thr;
    auto* an_th = an->add_subcommand("thresholds", "critical, algorithmic, information-theoretic and spinodal noise");
    an_th->add_option("--alpha", thr.alpha, "M / N");
    an_th->add_option("--bracket", thr.bracket, "delta range lo:hi; defaults to 0.2..3 times delta_c");
    an_th->add_option("--rel-tol", thr.rel_tol, "bisection relative tolerance");
    an_th->add_option("--scan-points", thr.scan_points, "uniform scan points");
    an_th->add_option("--out", thr.out, "CSV path; stdout when absent");
    add_prior_flags(an_th, thr.prior);

    struct {
        std::string grid, bracket, out;
        double alpha = 1.0, delta = 0.05;
        unsigned threads = default_threads();
        bool thresholds = false;
        PriorFlags prior;
    } sw;
    auto* an_sw = an->add_subcommand("sweep", "phase table over a parameter grid");
    an_sw->add_option("--grid", sw.grid, "name=lo:hi:count[,name=lo:hi:count] over mu, delta, alpha, lambda, beta")
        ->required();
    an_sw->add_option("--alpha", sw.alpha, "base alpha");
    an_sw->add_option("--delta", sw.delta, "base delta");
    an_sw->add_option("--threads", sw.threads, "worker threads (env DDS_THREADS)");
    an_sw->add_flag("--thresholds", sw.thresholds, "also locate thresholds (shared along delta)");
    an_sw->add_option("--bracket", sw.bracket, "threshold delta range lo:hi; defaults to the delta axis");
    an_sw->add_option("--out", sw.out, "CSV path; stdout when absent");
    add_prior_flags(an_sw, sw.prior);

    struct {
        std::string answers, dims, truth_v, out;
        std::size_t n = 1000, m = 1000, d = 10;
        double n_scale = 1.0, damping = 0.1, tol = 1e-6;
        std::size_t max_iter = 500;
        std::optional<std::uint64_t> seed;
        PriorFlags prior;
    } cmp;
    auto* ci = app.add_subcommand("compare-init", "BP from uninformative and informative starts, with the SE analogue");
    ci->add_option("--answers", cmp.answers, "answers CSV; a sparse instance is generated when absent");
    ci->add_option("--dims", cmp.dims, "sidecar JSON with n_workers and n_tasks");
    ci->add_option("--truth-v", cmp.truth_v, "CSV index,v0 (needed with --answers)");
    ci->add_option("--n", cmp.n, "workers N (generated instance)");
    ci->add_option("--m", cmp.m, "tasks M (generated instance)");
    ci->add_option("--d", cmp.d, "tasks per worker");
    ci->add_option("--n-scale", cmp.n_scale, "n with nu = n N");
    ci->add_option("--damping", cmp.damping, "BP damping");
    ci->add_option("--tol", cmp.tol, "BP tolerance");
    ci->add_option("--max-iter", cmp.max_iter, "BP iteration cap");
    ci->add_option("--seed", cmp.seed, "seed for the generated instance");
    ci->add_option("--out", cmp.out, "report JSON; stdout when absent");
    add_prior_flags(ci, cmp.prior);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (g->parsed()) {
            if (!gen.seed) gen.seed = entropy_seed();
            json spec = resolved_spec(*g);
            spec["seed"] = *gen.seed;
            if (!gen.sparse && !gen.nu) throw InvalidArgument("--nu is required for dense generation");
            ModelParams params{gen.n, gen.m, gen.nu.value_or(0.0), gen.rho};
            SparseRegimeConfig sparse{gen.d, gen.n_scale};
            if (gen.sparse) {
                params.nu = gen.n_scale * static_cast<double>(gen.n);
                params.rho = sparse.implied_rho(gen.m);
            }
            const double theta_scale = params.nu > 0.0 ? std::sqrt(static_cast<double>(gen.n) / params.nu) : 1.0;
            const WorkerPrior wp = parse_worker_prior(gen.prior.prior, theta_scale);
            const LabelPrior lp{gen.prior.beta};
            fs::create_directories(gen.out_dir);
            const fs::path dir(gen.out_dir);
            AnswerMatrix y;
            if (!gen.prior_t.empty() || gen.tied) {
                if (gen.sparse) throw InvalidArgument("two-coin generation supports the dense channel only");
                const WorkerPrior wt = gen.prior_t.empty() ? wp : parse_worker_prior(gen.prior_t, theta_scale);
                const TwoCoinTruth gt = sample_two_coin_truth(params, wp, wt, lp, gen.tied, *gen.seed);
                y = sample_two_coin_answers(gt, params, *gen.seed);
                std::ofstream f(dir / "truth_theta.csv");
                if (!f) throw IoError("cannot write " + (dir / "truth_theta.csv").string());
                f.precision(17);
                f << "index,s,t\n";
                for (std::size_t i = 0; i < gt.workers.size(); ++i)
                    f << i << ',' << gt.workers[i].s << ',' << gt.workers[i].t << '\n';
                write_labels_csv((dir / "truth_v.csv").string(), gt.v0);
            } else {
                const GroundTruth gt = sample_ground_truth(params, wp, lp, *gen.seed);
                y = gen.sparse ? sample_answers_sparse(gt, sparse, params, *gen.seed)
                               : sample_answers_dense(gt, params, *gen.seed);
                write_theta_csv((dir / "truth_theta.csv").string(), gt.theta0);
                write_labels_csv((dir / "truth_v.csv").string(), gt.v0);
            }
            write_answers_csv((dir / "answers.csv").string(), y);
            json meta{{"spec", spec},
                      {"n_workers", y.n_workers()},
                      {"n_tasks", y.n_tasks()},
                      {"nu", params.nu},
                      {"rho", params.rho},
                      {"n_answers", y.nnz()}};
            write_json((dir / "meta.json").string(), meta);
            return 0;
        }

        if (in->parsed()) {
            if (!inf.seed) inf.seed = entropy_seed();
            json spec = resolved_spec(*in);
            spec["seed"] = *inf.seed;
            const AnswerMatrix y = read_answers_csv(
                inf.answers, inf.dims.empty() ? std::nullopt : std::optional<std::string>(inf.dims));
            const double nu = inf.nu.value_or(static_cast<double>(y.n_workers()));
            const double rho = inf.rho.value_or(y.missing_fraction());
            const double delta = inf.delta.value_or(effective_noise(rho, nu));
            const double theta_scale = std::sqrt(static_cast<double>(y.n_workers()) / nu);
            const WorkerPrior wp = parse_worker_prior(inf.prior.prior, theta_scale);
            const LabelPrior lp{inf.prior.beta};
            lp.validate();
            spec["resolved"] = {{"nu", nu}, {"rho", rho}, {"delta", delta}};

            std::optional<std::vector<std::int8_t>> v0;
            if (!inf.truth_v.empty()) {
                v0 = read_labels_csv(inf.truth_v);
                if (v0->size() != y.n_tasks()) throw InvalidArgument("truth labels do not match n_tasks");
            }
            std::optional<GroundTruth> gt;
            std::optional<TwoCoinTruth> gt2;
            if (!inf.truth_theta.empty() && v0) {
                if (inf.algo == "amp2") {
                    std::vector<WorkerVec> w;
                    std::ifstream f(inf.truth_theta);
                    if (!f) throw IoError("cannot open '" + inf.truth_theta + "'");
                    std::string line;
                    std::getline(f, line);
                    while (std::getline(f, line)) {
                        std::stringstream ss(line);
                        std::string a, b, c;
                        std::getline(ss, a, ',');
                        std::getline(ss, b, ',');
                        if (!std::getline(ss, c)) {
                            c = b;  // rank-1 truth: s = t
                        }
                        w.push_back({std::stod(b), std::stod(c)});
                    }
                    gt2 = TwoCoinTruth{w, *v0};
                } else {
                    gt = GroundTruth{read_theta_csv(inf.truth_theta), *v0};
                    if (gt->theta0.size() != y.n_workers()) throw InvalidArgument("truth theta does not match n_workers");
                }
            }

            AmpConfig cfg;
            cfg.tol = inf.tol;
            cfg.max_iter = inf.early_stop.value_or(inf.max_iter);
            cfg.damping = inf.damping;
            cfg.init_scale = inf.init_scale;
            cfg.init = parse_init(inf.init);
            cfg.onsager = inf.onsager == "printed" ? OnsagerPlacement::AsPrinted : OnsagerPlacement::Derived;
            cfg.sigma_init = inf.sigma_init == "prior" ? SigmaInit::PriorVariance : SigmaInit::One;

            json res{{"spec", spec}, {"algo", inf.algo}};
            std::vector<std::int8_t> labels;
            if (inf.algo == "amp") {
                const FisherScore s(y, nu);
                const AmpResult r = amp_run(s, delta, wp, lp, cfg, *inf.seed, gt ? &*gt : nullptr);
                labels = r.labels;
                res["theta_hat"] = r.theta_hat;
                res["v_hat"] = r.v_hat;
                res["iterations"] = r.iterations;
                res["converged"] = r.converged;
                res["early_stopped"] = inf.early_stop.has_value() && !r.converged;
                res["trajectory"] = trajectory_json(r.trajectory);
                if (gt) res["mse_theta"] = mean_squared_error(r.theta_hat, gt->theta0);
            } else if (inf.algo == "amp2") {
                const FisherScore s(y, nu);
                TwoCoinPrior prior;
                prior.s = wp;
                prior.t = inf.prior_t.empty() ? wp : parse_worker_prior(inf.prior_t, theta_scale);
                prior.tied = inf.tied;
                const Rank2Result r = amp_rank2_run(s, delta, prior, lp, cfg, *inf.seed, gt2 ? &*gt2 : nullptr);
                labels = r.labels;
                res["theta_hat"] = r.theta_hat;
                res["v_hat"] = r.v_hat;
                res["iterations"] = r.iterations;
                res["converged"] = r.converged;
                res["early_stopped"] = inf.early_stop.has_value() && !r.converged;
                res["trajectory"] = trajectory_json(r.trajectory);
            } else if (inf.algo == "bp") {
                BpConfig bc;
                bc.tol = inf.tol;
                bc.max_iter = inf.early_stop.value_or(inf.max_iter);
                bc.damping = in->count("--damping") ? inf.damping : 0.1;
                bc.init = inf.bp_init == "informative" ? BpInit::Informative : BpInit::Uninformative;
                bc.reliability = reliability_prior(wp, nu, y.n_workers());
                const BpResult r = bp_run(FactorGraph::from_answers(y), bc, lp, *inf.seed, v0 ? &*v0 : nullptr);
                labels = r.labels;
                res["marginals"] = r.marginals;
                res["iterations"] = r.iterations;
                res["converged"] = r.converged;
                res["trajectory"] = r.trajectory;
            } else if (inf.algo == "majority") {
                labels = majority_vote(y);
            } else {
                if (!gt) throw InvalidArgument("oracle needs --truth-theta and --truth-v");
                labels = oracle_labels(y, *gt, ModelParams{y.n_workers(), y.n_tasks(), nu, rho}, lp);
            }
            res["labels"] = as_ints(labels);
            if (v0) {
                res["er"] = error_rate(labels, *v0);
                res["er_flip_invariant"] = flip_invariant_error_rate(labels, *v0);
            }
            if (inf.out.empty())
                out << res.dump(2) << '\n';
            else
                write_json(inf.out, res);
            return 0;
        }

        auto run_se = [&](CLI::App& cmd, const SeFlags& f) {
            const json spec = resolved_spec(cmd);
            const WorkerPrior wp = parse_worker_prior(f.prior.prior);
            const LabelPrior lp{f.prior.beta};
            lp.validate();
            const QuadratureRule quad = gauss_hermite(f.nodes);
            std::vector<InitKind> kinds;
            if (f.init != "informative") kinds.push_back(InitKind::Uninformative);
            if (f.init != "uninformative") kinds.push_back(InitKind::Informative);
            std::ostringstream body;
            if (f.trajectory)
                body << "init,iteration,m_theta,m_v\n";
            else
                body << "init,alpha,delta,m_theta,m_v,mse_theta,er_v,r_v,phi,iterations,converged\n";
            for (InitKind k : kinds) {
                std::vector<SEState> traj;
                const SEFixedPoint fp =
                    se_fixed_point(k, f.alpha, f.delta, wp, lp, quad, {}, f.trajectory ? &traj : nullptr);
                if (f.trajectory) {
                    for (std::size_t t = 0; t < traj.size(); ++t)
                        body << to_string(k) << ',' << t << ',' << fmt(traj[t].m_theta) << ',' << fmt(traj[t].m_v)
                             << '\n';
                } else {
                    body << to_string(k) << ',' << fmt(f.alpha) << ',' << fmt(f.delta) << ',' << fmt(fp.state.m_theta)
                         << ',' << fmt(fp.state.m_v) << ',' << fmt(fp.mse_theta) << ',' << fmt(fp.er_v) << ','
                         << fmt(fp.r_v) << ',' << fmt(bethe_free_energy(fp.state, f.alpha, f.delta, wp, lp, quad))
                         << ',' << fp.iterations << ',' << (fp.converged ? "true" : "false") << '\n';
                }
            }
            emit_csv(f.out, body.str(), spec, out);
        };
        if (se->parsed()) {
            run_se(*se, se_top);
            return 0;
        }
        if (an_se->parsed()) {
            run_se(*an_se, se_an);
            return 0;
        }

        if (an_th->parsed()) {
            const json spec = resolved_spec(*an_th);
            const WorkerPrior wp = parse_worker_prior(thr.prior.prior);
            const LabelPrior lp{thr.prior.beta};
            lp.validate();
            std::pair<double, double> bracket;
            if (!thr.bracket.empty()) {
                bracket = parse_pair(thr.bracket, "--bracket");
            } else {
                if (!is_zero_mean(wp, lp)) throw InvalidArgument("--bracket is required for non-zero-mean priors");
                const double dc = critical_noise(thr.alpha, wp, lp);
                bracket = {0.2 * dc, 3.0 * dc};
            }
            ThresholdOptions opt;
            opt.rel_tol = thr.rel_tol;
            opt.scan_points = thr.scan_points;
            const PhaseThresholds t = find_thresholds(thr.alpha, wp, lp, bracket, default_gaussian_rule(), opt);
            std::ostringstream body;
            body << "alpha,delta_c,delta_alg,delta_it,delta_sp,alg_gap,note\n"
                 << fmt(thr.alpha) << ',' << fmt_opt(t.delta_c) << ',' << fmt_opt(t.delta_alg) << ','
                 << fmt_opt(t.delta_it) << ',' << fmt_opt(t.delta_sp) << ',' << fmt(t.alg_gap) << ',' << t.note
                 << '\n';
            emit_csv(thr.out, body.str(), spec, out);
            return 0;
        }

        if (an_sw->parsed()) {
            const json spec = resolved_spec(*an_sw);
            SweepBase base;
            base.alpha = sw.alpha;
            base.delta = sw.delta;
            base.wp = parse_worker_prior(sw.prior.prior);
            base.lp = LabelPrior{sw.prior.beta};
            SweepOptions opt;
            opt.threads = sw.threads;
            opt.thresholds = sw.thresholds;
            if (!sw.bracket.empty()) opt.threshold_bracket = parse_pair(sw.bracket, "--bracket");
            const auto rows = sweep_grid(parse_grid(sw.grid), base, default_gaussian_rule(), opt);
            std::ostringstream body;
            write_sweep_csv(body, rows);
            emit_csv(sw.out, body.str(), spec, out);
            return 0;
        }

        if (ci->parsed()) {
            if (!cmp.seed) cmp.seed = entropy_seed();
            json spec = resolved_spec(*ci);
            spec["seed"] = *cmp.seed;
            AnswerMatrix y;
            std::vector<std::int8_t> v0;
            if (!cmp.answers.empty()) {
                if (cmp.truth_v.empty()) throw InvalidArgument("--answers needs --truth-v");
                y = read_answers_csv(cmp.answers, cmp.dims.empty() ? std::nullopt : std::optional<std::string>(cmp.dims));
                v0 = read_labels_csv(cmp.truth_v);
            } else {
                ModelParams params{cmp.n, cmp.m, cmp.n_scale * static_cast<double>(cmp.n), 0.0};
                const SparseRegimeConfig sparse{cmp.d, cmp.n_scale};
                params.rho = sparse.implied_rho(cmp.m);
                const WorkerPrior wp = parse_worker_prior(cmp.prior.prior, std::sqrt(1.0 / cmp.n_scale));
                const GroundTruth gt = sample_ground_truth(params, wp, LabelPrior{cmp.prior.beta}, *cmp.seed);
                y = sample_answers_sparse(gt, sparse, params, *cmp.seed);
                v0 = gt.v0;
            }
            const double nu = cmp.n_scale * static_cast<double>(y.n_workers());
            const WorkerPrior wp = parse_worker_prior(cmp.prior.prior, std::sqrt(1.0 / cmp.n_scale));
            const LabelPrior lp{cmp.prior.beta};
            BpConfig cfg;
            cfg.tol = cmp.tol;
            cfg.max_iter = cmp.max_iter;
            cfg.damping = cmp.damping;
            cfg.reliability = reliability_prior(wp, nu, y.n_workers());
            const CoexistenceReport rep = bp_two_init_compare(FactorGraph::from_answers(y), cfg, lp, v0, *cmp.seed);

            const double alpha = static_cast<double>(y.n_tasks()) / static_cast<double>(y.n_workers());
            const double delta = effective_noise(y.missing_fraction(), nu);
            const SEFixedPoint su = se_fixed_point(InitKind::Uninformative, alpha, delta, wp, lp, default_gaussian_rule());
            const SEFixedPoint sinf = se_fixed_point(InitKind::Informative, alpha, delta, wp, lp, default_gaussian_rule());
            json res{{"spec", spec},
                     {"delta", delta},
                     {"bp",
                      {{"er_uninformative", rep.er_uninformative},
                       {"er_informative", rep.er_informative},
                       {"distance", rep.distance},
                       {"coexistence", rep.coexistence},
                       {"iterations_uninformative", rep.uninformative.iterations},
                       {"iterations_informative", rep.informative.iterations},
                       {"converged_uninformative", rep.uninformative.converged},
                       {"converged_informative", rep.informative.converged}}},
                     {"se",
                      {{"er_uninformative", su.er_v},
                       {"er_informative", sinf.er_v},
                       {"m_theta_uninformative", su.state.m_theta},
                       {"m_theta_informative", sinf.state.m_theta},
                       {"coexistence", std::abs(su.state.m_theta - sinf.state.m_theta) > 1e-6}}}};
            if (cmp.out.empty())
                out << res.dump(2) << '\n';
            else
                write_json(cmp.out, res);
            return 0;
        }
    } catch (const NonFinite& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        // Remaining library errors reject the requested configuration (domain, overflow, bracket).
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}

}  // namespace dds
