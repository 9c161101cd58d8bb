// sisk: command-line front end for the SIS^K pair approximation and simulator.
//
//   sisk generate  --regular N D | --gnp N P  [--seed S] [--out FILE]
//   sisk solve     --graph FILE | --regular-q Q  --beta B | --beta-range LO:HI:STEPS ...
//   sisk threshold --graph FILE | --regular-q Q  --method mf|pair|k2|bisect ...
//   sisk simulate  --graph FILE --beta B [--replicas R] ...
//   sisk survival  --graph FILE | --regular-q Q  --beta B [--t-grid LO:HI:N:lin|log] [--simulate]
//   sisk replay    MANIFEST [--out-prefix P]
//
// With --out-prefix (--out for generate) results go to files next to a
// PREFIX.manifest.json; otherwise the primary result is printed on stdout.
// Exit codes: 0 ok, 2 input error, 3 non-convergence, 4 numerical failure.
// SISK_THREADS sets the worker count for sweeps and replicas.

#include "sisk/error.hpp"
#include "sisk/graph.hpp"
#include "sisk/simulate.hpp"
#include "sisk/solver.hpp"
#include "sisk/temporal.hpp"
#include "sisk/threshold.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#ifndef SISK_VERSION
#define SISK_VERSION "0.0.0"
#endif

using json = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kNotConverged = 3;
constexpr int kNumericalError = 4;

unsigned env_threads() {
    const char* s = std::getenv("SISK_THREADS");
    if (!s || !*s) return std::max(1u, std::thread::hardware_concurrency());
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (*end != '\0' || v < 1 || v > 4096) throw sisk::InputError("SISK_THREADS must be a positive integer");
    return static_cast<unsigned>(v);
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string hex64(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(item);
    return out;
}

double to_double(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos == s.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw sisk::InputError(std::string("bad ") + what + ": '" + s + "'");
}

std::size_t to_count(const std::string& s, const char* what) {
    const double v = to_double(s, what);
    if (v < 0 || v != std::floor(v)) throw sisk::InputError(std::string("bad ") + what + ": '" + s + "'");
    return static_cast<std::size_t>(v);
}

// LO:HI:STEPS, endpoints included.
std::vector<double> parse_beta_range(const std::string& spec) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3) throw sisk::InputError("--beta-range expects LO:HI:STEPS");
    const double lo = to_double(parts[0], "range start"), hi = to_double(parts[1], "range end");
    const std::size_t steps = to_count(parts[2], "step count");
    if (steps == 0 || hi < lo || (steps == 1 && hi != lo))
        throw sisk::InputError("--beta-range needs LO <= HI and STEPS >= 1 (STEPS = 1 only for LO = HI)");
    std::vector<double> out;
    for (std::size_t i = 0; i < steps; ++i)
        out.push_back(steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1));
    return out;
}

// LO:HI:N:lin|log
std::vector<double> parse_t_grid(const std::string& spec) {
    const auto parts = split(spec, ':');
    if (parts.size() != 4) throw sisk::InputError("--t-grid expects LO:HI:N:lin|log");
    const double lo = to_double(parts[0], "grid start"), hi = to_double(parts[1], "grid end");
    const std::size_t n = to_count(parts[2], "grid size");
    const std::string& kind = parts[3];
    if (n < 2 || hi <= lo || lo < 0.0) throw sisk::InputError("--t-grid needs 0 <= LO < HI and N >= 2");
    if (kind != "lin" && kind != "log") throw sisk::InputError("--t-grid spacing must be lin or log");
    if (kind == "log" && lo <= 0.0) throw sisk::InputError("log grid needs LO > 0");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(n - 1);
        out[i] = kind == "lin" ? lo + (hi - lo) * f : lo * std::pow(hi / lo, f);
    }
    out.back() = hi;
    return out;
}

std::optional<double> parse_gamma(const std::string& s) {
    if (s == "auto") return std::nullopt;
    const double g = to_double(s, "--gamma");
    if (g < 0.0) throw sisk::InputError("--gamma must be non-negative");
    return g;
}

struct GraphSource {
    std::string file;
    double regular_q = 0.0;
    sisk::Graph graph;
    json info;

    bool ensemble() const { return file.empty(); }
};

GraphSource resolve_graph(const std::string& file, double q, bool allow_ensemble) {
    GraphSource src;
    const bool has_file = !file.empty(), has_q = q > 0.0;
    if (has_file == has_q)
        throw sisk::InputError(allow_ensemble ? "give exactly one of --graph and --regular-q" : "--graph is required");
    if (has_q && !allow_ensemble) throw sisk::InputError("--regular-q is not available here; use --graph");
    if (has_q) {
        if (q < 1.0) throw sisk::InputError("--regular-q must be >= 1");
        src.regular_q = q;
        src.info = {{"source", "regular-ensemble"}, {"q", q}};
        return src;
    }
    auto loaded = sisk::load_edge_list(file);
    src.file = file;
    src.graph = std::move(loaded.graph);
    src.info = {{"source", file},
                {"content_hash", hex64(src.graph.content_hash())},
                {"nodes", src.graph.num_nodes()},
                {"edges", src.graph.num_edges()},
                {"dropped_self_loops", loaded.dropped_self_loops},
                {"dropped_duplicates", loaded.dropped_duplicates}};
    return src;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw sisk::InputError("cannot write " + path);
    return out;
}

void write_json(const json& j, const std::string& path) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

struct Run {
    std::string subcommand;
    std::vector<std::string> argv;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    json config = json::object();
    json seeds = json::object();
    json graph = json::object();
    json outputs = json::array();
    json results = json::object();

    void write_manifest(const std::string& path, unsigned threads) const {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json m = {{"subcommand", subcommand},
                  {"argv", argv},
                  {"config", config},
                  {"seeds", seeds},
                  {"graph", graph},
                  {"outputs", outputs},
                  {"results", results},
                  {"version", SISK_VERSION},
                  {"threads", threads},
                  {"started_at", utc_now()},
                  {"wall_time_s", wall}};
        write_json(m, path);
    }
};

// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::vector<std::string> regular, gnp;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_generate(const GenerateArgs& a, Run& run) {
    if (a.regular.empty() == a.gnp.empty()) throw sisk::InputError("give exactly one of --regular and --gnp");
    sisk::Graph g;
    if (!a.regular.empty()) {
        const std::size_t n = to_count(a.regular[0], "node count"), d = to_count(a.regular[1], "degree");
        g = sisk::generate_random_regular(n, d, a.seed);
        run.config = {{"model", "regular"}, {"n", n}, {"degree", d}};
    } else {
        const std::size_t n = to_count(a.gnp[0], "node count");
        const double p = to_double(a.gnp[1], "edge probability");
        g = sisk::generate_gnp(n, p, a.seed);
        run.config = {{"model", "gnp"}, {"n", n}, {"p", p}};
    }
    run.seeds = {{"graph", a.seed}};
    run.graph = {{"source", "generated"},
                 {"content_hash", hex64(g.content_hash())},
                 {"nodes", g.num_nodes()},
                 {"edges", g.num_edges()}};
    if (a.out.empty()) {
        sisk::write_edge_list(g, std::cout);
        return kOk;
    }
    sisk::save_edge_list(g, a.out);
    run.outputs.push_back(a.out);
    run.write_manifest(a.out + ".manifest.json", 1);
    return kOk;
}

// ---------------------------------------------------------------------------

struct SolveArgs {
    std::string graph;
    double regular_q = 0.0;
    std::optional<double> beta;
    std::string beta_range;
    int K = 1;
    std::string gamma = "auto";
    double tol = 1e-10;
    std::size_t max_iter = 100000;
    double damping = 0.5;
    std::string out_prefix;
};

struct SolveRow {
    double beta = 0.0;
    double rho = 0.0;
    double gamma = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

int cmd_solve(const SolveArgs& a, Run& run, unsigned threads) {
    const GraphSource src = resolve_graph(a.graph, a.regular_q, true);
    if (a.beta.has_value() == !a.beta_range.empty()) throw sisk::InputError("give exactly one of --beta and --beta-range");
    const std::vector<double> betas = a.beta ? std::vector<double>{*a.beta} : parse_beta_range(a.beta_range);
    const auto gamma = parse_gamma(a.gamma);
    sisk::SolverConfig cfg;
    cfg.tol = a.tol;
    cfg.max_iter = a.max_iter;
    cfg.damping = a.damping;

    const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(betas.size()));
    cfg.threads = betas.size() == 1 ? threads : 1;

    std::vector<SolveRow> rows(betas.size());
    std::vector<std::exception_ptr> errors(betas.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < betas.size();) {
            try {
                SolveRow r;
                r.beta = betas[i];
                if (src.ensemble()) {
                    const auto s = sisk::solve_regular_scalar(src.regular_q, r.beta, a.K, gamma, cfg);
                    r.rho = s.rho;
                    r.gamma = s.gamma;
                    r.converged = s.converged;
                    r.iterations = s.iterations;
                } else {
                    const auto s = sisk::solve_pair_k(src.graph, r.beta, a.K, gamma, cfg);
                    r.rho = s.marginals.mean_rho();
                    r.gamma = s.messages.gamma;
                    r.converged = s.converged;
                    r.iterations = s.iterations;
                }
                if (!std::isfinite(r.rho)) throw sisk::NumericalError("non-finite rho at beta " + fmt(r.beta));
                rows[i] = r;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    run.config = {{"K", a.K},        {"gamma", a.gamma},         {"tol", a.tol},
                  {"max_iter", a.max_iter}, {"damping", a.damping}, {"betas", betas},
                  {"solver", src.ensemble() ? "regular-ensemble" : "graph"}};
    run.graph = src.info;

    std::ofstream file;
    if (!a.out_prefix.empty()) file = open_out(a.out_prefix + ".csv");
    std::ostream& out = a.out_prefix.empty() ? std::cout : file;
    out << "beta,rho_mean,converged,iterations\n";
    std::exception_ptr failure;
    bool all_converged = true;
    json gammas = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (errors[i]) {
            failure = errors[i];
            break;
        }
        const auto& r = rows[i];
        out << fmt(r.beta) << ',' << fmt(r.rho) << ',' << (r.converged ? "true" : "false") << ',' << r.iterations
            << '\n';
        all_converged = all_converged && r.converged;
        gammas.push_back(r.gamma);
    }
    out.flush();
    run.results = {{"rows", gammas.size()}, {"all_converged", all_converged}, {"gamma_used", gammas}};
    if (!a.out_prefix.empty()) {
        run.outputs.push_back(a.out_prefix + ".csv");
        run.write_manifest(a.out_prefix + ".manifest.json", threads);
    }
    if (failure) std::rethrow_exception(failure);
    if (!all_converged) {
        std::cerr << "sisk solve: some rows did not converge (converged=false)\n";
        return kNotConverged;
    }
    return kOk;
}

// ---------------------------------------------------------------------------

struct ThresholdArgs {
    std::string graph;
    double regular_q = 0.0;
    std::string method = "pair";
    int K = 2;
    std::string gamma = "auto";
    double resolution = 1e-4;
    double tol = 1e-10;
    std::string out_prefix;
};

int cmd_threshold(const ThresholdArgs& a, Run& run, unsigned threads) {
    const GraphSource src = resolve_graph(a.graph, a.regular_q, true);
    sisk::ThresholdResult r;
    json extra = json::object();
    if (a.method == "mf") {
        if (src.ensemble()) {
            r.beta_c = 1.0 / (src.regular_q + 1.0);
            r.lambda = src.regular_q + 1.0;
        } else {
            r = sisk::threshold_mf(src.graph);
        }
    } else if (a.method == "pair") {
        if (src.ensemble()) {
            r.beta_c = 1.0 / src.regular_q;
            r.method = sisk::ThresholdMethod::pair;
        } else {
            r = sisk::threshold_pair(src.graph);
        }
    } else if (a.method == "k2") {
        double q = src.regular_q;
        if (!src.ensemble()) {
            const auto& g = src.graph;
            if (g.num_nodes() == 0) throw sisk::InputError("empty graph");
            for (sisk::NodeId v = 0; v < g.num_nodes(); ++v)
                if (g.degree(v) != g.degree(0)) throw sisk::InputError("method k2 needs a regular graph");
            q = static_cast<double>(g.degree(0)) - 1.0;
        }
        r = sisk::threshold_pair_regular_k2(q);
        extra["q"] = q;
    } else if (a.method == "bisect") {
        sisk::SolverConfig cfg;
        cfg.tol = a.tol;
        cfg.threads = threads;
        sisk::BisectOptions opts;
        opts.resolution = a.resolution;
        const auto gamma = parse_gamma(a.gamma);
        const sisk::BisectTarget target = src.ensemble() ? sisk::BisectTarget{sisk::RegularEnsemble{src.regular_q}}
                                                         : sisk::BisectTarget{std::cref(src.graph)};
        r = sisk::threshold_bisect(target, a.K, gamma, cfg, opts);
        extra["K"] = a.K;
        extra["gamma"] = a.gamma;
    } else {
        throw sisk::InputError("--method must be mf, pair, k2 or bisect");
    }
    if (!std::isfinite(r.beta_c)) throw sisk::NumericalError("threshold is not finite");

    json result = {{"method", a.method},
                   {"beta_c", r.beta_c},
                   {"converged", r.converged},
                   {"iterations", r.iterations}};
    if (a.method == "bisect") result["bracket_width"] = r.bracket_width;
    if (a.method == "mf" || a.method == "pair") result["lambda"] = r.lambda;
    result.update(extra);

    run.config = {{"method", a.method}, {"K", a.K},   {"gamma", a.gamma},
                  {"resolution", a.resolution}, {"tol", a.tol}};
    run.graph = src.info;
    run.results = result;
    if (a.out_prefix.empty()) {
        std::cout << result.dump(2) << '\n';
    } else {
        write_json(result, a.out_prefix + ".json");
        run.outputs.push_back(a.out_prefix + ".json");
        run.write_manifest(a.out_prefix + ".manifest.json", threads);
    }
    return r.converged ? kOk : kNotConverged;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string graph;
    double beta = 0.0;
    double t_max = 1e4;
    double burn_in = -1.0;
    std::uint64_t seed = 1;
    std::size_t replicas = 1;
    int K = 1;
    std::string gamma = "auto";
    double init_fraction = 1.0;
    std::size_t qs_memory = 100;
    double sample_interval = 0.0;
    std::size_t batches = 10;
    std::string out_prefix;
};

json qs_json(const sisk::QsEstimate& q) {
    return {{"mean", q.mean},
            {"stderr", q.stderr},
            {"subcritical", q.subcritical},
            {"doomed_fraction", q.doomed_fraction},
            {"susceptibility", q.susceptibility},
            {"absorptions", q.absorptions},
            {"replicas", q.replicas}};
}

int cmd_simulate(const SimulateArgs& a, Run& run, unsigned threads) {
    const GraphSource src = resolve_graph(a.graph, 0.0, false);
    const auto& g = src.graph;
    sisk::SimConfig cfg;
    cfg.beta = a.beta;
    cfg.t_max = a.t_max;
    cfg.burn_in = a.burn_in;
    cfg.seed = a.seed;
    cfg.K = a.K;
    const auto gamma = parse_gamma(a.gamma);
    cfg.gamma = gamma ? *gamma : sisk::auto_gamma(a.beta, sisk::mean_excess_degree(g), a.K);
    cfg.init_fraction = a.init_fraction;
    cfg.qs_memory = a.qs_memory;
    cfg.sample_interval = a.sample_interval;
    cfg.batches = a.batches;

    const auto runs = sisk::run_replicas(g, cfg, a.replicas, threads);
    std::vector<sisk::QsEstimate> estimates;
    json per_replica = json::array();
    for (std::size_t r = 0; r < runs.size(); ++r) {
        estimates.push_back(runs[r].qs);
        per_replica.push_back({{"seed", sisk::replica_seed(a.seed, r)},
                               {"mean", runs[r].qs.mean},
                               {"stderr", runs[r].qs.stderr},
                               {"subcritical", runs[r].qs.subcritical}});
    }
    json qs = qs_json(sisk::combine_replicas(estimates));
    qs["per_replica"] = per_replica;

    run.config = {{"beta", a.beta},
                  {"t_max", a.t_max},
                  {"burn_in", cfg.resolved_burn_in()},
                  {"replicas", a.replicas},
                  {"K", a.K},
                  {"gamma", cfg.gamma},
                  {"init_fraction", a.init_fraction},
                  {"qs_memory", a.qs_memory},
                  {"sample_interval", a.sample_interval},
                  {"batches", a.batches}};
    run.seeds = {{"simulation", a.seed}, {"replica_seeds", json::array()}};
    for (std::size_t r = 0; r < runs.size(); ++r) run.seeds["replica_seeds"].push_back(sisk::replica_seed(a.seed, r));
    run.graph = src.info;
    run.results = qs;

    if (a.out_prefix.empty()) {
        std::cout << qs.dump(2) << '\n';
        return kOk;
    }
    std::size_t len = runs[0].trajectory.t.size();
    for (const auto& r : runs) len = std::min(len, r.trajectory.t.size());
    const double n = static_cast<double>(g.num_nodes());
    const double R = static_cast<double>(runs.size());
    auto csv = open_out(a.out_prefix + ".csv");
    csv << (runs.size() > 1 ? "t,rho,stderr\n" : "t,rho\n");
    for (std::size_t i = 0; i < len; ++i) {
        double sum = 0.0, sq = 0.0;
        for (const auto& r : runs) {
            const double x = r.trajectory.infected[i] / n;
            sum += x;
            sq += x * x;
        }
        const double mean = sum / R;
        csv << fmt(runs[0].trajectory.t[i]) << ',' << fmt(mean);
        if (runs.size() > 1) {
            const double var = std::max(0.0, (sq - R * mean * mean) / (R - 1.0));
            csv << ',' << fmt(std::sqrt(var / R));
        }
        csv << '\n';
    }
    csv.close();
    write_json(qs, a.out_prefix + ".qs.json");
    run.outputs = {a.out_prefix + ".csv", a.out_prefix + ".qs.json"};
    run.write_manifest(a.out_prefix + ".manifest.json", threads);
    return kOk;
}

// ---------------------------------------------------------------------------

struct SurvivalArgs {
    std::string graph;
    double regular_q = 0.0;
    double beta = 0.0;
    int K = 1;
    std::string gamma = "auto";
    std::string t_grid = "0:20:401:lin";
    double tol = 1e-10;
    bool simulate = false;
    double t_max = 2100.0;
    double burn_in = 100.0;
    std::uint64_t seed = 1;
    std::size_t sample_cap = 100000000;
    std::string out_prefix;
};

int cmd_survival(const SurvivalArgs& a, Run& run, unsigned threads) {
    const GraphSource src = resolve_graph(a.graph, a.regular_q, true);
    if (a.simulate && src.ensemble()) throw sisk::InputError("--simulate needs --graph");
    const auto grid = parse_t_grid(a.t_grid);
    const auto gamma = parse_gamma(a.gamma);
    sisk::SolverConfig cfg;
    cfg.tol = a.tol;
    cfg.threads = threads;

    std::vector<double> theory;
    bool converged = false;
    double gamma_used = 0.0;
    if (src.ensemble()) {
        const auto s = sisk::solve_regular_scalar(src.regular_q, a.beta, a.K, gamma, cfg);
        sisk::OneNodeRates rates;
        rates.gamma = s.gamma;
        for (double phi : s.phi) rates.lambda.push_back((src.regular_q + 1.0) * phi);
        theory = sisk::survival_function(rates, grid);
        converged = s.converged;
        gamma_used = s.gamma;
    } else {
        const auto s = sisk::solve_pair_k(src.graph, a.beta, a.K, gamma, cfg);
        theory = sisk::population_survival(src.graph, s.messages, s.marginals, grid);
        converged = s.converged;
        gamma_used = s.messages.gamma;
    }
    for (double v : theory)
        if (!std::isfinite(v)) throw sisk::NumericalError("non-finite survival value");

    std::vector<double> empirical;
    json sim = json::object();
    if (a.simulate) {
        sisk::SimConfig sc;
        sc.beta = a.beta;
        sc.K = a.K;
        sc.gamma = gamma_used;
        sc.t_max = a.t_max;
        sc.burn_in = a.burn_in;
        sc.seed = a.seed;
        const auto sample = sisk::inter_infection_times(src.graph, sc, a.sample_cap);
        empirical = sisk::empirical_survival(sample, grid);
        double gap = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) gap = std::max(gap, std::abs(theory[i] - empirical[i]));
        sim = {{"samples", sample.durations.size()},
               {"censored", sample.censored.size()},
               {"discarded", sample.discarded},
               {"max_gap", gap}};
        run.seeds = {{"simulation", a.seed}};
    }

    run.config = {{"beta", a.beta},       {"K", a.K},           {"gamma", a.gamma},
                  {"gamma_used", gamma_used}, {"t_grid", a.t_grid}, {"tol", a.tol},
                  {"simulate", a.simulate}};
    if (a.simulate) {
        run.config["t_max"] = a.t_max;
        run.config["burn_in"] = a.burn_in;
        run.config["sample_cap"] = a.sample_cap;
    }
    run.graph = src.info;
    run.results = {{"converged", converged}};
    if (a.simulate) run.results["simulation"] = sim;

    std::ofstream file;
    if (!a.out_prefix.empty()) file = open_out(a.out_prefix + ".csv");
    std::ostream& out = a.out_prefix.empty() ? std::cout : file;
    out << (a.simulate ? "t,survival,empirical\n" : "t,survival\n");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out << fmt(grid[i]) << ',' << fmt(theory[i]);
        if (a.simulate) out << ',' << fmt(empirical[i]);
        out << '\n';
    }
    out.flush();
    if (!a.out_prefix.empty()) {
        run.outputs.push_back(a.out_prefix + ".csv");
        run.write_manifest(a.out_prefix + ".manifest.json", threads);
    }
    if (!converged) {
        std::cerr << "sisk survival: message iteration did not converge\n";
        return kNotConverged;
    }
    return kOk;
}

// ---------------------------------------------------------------------------

int dispatch(const std::vector<std::string>& args);

int cmd_replay(const std::string& manifest_path, const std::string& out_prefix) {
    std::ifstream in(manifest_path);
    if (!in) throw sisk::InputError("cannot read " + manifest_path);
    json m;
    try {
        in >> m;
    } catch (const json::exception& e) {
        throw sisk::InputError(manifest_path + ": " + e.what());
    }
    if (!m.contains("argv") || !m["argv"].is_array()) throw sisk::InputError(manifest_path + ": no argv");
    auto args = m["argv"].get<std::vector<std::string>>();
    if (args.empty() || args[0] == "replay") throw sisk::InputError(manifest_path + ": not replayable");
    if (!out_prefix.empty()) {
        const char* flag = args[0] == "generate" ? "--out" : "--out-prefix";
        const std::string value = args[0] == "generate" ? out_prefix + ".txt" : out_prefix;
        auto it = std::find(args.begin(), args.end(), flag);
        if (it != args.end() && it + 1 != args.end())
            *(it + 1) = value;
        else {
            args.push_back(flag);
            args.push_back(value);
        }
    }
    return dispatch(args);
}

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"SIS^K pair approximation, thresholds and Gillespie simulation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", SISK_VERSION);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "write a random graph as an edge list");
    generate->add_option("--regular", gen.regular, "random d-regular graph: N D")->expected(2);
    generate->add_option("--gnp", gen.gnp, "Erdos-Renyi graph: N P")->expected(2);
    generate->add_option("--seed", gen.seed, "generator seed");
    generate->add_option("--out", gen.out, "output file (default stdout)");

    SolveArgs sol;
    auto* solve = app.add_subcommand("solve", "steady-state infected fraction of the pair approximation");
    solve->add_option("--graph", sol.graph, "edge-list file");
    solve->add_option("--regular-q", sol.regular_q, "infinite (q+1)-regular ensemble");
    solve->add_option("--beta", sol.beta, "spreading rate");
    solve->add_option("--beta-range", sol.beta_range, "LO:HI:STEPS");
    solve->add_option("--K", sol.K, "number of susceptible sub-states")->check(CLI::PositiveNumber);
    solve->add_option("--gamma", sol.gamma, "sub-state decay rate, or auto");
    solve->add_option("--tol", sol.tol, "message tolerance");
    solve->add_option("--max-iter", sol.max_iter, "iteration cap");
    solve->add_option("--damping", sol.damping, "message damping in [0, 1)");
    solve->add_option("--out-prefix", sol.out_prefix, "write PREFIX.csv and PREFIX.manifest.json");

    ThresholdArgs thr;
    auto* threshold = app.add_subcommand("threshold", "epidemic threshold estimates");
    threshold->add_option("--graph", thr.graph, "edge-list file");
    threshold->add_option("--regular-q", thr.regular_q, "infinite (q+1)-regular ensemble");
    threshold->add_option("--method", thr.method, "mf, pair, k2 or bisect");
    threshold->add_option("--K", thr.K, "sub-states for bisect")->check(CLI::PositiveNumber);
    threshold->add_option("--gamma", thr.gamma, "sub-state decay rate for bisect, or auto");
    threshold->add_option("--resolution", thr.resolution, "bisection bracket width");
    threshold->add_option("--tol", thr.tol, "message tolerance for bisect");
    threshold->add_option("--out-prefix", thr.out_prefix, "write PREFIX.json and PREFIX.manifest.json");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Gillespie simulation with quasi-stationary estimate");
    simulate->add_option("--graph", sim.graph, "edge-list file")->required();
    simulate->add_option("--beta", sim.beta, "spreading rate")->required();
    simulate->add_option("--t-max", sim.t_max, "simulated time");
    simulate->add_option("--burn-in", sim.burn_in, "discarded initial time (default t_max / 2)");
    simulate->add_option("--seed", sim.seed, "base seed");
    simulate->add_option("--replicas", sim.replicas, "independent runs")->check(CLI::PositiveNumber);
    simulate->add_option("--K", sim.K, "number of susceptible sub-states")->check(CLI::PositiveNumber);
    simulate->add_option("--gamma", sim.gamma, "sub-state decay rate, or auto");
    simulate->add_option("--init-fraction", sim.init_fraction, "initially infectious fraction");
    simulate->add_option("--qs-memory", sim.qs_memory, "stored configurations for reactivation");
    simulate->add_option("--sample-interval", sim.sample_interval, "trajectory grid spacing");
    simulate->add_option("--batches", sim.batches, "batches for standard errors");
    simulate->add_option("--out-prefix", sim.out_prefix, "write PREFIX.csv, PREFIX.qs.json, PREFIX.manifest.json");

    SurvivalArgs sur;
    auto* survival = app.add_subcommand("survival", "inter-infection survival function P(Delta_I > t)");
    survival->add_option("--graph", sur.graph, "edge-list file");
    survival->add_option("--regular-q", sur.regular_q, "infinite (q+1)-regular ensemble");
    survival->add_option("--beta", sur.beta, "spreading rate")->required();
    survival->add_option("--K", sur.K, "number of susceptible sub-states")->check(CLI::PositiveNumber);
    survival->add_option("--gamma", sur.gamma, "sub-state decay rate, or auto");
    survival->add_option("--t-grid", sur.t_grid, "LO:HI:N:lin|log");
    survival->add_option("--tol", sur.tol, "message tolerance");
    survival->add_flag("--simulate", sur.simulate, "add the empirical curve from a simulation");
    survival->add_option("--t-max", sur.t_max, "simulated time");
    survival->add_option("--burn-in", sur.burn_in, "discarded initial time");
    survival->add_option("--seed", sur.seed, "simulation seed");
    survival->add_option("--sample-cap", sur.sample_cap, "maximum recorded recoveries");
    survival->add_option("--out-prefix", sur.out_prefix, "write PREFIX.csv and PREFIX.manifest.json");

    std::string manifest, replay_prefix;
    auto* replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    replay->add_option("manifest", manifest, "manifest JSON")->required();
    replay->add_option("--out-prefix", replay_prefix, "redirect outputs to a new prefix");

    std::vector<const char*> argv{"sisk"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kInputError;
    }

    Run run;
    run.argv = args;
    const unsigned threads = env_threads();
    if (generate->parsed()) return run.subcommand = "generate", cmd_generate(gen, run);
    if (solve->parsed()) return run.subcommand = "solve", cmd_solve(sol, run, threads);
    if (threshold->parsed()) return run.subcommand = "threshold", cmd_threshold(thr, run, threads);
    if (simulate->parsed()) return run.subcommand = "simulate", cmd_simulate(sim, run, threads);
    if (survival->parsed()) return run.subcommand = "survival", cmd_survival(sur, run, threads);
    return cmd_replay(manifest, replay_prefix);
}

} // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(std::vector<std::string>(argv + 1, argv + argc));
    } catch (const sisk::InputError& e) {
        std::cerr << "sisk: " << e.what() << '\n';
        return kInputError;
    } catch (const sisk::NumericalError& e) {
        std::cerr << "sisk: numerical failure: " << e.what() << '\n';
        return kNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "sisk: " << e.what() << '\n';
        return kNumericalError;
    }
}
