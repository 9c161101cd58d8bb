#include "sisk/simulate.hpp"

#include "sisk/error.hpp"
#include "sisk/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace sisk {

namespace {

constexpr std::size_t kAbsent = std::numeric_limits<std::size_t>::max();

// Set of small integers with O(1) insert, erase and uniform sampling.
class IndexedSet {
public:
    explicit IndexedSet(std::size_t universe = 0) : pos_(universe, kAbsent) {}

    void insert(std::size_t x) {
        if (pos_[x] != kAbsent) return;
        pos_[x] = items_.size();
        items_.push_back(x);
    }
    void erase(std::size_t x) {
        const std::size_t p = pos_[x];
        if (p == kAbsent) return;
        const std::size_t last = items_.back();
        items_[p] = last;
        pos_[last] = p;
        items_.pop_back();
        pos_[x] = kAbsent;
    }
    void clear() {
        for (std::size_t x : items_) pos_[x] = kAbsent;
        items_.clear();
    }
    std::size_t size() const noexcept { return items_.size(); }
    std::size_t operator[](std::size_t i) const { return items_[i]; }

private:
    std::vector<std::size_t> items_;
    std::vector<std::size_t> pos_;
};

struct IntervalOptions {
    bool collect = false;
    std::size_t cap = 0;
};

// Event-driven simulator of SIS^K. Node state s < K is S^(s+1), s == K is I.
class Engine {
public:
    Engine(const Graph& g, const SimConfig& cfg, IntervalOptions intervals = {})
        : g_(g), cfg_(cfg), K_(cfg.K), infectious_(static_cast<std::uint8_t>(cfg.K)),
          rng_(make_rng(cfg.seed)), state_(g.num_nodes()), infected_(g.num_nodes()),
          si_edges_(g.num_directed_edges()), intervals_(intervals) {
        for (int s = 0; s < K_; ++s) substate_.emplace_back(g.num_nodes());
        ext_ = cfg.external_rates;
        ext_.resize(K_, 0.0);
        has_external_ = std::any_of(ext_.begin(), ext_.end(), [](double r) { return r > 0.0; });
        reverse_.resize(g.num_directed_edges());
        {
            const DirectedEdgeIndex idx(g);
            for (std::size_t e = 0; e < idx.size(); ++e) reverse_[e] = idx.reverse(e);
        }
        burn_in_ = cfg.resolved_burn_in();
        batch_len_ = (cfg.t_max - burn_in_) / static_cast<double>(cfg.batches);
        sample_dt_ = cfg.sample_interval > 0.0 ? cfg.sample_interval : cfg.t_max / 1000.0;
        if (intervals_.collect) pending_.assign(g.num_nodes(), -1.0);
    }

    Trajectory run() {
        const std::size_t n = g_.num_nodes();
        traj_.n = n;
        traj_.K = K_;
        traj_.window_start = burn_in_;
        batch_integral_.assign(cfg_.batches, 0.0);
        sq_integral_ = 0.0;
        occupancy_.assign(K_ + 1, 0.0);
        const std::size_t joint = static_cast<std::size_t>((K_ + 1) * (K_ + 1));
        if (cfg_.tracked_pair) pair_integral_.assign(cfg_.batches * joint, 0.0);

        // Initial configuration: given explicitly, or a uniformly chosen subset
        // is infectious and the rest in S^(1).
        std::vector<std::uint8_t> init = cfg_.initial_state;
        if (init.empty()) {
            init.assign(n, 0);
            const auto infected0 =
                static_cast<std::size_t>(std::llround(cfg_.init_fraction * static_cast<double>(n)));
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            for (std::size_t i = 0; i < infected0; ++i) {
                std::swap(order[i], order[i + uniform_index(rng_, n - i)]);
                init[order[i]] = infectious_;
            }
        }
        load_configuration(init);
        if (cfg_.quasi_stationary) {
            reservoir_.assign(cfg_.qs_memory, init);
            next_refresh_ = draw_refresh_gap();
        }

        double t = 0.0;
        next_sample_ = 0.0;
        excursion_start_ = 0.0;
        if (cfg_.quasi_stationary && absorbed()) {
            // Nothing to reactivate from: the process stays extinct.
            cfg_.quasi_stationary = false;
        }

        while (true) {
            const double rec = static_cast<double>(infected_.size());
            const double inf = cfg_.beta * static_cast<double>(si_edges_.size());
            std::size_t decayable = 0;
            for (int s = 1; s < K_; ++s) decayable += substate_[s].size();
            const double dec = cfg_.gamma * static_cast<double>(decayable);
            double ext = 0.0;
            if (has_external_)
                for (int s = 0; s < K_; ++s) ext += ext_[s] * static_cast<double>(substate_[s].size());
            const double total = rec + inf + dec + ext;

            if (total <= 0.0) {
                accumulate(t, cfg_.t_max);
                t = cfg_.t_max;
                break;
            }
            const double t_next = t + exponential(rng_, total);
            if (t_next >= cfg_.t_max) {
                accumulate(t, cfg_.t_max);
                t = cfg_.t_max;
                break;
            }
            accumulate(t, t_next);
            t = t_next;

            const double weights[4] = {rec, inf, dec, ext};
            double u = uniform01(rng_) * total;
            int category = 3;
            while (weights[category] <= 0.0) --category; // last category in use
            for (int c = 0; c < 4; ++c) {
                if (weights[c] > 0.0 && u < weights[c]) {
                    category = c;
                    break;
                }
                u -= weights[c];
            }
            u = std::clamp(u, 0.0, weights[category]);

            if (category == 0) {
                recover(static_cast<NodeId>(infected_[uniform_index(rng_, infected_.size())]), t);
            } else if (category == 1) {
                const std::size_t e = si_edges_[uniform_index(rng_, si_edges_.size())];
                infect(g_.target(e), t);
                ++traj_.infection_events;
            } else if (category == 2) {
                std::size_t j = uniform_index(rng_, decayable);
                int s = 1;
                while (j >= substate_[s].size()) j -= substate_[s++].size();
                decay(static_cast<NodeId>(substate_[s][j]), s);
            } else {
                int s = -1;
                for (int x = 0; x < K_; ++x) {
                    const double w = ext_[x] * static_cast<double>(substate_[x].size());
                    if (w <= 0.0) continue;
                    s = x;
                    if (u < w) break;
                    u -= w;
                }
                infect(static_cast<NodeId>(substate_[s][uniform_index(rng_, substate_[s].size())]), t);
                ++traj_.external_events;
            }

            if (category == 0 && absorbed()) {
                ++traj_.absorptions;
                add_doomed(excursion_start_, t);
                if (cfg_.quasi_stationary) {
                    relocate();
                    excursion_start_ = t;
                }
            } else if (cfg_.quasi_stationary && --next_refresh_ == 0) {
                reservoir_[uniform_index(rng_, reservoir_.size())] = state_;
                next_refresh_ = draw_refresh_gap();
            }
            if (intervals_.collect && started_ >= intervals_.cap && pending_count_ == 0) break;
            if (cfg_.max_events > 0 && ++events_ >= cfg_.max_events) break;
        }
        finish(t);
        return std::move(traj_);
    }

    InterInfectionSample take_intervals() { return std::move(sample_); }

private:
    bool absorbed() const { return infected_.size() == 0 && !has_external_; }

    std::uint64_t draw_refresh_gap() {
        const double p = cfg_.qs_refresh_prob;
        if (p >= 1.0) return 1;
        const double u = uniform01(rng_);
        return 1 + static_cast<std::uint64_t>(std::floor(std::log1p(-u) / std::log1p(-p)));
    }

    void load_configuration(const std::vector<std::uint8_t>& config) {
        infected_.clear();
        si_edges_.clear();
        for (auto& set : substate_) set.clear();
        state_ = config;
        for (NodeId v = 0; v < state_.size(); ++v) {
            if (state_[v] == infectious_)
                infected_.insert(v);
            else
                substate_[state_[v]].insert(v);
        }
        for (std::size_t i = 0; i < infected_.size(); ++i) {
            const auto v = static_cast<NodeId>(infected_[i]);
            for (std::size_t e = g_.offset(v); e < g_.offset(v) + g_.degree(v); ++e)
                if (state_[g_.target(e)] != infectious_) si_edges_.insert(e);
        }
    }

    void relocate() {
        load_configuration(reservoir_[uniform_index(rng_, reservoir_.size())]);
        if (intervals_.collect) {
            for (double& p : pending_) {
                if (p >= 0.0) {
                    p = -1.0;
                    ++sample_.discarded;
                }
            }
            pending_count_ = 0;
        }
    }

    void infect(NodeId v, double t) {
        substate_[state_[v]].erase(v);
        state_[v] = infectious_;
        infected_.insert(v);
        for (std::size_t e = g_.offset(v); e < g_.offset(v) + g_.degree(v); ++e) {
            if (state_[g_.target(e)] == infectious_)
                si_edges_.erase(reverse_[e]);
            else
                si_edges_.insert(e);
        }
        if (intervals_.collect && pending_[v] >= 0.0) {
            sample_.durations.push_back(t - pending_[v]);
            pending_[v] = -1.0;
            --pending_count_;
        }
    }

    void recover(NodeId v, double t) {
        const auto fresh = static_cast<std::uint8_t>(K_ - 1);
        infected_.erase(v);
        state_[v] = fresh;
        substate_[fresh].insert(v);
        for (std::size_t e = g_.offset(v); e < g_.offset(v) + g_.degree(v); ++e) {
            if (state_[g_.target(e)] == infectious_)
                si_edges_.insert(reverse_[e]);
            else
                si_edges_.erase(e);
        }
        ++traj_.recovery_events;
        if (intervals_.collect && t >= burn_in_ && started_ < intervals_.cap) {
            pending_[v] = t;
            ++started_;
            ++pending_count_;
        }
    }

    void decay(NodeId v, int s) {
        substate_[s].erase(v);
        substate_[s - 1].insert(v);
        state_[v] = static_cast<std::uint8_t>(s - 1);
        ++traj_.decay_events;
    }

    // State is constant on [t0, t1).
    void accumulate(double t0, double t1) {
        const auto infected = static_cast<std::uint32_t>(infected_.size());
        while (next_sample_ < t1 && next_sample_ <= cfg_.t_max) {
            traj_.t.push_back(next_sample_);
            traj_.infected.push_back(infected);
            next_sample_ = static_cast<double>(traj_.t.size()) * sample_dt_;
        }
        double a = std::max(t0, burn_in_);
        const double b = std::min(t1, cfg_.t_max);
        if (a >= b) return;
        const double n = static_cast<double>(g_.num_nodes());
        const double frac = static_cast<double>(infected) / n;
        {
            const double dt = b - a;
            sq_integral_ += frac * frac * dt;
            occupancy_[K_] += frac * dt;
            for (int s = 0; s < K_; ++s) occupancy_[s] += static_cast<double>(substate_[s].size()) / n * dt;
        }
        std::size_t joint = 0;
        if (cfg_.tracked_pair)
            joint = static_cast<std::size_t>(state_[cfg_.tracked_pair->first]) * (K_ + 1) +
                    state_[cfg_.tracked_pair->second];
        const std::size_t width = static_cast<std::size_t>((K_ + 1) * (K_ + 1));
        while (a < b) {
            auto batch = static_cast<std::size_t>((a - burn_in_) / batch_len_);
            batch = std::min(batch, cfg_.batches - 1);
            const double batch_end = batch + 1 == cfg_.batches ? b : std::min(b, burn_in_ + (batch + 1) * batch_len_);
            const double dt = std::max(0.0, batch_end - a);
            batch_integral_[batch] += frac * dt;
            if (cfg_.tracked_pair) pair_integral_[batch * width + joint] += dt;
            if (batch_end <= a) break;
            a = batch_end;
        }
    }

    void add_doomed(double start, double end) {
        const double a = std::max(start, burn_in_);
        const double b = std::min(end, cfg_.t_max);
        if (b > a) doomed_ += b - a;
    }

    void finish(double t_end) {
        traj_.t_end = t_end;
        traj_.final_state = state_;
        const double window = std::max(0.0, std::min(t_end, cfg_.t_max) - burn_in_);
        const auto B = cfg_.batches;
        traj_.batch_means.resize(B);
        for (std::size_t b = 0; b < B; ++b) traj_.batch_means[b] = batch_integral_[b] / batch_len_;
        if (window > 0.0) {
            traj_.mean_infected = std::accumulate(batch_integral_.begin(), batch_integral_.end(), 0.0) / window;
            traj_.mean_infected_sq = sq_integral_ / window;
            traj_.doomed_fraction = doomed_ / window;
            traj_.substate_occupancy.resize(K_ + 1);
            for (int s = 0; s <= K_; ++s) traj_.substate_occupancy[s] = occupancy_[s] / window;
        }
        traj_.stderr_infected = batch_stderr(traj_.batch_means);
        if (cfg_.tracked_pair) {
            const std::size_t width = static_cast<std::size_t>((K_ + 1) * (K_ + 1));
            traj_.pair_occupancy.assign(width, 0.0);
            traj_.pair_occupancy_stderr.assign(width, 0.0);
            std::vector<double> per_batch(B);
            for (std::size_t j = 0; j < width; ++j) {
                double total = 0.0;
                for (std::size_t b = 0; b < B; ++b) {
                    per_batch[b] = pair_integral_[b * width + j] / batch_len_;
                    total += pair_integral_[b * width + j];
                }
                traj_.pair_occupancy[j] = window > 0.0 ? total / window : 0.0;
                traj_.pair_occupancy_stderr[j] = batch_stderr(per_batch);
            }
        }
        if (intervals_.collect) {
            for (double p : pending_)
                if (p >= 0.0) sample_.censored.push_back(t_end - p);
        }
    }

    static double batch_stderr(const std::vector<double>& means) {
        const std::size_t B = means.size();
        if (B < 2) return 0.0;
        const double mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(B);
        double ss = 0.0;
        for (double m : means) ss += (m - mean) * (m - mean);
        return std::sqrt(ss / static_cast<double>(B - 1) / static_cast<double>(B));
    }

    const Graph& g_;
    SimConfig cfg_;
    int K_;
    std::uint8_t infectious_;
    Rng rng_;
    std::vector<std::uint8_t> state_;
    IndexedSet infected_;
    IndexedSet si_edges_; // directed edges (infectious source -> susceptible target)
    std::vector<IndexedSet> substate_;
    std::vector<std::size_t> reverse_;
    std::vector<double> ext_;
    bool has_external_ = false;

    double burn_in_ = 0.0;
    double batch_len_ = 1.0;
    double sample_dt_ = 1.0;
    double next_sample_ = 0.0;
    std::vector<double> batch_integral_;
    double sq_integral_ = 0.0;
    std::vector<double> occupancy_;
    std::vector<double> pair_integral_;
    double doomed_ = 0.0;
    double excursion_start_ = 0.0;

    std::vector<std::vector<std::uint8_t>> reservoir_;
    std::uint64_t next_refresh_ = 0;

    IntervalOptions intervals_;
    std::vector<double> pending_;
    std::size_t started_ = 0;
    std::size_t pending_count_ = 0;
    std::uint64_t events_ = 0;
    InterInfectionSample sample_;

    Trajectory traj_;
};

} // namespace

void SimConfig::validate() const {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw InputError("beta must be a nonnegative rate");
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InputError("t_max must be positive");
    const double b = resolved_burn_in();
    if (!(b >= 0.0 && b < t_max)) throw InputError("burn-in must lie in [0, t_max)");
    if (!(init_fraction >= 0.0 && init_fraction <= 1.0)) throw InputError("initial fraction must lie in [0, 1]");
    if (qs_memory < 1) throw InputError("qs_memory must be at least 1");
    if (!(qs_refresh_prob > 0.0 && qs_refresh_prob <= 1.0)) throw InputError("qs refresh probability must lie in (0, 1]");
    if (K < 1 || K > 254) throw InputError("K must lie in [1, 254]");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InputError("gamma must be a nonnegative rate");
    if (!external_rates.empty() && external_rates.size() != static_cast<std::size_t>(K))
        throw InputError("external rates need K entries");
    for (double r : external_rates)
        if (!(r >= 0.0) || !std::isfinite(r)) throw InputError("external rates must be nonnegative");
    if (batches < 1) throw InputError("need at least one batch");
    for (std::uint8_t st : initial_state)
        if (st > K) throw InputError("initial state entries must lie in [0, K]");
}

namespace {

void check_against_graph(const Graph& g, const SimConfig& cfg) {
    if (g.num_nodes() == 0) throw InputError("cannot simulate on an empty graph");
    if (!cfg.initial_state.empty() && cfg.initial_state.size() != g.num_nodes())
        throw InputError("initial state needs one entry per node");
    if (cfg.tracked_pair && (cfg.tracked_pair->first >= g.num_nodes() || cfg.tracked_pair->second >= g.num_nodes()))
        throw InputError("tracked pair is out of range");
}

} // namespace

Trajectory gillespie_sisk_run(const Graph& g, const SimConfig& cfg) {
    cfg.validate();
    check_against_graph(g, cfg);
    Engine engine(g, cfg);
    return engine.run();
}

Trajectory gillespie_run(const Graph& g, SimConfig cfg) {
    cfg.K = 1;
    cfg.gamma = 0.0;
    if (cfg.external_rates.size() > 1) cfg.external_rates.resize(1);
    return gillespie_sisk_run(g, cfg);
}

QsEstimate qs_estimate(const Trajectory& traj) {
    QsEstimate q;
    q.mean = traj.mean_infected;
    q.stderr = traj.stderr_infected;
    q.doomed_fraction = traj.doomed_fraction;
    q.subcritical = traj.doomed_fraction > 0.5;
    q.absorptions = traj.absorptions;
    if (traj.mean_infected > 0.0)
        q.susceptibility = static_cast<double>(traj.n) *
                           (traj.mean_infected_sq - traj.mean_infected * traj.mean_infected) /
                           traj.mean_infected;
    return q;
}

QsEstimate quasistationary_fraction(const Graph& g, const SimConfig& cfg) {
    cfg.validate();
    const bool external = std::any_of(cfg.external_rates.begin(), cfg.external_rates.end(),
                                      [](double r) { return r > 0.0; });
    if (cfg.beta == 0.0 && !external) {
        QsEstimate q;
        q.subcritical = true;
        q.doomed_fraction = 1.0;
        return q;
    }
    SimConfig qs = cfg;
    qs.quasi_stationary = true;
    return qs_estimate(gillespie_sisk_run(g, qs));
}

std::uint64_t replica_seed(std::uint64_t seed, std::size_t replica) {
    return splitmix64(seed + 0x9e3779b97f4a7c15ULL * (replica + 1));
}

std::vector<ReplicaRun> run_replicas(const Graph& g, const SimConfig& cfg, std::size_t replicas,
                                     unsigned threads) {
    if (replicas == 0) throw InputError("need at least one replica");
    cfg.validate();
    check_against_graph(g, cfg);
    const bool dead = cfg.beta == 0.0 && std::none_of(cfg.external_rates.begin(), cfg.external_rates.end(),
                                                      [](double r) { return r > 0.0; });
    std::vector<ReplicaRun> out(replicas);
    std::vector<std::exception_ptr> errors(replicas);
    auto work = [&](std::size_t r) {
        try {
            SimConfig c = cfg;
            c.seed = replica_seed(cfg.seed, r);
            c.quasi_stationary = true;
            out[r].trajectory = gillespie_sisk_run(g, c);
            out[r].qs = dead ? quasistationary_fraction(g, c) : qs_estimate(out[r].trajectory);
        } catch (...) {
            errors[r] = std::current_exception();
        }
    };
    threads = std::max(1u, threads);
    for (std::size_t start = 0; start < replicas; start += threads) {
        std::vector<std::thread> pool;
        for (std::size_t r = start; r < std::min(replicas, start + threads); ++r) {
            if (threads == 1)
                work(r);
            else
                pool.emplace_back(work, r);
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

QsEstimate combine_replicas(std::span<const QsEstimate> estimates) {
    if (estimates.empty()) throw InputError("need at least one replica");
    QsEstimate combined;
    combined.replicas = estimates.size();
    double var = 0.0;
    for (const auto& q : estimates) {
        combined.mean += q.mean;
        var += q.stderr * q.stderr;
        combined.doomed_fraction += q.doomed_fraction;
        combined.susceptibility += q.susceptibility;
        combined.absorptions += q.absorptions;
    }
    const double R = static_cast<double>(estimates.size());
    combined.mean /= R;
    combined.stderr = std::sqrt(var) / R;
    combined.doomed_fraction /= R;
    combined.susceptibility /= R;
    combined.subcritical = combined.doomed_fraction > 0.5;
    return combined;
}

QsEstimate quasistationary_replicas(const Graph& g, const SimConfig& cfg, std::size_t replicas,
                                    unsigned threads) {
    const auto runs = run_replicas(g, cfg, replicas, threads);
    std::vector<QsEstimate> qs;
    for (const auto& r : runs) qs.push_back(r.qs);
    return combine_replicas(qs);
}

InterInfectionSample inter_infection_times(const Graph& g, const SimConfig& cfg,
                                           std::size_t sample_cap) {
    cfg.validate();
    if (sample_cap == 0) throw InputError("sample cap must be positive");
    check_against_graph(g, cfg);
    Engine engine(g, cfg, IntervalOptions{true, sample_cap});
    engine.run();
    InterInfectionSample s = engine.take_intervals();
    if (s.durations.empty() && s.censored.empty())
        throw InputError("no inter-infection intervals were observed");
    return s;
}

std::vector<double> empirical_survival(const InterInfectionSample& sample,
                                       std::span<const double> t_grid) {
    std::vector<double> sorted = sample.durations;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out(t_grid.size(), 1.0);
    if (sorted.empty()) return out;
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t_grid[i]);
        out[i] = static_cast<double>(above) / n;
    }
    return out;
}

SimulatedThreshold simulated_threshold_scan(const Graph& g, const SimConfig& base,
                                            std::span<const double> betas, double rho_star,
                                            std::size_t replicas, unsigned threads) {
    if (betas.empty()) throw InputError("threshold scan needs at least one beta");
    for (std::size_t i = 1; i < betas.size(); ++i)
        if (!(betas[i] > betas[i - 1])) throw InputError("threshold scan betas must increase");
    SimulatedThreshold out;
    out.rho_star = rho_star > 0.0 ? rho_star : 1.0 / std::sqrt(static_cast<double>(g.num_nodes()));
    for (double beta : betas) {
        SimConfig c = base;
        c.beta = beta;
        out.points.push_back({beta, quasistationary_replicas(g, c, replicas, threads)});
    }
    // Smallest beta from which every scanned point is endemic: above rho_star
    // and not dominated by doomed excursions.
    for (auto it = out.points.rbegin(); it != out.points.rend(); ++it) {
        if (!(it->qs.mean > out.rho_star) || it->qs.subcritical) break;
        out.beta_c = it->beta;
    }
    return out;
}

} // namespace sisk
