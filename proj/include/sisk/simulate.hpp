#pragma once

#include "sisk/graph.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sisk {

/// Configuration of one continuous-time SIS / SIS^K run. Recovery rate is 1.
struct SimConfig {
    double beta = 0.0;
    double t_max = 1e4;
    double burn_in = -1.0;           // negative: t_max / 2
    std::uint64_t seed = 1;
    double init_fraction = 1.0;      // fraction of nodes infectious at t = 0
    std::vector<std::uint8_t> initial_state; // explicit start (one state per node); overrides init_fraction
    bool quasi_stationary = true;    // reactivate from stored configurations on extinction
    std::size_t qs_memory = 100;
    double qs_refresh_prob = 1e-3;   // per event
    int K = 1;
    double gamma = 0.0;
    // Optional spontaneous infection rate for a node in S^(x+1), applied to
    // every node (K entries, or empty for none). Makes tiny graphs ergodic.
    std::vector<double> external_rates;
    double sample_interval = 0.0;    // output grid spacing; <= 0 gives t_max / 1000
    std::size_t batches = 10;        // batch means for standard errors
    std::optional<Edge> tracked_pair; // record joint-state occupancy of this node pair
    std::uint64_t max_events = 0;    // stop after this many events (0: run to t_max)

    double resolved_burn_in() const { return burn_in < 0.0 ? 0.5 * t_max : burn_in; }
    void validate() const;
};

/// Sampled path plus time-averaged statistics over [burn_in, t_end].
struct Trajectory {
    std::size_t n = 0;
    int K = 1;
    std::vector<double> t;                 // uniform output grid
    std::vector<std::uint32_t> infected;   // infectious count at each grid time
    std::uint64_t infection_events = 0;    // transmissions along edges
    std::uint64_t external_events = 0;
    std::uint64_t recovery_events = 0;
    std::uint64_t decay_events = 0;
    std::size_t absorptions = 0;           // hits of the all-susceptible state
    double t_end = 0.0;
    std::vector<std::uint8_t> final_state;

    double window_start = 0.0;
    std::vector<double> batch_means;       // time-averaged infected fraction per batch
    double mean_infected = 0.0;            // time-averaged infected fraction
    double mean_infected_sq = 0.0;         // time average of the squared fraction
    double stderr_infected = 0.0;          // batch-means standard error
    double doomed_fraction = 0.0;          // window time in excursions that went extinct
    std::vector<double> substate_occupancy; // K+1 time-averaged fractions, I last
    std::vector<double> pair_occupancy;     // (K+1)^2 when a pair is tracked
    std::vector<double> pair_occupancy_stderr;

    double lumped_susceptible() const { return 1.0 - mean_infected; }
};

/// Plain SIS (K = 1, gamma ignored).
Trajectory gillespie_run(const Graph& g, SimConfig cfg);

/// SIS^K: recovery enters S^(K), S^(x+1) decays to S^(x) at rate gamma, every
/// susceptible sub-state is infected at beta per infectious neighbour. With
/// K = 1 the event stream is identical to gillespie_run for the same seed.
Trajectory gillespie_sisk_run(const Graph& g, const SimConfig& cfg);

struct QsEstimate {
    double mean = 0.0;
    double stderr = 0.0;
    bool subcritical = false;  // more than half the window spent in doomed excursions
    double doomed_fraction = 0.0;
    double susceptibility = 0.0; // n (<rho^2> - <rho>^2) / <rho>
    std::size_t absorptions = 0;
    std::size_t replicas = 1;
};

/// Time-averaged infected fraction over [burn_in, t_max] with stored-configuration
/// reactivation on extinction. beta = 0 without external infection returns 0.
QsEstimate quasistationary_fraction(const Graph& g, const SimConfig& cfg);

QsEstimate qs_estimate(const Trajectory& traj);

struct ReplicaRun {
    Trajectory trajectory;
    QsEstimate qs;
};

/// Seed of replica r derived from a base seed.
std::uint64_t replica_seed(std::uint64_t seed, std::size_t replica);

/// Runs replicas 0..replicas-1 (seeds replica_seed(cfg.seed, r)) in QS mode.
/// Output order is the replica order for any thread count.
std::vector<ReplicaRun> run_replicas(const Graph& g, const SimConfig& cfg, std::size_t replicas,
                                     unsigned threads = 1);

/// Mean of means; standard error sqrt(sum se_r^2) / R.
QsEstimate combine_replicas(std::span<const QsEstimate> estimates);

/// Independent replicas (streams 0..replicas-1 of cfg.seed) combined: mean of
/// means, standard error sqrt(sum se_r^2) / R.
QsEstimate quasistationary_replicas(const Graph& g, const SimConfig& cfg, std::size_t replicas,
                                    unsigned threads = 1);

struct InterInfectionSample {
    std::vector<double> durations;  // complete recovery-to-reinfection times
    std::vector<double> censored;   // observed lower bounds for unfinished intervals
    std::size_t discarded = 0;      // intervals broken by a reactivation jump
};

/// Records, for recoveries after burn_in (at most sample_cap of them), the time
/// until the same node is infected again. Throws InputError on zero samples.
InterInfectionSample inter_infection_times(const Graph& g, const SimConfig& cfg,
                                           std::size_t sample_cap);

/// P(Delta_I > t) from complete samples; censored samples are excluded.
std::vector<double> empirical_survival(const InterInfectionSample& sample,
                                       std::span<const double> t_grid);

struct ThresholdScanPoint {
    double beta = 0.0;
    QsEstimate qs;
};

struct SimulatedThreshold {
    std::vector<ThresholdScanPoint> points;
    std::optional<double> beta_c;   // start of the endemic tail of the scan
    double rho_star = 0.0;
};

/// Scans increasing beta values. beta_c is the smallest scanned beta such that
/// it and every larger one have a QS fraction above rho_star (n^{-1/2} when
/// rho_star <= 0) and are not flagged subcritical.
SimulatedThreshold simulated_threshold_scan(const Graph& g, const SimConfig& base,
                                            std::span<const double> betas, double rho_star = 0.0,
                                            std::size_t replicas = 1, unsigned threads = 1);

} // namespace sisk
