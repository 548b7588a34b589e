#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <numeric>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include "forklat/distribution.hpp"
#include "forklat/errors.hpp"
#include "forklat/rng.hpp"

namespace forklat {

enum class DispatchPolicy { GroupRandom, UniformRandom, RoundRobin };

inline const char* to_string(DispatchPolicy p) {
    switch (p) {
        case DispatchPolicy::GroupRandom: return "group-random";
        case DispatchPolicy::UniformRandom: return "uniform-random";
        case DispatchPolicy::RoundRobin: return "round-robin";
    }
    return "?";
}

inline DispatchPolicy parse_policy(const std::string& s) {
    if (s == "group-random") return DispatchPolicy::GroupRandom;
    if (s == "uniform-random") return DispatchPolicy::UniformRandom;
    if (s == "round-robin") return DispatchPolicy::RoundRobin;
    throw ParseError("unknown dispatch policy: " + s);
}

// One (n, r_f, r, k) scenario plus run controls; fully determines a run.
//   - fork width r_f: servers that receive a task at arrival
//   - retain width r: tasks kept past the r-th service start
//   - quorum k: finishes needed to complete the job
struct SystemConfig {
    int n = 1;
    int r_f = 1;
    int r = 1;
    int k = 1;
    double lambda = 0.0;
    DispatchPolicy policy = DispatchPolicy::UniformRandom;
    ServiceDistribution dist = exponential(1.0);
    std::string dist_spec = "exp(1)";
    long num_jobs = 10000;
    long warmup_jobs = -1;  // -1: 10% of num_jobs
    std::uint64_t seed = 12345;

    long effective_warmup() const {
        return warmup_jobs >= 0 ? warmup_jobs : num_jobs / 10;
    }

    void validate() const {
        if (n < 1) throw ConfigInvalid("config: need n >= 1");
        if (!(k >= 1 && k <= r && r <= r_f && r_f <= n))
            throw ConfigInvalid("config: need 1 <= k <= r <= r_f <= n");
        if (!(lambda >= 0)) throw ConfigInvalid("config: need lambda >= 0");
        if (num_jobs < 1) throw ConfigInvalid("config: need num_jobs >= 1");
        if (effective_warmup() >= num_jobs)
            throw ConfigInvalid("config: warmup_jobs must be < num_jobs");
        if (policy == DispatchPolicy::GroupRandom && (r_f != r || n % r != 0))
            throw ConfigInvalid("config: group-random policy needs r_f = r and r | n");
    }
};

struct TaskSpan {
    int server;
    double start;
    double end;
    bool completed;
};

struct JobRecord {
    long job_id;
    double arrival_time;
    double finish_time;
    double latency;  // finish - arrival
    double cost;     // total in-service time across all servers
    int num_forked;
    int num_started;
    int num_finished;
    std::vector<TaskSpan> spans;  // started tasks only
};

struct RunSummary {
    double mean_latency = 0;
    double latency_ci = 0;  // 95% half-width across replications
    double mean_cost = 0;
    double cost_ci = 0;
    long jobs_measured = 0;
    int replications = 0;
    std::vector<double> server_utilization;   // averaged across replications
    std::vector<double> tasks_forked_share;   // per-server share of forked tasks
    bool divergence_suspected = false;
    std::vector<JobRecord> records;  // first replication only, when retained
};

namespace detail {

// Two-sided 95% Student-t quantiles for df = 1..30; 2.0 beyond.
inline double t_quantile_975(int df) {
    static constexpr double table[30] = {
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
        2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
        2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
    if (df < 1) return 12.706;
    if (df <= 30) return table[df - 1];
    return 2.0;
}

struct RepResult {
    double mean_latency = 0;
    double mean_cost = 0;
    double first_decile_latency = 0;
    double last_decile_latency = 0;
    std::vector<double> utilization;
    std::vector<long> forked;
    long jobs_measured = 0;
    std::vector<JobRecord> records;
};

enum class TaskState : std::uint8_t {
    Queued,
    InService,
    Finished,
    CanceledQueued,
    CanceledInService
};

struct SimJob;

struct SimTask {
    SimJob* job = nullptr;
    int server = -1;
    double start = -1;
    double end = -1;
    TaskState state = TaskState::Queued;
};

struct SimJob {
    long id = 0;
    double arrival = 0;
    double cost = 0;
    int started = 0;   // cumulative service starts (finished tasks included)
    int finished = 0;
    bool departed = false;
    std::vector<SimTask> tasks;
};

struct SimServer {
    std::deque<SimTask*> queue;
    SimTask* in_service = nullptr;
    std::uint64_t epoch = 0;  // bumped on every service start/abort
    double busy = 0;
    long forked = 0;
};

// Event-loop core for one replication. Cancellations and service starts are
// handled inline at the triggering instant; at equal timestamps finishes are
// processed before arrivals, then ties break on job id and server index, so
// runs are bit-reproducible.
class FJSimulator {
  public:
    FJSimulator(const SystemConfig& cfg, std::uint64_t replication, bool retain_records)
        : cfg_(cfg),
          retain_(retain_records),
          servers_(static_cast<std::size_t>(cfg.n)),
          arrival_rng_(substream(cfg.seed, replication, 0)),
          policy_rng_(substream(cfg.seed, replication, 1)),
          service_rng_(substream(cfg.seed, replication, 2)),
          retention_rng_(substream(cfg.seed, replication, 3)),
          perm_(static_cast<std::size_t>(cfg.n)) {
        std::iota(perm_.begin(), perm_.end(), 0);
    }

    RepResult run() {
        jobs_.reserve(static_cast<std::size_t>(cfg_.num_jobs));
        schedule_arrival(cfg_.lambda > 0 ? exp_draw(arrival_rng_, cfg_.lambda) : 0.0);
        while (!events_.empty()) {
            Event ev = events_.top();
            events_.pop();
            now_ = ev.time;
            if (ev.type == Event::Finish)
                handle_finish(ev);
            else
                handle_arrival();
        }
        return finalize();
    }

  private:
    struct Event {
        enum Type : std::uint8_t { Finish = 0, Arrival = 1 };
        double time;
        Type type;
        long job_id;
        int server;
        std::uint64_t epoch;
        bool operator>(const Event& o) const {
            if (time != o.time) return time > o.time;
            if (type != o.type) return type > o.type;
            if (job_id != o.job_id) return job_id > o.job_id;
            return server > o.server;
        }
    };

    const SystemConfig& cfg_;
    bool retain_;
    std::vector<SimServer> servers_;
    std::mt19937_64 arrival_rng_, policy_rng_, service_rng_, retention_rng_;
    std::vector<int> perm_;
    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events_;
    std::vector<std::unique_ptr<SimJob>> jobs_;
    long next_arrival_id_ = 0;
    double now_ = 0;
    double end_time_ = 0;
    std::vector<double> latencies_;  // measured jobs, arrival order
    double cost_sum_ = 0;
    std::vector<JobRecord> records_;

    void schedule_arrival(double t) {
        if (next_arrival_id_ >= cfg_.num_jobs) return;
        events_.push({t, Event::Arrival, next_arrival_id_, -1, 0});
    }

    std::vector<int> pick_servers(long job_id) {
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(cfg_.r_f));
        switch (cfg_.policy) {
            case DispatchPolicy::GroupRandom: {
                int groups = cfg_.n / cfg_.r;
                std::uniform_int_distribution<int> pick(0, groups - 1);
                int g = pick(policy_rng_);
                for (int i = 0; i < cfg_.r; ++i) out.push_back(g * cfg_.r + i);
                break;
            }
            case DispatchPolicy::UniformRandom: {
                // Fisher-Yates prefix over the scratch permutation.
                for (int i = 0; i < cfg_.r_f; ++i) {
                    std::uniform_int_distribution<int> pick(i, cfg_.n - 1);
                    std::swap(perm_[static_cast<std::size_t>(i)],
                              perm_[static_cast<std::size_t>(pick(policy_rng_))]);
                    out.push_back(perm_[static_cast<std::size_t>(i)]);
                }
                break;
            }
            case DispatchPolicy::RoundRobin: {
                long start = (job_id * cfg_.r_f) % cfg_.n;
                for (int i = 0; i < cfg_.r_f; ++i)
                    out.push_back(static_cast<int>((start + i) % cfg_.n));
                break;
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    void handle_arrival() {
        long id = next_arrival_id_++;
        if (cfg_.lambda > 0)
            schedule_arrival(now_ + exp_draw(arrival_rng_, cfg_.lambda));

        auto job = std::make_unique<SimJob>();
        job->id = id;
        job->arrival = now_;
        std::vector<int> chosen = pick_servers(id);
        job->tasks.resize(chosen.size());
        SimJob* j = job.get();
        jobs_.push_back(std::move(job));

        std::vector<SimTask*> at_idle;
        for (std::size_t i = 0; i < chosen.size(); ++i) {
            SimServer& srv = servers_[static_cast<std::size_t>(chosen[i])];
            SimTask& task = j->tasks[i];
            task.job = j;
            task.server = chosen[i];
            srv.forked++;
            bool idle = srv.in_service == nullptr && srv.queue.empty();
            srv.queue.push_back(&task);
            if (idle) at_idle.push_back(&task);
        }

        // More simultaneous starts than the retain width: keep r of them,
        // chosen uniformly at random; the rest are canceled unstarted once
        // the threshold trips.
        if (static_cast<int>(at_idle.size()) > cfg_.r) {
            for (int i = 0; i < cfg_.r; ++i) {
                std::uniform_int_distribution<std::size_t> pick(
                    static_cast<std::size_t>(i), at_idle.size() - 1);
                std::swap(at_idle[static_cast<std::size_t>(i)], at_idle[pick(retention_rng_)]);
            }
            at_idle.resize(static_cast<std::size_t>(cfg_.r));
            std::sort(at_idle.begin(), at_idle.end(),
                      [](const SimTask* a, const SimTask* b) { return a->server < b->server; });
        }
        for (SimTask* t : at_idle) {
            if (t->state != TaskState::Queued) continue;  // canceled by the threshold
            SimServer& srv = servers_[static_cast<std::size_t>(t->server)];
            srv.queue.erase(std::find(srv.queue.begin(), srv.queue.end(), t));
            start_service(*t, srv);
        }
    }

    void start_service(SimTask& task, SimServer& srv) {
        task.state = TaskState::InService;
        task.start = now_;
        srv.in_service = &task;
        srv.epoch++;
        double dur = sample(cfg_.dist, service_rng_);
        events_.push({now_ + dur, Event::Finish, task.job->id, task.server, srv.epoch});
        SimJob& job = *task.job;
        job.started++;
        if (job.started == cfg_.r) cancel_unstarted(job);
    }

    void cancel_unstarted(SimJob& job) {
        for (SimTask& t : job.tasks) {
            if (t.state != TaskState::Queued) continue;
            SimServer& srv = servers_[static_cast<std::size_t>(t.server)];
            srv.queue.erase(std::find(srv.queue.begin(), srv.queue.end(), &t));
            t.state = TaskState::CanceledQueued;
        }
    }

    void handle_finish(const Event& ev) {
        SimServer& srv = servers_[static_cast<std::size_t>(ev.server)];
        if (srv.epoch != ev.epoch || srv.in_service == nullptr) return;  // aborted
        SimTask& task = *srv.in_service;
        SimJob& job = *task.job;
        task.state = TaskState::Finished;
        task.end = now_;
        double span = now_ - task.start;
        srv.busy += span;
        job.cost += span;
        job.finished++;
        srv.in_service = nullptr;
        srv.epoch++;

        std::vector<int> freed{ev.server};
        if (job.finished == cfg_.k) depart(job, freed);
        std::sort(freed.begin(), freed.end());
        for (int s : freed) pull_next(servers_[static_cast<std::size_t>(s)]);
        end_time_ = now_;
    }

    void depart(SimJob& job, std::vector<int>& freed) {
        job.departed = true;
        cancel_unstarted(job);
        for (SimTask& t : job.tasks) {
            if (t.state != TaskState::InService) continue;
            SimServer& srv = servers_[static_cast<std::size_t>(t.server)];
            double span = now_ - t.start;
            srv.busy += span;
            job.cost += span;
            t.state = TaskState::CanceledInService;
            t.end = now_;
            srv.in_service = nullptr;
            srv.epoch++;
            freed.push_back(t.server);
        }
        record(job);
        if (cfg_.lambda == 0) schedule_arrival(now_);
    }

    void pull_next(SimServer& srv) {
        if (srv.in_service != nullptr || srv.queue.empty()) return;
        SimTask* t = srv.queue.front();
        srv.queue.pop_front();
        start_service(*t, srv);
    }

    void record(SimJob& job) {
        double latency = now_ - job.arrival;
        if (job.id >= cfg_.effective_warmup()) {
            latencies_.push_back(latency);
            cost_sum_ += job.cost;
        }
        if (retain_) {
            JobRecord rec;
            rec.job_id = job.id;
            rec.arrival_time = job.arrival;
            rec.finish_time = now_;
            rec.latency = latency;
            rec.cost = job.cost;
            rec.num_forked = static_cast<int>(job.tasks.size());
            rec.num_started = job.started;
            rec.num_finished = job.finished;
            for (const SimTask& t : job.tasks) {
                if (t.state == TaskState::Finished)
                    rec.spans.push_back({t.server, t.start, t.end, true});
                else if (t.state == TaskState::CanceledInService)
                    rec.spans.push_back({t.server, t.start, t.end, false});
            }
            records_.push_back(std::move(rec));
        }
        job.tasks.clear();
        job.tasks.shrink_to_fit();
    }

    RepResult finalize() {
        RepResult res;
        res.jobs_measured = static_cast<long>(latencies_.size());
        double lat_sum = 0;
        for (double v : latencies_) lat_sum += v;
        res.mean_latency = latencies_.empty() ? 0 : lat_sum / res.jobs_measured;
        res.mean_cost = latencies_.empty() ? 0 : cost_sum_ / res.jobs_measured;
        std::size_t decile = latencies_.size() / 10;
        if (decile > 0) {
            double first = 0, last = 0;
            for (std::size_t i = 0; i < decile; ++i) {
                first += latencies_[i];
                last += latencies_[latencies_.size() - decile + i];
            }
            res.first_decile_latency = first / static_cast<double>(decile);
            res.last_decile_latency = last / static_cast<double>(decile);
        }
        res.utilization.reserve(servers_.size());
        res.forked.reserve(servers_.size());
        for (const SimServer& s : servers_) {
            res.utilization.push_back(end_time_ > 0 ? s.busy / end_time_ : 0.0);
            res.forked.push_back(s.forked);
        }
        res.records = std::move(records_);
        return res;
    }
};

}  // namespace detail

// Simulates `replications` independent runs of the configured system and
// aggregates them. Identical (config, seed) gives identical summaries.
inline RunSummary simulate(const SystemConfig& cfg, int replications = 20,
                           bool retain_records = false, int threads = 1) {
    cfg.validate();
    if (replications < 1) throw ConfigInvalid("simulate: need replications >= 1");

    std::vector<detail::RepResult> reps(static_cast<std::size_t>(replications));
    auto run_rep = [&](int rep) {
        detail::FJSimulator sim(cfg, static_cast<std::uint64_t>(rep),
                                retain_records && rep == 0);
        reps[static_cast<std::size_t>(rep)] = sim.run();
    };
    if (threads <= 1 || replications == 1) {
        for (int rep = 0; rep < replications; ++rep) run_rep(rep);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        int workers = std::min(threads, replications);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int rep = next.fetch_add(1); rep < replications;
                     rep = next.fetch_add(1))
                    run_rep(rep);
            });
        for (auto& t : pool) t.join();
    }

    RunSummary out;
    out.replications = replications;
    double lat_mean = 0, cost_mean = 0;
    for (const auto& r : reps) {
        lat_mean += r.mean_latency;
        cost_mean += r.mean_cost;
        out.jobs_measured += r.jobs_measured;
    }
    lat_mean /= replications;
    cost_mean /= replications;
    out.mean_latency = lat_mean;
    out.mean_cost = cost_mean;
    if (replications >= 2) {
        double lv = 0, cv = 0;
        for (const auto& r : reps) {
            lv += (r.mean_latency - lat_mean) * (r.mean_latency - lat_mean);
            cv += (r.mean_cost - cost_mean) * (r.mean_cost - cost_mean);
        }
        lv /= replications - 1;
        cv /= replications - 1;
        double t = detail::t_quantile_975(replications - 1);
        double scale = t / std::sqrt(static_cast<double>(replications));
        out.latency_ci = std::max(scale * std::sqrt(lv), 1e-12 * (1.0 + std::abs(lat_mean)));
        out.cost_ci = std::max(scale * std::sqrt(cv), 1e-12 * (1.0 + std::abs(cost_mean)));
    }
    out.server_utilization.assign(static_cast<std::size_t>(cfg.n), 0.0);
    out.tasks_forked_share.assign(static_cast<std::size_t>(cfg.n), 0.0);
    double total_forked = 0;
    for (const auto& r : reps) {
        for (int s = 0; s < cfg.n; ++s) {
            out.server_utilization[static_cast<std::size_t>(s)] +=
                r.utilization[static_cast<std::size_t>(s)] / replications;
            out.tasks_forked_share[static_cast<std::size_t>(s)] +=
                static_cast<double>(r.forked[static_cast<std::size_t>(s)]);
            total_forked += static_cast<double>(r.forked[static_cast<std::size_t>(s)]);
        }
    }
    if (total_forked > 0)
        for (auto& v : out.tasks_forked_share) v /= total_forked;
    double first = 0, last = 0;
    for (const auto& r : reps) {
        first += r.first_decile_latency;
        last += r.last_decile_latency;
    }
    out.divergence_suspected = first > 0 && last > 2.0 * first;
    out.records = std::move(reps.front().records);
    return out;
}

// Stationary response-time samples of a single FCFS M/G/1 queue via the
// Lindley recursion; deterministic per seed. Feeds the early-cancellation
// latency bound.
inline std::vector<double> mg1_response_samples(const ServiceDistribution& dist,
                                                double lambda, long num_samples,
                                                std::uint64_t seed) {
    if (num_samples < 1) throw std::invalid_argument("mg1_response_samples: need >= 1");
    double ex = mean(dist);
    if (lambda * ex >= 1.0)
        throw Unstable("mg1_response_samples: utilization " + std::to_string(lambda * ex) +
                       " >= 1");
    long warm = std::max<long>(1000, num_samples / 10);
    std::mt19937_64 service = substream(seed, 0, 10);
    std::mt19937_64 arrivals = substream(seed, 0, 11);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(num_samples));
    double wait = 0;
    for (long i = 0; i < warm + num_samples; ++i) {
        double x = sample(dist, service);
        if (i >= warm) out.push_back(wait + x);
        if (lambda > 0) {
            double gap = exp_draw(arrivals, lambda);
            wait = std::max(0.0, wait + x - gap);
        }
    }
    return out;
}

}  // namespace forklat
