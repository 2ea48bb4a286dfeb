#include "remoteq/engine.hpp"

#include "remoteq/core.hpp"
#include "remoteq/policies.hpp"
#include "remoteq/stochastics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <exception>
#include <limits>
#include <mutex>
#include <queue>
#include <sstream>
#include <thread>

namespace remoteq {

std::string Trajectory::to_csv() const
{
    std::ostringstream out;
    out << "t";
    for (std::size_t k = 0; k < stations; ++k)
    {
        out << ",Q_" << k + 1;
    }
    for (std::size_t k = 0; k < stations; ++k)
    {
        out << ",W_" << k + 1;
    }
    out << ",U\n";
    out.precision(10);
    for (std::size_t i = 0; i < t.size(); ++i)
    {
        out << t[i];
        for (std::size_t k = 0; k < stations; ++k)
        {
            out << ',' << q[i * stations + k];
        }
        for (std::size_t k = 0; k < stations; ++k)
        {
            out << ',' << w[i * stations + k];
        }
        out << ',' << u[i] << '\n';
    }
    return out.str();
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Pending
{
    double arrive;
    std::uint64_t seq;
    double appear;
    double requirement;
    std::uint64_t id;
    std::uint32_t station;
};

struct PendingLater
{
    bool operator()(const Pending& a, const Pending& b) const
    {
        return a.arrive > b.arrive || (a.arrive == b.arrive && a.seq > b.seq);
    }
};

struct Waiting
{
    double arrive;
    double appear;
    double requirement;
    std::uint64_t id;
};

struct StationState
{
    double mu = 1.0;
    std::deque<Waiting> queue; // customers waiting behind the one in service
    bool busy = false;
    double completion = kInf;
    std::uint64_t completion_seq = 0;
    std::uint64_t in_service = 0;
    int count = 0; // Q_k, including the one in service
    double queued_work = 0.0;
    std::uint64_t arrivals = 0;
    std::uint64_t departures = 0;
    double busy_area = 0.0;
    double count_area = 0.0;
};

class Simulation
{
public:
    Simulation(const ScenarioConfig& cfg, std::uint64_t rep, const RunOptions& options)
        : cfg_(cfg), options_(options), dispatcher_(cfg),
          interappearance_(derive_stream(cfg.seed, StreamLabel::interappearance(rep))),
          routing_(derive_stream(cfg.seed, StreamLabel::routing(rep))),
          origin_rng_(derive_stream(cfg.seed, StreamLabel::origin(rep))),
          location_rng_(derive_stream(cfg.seed, StreamLabel::location(rep))),
          common_service_(derive_stream(cfg.seed, {StreamPurpose::service_common, 0, rep}))
    {
        s_ = cfg.stations.size();
        stations_.resize(s_);
        weighted_.assign(s_, 0.0);
        delay_buf_.assign(s_, 0.0);
        for (std::size_t k = 0; k < s_; ++k)
        {
            stations_[k].mu = cfg.stations[k].service_rate;
            service_rngs_.push_back(derive_stream(cfg.seed, StreamLabel::service(static_cast<std::uint32_t>(k), rep)));
        }
        lambda_ = cfg.traffic.appearance_rate;
        horizon_ = cfg.horizon_min;
        burnin_ = cfg.burnin_min;
        if (!cfg.geography)
        {
            delays_ = effective_delays(cfg);
            double acc = 0.0;
            for (const auto& o : cfg.origins)
            {
                acc += o.probability;
                origin_cdf_.push_back(acc);
            }
            origin_cdf_.back() = 1.0;
        }
        if (cfg.sample_dt > 0.0)
        {
            result_.trajectory.stations = s_;
            next_sample_ = 0.0;
        }
        result_.count_path.stations = s_;
    }

    RunResult execute()
    {
        next_appearance_ = draw_interappearance(0.0);
        if (options_.record_count_path)
        {
            push_count_path(0.0);
        }
        while (true)
        {
            int kc = -1;
            double tc = kInf;
            std::uint64_t sc = 0;
            for (std::size_t k = 0; k < s_; ++k)
            {
                const auto& st = stations_[k];
                if (st.busy && (st.completion < tc || (st.completion == tc && st.completion_seq < sc)))
                {
                    tc = st.completion;
                    sc = st.completion_seq;
                    kc = static_cast<int>(k);
                }
            }
            const double ta = pending_.empty() ? kInf : pending_.top().arrive;
            const double tapp = next_appearance_;
            EventType type;
            double t;
            if (kc >= 0 && tc <= ta && tc <= tapp)
            {
                type = EventType::completion;
                t = tc;
            }
            else if (ta <= tapp)
            {
                type = EventType::arrival;
                t = ta;
            }
            else
            {
                type = EventType::appearance;
                t = tapp;
            }
            if (t > horizon_)
            {
                break;
            }
            take_samples_before(t);
            advance(t);
            switch (type)
            {
            case EventType::completion: on_completion(static_cast<std::size_t>(kc), t); break;
            case EventType::arrival: on_arrival(t); break;
            case EventType::appearance: on_appearance(t); break;
            }
            ++events_;
            if (t >= burnin_)
            {
                note_imbalance();
            }
            if (options_.record_count_path)
            {
                push_count_path(t);
            }
        }
        take_samples_before(std::nextafter(horizon_, kInf));
        advance(horizon_);
        finish();
        return std::move(result_);
    }

private:
    double draw_interappearance(double now)
    {
        const double z = sample(cfg_.traffic.interappearance, interappearance_);
        if (!std::isfinite(z) || z < 0.0)
        {
            fault("nonfinite inter-appearance sample");
        }
        return now + z / lambda_;
    }

    void advance(double t)
    {
        const double lo = std::max(last_t_, burnin_);
        const double hi = std::min(t, horizon_);
        if (hi > lo)
        {
            const double dt = hi - lo;
            if (last_t_ < burnin_)
            {
                // State in force when the window opens.
                note_imbalance();
            }
            int total = 0;
            for (auto& st : stations_)
            {
                st.count_area += st.count * dt;
                if (st.busy)
                {
                    st.busy_area += dt;
                }
                total += st.count;
            }
            total_area_ += total * dt;
        }
        last_t_ = std::max(last_t_, t);
    }

    void note_imbalance()
    {
        double lo = kInf;
        double hi = -kInf;
        for (std::size_t k = 0; k < s_; ++k)
        {
            const double l = stations_[k].count / stations_[k].mu;
            lo = std::min(lo, l);
            hi = std::max(hi, l);
        }
        imbalance_sup_ = std::max(imbalance_sup_, hi - lo);
    }

    void on_appearance(double t)
    {
        const std::uint64_t id = next_id_++;
        std::size_t origin = 0;
        std::span<const double> delays;
        if (cfg_.geography)
        {
            const auto& g = *cfg_.geography;
            const double x = g.region.x0 + (g.region.x1 - g.region.x0) * location_rng_.uniform();
            const double y = g.region.y0 + (g.region.y1 - g.region.y0) * location_rng_.uniform();
            for (std::size_t k = 0; k < s_; ++k)
            {
                delay_buf_[k] = std::hypot(x - g.stations[k].x, y - g.stations[k].y) / g.speed;
            }
            delays = delay_buf_;
        }
        else
        {
            if (origin_cdf_.size() > 1)
            {
                const double u = origin_rng_.uniform();
                origin = static_cast<std::size_t>(std::upper_bound(origin_cdf_.begin(), origin_cdf_.end(), u) -
                                                  origin_cdf_.begin());
                origin = std::min(origin, origin_cdf_.size() - 1);
            }
            delays = delays_[origin];
        }
        for (std::size_t k = 0; k < s_; ++k)
        {
            weighted_[k] = stations_[k].count / stations_[k].mu;
        }
        const auto decision = dispatcher_.choose(weighted_, origin, delays, routing_);
        const auto k = static_cast<std::size_t>(decision.station);
        const double w = cfg_.service_assignment == ServiceAssignment::per_customer
                             ? sample(cfg_.stations[0].service, common_service_)
                             : sample(cfg_.stations[k].service, service_rngs_[k]);
        if (!std::isfinite(w) || w < 0.0)
        {
            fault("nonfinite service requirement");
        }
        const double arrive = t + delays[k];
        pending_.push(Pending{arrive, seq_++, t, w, id, static_cast<std::uint32_t>(k)});
        en_route_work_ += w;
        if (pending_.size() > options_.max_pending)
        {
            fault("en-route queue overflow");
        }
        ++appearances_;
        if (t >= burnin_)
        {
            ++window_appearances_;
            if (decision.nonnearest)
            {
                ++window_nonnearest_;
            }
        }
        if (options_.record_customers)
        {
            double dmin = delays[0];
            for (double d : delays)
            {
                dmin = std::min(dmin, d);
            }
            result_.customers.push_back(
                CustomerRecord{id, t, arrive, dmin, w, cfg_.geography ? -1 : static_cast<int>(origin), static_cast<int>(k)});
        }
        if (options_.record_events)
        {
            result_.events.push_back({t, EventType::appearance, static_cast<int>(k), id});
        }
        next_appearance_ = draw_interappearance(t);
    }

    void start_service(StationState& st, const Waiting& c, double t)
    {
        st.busy = true;
        st.completion = t + c.requirement / st.mu;
        st.completion_seq = seq_++;
        st.in_service = c.id;
        if (c.appear >= burnin_)
        {
            ++served_;
            wait_sum_ += t - c.arrive;
            travel_sum_ += c.arrive - c.appear;
        }
    }

    void on_arrival(double t)
    {
        const Pending p = pending_.top();
        pending_.pop();
        en_route_work_ = pending_.empty() ? 0.0 : en_route_work_ - p.requirement;
        auto& st = stations_[p.station];
        ++st.count;
        ++st.arrivals;
        const Waiting c{p.arrive, p.appear, p.requirement, p.id};
        if (!st.busy)
        {
            start_service(st, c, t);
        }
        else
        {
            st.queue.push_back(c);
            st.queued_work += c.requirement;
        }
        if (options_.record_events)
        {
            result_.events.push_back({t, EventType::arrival, static_cast<int>(p.station), p.id});
        }
    }

    void on_completion(std::size_t k, double t)
    {
        auto& st = stations_[k];
        if (options_.record_events)
        {
            result_.events.push_back({t, EventType::completion, static_cast<int>(k), st.in_service});
        }
        ++st.departures;
        --st.count;
        st.busy = false;
        st.completion = kInf;
        if (!st.queue.empty())
        {
            const Waiting c = st.queue.front();
            st.queue.pop_front();
            st.queued_work = st.queue.empty() ? 0.0 : st.queued_work - c.requirement;
            start_service(st, c, t);
        }
        if (st.count < 0 || (st.count > 0) != st.busy)
        {
            fault("station " + std::to_string(k + 1) + " count/busy mismatch");
        }
    }

    void take_samples_before(double t)
    {
        if (cfg_.sample_dt <= 0.0)
        {
            return;
        }
        auto& tr = result_.trajectory;
        while (next_sample_ < t && next_sample_ <= horizon_)
        {
            tr.t.push_back(next_sample_);
            for (const auto& st : stations_)
            {
                tr.q.push_back(st.count);
                const double remaining = st.busy ? st.mu * (st.completion - next_sample_) : 0.0;
                tr.w.push_back(remaining + st.queued_work);
            }
            tr.u.push_back(en_route_work_);
            ++sample_index_;
            next_sample_ = static_cast<double>(sample_index_) * cfg_.sample_dt;
        }
    }

    void push_count_path(double t)
    {
        auto& cp = result_.count_path;
        if (!cp.time.empty() && cp.time.back() == t)
        {
            cp.counts.resize(cp.counts.size() - s_);
        }
        else
        {
            cp.time.push_back(t);
        }
        for (const auto& st : stations_)
        {
            cp.counts.push_back(st.count);
        }
    }

    [[noreturn]] void fault(const std::string& what) const
    {
        std::ostringstream out;
        out << what << " at t=" << last_t_ << " (appearances=" << appearances_ << ", en-route=" << pending_.size()
            << ", counts=";
        for (const auto& st : stations_)
        {
            out << st.count << (st.busy ? "b" : "i") << ' ';
        }
        out << ")";
        throw SimulationFault(out.str());
    }

    void finish()
    {
        auto& s = result_.stats;
        const double window = horizon_ - burnin_;
        s.window = window;
        s.time_avg_total_count = total_area_ / window;
        s.mean_wait = served_ > 0 ? wait_sum_ / static_cast<double>(served_) : 0.0;
        s.mean_travel = served_ > 0 ? travel_sum_ / static_cast<double>(served_) : 0.0;
        s.mean_time_to_service = s.mean_wait + s.mean_travel;
        s.imbalance_sup = imbalance_sup_;
        s.chi_emergent = window_appearances_ > 0
                             ? static_cast<double>(window_nonnearest_) / static_cast<double>(window_appearances_)
                             : 0.0;
        s.appearances = appearances_;
        s.window_appearances = window_appearances_;
        s.served_in_window = served_;
        s.events = events_;
        s.en_route_at_horizon = pending_.size();
        for (const auto& st : stations_)
        {
            s.utilization.push_back(st.busy_area / window);
            s.time_avg_count.push_back(st.count_area / window);
            s.arrivals.push_back(st.arrivals);
            s.departures.push_back(st.departures);
            s.final_counts.push_back(st.count);
        }
        if (!std::isfinite(s.time_avg_total_count) || !std::isfinite(s.mean_wait))
        {
            fault("nonfinite statistic");
        }
    }

    const ScenarioConfig& cfg_;
    RunOptions options_;
    Dispatcher dispatcher_;
    Rng interappearance_;
    Rng routing_;
    Rng origin_rng_;
    Rng location_rng_;
    Rng common_service_;
    std::vector<Rng> service_rngs_;

    std::size_t s_ = 0;
    std::vector<StationState> stations_;
    std::priority_queue<Pending, std::vector<Pending>, PendingLater> pending_;
    std::vector<std::vector<double>> delays_;
    std::vector<double> origin_cdf_;
    std::vector<double> weighted_;
    std::vector<double> delay_buf_;

    double lambda_ = 1.0;
    double horizon_ = 0.0;
    double burnin_ = 0.0;
    double next_appearance_ = 0.0;
    double last_t_ = 0.0;
    double next_sample_ = kInf;
    std::uint64_t sample_index_ = 0;
    std::uint64_t seq_ = 0;
    std::uint64_t next_id_ = 0;
    double en_route_work_ = 0.0;

    double total_area_ = 0.0;
    double imbalance_sup_ = 0.0;
    double wait_sum_ = 0.0;
    double travel_sum_ = 0.0;
    std::uint64_t served_ = 0;
    std::uint64_t appearances_ = 0;
    std::uint64_t window_appearances_ = 0;
    std::uint64_t window_nonnearest_ = 0;
    std::uint64_t events_ = 0;

    RunResult result_;
};

} // namespace

RunResult run(const ScenarioConfig& cfg_in, std::uint64_t replication, const RunOptions& options)
{
    if (auto v = validate_scenario(cfg_in); !v.empty())
    {
        throw ConfigError(std::move(v));
    }
    ScenarioConfig cfg = cfg_in;
    resolve_traffic(cfg);
    Simulation sim(cfg, replication, options);
    return sim.execute();
}

std::vector<SampleStats> run_replications(const ScenarioConfig& cfg_in, std::size_t count, std::size_t parallelism)
{
    if (count == 0)
    {
        throw std::invalid_argument("replication count must be at least 1");
    }
    if (auto v = validate_scenario(cfg_in); !v.empty())
    {
        throw ConfigError(std::move(v));
    }
    ScenarioConfig cfg = cfg_in;
    resolve_traffic(cfg);
    if (parallelism == 0)
    {
        parallelism = std::max(1u, std::thread::hardware_concurrency());
    }
    parallelism = std::min(parallelism, count);

    std::vector<SampleStats> out(count);
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::size_t error_rep = count;
    std::string error_what;

    auto worker = [&]() {
        while (true)
        {
            const std::size_t r = next.fetch_add(1);
            if (r >= count)
            {
                return;
            }
            try
            {
                Simulation sim(cfg, r, RunOptions{});
                out[r] = sim.execute().stats;
            }
            catch (const std::exception& e)
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (r < error_rep)
                {
                    error_rep = r;
                    error_what = e.what();
                }
            }
        }
    };
    if (parallelism == 1)
    {
        worker();
    }
    else
    {
        std::vector<std::thread> threads;
        for (std::size_t i = 0; i < parallelism; ++i)
        {
            threads.emplace_back(worker);
        }
        for (auto& th : threads)
        {
            th.join();
        }
    }
    if (error_rep < count)
    {
        throw ReplicationError(error_rep, error_what);
    }
    return out;
}

} // namespace remoteq
