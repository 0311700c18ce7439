#include "dsse/harness/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <ostream>
#include <random>
#include <thread>

#include <json.hpp>

#include "dsse/errors.hpp"

namespace dsse::harness {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
    if (v.empty()) return 0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

struct Timed {
    QueryOutcome outcome;
    double ms = 0;
};

class Runner {
public:
    explicit Runner(const ScenarioConfig& config)
        : config_(config),
          sim_(effective(config), kDefaultStartTime),
          stream_(config.seed, kDefaultPeriod, kDefaultStartTime),
          rng_(config.seed ^ 0x9e3779b97f4a7c15ULL) {
        if (config.role == QueryRole::user) {
            if (config.mode != Mode::full) throw UsageError("scenario: user queries need full mode");
            creds_ = sim_.enroll("alice");
        }
    }

    ScenarioReport run() {
        report_.config = config_;
        sim_.set_adversary(config_.adversary);
        const std::uint32_t rounds = std::max<std::uint32_t>(1, config_.rounds);
        for (std::uint32_t r = 0; r < rounds; ++r) {
            const std::uint64_t files_end = config_.n_files * (r + 1) / rounds;
            const auto t0 = Clock::now();
            while (sim_.files_uploaded() < files_end) upload(stream_.next());
            report_.ingest_seconds += ms_since(t0) / 1000.0;

            const std::uint64_t q = config_.queries * (r + 1) / rounds - config_.queries * r / rounds;
            const auto t1 = Clock::now();
            run_queries(q);
            report_.query_seconds += ms_since(t1) / 1000.0;
        }
        for (std::uint64_t d : config_.recurring_adds) recurring(d);

        report_.files = sim_.files_uploaded();
        report_.add_median_ms = median(add_ms_);
        report_.query_median_ms = median(query_ms_);
        report_.table_bytes = sim_.owner().table_bytes();
        report_.bloom_bytes = sim_.owner().bloom().serialized_size();
        return std::move(report_);
    }

private:
    static SimulationConfig effective(const ScenarioConfig& c) {
        SimulationConfig s = c.sim;
        s.mode = c.mode;
        return s;
    }

    void upload(const PhiFile& f) {
        const auto t0 = Clock::now();
        sim_.upload(f);
        add_ms_.push_back(ms_since(t0));
    }

    QueryOutcome query(const std::string& w, ServerClient* via = nullptr) {
        const std::uint64_t now = sim_.last_upload_time();
        return config_.role == QueryRole::user ? sim_.user_query(creds_, w, now, via)
                                               : sim_.owner_query(w, now, via);
    }

    void run_queries(std::uint64_t q) {
        if (q == 0) return;
        const auto universe = sim_.oracle().keywords();
        std::vector<std::string> picks;
        for (std::uint64_t i = 0; i < q; ++i) picks.push_back(universe[rng_() % universe.size()]);

        std::vector<Timed> results(picks.size());
        const std::uint32_t threads = std::clamp<std::uint32_t>(config_.threads, 1, static_cast<std::uint32_t>(q));
        if (threads == 1) {
            for (std::size_t i = 0; i < picks.size(); ++i) {
                const auto t0 = Clock::now();
                results[i].outcome = query(picks[i]);
                results[i].ms = ms_since(t0);
            }
        } else {
            std::vector<std::thread> workers;
            for (std::uint32_t t = 0; t < threads; ++t) {
                workers.emplace_back([&, t] {
                    Connection conn = sim_.connect();
                    for (std::size_t i = t; i < picks.size(); i += threads) {
                        const auto t0 = Clock::now();
                        results[i].outcome = query(picks[i], conn.client.get());
                        results[i].ms = ms_since(t0);
                    }
                });
            }
            for (auto& w : workers) w.join();
        }
        for (std::size_t i = 0; i < picks.size(); ++i) record(picks[i], results[i]);
    }

    void record(const std::string& w, const Timed& t) {
        const QueryOutcome& o = t.outcome;
        ++report_.queries;
        ++report_.stages[std::string(stage_name(o.stage))];
        query_ms_.push_back(t.ms);
        report_.lookups += o.lookups;
        report_.probes += o.guess.probes;
        if (o.retried) ++report_.retries;
        if (o.verified())
            ++report_.verified;
        else
            ++report_.rejected;
        if (o.ids == sim_.oracle().lookup(w)) ++report_.oracle_matches;
        const bool unexpected = o.stage == QueryOutcome::Stage::search_fault ||
                                o.stage == QueryOutcome::Stage::stale_epoch ||
                                o.stage == QueryOutcome::Stage::not_found;
        if (unexpected && config_.adversary == Adversary::honest)
            report_.faults.push_back(w + ": " + std::string(stage_name(o.stage)) + ": " + o.detail);
    }

    void recurring(std::uint64_t d) {
        const auto universe = sim_.oracle().keywords();
        RecurringProbe p;
        p.keyword = universe[rng_() % universe.size()];
        p.added = d;
        const QueryOutcome first = query(p.keyword);
        p.counter_before = sim_.oracle().count(p.keyword);
        p.first_lookups = first.lookups;
        for (std::uint64_t i = 0; i < d; ++i) {
            PhiFile f = stream_.next();
            force_keyword(f, p.keyword);
            upload(f);
        }
        const QueryOutcome second = query(p.keyword);
        p.second_lookups = second.lookups;
        p.verified = first.verified() && second.verified() && second.ids == sim_.oracle().lookup(p.keyword);
        report_.recurring.push_back(p);
    }

    ScenarioConfig config_;
    Simulation sim_;
    PhiStream stream_;
    std::mt19937_64 rng_;
    UserCredentials creds_;
    ScenarioReport report_;
    std::vector<double> add_ms_;
    std::vector<double> query_ms_;
};

}  // namespace

bool ScenarioReport::passed() const {
    if (queries == 0) return false;
    if (config.adversary != Adversary::honest) return verified == 0;
    if (!faults.empty() || oracle_matches != queries || verified != queries) return false;
    return std::ranges::all_of(recurring,
                               [](const RecurringProbe& p) { return p.verified && p.second_lookups == p.added + 1; });
}

ScenarioReport run_scenario(const ScenarioConfig& config) {
    if (config.n_files == 0) throw UsageError("scenario: n_files must be >= 1");
    return Runner(config).run();
}

void force_keyword(PhiFile& file, std::string_view keyword) {
    const auto colon = keyword.find(':');
    if (colon != std::string_view::npos) {
        const auto name = keyword.substr(0, colon);
        const std::string digits(keyword.substr(colon + 1));
        for (std::size_t i = 0; i < kAttributesPerFile; ++i) {
            const auto& a = attributes()[i];
            if (a.name != name) continue;
            std::uint32_t v = 0;
            try {
                std::size_t used = 0;
                v = static_cast<std::uint32_t>(std::stoul(digits, &used));
                if (used != digits.size()) break;
            } catch (const std::exception&) {
                break;
            }
            if (v < a.lo || v > a.hi) break;
            file.values[i] = v;
            return;
        }
    }
    throw UsageError("force_keyword: not a PHI keyword: " + std::string(keyword));
}

void print_report(std::ostream& out, const ScenarioReport& r) {
    const auto row = [&](std::string_view k, const auto& v) {
        out << "  " << std::left << std::setw(22) << k << v << "\n";
    };
    out << "scenario  mode=" << mode_name(r.config.mode) << "  adversary=" << adversary_name(r.config.adversary)
        << "  role=" << (r.config.role == QueryRole::user ? "user" : "owner") << "  seed=" << r.config.seed
        << "\n";
    row("files", r.files);
    row("queries", r.queries);
    row("oracle matches", r.oracle_matches);
    row("verified", r.verified);
    row("rejected", r.rejected);
    for (const auto& [stage, n] : r.stages) row("  " + stage, n);
    row("table lookups", r.lookups);
    row("bloom probes", r.probes);
    row("counter retries", r.retries);
    out << std::fixed << std::setprecision(3);
    row("ingest s", r.ingest_seconds);
    row("query s", r.query_seconds);
    row("add median ms", r.add_median_ms);
    row("query median ms", r.query_median_ms);
    out.unsetf(std::ios::floatfield);
    row("tbl_c bytes", r.table_bytes);
    row("bf bytes", r.bloom_bytes);
    for (const auto& p : r.recurring)
        out << "  recurring " << p.keyword << " cnt=" << p.counter_before << " +" << p.added
            << " lookups " << p.first_lookups << " -> " << p.second_lookups
            << (p.verified ? " verified" : " NOT verified") << "\n";
    for (const auto& f : r.faults) out << "  fault: " << f << "\n";
    out << "  result: " << (r.passed() ? "PASS" : "FAIL") << "\n";
}

void write_records(std::ostream& out, const ScenarioReport& r) {
    nlohmann::json s = {
        {"record", "scenario"},
        {"mode", mode_name(r.config.mode)},
        {"adversary", adversary_name(r.config.adversary)},
        {"role", r.config.role == QueryRole::user ? "user" : "owner"},
        {"seed", r.config.seed},
        {"files", r.files},
        {"queries", r.queries},
        {"oracle_matches", r.oracle_matches},
        {"verified", r.verified},
        {"rejected", r.rejected},
        {"stages", r.stages},
        {"lookups", r.lookups},
        {"probes", r.probes},
        {"retries", r.retries},
        {"ingest_seconds", r.ingest_seconds},
        {"query_seconds", r.query_seconds},
        {"add_median_ms", r.add_median_ms},
        {"query_median_ms", r.query_median_ms},
        {"table_bytes", r.table_bytes},
        {"bloom_bytes", r.bloom_bytes},
        {"faults", r.faults},
        {"passed", r.passed()},
    };
    out << s.dump() << "\n";
    for (const auto& p : r.recurring) {
        nlohmann::json j = {{"record", "recurring"},       {"keyword", p.keyword},
                            {"counter_before", p.counter_before}, {"added", p.added},
                            {"first_lookups", p.first_lookups},   {"second_lookups", p.second_lookups},
                            {"verified", p.verified}};
        out << j.dump() << "\n";
    }
}

}  // namespace dsse::harness
