#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "dsse/harness/simulation.hpp"

namespace dsse::harness {

enum class QueryRole { owner, user };

struct ScenarioConfig {
    Mode mode = Mode::full;
    std::uint64_t n_files = 10'000;
    std::uint64_t queries = 200;
    /// Ingestion is split into this many rounds, each followed by its share of the queries.
    std::uint32_t rounds = 4;
    Adversary adversary = Adversary::honest;
    std::uint64_t seed = 1;
    /// user: fetch BF_s, guess the counter, verify (full mode). owner: owner-issued tokens.
    QueryRole role = QueryRole::user;
    /// Worker threads issuing the queries of a round; 1 keeps the run single-threaded.
    std::uint32_t threads = 1;
    /// Recurring-keyword plan: after ingestion, query a keyword, add this many
    /// files containing it, query again. Empty disables the plan.
    std::vector<std::uint64_t> recurring_adds;
    SimulationConfig sim;
};

struct RecurringProbe {
    std::string keyword;
    std::uint64_t counter_before = 0;
    std::uint64_t added = 0;
    std::uint32_t first_lookups = 0;
    std::uint32_t second_lookups = 0;
    bool verified = false;
};

struct ScenarioReport {
    ScenarioConfig config;
    std::uint64_t files = 0;
    std::uint64_t queries = 0;
    std::uint64_t oracle_matches = 0;
    std::uint64_t verified = 0;
    std::uint64_t rejected = 0;  // any query that did not end accepted
    std::map<std::string, std::uint64_t> stages;
    std::uint64_t lookups = 0;
    std::uint64_t probes = 0;
    std::uint64_t retries = 0;
    std::vector<RecurringProbe> recurring;
    std::vector<std::string> faults;

    double ingest_seconds = 0;
    double query_seconds = 0;
    double add_median_ms = 0;
    double query_median_ms = 0;

    std::size_t table_bytes = 0;
    std::size_t bloom_bytes = 0;

    /// Honest: every query matched the oracle and verified.
    /// Adversarial: no query verified.
    bool passed() const;
};

ScenarioReport run_scenario(const ScenarioConfig& config);

/// Overwrite the attribute named by `keyword` ("attr:value") so the file carries it.
/// Throws UsageError for keywords outside the attribute table.
void force_keyword(PhiFile& file, std::string_view keyword);

void print_report(std::ostream& out, const ScenarioReport& report);
/// One JSON object per line: a summary record followed by one record per recurring probe.
void write_records(std::ostream& out, const ScenarioReport& report);

}  // namespace dsse::harness
