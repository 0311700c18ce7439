#include "dsse/harness/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>

#include <json.hpp>

#include "dsse/errors.hpp"
#include "dsse/harness/simulation.hpp"
#include "dsse/kernels.hpp"

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

template <typename Fn>
double median_ms(int reps, Fn&& fn) {
    std::vector<double> t;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = Clock::now();
        fn();
        t.push_back(ms_since(t0));
    }
    return median(std::move(t));
}

constexpr int kTimingReps = 101;

// tbl_c size once every keyword of the attribute table has been seen.
std::size_t saturated_table_bytes() {
    std::size_t total = 4;
    for (const auto& a : attributes())
        for (std::uint32_t v = a.lo; v <= a.hi; ++v)
            total += 4 + a.name.size() + 1 + std::to_string(v).size() + 8 + kLambda;
    return total;
}

std::string probe(std::string_view kind, std::uint64_t n) { return "probe:" + std::string(kind) + "-" + std::to_string(n); }

}  // namespace

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw UsageError("fit_line: need at least two points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0) throw UsageError("fit_line: x values are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += e * e;
    }
    f.r2 = syy == 0 ? (ss_res == 0 ? 1.0 : 0.0) : 1.0 - ss_res / syy;
    return f;
}

BenchReport run_bench(const BenchConfig& config) {
    if (config.verify_sizes.size() < 2) throw UsageError("bench: need at least two verify sizes");
    if (config.search_ids < 2 || config.repetitions < 1) throw UsageError("bench: bad search probe settings");

    SimulationConfig sc;
    sc.mode = Mode::full;
    sc.bloom_capacity = config.bloom_capacity;
    sc.refresh_every = 0;
    sc.history_stride = 0;
    Simulation sim(sc, kDefaultStartTime);
    const UserCredentials creds = sim.enroll("bench");
    PhiStream stream(config.seed, kDefaultPeriod, kDefaultStartTime);

    BenchReport report;
    report.config = config;

    std::vector<double> add_ms;
    auto upload = [&](const PhiFile& f, const std::vector<std::string>& extra) {
        auto kw = f.keywords();
        kw.insert(kw.end(), extra.begin(), extra.end());
        const Bytes doc = f.render();
        const auto t0 = Clock::now();
        sim.upload(doc, kw, f.timestamp);
        add_ms.push_back(ms_since(t0));
    };

    for (std::uint64_t i = 0; i < config.n_files; ++i) upload(stream.next(), {});

    auto server_search = [&](const std::string& w, SearchResult* out) {
        const SearchToken token = sim.owner().gen_token(w);
        const auto t0 = Clock::now();
        SearchResult r = sim.endpoint().with_server([&](Server& s) { return s.search(token); });
        const double ms = ms_since(t0);
        if (out) *out = std::move(r);
        return ms;
    };

    // Probe files: file i carries verify-s for every s > i, and belongs to
    // new/recurring pair i / search_ids.
    const std::uint64_t max_verify = *std::ranges::max_element(config.verify_sizes);
    const std::uint64_t pair_files = config.search_ids * config.repetitions;
    const std::uint64_t half = config.search_ids / 2;
    std::vector<double> new_ms, rec_ms, new_rt_ms;
    for (std::uint64_t i = 0; i < std::max(max_verify, pair_files); ++i) {
        std::vector<std::string> extra;
        for (std::uint64_t s : config.verify_sizes)
            if (i < s) extra.push_back(probe("verify", s));
        const std::uint64_t j = i / config.search_ids, k = i % config.search_ids;
        if (i < pair_files) {
            extra.push_back(probe("new", j));
            extra.push_back(probe("rec", j));
        }
        upload(stream.next(), extra);
        if (i >= pair_files) continue;
        if (k + 1 == half) server_search(probe("rec", j), nullptr);
        if (k + 1 == config.search_ids) {
            SearchResult r;
            new_ms.push_back(server_search(probe("new", j), &r));
            report.new_lookups = r.lookups;
            rec_ms.push_back(server_search(probe("rec", j), &r));
            report.recurring_lookups = r.lookups;
            // A recurring search over the full protocol path (token, transport, proof).
            const std::uint64_t now = sim.last_upload_time();
            const auto t0 = Clock::now();
            (void)sim.owner_query(probe("rec", j), now);
            new_rt_ms.push_back(ms_since(t0));
        }
    }
    report.new_search_ms = median(new_ms);
    report.recurring_search_ms = median(rec_ms);

    const std::uint64_t now = sim.last_upload_time();
    const std::string sample_kw = sim.oracle().keywords().front();
    const double owner_token_ms = median_ms(kTimingReps, [&] { (void)sim.owner().gen_token(sample_kw); });
    const SignedBloom fetched = sim.client().get_bloom();
    const double user_token_ms = median_ms(kTimingReps, [&] {
        (void)gen_token_user(creds, fetched, sample_kw, now, sc.freshness_window);
    });

    struct Probe {
        std::uint64_t size;
        std::string keyword;
        SearchResult result;
        std::vector<double> bloom, aggregate, total;
    };
    std::vector<Probe> probes;
    for (std::uint64_t s : config.verify_sizes) {
        Probe p{s, probe("verify", s), {}, {}, {}, {}};
        server_search(p.keyword, &p.result);
        if (!p.result.proof || p.result.ids.size() != s)
            throw Error("bench: verify probe returned an unexpected result");
        probes.push_back(std::move(p));
    }
    // Sizes are interleaved within each round so clock drift spreads evenly over the sweep.
    for (int rep = 0; rep < kTimingReps; ++rep) {
        for (Probe& p : probes) {
            const Proof& proof = *p.result.proof;
            auto t0 = Clock::now();
            if (!crypto::equal(bloom_mac(creds.k_mac, *proof.bloom.filter, proof.bloom.timestamp), proof.bloom.sigma))
                throw Error("bench: bloom MAC mismatch");
            p.bloom.push_back(ms_since(t0));

            t0 = Clock::now();
            Block acc{};
            for (const Bytes& c : p.result.ciphertexts)
                kernels::xor_into(acc, crypto::mac_generate(creds.k_mac, {view(c), view(p.keyword)}));
            if (!crypto::equal(acc, proof.gamma)) throw Error("bench: aggregate MAC mismatch");
            p.aggregate.push_back(ms_since(t0));

            t0 = Clock::now();
            if (!user_verify(creds, p.keyword, p.size, p.result.ids, p.result.ciphertexts, proof, now,
                             sc.freshness_window))
                throw Error("bench: verification failed");
            p.total.push_back(ms_since(t0));
        }
    }
    std::vector<double> xs, ys;
    for (Probe& p : probes) {
        report.verify.push_back({p.size, median(p.bloom), median(p.aggregate), median(p.total)});
        xs.push_back(static_cast<double>(p.size));
        ys.push_back(report.verify.back().total_ms);
    }
    const LinearFit fit = fit_line(xs, ys);
    report.verify_slope_ms = fit.slope;
    report.verify_intercept_ms = fit.intercept;
    report.verify_r2 = fit.r2;

    const VerifyPoint& largest = report.verify.back();
    const double mb = 1024.0 * 1024.0;
    auto& rows = report.rows;
    rows.push_back({"add_file", median(add_ms), "ms", 190, "owner AddFile plus server ingest"});
    rows.push_back({"search new (" + std::to_string(config.search_ids) + " ids)", report.new_search_ms, "ms", 2000,
                    std::to_string(report.new_lookups) + " lookups"});
    rows.push_back({"search recurring (" + std::to_string(config.search_ids) + " ids)", report.recurring_search_ms,
                    "ms", 1000, std::to_string(report.recurring_lookups) + " lookups"});
    rows.push_back({"search round trip", median(new_rt_ms), "ms", std::nullopt, "owner token, transport, verify"});
    rows.push_back({"token owner", owner_token_ms, "ms", std::nullopt, ""});
    rows.push_back({"token user", user_token_ms, "ms", 10, "filter MAC and counter guess"});
    rows.push_back({"verify BF check", largest.bloom_ms, "ms", 55, ""});
    rows.push_back({"verify aggregate MAC (" + std::to_string(largest.size) + ")", largest.aggregate_ms, "ms",
                    std::nullopt, ""});
    rows.push_back({"verify total (" + std::to_string(largest.size) + ")", largest.total_ms, "ms", 135, ""});
    rows.push_back({"verify fit R^2", report.verify_r2, "", std::nullopt, "affine in result size"});
    rows.push_back({"tbl_c", static_cast<double>(sim.owner().table_bytes()) / mb, "MB", std::nullopt,
                    "after " + std::to_string(sim.files_uploaded()) + " files"});
    rows.push_back({"tbl_c saturated", static_cast<double>(saturated_table_bytes()) / mb, "MB", 1.3,
                    "every PHI keyword present"});
    rows.push_back({"BF", static_cast<double>(sim.owner().bloom().serialized_size()) / mb, "MB", 5,
                    std::to_string(sim.owner().bloom().inserted()) + " elements inserted"});
    return report;
}

void print_bench(std::ostream& out, const BenchReport& r) {
    out << std::left << std::setw(34) << "measurement" << std::right << std::setw(12) << "measured" << std::setw(12)
        << "reference" << "  unit  note\n";
    out << std::fixed << std::setprecision(3);
    for (const auto& row : r.rows) {
        out << std::left << std::setw(34) << row.name << std::right << std::setw(12) << row.measured
            << std::setw(12);
        if (row.reference)
            out << *row.reference;
        else
            out << "-";
        out << "  " << std::left << std::setw(4) << row.unit << "  " << row.note << "\n";
    }
    out << "\nverify sweep (ms)\n";
    out << std::right << std::setw(8) << "files" << std::setw(12) << "bf" << std::setw(12) << "aggregate"
        << std::setw(12) << "total\n";
    for (const auto& p : r.verify)
        out << std::setw(8) << p.size << std::setw(12) << p.bloom_ms << std::setw(12) << p.aggregate_ms
            << std::setw(12) << p.total_ms << "\n";
    out << "fit: total = " << r.verify_intercept_ms << " + " << r.verify_slope_ms << " * files  (R^2 "
        << r.verify_r2 << ")\n";
    out.unsetf(std::ios::floatfield);
    out << "laws: recurring <= new search " << (r.recurring_search_ms <= r.new_search_ms ? "yes" : "no")
        << ", verify affine " << (r.verify_r2 >= 0.9 ? "yes" : "no") << "\n";
}

void write_bench_records(std::ostream& out, const BenchReport& r) {
    for (const auto& row : r.rows) {
        nlohmann::json j = {{"record", "bench"}, {"name", row.name}, {"measured", row.measured},
                            {"unit", row.unit},  {"note", row.note}};
        j["reference"] = row.reference ? nlohmann::json(*row.reference) : nlohmann::json(nullptr);
        out << j.dump() << "\n";
    }
    for (const auto& p : r.verify) {
        nlohmann::json j = {{"record", "verify"},        {"files", p.size},
                            {"bloom_ms", p.bloom_ms},     {"aggregate_ms", p.aggregate_ms},
                            {"total_ms", p.total_ms}};
        out << j.dump() << "\n";
    }
    nlohmann::json laws = {{"record", "laws"},
                           {"new_search_ms", r.new_search_ms},
                           {"recurring_search_ms", r.recurring_search_ms},
                           {"new_lookups", r.new_lookups},
                           {"recurring_lookups", r.recurring_lookups},
                           {"verify_r2", r.verify_r2},
                           {"holds", r.laws_hold()}};
    out << laws.dump() << "\n";
}

}  // namespace dsse::harness
