#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsse/errors.hpp"
#include "dsse/harness/bench.hpp"
#include "dsse/harness/scenario.hpp"
#include "dsse/harness/simulation.hpp"
#include "dsse/kernels.hpp"
#include "dsse/owner.hpp"
#include "dsse/server.hpp"
#include "dsse/transport.hpp"
#include "dsse/user.hpp"
#include "dsse/wire.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace dsse;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kRejected = 1;  // verification failed, scenario failed
constexpr int kUsage = 2;
constexpr int kFailure = 3;

Bytes read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw UsageError("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, ByteView data) {
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
        if (!out) throw Error("short write to " + tmp.string());
    }
    fs::rename(tmp, p);
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw UsageError("cannot read " + p.string());
    return json::parse(in);
}

void write_json(const fs::path& p, const json& j) {
    const std::string s = j.dump(2) + "\n";
    write_file(p, {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

Block block_from_hex(const std::string& h) {
    const Bytes b = from_hex(h);
    if (b.size() != kLambda) throw FormatError("expected a 16-byte hex value", 0);
    return to_array<kLambda>(b);
}

json creds_to_json(const UserCredentials& c) {
    return {{"name", c.name},
            {"k_prf", to_hex(c.k_prf)},
            {"k_se", to_hex(c.k_se)},
            {"k_mac", to_hex(c.k_mac)},
            {"group_key", to_hex(c.group.key)},
            {"epoch", c.group.epoch},
            {"max_counter", c.max_counter}};
}

UserCredentials creds_from_json(const json& j) {
    UserCredentials c;
    c.name = j.at("name").get<std::string>();
    c.k_prf = block_from_hex(j.at("k_prf"));
    c.k_se = block_from_hex(j.at("k_se"));
    c.k_mac = block_from_hex(j.at("k_mac"));
    c.group.key = block_from_hex(j.at("group_key"));
    c.group.epoch = j.at("epoch").get<std::uint64_t>();
    c.max_counter = j.at("max_counter").get<std::uint64_t>();
    return c;
}

/// On-disk layout of a state directory:
///   meta.json         mode, simulated clock, file count
///   owner.bin         owner snapshot (keys, TBL_c, BF_c, users)
///   server.bin        server snapshot, used unless --connect is given
///   users/<name>.json credentials of an authorized user
///   last_search.json  what the last search asked for
///   last_search.bin   the SEARCH_RESULT frame it received
struct State {
    fs::path dir;
    json meta;
    std::optional<Owner> owner;

    fs::path meta_path() const { return dir / "meta.json"; }
    fs::path owner_path() const { return dir / "owner.bin"; }
    fs::path server_path() const { return dir / "server.bin"; }
    fs::path user_path(const std::string& name) const { return dir / "users" / (name + ".json"); }

    bool exists() const { return fs::exists(meta_path()); }

    void load() {
        if (!exists()) throw UsageError("no state in " + dir.string() + "; run gen-keys first");
        meta = read_json(meta_path());
        owner = Owner::restore(read_file(owner_path()));
    }

    void save_owner() {
        write_file(owner_path(), owner->snapshot());
        write_json(meta_path(), meta);
    }

    void save_user(const UserCredentials& c) {
        fs::create_directories(dir / "users");
        write_json(user_path(c.name), creds_to_json(c));
    }

    UserCredentials load_user(const std::string& name) const { return creds_from_json(read_json(user_path(name))); }

    std::uint64_t clock() const { return meta.at("last_time").get<std::uint64_t>(); }
    std::uint64_t window() const { return meta.at("window").get<std::uint64_t>(); }
};

/// Server reached either in-process (state loaded from server.bin, saved back
/// afterwards) or over TCP at --connect.
class Backend {
public:
    Backend(State& state, const std::string& connect) : state_(state) {
        if (connect.empty()) {
            endpoint_.emplace(Server::restore(read_file(state.server_path())));
            transport_ = std::make_unique<InProcessTransport>(*endpoint_);
        } else {
            const auto [host, port] = parse_endpoint(connect);
            transport_ = std::make_unique<TcpTransport>(host, port);
        }
        client_ = std::make_unique<ServerClient>(*transport_);
    }

    ServerClient& client() { return *client_; }

    void save() {
        if (endpoint_) write_file(state_.server_path(), endpoint_->with_server([](Server& s) { return s.snapshot(); }));
    }

private:
    State& state_;
    std::optional<ServerEndpoint> endpoint_;
    std::unique_ptr<Transport> transport_;
    std::unique_ptr<ServerClient> client_;
};

ServerConfig server_config(const Owner& owner) {
    ServerConfig sc;
    sc.mode = owner.mode();
    sc.bloom = owner.config().bloom;
    sc.group = owner.keys().group;
    return sc;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

void gen_keys(State& st, Mode mode, double fp, std::uint64_t capacity, std::uint64_t refresh_every,
              std::uint64_t window, const std::vector<std::string>& users, bool force) {
    if (st.exists() && !force) throw UsageError("state already exists in " + st.dir.string() + " (use --force)");
    fs::create_directories(st.dir);
    if (force) fs::remove_all(st.dir / "users");
    OwnerConfig oc;
    oc.mode = mode;
    oc.bloom.target_fp = fp;
    oc.bloom.capacity = capacity ? capacity : harness::default_bloom_capacity(refresh_every ? refresh_every
                                                                                            : harness::kDefaultRefreshEvery);
    oc.bloom.bit_count();  // validates
    st.owner = Owner::generate(oc);
    st.meta = {{"mode", mode_name(mode)},
               {"files", 0},
               {"next_time", harness::kDefaultStartTime},
               {"last_time", harness::kDefaultStartTime},
               {"refresh_every", refresh_every},
               {"window", window}};
    Server server(server_config(*st.owner));
    if (mode == Mode::full) server.refresh(st.owner->signed_bloom(harness::kDefaultStartTime));
    write_file(st.server_path(), server.snapshot());
    for (const auto& u : users) {
        if (mode != Mode::full) throw UsageError("authorized users need full mode");
        st.save_user(st.owner->enroll_user(u));
    }
    st.save_owner();
    std::cout << "generated " << mode_name(mode) << "-mode keys in " << st.dir.string() << "\n"
              << "  bloom filter  m=" << oc.bloom.bit_count() << " bits  k=" << oc.bloom.hash_count() << "\n";
    for (const auto& u : users) std::cout << "  user " << u << " -> " << st.user_path(u).string() << "\n";
}

void ingest(State& st, const std::string& connect, std::uint64_t n, std::uint64_t seed) {
    Backend backend(st, connect);
    const std::uint64_t refresh_every = st.meta.at("refresh_every");
    std::uint64_t files = st.meta.at("files");
    harness::PhiStream stream(seed, harness::kDefaultPeriod, st.meta.at("next_time").get<std::uint64_t>());
    std::uint64_t refreshes = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const harness::PhiFile f = stream.next();
        const auto keywords = f.keywords();
        backend.client().add(st.owner->add_file(f.render(), keywords, f.timestamp));
        ++files;
        st.meta["last_time"] = f.timestamp;
        st.meta["next_time"] = f.timestamp + harness::kDefaultPeriod;
        if (st.owner->mode() == Mode::full && refresh_every && files % refresh_every == 0) {
            backend.client().refresh(st.owner->refresh_bloom(f.timestamp));
            ++refreshes;
        }
    }
    st.meta["files"] = files;
    backend.save();
    st.save_owner();
    std::cout << "ingested " << n << " files (total " << files << ", " << st.owner->table().size()
              << " keywords, " << refreshes << " filter refreshes)\n";
}

struct LastSearch {
    std::string keyword;
    std::string as;
    std::string user;
    std::uint64_t counter = 0;
    SearchResult result;
};

int search(State& st, const std::string& connect, const std::string& keyword, const std::string& as,
           const std::string& user, std::optional<std::uint64_t> now_flag, bool decrypt) {
    Backend backend(st, connect);
    const std::uint64_t now = now_flag.value_or(st.clock());
    LastSearch last{keyword, as, user, 0, {}};
    std::optional<UserCredentials> creds;
    bool retried = false;
    if (as == "owner") {
        const auto row = st.owner->lookup(keyword);
        if (!row) throw NotFoundError("keyword not found: " + keyword);
        last.counter = row->cnt;
        last.result = backend.client().search(st.owner->gen_token(keyword));
    } else {
        if (user.empty()) throw UsageError("--as user needs --user");
        creds = st.load_user(user);
        const SignedBloom bloom = backend.client().get_bloom();
        GuessStats stats;
        const UserToken tok = gen_token_user(*creds, bloom, keyword, now, st.window(), &stats);
        last.counter = tok.counter;
        std::cout << "guessed counter " << tok.counter << " with " << stats.probes << " filter probes"
                  << (stats.embedded ? " (embedded " + std::to_string(*stats.embedded) + ")" : std::string()) << "\n";
        try {
            last.result = backend.client().search(tok.token);
        } catch (const NotFoundError&) {
            if (tok.counter <= 1) throw;
            last.counter = tok.counter - 1;
            retried = true;
            last.result = backend.client().search(token_for_counter(*creds, keyword, last.counter).token);
        }
    }
    backend.save();

    write_json(st.dir / "last_search.json",
               {{"keyword", keyword}, {"as", as}, {"user", user}, {"counter", last.counter}, {"now", now}});
    write_file(st.dir / "last_search.bin", wire::encode(last.result));

    std::cout << "search " << keyword << " as " << as << (user.empty() ? "" : " (" + user + ")") << ": "
              << last.result.ids.size() << " files, counter " << last.counter << ", " << last.result.lookups
              << " lookups" << (retried ? ", retried with counter-1" : "") << "\n";
    std::vector<Bytes> plain;
    if (decrypt) {
        const UserCredentials dc =
            creds ? *creds : UserCredentials{"owner", st.owner->keys().k_prf, st.owner->keys().k_se,
                                             st.owner->keys().k_mac, st.owner->keys().group};
        plain = user_decrypt(dc, last.result.ciphertexts);
    }
    for (std::size_t i = 0; i < last.result.ids.size(); ++i) {
        std::cout << "  " << to_hex(last.result.ids[i]) << "\n";
        if (decrypt) {
            std::string doc(plain[i].begin(), plain[i].end());
            std::istringstream lines(doc);
            for (std::string line; std::getline(lines, line);) std::cout << "      " << line << "\n";
        }
    }
    return kOk;
}

int verify(State& st, std::optional<std::uint64_t> now_flag, std::optional<std::uint64_t> window_flag) {
    const json meta = read_json(st.dir / "last_search.json");
    const auto msg = wire::decode(read_file(st.dir / "last_search.bin"));
    const auto* result = std::get_if<SearchResult>(&msg);
    if (!result) throw FormatError("last_search.bin does not hold a search result", 0);
    const std::string keyword = meta.at("keyword");
    const std::uint64_t cnt = meta.at("counter");
    const std::uint64_t now = now_flag.value_or(meta.at("now").get<std::uint64_t>());
    const std::uint64_t window = window_flag.value_or(st.window());

    VerifyReport report;
    if (st.owner->mode() == Mode::basic) {
        report = {result->ids.size() == cnt, true, true, true};
        std::cout << "basic mode: only the result size can be checked\n";
    } else {
        if (!result->proof) throw FormatError("full-mode result without a proof", 0);
        const Block k_mac = meta.at("as") == "owner" ? st.owner->keys().k_mac
                                                     : st.load_user(meta.at("user")).k_mac;
        report = sse_verify_report(k_mac, keyword, cnt, result->ids, result->ciphertexts, *result->proof, now,
                                   {window, true});
    }
    const auto line = [](std::string_view name, bool ok) {
        std::cout << "  " << std::left << std::setw(14) << name << (ok ? "ok" : "FAILED") << "\n";
    };
    std::cout << "verify " << keyword << " (" << result->ids.size() << " files, counter " << cnt << ")\n";
    line("cardinality", report.cardinality);
    line("aggregate MAC", report.aggregate);
    line("filter MAC", report.bloom_mac);
    line("freshness", report.fresh);
    std::cout << "result: " << (report.ok() ? "VERIFIED" : "REJECTED") << "\n";
    return report.ok() ? kOk : kRejected;
}

void rotate(State& st, const std::string& connect, const std::string& revoked) {
    if (st.owner->mode() != Mode::full) throw UsageError("group keys exist in full mode only");
    Backend backend(st, connect);
    const GroupKey group = st.owner->rotate_group_key(revoked);
    backend.client().rotate(group);
    backend.save();
    for (const auto& name : st.owner->active_users()) st.save_user(st.owner->enroll_user(name));
    st.save_owner();
    std::cout << "group key rotated to epoch " << group.epoch << "; revoked " << revoked << "\n";
    for (const auto& name : st.owner->active_users()) std::cout << "  re-keyed " << name << "\n";
}

void enroll(State& st, const std::string& name) {
    if (st.owner->mode() != Mode::full) throw UsageError("authorized users need full mode");
    st.save_user(st.owner->enroll_user(name));
    st.save_owner();
    std::cout << "enrolled " << name << " -> " << st.user_path(name).string() << "\n";
}

void serve(State& st, const std::string& listen) {
    const auto [host, port] = parse_endpoint(listen);
    ServerEndpoint endpoint(Server::restore(read_file(st.server_path())));

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    TcpListener listener(endpoint, host, port);
    listener.start();
    std::cout << "serving on " << host << ":" << listener.port() << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    listener.stop();
    write_file(st.server_path(), endpoint.with_server([](Server& s) { return s.snapshot(); }));
    std::cout << "server state saved to " << st.server_path().string() << "\n";
}

std::ofstream open_records(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw UsageError("cannot write records to " + path);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Forward-private verifiable searchable encryption simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string state_dir = "dsse-state";
    std::string connect;
    std::string isa;
    app.add_option("--state", state_dir, "State directory")->capture_default_str();
    app.add_option("--connect", connect, "Talk to a `dsse serve` instance at [host:]port instead of server.bin");
    app.add_option("--isa", isa, "Force a kernel variant: scalar, sse2, avx2");

    std::string mode_s = "full";
    double fp = 0x1p-30;
    std::uint64_t capacity = 0, refresh_every = harness::kDefaultRefreshEvery, window = 2 * harness::kDefaultPeriod;
    std::string users_csv;
    bool force = false;
    auto* gen = app.add_subcommand("gen-keys", "Create owner keys and an empty server");
    gen->add_option("--mode", mode_s, "basic or full")->capture_default_str();
    gen->add_option("--fp", fp, "Bloom filter false-positive target");
    gen->add_option("--capacity", capacity, "Bloom filter capacity (0: one year of uploads)");
    gen->add_option("--refresh-every", refresh_every, "Files between filter refreshes (0: never)")->capture_default_str();
    gen->add_option("--window", window, "Freshness window in seconds")->capture_default_str();
    gen->add_option("--users", users_csv, "Comma-separated users to enroll");
    gen->add_flag("--force", force, "Overwrite existing state");

    std::uint64_t n = 10'000, seed = 1;
    std::string ingest_mode;
    auto* ing = app.add_subcommand("ingest", "Synthesize PHI files and upload them");
    ing->add_option("--n", n, "Number of files")->capture_default_str();
    ing->add_option("--seed", seed, "Stream seed")->capture_default_str();
    ing->add_option("--mode", ingest_mode, "basic or full; creates the state when missing");

    std::string keyword, as = "owner", user;
    std::optional<std::uint64_t> now_flag, window_flag;
    bool decrypt = false;
    auto* srch = app.add_subcommand("search", "Search for one keyword");
    srch->add_option("--keyword", keyword, "Keyword, e.g. heartbeat:75")->required();
    srch->add_option("--as", as, "owner or user")->check(CLI::IsMember({"owner", "user"}))->capture_default_str();
    srch->add_option("--user", user, "User name for --as user");
    srch->add_option("--now", now_flag, "Current time (default: the simulated clock)");
    srch->add_flag("--decrypt", decrypt, "Print decrypted files");

    auto* ver = app.add_subcommand("verify", "Verify the last search result");
    ver->add_option("--now", now_flag, "Current time (default: the time of the search)");
    ver->add_option("--window", window_flag, "Freshness window in seconds");

    std::string revoked;
    auto* rot = app.add_subcommand("rotate", "Rotate the group key");
    rot->add_option("--revoke", revoked, "User to revoke")->required();

    std::string enroll_name;
    auto* enr = app.add_subcommand("enroll", "Enroll an authorized user");
    enr->add_option("--user", enroll_name, "User name")->required();

    std::string listen = "127.0.0.1:7070";
    auto* srv = app.add_subcommand("serve", "Serve server.bin over TCP until SIGINT/SIGTERM");
    srv->add_option("--listen", listen, "[host:]port")->capture_default_str();

    harness::BenchConfig bc;
    std::string records;
    auto* bench = app.add_subcommand("bench", "Timing and size table against reference figures");
    bench->add_option("--n", bc.n_files, "Background files")->capture_default_str();
    bench->add_option("--reps", bc.repetitions, "New/recurring search pairs")->capture_default_str();
    bench->add_option("--seed", bc.seed, "Stream seed")->capture_default_str();
    bench->add_option("--capacity", bc.bloom_capacity, "Bloom filter capacity (0: one year of uploads)");
    bench->add_option("--records", records, "Write line-delimited JSON records to this file");

    harness::ScenarioConfig scfg;
    scfg.n_files = 5'000;
    std::string adversary = "honest", role = "user", recurring_csv;
    bool tcp = false;
    auto* scen = app.add_subcommand("scenario", "End-to-end run against the plaintext oracle");
    scen->add_option("--adversary", adversary, "honest, drop_result, swap_keyword, stale_bloom, flip_bloom_bit, forge_gamma")
        ->capture_default_str();
    scen->add_option("--mode", mode_s, "basic or full")->capture_default_str();
    scen->add_option("--n", scfg.n_files, "Files")->capture_default_str();
    scen->add_option("--queries", scfg.queries, "Queries")->capture_default_str();
    scen->add_option("--rounds", scfg.rounds, "Ingest/query rounds")->capture_default_str();
    scen->add_option("--seed", scfg.seed, "Seed")->capture_default_str();
    scen->add_option("--as", role, "owner or user")->check(CLI::IsMember({"owner", "user"}))->capture_default_str();
    scen->add_option("--threads", scfg.threads, "Concurrent query threads")->capture_default_str();
    scen->add_option("--recurring", recurring_csv, "Comma-separated file counts for the recurring-keyword plan");
    scen->add_option("--capacity", scfg.sim.bloom_capacity, "Bloom filter capacity (0: sized to the run)");
    scen->add_flag("--tcp", tcp, "Route traffic through a loopback TCP listener");
    scen->add_option("--records", records, "Write line-delimited JSON records to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (!isa.empty()) {
            bool found = false;
            for (kernels::Isa i : {kernels::Isa::scalar, kernels::Isa::sse2, kernels::Isa::avx2})
                if (kernels::isa_name(i) == isa) kernels::set_active_isa(i), found = true;
            if (!found) throw UsageError("unknown --isa " + isa);
        }
        State st{fs::path(state_dir), {}, {}};

        if (*gen) {
            gen_keys(st, parse_mode(mode_s), fp, capacity, refresh_every, window, split_csv(users_csv), force);
        } else if (*ing) {
            if (!st.exists()) {
                gen_keys(st, parse_mode(ingest_mode.empty() ? "full" : ingest_mode), fp, capacity, refresh_every,
                         window, {}, false);
            }
            st.load();
            if (!ingest_mode.empty() && parse_mode(ingest_mode) != st.owner->mode())
                throw UsageError("state was created in " + std::string(mode_name(st.owner->mode())) + " mode");
            ingest(st, connect, n, seed);
        } else if (*srch) {
            st.load();
            return search(st, connect, keyword, as, user, now_flag, decrypt);
        } else if (*ver) {
            st.load();
            return verify(st, now_flag, window_flag);
        } else if (*rot) {
            st.load();
            rotate(st, connect, revoked);
        } else if (*enr) {
            st.load();
            enroll(st, enroll_name);
        } else if (*srv) {
            st.load();
            serve(st, listen);
        } else if (*bench) {
            const auto report = harness::run_bench(bc);
            harness::print_bench(std::cout, report);
            if (!records.empty()) {
                auto out = open_records(records);
                harness::write_bench_records(out, report);
            }
            return report.laws_hold() ? kOk : kRejected;
        } else if (*scen) {
            scfg.mode = parse_mode(mode_s);
            scfg.adversary = parse_adversary(adversary);
            scfg.role = role == "owner" ? harness::QueryRole::owner : harness::QueryRole::user;
            if (scfg.mode == Mode::basic && role == "user" && !scen->count("--as")) scfg.role = harness::QueryRole::owner;
            for (const auto& d : split_csv(recurring_csv)) scfg.recurring_adds.push_back(std::stoull(d));
            scfg.sim.loopback_tcp = tcp;
            if (!scfg.sim.bloom_capacity)
                scfg.sim.bloom_capacity = std::max<std::uint64_t>(
                    (scfg.n_files + 1000) * harness::kAttributesPerFile + harness::keyword_universe() * 6, 1000);
            const auto report = harness::run_scenario(scfg);
            harness::print_report(std::cout, report);
            if (!records.empty()) {
                auto out = open_records(records);
                harness::write_records(out, report);
            }
            return report.passed() ? kOk : kRejected;
        }
    } catch (const StaleEpochError& e) {
        std::cerr << "rejected: " << e.what() << "\n";
        return kRejected;
    } catch (const TamperedFilterError& e) {
        std::cerr << "rejected: " << e.what() << "\n";
        return kRejected;
    } catch (const StaleFilterError& e) {
        std::cerr << "rejected: " << e.what() << "\n";
        return kRejected;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kOk;
}
