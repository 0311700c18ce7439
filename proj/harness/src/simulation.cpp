#include "dsse/harness/simulation.hpp"

#include "dsse/errors.hpp"

namespace dsse::harness {

std::uint64_t default_bloom_capacity(std::uint64_t files_per_period) {
    return files_per_period * kAttributesPerFile + keyword_universe() * 6;
}

std::string_view stage_name(QueryOutcome::Stage s) {
    switch (s) {
        case QueryOutcome::Stage::accepted:
            return "accepted";
        case QueryOutcome::Stage::not_found:
            return "not_found";
        case QueryOutcome::Stage::token_rejected:
            return "token_rejected";
        case QueryOutcome::Stage::stale_epoch:
            return "stale_epoch";
        case QueryOutcome::Stage::search_fault:
            return "search_fault";
        case QueryOutcome::Stage::verify_failed:
            return "verify_failed";
    }
    return "unknown";
}

namespace {

OwnerConfig owner_config(const SimulationConfig& c) {
    OwnerConfig oc;
    oc.mode = c.mode;
    oc.bloom.target_fp = c.target_fp;
    oc.bloom.capacity = c.bloom_capacity ? c.bloom_capacity
                                         : default_bloom_capacity(c.refresh_every ? c.refresh_every
                                                                                  : kDefaultRefreshEvery);
    return oc;
}

}  // namespace

Simulation::Simulation(const SimulationConfig& config, std::uint64_t now)
    : config_(config), owner_(Owner::generate(owner_config(config))), last_time_(now) {
    ServerConfig sc;
    sc.mode = config.mode;
    sc.bloom = owner_.config().bloom;
    sc.group = owner_.keys().group;
    sc.prune_on_merge = config.prune_on_merge;
    sc.history_stride = config.history_stride;
    sc.history_depth = config.history_depth;
    endpoint_ = std::make_unique<ServerEndpoint>(Server(sc));
    if (config.loopback_tcp) {
        listener_ = std::make_unique<TcpListener>(*endpoint_, "127.0.0.1", 0);
        listener_->start();
    }
    Connection c = connect();
    transport_ = std::move(c.transport);
    client_ = std::move(c.client);
    // The server starts from the owner's (empty) signed filter.
    if (config.mode == Mode::full) client_->refresh(owner_.signed_bloom(now));
}

Connection Simulation::connect() {
    Connection c;
    if (listener_)
        c.transport = std::make_unique<TcpTransport>("127.0.0.1", listener_->port());
    else
        c.transport = std::make_unique<InProcessTransport>(*endpoint_);
    c.client = std::make_unique<ServerClient>(*c.transport);
    return c;
}

Simulation::~Simulation() {
    transport_.reset();
    if (listener_) listener_->stop();
}

FileId Simulation::upload(const PhiFile& file) { return upload(file.render(), file.keywords(), file.timestamp); }

FileId Simulation::upload(ByteView document, const std::vector<std::string>& keywords, std::uint64_t now) {
    AddPayload payload = owner_.add_file(document, keywords, now);
    if (config_.record_labels)
        for (const auto& e : payload.entries) labels_.push_back(e.tau);
    client_->add(payload);
    oracle_.add(payload.file_id, keywords);
    ++files_;
    last_time_ = now;
    if (config_.mode == Mode::full && config_.refresh_every && files_ % config_.refresh_every == 0) refresh(now);
    return payload.file_id;
}

void Simulation::refresh(std::uint64_t now) {
    client_->refresh(owner_.refresh_bloom(now));
    last_time_ = std::max(last_time_, now);
}

UserCredentials Simulation::enroll(const std::string& name) { return owner_.enroll_user(name); }

std::map<std::string, UserCredentials> Simulation::revoke(const std::string& revoked) {
    const GroupKey group = owner_.rotate_group_key(revoked);
    client_->rotate(group);
    std::map<std::string, UserCredentials> creds;
    for (const auto& name : owner_.active_users()) creds.emplace(name, owner_.enroll_user(name));
    return creds;
}

void Simulation::set_adversary(Adversary a) {
    endpoint_->with_server([a](Server& s) { s.set_adversary(a); });
}

QueryOutcome Simulation::owner_query(const std::string& keyword, std::uint64_t now, ServerClient* via) {
    ServerClient& client = via ? *via : *client_;
    QueryOutcome out;
    auto row = owner_.lookup(keyword);
    if (!row) {
        out.stage = QueryOutcome::Stage::not_found;
        out.detail = "owner has no counter for keyword";
        return out;
    }
    out.counter = row->cnt;
    SearchResult result;
    try {
        result = client.search(owner_.gen_token(keyword));
    } catch (const StaleEpochError& e) {
        out.stage = QueryOutcome::Stage::stale_epoch;
        out.detail = e.what();
        return out;
    } catch (const Error& e) {
        out.stage = QueryOutcome::Stage::search_fault;
        out.detail = e.what();
        return out;
    }
    out.ids = std::move(result.ids);
    out.ciphertexts = std::move(result.ciphertexts);
    out.lookups = result.lookups;
    out.proof = result.proof;
    if (owner_.mode() == Mode::full) {
        if (!out.proof) {
            out.stage = QueryOutcome::Stage::verify_failed;
            out.detail = "missing proof";
            return out;
        }
        out.report = sse_verify_report(owner_.keys().k_mac, keyword, out.counter, out.ids, out.ciphertexts,
                                       *out.proof, now, {config_.freshness_window, true});
    } else {
        // Basic mode carries no proof; the owner can only check cardinality.
        out.report = {out.ids.size() == out.counter, true, true, true};
    }
    out.stage = out.report.ok() ? QueryOutcome::Stage::accepted : QueryOutcome::Stage::verify_failed;
    return out;
}

QueryOutcome Simulation::search_and_verify(ServerClient& client, const UserCredentials& creds, const std::string& keyword,
                                           std::uint64_t cnt, std::uint64_t now, QueryOutcome out) {
    for (int attempt = 0;; ++attempt) {
        out.counter = cnt;
        SearchResult result;
        try {
            result = client.search(token_for_counter(creds, keyword, cnt).token);
        } catch (const StaleEpochError& e) {
            out.stage = QueryOutcome::Stage::stale_epoch;
            out.detail = e.what();
            return out;
        } catch (const NotFoundError& e) {
            // A false positive at cnt+1 makes the guess overshoot by one; the
            // server has no entry for that label. Retry once with cnt-1.
            if (attempt == 0 && cnt > 1) {
                --cnt;
                out.retried = true;
                continue;
            }
            out.stage = QueryOutcome::Stage::search_fault;
            out.detail = e.what();
            return out;
        } catch (const Error& e) {
            out.stage = QueryOutcome::Stage::search_fault;
            out.detail = e.what();
            return out;
        }
        out.ids = std::move(result.ids);
        out.ciphertexts = std::move(result.ciphertexts);
        out.lookups = result.lookups;
        out.proof = result.proof;
        if (!out.proof) {
            out.stage = QueryOutcome::Stage::verify_failed;
            out.detail = "missing proof";
            return out;
        }
        out.report = sse_verify_report(creds.k_mac, keyword, cnt, out.ids, out.ciphertexts, *out.proof, now,
                                       {config_.freshness_window, true});
        out.stage = user_verify(creds, keyword, cnt, out.ids, out.ciphertexts, *out.proof, now,
                                config_.freshness_window)
                        ? QueryOutcome::Stage::accepted
                        : QueryOutcome::Stage::verify_failed;
        return out;
    }
}

QueryOutcome Simulation::user_query(const UserCredentials& creds, const std::string& keyword, std::uint64_t now,
                                    ServerClient* via) {
    ServerClient& client = via ? *via : *client_;
    if (config_.mode != Mode::full) throw UsageError("user_query: authorized users need full mode");
    QueryOutcome out;
    UserToken token;
    try {
        const SignedBloom bloom = client.get_bloom();
        token = gen_token_user(creds, bloom, keyword, now, config_.freshness_window, &out.guess);
    } catch (const TamperedFilterError& e) {
        out.stage = QueryOutcome::Stage::token_rejected;
        out.detail = e.what();
        return out;
    } catch (const StaleFilterError& e) {
        out.stage = QueryOutcome::Stage::token_rejected;
        out.detail = e.what();
        return out;
    } catch (const NotFoundError& e) {
        out.stage = QueryOutcome::Stage::not_found;
        out.detail = e.what();
        return out;
    }
    return search_and_verify(client, creds, keyword, token.counter, now, std::move(out));
}

QueryOutcome Simulation::assisted_user_query(const UserCredentials& creds, const std::string& keyword,
                                             std::uint64_t now, ServerClient* via) {
    ServerClient& client = via ? *via : *client_;
    if (config_.mode != Mode::full) throw UsageError("assisted_user_query: authorized users need full mode");
    auto row = owner_.lookup(keyword);
    if (!row) {
        QueryOutcome out;
        out.stage = QueryOutcome::Stage::not_found;
        return out;
    }
    return search_and_verify(client, creds, keyword, row->cnt, now, {});
}

}  // namespace dsse::harness
